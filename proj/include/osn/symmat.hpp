#pragma once

#include <cstddef>
#include <vector>

#include "osn/vec.hpp"

namespace osn {

// Dense symmetric matrix in packed lower-triangular storage: entry (i, j) and
// (j, i) share one slot, so symmetry is exact by construction and never drifts
// under accumulation. Row-major lower triangle: slot(i, j) = i*(i+1)/2 + j for
// i >= j.
class SymMat {
 public:
  SymMat() = default;
  explicit SymMat(int dim) : dim_(dim), a_(static_cast<std::size_t>(dim) * (dim + 1) / 2, 0.0) {}

  static SymMat identity(int dim) {
    SymMat m(dim);
    for (int i = 0; i < dim; ++i) m.at(i, i) = 1.0;
    return m;
  }

  int dim() const { return dim_; }

  double at(int i, int j) const { return a_[slot(i, j)]; }
  double& at(int i, int j) { return a_[slot(i, j)]; }

  const std::vector<double>& packed() const { return a_; }
  std::vector<double>& packed() { return a_; }

  void add_to_diagonal(double c) {
    for (int i = 0; i < dim_; ++i) at(i, i) += c;
  }

  void scale(double c) {
    for (double& v : a_) v *= c;
  }

  bool has_non_finite() const {
    for (double v : a_)
      if (!std::isfinite(v)) return true;
    return false;
  }

 private:
  static std::size_t slot(int i, int j) {
    if (i < j) std::swap(i, j);
    return static_cast<std::size_t>(i) * (i + 1) / 2 + j;
  }

  int dim_ = 0;
  std::vector<double> a_;
};

// out = M * v
void mat_vec(const SymMat& m, const Vec& v, Vec& out);
Vec mat_vec(const SymMat& m, const Vec& v);

// u v^T + v u^T as a symmetric matrix.
SymMat sym_rank2(const Vec& u, const Vec& v);

// m += c * (u v^T + v u^T), without materializing the rank-2 term.
void add_sym_rank2(SymMat& m, double c, const Vec& u, const Vec& v);

// m += c * (u u^T)
void add_sym_rank1(SymMat& m, double c, const Vec& u);

// m += c * other
void add_scaled(SymMat& m, double c, const SymMat& other);

double frobenius_norm(const SymMat& m);

// avg = (1 - alpha) * avg + alpha * value, elementwise on shared storage.
void blend(SymMat& avg, const SymMat& value, double alpha);

// Dense lower-triangular factor, row-major dim x dim with zeros above the
// diagonal. Produced by cholesky(), consumed by the correlated samplers.
struct LowerTri {
  int dim = 0;
  std::vector<double> a;  // row-major, upper part zero

  double at(int i, int j) const { return a[static_cast<std::size_t>(i) * dim + j]; }
  double& at(int i, int j) { return a[static_cast<std::size_t>(i) * dim + j]; }
};

// out = L * v
void mat_vec(const LowerTri& l, const Vec& v, Vec& out);

// Cholesky factorization M = L L^T. Throws a numeric error naming the first
// non-positive pivot when M is not positive definite.
LowerTri cholesky(const SymMat& m);

// Smallest eigenvalue via cyclic Jacobi sweeps (absolute off-diagonal
// tolerance 1e-8, iteration cap 10^4 sweeps).
double min_eigenvalue(const SymMat& m);

// Inverse via Gauss-Jordan elimination with partial pivoting. Throws a numeric
// error on a singular pivot. The result is re-symmetrized into packed storage.
SymMat invert(const SymMat& m);

}  // namespace osn

#include "osn/symmat.hpp"

#include <cmath>
#include <cstdlib>
#include <string>

#include "osn/error.hpp"

namespace osn {

void mat_vec(const SymMat& m, const Vec& v, Vec& out) {
  const int d = m.dim();
  out.assign(static_cast<std::size_t>(d), 0.0);
  // One pass over the stored triangle; each off-diagonal slot contributes to
  // two output rows.
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < i; ++j) {
      const double a = m.at(i, j);
      out[i] += a * v[j];
      out[j] += a * v[i];
    }
    out[i] += m.at(i, i) * v[i];
  }
}

Vec mat_vec(const SymMat& m, const Vec& v) {
  Vec out;
  mat_vec(m, v, out);
  return out;
}

SymMat sym_rank2(const Vec& u, const Vec& v) {
  SymMat m(static_cast<int>(u.size()));
  add_sym_rank2(m, 1.0, u, v);
  return m;
}

void add_sym_rank2(SymMat& m, double c, const Vec& u, const Vec& v) {
  const int d = m.dim();
  for (int i = 0; i < d; ++i)
    for (int j = 0; j <= i; ++j) m.at(i, j) += c * (u[i] * v[j] + v[i] * u[j]);
}

void add_sym_rank1(SymMat& m, double c, const Vec& u) {
  const int d = m.dim();
  for (int i = 0; i < d; ++i)
    for (int j = 0; j <= i; ++j) m.at(i, j) += c * u[i] * u[j];
}

void add_scaled(SymMat& m, double c, const SymMat& other) {
  auto& a = m.packed();
  const auto& b = other.packed();
  for (std::size_t k = 0; k < a.size(); ++k) a[k] += c * b[k];
}

double frobenius_norm(const SymMat& m) {
  const int d = m.dim();
  double s = 0.0;
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < i; ++j) {
      const double a = m.at(i, j);
      s += 2.0 * a * a;  // each off-diagonal slot stands for two entries
    }
    const double a = m.at(i, i);
    s += a * a;
  }
  return std::sqrt(s);
}

void blend(SymMat& avg, const SymMat& value, double alpha) {
  auto& a = avg.packed();
  const auto& b = value.packed();
  for (std::size_t k = 0; k < a.size(); ++k) a[k] = (1.0 - alpha) * a[k] + alpha * b[k];
}

void mat_vec(const LowerTri& l, const Vec& v, Vec& out) {
  const int d = l.dim;
  out.assign(static_cast<std::size_t>(d), 0.0);
  for (int i = 0; i < d; ++i) {
    double s = 0.0;
    for (int j = 0; j <= i; ++j) s += l.at(i, j) * v[j];
    out[i] = s;
  }
}

LowerTri cholesky(const SymMat& m) {
  const int d = m.dim();
  LowerTri l;
  l.dim = d;
  l.a.assign(static_cast<std::size_t>(d) * d, 0.0);
  for (int j = 0; j < d; ++j) {
    double diag = m.at(j, j);
    for (int k = 0; k < j; ++k) diag -= l.at(j, k) * l.at(j, k);
    if (!(diag > 0.0)) {
      throw numeric_error("cholesky: matrix is not positive definite (pivot " +
                          std::to_string(j) + " = " + std::to_string(diag) + ")");
    }
    const double ljj = std::sqrt(diag);
    l.at(j, j) = ljj;
    for (int i = j + 1; i < d; ++i) {
      double s = m.at(i, j);
      for (int k = 0; k < j; ++k) s -= l.at(i, k) * l.at(j, k);
      l.at(i, j) = s / ljj;
    }
  }
  return l;
}

namespace {

double off_diagonal_norm(const std::vector<double>& a, int d) {
  double s = 0.0;
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      const double v = a[static_cast<std::size_t>(i) * d + j];
      s += 2.0 * v * v;
    }
  return std::sqrt(s);
}

}  // namespace

double min_eigenvalue(const SymMat& m) {
  const int d = m.dim();
  if (d == 0) throw config_error("min_eigenvalue: empty matrix");
  if (d == 1) return m.at(0, 0);

  // Dense working copy; Jacobi rotations zero out the largest off-diagonal
  // entries until the matrix is numerically diagonal.
  std::vector<double> a(static_cast<std::size_t>(d) * d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a[static_cast<std::size_t>(i) * d + j] = m.at(i, j);

  auto idx = [d](int i, int j) { return static_cast<std::size_t>(i) * d + j; };

  constexpr double kTol = 1e-8;
  constexpr int kMaxSweeps = 10000;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    if (off_diagonal_norm(a, d) <= kTol) break;
    for (int p = 0; p < d - 1; ++p) {
      for (int q = p + 1; q < d; ++q) {
        const double apq = a[idx(p, q)];
        if (std::abs(apq) < 1e-300) continue;
        const double app = a[idx(p, p)];
        const double aqq = a[idx(q, q)];
        const double theta = (aqq - app) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < d; ++k) {
          const double akp = a[idx(k, p)];
          const double akq = a[idx(k, q)];
          a[idx(k, p)] = c * akp - s * akq;
          a[idx(k, q)] = s * akp + c * akq;
        }
        for (int k = 0; k < d; ++k) {
          const double apk = a[idx(p, k)];
          const double aqk = a[idx(q, k)];
          a[idx(p, k)] = c * apk - s * aqk;
          a[idx(q, k)] = s * apk + c * aqk;
        }
      }
    }
  }

  double mn = a[0];
  for (int i = 1; i < d; ++i) mn = std::min(mn, a[idx(i, i)]);
  return mn;
}

SymMat invert(const SymMat& m) {
  const int d = m.dim();
  // Augmented [M | I] Gauss-Jordan with partial pivoting.
  std::vector<double> a(static_cast<std::size_t>(d) * 2 * d, 0.0);
  auto idx = [d](int i, int j) { return static_cast<std::size_t>(i) * 2 * d + j; };
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) a[idx(i, j)] = m.at(i, j);
    a[idx(i, d + i)] = 1.0;
  }
  for (int col = 0; col < d; ++col) {
    int piv = col;
    for (int r = col + 1; r < d; ++r)
      if (std::abs(a[idx(r, col)]) > std::abs(a[idx(piv, col)])) piv = r;
    if (std::abs(a[idx(piv, col)]) < 1e-300) {
      throw numeric_error("invert: singular matrix (pivot column " + std::to_string(col) + ")");
    }
    if (piv != col)
      for (int j = 0; j < 2 * d; ++j) std::swap(a[idx(piv, j)], a[idx(col, j)]);
    const double inv_p = 1.0 / a[idx(col, col)];
    for (int j = 0; j < 2 * d; ++j) a[idx(col, j)] *= inv_p;
    for (int r = 0; r < d; ++r) {
      if (r == col) continue;
      const double f = a[idx(r, col)];
      if (f == 0.0) continue;
      for (int j = 0; j < 2 * d; ++j) a[idx(r, j)] -= f * a[idx(col, j)];
    }
  }
  SymMat out(d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j <= i; ++j) out.at(i, j) = 0.5 * (a[idx(i, d + j)] + a[idx(j, d + i)]);
  return out;
}

}  // namespace osn

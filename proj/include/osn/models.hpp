#pragma once

#include <memory>

#include "osn/model.hpp"

namespace osn {

// Overflow-safe logistic function.
double sigmoid(double t);

// Binary logistic regression with an intercept: the regressor is
// phi = (1, x) in R^dim for features x in R^(dim-1), labels y in {0, 1}.
// Loss gradient -(y - sigmoid(phi.h)) phi; Hessian a phi phi^T with
// a = sigmoid (1 - sigmoid); Riccati factor sqrt(a) phi.
class LogisticModel : public Model {
 public:
  explicit LogisticModel(int param_dim);

  std::string name() const override { return "logistic"; }
  int param_dim() const override { return dim_; }
  int feature_dim() const override { return dim_ - 1; }
  bool gradient(const Sample& s, const Vec& h, Vec& out) const override;
  bool hessian_vec(const Sample& s, const Vec& h, const Vec& z, Vec& out) const override;
  bool has_full_hessian() const override { return true; }
  bool full_hessian(const Sample& s, const Vec& h, SymMat& out) const override;
  bool has_riccati_factor() const override { return true; }
  bool riccati_factor(const Sample& s, const Vec& h, std::int64_t n, RngStream& rng,
                      Vec& out) const override;

 private:
  int dim_;
};

// Least-squares regression, loss (y - x.h)^2 / 2. The per-sample Hessian is
// x x^T, which doubles as the Riccati factor.
class LinearModel : public Model {
 public:
  explicit LinearModel(int param_dim);

  std::string name() const override { return "linear"; }
  int param_dim() const override { return dim_; }
  int feature_dim() const override { return dim_; }
  bool gradient(const Sample& s, const Vec& h, Vec& out) const override;
  bool hessian_vec(const Sample& s, const Vec& h, const Vec& z, Vec& out) const override;
  bool has_full_hessian() const override { return true; }
  bool full_hessian(const Sample& s, const Vec& h, SymMat& out) const override;
  bool has_riccati_factor() const override { return true; }
  bool riccati_factor(const Sample& s, const Vec& h, std::int64_t n, RngStream& rng,
                      Vec& out) const override;

 private:
  int dim_;
};

// Geometric median, loss ||x - h||. Samples within kSingularRadius of h are
// zeroed. The Riccati factor is a randomized finite difference of the
// gradient with width 1 / (n ln(n+1)).
class MedianModel : public Model {
 public:
  explicit MedianModel(int param_dim);

  std::string name() const override { return "median"; }
  int param_dim() const override { return dim_; }
  int feature_dim() const override { return dim_; }
  bool gradient(const Sample& s, const Vec& h, Vec& out) const override;
  bool hessian_vec(const Sample& s, const Vec& h, const Vec& z, Vec& out) const override;
  bool has_full_hessian() const override { return true; }
  bool full_hessian(const Sample& s, const Vec& h, SymMat& out) const override;
  bool has_riccati_factor() const override { return true; }
  bool riccati_factor(const Sample& s, const Vec& h, std::int64_t n, RngStream& rng,
                      Vec& out) const override;

  // Deterministic core of the factor: sqrt(r)/alpha * (grad(h + alpha z) -
  // grad(h)). riccati_factor draws z and picks alpha; exposed so the
  // finite-difference construction is testable with a chosen direction.
  bool riccati_at(const Sample& s, const Vec& h, double alpha, const Vec& z, Vec& out) const;

 private:
  int dim_;
};

// p-mean, loss ||x - h||^p / p with p in (1, 2]. p = 2 recovers the ordinary
// mean; p -> 1 approaches the median. Singular samples are zeroed.
class PMeansModel : public Model {
 public:
  PMeansModel(int param_dim, double p);

  std::string name() const override { return "pmeans"; }
  int param_dim() const override { return dim_; }
  int feature_dim() const override { return dim_; }
  double p() const { return p_; }
  bool gradient(const Sample& s, const Vec& h, Vec& out) const override;
  bool hessian_vec(const Sample& s, const Vec& h, const Vec& z, Vec& out) const override;
  bool has_full_hessian() const override { return true; }
  bool full_hessian(const Sample& s, const Vec& h, SymMat& out) const override;

 private:
  int dim_;
  double p_;
};

// Sphere fit in R^3: parameters h = (center a, radius b), loss
// (||x - a|| - b)^2 / 2. Requires b > 0 (domain error otherwise); samples at
// the center are zeroed.
class SphereModel : public Model {
 public:
  SphereModel() = default;

  std::string name() const override { return "sphere"; }
  int param_dim() const override { return 4; }
  int feature_dim() const override { return 3; }
  bool gradient(const Sample& s, const Vec& h, Vec& out) const override;
  bool hessian_vec(const Sample& s, const Vec& h, const Vec& z, Vec& out) const override;
  bool has_full_hessian() const override { return true; }
  bool full_hessian(const Sample& s, const Vec& h, SymMat& out) const override;
};

// Closed-form inverse of the expected sphere-loss Hessian at the optimum when
// radii are drawn uniformly from [r(1-delta), r(1+delta)]: the matrix is
// diag(1/c, 1/c, 1/c, 1) with c = 1 - (2/3) E[W] E[1/W] for W uniform on
// [1-delta, 1+delta].
SymMat sphere_true_inverse_hessian(double delta);

// Quadratic loss with a fixed Hessian: gradient H0 (h - target) - x, where the
// sample block x acts as additive noise (pass an empty block for a noiseless
// oracle). The Hessian action is exactly H0 z for every sample, which makes
// this the reference problem for estimator diagnostics.
class FrozenQuadraticModel : public Model {
 public:
  FrozenQuadraticModel(SymMat h0, Vec target);

  std::string name() const override { return "frozen-quadratic"; }
  int param_dim() const override { return h0_.dim(); }
  int feature_dim() const override { return h0_.dim(); }
  bool gradient(const Sample& s, const Vec& h, Vec& out) const override;
  bool hessian_vec(const Sample& s, const Vec& h, const Vec& z, Vec& out) const override;
  bool has_full_hessian() const override { return true; }
  bool full_hessian(const Sample& s, const Vec& h, SymMat& out) const override;
  const SymMat& hessian() const { return h0_; }
  const Vec& target() const { return target_; }

 private:
  SymMat h0_;
  Vec target_;
};

}  // namespace osn

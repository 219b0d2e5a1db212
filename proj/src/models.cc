#include "osn/models.hpp"

#include <cmath>
#include <string>

#include "osn/error.hpp"

namespace osn {

namespace {

void check_feature_width(const Model& m, const Sample& s) {
  if (static_cast<int>(s.x.size()) != m.feature_dim()) {
    throw config_error(m.name() + ": sample has " + std::to_string(s.x.size()) +
                       " features, expected " + std::to_string(m.feature_dim()));
  }
}

void check_param_width(const Model& m, const Vec& h) {
  if (static_cast<int>(h.size()) != m.param_dim()) {
    throw config_error(m.name() + ": parameter has dimension " + std::to_string(h.size()) +
                       ", expected " + std::to_string(m.param_dim()));
  }
}

}  // namespace

bool Model::full_hessian(const Sample&, const Vec&, SymMat&) const {
  throw config_error(name() + ": full Hessian not available");
}

bool Model::riccati_factor(const Sample&, const Vec&, std::int64_t, RngStream&, Vec&) const {
  throw config_error(name() + ": Riccati factor not available");
}

double sigmoid(double t) {
  // Branch on the sign so the exponential never overflows.
  if (t >= 0.0) {
    return 1.0 / (1.0 + std::exp(-t));
  }
  const double e = std::exp(t);
  return e / (1.0 + e);
}

LogisticModel::LogisticModel(int param_dim) : dim_(param_dim) {
  if (param_dim < 2) throw config_error("logistic: param_dim must be >= 2 (intercept + features)");
}

namespace {

// phi = (1, x); returns phi . v for a parameter-sized v.
double regressor_dot(const Sample& s, const Vec& v) {
  double t = v[0];
  for (std::size_t i = 0; i < s.x.size(); ++i) t += s.x[i] * v[i + 1];
  return t;
}

}  // namespace

bool LogisticModel::gradient(const Sample& s, const Vec& h, Vec& out) const {
  check_feature_width(*this, s);
  check_param_width(*this, h);
  const double resid = s.y - sigmoid(regressor_dot(s, h));
  out.resize(h.size());
  out[0] = -resid;
  for (std::size_t i = 0; i < s.x.size(); ++i) out[i + 1] = -resid * s.x[i];
  return true;
}

bool LogisticModel::hessian_vec(const Sample& s, const Vec& h, const Vec& z, Vec& out) const {
  check_feature_width(*this, s);
  check_param_width(*this, h);
  const double pi = sigmoid(regressor_dot(s, h));
  const double a = pi * (1.0 - pi);
  const double t = a * regressor_dot(s, z);
  out.resize(h.size());
  out[0] = t;
  for (std::size_t i = 0; i < s.x.size(); ++i) out[i + 1] = t * s.x[i];
  return true;
}

bool LogisticModel::full_hessian(const Sample& s, const Vec& h, SymMat& out) const {
  check_feature_width(*this, s);
  check_param_width(*this, h);
  const double pi = sigmoid(regressor_dot(s, h));
  const double a = pi * (1.0 - pi);
  Vec phi(h.size());
  phi[0] = 1.0;
  for (std::size_t i = 0; i < s.x.size(); ++i) phi[i + 1] = s.x[i];
  out = SymMat(dim_);
  add_sym_rank1(out, a, phi);
  return true;
}

bool LogisticModel::riccati_factor(const Sample& s, const Vec& h, std::int64_t, RngStream&,
                                   Vec& out) const {
  check_feature_width(*this, s);
  check_param_width(*this, h);
  const double pi = sigmoid(regressor_dot(s, h));
  const double f = std::sqrt(pi * (1.0 - pi));
  out.resize(h.size());
  out[0] = f;
  for (std::size_t i = 0; i < s.x.size(); ++i) out[i + 1] = f * s.x[i];
  return true;
}

LinearModel::LinearModel(int param_dim) : dim_(param_dim) {
  if (param_dim < 1) throw config_error("linear: param_dim must be >= 1");
}

bool LinearModel::gradient(const Sample& s, const Vec& h, Vec& out) const {
  check_feature_width(*this, s);
  check_param_width(*this, h);
  double t = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) t += s.x[i] * h[i];
  const double resid = s.y - t;
  out.resize(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) out[i] = -resid * s.x[i];
  return true;
}

bool LinearModel::hessian_vec(const Sample& s, const Vec& h, const Vec& z, Vec& out) const {
  check_feature_width(*this, s);
  check_param_width(*this, h);
  double t = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) t += s.x[i] * z[i];
  out.resize(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) out[i] = t * s.x[i];
  return true;
}

bool LinearModel::full_hessian(const Sample& s, const Vec& h, SymMat& out) const {
  check_feature_width(*this, s);
  check_param_width(*this, h);
  Vec x(s.x.begin(), s.x.end());
  out = SymMat(dim_);
  add_sym_rank1(out, 1.0, x);
  return true;
}

bool LinearModel::riccati_factor(const Sample& s, const Vec& h, std::int64_t, RngStream&,
                                 Vec& out) const {
  check_feature_width(*this, s);
  check_param_width(*this, h);
  out.assign(s.x.begin(), s.x.end());
  return true;
}

MedianModel::MedianModel(int param_dim) : dim_(param_dim) {
  if (param_dim < 1) throw config_error("median: param_dim must be >= 1");
}

bool MedianModel::gradient(const Sample& s, const Vec& h, Vec& out) const {
  check_feature_width(*this, s);
  check_param_width(*this, h);
  out.assign(h.size(), 0.0);
  double r2 = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double d = s.x[i] - h[i];
    out[i] = d;
    r2 += d * d;
  }
  const double r = std::sqrt(r2);
  if (r <= kSingularRadius) {
    out.assign(h.size(), 0.0);
    return false;
  }
  for (double& v : out) v /= -r;
  return true;
}

bool MedianModel::hessian_vec(const Sample& s, const Vec& h, const Vec& z, Vec& out) const {
  check_feature_width(*this, s);
  check_param_width(*this, h);
  out.assign(h.size(), 0.0);
  double r2 = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double d = s.x[i] - h[i];
    r2 += d * d;
  }
  const double r = std::sqrt(r2);
  if (r <= kSingularRadius) return false;
  double uz = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) uz += (s.x[i] - h[i]) / r * z[i];
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double u = (s.x[i] - h[i]) / r;
    out[i] = (z[i] - u * uz) / r;
  }
  return true;
}

bool MedianModel::full_hessian(const Sample& s, const Vec& h, SymMat& out) const {
  check_feature_width(*this, s);
  check_param_width(*this, h);
  out = SymMat(dim_);
  double r2 = 0.0;
  Vec u(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) {
    u[i] = s.x[i] - h[i];
    r2 += u[i] * u[i];
  }
  const double r = std::sqrt(r2);
  if (r <= kSingularRadius) return false;
  for (double& v : u) v /= r;
  out.add_to_diagonal(1.0 / r);
  add_sym_rank1(out, -1.0 / r, u);
  return true;
}

bool MedianModel::riccati_at(const Sample& s, const Vec& h, double alpha, const Vec& z,
                             Vec& out) const {
  check_feature_width(*this, s);
  check_param_width(*this, h);
  out.assign(h.size(), 0.0);
  double r2 = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double d = s.x[i] - h[i];
    r2 += d * d;
  }
  const double r = std::sqrt(r2);
  if (r <= kSingularRadius) return false;

  Vec shifted(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) shifted[i] = h[i] + alpha * z[i];
  Vec g0, g1;
  if (!gradient(s, h, g0) || !gradient(s, shifted, g1)) {
    out.assign(h.size(), 0.0);
    return false;
  }
  const double f = std::sqrt(r) / alpha;
  for (std::size_t i = 0; i < h.size(); ++i) out[i] = f * (g1[i] - g0[i]);
  return true;
}

bool MedianModel::riccati_factor(const Sample& s, const Vec& h, std::int64_t n, RngStream& rng,
                                 Vec& out) const {
  // Randomized finite difference: phi = sqrt(r)/alpha * (grad(h + alpha Z) -
  // grad(h)) with Gaussian Z and alpha = 1 / (n ln(n+1)), so E[phi phi^T]
  // tracks the Hessian as the width shrinks.
  const double alpha = 1.0 / (static_cast<double>(n) * std::log(static_cast<double>(n) + 1.0));
  Vec z(h.size());
  for (double& v : z) v = rng.normal();
  return riccati_at(s, h, alpha, z, out);
}

PMeansModel::PMeansModel(int param_dim, double p) : dim_(param_dim), p_(p) {
  if (param_dim < 1) throw config_error("pmeans: param_dim must be >= 1");
  if (!(p > 1.0 && p <= 2.0)) throw config_error("pmeans: p must lie in (1, 2]");
}

bool PMeansModel::gradient(const Sample& s, const Vec& h, Vec& out) const {
  check_feature_width(*this, s);
  check_param_width(*this, h);
  out.assign(h.size(), 0.0);
  double r2 = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double d = s.x[i] - h[i];
    out[i] = d;
    r2 += d * d;
  }
  const double r = std::sqrt(r2);
  if (r <= kSingularRadius) {
    out.assign(h.size(), 0.0);
    return false;
  }
  const double f = -std::pow(r, p_ - 2.0);
  for (double& v : out) v *= f;
  return true;
}

bool PMeansModel::hessian_vec(const Sample& s, const Vec& h, const Vec& z, Vec& out) const {
  check_feature_width(*this, s);
  check_param_width(*this, h);
  out.assign(h.size(), 0.0);
  double r2 = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double d = s.x[i] - h[i];
    r2 += d * d;
  }
  const double r = std::sqrt(r2);
  if (r <= kSingularRadius) return false;
  double uz = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) uz += (s.x[i] - h[i]) / r * z[i];
  const double f = std::pow(r, p_ - 2.0);
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double u = (s.x[i] - h[i]) / r;
    out[i] = f * (z[i] - (2.0 - p_) * u * uz);
  }
  return true;
}

bool PMeansModel::full_hessian(const Sample& s, const Vec& h, SymMat& out) const {
  check_feature_width(*this, s);
  check_param_width(*this, h);
  out = SymMat(dim_);
  double r2 = 0.0;
  Vec u(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) {
    u[i] = s.x[i] - h[i];
    r2 += u[i] * u[i];
  }
  const double r = std::sqrt(r2);
  if (r <= kSingularRadius) return false;
  for (double& v : u) v /= r;
  const double f = std::pow(r, p_ - 2.0);
  out.add_to_diagonal(f);
  add_sym_rank1(out, -f * (2.0 - p_), u);
  return true;
}

namespace {

// Shared geometry for the sphere oracles: u = (x - a)/r, r = ||x - a||.
// Returns false for a sample at the center.
bool sphere_geometry(const Sample& s, const Vec& h, Vec& u, double& r, double& b) {
  b = h[3];
  if (!(b > 0.0)) throw domain_error("sphere: radius parameter must be positive");
  u.assign(3, 0.0);
  double r2 = 0.0;
  for (int i = 0; i < 3; ++i) {
    u[i] = s.x[i] - h[i];
    r2 += u[i] * u[i];
  }
  r = std::sqrt(r2);
  if (r <= kSingularRadius) return false;
  for (double& v : u) v /= r;
  return true;
}

}  // namespace

bool SphereModel::gradient(const Sample& s, const Vec& h, Vec& out) const {
  check_feature_width(*this, s);
  check_param_width(*this, h);
  out.assign(4, 0.0);
  Vec u;
  double r, b;
  if (!sphere_geometry(s, h, u, r, b)) return false;
  for (int i = 0; i < 3; ++i) out[i] = (b - r) * u[i];
  out[3] = b - r;
  return true;
}

bool SphereModel::hessian_vec(const Sample& s, const Vec& h, const Vec& z, Vec& out) const {
  check_feature_width(*this, s);
  check_param_width(*this, h);
  out.assign(4, 0.0);
  Vec u;
  double r, b;
  if (!sphere_geometry(s, h, u, r, b)) return false;
  double uz = 0.0;
  for (int i = 0; i < 3; ++i) uz += u[i] * z[i];
  const double br = b / r;
  for (int i = 0; i < 3; ++i) out[i] = (1.0 - br) * z[i] + br * u[i] * uz + u[i] * z[3];
  out[3] = uz + z[3];
  return true;
}

bool SphereModel::full_hessian(const Sample& s, const Vec& h, SymMat& out) const {
  check_feature_width(*this, s);
  check_param_width(*this, h);
  out = SymMat(4);
  Vec u;
  double r, b;
  if (!sphere_geometry(s, h, u, r, b)) return false;
  const double br = b / r;
  for (int i = 0; i < 3; ++i) {
    out.at(i, i) = 1.0 - br + br * u[i] * u[i];
    for (int j = 0; j < i; ++j) out.at(i, j) = br * u[i] * u[j];
    out.at(3, i) = u[i];
  }
  out.at(3, 3) = 1.0;
  return true;
}

SymMat sphere_true_inverse_hessian(double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw config_error("sphere: delta must lie in (0, 1)");
  // Radii scale out of the expected Hessian at the optimum; only the relative
  // spread W ~ Uniform[1-delta, 1+delta] matters. E[W] = 1 and
  // E[1/W] = ln((1+delta)/(1-delta)) / (2 delta).
  const double inv_mean = std::log((1.0 + delta) / (1.0 - delta)) / (2.0 * delta);
  const double c = 1.0 - (2.0 / 3.0) * inv_mean;
  SymMat out(4);
  for (int i = 0; i < 3; ++i) out.at(i, i) = 1.0 / c;
  out.at(3, 3) = 1.0;
  return out;
}

FrozenQuadraticModel::FrozenQuadraticModel(SymMat h0, Vec target)
    : h0_(std::move(h0)), target_(std::move(target)) {
  if (h0_.dim() == 0 || static_cast<int>(target_.size()) != h0_.dim())
    throw config_error("frozen-quadratic: Hessian and target dimensions disagree");
}

bool FrozenQuadraticModel::gradient(const Sample& s, const Vec& h, Vec& out) const {
  check_param_width(*this, h);
  Vec diff = sub(h, target_);
  mat_vec(h0_, diff, out);
  // The sample block, when present, enters as additive noise on the gradient.
  if (!s.x.empty()) {
    if (static_cast<int>(s.x.size()) != h0_.dim())
      throw config_error("frozen-quadratic: noise block has wrong dimension");
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= s.x[i];
  }
  return true;
}

bool FrozenQuadraticModel::hessian_vec(const Sample&, const Vec& h, const Vec& z,
                                       Vec& out) const {
  check_param_width(*this, h);
  mat_vec(h0_, z, out);
  return true;
}

bool FrozenQuadraticModel::full_hessian(const Sample&, const Vec& h, SymMat& out) const {
  check_param_width(*this, h);
  out = h0_;
  return true;
}

}  // namespace osn

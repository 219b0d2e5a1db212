#include "osn/optimizers.hpp"

#include <cmath>
#include <string>

#include "osn/error.hpp"
#include "osn/weighted_average.hpp"

namespace osn {

void sherman_morrison_update(SymMat& s_inv, const Vec& phi) {
  Vec u = mat_vec(s_inv, phi);
  const double den = 1.0 + dot(phi, u);
  if (den <= 1e-14) {
    throw numeric_error("rank-one inverse update: denominator " + std::to_string(den) +
                        " is not safely positive; the running matrix has lost definiteness");
  }
  add_sym_rank1(s_inv, -1.0 / den, u);
}

NewtonOptions NewtonOptions::usna_defaults() {
  NewtonOptions o;
  o.nu = PowerSchedule::decay(1.0, 1.0);
  return o;
}

NewtonOptions NewtonOptions::uwasna_defaults() {
  NewtonOptions o;
  o.nu = PowerSchedule::decay(1.0, 0.75);
  return o;
}

NewtonState make_newton_state(const Vec& theta0, const NewtonOptions& opt) {
  NewtonState st;
  st.theta = theta0;
  st.theta_avg = theta0;
  st.theta_weight_sum = initial_weight_sum(opt.tau_prime);
  st.inv = make_inverse_hessian_state(static_cast<int>(theta0.size()), opt.hess);
  return st;
}

void usna_step(NewtonState& st, const NewtonOptions& opt, const Model& model, const Sample& s,
               RngStream& probe_rng) {
  const std::int64_t n = st.n + 1;
  Vec z;
  draw_probe(opt.probe, static_cast<int>(st.theta.size()), probe_rng, z);
  Vec q;
  if (!model.hessian_vec(s, st.theta, z, q)) ++st.singular_events;
  Vec g;
  if (!model.gradient(s, st.theta, g)) ++st.singular_events;

  Vec dir = mat_vec(st.inv.estimate, g);
  axpy(-opt.nu.at(n), dir, st.theta);

  update_inverse_hessian(st.inv, z, q, opt.hess);
  st.n = n;
}

void uwasna_step(NewtonState& st, const NewtonOptions& opt, const Model& model, const Sample& s,
                 RngStream& probe_rng) {
  const std::int64_t n = st.n + 1;
  Vec z;
  draw_probe(opt.probe, static_cast<int>(st.theta.size()), probe_rng, z);
  // Hessian action anchored at the averaged iterate as it stood before this
  // step's average advances.
  Vec q;
  if (!model.hessian_vec(s, st.theta_avg, z, q)) ++st.singular_events;
  Vec g;
  if (!model.gradient(s, st.theta, g)) ++st.singular_events;

  Vec dir = mat_vec(st.inv.averaged, g);
  axpy(-opt.nu.at(n), dir, st.theta);
  weighted_average_step(st.theta_avg, st.theta, n, opt.tau_prime, st.theta_weight_sum);

  update_inverse_hessian(st.inv, z, q, opt.hess);
  st.n = n;
}

RiccatiState make_riccati_state(const Vec& theta0, const RiccatiOptions& opt) {
  RiccatiState st;
  st.s_inv = SymMat::identity(static_cast<int>(theta0.size()));
  st.theta = theta0;
  st.theta_avg = theta0;
  st.theta_weight_sum = initial_weight_sum(opt.tau_prime);
  return st;
}

void sna_step(RiccatiState& st, const Model& model, const Sample& s, RngStream& noise_rng) {
  const std::int64_t n = st.n + 1;
  Vec phi;
  if (!model.riccati_factor(s, st.theta, n, noise_rng, phi)) ++st.singular_events;
  sherman_morrison_update(st.s_inv, phi);

  Vec g;
  if (!model.gradient(s, st.theta, g)) ++st.singular_events;
  Vec dir = mat_vec(st.s_inv, g);
  axpy(-1.0, dir, st.theta);
  st.n = n;
}

void wasna_step(RiccatiState& st, const RiccatiOptions& opt, const Model& model, const Sample& s,
                RngStream& noise_rng) {
  const std::int64_t n = st.n + 1;
  Vec phi;
  if (!model.riccati_factor(s, st.theta_avg, n, noise_rng, phi)) ++st.singular_events;
  sherman_morrison_update(st.s_inv, phi);

  Vec g;
  if (!model.gradient(s, st.theta, g)) ++st.singular_events;
  // s_inv now carries n rank-one terms, so n * s_inv sits on the scale of the
  // inverse of the averaged per-sample Hessian.
  const double coeff = opt.step.at(n + 1) * static_cast<double>(n);
  Vec dir = mat_vec(st.s_inv, g);
  axpy(-coeff, dir, st.theta);
  weighted_average_step(st.theta_avg, st.theta, n, opt.tau_prime, st.theta_weight_sum);
  st.n = n;
}

FirstOrderState make_first_order_state(const Vec& theta0) {
  FirstOrderState st;
  st.theta = theta0;
  st.theta_avg = theta0;
  st.grad_sq.assign(theta0.size(), 0.0);
  return st;
}

void sgd_step(FirstOrderState& st, const FirstOrderOptions& opt, const Model& model,
              const Sample& s) {
  const std::int64_t n = st.n + 1;
  Vec g;
  if (!model.gradient(s, st.theta, g)) ++st.singular_events;
  axpy(-opt.eta.at(n), g, st.theta);
  st.n = n;
}

void asgd_step(FirstOrderState& st, const FirstOrderOptions& opt, const Model& model,
               const Sample& s) {
  sgd_step(st, opt, model, s);
  const double inv_n = 1.0 / static_cast<double>(st.n);
  for (std::size_t i = 0; i < st.theta.size(); ++i)
    st.theta_avg[i] += (st.theta[i] - st.theta_avg[i]) * inv_n;
}

void adagrad_step(FirstOrderState& st, const FirstOrderOptions& opt, const Model& model,
                  const Sample& s) {
  const std::int64_t n = st.n + 1;
  Vec g;
  if (!model.gradient(s, st.theta, g)) ++st.singular_events;
  const double eta = opt.eta.at(n);
  for (std::size_t i = 0; i < st.theta.size(); ++i) {
    st.grad_sq[i] += g[i] * g[i];
    st.theta[i] -= eta * g[i] / (std::sqrt(st.grad_sq[i]) + opt.adagrad_eps);
  }
  st.n = n;
}

}  // namespace osn

#pragma once

#include <cstdint>

#include "osn/inverse_hessian.hpp"
#include "osn/model.hpp"
#include "osn/probe.hpp"
#include "osn/schedule.hpp"
#include "osn/symmat.hpp"
#include "osn/vec.hpp"

namespace osn {

// Rank-one inverse update: s_inv <- (S + phi phi^T)^{-1} given s_inv = S^{-1},
// via s_inv - (U U^T) / (1 + phi^T U) with U = s_inv phi. Throws a numeric
// error when the denominator falls to 1e-14 or below. A zero phi is a no-op.
void sherman_morrison_update(SymMat& s_inv, const Vec& phi);

// ---------------------------------------------------------------------------
// Newton-type methods driven by the recursive inverse-Hessian estimator.

struct NewtonOptions {
  PowerSchedule nu;  // parameter step coefficient
  InverseHessianSchedules hess;
  double tau_prime = 2.0;  // log-weight exponent of the averaged iterate
  ProbeKind probe = ProbeKind::kRademacher;

  static NewtonOptions usna_defaults();    // nu_n = 1/n
  static NewtonOptions uwasna_defaults();  // nu_n = n^(-3/4)
};

struct NewtonState {
  Vec theta;
  Vec theta_avg;
  double theta_weight_sum = 0.0;
  InverseHessianState inv;
  std::int64_t n = 0;
  std::int64_t singular_events = 0;
};

NewtonState make_newton_state(const Vec& theta0, const NewtonOptions& opt);

// One step of the unaveraged method. The gradient, the Hessian action, and
// the preconditioner are all taken at their pre-step values:
//   theta <- theta - nu_n * A * grad(sample, theta),
// then the estimator ingests (Z, hessian_vec(sample, theta_pre, Z)).
// probe_rng feeds only the probe; data and init randomness live elsewhere.
void usna_step(NewtonState& st, const NewtonOptions& opt, const Model& model, const Sample& s,
               RngStream& probe_rng);

// One step of the averaged method. The step is preconditioned by the
// pre-update averaged estimate and the Hessian action is anchored at the
// pre-update averaged iterate; the raw gradient is still taken at the raw
// iterate. Both running averages then advance.
void uwasna_step(NewtonState& st, const NewtonOptions& opt, const Model& model, const Sample& s,
                 RngStream& probe_rng);

// ---------------------------------------------------------------------------
// Recursive-least-squares baselines: maintain (I + sum phi phi^T)^{-1}
// exactly through rank-one updates of the model's Riccati factor.

struct RiccatiOptions {
  // Raw-iterate step coefficient of the averaged variant. The running inverse
  // counts n rank-one terms, so the step is rescaled by n to keep the
  // preconditioner on the scale of the per-sample Hessian.
  PowerSchedule step = PowerSchedule::decay(1.0, 0.75);
  double tau_prime = 2.0;

  static RiccatiOptions defaults() { return {}; }
};

struct RiccatiState {
  SymMat s_inv;  // starts at the identity
  Vec theta;
  Vec theta_avg;
  double theta_weight_sum = 0.0;
  std::int64_t n = 0;
  std::int64_t singular_events = 0;
};

RiccatiState make_riccati_state(const Vec& theta0, const RiccatiOptions& opt);

// Unaveraged variant: the factor is taken at the raw iterate, the rank-one
// update lands first, and the parameter moves by the post-update inverse with
// unit step:
//   theta <- theta - s_inv * grad(sample, theta).
void sna_step(RiccatiState& st, const Model& model, const Sample& s, RngStream& noise_rng);

// Averaged variant: the factor is taken at the averaged iterate, the gradient
// at the raw iterate, and the raw step is step(n+1) * n * s_inv * grad; the
// averaged iterate then advances by log weights.
void wasna_step(RiccatiState& st, const RiccatiOptions& opt, const Model& model, const Sample& s,
                RngStream& noise_rng);

// ---------------------------------------------------------------------------
// First-order baselines.

struct FirstOrderOptions {
  PowerSchedule eta = PowerSchedule::decay(1.0, 2.0 / 3.0);
  double adagrad_eps = 1e-8;

  static FirstOrderOptions sgd_defaults() { return {}; }
  static FirstOrderOptions adagrad_defaults() {
    FirstOrderOptions o;
    o.eta = PowerSchedule::constant(0.1);
    return o;
  }
};

struct FirstOrderState {
  Vec theta;
  Vec theta_avg;
  Vec grad_sq;  // adagrad's per-coordinate accumulator
  std::int64_t n = 0;
  std::int64_t singular_events = 0;
};

FirstOrderState make_first_order_state(const Vec& theta0);

// theta <- theta - eta_n * grad(sample, theta)
void sgd_step(FirstOrderState& st, const FirstOrderOptions& opt, const Model& model,
              const Sample& s);

// SGD step, then the arithmetic mean of iterates 1..n (the initial point is
// excluded: the first average equals the first iterate).
void asgd_step(FirstOrderState& st, const FirstOrderOptions& opt, const Model& model,
               const Sample& s);

// Per-coordinate step eta / (sqrt(accumulated squared gradient) + eps).
void adagrad_step(FirstOrderState& st, const FirstOrderOptions& opt, const Model& model,
                  const Sample& s);

}  // namespace osn

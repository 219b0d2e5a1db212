#pragma once

#include <cmath>
#include <cstdint>

#include "osn/error.hpp"

namespace osn {

// c * n^exponent evaluated at integer steps. Step coefficients, truncation
// bounds, and projection radii are all powers of the step index; the sign of
// the exponent is owned by the factory that builds the schedule.
struct PowerSchedule {
  double c = 1.0;
  double exponent = 0.0;

  double at(std::int64_t n) const { return c * std::pow(static_cast<double>(n), exponent); }

  static PowerSchedule decay(double c, double p) { return {c, -p}; }
  static PowerSchedule growth(double c, double p) { return {c, p}; }
  static PowerSchedule constant(double c) { return {c, 0.0}; }
};

// Hyperparameters of the recursive inverse-Hessian estimator: step gamma_n,
// truncation bound beta_n, projection radius beta'_n, and the log-weight
// exponent tau of the averaged estimate.
struct InverseHessianSchedules {
  PowerSchedule gamma = PowerSchedule::decay(1.0, 0.75);
  PowerSchedule beta = PowerSchedule::growth(0.5, 0.75);
  PowerSchedule beta_prime = PowerSchedule::growth(1.0e6, 0.26);
  double tau = 2.0;

  static InverseHessianSchedules defaults() { return {}; }

  // Practice mode: the estimator step times the truncation bound must stay at
  // or below 1/2 for every n, so a truncated update can never overshoot. The
  // product is c_gamma * c_beta * n^(beta - gamma): bounded iff beta <= gamma,
  // and then largest at n = 1.
  void validate_practice() const {
    if (gamma.c <= 0.0 || gamma.exponent >= 0.0)
      throw config_error("schedules: gamma must be a positive decaying schedule");
    if (beta.c <= 0.0 || beta.exponent < 0.0)
      throw config_error("schedules: beta must be positive and non-decreasing");
    if (beta_prime.c <= 0.0 || beta_prime.exponent < 0.0)
      throw config_error("schedules: beta' must be positive and non-decreasing");
    if (tau < 0.0) throw config_error("schedules: tau must be non-negative");
    if (beta.exponent > -gamma.exponent)
      throw config_error("schedules: gamma_n * beta_n is unbounded (beta exponent exceeds gamma)");
    if (gamma.c * beta.c > 0.5 + 1e-12)
      throw config_error("schedules: gamma_1 * beta_1 = " + std::to_string(gamma.c * beta.c) +
                         " exceeds 1/2");
  }

  // Theory mode narrows the exponents to the ranges used by the almost-sure
  // convergence analysis. q is the moment order available for the Hessian
  // samples; nu_decay is the parameter-step exponent when the estimator is
  // driven inside a Newton loop (pass a negative value to skip those checks).
  void validate_theory(double q, double nu_decay = -1.0) const {
    validate_practice();
    if (q <= 1.0) throw config_error("schedules: theory mode requires moment order q > 1");
    const double g = -gamma.exponent;
    const double b = beta.exponent;
    const double bp = beta_prime.exponent;
    if (!(g > 0.5 && g < 1.0))
      throw config_error("schedules: theory mode requires gamma exponent in (1/2, 1)");
    if (!(b > (1.0 - g) / (q - 1.0) && b < g - 0.5))
      throw config_error("schedules: theory mode requires beta exponent in ((1-gamma)/(q-1), gamma - 1/2)");
    if (!(bp > 1.0 - g && bp < g - 2.0 * b))
      throw config_error("schedules: theory mode requires beta' exponent in (1-gamma, gamma-2*beta)");
    if (nu_decay >= 0.0) {
      if (!(nu_decay > 0.5 && nu_decay < 1.0 - b))
        throw config_error("schedules: theory mode requires nu exponent in (1/2, 1-beta)");
      if (!(g + nu_decay > 1.5))
        throw config_error("schedules: theory mode requires gamma + nu exponents > 3/2");
    }
  }
};

}  // namespace osn

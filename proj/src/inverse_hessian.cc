#include "osn/inverse_hessian.hpp"

#include <string>

#include "osn/error.hpp"
#include "osn/weighted_average.hpp"

namespace osn {

InverseHessianState make_inverse_hessian_state(int dim, const InverseHessianSchedules& sched) {
  InverseHessianState s;
  s.estimate = SymMat::identity(dim);
  s.averaged = SymMat::identity(dim);
  s.weight_sum = initial_weight_sum(sched.tau);
  return s;
}

bool project_frobenius_ball(SymMat& a, double radius) {
  const double fn = frobenius_norm(a);
  if (fn <= radius) return false;
  a.scale(radius / fn);
  return true;
}

void update_inverse_hessian(InverseHessianState& state, const Vec& z, const Vec& q,
                            const InverseHessianSchedules& sched) {
  const std::int64_t n = state.n + 1;
  if (has_non_finite(q) || has_non_finite(z)) {
    throw numeric_error("inverse-hessian update at step " + std::to_string(n) +
                        ": non-finite Hessian action");
  }

  if (norm2(q) * norm2(z) <= sched.beta.at(n)) {
    const double gamma = sched.gamma.at(n);
    Vec p = mat_vec(state.estimate, z);
    add_sym_rank2(state.estimate, -gamma, p, q);
    state.estimate.add_to_diagonal(2.0 * gamma);
  } else {
    ++state.truncation_hits;
  }

  // The radius grows with n, so projection can fire only right after an
  // applied update; a skipped update leaves the estimate inside the ball.
  if (project_frobenius_ball(state.estimate, sched.beta_prime.at(n))) {
    ++state.projection_hits;
  }

  weighted_average_step(state.averaged, state.estimate, n, sched.tau, state.weight_sum);
  state.n = n;
}

}  // namespace osn

#pragma once

#include <concepts>
#include <cstdint>

#include "osn/schedule.hpp"
#include "osn/symmat.hpp"
#include "osn/vec.hpp"

namespace osn {

// Recursive estimator of the inverse Hessian. The estimate is driven by
// random probes Z and Hessian actions Q = H Z supplied by the caller; one
// update costs O(dim^2) and never factors or inverts anything.
struct InverseHessianState {
  SymMat estimate;      // A_n, starts at the identity
  SymMat averaged;      // log-weighted average of A_1..A_n
  double weight_sum = 0.0;
  std::int64_t n = 0;
  std::int64_t truncation_hits = 0;   // updates skipped by the norm gate
  std::int64_t projection_hits = 0;   // rescales by the Frobenius ball
};

InverseHessianState make_inverse_hessian_state(int dim, const InverseHessianSchedules& sched);

// Rescales a into the Frobenius ball of the given radius. Returns true when
// the rescale fired. The zero matrix is a fixed point for any radius.
bool project_frobenius_ball(SymMat& a, double radius);

// One recursion step with probe z and Hessian action q = H(theta) z:
//   A <- A - gamma_n (P q^T + q P^T - 2 I),  P = A z,
// applied only when ||q|| ||z|| <= beta_n, then projected onto the Frobenius
// ball of radius beta'_n, then folded into the running weighted average.
// Throws a numeric error naming the step index if q (or z) is non-finite.
void update_inverse_hessian(InverseHessianState& state, const Vec& z, const Vec& q,
                            const InverseHessianSchedules& sched);

// Same step, with the Hessian action computed on demand from a callable
// mapping a probe to H(theta) z.
template <class HessianAction>
  requires std::invocable<HessianAction&, const Vec&>
void update_inverse_hessian(InverseHessianState& state, const Vec& z, HessianAction&& action,
                            const InverseHessianSchedules& sched) {
  Vec q = action(z);
  update_inverse_hessian(state, z, q, sched);
}

}  // namespace osn

#pragma once

#include <cmath>
#include <cstdint>

namespace osn {

// Weight ln(n+1)^tau of iterate n. tau == 0 gives weight 1 for every n
// (pow(0, 0) == 1, so iterate 0 is included and the average is arithmetic);
// tau > 0 gives iterate 0 weight 0, so the first pushed value replaces the
// initial average entirely.
inline double log_weight(std::int64_t n, double tau) {
  return std::pow(std::log(static_cast<double>(n) + 1.0), tau);
}

// Starting accumulator for the running weighted average: the weight of
// iterate 0, which the recursion never pushes explicitly.
inline double initial_weight_sum(double tau) { return tau == 0.0 ? 1.0 : 0.0; }

inline void blend(double& avg, const double& value, double alpha) {
  avg = (1.0 - alpha) * avg + alpha * value;
}

// One step of the online weighted average:
//   s' = s + w_n,  avg' = (1 - w_n/s') avg + (w_n/s') value.
// T needs a blend(T&, const T&, double) overload; Vec, SymMat, and plain
// doubles all provide one.
template <class T>
void weighted_average_step(T& avg, const T& value, std::int64_t n, double tau,
                           double& weight_sum) {
  const double w = log_weight(n, tau);
  weight_sum += w;
  if (weight_sum > 0.0) blend(avg, value, w / weight_sum);
}

}  // namespace osn

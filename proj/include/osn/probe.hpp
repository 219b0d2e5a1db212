#pragma once

#include <cmath>

#include "osn/rng.hpp"
#include "osn/vec.hpp"

namespace osn {

// Random directions fed to the Hessian-vector oracle. Both laws satisfy
// E[Z Z^T] = I and ||Z|| = sqrt(dim) exactly, which the estimator's
// truncation analysis relies on.
enum class ProbeKind {
  kRademacher,   // independent +/-1 coordinates (default)
  kScaledSphere  // uniform on the sphere of radius sqrt(dim)
};

inline void draw_probe(ProbeKind kind, int dim, RngStream& rng, Vec& out) {
  out.resize(static_cast<std::size_t>(dim));
  if (kind == ProbeKind::kRademacher) {
    for (int i = 0; i < dim; ++i) out[i] = rng.rademacher();
    return;
  }
  // Normalized Gaussian, rescaled to sqrt(dim). A zero draw is astronomically
  // unlikely but would poison the run, so resample.
  for (;;) {
    double s = 0.0;
    for (int i = 0; i < dim; ++i) {
      out[i] = rng.normal();
      s += out[i] * out[i];
    }
    if (s > 0.0) {
      const double f = std::sqrt(static_cast<double>(dim) / s);
      for (double& v : out) v *= f;
      return;
    }
  }
}

}  // namespace osn

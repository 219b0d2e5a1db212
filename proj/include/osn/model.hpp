#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "osn/rng.hpp"
#include "osn/symmat.hpp"
#include "osn/vec.hpp"

namespace osn {

// One observation: a feature block and an optional label (ignored by the
// unsupervised models).
struct Sample {
  std::span<const double> x;
  double y = 0.0;
};

// Distance below which a sample is treated as sitting on a singularity of the
// loss; the oracles then return exact zeros instead of blowing up.
constexpr double kSingularRadius = 1e-12;

// Per-sample loss oracles. Implementations are pure: no mutable state, so one
// instance can be shared read-only across replications and threads. Methods
// that can hit a singular sample return false after zeroing their output;
// callers count those events.
class Model {
 public:
  virtual ~Model() = default;

  virtual std::string name() const = 0;
  virtual int param_dim() const = 0;
  virtual int feature_dim() const = 0;

  virtual bool gradient(const Sample& s, const Vec& h, Vec& out) const = 0;

  // out = (Hessian of the per-sample loss at h) * z, materialized in O(dim)
  // to O(dim^2) without forming the matrix.
  virtual bool hessian_vec(const Sample& s, const Vec& h, const Vec& z, Vec& out) const = 0;

  virtual bool has_full_hessian() const { return false; }
  virtual bool full_hessian(const Sample& s, const Vec& h, SymMat& out) const;

  // Rank-one factor phi with E[phi phi^T] matching the Hessian; consumed by
  // the recursive-least-squares baselines. n is the step index (some factors
  // use a step-dependent finite-difference width) and rng feeds factors that
  // need an auxiliary random direction.
  virtual bool has_riccati_factor() const { return false; }
  virtual bool riccati_factor(const Sample& s, const Vec& h, std::int64_t n, RngStream& rng,
                              Vec& out) const;
};

}  // namespace osn

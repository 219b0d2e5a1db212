#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "osn/model.hpp"
#include "osn/rng.hpp"
#include "osn/symmat.hpp"
#include "osn/vec.hpp"

namespace osn {

// In-memory sample table, row-major. Labels are optional; unsupervised models
// ignore them.
struct Dataset {
  int feature_dim = 0;
  std::vector<double> features;
  std::vector<double> labels;
  std::string source;

  std::size_t size() const {
    return feature_dim == 0 ? 0 : features.size() / static_cast<std::size_t>(feature_dim);
  }

  Sample sample(std::size_t i) const {
    return {std::span<const double>(
                features.data() + i * static_cast<std::size_t>(feature_dim),
                static_cast<std::size_t>(feature_dim)),
            labels.empty() ? 0.0 : labels[i]};
  }

  void push_row(const Vec& x) { features.insert(features.end(), x.begin(), x.end()); }
  void push_row(const Vec& x, double y) {
    push_row(x);
    labels.push_back(y);
  }
};

// Feature covariance used by the correlated Gaussian sampler. The primary
// choice puts sqrt(|i-j|) off the diagonal with the dimension itself on the
// diagonal; that matrix is only positive definite for small dimensions, so
// the construction checks definiteness numerically and falls back to the
// standard 0.5^|i-j| autoregressive covariance when the check fails.
struct SigmaConvention {
  SymMat sigma;      // the covariance actually used
  SymMat attempted;  // the primary candidate, kept for run records
  bool fell_back = false;
};

SigmaConvention sigma_convention(int dim);

// n rows of N(0, sigma_convention(dim).sigma).
Dataset gen_gaussian_cov(int dim, std::size_t n, RngStream& rng);

// Features x ~ N(0, I) in R^(dim-1) for dim = theta_star size; labels
// Bernoulli(sigmoid(theta_star . (1, x))).
Dataset gen_logistic(const Vec& theta_star, std::size_t n, RngStream& rng);

// y = x . theta_star + noise_sd * N(0,1); features standard normal, or
// N(0, sigma) when a covariance factor is supplied.
Dataset gen_linear(const Vec& theta_star, double noise_sd, std::size_t n, RngStream& rng,
                   const LowerTri* sigma_chol = nullptr);

// Points center + radius W U with U uniform on the unit sphere of R^3 and
// W uniform on [1-delta, 1+delta].
Dataset gen_sphere(const Vec& center, double radius, double delta, std::size_t n, RngStream& rng);

// Sparse classification file: one "label index:value ..." line per sample,
// indices 1-based. The numerically smaller of the two distinct labels maps to
// 0, the larger to 1. Malformed lines and label sets larger than two raise an
// I/O error naming the offending line; an empty file yields an empty dataset
// and a warning on stderr.
Dataset read_libsvm(const std::string& path);

// Inverse of read_libsvm for datasets with 0/1 labels; zero features are not
// written. Values are printed with enough digits to round-trip exactly.
void write_libsvm(const std::string& path, const Dataset& data);

// Seeded shuffle-and-cut: the first piece receives round(fraction * n) rows.
// The union of the two pieces is the input as a multiset.
std::pair<Dataset, Dataset> split(const Dataset& data, double fraction, std::uint64_t seed);

}  // namespace osn

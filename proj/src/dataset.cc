#include "osn/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>

#include "osn/error.hpp"
#include "osn/models.hpp"

namespace osn {

SigmaConvention sigma_convention(int dim) {
  if (dim < 1) throw config_error("sigma_convention: dimension must be positive");
  SigmaConvention out;
  out.attempted = SymMat(dim);
  for (int i = 0; i < dim; ++i) {
    out.attempted.at(i, i) = static_cast<double>(dim);
    for (int j = 0; j < i; ++j) out.attempted.at(i, j) = std::sqrt(static_cast<double>(i - j));
  }
  try {
    (void)cholesky(out.attempted);
    out.sigma = out.attempted;
    out.fell_back = false;
  } catch (const Error&) {
    out.sigma = SymMat(dim);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j <= i; ++j) out.sigma.at(i, j) = std::pow(0.5, i - j);
    out.fell_back = true;
  }
  return out;
}

Dataset gen_gaussian_cov(int dim, std::size_t n, RngStream& rng) {
  const SigmaConvention conv = sigma_convention(dim);
  const LowerTri l = cholesky(conv.sigma);
  Dataset d;
  d.feature_dim = dim;
  d.source = "gaussian-cov";
  d.features.reserve(n * static_cast<std::size_t>(dim));
  Vec z(static_cast<std::size_t>(dim)), x;
  for (std::size_t k = 0; k < n; ++k) {
    for (double& v : z) v = rng.normal();
    mat_vec(l, z, x);
    d.push_row(x);
  }
  return d;
}

Dataset gen_logistic(const Vec& theta_star, std::size_t n, RngStream& rng) {
  const int dim = static_cast<int>(theta_star.size());
  if (dim < 2) throw config_error("gen_logistic: theta_star must have dimension >= 2");
  Dataset d;
  d.feature_dim = dim - 1;
  d.source = "logistic";
  d.features.reserve(n * static_cast<std::size_t>(dim - 1));
  d.labels.reserve(n);
  Vec x(static_cast<std::size_t>(dim - 1));
  for (std::size_t k = 0; k < n; ++k) {
    double t = theta_star[0];
    for (int i = 0; i + 1 < dim; ++i) {
      x[i] = rng.normal();
      t += theta_star[i + 1] * x[i];
    }
    const double y = rng.uniform01() < sigmoid(t) ? 1.0 : 0.0;
    d.push_row(x, y);
  }
  return d;
}

Dataset gen_linear(const Vec& theta_star, double noise_sd, std::size_t n, RngStream& rng,
                   const LowerTri* sigma_chol) {
  const int dim = static_cast<int>(theta_star.size());
  if (dim < 1) throw config_error("gen_linear: theta_star must be non-empty");
  if (sigma_chol && sigma_chol->dim != dim)
    throw config_error("gen_linear: covariance factor dimension mismatch");
  Dataset d;
  d.feature_dim = dim;
  d.source = "linear";
  d.features.reserve(n * static_cast<std::size_t>(dim));
  d.labels.reserve(n);
  Vec z(static_cast<std::size_t>(dim)), x;
  for (std::size_t k = 0; k < n; ++k) {
    for (double& v : z) v = rng.normal();
    if (sigma_chol) {
      mat_vec(*sigma_chol, z, x);
    } else {
      x = z;
    }
    const double y = dot(x, theta_star) + noise_sd * rng.normal();
    d.push_row(x, y);
  }
  return d;
}

Dataset gen_sphere(const Vec& center, double radius, double delta, std::size_t n,
                   RngStream& rng) {
  if (center.size() != 3) throw config_error("gen_sphere: center must be in R^3");
  if (!(radius > 0.0)) throw config_error("gen_sphere: radius must be positive");
  if (!(delta >= 0.0 && delta < 1.0)) throw config_error("gen_sphere: delta must lie in [0, 1)");
  Dataset d;
  d.feature_dim = 3;
  d.source = "sphere";
  d.features.reserve(n * 3);
  Vec x(3);
  for (std::size_t k = 0; k < n; ++k) {
    double s = 0.0;
    do {
      for (double& v : x) v = rng.normal();
      s = norm2_squared(x);
    } while (s <= 0.0);
    const double w = rng.uniform(1.0 - delta, 1.0 + delta);
    const double f = radius * w / std::sqrt(s);
    for (int i = 0; i < 3; ++i) x[i] = center[i] + f * x[i];
    d.push_row(x);
  }
  return d;
}

Dataset read_libsvm(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("read_libsvm: cannot open " + path);

  struct Row {
    double label;
    std::vector<std::pair<int, double>> entries;
  };
  std::vector<Row> rows;
  std::set<double> label_set;
  int max_index = 0;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    // Skip blank lines but count them for diagnostics.
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    std::istringstream ls(line);
    Row row;
    std::string tok;
    if (!(ls >> tok)) continue;
    try {
      std::size_t used = 0;
      row.label = std::stod(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw io_error(path + ":" + std::to_string(line_no) + ": bad label '" + tok + "'");
    }
    while (ls >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos || colon == 0 || colon + 1 == tok.size()) {
        throw io_error(path + ":" + std::to_string(line_no) + ": bad feature token '" + tok +
                       "'");
      }
      int index = 0;
      double value = 0.0;
      try {
        std::size_t used = 0;
        index = std::stoi(tok.substr(0, colon), &used);
        if (used != colon) throw std::invalid_argument(tok);
        used = 0;
        const std::string vs = tok.substr(colon + 1);
        value = std::stod(vs, &used);
        if (used != vs.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw io_error(path + ":" + std::to_string(line_no) + ": bad feature token '" + tok +
                       "'");
      }
      if (index < 1) {
        throw io_error(path + ":" + std::to_string(line_no) + ": feature index " +
                       std::to_string(index) + " is not 1-based");
      }
      max_index = std::max(max_index, index);
      row.entries.emplace_back(index, value);
    }
    label_set.insert(row.label);
    rows.push_back(std::move(row));
  }

  Dataset d;
  d.source = path;
  if (rows.empty()) {
    std::cerr << "warning: " << path << ": empty dataset\n";
    return d;
  }
  if (label_set.size() > 2) {
    throw io_error(path + ": expected at most 2 distinct labels, found " +
                   std::to_string(label_set.size()));
  }
  const double low = *label_set.begin();
  d.feature_dim = max_index;
  d.features.assign(rows.size() * static_cast<std::size_t>(max_index), 0.0);
  d.labels.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (const auto& [index, value] : rows[r].entries)
      d.features[r * static_cast<std::size_t>(max_index) + (index - 1)] = value;
    d.labels.push_back(rows[r].label == low ? 0.0 : 1.0);
  }
  return d;
}

void write_libsvm(const std::string& path, const Dataset& data) {
  if (data.labels.size() != data.size())
    throw config_error("write_libsvm: dataset has no labels");
  std::ofstream out(path);
  if (!out) throw io_error("write_libsvm: cannot open " + path);
  char buf[64];
  for (std::size_t r = 0; r < data.size(); ++r) {
    out << (data.labels[r] == 0.0 ? '0' : '1');
    const Sample s = data.sample(r);
    for (int i = 0; i < data.feature_dim; ++i) {
      if (s.x[i] == 0.0) continue;
      std::snprintf(buf, sizeof buf, " %d:%.17g", i + 1, s.x[i]);
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw io_error("write_libsvm: write failed for " + path);
}

std::pair<Dataset, Dataset> split(const Dataset& data, double fraction, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction <= 1.0))
    throw config_error("split: fraction must lie in [0, 1]");
  const std::size_t n = data.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  RngStream rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.bounded(i));
    std::swap(order[i - 1], order[j]);
  }
  const std::size_t head = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  std::pair<Dataset, Dataset> out;
  out.first.feature_dim = out.second.feature_dim = data.feature_dim;
  out.first.source = out.second.source = data.source;
  for (std::size_t k = 0; k < n; ++k) {
    Dataset& dst = k < head ? out.first : out.second;
    const Sample s = data.sample(order[k]);
    dst.features.insert(dst.features.end(), s.x.begin(), s.x.end());
    if (!data.labels.empty()) dst.labels.push_back(s.y);
  }
  return out;
}

}  // namespace osn

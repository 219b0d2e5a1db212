#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "osn/dataset.hpp"
#include "osn/model.hpp"
#include "osn/optimizers.hpp"
#include "osn/vec.hpp"

namespace osn {

enum class Metric { kMse, kFrobInvHess, kAccuracy };

std::string metric_name(Metric m);
Metric metric_from_name(const std::string& name);

// One algorithm entry in a plan. Unset fields fall back to the algorithm's
// defaults; label defaults to name and must be unique within a plan, so one
// plan may run the same algorithm twice with different hyperparameters.
struct AlgorithmSpec {
  std::string name;
  std::string label;
  std::optional<double> c_nu, nu;                  // parameter step (Newton-type)
  std::optional<double> c_gamma, gamma;            // estimator step
  std::optional<double> c_beta, beta;              // truncation bound
  std::optional<double> c_beta_prime, beta_prime;  // projection radius
  std::optional<double> tau, tau_prime;            // averaging exponents
  std::optional<double> c_eta, eta;                // first-order step
  std::optional<std::string> probe;                // "rademacher" | "scaled-sphere"
};

struct ModelSpec {
  std::string name;  // logistic | linear | median | pmeans | sphere | quadratic
  int dim = 0;
  Vec theta_star;               // required for logistic/linear/quadratic synthetic runs
  double p = 1.5;               // pmeans exponent
  double noise_sd = 1.0;        // linear/quadratic observation noise
  bool correlated_features = false;  // linear: draw features from the covariance convention
  Vec sphere_center;            // defaults to the origin
  double sphere_radius = 2.0;
  double sphere_delta = 0.2;
  std::string data_path;        // sparse classification file; empty = synthetic
  double holdout_fraction = 0.0;
};

struct ExperimentPlan {
  ModelSpec model;
  std::vector<AlgorithmSpec> algorithms;
  std::int64_t steps = 10000;
  int replications = 1;
  double init_scale = 1.0;  // spread of the randomized start around the target
  std::vector<Metric> metrics;
  int checkpoints = 50;
  std::uint64_t seed = 42;
  std::string out_dir = ".";
};

ExperimentPlan parse_plan(const std::string& json_text);
ExperimentPlan load_plan(const std::string& path);

// Returns human-readable problems; empty means the plan is runnable.
std::vector<std::string> validate_plan(const ExperimentPlan& plan);

// Log-spaced integer grid from min(10, n) to n inclusive, deduplicated.
std::vector<std::int64_t> make_checkpoints(std::int64_t n, int count);

struct Curve {
  std::vector<double> mean;
  std::vector<double> std_error;
};

struct RunRecord {
  std::vector<std::int64_t> checkpoints;
  std::vector<std::string> algorithm_labels;
  std::vector<Metric> metrics;
  // algorithm-major, then metric: curves[a * metrics.size() + m]
  std::vector<Curve> curves;
  std::int64_t truncation_hits = 0;
  std::int64_t projection_hits = 0;
  std::int64_t singular_events = 0;
  int replications = 0;
  int failed_replications = 0;
  std::vector<std::string> failure_messages;
  bool sigma_fell_back = false;
  double wall_clock_seconds = 0.0;
  std::string resolved_config_json;  // fully resolved hyperparameters

  const Curve& curve(std::size_t algo, std::size_t metric) const {
    return curves[algo * metrics.size() + metric];
  }
  bool failure_budget_exceeded() const {
    return replications == 0 ||
           failed_replications * 5 > replications;  // strictly more than 20%
  }
};

// Everything derived from a plan before any replication runs: the model, the
// resolved per-algorithm options, the ground truth, and (for file-backed
// plans) the dataset, loaded once and shared read-only.
struct ResolvedSetup;
std::shared_ptr<const ResolvedSetup> resolve_plan(const ExperimentPlan& plan);

// Per-replication metric traces: values[algo][metric][checkpoint]. A failed
// replication carries a message instead of values.
struct ReplicationResult {
  bool failed = false;
  std::string failure;
  std::vector<std::vector<std::vector<double>>> values;
  std::int64_t truncation_hits = 0;
  std::int64_t projection_hits = 0;
  std::int64_t singular_events = 0;
};

// Runs replication `rep` of the plan: one shared sample sequence, one shared
// start point, independent probe/noise streams per algorithm slot. The first
// steps of a trajectory do not depend on the plan's total step count.
ReplicationResult run_replication(const ExperimentPlan& plan, const ResolvedSetup& setup,
                                  int rep, const std::vector<std::int64_t>& checkpoints);

// Runs all replications (jobs > 1 distributes them over threads; the
// reduction is always in replication order, so results are bit-identical for
// any job count) and aggregates mean and standard-error curves.
RunRecord run_experiment(const ExperimentPlan& plan, int jobs);

// One row per (checkpoint, algorithm, metric), mean and standard error with
// round-trip precision; header always present.
void emit_csv(const RunRecord& record, const std::string& path);

// Self-contained log-log chart, one panel per metric, one line per algorithm.
void emit_svg(const RunRecord& record, const std::string& path);

// Resolved configuration, counters, failures, and timing.
void emit_record_json(const RunRecord& record, const ExperimentPlan& plan,
                      const std::string& path);

}  // namespace osn

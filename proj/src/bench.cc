#include "osn/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "osn/error.hpp"
#include "osn/models.hpp"
#include "osn/weighted_average.hpp"

namespace osn {

using nlohmann::json;

std::string metric_name(Metric m) {
  switch (m) {
    case Metric::kMse: return "mse";
    case Metric::kFrobInvHess: return "frob_inv_hess";
    case Metric::kAccuracy: return "accuracy";
  }
  return "unknown";
}

Metric metric_from_name(const std::string& name) {
  if (name == "mse") return Metric::kMse;
  if (name == "frob_inv_hess") return Metric::kFrobInvHess;
  if (name == "accuracy") return Metric::kAccuracy;
  throw config_error("unknown metric '" + name + "'");
}

namespace {

enum class AlgoKind { kUsna, kUwasna, kSna, kWasna, kSgd, kAsgd, kAdagrad };

AlgoKind algo_kind(const std::string& name) {
  if (name == "usna") return AlgoKind::kUsna;
  if (name == "uwasna") return AlgoKind::kUwasna;
  if (name == "sna") return AlgoKind::kSna;
  if (name == "wasna") return AlgoKind::kWasna;
  if (name == "sgd") return AlgoKind::kSgd;
  if (name == "asgd") return AlgoKind::kAsgd;
  if (name == "adagrad") return AlgoKind::kAdagrad;
  throw config_error("unknown algorithm '" + name + "'");
}

bool is_newton(AlgoKind k) { return k == AlgoKind::kUsna || k == AlgoKind::kUwasna; }
bool is_riccati(AlgoKind k) { return k == AlgoKind::kSna || k == AlgoKind::kWasna; }

struct ResolvedAlgorithm {
  std::string label;
  std::string name;
  AlgoKind kind = AlgoKind::kSgd;
  NewtonOptions newton;
  RiccatiOptions riccati;
  FirstOrderOptions first_order;
};

}  // namespace

struct ResolvedSetup {
  std::shared_ptr<Model> model;
  std::vector<ResolvedAlgorithm> algorithms;
  Vec theta_star;   // metric reference; empty when unknown (file data)
  Vec init_center;  // start point before the randomized offset
  bool has_inverse_reference = false;
  SymMat inverse_reference;
  SymMat quad_h0;
  bool linear_correlated = false;
  LowerTri linear_chol;  // used when linear_correlated
  Dataset file_data;
  bool use_file = false;
  bool sigma_fallback_used = false;
  std::string resolved_json;
};

namespace {

// --------------------------------------------------------------------------
// Plan parsing

void check_keys(const json& obj, std::initializer_list<const char*> allowed,
                const std::string& ctx) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        ok = true;
        break;
      }
    if (!ok) throw config_error("plan: unknown key '" + it.key() + "' in " + ctx);
  }
}

Vec parse_vec(const json& j, const std::string& ctx) {
  if (!j.is_array()) throw config_error("plan: " + ctx + " must be an array of numbers");
  Vec v;
  for (const auto& e : j) {
    if (!e.is_number()) throw config_error("plan: " + ctx + " must be an array of numbers");
    v.push_back(e.get<double>());
  }
  return v;
}

void parse_opt_double(const json& obj, const char* key, std::optional<double>& out) {
  if (obj.contains(key)) {
    if (!obj[key].is_number()) throw config_error(std::string("plan: ") + key + " must be a number");
    out = obj[key].get<double>();
  }
}

ExperimentPlan parse_plan_object(const json& root);

}  // namespace

ExperimentPlan parse_plan(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const std::exception& e) {
    throw config_error(std::string("plan: invalid JSON: ") + e.what());
  }
  if (!root.is_object()) throw config_error("plan: top level must be an object");
  try {
    return parse_plan_object(root);
  } catch (const json::exception& e) {
    // Wrong value types surface here; key and shape problems are reported
    // with their own messages before any value is read.
    throw config_error(std::string("plan: malformed value: ") + e.what());
  }
}

namespace {

ExperimentPlan parse_plan_object(const json& root) {
  check_keys(root,
             {"model", "algorithms", "steps", "replications", "init_scale", "metrics",
              "checkpoints", "seed", "out_dir"},
             "plan");

  ExperimentPlan p;
  if (!root.contains("model") || !root["model"].is_object())
    throw config_error("plan: missing model object");
  const json& jm = root["model"];
  check_keys(jm,
             {"name", "dim", "theta_star", "p", "noise_sd", "correlated_features",
              "sphere_center", "sphere_radius", "sphere_delta", "data_path",
              "holdout_fraction"},
             "model");
  p.model.name = jm.value("name", std::string());
  p.model.dim = jm.value("dim", 0);
  if (jm.contains("theta_star")) p.model.theta_star = parse_vec(jm["theta_star"], "theta_star");
  p.model.p = jm.value("p", 1.5);
  p.model.noise_sd = jm.value("noise_sd", 1.0);
  p.model.correlated_features = jm.value("correlated_features", false);
  if (jm.contains("sphere_center"))
    p.model.sphere_center = parse_vec(jm["sphere_center"], "sphere_center");
  p.model.sphere_radius = jm.value("sphere_radius", 2.0);
  p.model.sphere_delta = jm.value("sphere_delta", 0.2);
  p.model.data_path = jm.value("data_path", std::string());
  p.model.holdout_fraction = jm.value("holdout_fraction", 0.0);

  if (!root.contains("algorithms") || !root["algorithms"].is_array())
    throw config_error("plan: missing algorithms array");
  for (const auto& ja : root["algorithms"]) {
    if (!ja.is_object()) throw config_error("plan: algorithm entries must be objects");
    check_keys(ja,
               {"name", "label", "c_nu", "nu", "c_gamma", "gamma", "c_beta", "beta",
                "c_beta_prime", "beta_prime", "tau", "tau_prime", "c_eta", "eta", "probe"},
               "algorithm");
    AlgorithmSpec a;
    a.name = ja.value("name", std::string());
    a.label = ja.value("label", a.name);
    parse_opt_double(ja, "c_nu", a.c_nu);
    parse_opt_double(ja, "nu", a.nu);
    parse_opt_double(ja, "c_gamma", a.c_gamma);
    parse_opt_double(ja, "gamma", a.gamma);
    parse_opt_double(ja, "c_beta", a.c_beta);
    parse_opt_double(ja, "beta", a.beta);
    parse_opt_double(ja, "c_beta_prime", a.c_beta_prime);
    parse_opt_double(ja, "beta_prime", a.beta_prime);
    parse_opt_double(ja, "tau", a.tau);
    parse_opt_double(ja, "tau_prime", a.tau_prime);
    parse_opt_double(ja, "c_eta", a.c_eta);
    parse_opt_double(ja, "eta", a.eta);
    if (ja.contains("probe")) a.probe = ja["probe"].get<std::string>();
    p.algorithms.push_back(std::move(a));
  }

  p.steps = root.value("steps", std::int64_t{10000});
  p.replications = root.value("replications", 1);
  p.init_scale = root.value("init_scale", 1.0);
  if (root.contains("metrics")) {
    for (const auto& m : root["metrics"]) p.metrics.push_back(metric_from_name(m.get<std::string>()));
  }
  p.checkpoints = root.value("checkpoints", 50);
  p.seed = root.value("seed", std::uint64_t{42});
  p.out_dir = root.value("out_dir", std::string("."));
  return p;
}

}  // namespace

ExperimentPlan load_plan(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open plan file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_plan(ss.str());
}

namespace {

// --------------------------------------------------------------------------
// Resolution

bool model_has_riccati(const std::string& name) {
  return name == "logistic" || name == "linear" || name == "median";
}

ProbeKind probe_from_name(const std::string& name) {
  if (name == "rademacher") return ProbeKind::kRademacher;
  if (name == "scaled-sphere") return ProbeKind::kScaledSphere;
  throw config_error("unknown probe '" + name + "'");
}

ResolvedAlgorithm resolve_algorithm(const AlgorithmSpec& a) {
  ResolvedAlgorithm r;
  r.name = a.name;
  r.label = a.label.empty() ? a.name : a.label;
  r.kind = algo_kind(a.name);
  if (is_newton(r.kind)) {
    r.newton = r.kind == AlgoKind::kUsna ? NewtonOptions::usna_defaults()
                                         : NewtonOptions::uwasna_defaults();
    if (a.c_nu) r.newton.nu.c = *a.c_nu;
    if (a.nu) r.newton.nu.exponent = -*a.nu;
    if (a.c_gamma) r.newton.hess.gamma.c = *a.c_gamma;
    if (a.gamma) r.newton.hess.gamma.exponent = -*a.gamma;
    if (a.c_beta) r.newton.hess.beta.c = *a.c_beta;
    if (a.beta) r.newton.hess.beta.exponent = *a.beta;
    if (a.c_beta_prime) r.newton.hess.beta_prime.c = *a.c_beta_prime;
    if (a.beta_prime) r.newton.hess.beta_prime.exponent = *a.beta_prime;
    if (a.tau) r.newton.hess.tau = *a.tau;
    if (a.tau_prime) r.newton.tau_prime = *a.tau_prime;
    if (a.probe) r.newton.probe = probe_from_name(*a.probe);
  } else if (is_riccati(r.kind)) {
    r.riccati = RiccatiOptions::defaults();
    if (a.c_gamma) r.riccati.step.c = *a.c_gamma;
    if (a.gamma) r.riccati.step.exponent = -*a.gamma;
    if (a.tau_prime) r.riccati.tau_prime = *a.tau_prime;
  } else {
    r.first_order = r.kind == AlgoKind::kAdagrad ? FirstOrderOptions::adagrad_defaults()
                                                 : FirstOrderOptions::sgd_defaults();
    if (a.c_eta) r.first_order.eta.c = *a.c_eta;
    if (a.eta) r.first_order.eta.exponent = -*a.eta;
  }
  return r;
}

json schedule_json(const PowerSchedule& s) { return json{{"c", s.c}, {"exponent", s.exponent}}; }

json algorithm_json(const ResolvedAlgorithm& r) {
  json j{{"label", r.label}, {"name", r.name}};
  if (is_newton(r.kind)) {
    j["nu"] = schedule_json(r.newton.nu);
    j["gamma"] = schedule_json(r.newton.hess.gamma);
    j["beta"] = schedule_json(r.newton.hess.beta);
    j["beta_prime"] = schedule_json(r.newton.hess.beta_prime);
    j["tau"] = r.newton.hess.tau;
    j["tau_prime"] = r.newton.tau_prime;
    j["probe"] = r.newton.probe == ProbeKind::kRademacher ? "rademacher" : "scaled-sphere";
  } else if (is_riccati(r.kind)) {
    j["step"] = schedule_json(r.riccati.step);
    j["tau_prime"] = r.riccati.tau_prime;
  } else {
    j["eta"] = schedule_json(r.first_order.eta);
    if (r.kind == AlgoKind::kAdagrad) j["eps"] = r.first_order.adagrad_eps;
  }
  return j;
}

}  // namespace

std::vector<std::int64_t> make_checkpoints(std::int64_t n, int count) {
  if (n < 1) throw config_error("checkpoints: step count must be positive");
  if (count < 1) throw config_error("checkpoints: grid size must be positive");
  const std::int64_t lo = std::min<std::int64_t>(10, n);
  std::vector<std::int64_t> cps;
  for (int k = 0; k < count; ++k) {
    const double t = count == 1
                         ? static_cast<double>(n)
                         : static_cast<double>(lo) *
                               std::pow(static_cast<double>(n) / static_cast<double>(lo),
                                        static_cast<double>(k) / (count - 1));
    cps.push_back(std::llround(t));
  }
  cps.push_back(n);
  std::sort(cps.begin(), cps.end());
  cps.erase(std::unique(cps.begin(), cps.end()), cps.end());
  return cps;
}

std::vector<std::string> validate_plan(const ExperimentPlan& plan) {
  std::vector<std::string> errs;
  const auto& m = plan.model;
  static const std::set<std::string> kModels = {"logistic", "linear",    "median",
                                                "pmeans",   "sphere",    "quadratic"};
  if (!kModels.count(m.name)) {
    errs.push_back("unknown model '" + m.name + "'");
    return errs;
  }
  const bool file_backed = !m.data_path.empty();

  if (m.name == "sphere") {
    if (m.dim != 0 && m.dim != 4) errs.push_back("sphere: dim is fixed at 4");
    if (!m.sphere_center.empty() && m.sphere_center.size() != 3)
      errs.push_back("sphere: center must have 3 coordinates");
    if (!(m.sphere_radius > 0.0)) errs.push_back("sphere: radius must be positive");
    if (!(m.sphere_delta >= 0.0 && m.sphere_delta < 1.0))
      errs.push_back("sphere: delta must lie in [0, 1)");
  } else if (!file_backed) {
    const int min_dim = m.name == "logistic" ? 2 : 1;
    if (m.dim < min_dim)
      errs.push_back(m.name + ": dim must be at least " + std::to_string(min_dim));
  }
  if (m.name == "pmeans" && !(m.p > 1.0 && m.p <= 2.0))
    errs.push_back("pmeans: p must lie in (1, 2]");
  if (m.noise_sd < 0.0) errs.push_back("noise_sd must be non-negative");

  const bool needs_theta = (m.name == "logistic" || m.name == "linear" || m.name == "quadratic");
  if (!file_backed && needs_theta) {
    if (m.theta_star.empty())
      errs.push_back(m.name + ": theta_star is required for synthetic runs");
    else if (m.dim > 0 && static_cast<int>(m.theta_star.size()) != m.dim)
      errs.push_back(m.name + ": theta_star length disagrees with dim");
  }
  if (file_backed) {
    if (m.name != "logistic")
      errs.push_back("file-backed runs support only the logistic model");
    if (!std::filesystem::exists(m.data_path))
      errs.push_back("data file not found: " + m.data_path);
    if (!(m.holdout_fraction >= 0.0 && m.holdout_fraction < 1.0))
      errs.push_back("holdout_fraction must lie in [0, 1)");
  } else if (m.holdout_fraction != 0.0) {
    errs.push_back("holdout_fraction requires a data file");
  }

  if (plan.algorithms.empty()) errs.push_back("plan needs at least one algorithm");
  std::set<std::string> labels;
  for (const auto& a : plan.algorithms) {
    std::string label = a.label.empty() ? a.name : a.label;
    try {
      const AlgoKind kind = algo_kind(a.name);
      if (!labels.insert(label).second) errs.push_back("duplicate algorithm label '" + label + "'");
      const bool newton = is_newton(kind);
      const bool riccati = is_riccati(kind);
      if (riccati && !model_has_riccati(m.name))
        errs.push_back(label + ": model '" + m.name + "' has no Riccati factor");
      if (!newton && (a.c_nu || a.nu || a.c_beta || a.beta || a.c_beta_prime || a.beta_prime ||
                      a.tau || a.probe))
        errs.push_back(label + ": estimator hyperparameters do not apply to " + a.name);
      if ((newton || riccati) && (a.c_eta || a.eta))
        errs.push_back(label + ": eta does not apply to " + a.name);
      if (!newton && !riccati && (a.c_gamma || a.gamma || a.tau_prime))
        errs.push_back(label + ": gamma/tau_prime do not apply to " + a.name);
      if (newton) {
        ResolvedAlgorithm r = resolve_algorithm(a);
        try {
          r.newton.hess.validate_practice();
        } catch (const Error& e) {
          errs.push_back(label + ": " + e.what());
        }
        if (r.newton.nu.c <= 0.0 || r.newton.nu.exponent >= 0.0)
          errs.push_back(label + ": nu must be a positive decaying schedule");
        if (r.newton.tau_prime < 0.0) errs.push_back(label + ": tau_prime must be non-negative");
      }
    } catch (const Error& e) {
      errs.push_back(std::string(e.what()));
    }
  }

  if (plan.metrics.empty()) errs.push_back("plan needs at least one metric");
  for (Metric metric : plan.metrics) {
    if (metric == Metric::kMse && file_backed)
      errs.push_back("mse needs a known ground truth; file-backed runs have none");
    if (metric == Metric::kAccuracy && m.name != "logistic")
      errs.push_back("accuracy applies only to the logistic model");
    if (metric == Metric::kFrobInvHess) {
      if (m.name != "sphere" && m.name != "linear" && m.name != "quadratic")
        errs.push_back("frob_inv_hess needs a closed-form inverse Hessian (sphere, linear, quadratic)");
      if (m.name == "sphere" && !(m.sphere_delta > 0.0))
        errs.push_back("frob_inv_hess: sphere reference needs delta > 0");
      for (const auto& a : plan.algorithms) {
        try {
          const AlgoKind kind = algo_kind(a.name);
          if (!is_newton(kind) && !is_riccati(kind))
            errs.push_back("frob_inv_hess: algorithm '" + a.name + "' carries no curvature estimate");
        } catch (const Error&) {
          // unknown algorithm already reported
        }
      }
    }
  }

  if (plan.steps < 1) errs.push_back("steps must be positive");
  if (plan.replications < 1) errs.push_back("replications must be positive");
  if (plan.checkpoints < 2) errs.push_back("checkpoints must be at least 2");
  if (plan.init_scale < 0.0) errs.push_back("init_scale must be non-negative");
  return errs;
}

std::shared_ptr<const ResolvedSetup> resolve_plan(const ExperimentPlan& plan) {
  {
    auto errs = validate_plan(plan);
    if (!errs.empty()) {
      std::string joined = "invalid plan:";
      for (const auto& e : errs) joined += "\n  - " + e;
      throw config_error(joined);
    }
  }
  auto setup = std::make_shared<ResolvedSetup>();
  const auto& m = plan.model;

  setup->use_file = !m.data_path.empty();
  if (setup->use_file) setup->file_data = read_libsvm(m.data_path);

  int dim = m.dim;
  if (m.name == "sphere") dim = 4;
  if (setup->use_file) {
    dim = setup->file_data.feature_dim + 1;  // intercept slot
    if (m.dim != 0 && m.dim != dim)
      throw config_error("plan: dim " + std::to_string(m.dim) + " disagrees with data file (" +
                         std::to_string(dim) + ")");
  }

  if (m.name == "logistic") {
    setup->model = std::make_shared<LogisticModel>(dim);
  } else if (m.name == "linear") {
    setup->model = std::make_shared<LinearModel>(dim);
    setup->linear_correlated = m.correlated_features;
    if (m.correlated_features) {
      const SigmaConvention conv = sigma_convention(dim);
      setup->sigma_fallback_used = conv.fell_back;
      setup->linear_chol = cholesky(conv.sigma);
      setup->has_inverse_reference = true;
      setup->inverse_reference = invert(conv.sigma);
    } else {
      setup->has_inverse_reference = true;
      setup->inverse_reference = SymMat::identity(dim);
    }
  } else if (m.name == "median") {
    setup->model = std::make_shared<MedianModel>(dim);
  } else if (m.name == "pmeans") {
    setup->model = std::make_shared<PMeansModel>(dim, m.p);
  } else if (m.name == "sphere") {
    setup->model = std::make_shared<SphereModel>();
    setup->has_inverse_reference = m.sphere_delta > 0.0;
    if (setup->has_inverse_reference)
      setup->inverse_reference = sphere_true_inverse_hessian(m.sphere_delta);
  } else if (m.name == "quadratic") {
    setup->quad_h0 = SymMat::identity(dim);
    setup->model = std::make_shared<FrozenQuadraticModel>(setup->quad_h0, m.theta_star);
    setup->has_inverse_reference = true;
    setup->inverse_reference = invert(setup->quad_h0);
  }

  if (m.name == "median" || m.name == "pmeans") {
    // Data come from the covariance convention; the target of both losses is
    // the distribution's center, which is the origin.
    setup->theta_star = m.theta_star.empty() ? Vec(dim, 0.0) : m.theta_star;
    setup->init_center = Vec(dim, 0.0);
    setup->sigma_fallback_used = sigma_convention(dim).fell_back;
  } else if (m.name == "sphere") {
    Vec center = m.sphere_center.empty() ? Vec(3, 0.0) : m.sphere_center;
    setup->theta_star = center;
    setup->theta_star.push_back(m.sphere_radius);
    setup->init_center = setup->theta_star;
  } else if (setup->use_file) {
    setup->theta_star.clear();
    setup->init_center = Vec(dim, 0.0);
  } else {
    setup->theta_star = m.theta_star;
    setup->init_center = m.theta_star;
  }

  for (const auto& a : plan.algorithms) setup->algorithms.push_back(resolve_algorithm(a));

  json j;
  j["model"] = {{"name", m.name}, {"dim", dim}};
  if (!setup->theta_star.empty()) j["model"]["theta_star"] = setup->theta_star;
  if (m.name == "pmeans") j["model"]["p"] = m.p;
  if (m.name == "linear" || m.name == "quadratic") j["model"]["noise_sd"] = m.noise_sd;
  if (m.name == "linear") j["model"]["correlated_features"] = m.correlated_features;
  if (m.name == "sphere") {
    j["model"]["sphere_radius"] = m.sphere_radius;
    j["model"]["sphere_delta"] = m.sphere_delta;
  }
  if (setup->use_file) {
    j["model"]["data_path"] = m.data_path;
    j["model"]["holdout_fraction"] = m.holdout_fraction;
    j["model"]["rows"] = setup->file_data.size();
  }
  j["algorithms"] = json::array();
  for (const auto& r : setup->algorithms) j["algorithms"].push_back(algorithm_json(r));
  j["steps"] = plan.steps;
  j["replications"] = plan.replications;
  j["init_scale"] = plan.init_scale;
  j["metrics"] = json::array();
  for (Metric metric : plan.metrics) j["metrics"].push_back(metric_name(metric));
  j["seed"] = plan.seed;
  setup->resolved_json = j.dump(2);
  return setup;
}

namespace {

// --------------------------------------------------------------------------
// Replication runner

struct Runner {
  const ResolvedAlgorithm* cfg = nullptr;
  NewtonState ns;
  RiccatiState rs;
  FirstOrderState fs;
  RngStream probe_rng{0};
  RngStream noise_rng{0};

  Runner(const ResolvedAlgorithm& c, const Vec& theta0, std::uint64_t rep_root, int slot)
      : cfg(&c),
        probe_rng(rep_root, stream::kProbeBase + static_cast<std::uint64_t>(slot)),
        noise_rng(rep_root, stream::kNoiseBase + static_cast<std::uint64_t>(slot)) {
    if (is_newton(c.kind)) {
      ns = make_newton_state(theta0, c.newton);
    } else if (is_riccati(c.kind)) {
      rs = make_riccati_state(theta0, c.riccati);
    } else {
      fs = make_first_order_state(theta0);
    }
  }

  void step(const Model& model, const Sample& s) {
    switch (cfg->kind) {
      case AlgoKind::kUsna: usna_step(ns, cfg->newton, model, s, probe_rng); break;
      case AlgoKind::kUwasna: uwasna_step(ns, cfg->newton, model, s, probe_rng); break;
      case AlgoKind::kSna: sna_step(rs, model, s, noise_rng); break;
      case AlgoKind::kWasna: wasna_step(rs, cfg->riccati, model, s, noise_rng); break;
      case AlgoKind::kSgd: sgd_step(fs, cfg->first_order, model, s); break;
      case AlgoKind::kAsgd: asgd_step(fs, cfg->first_order, model, s); break;
      case AlgoKind::kAdagrad: adagrad_step(fs, cfg->first_order, model, s); break;
    }
  }

  // The algorithm's reported parameter: the averaged iterate for averaged
  // variants, the raw iterate otherwise.
  const Vec& output() const {
    switch (cfg->kind) {
      case AlgoKind::kUwasna: return ns.theta_avg;
      case AlgoKind::kUsna: return ns.theta;
      case AlgoKind::kWasna: return rs.theta_avg;
      case AlgoKind::kSna: return rs.theta;
      case AlgoKind::kAsgd: return fs.theta_avg;
      default: return fs.theta;
    }
  }

  // Curvature estimate, as an inverse-Hessian-scale matrix. The running
  // rank-one inverse counts n terms, so it is rescaled by the step count.
  bool inverse_estimate(std::int64_t n_now, SymMat& out) const {
    switch (cfg->kind) {
      case AlgoKind::kUsna: out = ns.inv.estimate; return true;
      case AlgoKind::kUwasna: out = ns.inv.averaged; return true;
      case AlgoKind::kSna:
      case AlgoKind::kWasna:
        out = rs.s_inv;
        out.scale(static_cast<double>(n_now));
        return true;
      default: return false;
    }
  }

  std::int64_t truncation_hits() const { return is_newton(cfg->kind) ? ns.inv.truncation_hits : 0; }
  std::int64_t projection_hits() const { return is_newton(cfg->kind) ? ns.inv.projection_hits : 0; }
  std::int64_t singular_events() const {
    if (is_newton(cfg->kind)) return ns.singular_events;
    if (is_riccati(cfg->kind)) return rs.singular_events;
    return fs.singular_events;
  }
};

Dataset synthesize(const ExperimentPlan& plan, const ResolvedSetup& setup, RngStream& rng) {
  const auto& m = plan.model;
  const std::size_t n = static_cast<std::size_t>(plan.steps);
  if (m.name == "logistic") return gen_logistic(setup.theta_star, n, rng);
  if (m.name == "linear")
    return gen_linear(setup.theta_star, m.noise_sd, n, rng,
                      setup.linear_correlated ? &setup.linear_chol : nullptr);
  if (m.name == "median" || m.name == "pmeans")
    return gen_gaussian_cov(setup.model->param_dim(), n, rng);
  if (m.name == "sphere") {
    Vec center(setup.theta_star.begin(), setup.theta_star.begin() + 3);
    return gen_sphere(center, m.sphere_radius, m.sphere_delta, n, rng);
  }
  // quadratic: rows are pure gradient noise
  Dataset d;
  d.feature_dim = setup.model->param_dim();
  d.source = "quadratic-noise";
  d.features.resize(n * static_cast<std::size_t>(d.feature_dim));
  for (double& v : d.features) v = m.noise_sd * rng.normal();
  return d;
}

double logistic_accuracy(const Vec& theta, const Dataset& data) {
  if (data.size() == 0) return std::numeric_limits<double>::quiet_NaN();
  std::size_t hits = 0;
  for (std::size_t r = 0; r < data.size(); ++r) {
    const Sample s = data.sample(r);
    double t = theta[0];
    for (std::size_t i = 0; i < s.x.size(); ++i) t += s.x[i] * theta[i + 1];
    const bool predicted = t > 0.0;  // sigmoid(t) > 1/2
    if (predicted == (s.y == 1.0)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

}  // namespace

ReplicationResult run_replication(const ExperimentPlan& plan, const ResolvedSetup& setup,
                                  int rep, const std::vector<std::int64_t>& checkpoints) {
  ReplicationResult out;
  const std::size_t n_algos = setup.algorithms.size();
  const std::size_t n_metrics = plan.metrics.size();
  out.values.assign(n_algos, std::vector<std::vector<double>>(
                                 n_metrics, std::vector<double>(checkpoints.size(), 0.0)));

  const std::uint64_t rep_root = derive_seed(plan.seed, static_cast<std::uint64_t>(rep));
  try {
    Dataset data;
    Dataset holdout;
    if (setup.use_file) {
      const std::uint64_t split_seed = derive_seed(rep_root, stream::kSplit);
      auto parts = split(setup.file_data, plan.model.holdout_fraction, split_seed);
      holdout = std::move(parts.first);
      data = std::move(parts.second);
    } else {
      RngStream data_rng(rep_root, stream::kData);
      data = synthesize(plan, setup, data_rng);
    }
    const std::int64_t n_steps =
        std::min<std::int64_t>(plan.steps, static_cast<std::int64_t>(data.size()));
    if (!checkpoints.empty() && checkpoints.back() > n_steps)
      throw config_error("replication: checkpoint grid exceeds available samples");

    RngStream init_rng(rep_root, stream::kInit);
    Vec theta0 = setup.init_center;
    for (double& v : theta0) v += plan.init_scale * init_rng.normal();

    for (std::size_t a = 0; a < n_algos; ++a) {
      Runner runner(setup.algorithms[a], theta0, rep_root, static_cast<int>(a));
      std::size_t ci = 0;
      for (std::int64_t k = 0; k < n_steps; ++k) {
        runner.step(*setup.model, data.sample(static_cast<std::size_t>(k)));
        while (ci < checkpoints.size() && checkpoints[ci] == k + 1) {
          const Vec& theta_out = runner.output();
          if (has_non_finite(theta_out))
            throw numeric_error("non-finite iterate at step " + std::to_string(k + 1));
          for (std::size_t mi = 0; mi < n_metrics; ++mi) {
            double value = 0.0;
            switch (plan.metrics[mi]) {
              case Metric::kMse: {
                Vec diff = sub(theta_out, setup.theta_star);
                value = norm2_squared(diff);
                break;
              }
              case Metric::kFrobInvHess: {
                SymMat est;
                runner.inverse_estimate(k + 1, est);
                add_scaled(est, -1.0, setup.inverse_reference);
                value = frobenius_norm(est);
                break;
              }
              case Metric::kAccuracy: {
                const Dataset& eval = holdout.size() > 0 ? holdout : data;
                value = logistic_accuracy(theta_out, eval);
                break;
              }
            }
            if (!std::isfinite(value))
              throw numeric_error("non-finite metric at step " + std::to_string(k + 1));
            out.values[a][mi][ci] = value;
          }
          ++ci;
        }
      }
      out.truncation_hits += runner.truncation_hits();
      out.projection_hits += runner.projection_hits();
      out.singular_events += runner.singular_events();
    }
  } catch (const Error& e) {
    out.failed = true;
    out.failure = "replication " + std::to_string(rep) + ": " + e.what();
    out.values.clear();
  }
  return out;
}

RunRecord run_experiment(const ExperimentPlan& plan, int jobs) {
  const auto start = std::chrono::steady_clock::now();
  auto setup = resolve_plan(plan);

  std::int64_t effective_n = plan.steps;
  if (setup->use_file) {
    const std::size_t rows = setup->file_data.size();
    const std::size_t head = static_cast<std::size_t>(
        std::llround(plan.model.holdout_fraction * static_cast<double>(rows)));
    effective_n = std::min<std::int64_t>(plan.steps, static_cast<std::int64_t>(rows - head));
    if (effective_n < 1) throw config_error("plan: no training rows after the holdout split");
  }

  RunRecord rec;
  rec.checkpoints = make_checkpoints(effective_n, plan.checkpoints);
  for (const auto& a : setup->algorithms) rec.algorithm_labels.push_back(a.label);
  rec.metrics = plan.metrics;
  rec.replications = plan.replications;
  rec.sigma_fell_back = setup->sigma_fallback_used;
  rec.resolved_config_json = setup->resolved_json;

  const int n_reps = plan.replications;
  std::vector<ReplicationResult> results(static_cast<std::size_t>(n_reps));
  const int workers = std::max(1, std::min(jobs, n_reps));
  if (workers == 1) {
    for (int r = 0; r < n_reps; ++r)
      results[static_cast<std::size_t>(r)] = run_replication(plan, *setup, r, rec.checkpoints);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (;;) {
          const int r = next.fetch_add(1);
          if (r >= n_reps) return;
          results[static_cast<std::size_t>(r)] = run_replication(plan, *setup, r, rec.checkpoints);
        }
      });
    }
    for (auto& t : pool) t.join();
  }

  // Fixed-order reduction: replication index order, independent of thread
  // scheduling.
  const std::size_t n_algos = setup->algorithms.size();
  const std::size_t n_metrics = plan.metrics.size();
  const std::size_t n_cps = rec.checkpoints.size();
  std::vector<const ReplicationResult*> ok;
  for (const auto& r : results) {
    if (r.failed) {
      ++rec.failed_replications;
      rec.failure_messages.push_back(r.failure);
    } else {
      ok.push_back(&r);
    }
    rec.truncation_hits += r.truncation_hits;
    rec.projection_hits += r.projection_hits;
    rec.singular_events += r.singular_events;
  }

  rec.curves.assign(n_algos * n_metrics, Curve{});
  if (!ok.empty()) {
    const double cnt = static_cast<double>(ok.size());
    for (std::size_t a = 0; a < n_algos; ++a) {
      for (std::size_t mi = 0; mi < n_metrics; ++mi) {
        Curve& c = rec.curves[a * n_metrics + mi];
        c.mean.assign(n_cps, 0.0);
        c.std_error.assign(n_cps, 0.0);
        for (std::size_t ci = 0; ci < n_cps; ++ci) {
          double mean = 0.0;
          for (const auto* r : ok) mean += r->values[a][mi][ci];
          mean /= cnt;
          double ss = 0.0;
          for (const auto* r : ok) {
            const double d = r->values[a][mi][ci] - mean;
            ss += d * d;
          }
          c.mean[ci] = mean;
          c.std_error[ci] = ok.size() > 1 ? std::sqrt(ss / (cnt - 1.0)) / std::sqrt(cnt) : 0.0;
        }
      }
    }
  }

  rec.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

void emit_csv(const RunRecord& record, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw io_error("cannot open " + path + " for writing");
  std::fputs("step,algorithm,metric,mean,stderr\n", f);
  const bool have_data = !record.curves.empty() && !record.curves.front().mean.empty();
  if (have_data) {
    for (std::size_t ci = 0; ci < record.checkpoints.size(); ++ci) {
      for (std::size_t a = 0; a < record.algorithm_labels.size(); ++a) {
        for (std::size_t mi = 0; mi < record.metrics.size(); ++mi) {
          const Curve& c = record.curve(a, mi);
          std::fprintf(f, "%lld,%s,%s,%.17g,%.17g\n",
                       static_cast<long long>(record.checkpoints[ci]),
                       record.algorithm_labels[a].c_str(),
                       metric_name(record.metrics[mi]).c_str(), c.mean[ci], c.std_error[ci]);
        }
      }
    }
  }
  if (std::fclose(f) != 0) throw io_error("write failed for " + path);
}

namespace {

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#e377c2"};

}  // namespace

void emit_svg(const RunRecord& record, const std::string& path) {
  const int width = 760;
  const int panel_h = 300;
  const int margin_l = 70, margin_r = 30, margin_t = 40, margin_b = 50;
  const std::size_t n_metrics = record.metrics.size();
  const int height = margin_t + static_cast<int>(n_metrics) * (panel_h + margin_b);

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  svg << "<rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";

  const bool have_data = !record.curves.empty() && !record.curves.front().mean.empty();
  for (std::size_t mi = 0; mi < n_metrics; ++mi) {
    const int top = margin_t + static_cast<int>(mi) * (panel_h + margin_b);
    const int plot_w = width - margin_l - margin_r;
    const double x0 = margin_l, y0 = top + panel_h;

    // Log ranges over finite positive values.
    double lo_x = static_cast<double>(record.checkpoints.empty() ? 1 : record.checkpoints.front());
    double hi_x = static_cast<double>(record.checkpoints.empty() ? 10 : record.checkpoints.back());
    double lo_y = 1e300, hi_y = -1e300;
    if (have_data) {
      for (std::size_t a = 0; a < record.algorithm_labels.size(); ++a) {
        for (double v : record.curve(a, mi).mean) {
          if (std::isfinite(v) && v > 0.0) {
            lo_y = std::min(lo_y, v);
            hi_y = std::max(hi_y, v);
          }
        }
      }
    }
    if (lo_y > hi_y) {
      lo_y = 0.1;
      hi_y = 10.0;
    }
    if (lo_y == hi_y) {
      lo_y *= 0.5;
      hi_y *= 2.0;
    }
    const double lx0 = std::log10(lo_x), lx1 = std::log10(std::max(hi_x, lo_x * 1.0001));
    const double ly0 = std::log10(lo_y), ly1 = std::log10(hi_y);
    auto px = [&](double step) {
      return x0 + (std::log10(step) - lx0) / (lx1 - lx0) * plot_w;
    };
    auto py = [&](double v) {
      return y0 - (std::log10(v) - ly0) / (ly1 - ly0) * panel_h;
    };

    svg << "<rect x=\"" << margin_l << "\" y=\"" << top << "\" width=\"" << plot_w
        << "\" height=\"" << panel_h
        << "\" fill=\"none\" stroke=\"#444444\" stroke-width=\"1\"/>\n";

    // Decade grid and tick labels.
    for (int e = static_cast<int>(std::ceil(lx0)); e <= static_cast<int>(std::floor(lx1)); ++e) {
      const double x = px(std::pow(10.0, e));
      svg << "<line x1=\"" << x << "\" y1=\"" << top << "\" x2=\"" << x << "\" y2=\"" << y0
          << "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
      svg << "<text x=\"" << x << "\" y=\"" << y0 + 18
          << "\" font-size=\"11\" text-anchor=\"middle\" fill=\"#333333\">1e" << e << "</text>\n";
    }
    for (int e = static_cast<int>(std::ceil(ly0)); e <= static_cast<int>(std::floor(ly1)); ++e) {
      const double y = py(std::pow(10.0, e));
      svg << "<line x1=\"" << margin_l << "\" y1=\"" << y << "\" x2=\"" << margin_l + plot_w
          << "\" y2=\"" << y << "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
      svg << "<text x=\"" << margin_l - 6 << "\" y=\"" << y + 4
          << "\" font-size=\"11\" text-anchor=\"end\" fill=\"#333333\">1e" << e << "</text>\n";
    }
    svg << "<text x=\"" << margin_l + plot_w / 2 << "\" y=\"" << y0 + 36
        << "\" font-size=\"13\" text-anchor=\"middle\" fill=\"#000000\">steps</text>\n";
    svg << "<text x=\"18\" y=\"" << top + panel_h / 2
        << "\" font-size=\"13\" text-anchor=\"middle\" fill=\"#000000\" transform=\"rotate(-90 18 "
        << top + panel_h / 2 << ")\">" << xml_escape(metric_name(record.metrics[mi]))
        << "</text>\n";

    if (have_data) {
      for (std::size_t a = 0; a < record.algorithm_labels.size(); ++a) {
        const Curve& c = record.curve(a, mi);
        std::ostringstream pts;
        for (std::size_t ci = 0; ci < record.checkpoints.size(); ++ci) {
          const double v = c.mean[ci];
          if (!std::isfinite(v) || v <= 0.0) continue;
          pts << px(static_cast<double>(record.checkpoints[ci])) << ","
              << std::max(static_cast<double>(top), std::min(y0, py(v))) << " ";
        }
        const char* color = kPalette[a % (sizeof(kPalette) / sizeof(kPalette[0]))];
        svg << "<polyline points=\"" << pts.str() << "\" fill=\"none\" stroke=\"" << color
            << "\" stroke-width=\"1.6\"/>\n";
      }
      // Legend, top-right of the panel.
      for (std::size_t a = 0; a < record.algorithm_labels.size(); ++a) {
        const char* color = kPalette[a % (sizeof(kPalette) / sizeof(kPalette[0]))];
        const int ly = top + 16 + static_cast<int>(a) * 16;
        const int lx = margin_l + plot_w - 150;
        svg << "<line x1=\"" << lx << "\" y1=\"" << ly - 4 << "\" x2=\"" << lx + 22 << "\" y2=\""
            << ly - 4 << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        svg << "<text x=\"" << lx + 28 << "\" y=\"" << ly
            << "\" font-size=\"12\" fill=\"#000000\">" << xml_escape(record.algorithm_labels[a])
            << "</text>\n";
      }
    } else {
      svg << "<text x=\"" << margin_l + plot_w / 2 << "\" y=\"" << top + panel_h / 2
          << "\" font-size=\"13\" text-anchor=\"middle\" fill=\"#888888\">no successful"
             " replications</text>\n";
    }
  }
  svg << "</svg>\n";

  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot open " + path + " for writing");
  out << svg.str();
  if (!out) throw io_error("write failed for " + path);
}

void emit_record_json(const RunRecord& record, const ExperimentPlan& plan,
                      const std::string& path) {
  json j;
  j["resolved"] = json::parse(record.resolved_config_json);
  j["checkpoints"] = record.checkpoints;
  j["counters"] = {{"truncation_hits", record.truncation_hits},
                   {"projection_hits", record.projection_hits},
                   {"singular_events", record.singular_events}};
  j["replications"] = record.replications;
  j["failed_replications"] = record.failed_replications;
  j["failures"] = record.failure_messages;
  j["sigma_fell_back"] = record.sigma_fell_back;
  j["wall_clock_seconds"] = record.wall_clock_seconds;
  j["out_dir"] = plan.out_dir;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot open " + path + " for writing");
  out << j.dump(2) << "\n";
  if (!out) throw io_error("write failed for " + path);
}

}  // namespace osn

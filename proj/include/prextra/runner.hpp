#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "prextra/algorithms.hpp"
#include "prextra/io.hpp"
#include "prextra/metrics.hpp"
#include "prextra/network.hpp"
#include "prextra/oracles.hpp"
#include "prextra/problems.hpp"
#include "prextra/stiefel.hpp"
#include "prextra/tangent_prox.hpp"

namespace prextra {

using json = nlohmann::ordered_json;

enum class AlgorithmKind { PrExtra, PgExtra, Drsm };

inline std::string to_string(AlgorithmKind a) {
  switch (a) {
    case AlgorithmKind::PrExtra: return "PR-EXTRA";
    case AlgorithmKind::PgExtra: return "PG-EXTRA";
    case AlgorithmKind::Drsm: return "DRSM";
  }
  return "?";
}

/// Tag written in the `algorithm` CSV column.
inline std::string algorithm_label(AlgorithmKind a) {
  return a == AlgorithmKind::Drsm ? "DRSM (reconstructed)" : to_string(a);
}

struct GraphConfig {
  double p = 0.6;
  /// Overrides the seed derived from the master seed.
  std::optional<std::uint64_t> seed;
  /// Load W from a weight file instead of sampling a graph.
  std::string weights_file;
};

/// Everything needed to reproduce one simulation. Defaults give the SPCA
/// experiment: 8 nodes on ER(0.6), A in R^{8000 x 10} with spectrum 0.8^j,
/// r = 5, lambda = 1e-3, alpha = tau = 1e-3, 3000 iterations.
struct RunConfig {
  ProblemKind problem = ProblemKind::SPCA;
  std::string data_path;
  std::size_t n = 8;
  std::size_t d = 10;
  std::size_t r = 5;
  std::size_t m = 8000;
  double xi = 0.8;
  std::optional<double> lambda;
  GraphConfig graph;
  AlgorithmKind algorithm = AlgorithmKind::PrExtra;
  double alpha = 1e-3;
  double tau = 1e-3;
  double drsm_beta0 = 1.0;
  std::size_t max_iters = 3000;
  double eps_cons = 1e-12;
  std::size_t metric_every = 1;
  std::string output_dir;
  std::uint64_t seed = 1;
  double subproblem_tol = 1e-10;
  bool warm_start = false;

  double effective_lambda() const {
    if (lambda) return *lambda;
    switch (problem) {
      case ProblemKind::SPCA: return 1e-3;
      case ProblemKind::CISE: return 1e-2;
      case ProblemKind::Quadratic: return 1e-2;
    }
    return 0.0;
  }
  std::uint64_t graph_seed() const { return graph.seed ? *graph.seed : seed + 1; }
  std::uint64_t data_seed() const { return seed + 2; }
  std::uint64_t init_seed() const { return seed + 3; }

  AlgorithmConfig algorithm_config() const {
    AlgorithmConfig a;
    a.alpha = alpha;
    a.tau = tau;
    a.max_iters = max_iters;
    a.eps_cons = eps_cons;
    a.subproblem_tol = subproblem_tol;
    a.warm_start = warm_start;
    a.drsm_beta0 = drsm_beta0;
    return a;
  }

  void validate() const {
    if (n < 1) throw ConfigError("n must be >= 1");
    if (r < 1 || r > d) throw ConfigError("requires 1 <= r <= d");
    if (data_path.empty() && m < d) throw ConfigError("requires m >= d");
    if (!(xi > 0.0 && xi <= 1.0)) throw ConfigError("xi must lie in (0, 1]");
    if (metric_every < 1) throw ConfigError("metric_every must be >= 1");
    if (algorithm == AlgorithmKind::PgExtra && problem != ProblemKind::Quadratic)
      throw ConfigError("PG-EXTRA is Euclidean and requires problem QUADRATIC");
    algorithm_config().validate();
    (void)RegularizerSpec::make(RegKind::L1, effective_lambda());
  }
};

// ---------------------------------------------------------------------------
// JSON schema

namespace detail {

template <typename T>
T take(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

inline void reject_unknown(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) throw ConfigError(where + ": unknown key '" + it.key() + "'");
  }
}

inline ProblemKind parse_problem(const std::string& s) {
  if (s == "SPCA") return ProblemKind::SPCA;
  if (s == "CISE") return ProblemKind::CISE;
  if (s == "QUADRATIC") return ProblemKind::Quadratic;
  throw ConfigError("unknown problem '" + s + "' (expected SPCA, CISE or QUADRATIC)");
}

inline AlgorithmKind parse_algorithm(const std::string& s) {
  if (s == "PR-EXTRA") return AlgorithmKind::PrExtra;
  if (s == "PG-EXTRA") return AlgorithmKind::PgExtra;
  if (s == "DRSM") return AlgorithmKind::Drsm;
  throw ConfigError("unknown algorithm '" + s + "' (expected PR-EXTRA, PG-EXTRA or DRSM)");
}

}  // namespace detail

inline RunConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  detail::reject_unknown(j,
                         {"problem", "data_path", "n", "d", "r", "m", "xi", "lambda", "graph", "algorithm", "alpha",
                          "tau", "drsm_beta0", "max_iters", "eps_cons", "metric_every", "output_dir", "seed",
                          "subproblem_tol", "warm_start"},
                         "config");
  RunConfig c;
  try {
    if (j.contains("problem")) c.problem = detail::parse_problem(j.at("problem").get<std::string>());
    c.data_path = detail::take<std::string>(j, "data_path", c.data_path);
    c.n = detail::take<std::size_t>(j, "n", c.n);
    c.d = detail::take<std::size_t>(j, "d", c.d);
    c.r = detail::take<std::size_t>(j, "r", c.r);
    c.m = detail::take<std::size_t>(j, "m", c.m);
    c.xi = detail::take<double>(j, "xi", c.xi);
    if (j.contains("lambda")) c.lambda = j.at("lambda").get<double>();
    if (j.contains("graph")) {
      const json& g = j.at("graph");
      if (!g.is_object()) throw ConfigError("config.graph: expected an object");
      detail::reject_unknown(g, {"p", "seed", "weights_file"}, "config.graph");
      c.graph.p = detail::take<double>(g, "p", c.graph.p);
      if (g.contains("seed")) c.graph.seed = g.at("seed").get<std::uint64_t>();
      c.graph.weights_file = detail::take<std::string>(g, "weights_file", "");
    }
    if (j.contains("algorithm")) c.algorithm = detail::parse_algorithm(j.at("algorithm").get<std::string>());
    c.alpha = detail::take<double>(j, "alpha", c.alpha);
    c.tau = detail::take<double>(j, "tau", c.tau);
    c.drsm_beta0 = detail::take<double>(j, "drsm_beta0", c.drsm_beta0);
    c.max_iters = detail::take<std::size_t>(j, "max_iters", c.max_iters);
    c.eps_cons = detail::take<double>(j, "eps_cons", c.eps_cons);
    c.metric_every = detail::take<std::size_t>(j, "metric_every", c.metric_every);
    c.output_dir = detail::take<std::string>(j, "output_dir", c.output_dir);
    c.seed = detail::take<std::uint64_t>(j, "seed", c.seed);
    c.subproblem_tol = detail::take<double>(j, "subproblem_tol", c.subproblem_tol);
    c.warm_start = detail::take<bool>(j, "warm_start", c.warm_start);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config '" + path + "': " + e.what());
  }
  return config_from_json(j);
}

inline json to_json(const RunConfig& c) {
  json g = {{"p", c.graph.p}};
  if (c.graph.seed) g["seed"] = *c.graph.seed;
  if (!c.graph.weights_file.empty()) g["weights_file"] = c.graph.weights_file;
  json j = {{"problem", to_string(c.problem)}};
  if (!c.data_path.empty()) j["data_path"] = c.data_path;
  j["n"] = c.n;
  j["d"] = c.d;
  j["r"] = c.r;
  j["m"] = c.m;
  j["xi"] = c.xi;
  j["lambda"] = c.effective_lambda();
  j["graph"] = g;
  j["algorithm"] = to_string(c.algorithm);
  j["alpha"] = c.alpha;
  j["tau"] = c.tau;
  j["drsm_beta0"] = c.drsm_beta0;
  j["max_iters"] = c.max_iters;
  j["eps_cons"] = c.eps_cons;
  j["metric_every"] = c.metric_every;
  j["output_dir"] = c.output_dir;
  j["seed"] = c.seed;
  j["subproblem_tol"] = c.subproblem_tol;
  j["warm_start"] = c.warm_start;
  return j;
}

inline SpectralRecipe recipe_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("recipe: expected a JSON object");
  detail::reject_unknown(j, {"m", "d", "xi", "exponent", "seed"}, "recipe");
  SpectralRecipe rc;
  try {
    rc.m = detail::take<std::size_t>(j, "m", rc.m);
    rc.d = detail::take<std::size_t>(j, "d", rc.d);
    rc.xi = detail::take<double>(j, "xi", rc.xi);
    rc.seed = detail::take<std::uint64_t>(j, "seed", rc.seed);
    const auto e = detail::take<std::string>(j, "exponent", "geometric");
    if (e == "geometric")
      rc.exponent_kind = SpectrumKind::Geometric;
    else if (e == "half-geometric")
      rc.exponent_kind = SpectrumKind::HalfGeometric;
    else
      throw ConfigError("recipe: exponent must be 'geometric' or 'half-geometric'");
  } catch (const json::exception& e) {
    throw ConfigError(std::string("recipe: ") + e.what());
  }
  return rc;
}

// ---------------------------------------------------------------------------
// Instance construction

struct Network {
  Graph graph;
  MixingMatrix mixing;
};

inline Network build_network(const RunConfig& c) {
  Network net;
  if (!c.graph.weights_file.empty()) {
    auto wf = io::read_weights(c.graph.weights_file);
    if (wf.mixing.size() != c.n) throw ConfigError("weights file node count differs from n");
    net.graph = std::move(wf.graph);
    net.mixing = std::move(wf.mixing);
  } else {
    net.graph = generate_er_graph(c.n, c.graph.p, c.graph_seed());
    net.mixing = metropolis_weights(net.graph);
  }
  return net;
}

inline SpectralRecipe data_recipe(const RunConfig& c) {
  SpectralRecipe rc;
  rc.m = c.m;
  rc.d = c.d;
  rc.xi = c.xi;
  rc.exponent_kind = c.problem == ProblemKind::CISE ? SpectrumKind::HalfGeometric : SpectrumKind::Geometric;
  rc.seed = c.data_seed();
  return rc;
}

inline ProblemInstance build_problem(const RunConfig& c) {
  Matrix a = c.data_path.empty() ? synthesize(data_recipe(c)) : io::read_matrix(c.data_path);
  if (static_cast<std::size_t>(a.cols()) != c.d) throw ConfigError("data has " + std::to_string(a.cols()) + " columns, d = " + std::to_string(c.d));
  const auto blocks = partition(a, c.n);
  const auto r = static_cast<Eigen::Index>(c.r);
  switch (c.problem) {
    case ProblemKind::SPCA: return make_spca_instance(blocks, r, c.effective_lambda());
    case ProblemKind::CISE: return make_cise_instance(blocks, r, c.effective_lambda());
    case ProblemKind::Quadratic: {
      std::mt19937_64 rng(c.data_seed() ^ 0x9E3779B97F4A7C15ULL);
      std::vector<Matrix> targets;
      for (const auto& b : blocks) targets.push_back(gaussian_matrix(b.rows(), r, rng));
      return make_quadratic_instance(blocks, targets, c.effective_lambda());
    }
  }
  throw ConfigError("unsupported problem");
}

/// x0 = P_M(G) for a seeded Gaussian d x r matrix G.
inline StiefelPoint initial_point(const RunConfig& c) {
  std::mt19937_64 rng(c.init_seed());
  return project_to_manifold(gaussian_matrix(static_cast<Eigen::Index>(c.d), static_cast<Eigen::Index>(c.r), rng));
}

// ---------------------------------------------------------------------------
// Simulation

enum class Termination { MaxIterations, ConsensusThreshold, Failed };

inline std::string to_string(Termination t) {
  switch (t) {
    case Termination::MaxIterations: return "max-iterations";
    case Termination::ConsensusThreshold: return "consensus-threshold";
    case Termination::Failed: return "error";
  }
  return "?";
}

struct RunResult {
  RunConfig config;
  std::vector<TrajectoryRecord> records;
  Termination termination = Termination::MaxIterations;
  std::string error;
  std::size_t iterations = 0;
  double average_degree = 0.0;
  double spectral_gap_value = 0.0;
  std::uint64_t graph_sample_seed = 0;
  double initial_consensus = 0.0;
  double max_feasibility_residual = 0.0;  // over every x_{i,k}, y_{i,k}
  double lemma4_bound = 0.0;
  double max_eta = 0.0;
  std::size_t lemma4_violations = 0;
  bool subproblem_fallback_used = false;
  std::size_t kkt_unconverged = 0;
  std::string trajectory_path;
  std::string summary_path;
};

namespace detail {

template <typename Manifold>
TrajectoryRecord measure(const ProblemInstance& inst, const MixingMatrix& mix, const std::vector<Matrix>& xs,
                         std::size_t k) {
  TrajectoryRecord rec;
  rec.k = k;
  rec.phi = consensus_potential(xs, mix);
  try {
    const Matrix xbar = manifold_mean<Manifold>(xs);
    rec.consensus = consensus_error_about(xs, xbar);
    const KktResult kkt = kkt_violation<Manifold>(inst, xbar);
    rec.kkt = kkt.value;
    rec.kkt_converged = kkt.converged;
    rec.objective = composite_objective(inst, xbar);
    rec.grad_norm = Manifold::tangent(xbar, global_euclidean_gradient(inst, xbar)).norm();
  } catch (const RankDeficient&) {
    // recorded as a gap
  }
  return rec;
}

inline std::vector<Matrix> matrices(const std::vector<StiefelPoint>& xs) {
  std::vector<Matrix> out;
  out.reserve(xs.size());
  for (const auto& x : xs) out.push_back(x.matrix());
  return out;
}

}  // namespace detail

/// Runs the configured algorithm in memory. Record k holds the metrics of
/// x_{k+1}, the iterate produced by iteration k; iterations stop after
/// max_iters or once a recorded consensus error falls below eps_cons.
/// Failures end the run with Termination::Failed and the message in `error`.
inline RunResult simulate(const RunConfig& cfg) {
  cfg.validate();
  RunResult res;
  res.config = cfg;
  const auto start = std::chrono::steady_clock::now();
  auto elapsed_ms = [&] {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  };

  try {
    const Network net = build_network(cfg);
    const ProblemInstance inst = build_problem(cfg);
    const AlgorithmConfig acfg = cfg.algorithm_config();
    res.average_degree = net.graph.average_degree();
    res.spectral_gap_value = spectral_gap(net.mixing);
    res.graph_sample_seed = net.graph.sample_seed;
    const StiefelPoint x0 = initial_point(cfg);
    res.lemma4_bound = cfg.algorithm == AlgorithmKind::PrExtra
                           ? 2.0 * cfg.tau * lipschitz_constant(inst.reg, inst.d, inst.r)
                           : 0.0;

    auto record = [&](TrajectoryRecord rec) {
      rec.wall_ms = elapsed_ms();
      if (!rec.kkt_converged) ++res.kkt_unconverged;
      res.records.push_back(rec);
      return std::isfinite(rec.consensus) && rec.consensus < cfg.eps_cons;
    };
    auto due = [&](std::size_t k) { return k % cfg.metric_every == 0; };

    switch (cfg.algorithm) {
      case AlgorithmKind::PrExtra: {
        auto states = pr_extra_init(inst, x0, acfg);
        res.max_feasibility_residual = x0.residual();
        for (std::size_t k = 0; k < cfg.max_iters; ++k) {
          PrExtraStep step = pr_extra_step(states, net.mixing, inst, acfg, k);
          states = std::move(step.states);
          res.iterations = k + 1;
          res.max_feasibility_residual = std::max(res.max_feasibility_residual, step.max_residual);
          res.subproblem_fallback_used = res.subproblem_fallback_used || step.fallback_used;
          double eta_max = 0.0, eta_sq = 0.0;
          for (double e : step.eta_norms) {
            eta_max = std::max(eta_max, e);
            eta_sq += e * e;
            if (e > res.lemma4_bound + 1e-9) ++res.lemma4_violations;
          }
          res.max_eta = std::max(res.max_eta, eta_max);
          if (!due(k)) continue;
          std::vector<Matrix> xs;
          for (const auto& st : states) xs.push_back(st.x.matrix());
          TrajectoryRecord rec = detail::measure<Stiefel>(inst, net.mixing, xs, k);
          rec.eta_max = eta_max;
          rec.eta_sq_sum = eta_sq;
          if (record(rec)) {
            res.termination = Termination::ConsensusThreshold;
            break;
          }
        }
        break;
      }
      case AlgorithmKind::Drsm: {
        std::vector<StiefelPoint> xs(inst.n(), x0);
        res.max_feasibility_residual = x0.residual();
        for (std::size_t k = 0; k < cfg.max_iters; ++k) {
          xs = drsm_step(xs, net.mixing, inst, k, cfg.drsm_beta0);
          res.iterations = k + 1;
          for (const auto& x : xs) res.max_feasibility_residual = std::max(res.max_feasibility_residual, x.residual());
          if (!due(k)) continue;
          if (record(detail::measure<Stiefel>(inst, net.mixing, detail::matrices(xs), k))) {
            res.termination = Termination::ConsensusThreshold;
            break;
          }
        }
        break;
      }
      case AlgorithmKind::PgExtra: {
        std::vector<Matrix> start_x(inst.n(), x0.matrix());
        EuclideanExtraState st = pg_extra_decoupled_init(inst, net.mixing, start_x, cfg.alpha);
        for (std::size_t k = 0; k < cfg.max_iters; ++k) {
          st = pg_extra_decoupled_step(st, net.mixing, inst, cfg.alpha);
          res.iterations = k + 1;
          if (!due(k)) continue;
          if (record(detail::measure<EuclideanSpace>(inst, net.mixing, st.x, k))) {
            res.termination = Termination::ConsensusThreshold;
            break;
          }
        }
        break;
      }
    }
  } catch (const std::exception& e) {
    res.termination = Termination::Failed;
    res.error = e.what();
  }
  return res;
}

// ---------------------------------------------------------------------------
// Persistence

inline constexpr const char* kTrajectoryHeader = "algorithm,k,kkt,consensus,objective,grad_norm,eta_max,phi,wall_ms";

inline void write_trajectory_rows(std::ostream& out, const std::string& label,
                                  const std::vector<TrajectoryRecord>& records) {
  for (const auto& r : records) {
    out << label << ',' << r.k << ',' << io::format_double(r.kkt) << ',' << io::format_double(r.consensus) << ','
        << io::format_double(r.objective) << ',' << io::format_double(r.grad_norm) << ','
        << io::format_double(r.eta_max) << ',' << io::format_double(r.phi) << ',' << io::format_double(r.wall_ms)
        << '\n';
  }
}

inline std::string trajectory_csv(const RunResult& res) {
  std::ostringstream out;
  out << kTrajectoryHeader << '\n';
  write_trajectory_rows(out, algorithm_label(res.config.algorithm), res.records);
  return out.str();
}

namespace detail {
inline json nullable(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
}  // namespace detail

inline json record_to_json(const TrajectoryRecord& r) {
  return {{"k", r.k},
          {"kkt", detail::nullable(r.kkt)},
          {"consensus", detail::nullable(r.consensus)},
          {"objective", detail::nullable(r.objective)},
          {"grad_norm", detail::nullable(r.grad_norm)},
          {"eta_max", detail::nullable(r.eta_max)},
          {"phi", detail::nullable(r.phi)},
          {"wall_ms", detail::nullable(r.wall_ms)}};
}

inline json summary_json(const RunResult& res) {
  const RunConfig& c = res.config;
  json s;
  s["config"] = to_json(c);
  s["seeds"] = {{"master", c.seed},
                {"graph", c.graph_seed()},
                {"graph_sample", res.graph_sample_seed},
                {"data", c.data_seed()},
                {"init", c.init_seed()}};
  s["realized_average_degree"] = res.average_degree;
  s["spectral_gap"] = res.spectral_gap_value;
  s["termination"] = to_string(res.termination);
  if (!res.error.empty()) s["error"] = res.error;
  s["iterations"] = res.iterations;
  s["initial_consensus_error"] = res.initial_consensus;
  s["max_feasibility_residual"] = res.max_feasibility_residual;
  s["lemma4_bound"] = res.lemma4_bound;
  s["max_eta"] = res.max_eta;
  s["lemma4_violations"] = res.lemma4_violations;
  s["subproblem_fallback_used"] = res.subproblem_fallback_used;
  s["kkt_unconverged_rows"] = res.kkt_unconverged;
  s["final_row"] = res.records.empty() ? json(nullptr) : record_to_json(res.records.back());
  return s;
}

/// simulate() plus trajectory.csv and summary.json in cfg.output_dir (when set).
inline RunResult run(const RunConfig& cfg) {
  RunResult res = simulate(cfg);
  if (cfg.output_dir.empty()) return res;
  std::filesystem::create_directories(cfg.output_dir);
  const auto dir = std::filesystem::path(cfg.output_dir);
  res.trajectory_path = (dir / "trajectory.csv").string();
  res.summary_path = (dir / "summary.json").string();
  {
    std::ofstream out(res.trajectory_path);
    if (!out) throw FormatError("cannot write '" + res.trajectory_path + "'");
    out << trajectory_csv(res);
  }
  std::ofstream out(res.summary_path);
  if (!out) throw FormatError("cannot write '" + res.summary_path + "'");
  out << summary_json(res).dump(2) << '\n';
  return res;
}

// ---------------------------------------------------------------------------
// Comparison

/// Key identifying the problem instance a config produces.
inline json instance_key(const RunConfig& c) {
  return {{"problem", to_string(c.problem)}, {"data_path", c.data_path}, {"n", c.n},
          {"d", c.d},                         {"r", c.r},                  {"m", c.m},
          {"xi", c.xi},                       {"lambda", c.effective_lambda()},
          {"data_seed", c.data_seed()}};
}

struct CompareResult {
  std::vector<RunResult> runs;
  std::string csv;
};

/// Runs every config on the shared instance and merges the trajectories into
/// one algorithm-tagged CSV. Throws MismatchedInstances when the configs do
/// not describe the same problem instance.
inline CompareResult compare(const std::vector<RunConfig>& cfgs) {
  if (cfgs.empty()) throw ConfigError("compare: no configs");
  const json key = instance_key(cfgs.front());
  for (const auto& c : cfgs)
    if (instance_key(c) != key)
      throw MismatchedInstances("compare: configs describe different problem instances (" + instance_key(c).dump() +
                                " vs " + key.dump() + ")");
  CompareResult out;
  std::ostringstream csv;
  csv << kTrajectoryHeader << '\n';
  for (const auto& c : cfgs) {
    RunConfig local = c;
    local.output_dir.clear();
    out.runs.push_back(simulate(local));
    write_trajectory_rows(csv, algorithm_label(c.algorithm), out.runs.back().records);
  }
  out.csv = csv.str();
  return out;
}

// ---------------------------------------------------------------------------
// Validation suite

struct ValidationGroup {
  std::string name;
  bool passed = false;
  json measured = json::object();
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationGroup> groups;
  bool all_passed() const {
    for (const auto& g : groups)
      if (!g.passed) return false;
    return true;
  }
  const ValidationGroup* find(const std::string& name) const {
    for (const auto& g : groups)
      if (g.name == name) return &g;
    return nullptr;
  }
};

inline ValidationGroup validate_mixing(const MixingMatrix& mix) {
  ValidationGroup g;
  g.name = "mixing-matrix";
  const MixingDiagnostics d = diagnose(mix);
  g.measured = {{"asymmetry", d.asymmetry},       {"row_sum_error", d.row_sum_error},
                {"col_sum_error", d.col_sum_error}, {"min_entry", d.min_entry},
                {"min_diagonal", d.min_diagonal}, {"spectral_gap", d.gap}};
  g.passed = d.ok(1e-14);
  if (!g.passed) g.detail = "W violates symmetry, double stochasticity (1e-14), positivity or spectral gap < 1";
  return g;
}

namespace detail {

inline ValidationGroup validate_gradients(const ProblemInstance& inst, std::mt19937_64& rng) {
  ValidationGroup g;
  g.name = "gradient-finite-difference";
  double worst = 0.0;
  for (std::size_t i = 0; i < inst.n(); ++i) {
    const Matrix x = gaussian_matrix(inst.d, inst.r, rng);
    const Matrix fd = oracle::finite_difference_gradient(
        [&](const Matrix& z) { return local_objective(inst, i, z); }, x);
    const Matrix an = local_euclidean_gradient(inst, i, x);
    worst = std::max(worst, (fd - an).cwiseAbs().maxCoeff());
  }
  g.measured = {{"max_abs_error", worst}};
  g.passed = worst <= 1e-5;
  return g;
}

inline ValidationGroup validate_assumption2(const ProblemInstance& inst, std::mt19937_64& rng) {
  ValidationGroup g;
  g.name = "assumption-2";
  double worst_lip = 0.0, worst_bound = 0.0;
  for (std::size_t i = 0; i < inst.n(); ++i) {
    const double lf = gradient_lipschitz(inst, i);
    const double lg = gradient_bound_on_stiefel(inst, i);
    for (int t = 0; t < 20; ++t) {
      const Matrix x = project_to_manifold(gaussian_matrix(inst.d, inst.r, rng)).matrix();
      const Matrix y = project_to_manifold(gaussian_matrix(inst.d, inst.r, rng)).matrix();
      const Matrix gx = inst.curvature * inst.grams[i] * x;
      const Matrix gy = inst.curvature * inst.grams[i] * y;
      worst_lip = std::max(worst_lip, (gx - gy).norm() / ((x - y).norm() * lf));
      worst_bound = std::max(worst_bound, gx.norm() / lg);
    }
  }
  g.measured = {{"max_lipschitz_ratio", worst_lip}, {"max_bound_ratio", worst_bound}};
  g.passed = worst_lip <= 1.0 + 1e-12 && worst_bound <= 1.0 + 1e-12;
  return g;
}

inline ValidationGroup validate_lemma1(Eigen::Index d, Eigen::Index r, std::mt19937_64& rng, int samples = 200) {
  ValidationGroup g;
  g.name = "lemma-1";
  double max_full = 0.0, max_half = 0.0;
  bool finite = true;
  for (int s = 0; s < samples; ++s) {
    const StiefelPoint x = project_to_manifold(gaussian_matrix(d, r, rng));
    Matrix u = gaussian_matrix(d, r, rng);
    u *= 1e-2 / u.norm();
    const double a = lemma1_ratio(x, u);
    const double b = lemma1_ratio(x, 0.5 * u);
    finite = finite && std::isfinite(a) && std::isfinite(b);
    max_full = std::max(max_full, a);
    max_half = std::max(max_half, b);
  }
  const double ratio = max_full / max_half;
  g.measured = {{"max_ratio", max_full}, {"max_ratio_half", max_half}, {"stability", ratio}};
  g.passed = finite && ratio >= 0.25 && ratio <= 4.0;
  return g;
}

inline ValidationGroup validate_prox(const RegularizerSpec& reg, Eigen::Index d, Eigen::Index r,
                                     std::mt19937_64& rng) {
  ValidationGroup g;
  g.name = "prox-optimality";
  int failures = 0;
  const double t = 0.7;
  for (int s = 0; s < 200; ++s) {
    const Matrix v = gaussian_matrix(d, r, rng) * 0.01;
    const Matrix p = euclidean_prox(reg, v, t);
    if (!subdifferential_at(reg, p).contains((v - p) / t, 1e-10)) ++failures;
  }
  g.measured = {{"failures", failures}};
  g.passed = failures == 0;
  return g;
}

inline ValidationGroup validate_subproblem_oracle(std::mt19937_64& rng, int instances = 5) {
  ValidationGroup g;
  g.name = "subproblem-oracle";
  const RegularizerSpec reg = RegularizerSpec::l1(0.1);
  const double tau = 0.05;
  double worst = 0.0;
  for (int s = 0; s < instances; ++s) {
    const StiefelPoint y = project_to_manifold(gaussian_matrix(4, 2, rng));
    const Matrix eta = solve_subproblem(y, reg, tau).eta.matrix();
    const Matrix ref = oracle::subproblem_by_subgradient(y.matrix(), reg, tau);
    worst = std::max(worst, (eta - ref).norm());
  }
  g.measured = {{"max_difference", worst}, {"instances", instances}};
  g.passed = worst <= 1e-6;
  return g;
}

inline ValidationGroup validate_lemma4(const RunConfig& cfg, const ProblemInstance& inst, const MixingMatrix& mix) {
  ValidationGroup g;
  g.name = "lemma-4";
  AlgorithmConfig acfg = cfg.algorithm_config();
  const double bound = 2.0 * acfg.tau * lipschitz_constant(inst.reg, inst.d, inst.r);
  double worst = 0.0;
  auto states = pr_extra_init(inst, initial_point(cfg), acfg);
  const std::size_t steps = std::min<std::size_t>(20, std::max<std::size_t>(cfg.max_iters, 1));
  for (std::size_t k = 0; k < steps; ++k) {
    auto step = pr_extra_step(states, mix, inst, acfg, k);
    states = std::move(step.states);
    for (double e : step.eta_norms) worst = std::max(worst, e);
  }
  g.measured = {{"bound", bound}, {"max_eta", worst}, {"steps", steps}};
  g.passed = worst <= bound + 1e-9;
  return g;
}

template <typename F>
ValidationGroup guarded(const std::string& name, F&& f) {
  try {
    return f();
  } catch (const std::exception& e) {
    ValidationGroup g;
    g.name = name;
    g.passed = false;
    g.detail = e.what();
    return g;
  }
}

}  // namespace detail

/// Runs the invariant suites for a config. When `mixing_override` is given it
/// replaces the configured network.
inline ValidationReport validate(const RunConfig& cfg, const MixingMatrix* mixing_override = nullptr) {
  ValidationReport rep;
  std::mt19937_64 rng(cfg.seed + 4);
  std::optional<MixingMatrix> mix;
  if (mixing_override) {
    mix = *mixing_override;
  } else {
    try {
      mix = build_network(cfg).mixing;
    } catch (const std::exception& e) {
      rep.groups.push_back({"mixing-matrix", false, json::object(), e.what()});
    }
  }
  if (mix) rep.groups.push_back(validate_mixing(*mix));

  std::optional<ProblemInstance> inst;
  try {
    inst = build_problem(cfg);
  } catch (const std::exception& e) {
    rep.groups.push_back({"problem", false, json::object(), e.what()});
  }
  if (inst) {
    rep.groups.push_back(detail::guarded("gradient-finite-difference", [&] { return detail::validate_gradients(*inst, rng); }));
    rep.groups.push_back(detail::guarded("assumption-2", [&] { return detail::validate_assumption2(*inst, rng); }));
    rep.groups.push_back(detail::guarded("prox-optimality", [&] { return detail::validate_prox(inst->reg, inst->d, inst->r, rng); }));
  }
  rep.groups.push_back(detail::guarded("lemma-1", [&] {
    return detail::validate_lemma1(static_cast<Eigen::Index>(cfg.d), static_cast<Eigen::Index>(cfg.r), rng);
  }));
  rep.groups.push_back(detail::guarded("subproblem-oracle", [&] { return detail::validate_subproblem_oracle(rng); }));
  if (inst && mix && mix->size() == inst->n())
    rep.groups.push_back(detail::guarded("lemma-4", [&] { return detail::validate_lemma4(cfg, *inst, *mix); }));
  return rep;
}

}  // namespace prextra

#pragma once

// End-to-end runs: resolve a scenario, analyze the graph, integrate the ODE
// and/or sample the jump process, and leave a self-describing directory of
// CSV/JSON outputs behind. Reruns with the same config are byte-identical.

#include <consensus/control.hpp>
#include <consensus/decomposition.hpp>
#include <consensus/deterministic.hpp>
#include <consensus/graph.hpp>
#include <consensus/io.hpp>
#include <consensus/scenarios.hpp>
#include <consensus/spectral.hpp>
#include <consensus/stochastic.hpp>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace consensus {

struct ExperimentConfig {
  /// "ring", "bridged", "battle", or "file". "file" reads params.graph (edge
  /// list or graph JSON) and optionally params.s0 (an opinion file, or the
  /// opinions inline as a JSON array / whitespace-separated floats).
  std::string scenario = "ring";
  nlohmann::json params = nlohmann::json::object();
  /// "deterministic", "stochastic", or "both".
  std::string model = "both";
  /// 0 means auto: forty e-foldings of the spectral gap.
  double t_end = 0.0;
  /// 0 means auto: default_step(L). Deterministic model only.
  double dt = 0.0;
  /// 1 records a single event log; >= 2 runs a Monte Carlo batch.
  int reps = 200;
  int grid_points = 41;
  std::uint64_t seed = 1;
  std::string out_dir = "run";
  /// "csv" (default) or "json" for the bulk data files.
  std::string format = "csv";
};

inline void validate(const ExperimentConfig& c) {
  if (c.scenario != "ring" && c.scenario != "bridged" && c.scenario != "battle" &&
      c.scenario != "file")
    throw ValidationError("unknown scenario \"" + c.scenario + "\"");
  if (c.model != "deterministic" && c.model != "stochastic" && c.model != "both")
    throw ValidationError("model must be deterministic, stochastic, or both");
  if (c.format != "csv" && c.format != "json")
    throw ValidationError("format must be csv or json");
  if (c.t_end < 0.0 || !std::isfinite(c.t_end))
    throw ValidationError("t_end must be non-negative (0 = auto)");
  if (c.dt < 0.0 || !std::isfinite(c.dt))
    throw ValidationError("dt must be non-negative (0 = auto)");
  if (c.reps < 1) throw ValidationError("reps must be at least 1");
  if (c.grid_points < 2) throw ValidationError("grid needs at least two points");
  if (c.out_dir.empty()) throw ValidationError("output directory must be named");
}

inline nlohmann::json config_to_json(const ExperimentConfig& c) {
  return {{"scenario", c.scenario}, {"params", c.params},   {"model", c.model},
          {"t_end", c.t_end},       {"dt", c.dt},           {"reps", c.reps},
          {"grid_points", c.grid_points}, {"seed", c.seed}, {"out_dir", c.out_dir},
          {"format", c.format}};
}

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  c.scenario = j.value("scenario", c.scenario);
  c.params = j.value("params", c.params);
  c.model = j.value("model", c.model);
  c.t_end = j.value("t_end", c.t_end);
  c.dt = j.value("dt", c.dt);
  c.reps = j.value("reps", c.reps);
  c.grid_points = j.value("grid_points", c.grid_points);
  c.seed = j.value("seed", c.seed);
  c.out_dir = j.value("out_dir", c.out_dir);
  c.format = j.value("format", c.format);
  return c;
}

/// Graph plus initial opinions, however the config names them.
struct ResolvedScenario {
  std::string name;
  WeightedDigraph graph;
  Vector s0;
  nlohmann::json notes = nlohmann::json::object();
};

inline Vector parse_opinions(const std::string& text) {
  for (char ch : text) {
    if (ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r') continue;
    if (ch == '[') {
      const auto values = nlohmann::json::parse(text).get<std::vector<double>>();
      return Eigen::Map<const Vector>(values.data(), values.size());
    }
    break;
  }
  std::istringstream in(text);
  std::vector<double> values;
  double v;
  while (in >> v) values.push_back(v);
  if (!in.eof()) throw ValidationError("opinion file has non-numeric content");
  if (values.empty()) throw ValidationError("opinion file is empty");
  return Eigen::Map<const Vector>(values.data(), values.size());
}

/// Accepts either the path of an opinion file or the opinions themselves
/// (JSON array or whitespace-separated floats). An existing file wins.
inline Vector opinions_from_source(const std::string& source) {
  std::error_code probe;  // inline values can exceed filesystem name limits
  if (std::filesystem::exists(source, probe))
    return parse_opinions(read_text_file(source));
  try {
    return parse_opinions(source);
  } catch (const ValidationError& e) {
    throw ValidationError("cannot open " + source +
                          ", and it does not parse as opinions (" + e.what() +
                          ")");
  }
}

namespace detail {

/// Dedicated stream index for initial opinions, far away from the replicate
/// streams 0..reps-1.
constexpr std::uint64_t kInitStream = ~std::uint64_t{0};

inline Vector seeded_opinions(int n, std::uint64_t seed) {
  StreamRng rng(seed, kInitStream);
  Vector s0(n);
  for (int i = 0; i < n; ++i) s0(i) = rng.uniform(-1.0, 1.0);
  return s0;
}

}  // namespace detail

inline ResolvedScenario resolve_scenario(const ExperimentConfig& c) {
  ResolvedScenario r;
  r.name = c.scenario;
  if (c.scenario == "ring") {
    const int n = c.params.value("n", 20);
    const int k = c.params.value("k", 2);
    r.graph = make_ring(n, k);
    r.s0 = detail::seeded_opinions(n, c.seed);
    r.notes["lambda2_closed_form"] = ring_lambda2(n, k);
  } else if (c.scenario == "bridged") {
    const int m = c.params.value("m", 10);
    r.graph = make_bridged_clusters(m);
    r.s0 = detail::seeded_opinions(2 * m, c.seed);
  } else if (c.scenario == "battle") {
    Scenario sc = make_battle(c.params.value("width", 20), c.params.value("height", 10),
                              c.params.value("block_size", 5),
                              c.params.value("links_per_side", 3), c.seed);
    r.graph = std::move(sc.graph);
    r.s0 = std::move(sc.s0);
    r.notes = sc.expected;
    r.notes["params"] = sc.params;
  } else if (c.scenario == "file") {
    if (!c.params.contains("graph"))
      throw ValidationError("file scenario needs params.graph");
    r.graph = parse_graph(read_text_file(c.params.at("graph").get<std::string>()));
    if (c.params.contains("s0"))
      r.s0 = opinions_from_source(c.params.at("s0").get<std::string>());
    else
      r.s0 = detail::seeded_opinions(r.graph.n_nodes(), c.seed);
    if (r.s0.size() != r.graph.n_nodes())
      throw ValidationError("initial opinions have " + std::to_string(r.s0.size()) +
                            " entries, graph has " +
                            std::to_string(r.graph.n_nodes()) + " nodes");
  }
  return r;
}

inline std::vector<double> linspace(double a, double b, int n) {
  if (n < 2) throw ValidationError("linspace needs at least two points");
  std::vector<double> out(n);
  for (int k = 0; k < n; ++k)
    out[k] = a + (b - a) * static_cast<double>(k) / static_cast<double>(n - 1);
  return out;
}

struct RunReport {
  std::string out_dir;
  std::vector<std::string> files;
  nlohmann::json manifest;
};

namespace detail {

/// Piecewise-linear readout of a sampled curve.
inline double interp(const std::vector<double>& ts, const std::vector<double>& vs,
                     double t) {
  if (t <= ts.front()) return vs.front();
  if (t >= ts.back()) return vs.back();
  auto it = std::upper_bound(ts.begin(), ts.end(), t);
  const std::size_t hi = static_cast<std::size_t>(it - ts.begin());
  const std::size_t lo = hi - 1;
  const double w = (t - ts[lo]) / (ts[hi] - ts[lo]);
  return vs[lo] + w * (vs[hi] - vs[lo]);
}

}  // namespace detail

inline RunReport run_experiment(const ExperimentConfig& config) {
  validate(config);
  ResolvedScenario scenario = resolve_scenario(config);
  const WeightedDigraph& g = scenario.graph;
  const LaplacianMatrix L = build_laplacian(g);
  const BlockDecomposition decomposition =
      classify_blocks(g, strongly_connected_components(g));
  const SpectralSummary spec = spectrum(L);

  const double t_end = config.t_end > 0.0 ? config.t_end : default_horizon(spec.lambda2);
  const double dt = config.dt > 0.0 ? config.dt : default_step(L);
  const std::vector<double> grid = linspace(0.0, t_end, config.grid_points);

  namespace fs = std::filesystem;
  fs::create_directories(config.out_dir);
  auto path = [&](const std::string& name) {
    return (fs::path(config.out_dir) / name).string();
  };

  RunReport report;
  report.out_dir = config.out_dir;
  auto emit = [&](const std::string& name, const std::string& content) {
    write_text_file(path(name), content);
    report.files.push_back(name);
  };

  emit("graph.edges", serialize_edge_list(g));
  {
    std::string s0_text;
    for (Eigen::Index i = 0; i < scenario.s0.size(); ++i)
      s0_text += format_double(scenario.s0(i)) + "\n";
    emit("s0.txt", s0_text);
  }

  nlohmann::json analysis;
  analysis["n"] = g.n_nodes();
  analysis["graph_hash"] = graph_hash(g);
  analysis["connectivity"] = to_string(connectivity_kind(g));
  analysis["zero_multiplicity"] = spec.zero_multiplicity;
  analysis["lambda2"] = spec.lambda2;
  analysis["symmetric"] = spec.symmetric;
  {
    nlohmann::json blocks = nlohmann::json::array();
    for (std::size_t k = 0; k < decomposition.blocks.size(); ++k)
      blocks.push_back({{"nodes", decomposition.blocks[k]},
                        {"label", to_string(decomposition.labels[k])}});
    analysis["blocks"] = std::move(blocks);
    analysis["predicts_unconditional_consensus"] =
        predicts_unconditional_consensus(decomposition);
  }

  std::vector<double> det_var_at_grid;
  if (config.model != "stochastic") {
    const Trajectory traj = integrate(L, scenario.s0, t_end, dt);
    if (config.format == "json") {
      emit("trajectory.json", trajectory_to_json(traj).dump(2) + "\n");
    } else {
      emit("trajectory.csv", trajectory_csv(traj));
      emit("trajectory_meta.json", trajectory_meta_json(traj.meta).dump(2) + "\n");
    }
    const std::vector<double> variances = trajectory_variances(traj);
    emit("variance_det.csv", variance_csv(traj.times, variances));
    det_var_at_grid.reserve(grid.size());
    for (double t : grid)
      det_var_at_grid.push_back(detail::interp(traj.times, variances, t));
    try {
      const DecayFit fit = fit_decay_rate(traj);
      analysis["decay_rate"] = fit.rate;
      analysis["decay_floor_detected"] = fit.floor_detected;
    } catch (const ValidationError& err) {
      analysis["decay_fit_skipped"] = err.what();
    }
    analysis["ode_warnings"] = traj.meta.warnings;
  }

  std::optional<ReplicateBatch> batch;
  if (config.model != "deterministic") {
    if (config.reps == 1) {
      const JumpTrajectory jump = simulate(g, scenario.s0, t_end, config.seed);
      emit("events.csv", events_csv(jump));
      emit("events_meta.json", jump_meta_json(jump).dump(2) + "\n");
      analysis["frozen_at"] = jump.frozen_at ? nlohmann::json(*jump.frozen_at)
                                             : nlohmann::json(nullptr);
      analysis["absorbed_at"] = jump.absorbed_at ? nlohmann::json(*jump.absorbed_at)
                                                 : nlohmann::json(nullptr);
    } else {
      batch = monte_carlo(g, scenario.s0, grid, config.reps, config.seed);
      if (config.format == "json")
        emit("batch.json", batch_to_json(*batch).dump(2) + "\n");
      else
        emit("batch.csv", batch_csv(*batch));
    }
  }

  if (config.model == "both" && batch) {
    const double v0 = variance(scenario.s0);
    const double gap = spec.symmetric ? algebraic_connectivity(L) : spec.lambda2;
    std::vector<double> mc_v(batch->variance_estimate.begin(),
                             batch->variance_estimate.end());
    std::vector<double> bound(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k)
      bound[k] = v0 * std::exp(-gap * grid[k] / static_cast<double>(g.n_nodes()));
    emit("comparison.csv", comparison_csv(grid, det_var_at_grid, mc_v, bound));
    analysis["variance_bound_gap"] = gap;
  }

  nlohmann::json manifest;
  manifest["config"] = config_to_json(config);
  manifest["resolved"] = {{"t_end", t_end},
                          {"dt", config.model != "stochastic" ? dt : 0.0},
                          {"grid_points", config.grid_points},
                          {"seed", config.seed}};
  manifest["scenario_notes"] = scenario.notes;
  manifest["analysis"] = analysis;
  report.files.push_back("manifest.json");
  manifest["files"] = report.files;
  write_text_file(path("manifest.json"), manifest.dump(2) + "\n");
  report.manifest = std::move(manifest);
  return report;
}

}  // namespace consensus

// Command-line front end for the consensus toolkit.
//
// Subcommands:
//   analyze       structural + spectral report for a graph file
//   simulate-det  integrate the averaging ODE
//   simulate-sto  sample the jump process (single path or Monte Carlo)
//   compare       run both models and emit the variance comparison
//   steer         build a steering graph for a target consensus value
//   scenario      generate a named benchmark scenario into a directory
//
// Exit codes: 0 success, 2 invalid input, 1 internal failure.

#include <consensus/consensus.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

namespace {

using namespace consensus;

nlohmann::json analyze_graph(const WeightedDigraph& g) {
  const LaplacianMatrix L = build_laplacian(g);
  const BlockDecomposition d = classify_blocks(g, strongly_connected_components(g));
  const SpectralSummary s = spectrum(L);

  nlohmann::json blocks = nlohmann::json::array();
  for (std::size_t k = 0; k < d.blocks.size(); ++k)
    blocks.push_back({{"nodes", d.blocks[k]}, {"label", to_string(d.labels[k])}});

  nlohmann::json out;
  out["n"] = g.n_nodes();
  out["edges"] = g.edges().size();
  out["graph_hash"] = graph_hash(g);
  out["symmetric"] = g.is_symmetric();
  out["balanced"] = g.is_balanced();
  out["connectivity"] = to_string(connectivity_kind(g));
  out["undirected_shape_connected"] = undirected_shape_connected(g);
  out["blocks"] = std::move(blocks);
  out["isolated_blocks"] = d.isolated_count();
  out["predicts_unconditional_consensus"] = predicts_unconditional_consensus(d);
  out["spectrum"] = spectral_to_json(s);
  if (g.is_symmetric()) out["algebraic_connectivity"] = algebraic_connectivity(L);
  return out;
}

void write_or_print(const std::string& out_path, const std::string& content) {
  if (out_path.empty())
    std::cout << content;
  else
    write_text_file(out_path, content);
}

int run(int argc, char** argv) {
  CLI::App app{"Consensus dynamics on weighted influence digraphs"};
  app.require_subcommand(1);

  std::string graph_path, s0_path, out_dir, out_file, format = "csv";
  std::uint64_t seed = 1;
  double t_end = 0.0, dt = 0.0;
  int reps = 200, grid_points = 41;

  auto add_common = [&](CLI::App* cmd, bool sim) {
    cmd->add_option("--out", out_dir, "Output directory");
    if (sim) {
      cmd->add_option("--seed", seed, "Master seed");
      cmd->add_option("--t-end", t_end, "Horizon (0 = auto)");
      cmd->add_option("--format", format, "Data file format: csv or json")
          ->check(CLI::IsMember({"csv", "json"}));
      cmd->add_option("--grid-points", grid_points, "Readout grid size");
    }
  };

  auto* analyze = app.add_subcommand("analyze", "Report graph structure and spectrum");
  analyze->add_option("graph", graph_path, "Edge list or graph JSON")->required();
  analyze->add_option("--out", out_file, "Write the JSON report here instead of stdout");

  auto* sim_det = app.add_subcommand("simulate-det", "Integrate the averaging ODE");
  sim_det->add_option("graph", graph_path, "Edge list or graph JSON")->required();
  sim_det->add_option("--s0", s0_path, "Initial opinions: file, JSON array, or floats");
  sim_det->add_option("--dt", dt, "RK4 step (0 = auto)");
  add_common(sim_det, true);

  auto* sim_sto = app.add_subcommand("simulate-sto", "Sample the jump process");
  sim_sto->add_option("graph", graph_path, "Edge list or graph JSON")->required();
  sim_sto->add_option("--s0", s0_path, "Initial opinions: file, JSON array, or floats");
  sim_sto->add_option("--reps", reps, "Replicates (1 = single event log)");
  add_common(sim_sto, true);

  auto* compare = app.add_subcommand("compare", "Run both models and compare variance");
  compare->add_option("graph", graph_path, "Edge list or graph JSON")->required();
  compare->add_option("--s0", s0_path, "Initial opinions: file, JSON array, or floats");
  compare->add_option("--dt", dt, "RK4 step (0 = auto)");
  compare->add_option("--reps", reps, "Replicates");
  add_common(compare, true);

  auto* steer_cmd = app.add_subcommand("steer", "Design a steering graph");
  double s_star = 0.0;
  steer_cmd->add_option("s0", s0_path, "Initial opinions: file, JSON array, or floats")
      ->required();
  steer_cmd->add_option("target", s_star, "Desired consensus value")->required();
  steer_cmd->add_option("--out", out_dir, "Write graph.edges and steer.json here");

  auto* scenario_cmd = app.add_subcommand("scenario", "Generate a benchmark scenario");
  std::string scenario_name;
  int ring_n = 20, ring_k = 2, clique_m = 10;
  int width = 20, height = 10, block_size = 5, links = 3;
  scenario_cmd->add_option("name", scenario_name, "ring, bridged, or battle")
      ->required()
      ->check(CLI::IsMember({"ring", "bridged", "battle"}));
  scenario_cmd->add_option("--n", ring_n, "Ring size");
  scenario_cmd->add_option("--k", ring_k, "Ring coupling range");
  scenario_cmd->add_option("--m", clique_m, "Clique size for bridged");
  scenario_cmd->add_option("--width", width, "Battle grid width");
  scenario_cmd->add_option("--height", height, "Battle grid height");
  scenario_cmd->add_option("--block-size", block_size, "Battle stubborn block size");
  scenario_cmd->add_option("--links-per-side", links, "Battle injections per side");
  scenario_cmd->add_option("--seed", seed, "Seed for initial opinions");
  scenario_cmd->add_option("--out", out_dir, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);  // prints help or the parse error
    return code == 0 ? 0 : 2;
  }

  auto experiment_config = [&](const std::string& model) {
    ExperimentConfig c;
    c.scenario = "file";
    c.params["graph"] = graph_path;
    if (!s0_path.empty()) c.params["s0"] = s0_path;
    c.model = model;
    c.t_end = t_end;
    c.dt = dt;
    c.reps = reps;
    c.grid_points = grid_points;
    c.seed = seed;
    c.out_dir = out_dir.empty() ? "run" : out_dir;
    c.format = format;
    return c;
  };

  if (analyze->parsed()) {
    const WeightedDigraph g = parse_graph(read_text_file(graph_path));
    write_or_print(out_file, analyze_graph(g).dump(2) + "\n");
    return 0;
  }
  if (sim_det->parsed()) {
    const RunReport r = run_experiment(experiment_config("deterministic"));
    std::cout << "wrote " << r.files.size() << " files to " << r.out_dir << "\n";
    return 0;
  }
  if (sim_sto->parsed()) {
    const RunReport r = run_experiment(experiment_config("stochastic"));
    std::cout << "wrote " << r.files.size() << " files to " << r.out_dir << "\n";
    return 0;
  }
  if (compare->parsed()) {
    const RunReport r = run_experiment(experiment_config("both"));
    std::cout << "wrote " << r.files.size() << " files to " << r.out_dir << "\n";
    return 0;
  }
  if (steer_cmd->parsed()) {
    const Vector s0 = opinions_from_source(s0_path);
    const SteerPlan plan = steer(s0, s_star);
    const LaplacianMatrix L = build_laplacian(plan.graph);
    nlohmann::json report;
    report["alpha"] = plan.alpha;
    report["beta"] = plan.beta;
    report["max_node"] = plan.max_node;
    report["min_node"] = plan.min_node;
    report["target"] = plan.target;
    const Vector limit = predict_limit(L, s0);
    report["predicted_limit"] = std::vector<double>(limit.begin(), limit.end());
    report["lambda2"] = spectrum(L).lambda2;
    if (out_dir.empty()) {
      std::cout << report.dump(2) << "\n" << serialize_edge_list(plan.graph);
    } else {
      std::filesystem::create_directories(out_dir);
      write_text_file((std::filesystem::path(out_dir) / "graph.edges").string(),
                      serialize_edge_list(plan.graph));
      write_text_file((std::filesystem::path(out_dir) / "steer.json").string(),
                      report.dump(2) + "\n");
      std::cout << "wrote graph.edges and steer.json to " << out_dir << "\n";
    }
    return 0;
  }
  if (scenario_cmd->parsed()) {
    ResolvedScenario r;
    ExperimentConfig c;
    c.scenario = scenario_name;
    c.seed = seed;
    if (scenario_name == "ring") c.params = {{"n", ring_n}, {"k", ring_k}};
    if (scenario_name == "bridged") c.params = {{"m", clique_m}};
    if (scenario_name == "battle")
      c.params = {{"width", width},
                  {"height", height},
                  {"block_size", block_size},
                  {"links_per_side", links}};
    r = resolve_scenario(c);
    std::filesystem::create_directories(out_dir);
    auto at = [&](const std::string& name) {
      return (std::filesystem::path(out_dir) / name).string();
    };
    write_text_file(at("graph.edges"), serialize_edge_list(r.graph));
    std::string s0_text;
    for (Eigen::Index i = 0; i < r.s0.size(); ++i)
      s0_text += format_double(r.s0(i)) + "\n";
    write_text_file(at("s0.txt"), s0_text);
    nlohmann::json meta;
    meta["name"] = r.name;
    meta["params"] = c.params;
    meta["seed"] = seed;
    meta["notes"] = r.notes;
    write_text_file(at("scenario.json"), meta.dump(2) + "\n");
    std::cout << "wrote graph.edges, s0.txt, scenario.json to " << out_dir << "\n";
    return 0;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const consensus::ValidationError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  } catch (const std::exception& err) {
    std::cerr << "internal error: " << err.what() << "\n";
    return 1;
  }
}

#include <consensus/graph.hpp>
#include <consensus/io.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

using namespace consensus;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

fs::path work_dir() {
  const fs::path dir = fs::temp_directory_path() / "consensus_cli_tests";
  fs::create_directories(dir);
  return dir;
}

CliResult run_cli(const std::string& args) {
  const fs::path out_path = work_dir() / "stdout.txt";
  const fs::path err_path = work_dir() / "stderr.txt";
  const std::string cmd = std::string(CONSENSUS_CLI_PATH) + " " + args + " > " +
                          out_path.string() + " 2> " + err_path.string();
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = read_text_file(out_path.string());
  r.err = read_text_file(err_path.string());
  return r;
}

std::string fan_in_file() {
  const fs::path p = work_dir() / "fan_in.edges";
  write_text_file(p.string(), "3\n2 0 1.0\n2 1 1.0\n");
  return p.string();
}

std::string fresh_out(const std::string& name) {
  const fs::path dir = work_dir() / name;
  fs::remove_all(dir);
  return dir.string();
}

}  // namespace

TEST_CASE("analyze reports structure as JSON on stdout", "[cli]") {
  const auto r = run_cli("analyze " + fan_in_file());
  REQUIRE(r.exit_code == 0);
  const auto report = nlohmann::json::parse(r.out);
  REQUIRE(report.at("n") == 3);
  REQUIRE(report.at("isolated_blocks") == 2);
  REQUIRE(report.at("predicts_unconditional_consensus") == false);
  REQUIRE(report.at("spectrum").at("zero_multiplicity") == 2);
  REQUIRE(report.at("connectivity") == "disconnected");
  REQUIRE(report.at("undirected_shape_connected") == true);
}

TEST_CASE("analyze can write its report to a file", "[cli]") {
  const std::string out = (work_dir() / "report.json").string();
  const auto r = run_cli("analyze " + fan_in_file() + " --out " + out);
  REQUIRE(r.exit_code == 0);
  const auto report = nlohmann::json::parse(read_text_file(out));
  REQUIRE(report.at("n") == 3);
}

TEST_CASE("analyze rejects bad input with exit code 2", "[cli]") {
  const fs::path bad = work_dir() / "bad.edges";
  write_text_file(bad.string(), "2\n0 1 -0.5\n");
  const auto r = run_cli("analyze " + bad.string());
  REQUIRE(r.exit_code == 2);
  REQUIRE(r.err.find("error:") != std::string::npos);
  REQUIRE(r.err.find("negative weight") != std::string::npos);

  const auto missing = run_cli("analyze /nonexistent/graph.edges");
  REQUIRE(missing.exit_code == 2);
}

TEST_CASE("simulate-det writes a trajectory directory", "[cli]") {
  const std::string out = fresh_out("cli_det");
  const auto r = run_cli("simulate-det " + fan_in_file() + " --t-end 5 --out " + out);
  REQUIRE(r.exit_code == 0);
  REQUIRE(fs::exists(fs::path(out) / "trajectory.csv"));
  REQUIRE(fs::exists(fs::path(out) / "variance_det.csv"));
  REQUIRE(fs::exists(fs::path(out) / "manifest.json"));

  const std::string inl = fresh_out("cli_det_inline");
  const auto ri = run_cli("simulate-det " + fan_in_file() +
                          " --s0 \"[2, 0, -1]\" --t-end 5 --out " + inl);
  REQUIRE(ri.exit_code == 0);
  const auto traj = read_trajectory_csv(
      read_text_file((fs::path(inl) / "trajectory.csv").string()));
  REQUIRE(traj.states.front()(0) == 2.0);
  REQUIRE(traj.states.front()(2) == -1.0);
}

TEST_CASE("simulate-sto switches layout on replicate count", "[cli]") {
  const std::string single = fresh_out("cli_sto_single");
  auto r = run_cli("simulate-sto " + fan_in_file() + " --reps 1 --t-end 5 --out " +
                   single);
  REQUIRE(r.exit_code == 0);
  REQUIRE(fs::exists(fs::path(single) / "events.csv"));
  REQUIRE_FALSE(fs::exists(fs::path(single) / "batch.csv"));

  const std::string batch = fresh_out("cli_sto_batch");
  r = run_cli("simulate-sto " + fan_in_file() +
              " --reps 30 --t-end 5 --grid-points 5 --out " + batch);
  REQUIRE(r.exit_code == 0);
  REQUIRE(fs::exists(fs::path(batch) / "batch.csv"));
  REQUIRE_FALSE(fs::exists(fs::path(batch) / "events.csv"));
}

TEST_CASE("compare emits the variance table", "[cli]") {
  const fs::path pair = work_dir() / "pair.edges";
  write_text_file(pair.string(), "2\n0 1 1.0\n1 0 1.0\n");
  const std::string out = fresh_out("cli_compare");
  const auto r = run_cli("compare " + pair.string() +
                         " --reps 25 --t-end 4 --grid-points 6 --out " + out);
  REQUIRE(r.exit_code == 0);
  REQUIRE(fs::exists(fs::path(out) / "comparison.csv"));
  const std::string head =
      read_text_file((fs::path(out) / "comparison.csv").string());
  REQUIRE(head.rfind("t,det_variance,mc_variance,bound\n", 0) == 0);
}

TEST_CASE("steer prints a plan and can persist it", "[cli]") {
  const fs::path s0 = work_dir() / "opinions.txt";
  write_text_file(s0.string(), "0 1\n");

  const auto printed = run_cli("steer " + s0.string() + " 0.25");
  REQUIRE(printed.exit_code == 0);
  REQUIRE(printed.out.find("\"alpha\": 0.75") != std::string::npos);
  REQUIRE(printed.out.find("\"beta\": 0.25") != std::string::npos);

  const std::string out = fresh_out("cli_steer");
  const auto persisted = run_cli("steer " + s0.string() + " 0.25 --out " + out);
  REQUIRE(persisted.exit_code == 0);
  const auto plan = nlohmann::json::parse(
      read_text_file((fs::path(out) / "steer.json").string()));
  REQUIRE(plan.at("alpha") == 0.75);
  REQUIRE(plan.at("predicted_limit")[0] == Catch::Approx(0.25).margin(1e-12));
  const auto g = parse_graph(
      read_text_file((fs::path(out) / "graph.edges").string()));
  REQUIRE(g.n_nodes() == 2);

  const auto outside = run_cli("steer " + s0.string() + " 5.0");
  REQUIRE(outside.exit_code == 2);
  REQUIRE(outside.err.find("convex hull") != std::string::npos);

  // Opinions can be given inline instead of through a file.
  const auto inline_json = run_cli("steer \"[0, 1]\" 0.25");
  REQUIRE(inline_json.exit_code == 0);
  REQUIRE(inline_json.out.find("\"alpha\": 0.75") != std::string::npos);
  const auto bad_source = run_cli("steer missing_opinions.txt 0.25");
  REQUIRE(bad_source.exit_code == 2);
  REQUIRE(bad_source.err.find("cannot open") != std::string::npos);
}

TEST_CASE("scenario generates benchmark inputs", "[cli]") {
  const std::string out = fresh_out("cli_scenario");
  const auto r = run_cli("scenario ring --n 10 --k 2 --seed 9 --out " + out);
  REQUIRE(r.exit_code == 0);
  const auto g = parse_graph(
      read_text_file((fs::path(out) / "graph.edges").string()));
  REQUIRE(g.n_nodes() == 10);
  REQUIRE(g.edges().size() == 40);
  const auto meta = nlohmann::json::parse(
      read_text_file((fs::path(out) / "scenario.json").string()));
  REQUIRE(meta.at("name") == "ring");
  REQUIRE(meta.at("params").at("n") == 10);
  REQUIRE(meta.at("seed") == 9);

  const std::string battle = fresh_out("cli_battle");
  const auto rb = run_cli(
      "scenario battle --width 6 --height 3 --block-size 2 --links-per-side 1"
      " --out " + battle);
  REQUIRE(rb.exit_code == 0);
  const auto bg = parse_graph(
      read_text_file((fs::path(battle) / "graph.edges").string()));
  REQUIRE(bg.n_nodes() == 6 * 3 + 2 * 2);
}

TEST_CASE("usage errors exit with code 2 and help with 0", "[cli]") {
  REQUIRE(run_cli("--help").exit_code == 0);
  REQUIRE(run_cli("").exit_code == 2);               // missing subcommand
  REQUIRE(run_cli("warp 9").exit_code == 2);         // unknown subcommand
  const fs::path s0 = work_dir() / "opinions.txt";
  write_text_file(s0.string(), "0 1\n");
  REQUIRE(run_cli("steer " + s0.string()).exit_code == 2);  // missing target
  REQUIRE(run_cli("scenario ring").exit_code == 2);         // missing --out
  REQUIRE(run_cli("scenario nope --out /tmp/x").exit_code == 2);
}

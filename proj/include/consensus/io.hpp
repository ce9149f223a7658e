#pragma once

// Text formats for run outputs. Everything numeric is rendered with %.17g,
// so a rerun with identical inputs produces byte-identical files.
//
//   trajectory.csv   t,s_0,...,s_{N-1}           (+ sidecar JSON meta)
//   variance.csv     t,v
//   events.csv       t,i,j                       (+ initial-state JSON)
//   batch.csv        t,mean_0..mean_{N-1},variance,se_variance,absorbed_fraction
//   comparison.csv   t,det_variance,mc_variance,bound

#include <consensus/common.hpp>
#include <consensus/deterministic.hpp>
#include <consensus/stochastic.hpp>

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace consensus {

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open " + path + " for writing");
  out << content;
  if (!out) throw std::runtime_error("write failed for " + path);
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

inline double parse_csv_double(const std::string& field, int line_no) {
  try {
    std::size_t used = 0;
    double v = std::stod(field, &used);
    while (used < field.size() &&
           (field[used] == ' ' || field[used] == '\r' || field[used] == '\t'))
      ++used;
    if (used != field.size()) throw std::invalid_argument(field);
    return v;
  } catch (const std::exception&) {
    throw ValidationError("bad numeric field \"" + field + "\" at line " +
                          std::to_string(line_no));
  }
}

}  // namespace detail

// --- trajectories -----------------------------------------------------------

inline std::string trajectory_csv(const Trajectory& traj) {
  std::string out = "t";
  const int n = traj.states.empty() ? 0 : static_cast<int>(traj.states.front().size());
  for (int i = 0; i < n; ++i) out += ",s_" + std::to_string(i);
  out += "\n";
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    out += format_double(traj.times[k]);
    for (int i = 0; i < n; ++i) out += "," + format_double(traj.states[k](i));
    out += "\n";
  }
  return out;
}

inline nlohmann::json trajectory_meta_json(const TrajectoryMeta& meta) {
  return {{"laplacian_hash", meta.laplacian_hash},
          {"method", meta.method},
          {"dt", meta.dt},
          {"t_end", meta.t_end},
          {"stride", meta.stride},
          {"warnings", meta.warnings}};
}

/// Times and states only; metadata travels in the sidecar JSON.
inline Trajectory read_trajectory_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  Trajectory traj;
  int line_no = 0;
  int n = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1) {
      if (line.rfind("t", 0) != 0)
        throw ValidationError("trajectory CSV must start with its header line");
      n = static_cast<int>(detail::split_csv_line(line).size()) - 1;
      continue;
    }
    const auto fields = detail::split_csv_line(line);
    if (static_cast<int>(fields.size()) != n + 1)
      throw ValidationError("wrong field count at line " + std::to_string(line_no));
    traj.times.push_back(detail::parse_csv_double(fields[0], line_no));
    Vector s(n);
    for (int i = 0; i < n; ++i)
      s(i) = detail::parse_csv_double(fields[i + 1], line_no);
    traj.states.push_back(std::move(s));
  }
  return traj;
}

inline std::string variance_csv(const std::vector<double>& times,
                                const std::vector<double>& values) {
  if (times.size() != values.size())
    throw ValidationError("variance curve needs matching lengths");
  std::string out = "t,v\n";
  for (std::size_t k = 0; k < times.size(); ++k)
    out += format_double(times[k]) + "," + format_double(values[k]) + "\n";
  return out;
}

inline std::pair<std::vector<double>, std::vector<double>> read_variance_csv(
    const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<double> ts, vs;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line_no == 1) continue;
    const auto fields = detail::split_csv_line(line);
    if (fields.size() != 2)
      throw ValidationError("wrong field count at line " + std::to_string(line_no));
    ts.push_back(detail::parse_csv_double(fields[0], line_no));
    vs.push_back(detail::parse_csv_double(fields[1], line_no));
  }
  return {std::move(ts), std::move(vs)};
}

// --- jump trajectories ------------------------------------------------------

inline std::string events_csv(const JumpTrajectory& traj) {
  std::string out = "t,i,j\n";
  for (const JumpEvent& e : traj.events)
    out += format_double(e.time) + "," + std::to_string(e.node) + "," +
           std::to_string(e.adopted_from) + "\n";
  return out;
}

inline nlohmann::json jump_meta_json(const JumpTrajectory& traj) {
  nlohmann::json j;
  j["initial"] = std::vector<double>(traj.initial.begin(), traj.initial.end());
  j["final"] = std::vector<double>(traj.final_state.begin(), traj.final_state.end());
  j["absorbed_at"] =
      traj.absorbed_at ? nlohmann::json(*traj.absorbed_at) : nlohmann::json(nullptr);
  j["frozen_at"] =
      traj.frozen_at ? nlohmann::json(*traj.frozen_at) : nlohmann::json(nullptr);
  j["n_events"] = traj.events.size();
  return j;
}

/// Rebuilds a jump trajectory from the CSV event log and its sidecar.
inline JumpTrajectory read_events_csv(const std::string& csv_text,
                                      const std::string& meta_json_text) {
  JumpTrajectory traj;
  const nlohmann::json meta = nlohmann::json::parse(meta_json_text);
  const auto initial = meta.at("initial").get<std::vector<double>>();
  traj.initial = Eigen::Map<const Vector>(initial.data(), initial.size());
  if (!meta.at("absorbed_at").is_null())
    traj.absorbed_at = meta.at("absorbed_at").get<double>();
  if (!meta.at("frozen_at").is_null())
    traj.frozen_at = meta.at("frozen_at").get<double>();

  std::istringstream in(csv_text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line_no == 1) continue;
    const auto fields = detail::split_csv_line(line);
    if (fields.size() != 3)
      throw ValidationError("wrong field count at line " + std::to_string(line_no));
    JumpEvent e;
    e.time = detail::parse_csv_double(fields[0], line_no);
    e.node = static_cast<int>(detail::parse_csv_double(fields[1], line_no));
    e.adopted_from = static_cast<int>(detail::parse_csv_double(fields[2], line_no));
    traj.events.push_back(e);
  }
  traj.final_state = replay(traj, std::numeric_limits<double>::infinity());
  return traj;
}

// --- replicate batches ------------------------------------------------------

inline std::string batch_csv(const ReplicateBatch& batch) {
  const int n = static_cast<int>(batch.mean_estimate.cols());
  std::string out = "t";
  for (int i = 0; i < n; ++i) out += ",mean_" + std::to_string(i);
  out += ",variance,se_variance,absorbed_fraction\n";
  for (std::size_t k = 0; k < batch.grid.size(); ++k) {
    out += format_double(batch.grid[k]);
    for (int i = 0; i < n; ++i)
      out += "," + format_double(batch.mean_estimate(k, i));
    out += "," + format_double(batch.variance_estimate(k));
    out += "," + format_double(batch.variance_se(k));
    out += "," + format_double(batch.absorbed_fraction(k));
    out += "\n";
  }
  return out;
}

/// Grid, means, variance, variance SE, absorbed fraction (the CSV columns).
inline ReplicateBatch read_batch_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  ReplicateBatch batch;
  std::vector<std::vector<double>> rows;
  int line_no = 0, n_fields = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1) {
      n_fields = static_cast<int>(detail::split_csv_line(line).size());
      continue;
    }
    const auto fields = detail::split_csv_line(line);
    if (static_cast<int>(fields.size()) != n_fields)
      throw ValidationError("wrong field count at line " + std::to_string(line_no));
    std::vector<double> row;
    for (const auto& f : fields) row.push_back(detail::parse_csv_double(f, line_no));
    rows.push_back(std::move(row));
  }
  const int n = n_fields - 4;
  if (n < 1) throw ValidationError("batch CSV has too few columns");
  const std::size_t gsize = rows.size();
  batch.grid.resize(gsize);
  batch.mean_estimate.resize(gsize, n);
  batch.mean_se = Matrix::Zero(gsize, n);
  batch.variance_estimate.resize(gsize);
  batch.variance_se.resize(gsize);
  batch.absorbed_fraction.resize(gsize);
  for (std::size_t k = 0; k < gsize; ++k) {
    batch.grid[k] = rows[k][0];
    for (int i = 0; i < n; ++i) batch.mean_estimate(k, i) = rows[k][1 + i];
    batch.variance_estimate(k) = rows[k][1 + n];
    batch.variance_se(k) = rows[k][2 + n];
    batch.absorbed_fraction(k) = rows[k][3 + n];
  }
  return batch;
}

// --- model comparison -------------------------------------------------------

inline std::string comparison_csv(const std::vector<double>& grid,
                                  const std::vector<double>& det_variance,
                                  const std::vector<double>& mc_variance,
                                  const std::vector<double>& bound) {
  if (grid.size() != det_variance.size() || grid.size() != mc_variance.size() ||
      grid.size() != bound.size())
    throw ValidationError("comparison columns need matching lengths");
  std::string out = "t,det_variance,mc_variance,bound\n";
  for (std::size_t k = 0; k < grid.size(); ++k)
    out += format_double(grid[k]) + "," + format_double(det_variance[k]) + "," +
           format_double(mc_variance[k]) + "," + format_double(bound[k]) + "\n";
  return out;
}

// --- JSON variants ----------------------------------------------------------

inline nlohmann::json trajectory_to_json(const Trajectory& traj) {
  nlohmann::json states = nlohmann::json::array();
  for (const Vector& s : traj.states)
    states.push_back(std::vector<double>(s.begin(), s.end()));
  return {{"times", traj.times},
          {"states", std::move(states)},
          {"meta", trajectory_meta_json(traj.meta)}};
}

inline nlohmann::json batch_to_json(const ReplicateBatch& batch) {
  const int n = static_cast<int>(batch.mean_estimate.cols());
  nlohmann::json means = nlohmann::json::array(), ses = nlohmann::json::array();
  for (std::size_t k = 0; k < batch.grid.size(); ++k) {
    std::vector<double> mrow(n), srow(n);
    for (int i = 0; i < n; ++i) {
      mrow[i] = batch.mean_estimate(k, i);
      srow[i] = batch.mean_se(k, i);
    }
    means.push_back(mrow);
    ses.push_back(srow);
  }
  return {{"n_reps", batch.n_reps},
          {"seed", batch.seed},
          {"grid", batch.grid},
          {"means", std::move(means)},
          {"mean_se", std::move(ses)},
          {"variance",
           std::vector<double>(batch.variance_estimate.begin(),
                               batch.variance_estimate.end())},
          {"variance_se",
           std::vector<double>(batch.variance_se.begin(), batch.variance_se.end())},
          {"absorbed_fraction",
           std::vector<double>(batch.absorbed_fraction.begin(),
                               batch.absorbed_fraction.end())}};
}

}  // namespace consensus

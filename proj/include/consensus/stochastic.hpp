#pragma once

// The jump-process counterpart of the averaging ODE. Each ordered pair with
// a_ij > 0 carries an independent Poisson clock of rate a_ij; when the clock
// of (i, j) rings, agent i adopts agent j's current opinion verbatim.
//
// The total event rate sigma = sum_ij a_ij never changes, because clocks keep
// ringing whether or not their edge is discordant. Gillespie simulation
// therefore reduces to exponential waiting times with a constant rate plus a
// categorical edge pick, which an alias table serves in O(1).
//
// A state is frozen when every positive-rate edge joins equal opinions, and
// absorbed when all N opinions agree. Absorbed implies frozen; a state can
// freeze without consensus when distinct isolated blocks settle on
// different values.

#include <consensus/graph.hpp>
#include <consensus/rng.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <unordered_map>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

namespace consensus {

struct JumpEvent {
  double time = 0.0;
  /// Agent that changed (or re-asserted) its opinion.
  int node = 0;
  /// Agent whose opinion was copied.
  int adopted_from = 0;
};

struct JumpTrajectory {
  Vector initial;
  std::vector<JumpEvent> events;
  Vector final_state;
  /// First time all N opinions were equal; empty if consensus never happened
  /// within the horizon.
  std::optional<double> absorbed_at;
  /// First time no discordant positive-rate edge remained.
  std::optional<double> frozen_at;
};

namespace detail {

/// Walker alias table for a fixed categorical distribution.
class AliasTable {
 public:
  explicit AliasTable(const std::vector<double>& weights) {
    const std::size_t n = weights.size();
    prob_.assign(n, 0.0);
    alias_.assign(n, 0);
    double total = 0.0;
    for (double w : weights) total += w;
    std::vector<double> scaled(n);
    std::vector<std::size_t> small, large;
    for (std::size_t k = 0; k < n; ++k) {
      scaled[k] = weights[k] * static_cast<double>(n) / total;
      (scaled[k] < 1.0 ? small : large).push_back(k);
    }
    while (!small.empty() && !large.empty()) {
      std::size_t s = small.back(), l = large.back();
      small.pop_back();
      large.pop_back();
      prob_[s] = scaled[s];
      alias_[s] = l;
      scaled[l] = (scaled[l] + scaled[s]) - 1.0;
      (scaled[l] < 1.0 ? small : large).push_back(l);
    }
    for (std::size_t k : large) prob_[k] = 1.0;
    for (std::size_t k : small) prob_[k] = 1.0;
  }

  std::size_t pick(StreamRng& rng) const {
    const std::size_t k = rng.uniform_below(prob_.size());
    return rng.uniform01() < prob_[k] ? k : alias_[k];
  }

 private:
  std::vector<double> prob_;
  std::vector<std::size_t> alias_;
};

/// Shared stepper: current opinions plus an incrementally maintained count
/// of discordant edges, so freezing is detected in O(degree) per event.
class JumpStepper {
 public:
  JumpStepper(const WeightedDigraph& g, const Vector& s0)
      : state_(s0) {
    if (s0.size() != g.n_nodes())
      throw ValidationError("initial state has " + std::to_string(s0.size()) +
                            " entries, graph has " + std::to_string(g.n_nodes()) +
                            " nodes");
    const auto& edges = g.edges();
    to_.reserve(edges.size());
    from_.reserve(edges.size());
    std::vector<double> weights;
    weights.reserve(edges.size());
    incident_.assign(g.n_nodes(), {});
    for (std::size_t k = 0; k < edges.size(); ++k) {
      to_.push_back(edges[k].to);
      from_.push_back(edges[k].from);
      weights.push_back(edges[k].weight);
      total_rate_ += edges[k].weight;
      incident_[edges[k].to].push_back(k);
      incident_[edges[k].from].push_back(k);
    }
    discord_.assign(edges.size(), 0);
    for (std::size_t k = 0; k < edges.size(); ++k)
      if (state_(to_[k]) != state_(from_[k])) {
        discord_[k] = 1;
        ++n_discordant_;
      }
    if (!edges.empty()) alias_.emplace(weights);
  }

  double total_rate() const { return total_rate_; }
  bool frozen() const { return n_discordant_ == 0; }
  const Vector& state() const { return state_; }

  bool consensus() const {
    for (Eigen::Index i = 1; i < state_.size(); ++i)
      if (state_(i) != state_(0)) return false;
    return true;
  }

  /// Fires one clock; returns the edge as (node, adopted_from). Opinions are
  /// copied bit-for-bit, so later equality comparisons are exact.
  std::pair<int, int> step(StreamRng& rng) {
    const std::size_t e = alias_->pick(rng);
    const int i = to_[e], j = from_[e];
    if (state_(i) != state_(j)) {
      state_(i) = state_(j);
      for (std::size_t k : incident_[i]) {
        const char d = state_(to_[k]) != state_(from_[k]) ? 1 : 0;
        n_discordant_ += d - discord_[k];
        discord_[k] = d;
      }
    }
    return {i, j};
  }

 private:
  Vector state_;
  std::vector<int> to_, from_;
  std::vector<std::vector<std::size_t>> incident_;
  std::vector<char> discord_;
  std::optional<AliasTable> alias_;
  double total_rate_ = 0.0;
  int n_discordant_ = 0;
};

}  // namespace detail

/// One Gillespie path on [0, t_end]. Every clock ring is recorded, including
/// no-op rings on already-agreeing edges, until the state freezes; from then
/// on the path is constant and simulation stops early.
inline JumpTrajectory simulate(const WeightedDigraph& g, const Vector& s0,
                               double t_end, std::uint64_t seed) {
  if (!(t_end >= 0.0) || !std::isfinite(t_end))
    throw ValidationError("simulation horizon must be non-negative");
  detail::JumpStepper stepper(g, s0);
  StreamRng rng(seed, 0);

  JumpTrajectory traj;
  traj.initial = s0;
  if (stepper.frozen()) {
    traj.frozen_at = 0.0;
    if (stepper.consensus()) traj.absorbed_at = 0.0;
    traj.final_state = stepper.state();
    return traj;
  }

  double t = 0.0;
  while (true) {
    t += rng.exponential(stepper.total_rate());
    if (t > t_end) break;
    auto [node, from] = stepper.step(rng);
    traj.events.push_back({t, node, from});
    if (stepper.frozen()) {
      traj.frozen_at = t;
      if (stepper.consensus()) traj.absorbed_at = t;
      break;
    }
  }
  traj.final_state = stepper.state();
  return traj;
}

/// State at time t of a recorded path (right-continuous step function).
inline Vector replay(const JumpTrajectory& traj, double t) {
  Vector s = traj.initial;
  for (const JumpEvent& e : traj.events) {
    if (e.time > t) break;
    s(e.node) = s(e.adopted_from);
  }
  return s;
}

/// The embedded discrete chain: clocks removed, each step picks edge (i, j)
/// with probability a_ij / sigma. Returns the state sequence including the
/// initial state; stops early once frozen, since every later state would
/// repeat the last one.
inline std::vector<Vector> simulate_embedded(const WeightedDigraph& g,
                                             const Vector& s0, int max_steps,
                                             std::uint64_t seed) {
  if (max_steps < 0) throw ValidationError("max_steps must be non-negative");
  detail::JumpStepper stepper(g, s0);
  StreamRng rng(seed, 0);
  std::vector<Vector> states;
  states.reserve(static_cast<std::size_t>(max_steps) + 1);
  states.push_back(stepper.state());
  for (int k = 0; k < max_steps && !stepper.frozen(); ++k) {
    stepper.step(rng);
    states.push_back(stepper.state());
  }
  return states;
}

struct ReplicateBatch {
  int n_reps = 0;
  std::uint64_t seed = 0;
  std::vector<double> grid;
  /// Rows: grid times; columns: agents.
  Matrix mean_estimate;
  Matrix mean_se;
  Vector variance_estimate;
  Vector variance_se;
  /// Fraction of replicates already at consensus by each grid time;
  /// non-decreasing.
  Vector absorbed_fraction;
};

namespace detail {

/// Deterministic pairwise reduction: accumulators combine like a binary
/// counter, so the summation tree depends only on the replicate count, never
/// on scheduling. Error grows O(log n) instead of O(n).
class PairwiseReducer {
 public:
  void add(std::vector<double> x) {
    for (std::size_t level = 0;; ++level) {
      if (level == levels_.size()) {
        levels_.push_back(std::move(x));
        return;
      }
      if (levels_[level].empty()) {
        levels_[level] = std::move(x);
        return;
      }
      for (std::size_t k = 0; k < x.size(); ++k) x[k] += levels_[level][k];
      levels_[level].clear();
    }
  }

  std::vector<double> total(std::size_t width) const {
    std::vector<double> out(width, 0.0);
    for (const auto& level : levels_)
      if (!level.empty())
        for (std::size_t k = 0; k < width; ++k) out[k] += level[k];
    return out;
  }

 private:
  std::vector<std::vector<double>> levels_;
};

}  // namespace detail

/// Monte Carlo over independent replicates. Replicate r draws from the
/// counter-based stream (master_seed, r), and the per-grid statistics are
/// combined with a pairwise reduction, so results are bit-identical for a
/// given (master_seed, n_reps, grid) regardless of batching.
inline ReplicateBatch monte_carlo(const WeightedDigraph& g, const Vector& s0,
                                  const std::vector<double>& grid, int n_reps,
                                  std::uint64_t master_seed) {
  if (n_reps < 2) throw ValidationError("Monte Carlo needs at least two replicates");
  if (grid.empty()) throw ValidationError("Monte Carlo needs a non-empty time grid");
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (!(grid[k] >= 0.0) || !std::isfinite(grid[k]))
      throw ValidationError("grid times must be finite and non-negative");
    if (k > 0 && grid[k] < grid[k - 1])
      throw ValidationError("grid times must be non-decreasing");
  }
  const int n = g.n_nodes();
  const std::size_t gsize = grid.size();
  // Layout per replicate: [G*N state][G*N state^2][G V][G V^2][G absorbed].
  const std::size_t width = gsize * (2 * static_cast<std::size_t>(n) + 3);
  const std::size_t sq_off = gsize * n;
  const std::size_t v_off = 2 * gsize * n;
  const std::size_t vv_off = v_off + gsize;
  const std::size_t abs_off = vv_off + gsize;

  detail::PairwiseReducer sums;
  std::vector<double> row(width);

  for (int rep = 0; rep < n_reps; ++rep) {
    detail::JumpStepper stepper(g, s0);
    StreamRng rng(master_seed, static_cast<std::uint64_t>(rep));
    double t = 0.0;
    bool done = stepper.frozen();
    std::optional<double> absorbed_at;
    if (done && stepper.consensus()) absorbed_at = 0.0;

    std::fill(row.begin(), row.end(), 0.0);
    std::size_t gi = 0;
    auto emit_until = [&](double horizon) {
      // Record every grid point strictly before the next event time.
      for (; gi < gsize && grid[gi] < horizon; ++gi) {
        const Vector& s = stepper.state();
        double mean = s.mean();
        double var = 0.0;
        for (int i = 0; i < n; ++i) {
          const double si = s(i);
          row[gi * n + i] = si;
          row[sq_off + gi * n + i] = si * si;
          var += (si - mean) * (si - mean);
        }
        var /= n;
        row[v_off + gi] = var;
        row[vv_off + gi] = var * var;
        row[abs_off + gi] = absorbed_at && *absorbed_at <= grid[gi] ? 1.0 : 0.0;
      }
    };

    while (!done && gi < gsize) {
      const double t_next = t + rng.exponential(stepper.total_rate());
      emit_until(t_next);
      t = t_next;
      if (gi >= gsize) break;
      stepper.step(rng);
      if (stepper.frozen()) {
        done = true;
        if (stepper.consensus()) absorbed_at = t;
      }
    }
    emit_until(std::numeric_limits<double>::infinity());
    sums.add(row);
  }

  const std::vector<double> total = sums.total(width);
  const double nr = static_cast<double>(n_reps);
  ReplicateBatch batch;
  batch.n_reps = n_reps;
  batch.seed = master_seed;
  batch.grid = grid;
  batch.mean_estimate.resize(gsize, n);
  batch.mean_se.resize(gsize, n);
  batch.variance_estimate.resize(gsize);
  batch.variance_se.resize(gsize);
  batch.absorbed_fraction.resize(gsize);

  auto standard_error = [&](double sum, double sum_sq) {
    const double mean = sum / nr;
    const double ss = std::max(0.0, sum_sq - nr * mean * mean);
    return std::sqrt(ss / (nr - 1.0)) / std::sqrt(nr);
  };

  for (std::size_t gi = 0; gi < gsize; ++gi) {
    for (int i = 0; i < n; ++i) {
      const double s1 = total[gi * n + i];
      const double s2 = total[sq_off + gi * n + i];
      batch.mean_estimate(gi, i) = s1 / nr;
      batch.mean_se(gi, i) = standard_error(s1, s2);
    }
    batch.variance_estimate(gi) = total[v_off + gi] / nr;
    batch.variance_se(gi) = standard_error(total[v_off + gi], total[vv_off + gi]);
    batch.absorbed_fraction(gi) = total[abs_off + gi] / nr;
  }
  return batch;
}

// ---------------------------------------------------------------------------
// Exact absorbing-chain analysis of the embedded chain on the full state
// space (opinion tuples over the initial values). Small graphs only.
// ---------------------------------------------------------------------------

struct ExactChainResult {
  /// Whether absorption into some frozen state is certain from s0.
  bool absorbing = false;
  /// Probability that the chain started at s0 ever freezes.
  double absorption_probability = 0.0;
  /// Frozen states reachable from s0 with their absorption probabilities.
  std::vector<std::pair<Vector, double>> absorbing_states;
  /// E[final opinion of each node | eventual freeze], weighted by
  /// absorption probabilities (unnormalized when absorption_probability < 1).
  Vector expected_final;
};

inline ExactChainResult exact_chain(const WeightedDigraph& g, const Vector& s0) {
  const int n = g.n_nodes();
  if (n > 8)
    throw ValidationError("exact chain analysis supports at most 8 nodes; "
                          "use monte_carlo for larger graphs");
  if (s0.size() != n) throw ValidationError("initial state size mismatch");

  // Opinions only move between existing values, so states are tuples of
  // indices into the distinct initial values, packed 8 bits per node.
  std::vector<double> values;
  std::vector<int> idx0(n);
  for (int i = 0; i < n; ++i) {
    const double v = s0(i);
    auto it = std::find(values.begin(), values.end(), v);
    if (it == values.end()) {
      idx0[i] = static_cast<int>(values.size());
      values.push_back(v);
    } else {
      idx0[i] = static_cast<int>(it - values.begin());
    }
  }
  auto pack = [&](const std::vector<int>& idx) {
    std::uint64_t key = 0;
    for (int i = 0; i < n; ++i) key |= static_cast<std::uint64_t>(idx[i]) << (8 * i);
    return key;
  };

  const auto& edges = g.edges();
  const double sigma = g.total_weight();
  auto is_frozen = [&](const std::vector<int>& idx) {
    for (const Edge& e : edges)
      if (idx[e.to] != idx[e.from]) return false;
    return true;
  };

  // Breadth-first enumeration of the reachable state space.
  constexpr std::size_t kBudget = 1000000;
  std::vector<std::vector<int>> states;
  std::unordered_map<std::uint64_t, int> id_of;
  std::vector<std::vector<std::pair<int, double>>> trans;  // state -> (next, prob)
  states.push_back(idx0);
  id_of[pack(idx0)] = 0;
  for (std::size_t cur = 0; cur < states.size(); ++cur) {
    std::vector<int> idx = states[cur];
    std::unordered_map<std::uint64_t, double> nexts;
    if (!is_frozen(idx)) {
      for (const Edge& e : edges) {
        const int old = idx[e.to];
        idx[e.to] = idx[e.from];
        nexts[pack(idx)] += e.weight / sigma;
        idx[e.to] = old;
      }
    }
    trans.emplace_back();
    for (const auto& [key, p] : nexts) {
      auto [it, inserted] = id_of.try_emplace(key, static_cast<int>(states.size()));
      if (inserted) {
        if (states.size() >= kBudget)
          throw ValidationError("reachable state space exceeds 1e6 states; "
                                "use monte_carlo instead");
        std::vector<int> unpacked(n);
        for (int i = 0; i < n; ++i)
          unpacked[i] = static_cast<int>((key >> (8 * i)) & 0xff);
        states.push_back(std::move(unpacked));
      }
      trans[cur].push_back({it->second, p});
    }
  }

  const int n_states = static_cast<int>(states.size());
  std::vector<char> frozen(n_states, 0);
  std::vector<int> frozen_list;
  for (int sid = 0; sid < n_states; ++sid)
    if (trans[sid].empty()) {
      frozen[sid] = 1;
      frozen_list.push_back(sid);
    }

  // Reverse reachability from the frozen set: states outside it can never
  // absorb and are dropped from the linear system.
  std::vector<std::vector<int>> rev(n_states);
  for (int sid = 0; sid < n_states; ++sid)
    for (const auto& [next, p] : trans[sid]) rev[next].push_back(sid);
  std::vector<char> can_absorb(n_states, 0);
  {
    std::vector<int> queue = frozen_list;
    for (int sid : frozen_list) can_absorb[sid] = 1;
    while (!queue.empty()) {
      int sid = queue.back();
      queue.pop_back();
      for (int prev : rev[sid])
        if (!can_absorb[prev]) {
          can_absorb[prev] = 1;
          queue.push_back(prev);
        }
    }
  }

  ExactChainResult result;
  result.expected_final = Vector::Zero(n);

  auto state_vector = [&](int sid) {
    Vector s(n);
    for (int i = 0; i < n; ++i) s(i) = values[states[sid][i]];
    return s;
  };

  if (frozen[0]) {
    result.absorbing = true;
    result.absorption_probability = 1.0;
    result.absorbing_states.push_back({state_vector(0), 1.0});
    result.expected_final = state_vector(0);
    return result;
  }

  result.absorbing = true;
  for (int sid = 0; sid < n_states; ++sid)
    if (!can_absorb[sid]) result.absorbing = false;
  if (!can_absorb[0]) {
    // Freezing is impossible from here; probabilities are all zero.
    return result;
  }

  // Transient states that can absorb, solved via (I - Q) H = R.
  std::vector<int> tid(n_states, -1);
  std::vector<int> transient;
  for (int sid = 0; sid < n_states; ++sid)
    if (!frozen[sid] && can_absorb[sid]) {
      tid[sid] = static_cast<int>(transient.size());
      transient.push_back(sid);
    }
  std::vector<int> aid(n_states, -1);
  for (std::size_t k = 0; k < frozen_list.size(); ++k) aid[frozen_list[k]] = static_cast<int>(k);

  const int nt = static_cast<int>(transient.size());
  const int na = static_cast<int>(frozen_list.size());
  Eigen::SparseMatrix<double> iq(nt, nt);
  Matrix r = Matrix::Zero(nt, na);
  std::vector<Eigen::Triplet<double>> triplets;
  for (int k = 0; k < nt; ++k) {
    triplets.push_back({k, k, 1.0});
    for (const auto& [next, p] : trans[transient[k]]) {
      if (frozen[next])
        r(k, aid[next]) += p;
      else if (tid[next] >= 0)
        triplets.push_back({k, tid[next], -p});
      // Transitions into non-absorbing states shed probability mass that
      // never returns; dropping them is exact for absorption quantities.
    }
  }
  iq.setFromTriplets(triplets.begin(), triplets.end());
  Eigen::SparseLU<Eigen::SparseMatrix<double>> solver;
  solver.compute(iq);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("absorbing-chain linear solve failed");
  Matrix h = solver.solve(r);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("absorbing-chain linear solve failed");

  const int row0 = tid[0];
  for (int a = 0; a < na; ++a) {
    const double p = h(row0, a);
    if (p > 1e-15) {
      Vector s = state_vector(frozen_list[a]);
      result.absorption_probability += p;
      result.expected_final += p * s;
      result.absorbing_states.push_back({std::move(s), p});
    }
  }
  return result;
}

}  // namespace consensus

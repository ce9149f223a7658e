#pragma once

// Benchmark graph families.
//
// ring(n, k): symmetric circulant, every node coupled to its k nearest
// neighbours on each side with unit weight. Its Laplacian eigenvalues have
// the closed form lambda_m = sum_{d=1..k} (2 - 2 cos(2 pi m d / n)).
//
// bridged clusters(m): two complete symmetric m-cliques joined by one
// symmetric unit bridge; the gap lambda2 collapses as the clique size grows,
// which makes it the standard slow-mixing stress case.
//
// battle(...): a w x h grid of undecided agents with two stubborn cliques
// pinned at -1 and +1, each injecting one-way influence into a few rows of
// its side of the grid. Exactly two isolated blocks, so consensus never
// happens; the interesting output is which side each grid agent ends up
// leaning toward.

#include <consensus/graph.hpp>
#include <consensus/rng.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <queue>
#include <string>
#include <vector>

#include <json.hpp>

namespace consensus {

struct Scenario {
  std::string name;
  WeightedDigraph graph;
  Vector s0;
  nlohmann::json params;
  /// Structural facts the generator guarantees, for downstream checks.
  nlohmann::json expected;
};

inline WeightedDigraph make_ring(int n, int k) {
  if (n < 3) throw ValidationError("ring needs at least three nodes");
  if (k < 1 || 2 * k >= n)
    throw ValidationError("ring coupling range must satisfy 1 <= k < n/2");
  std::vector<Edge> edges;
  edges.reserve(static_cast<std::size_t>(2 * n) * k);
  for (int i = 0; i < n; ++i)
    for (int d = 1; d <= k; ++d) {
      edges.push_back({i, (i + d) % n, 1.0});
      edges.push_back({i, (i - d + n) % n, 1.0});
    }
  return WeightedDigraph(n, std::move(edges));
}

/// Closed-form spectral gap of ring(n, k).
inline double ring_lambda2(int n, int k) {
  double best = std::numeric_limits<double>::infinity();
  for (int m = 1; m < n; ++m) {
    double lam = 0.0;
    for (int d = 1; d <= k; ++d)
      lam += 2.0 - 2.0 * std::cos(2.0 * std::numbers::pi * m * d / n);
    best = std::min(best, lam);
  }
  return best;
}

inline WeightedDigraph make_bridged_clusters(int m) {
  if (m < 2) throw ValidationError("bridged clusters need cliques of at least two");
  std::vector<Edge> edges;
  for (int base : {0, m})
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j)
        if (i != j) edges.push_back({base + i, base + j, 1.0});
  edges.push_back({m - 1, m, 1.0});
  edges.push_back({m, m - 1, 1.0});
  return WeightedDigraph(2 * m, std::move(edges));
}

inline Scenario make_battle(int width = 20, int height = 10, int block_size = 5,
                            int links_per_side = 3, std::uint64_t seed = 0) {
  if (width < 2 || height < 1)
    throw ValidationError("battle grid needs width >= 2 and height >= 1");
  if (block_size < 1) throw ValidationError("battle blocks need at least one node");
  if (links_per_side < 1 || links_per_side > height)
    throw ValidationError("links per side must be between 1 and the grid height");

  const int n_grid = width * height;
  const int left_base = n_grid;
  const int right_base = n_grid + block_size;
  const int n = n_grid + 2 * block_size;
  auto grid_id = [&](int x, int y) { return y * width + x; };

  std::vector<Edge> edges;
  // Symmetric unit lattice on the grid.
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      if (x + 1 < width) {
        edges.push_back({grid_id(x, y), grid_id(x + 1, y), 1.0});
        edges.push_back({grid_id(x + 1, y), grid_id(x, y), 1.0});
      }
      if (y + 1 < height) {
        edges.push_back({grid_id(x, y), grid_id(x, y + 1), 1.0});
        edges.push_back({grid_id(x, y + 1), grid_id(x, y), 1.0});
      }
    }
  // Complete symmetric cliques inside each stubborn block.
  for (int base : {left_base, right_base})
    for (int i = 0; i < block_size; ++i)
      for (int j = 0; j < block_size; ++j)
        if (i != j) edges.push_back({base + i, base + j, 1.0});
  // One-way injections into evenly spaced rows of the outer columns.
  for (int t = 0; t < links_per_side; ++t) {
    const int row = static_cast<int>((2 * t + 1) * static_cast<long long>(height) /
                                     (2 * links_per_side));
    edges.push_back({grid_id(0, row), left_base + t % block_size, 1.0});
    edges.push_back({grid_id(width - 1, row), right_base + t % block_size, 1.0});
  }

  Scenario sc;
  sc.name = "battle";
  sc.graph = WeightedDigraph(n, std::move(edges));
  sc.s0 = Vector(n);
  StreamRng rng(seed, 0);
  for (int i = 0; i < n_grid; ++i) sc.s0(i) = rng.uniform(-1.0, 1.0);
  for (int i = 0; i < block_size; ++i) {
    sc.s0(left_base + i) = -1.0;
    sc.s0(right_base + i) = 1.0;
  }
  sc.params = {{"width", width},
               {"height", height},
               {"block_size", block_size},
               {"links_per_side", links_per_side},
               {"seed", seed}};
  sc.expected = {{"isolated_blocks", 2},
                 {"left_value", -1.0},
                 {"right_value", 1.0},
                 {"grid_nodes", n_grid}};
  return sc;
}

/// Hop distances over the undirected shape from a source set; -1 when
/// unreachable.
inline std::vector<int> undirected_distances(const WeightedDigraph& g,
                                             const std::vector<int>& sources) {
  std::vector<int> dist(g.n_nodes(), -1);
  std::queue<int> q;
  for (int s : sources) {
    if (s < 0 || s >= g.n_nodes()) throw ValidationError("source out of range");
    if (dist[s] == -1) {
      dist[s] = 0;
      q.push(s);
    }
  }
  while (!q.empty()) {
    int u = q.front();
    q.pop();
    for (const auto& lists : {g.influencers_of(u), g.audience_of(u)})
      for (const auto& [v, w] : lists) {
        (void)w;
        if (dist[v] == -1) {
          dist[v] = dist[u] + 1;
          q.push(v);
        }
      }
  }
  return dist;
}

/// Spearman rank correlation with average ranks on ties.
inline double spearman_rho(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw ValidationError("spearman needs matching lengths");
  const std::size_t n = x.size();
  if (n < 2) throw ValidationError("spearman needs at least two points");

  auto ranks = [](const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    for (std::size_t k = 0; k < n; ++k) order[k] = k;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(n);
    std::size_t k = 0;
    while (k < n) {
      std::size_t j = k;
      while (j + 1 < n && v[order[j + 1]] == v[order[k]]) ++j;
      const double avg = (static_cast<double>(k) + static_cast<double>(j)) / 2.0 + 1.0;
      for (std::size_t t = k; t <= j; ++t) r[order[t]] = avg;
      k = j + 1;
    }
    return r;
  };

  const std::vector<double> rx = ranks(x), ry = ranks(y);
  double mx = 0, my = 0;
  for (std::size_t k = 0; k < n; ++k) {
    mx += rx[k];
    my += ry[k];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t k = 0; k < n; ++k) {
    sxy += (rx[k] - mx) * (ry[k] - my);
    sxx += (rx[k] - mx) * (rx[k] - mx);
    syy += (ry[k] - my) * (ry[k] - my);
  }
  if (sxx == 0.0 || syy == 0.0)
    throw ValidationError("spearman undefined when one variable is constant");
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace consensus

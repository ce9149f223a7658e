#pragma once

// Frobenius-type structure of the influence graph: strongly connected
// components, their condensation ordered along the direction influence
// travels, and the Isolated / Absorbing / Neither classification.
//
// A block is Isolated when no outside agent influences it (its rows of the
// Laplacian are self-contained), Absorbing when it is influenced from
// outside but influences nobody outside itself, and Neither otherwise.
// Long-run behaviour is owned entirely by the isolated blocks: the network
// reaches consensus from every initial condition iff exactly one block is
// isolated. This holds for the ODE and the jump process alike.

#include <consensus/graph.hpp>

#include <algorithm>
#include <queue>
#include <set>
#include <string>
#include <vector>

namespace consensus {

enum class BlockLabel { Isolated, Absorbing, Neither };

inline const char* to_string(BlockLabel label) {
  switch (label) {
    case BlockLabel::Isolated: return "isolated";
    case BlockLabel::Absorbing: return "absorbing";
    case BlockLabel::Neither: return "neither";
  }
  return "?";
}

struct BlockDecomposition {
  /// Blocks in topological order of the influence condensation (isolated
  /// blocks first); node lists sorted ascending.
  std::vector<std::vector<int>> blocks;
  /// node -> index into `blocks`.
  std::vector<int> block_of;
  /// Permutation concatenating the blocks: position -> original node.
  /// Applying it to L yields a block lower triangular matrix.
  std::vector<int> permutation;
  /// Condensation arcs (a, b): block a influences block b. Deduplicated,
  /// sorted.
  std::vector<std::pair<int, int>> influence_edges;
  /// Aligned with `blocks`; empty until classify_blocks has run.
  std::vector<BlockLabel> labels;

  bool labeled() const { return !labels.empty(); }

  int isolated_count() const {
    int c = 0;
    for (BlockLabel l : labels)
      if (l == BlockLabel::Isolated) ++c;
    return c;
  }
};

namespace detail {

/// Tarjan over the listening graph (arc u -> v when v influences u), kept
/// iterative so deep chains cannot overflow the call stack. Cycles in that
/// graph are exactly the mutual-influence classes.
inline std::vector<std::vector<int>> tarjan_sccs(const WeightedDigraph& g) {
  const int n = g.n_nodes();
  std::vector<int> index(n, -1), low(n, 0);
  std::vector<char> on_stack(n, 0);
  std::vector<int> stack;
  std::vector<std::vector<int>> sccs;
  int counter = 0;

  struct Frame {
    int node;
    std::size_t next_child;
  };
  std::vector<Frame> frames;

  for (int root = 0; root < n; ++root) {
    if (index[root] != -1) continue;
    frames.push_back({root, 0});
    while (!frames.empty()) {
      Frame& f = frames.back();
      int u = f.node;
      if (f.next_child == 0) {
        index[u] = low[u] = counter++;
        stack.push_back(u);
        on_stack[u] = 1;
      }
      bool descended = false;
      const auto& children = g.influencers_of(u);
      while (f.next_child < children.size()) {
        int v = children[f.next_child++].first;
        if (index[v] == -1) {
          frames.push_back({v, 0});
          descended = true;
          break;
        }
        if (on_stack[v]) low[u] = std::min(low[u], index[v]);
      }
      if (descended) continue;
      if (low[u] == index[u]) {
        std::vector<int> scc;
        int v;
        do {
          v = stack.back();
          stack.pop_back();
          on_stack[v] = 0;
          scc.push_back(v);
        } while (v != u);
        std::sort(scc.begin(), scc.end());
        sccs.push_back(std::move(scc));
      }
      frames.pop_back();
      if (!frames.empty()) {
        int parent = frames.back().node;
        low[parent] = std::min(low[parent], low[u]);
      }
    }
  }
  return sccs;
}

}  // namespace detail

/// Mutual-influence classes, topologically ordered so that influence flows
/// from earlier blocks to later ones. Ties are broken by the smallest
/// original node index in a block, which makes the order a pure function of
/// the graph. Labels are left empty; see classify_blocks.
inline BlockDecomposition strongly_connected_components(const WeightedDigraph& g) {
  const int n = g.n_nodes();
  std::vector<std::vector<int>> raw = detail::tarjan_sccs(g);
  const int b = static_cast<int>(raw.size());

  std::vector<int> block_of_raw(n, -1);
  for (int k = 0; k < b; ++k)
    for (int v : raw[k]) block_of_raw[v] = k;

  // Condensation arcs in influence direction: edge (i <- j) crossing blocks
  // means block_of(j) influences block_of(i).
  std::set<std::pair<int, int>> arcs;
  for (const Edge& e : g.edges()) {
    int bi = block_of_raw[e.to], bj = block_of_raw[e.from];
    if (bi != bj) arcs.insert({bj, bi});
  }

  // Kahn's algorithm, min-heap keyed by smallest node index per block.
  std::vector<int> in_degree(b, 0);
  std::vector<std::vector<int>> succ(b);
  for (const auto& [a, c] : arcs) {
    succ[a].push_back(c);
    ++in_degree[c];
  }
  auto key = [&](int k) { return raw[k].front(); };
  auto cmp = [&](int x, int y) { return key(x) > key(y); };
  std::priority_queue<int, std::vector<int>, decltype(cmp)> ready(cmp);
  for (int k = 0; k < b; ++k)
    if (in_degree[k] == 0) ready.push(k);

  std::vector<int> order;
  order.reserve(b);
  while (!ready.empty()) {
    int k = ready.top();
    ready.pop();
    order.push_back(k);
    for (int c : succ[k])
      if (--in_degree[c] == 0) ready.push(c);
  }

  BlockDecomposition d;
  d.blocks.reserve(b);
  std::vector<int> new_index(b, -1);
  for (int pos = 0; pos < b; ++pos) {
    new_index[order[pos]] = pos;
    d.blocks.push_back(raw[order[pos]]);
  }
  d.block_of.assign(n, -1);
  d.permutation.reserve(n);
  for (int pos = 0; pos < b; ++pos)
    for (int v : d.blocks[pos]) {
      d.block_of[v] = pos;
      d.permutation.push_back(v);
    }
  for (const auto& [a, c] : arcs)
    d.influence_edges.push_back({new_index[a], new_index[c]});
  std::sort(d.influence_edges.begin(), d.influence_edges.end());
  return d;
}

/// Returns a copy of `d` with labels filled in. Classification is purely
/// structural: it reads which blocks receive or exert outside influence.
inline BlockDecomposition classify_blocks(const WeightedDigraph& g,
                                          const BlockDecomposition& d) {
  const int b = static_cast<int>(d.blocks.size());
  std::vector<char> has_in(b, 0), has_out(b, 0);
  for (const Edge& e : g.edges()) {
    int bi = d.block_of[e.to], bj = d.block_of[e.from];
    if (bi != bj) {
      has_in[bi] = 1;
      has_out[bj] = 1;
    }
  }
  BlockDecomposition out = d;
  out.labels.resize(b);
  for (int k = 0; k < b; ++k) {
    if (!has_in[k])
      out.labels[k] = BlockLabel::Isolated;
    else if (!has_out[k])
      out.labels[k] = BlockLabel::Absorbing;
    else
      out.labels[k] = BlockLabel::Neither;
  }
  return out;
}

/// Exactly one isolated block: consensus from every initial condition.
inline bool predicts_unconditional_consensus(const BlockDecomposition& d) {
  if (!d.labeled())
    throw std::logic_error("predicts_unconditional_consensus needs labels; "
                           "run classify_blocks first");
  return d.isolated_count() == 1;
}

/// L permuted by the decomposition's block order. Entries above the diagonal
/// blocks are exactly zero because they are copied, never computed.
inline Matrix frobenius_form(const LaplacianMatrix& L, const BlockDecomposition& d) {
  const int n = L.size();
  if (static_cast<int>(d.permutation.size()) != n)
    throw ValidationError("decomposition size does not match Laplacian");
  Matrix p(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) p(r, c) = L.matrix()(d.permutation[r], d.permutation[c]);
  return p;
}

/// Diagonal block k of the permuted Laplacian.
inline Matrix diagonal_block(const LaplacianMatrix& L, const BlockDecomposition& d,
                             int k) {
  const auto& nodes = d.blocks.at(k);
  const int m = static_cast<int>(nodes.size());
  Matrix blockm(m, m);
  for (int r = 0; r < m; ++r)
    for (int c = 0; c < m; ++c) blockm(r, c) = L.matrix()(nodes[r], nodes[c]);
  return blockm;
}

}  // namespace consensus

#pragma once

// Weighted influence digraphs and their Laplacians.
//
// Convention used throughout: the weight a_ij attached to the ordered pair
// (i, j) means "agent j influences agent i". Row i of the Laplacian collects
// everything agent i listens to:
//
//   L_ii = sigma_i = sum_j a_ij,   L_ij = -a_ij  (i != j)
//
// so the consensus dynamics read sdot = -L s, and sigma_i is agent i's total
// incoming influence rate.

#include <consensus/common.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <queue>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

namespace consensus {

/// One influence link: `from` influences `to` with positive rate `weight`.
/// In matrix terms this is the entry a_{to,from}.
struct Edge {
  int to = 0;
  int from = 0;
  double weight = 0.0;

  friend bool operator==(const Edge&, const Edge&) = default;
};

class WeightedDigraph {
 public:
  WeightedDigraph() = default;

  /// Zero-weight edges are dropped. Self-loops, duplicate pairs, negative
  /// weights, and out-of-range indices raise ValidationError.
  WeightedDigraph(int n_nodes, std::vector<Edge> edges) : n_(n_nodes) {
    if (n_nodes <= 0) throw ValidationError("graph needs at least one node");
    std::map<std::pair<int, int>, double> seen;
    for (const Edge& e : edges) {
      if (e.to < 0 || e.to >= n_ || e.from < 0 || e.from >= n_)
        throw ValidationError("edge (" + std::to_string(e.to) + ", " +
                              std::to_string(e.from) + ") out of range for " +
                              std::to_string(n_) + " nodes");
      if (e.to == e.from)
        throw ValidationError("self-loop on node " + std::to_string(e.to));
      if (e.weight < 0.0)
        throw ValidationError("negative weight on edge (" + std::to_string(e.to) +
                              ", " + std::to_string(e.from) + ")");
      if (!std::isfinite(e.weight))
        throw ValidationError("non-finite weight on edge (" + std::to_string(e.to) +
                              ", " + std::to_string(e.from) + ")");
      if (e.weight == 0.0) continue;
      if (!seen.emplace(std::pair{e.to, e.from}, e.weight).second)
        throw ValidationError("duplicate edge (" + std::to_string(e.to) + ", " +
                              std::to_string(e.from) + ")");
    }
    edges_.reserve(seen.size());
    influencers_.assign(n_, {});
    audience_.assign(n_, {});
    in_strength_.assign(n_, 0.0);
    for (const auto& [pair, w] : seen) {
      auto [to, from] = pair;
      edges_.push_back({to, from, w});
      influencers_[to].push_back({from, w});
      audience_[from].push_back({to, w});
      in_strength_[to] += w;
    }
  }

  int n_nodes() const { return n_; }

  /// Edges in (to, from) lexicographic order.
  const std::vector<Edge>& edges() const { return edges_; }

  /// Pairs (j, a_ij): the agents i listens to.
  const std::vector<std::pair<int, double>>& influencers_of(int i) const {
    return influencers_[i];
  }

  /// Pairs (i, a_ij): the agents that listen to j.
  const std::vector<std::pair<int, double>>& audience_of(int j) const {
    return audience_[j];
  }

  /// a_ij, or 0 when the pair is absent.
  double weight(int to, int from) const {
    for (const auto& [j, w] : influencers_[to])
      if (j == from) return w;
    return 0.0;
  }

  /// sigma_i: total incoming rate of agent i.
  double in_strength(int i) const { return in_strength_[i]; }

  double out_strength(int j) const {
    double s = 0.0;
    for (const auto& [i, w] : audience_[j]) s += w;
    return s;
  }

  double max_in_strength() const {
    double m = 0.0;
    for (double s : in_strength_) m = std::max(m, s);
    return m;
  }

  double total_weight() const {
    double s = 0.0;
    for (const Edge& e : edges_) s += e.weight;
    return s;
  }

  /// a_ij == a_ji for every pair.
  bool is_symmetric() const {
    for (const Edge& e : edges_)
      if (weight(e.from, e.to) != e.weight) return false;
    return true;
  }

  /// In-strength equals out-strength on every node (1e-12 relative).
  bool is_balanced() const {
    double scale = std::max(1.0, total_weight());
    for (int i = 0; i < n_; ++i)
      if (std::abs(in_strength_[i] - out_strength(i)) > 1e-12 * scale) return false;
    return true;
  }

 private:
  int n_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::vector<std::pair<int, double>>> influencers_;
  std::vector<std::vector<std::pair<int, double>>> audience_;
  std::vector<double> in_strength_;
};

/// Dense Laplacian with its structural invariants checked on construction:
/// rows sum to zero, off-diagonal entries are non-positive.
class LaplacianMatrix {
 public:
  explicit LaplacianMatrix(Matrix m) : m_(std::move(m)) {
    if (m_.rows() != m_.cols() || m_.rows() == 0)
      throw ValidationError("Laplacian must be square and non-empty");
    const double scale = std::max(1.0, m_.cwiseAbs().maxCoeff());
    for (Eigen::Index i = 0; i < m_.rows(); ++i) {
      if (std::abs(m_.row(i).sum()) > 1e-10 * scale)
        throw ValidationError("Laplacian row " + std::to_string(i) +
                              " does not sum to zero");
      for (Eigen::Index j = 0; j < m_.cols(); ++j)
        if (i != j && m_(i, j) > 0.0)
          throw ValidationError("Laplacian has positive off-diagonal entry");
    }
  }

  const Matrix& matrix() const { return m_; }
  int size() const { return static_cast<int>(m_.rows()); }

  /// max_i sigma_i.
  double max_diagonal() const { return m_.diagonal().maxCoeff(); }

  bool is_symmetric() const {
    const double scale = std::max(1.0, m_.cwiseAbs().maxCoeff());
    return (m_ - m_.transpose()).cwiseAbs().maxCoeff() <= 1e-14 * scale;
  }

 private:
  Matrix m_;
};

/// Dense construction is deliberate: the analysis pipeline (eigensolvers,
/// SVD, matrix exponentials) is dense anyway. Guarded at N <= 4096.
inline LaplacianMatrix build_laplacian(const WeightedDigraph& g) {
  const int n = g.n_nodes();
  if (n > 4096)
    throw ValidationError("dense Laplacian limited to 4096 nodes, got " +
                          std::to_string(n));
  Matrix m = Matrix::Zero(n, n);
  for (const Edge& e : g.edges()) {
    m(e.to, e.from) = -e.weight;
    m(e.to, e.to) += e.weight;
  }
  return LaplacianMatrix(std::move(m));
}

enum class Connectivity { Strong, Weak, Disconnected };

inline const char* to_string(Connectivity c) {
  switch (c) {
    case Connectivity::Strong: return "strong";
    case Connectivity::Weak: return "weak";
    case Connectivity::Disconnected: return "disconnected";
  }
  return "?";
}

namespace detail {

/// BFS over influence arcs. `forward` follows j -> audience(j) (the direction
/// influence travels); otherwise i -> influencers(i).
inline std::vector<char> reachable_from(const WeightedDigraph& g, int start,
                                        bool forward) {
  std::vector<char> seen(g.n_nodes(), 0);
  std::queue<int> q;
  seen[start] = 1;
  q.push(start);
  while (!q.empty()) {
    int u = q.front();
    q.pop();
    const auto& next = forward ? g.audience_of(u) : g.influencers_of(u);
    for (const auto& [v, w] : next) {
      (void)w;
      if (!seen[v]) {
        seen[v] = 1;
        q.push(v);
      }
    }
  }
  return seen;
}

}  // namespace detail

/// Strong: every agent influences every other through some chain.
/// Weak: for every pair, at least one influences the other.
/// Disconnected: some pair has no influence path in either direction.
inline Connectivity connectivity_kind(const WeightedDigraph& g) {
  const int n = g.n_nodes();
  std::vector<std::vector<char>> reach(n);
  for (int i = 0; i < n; ++i) reach[i] = detail::reachable_from(g, i, true);
  bool strong = true, weak = true;
  for (int i = 0; i < n && weak; ++i)
    for (int j = 0; j < n; ++j) {
      if (!reach[i][j]) strong = false;
      if (!reach[i][j] && !reach[j][i]) {
        weak = false;
        break;
      }
    }
  if (strong) return Connectivity::Strong;
  return weak ? Connectivity::Weak : Connectivity::Disconnected;
}

/// Connectivity of the undirected shape (edges with direction forgotten).
inline bool undirected_shape_connected(const WeightedDigraph& g) {
  const int n = g.n_nodes();
  std::vector<char> seen(n, 0);
  std::queue<int> q;
  seen[0] = 1;
  q.push(0);
  int count = 1;
  while (!q.empty()) {
    int u = q.front();
    q.pop();
    for (const auto& lists : {g.influencers_of(u), g.audience_of(u)})
      for (const auto& [v, w] : lists) {
        (void)w;
        if (!seen[v]) {
          seen[v] = 1;
          ++count;
          q.push(v);
        }
      }
  }
  return count == n;
}

/// Order-insensitive fingerprint of (n, sorted edge triples).
inline std::uint64_t graph_hash(const WeightedDigraph& g) {
  std::uint64_t h = detail::fnv1a_append(0xcbf29ce484222325ull,
                                         static_cast<std::uint64_t>(g.n_nodes()));
  for (const Edge& e : g.edges()) {
    h = detail::fnv1a_append(h, static_cast<std::uint64_t>(e.to));
    h = detail::fnv1a_append(h, static_cast<std::uint64_t>(e.from));
    h = detail::fnv1a_append(h, e.weight);
  }
  return h;
}

inline std::uint64_t matrix_hash(const Matrix& m) {
  std::uint64_t h = detail::fnv1a_append(0xcbf29ce484222325ull,
                                         static_cast<std::uint64_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      h = detail::fnv1a_append(h, m(i, j));
  return h;
}

// ---------------------------------------------------------------------------
// Parsing and serialization.
//
// Edge-list format: optional first line "N", then one "i j a_ij" per line.
// '#' starts a comment. Without the header, N = 1 + max index seen.
// JSON format: {"n": N, "edges": [[i, j, a_ij], ...]}.
// ---------------------------------------------------------------------------

namespace detail {

inline bool parse_edge_tokens(const std::string& line, long long& i, long long& j,
                              double& w) {
  std::istringstream in(line);
  std::string extra;
  if (!(in >> i >> j >> w)) return false;
  if (in >> extra) return false;
  return true;
}

}  // namespace detail

inline WeightedDigraph parse_edge_list(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  long long n_header = -1;
  bool saw_header_candidate = false;
  std::vector<Edge> edges;
  std::vector<int> lines_of_edges;
  long long max_index = -1;

  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream probe(line);
    std::string first;
    if (!(probe >> first)) continue;  // blank or comment-only

    long long i, j;
    double w;
    if (!saw_header_candidate && edges.empty()) {
      // First content line: either the node count or a headerless edge.
      std::istringstream single(line);
      long long n;
      std::string extra;
      if (single >> n && !(single >> extra)) {
        if (n <= 0)
          throw ValidationError("node count must be positive at line " +
                                std::to_string(line_no));
        n_header = n;
        saw_header_candidate = true;
        continue;
      }
    }
    if (!detail::parse_edge_tokens(line, i, j, w))
      throw ValidationError("malformed edge at line " + std::to_string(line_no));
    if (i < 0 || j < 0)
      throw ValidationError("negative node index at line " + std::to_string(line_no));
    if (w < 0.0)
      throw ValidationError("negative weight at line " + std::to_string(line_no));
    if (i == j)
      throw ValidationError("self-loop at line " + std::to_string(line_no));
    for (std::size_t k = 0; k < edges.size(); ++k)
      if (edges[k].to == i && edges[k].from == j)
        throw ValidationError("duplicate edge at line " + std::to_string(line_no) +
                              " (first seen at line " +
                              std::to_string(lines_of_edges[k]) + ")");
    max_index = std::max({max_index, i, j});
    edges.push_back({static_cast<int>(i), static_cast<int>(j), w});
    lines_of_edges.push_back(line_no);
  }

  long long n = n_header >= 0 ? n_header : max_index + 1;
  if (n <= 0) throw ValidationError("empty graph description");
  if (max_index >= n)
    throw ValidationError("edge index " + std::to_string(max_index) +
                          " exceeds declared node count " + std::to_string(n));
  return WeightedDigraph(static_cast<int>(n), std::move(edges));
}

inline WeightedDigraph graph_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("n") || !j.contains("edges"))
    throw ValidationError("graph JSON needs fields \"n\" and \"edges\"");
  const long long n = j.at("n").get<long long>();
  if (n <= 0) throw ValidationError("graph JSON: \"n\" must be positive");
  std::vector<Edge> edges;
  int pos = 0;
  for (const auto& entry : j.at("edges")) {
    ++pos;
    if (!entry.is_array() || entry.size() != 3)
      throw ValidationError("graph JSON: edge " + std::to_string(pos) +
                            " is not a [i, j, weight] triple");
    const long long i = entry[0].get<long long>();
    const long long jj = entry[1].get<long long>();
    const double w = entry[2].get<double>();
    if (w < 0.0)
      throw ValidationError("negative weight at edge " + std::to_string(pos));
    if (i < 0 || i >= n || jj < 0 || jj >= n)
      throw ValidationError("node index out of range at edge " + std::to_string(pos));
    if (i == jj)
      throw ValidationError("self-loop at edge " + std::to_string(pos));
    edges.push_back({static_cast<int>(i), static_cast<int>(jj), w});
  }
  return WeightedDigraph(static_cast<int>(n), std::move(edges));
}

/// Accepts either format; JSON is detected by a leading '{'.
inline WeightedDigraph parse_graph(std::string_view text) {
  for (char c : text) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') continue;
    if (c == '{') return graph_from_json(nlohmann::json::parse(text));
    break;
  }
  return parse_edge_list(text);
}

inline std::string serialize_edge_list(const WeightedDigraph& g) {
  std::string out = std::to_string(g.n_nodes()) + "\n";
  for (const Edge& e : g.edges()) {
    out += std::to_string(e.to) + " " + std::to_string(e.from) + " " +
           format_double(e.weight) + "\n";
  }
  return out;
}

inline nlohmann::json graph_to_json(const WeightedDigraph& g) {
  nlohmann::json edges = nlohmann::json::array();
  for (const Edge& e : g.edges())
    edges.push_back(nlohmann::json::array({e.to, e.from, e.weight}));
  return {{"n", g.n_nodes()}, {"edges", std::move(edges)}};
}

}  // namespace consensus

#pragma once

// Independent cross-checks used by the test suite. Everything here is
// implemented from first principles with none of the library's machinery,
// so agreement is evidence rather than tautology.

#include <consensus/graph.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

namespace oracle {

using consensus::Matrix;
using consensus::Vector;
using consensus::WeightedDigraph;

/// Boolean transitive closure by Floyd-Warshall over influence arcs
/// (reach[j][i] true when j influences i through some chain, including
/// j == i).
inline std::vector<std::vector<bool>> influence_closure(const WeightedDigraph& g) {
  const int n = g.n_nodes();
  std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
  for (int i = 0; i < n; ++i) reach[i][i] = true;
  for (const consensus::Edge& e : g.edges()) reach[e.from][e.to] = true;
  for (int k = 0; k < n; ++k)
    for (int a = 0; a < n; ++a)
      if (reach[a][k])
        for (int b = 0; b < n; ++b)
          if (reach[k][b]) reach[a][b] = true;
  return reach;
}

/// Mutual-influence classes straight from the closure.
inline std::vector<std::vector<int>> naive_sccs(const WeightedDigraph& g) {
  const auto reach = influence_closure(g);
  const int n = g.n_nodes();
  std::vector<int> cls(n, -1);
  std::vector<std::vector<int>> groups;
  for (int i = 0; i < n; ++i) {
    if (cls[i] != -1) continue;
    cls[i] = static_cast<int>(groups.size());
    groups.push_back({i});
    for (int j = i + 1; j < n; ++j)
      if (cls[j] == -1 && reach[i][j] && reach[j][i]) {
        cls[j] = cls[i];
        groups.back().push_back(j);
      }
  }
  std::sort(groups.begin(), groups.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  return groups;
}

/// Closed-form solution of the mutual pair with unit weights:
/// s(t) = (mean + (s0 - mean) e^{-2t}) componentwise.
inline Vector mutual_pair_solution(double a, double b, double t) {
  const double mean = (a + b) / 2.0;
  Vector s(2);
  s(0) = mean + (a - mean) * std::exp(-2.0 * t);
  s(1) = mean + (b - mean) * std::exp(-2.0 * t);
  return s;
}

/// Laplacian eigenvalues of the complete symmetric graph K_n with unit
/// weights: 0 once, n with multiplicity n-1.
inline std::vector<double> complete_graph_spectrum(int n) {
  std::vector<double> ev(n, static_cast<double>(n));
  ev[0] = 0.0;
  return ev;
}

/// Circulant eigenvalue lambda_m of the ring(n, k) Laplacian.
inline double ring_eigenvalue(int n, int k, int m) {
  double lam = 0.0;
  for (int d = 1; d <= k; ++d)
    lam += 2.0 - 2.0 * std::cos(2.0 * std::numbers::pi * m * d / n);
  return lam;
}

/// Population variance written as the pairwise double sum
/// (1/(2N^2)) sum_ij (s_j - s_i)^2, an independent formula.
inline double pairwise_variance(const Vector& s) {
  const int n = static_cast<int>(s.size());
  double acc = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) acc += (s(j) - s(i)) * (s(j) - s(i));
  return acc / (2.0 * n * n);
}

/// Dense matrix exponential by scaling and squaring on a Taylor series;
/// slow and simple on purpose.
inline Matrix matrix_exponential(const Matrix& a) {
  const int squarings = 10;
  Matrix x = a / std::pow(2.0, squarings);
  Matrix result = Matrix::Identity(a.rows(), a.cols());
  Matrix term = result;
  for (int k = 1; k <= 24; ++k) {
    term = term * x / static_cast<double>(k);
    result += term;
  }
  for (int k = 0; k < squarings; ++k) result = result * result;
  return result;
}

}  // namespace oracle

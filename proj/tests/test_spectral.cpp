#include <consensus/decomposition.hpp>
#include <consensus/deterministic.hpp>
#include <consensus/scenarios.hpp>
#include <consensus/spectral.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace consensus;

TEST_CASE("mutual pair spectrum", "[spectral]") {
  WeightedDigraph g(2, {{0, 1, 1.0}, {1, 0, 1.0}});
  const LaplacianMatrix L = build_laplacian(g);
  const auto s = spectrum(L);
  REQUIRE(s.symmetric);
  REQUIRE(s.zero_multiplicity == 1);
  REQUIRE(s.lambda2 == Catch::Approx(2.0).margin(1e-12));
  REQUIRE(s.eigenvalues[0].real() == Catch::Approx(0.0).margin(1e-12));
  REQUIRE(s.eigenvalues[1].real() == Catch::Approx(2.0).margin(1e-12));
  REQUIRE(algebraic_connectivity(L) == Catch::Approx(2.0).margin(1e-12));
}

TEST_CASE("fan-in spectrum has a repeated zero", "[spectral]") {
  WeightedDigraph g(3, {{2, 0, 1.0}, {2, 1, 1.0}});
  const LaplacianMatrix L = build_laplacian(g);
  const auto s = spectrum(L);
  REQUIRE(s.zero_multiplicity == 2);
  REQUIRE(s.lambda2 == Catch::Approx(2.0).margin(1e-9));
  REQUIRE_FALSE(s.symmetric);
}

TEST_CASE("complete graph spectrum matches the closed form", "[spectral]") {
  const int n = 6;
  std::vector<Edge> edges;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) edges.push_back({i, j, 1.0});
  const LaplacianMatrix L = build_laplacian(WeightedDigraph(n, edges));
  const auto s = spectrum(L);
  const auto expected = oracle::complete_graph_spectrum(n);
  REQUIRE(s.eigenvalues.size() == expected.size());
  for (std::size_t k = 0; k < expected.size(); ++k) {
    REQUIRE(s.eigenvalues[k].real() == Catch::Approx(expected[k]).margin(1e-9));
    REQUIRE(std::abs(s.eigenvalues[k].imag()) < 1e-9);
  }
  REQUIRE(s.lambda2 == Catch::Approx(static_cast<double>(n)).margin(1e-9));
}

TEST_CASE("ring spectrum matches the circulant closed form", "[spectral]") {
  const auto ring = make_ring(20, 2);
  const LaplacianMatrix L = build_laplacian(ring);
  const auto s = spectrum(L);
  const double predicted = oracle::ring_eigenvalue(20, 2, 1);
  REQUIRE(s.lambda2 == Catch::Approx(predicted).margin(1e-9));
  REQUIRE(s.lambda2 == Catch::Approx(0.4798).margin(1e-4));
  REQUIRE(algebraic_connectivity(L) == Catch::Approx(predicted).margin(1e-9));
}

TEST_CASE("directed cycle has complex spectrum with real-part gap", "[spectral]") {
  WeightedDigraph g(3, {{1, 0, 1.0}, {2, 1, 1.0}, {0, 2, 1.0}});
  const auto s = spectrum(build_laplacian(g));
  REQUIRE(s.zero_multiplicity == 1);
  REQUIRE(s.lambda2 == Catch::Approx(1.5).margin(1e-9));
  bool saw_complex = false;
  for (const auto& ev : s.eigenvalues)
    if (std::abs(ev.imag()) > 1e-6) saw_complex = true;
  REQUIRE(saw_complex);
}

TEST_CASE("eigenvalues stay in the right half plane", "[spectral]") {
  StreamRng rng(801, 1);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 3 + static_cast<int>(rng.uniform_below(10));
    const auto g = testgen::random_digraph(rng, n, rng.uniform(0.1, 0.9));
    const auto s = spectrum(build_laplacian(g));
    for (const auto& ev : s.eigenvalues) {
      REQUIRE(ev.real() >= -1e-8);
      if (ev.real() < s.tol_zero) REQUIRE(std::abs(ev.imag()) < s.tol_zero);
    }
  }
}

TEST_CASE("zero multiplicity is scale invariant", "[spectral]") {
  WeightedDigraph g(4, {{0, 1, 1.0}, {1, 0, 1.0}, {2, 3, 1.0}, {3, 2, 1.0}});
  std::vector<Edge> scaled;
  for (const auto& e : g.edges()) scaled.push_back({e.to, e.from, e.weight * 1e6});
  const auto s1 = spectrum(build_laplacian(g));
  const auto s2 = spectrum(build_laplacian(WeightedDigraph(4, scaled)));
  REQUIRE(s1.zero_multiplicity == 2);
  REQUIRE(s2.zero_multiplicity == 2);
  REQUIRE(s2.lambda2 == Catch::Approx(1e6 * s1.lambda2).epsilon(1e-9));
}

TEST_CASE("kernel vectors annihilate the Laplacian", "[spectral]") {
  StreamRng rng(802, 2);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 3 + static_cast<int>(rng.uniform_below(8));
    const auto g = testgen::random_digraph(rng, n, rng.uniform(0.2, 0.8));
    const LaplacianMatrix L = build_laplacian(g);
    const auto s = spectrum(L);
    REQUIRE(s.kernel_right.cols() == s.zero_multiplicity);
    REQUIRE(s.kernel_left.cols() == s.zero_multiplicity);
    const double scale = std::max(1.0, L.matrix().cwiseAbs().rowwise().sum().maxCoeff());
    for (Eigen::Index c = 0; c < s.kernel_right.cols(); ++c) {
      REQUIRE((L.matrix() * s.kernel_right.col(c)).cwiseAbs().maxCoeff() <
              1e-8 * scale);
      REQUIRE((L.matrix().transpose() * s.kernel_left.col(c)).cwiseAbs().maxCoeff() <
              1e-8 * scale);
    }
  }
}

TEST_CASE("fan-in limit averages the two sources", "[spectral]") {
  WeightedDigraph g(3, {{2, 0, 1.0}, {2, 1, 1.0}});
  const LaplacianMatrix L = build_laplacian(g);
  Vector s0(3);
  s0 << 2.0, 0.0, -1.0;
  const Vector limit = predict_limit(L, s0);
  REQUIRE(limit(0) == Catch::Approx(2.0).margin(1e-9));
  REQUIRE(limit(1) == Catch::Approx(0.0).margin(1e-9));
  REQUIRE(limit(2) == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("symmetric connected limit is the plain average", "[spectral]") {
  StreamRng rng(803, 3);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 3 + static_cast<int>(rng.uniform_below(8));
    const auto g = testgen::random_connected_symmetric(rng, n);
    const LaplacianMatrix L = build_laplacian(g);
    const Vector s0 = testgen::random_opinions(rng, n);
    const Vector limit = predict_limit(L, s0);
    const double mean = s0.mean();
    for (int i = 0; i < n; ++i) REQUIRE(limit(i) == Catch::Approx(mean).margin(1e-9));
  }
}

TEST_CASE("balanced strongly connected limit is the plain average", "[spectral]") {
  // Directed 4-cycle with uniform weights is balanced.
  WeightedDigraph g(4, {{1, 0, 1.0}, {2, 1, 1.0}, {3, 2, 1.0}, {0, 3, 1.0}});
  REQUIRE(g.is_balanced());
  const LaplacianMatrix L = build_laplacian(g);
  Vector s0(4);
  s0 << 1.0, -2.0, 0.5, 3.5;
  const Vector limit = predict_limit(L, s0);
  for (int i = 0; i < 4; ++i)
    REQUIRE(limit(i) == Catch::Approx(s0.mean()).margin(1e-9));
}

TEST_CASE("predicted limit agrees with a long integration", "[spectral]") {
  StreamRng rng(804, 4);
  int done = 0;
  while (done < 15) {
    const int n = 3 + static_cast<int>(rng.uniform_below(7));
    const auto g = testgen::random_digraph(rng, n, rng.uniform(0.3, 0.8));
    const LaplacianMatrix L = build_laplacian(g);
    const auto s = spectrum(L);
    if (s.lambda2 <= 0.0) continue;
    const Vector s0 = testgen::random_opinions(rng, n);
    const Vector limit = predict_limit(L, s0);
    const auto traj = integrate(L, s0, 40.0 / s.lambda2, default_step(L));
    REQUIRE((traj.states.back() - limit).cwiseAbs().maxCoeff() < 1e-6);
    ++done;
  }
}

TEST_CASE("predict limit validates dimensions", "[spectral]") {
  WeightedDigraph g(2, {{0, 1, 1.0}, {1, 0, 1.0}});
  const LaplacianMatrix L = build_laplacian(g);
  Vector bad(3);
  bad << 1.0, 2.0, 3.0;
  REQUIRE_THROWS_AS(predict_limit(L, bad), ValidationError);
}

TEST_CASE("algebraic connectivity rejects directed graphs", "[spectral]") {
  WeightedDigraph g(2, {{0, 1, 1.0}});
  REQUIRE_THROWS_AS(algebraic_connectivity(build_laplacian(g)), ValidationError);
}

TEST_CASE("algebraic connectivity of disjoint cliques is zero", "[spectral]") {
  std::vector<Edge> edges;
  for (int base : {0, 3})
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        if (i != j) edges.push_back({base + i, base + j, 1.0});
  const LaplacianMatrix L = build_laplacian(WeightedDigraph(6, edges));
  REQUIRE(algebraic_connectivity(L) == Catch::Approx(0.0).margin(1e-10));
  REQUIRE(spectrum(L).zero_multiplicity == 2);
}

TEST_CASE("lambda2 of an edgeless graph is zero", "[spectral]") {
  const auto s = spectrum(build_laplacian(WeightedDigraph(3, {})));
  REQUIRE(s.zero_multiplicity == 3);
  REQUIRE(s.lambda2 == 0.0);
}

#pragma once

// Steering a network to a chosen consensus value.
//
// Given initial opinions and a target s* inside their convex hull, build an
// influence graph whose unique isolated block is the mutual pair formed by
// the extreme holders: the pair settles exactly at s*, and a feed-forward
// chain drags everybody else to the same value. Both the ODE and the jump
// process converge to s* in expectation.
//
// The pair's rates are the normalized barycentric weights of s* between
// s_min and s_max: beta = (s* - s_min) / (s_max - s_min), alpha = 1 - beta.
// The max holder pulls toward the min holder at rate alpha and vice versa,
// which parks the pair's weighted agreement point at beta s_max + alpha
// s_min = s*.

#include <consensus/graph.hpp>

#include <cmath>
#include <string>
#include <vector>

namespace consensus {

struct SteerPlan {
  WeightedDigraph graph;
  double alpha = 0.0;
  double beta = 0.0;
  /// Extreme holders (smallest index on ties); equal when s0 is constant.
  int max_node = 0;
  int min_node = 0;
  /// Consensus value the construction guarantees.
  double target = 0.0;
};

inline SteerPlan steer(const Vector& s0, double s_star) {
  const int n = static_cast<int>(s0.size());
  if (n < 2) throw ValidationError("steering needs at least two agents");
  if (!std::isfinite(s_star)) throw ValidationError("target must be finite");

  int imax = 0, imin = 0;
  for (int i = 1; i < n; ++i) {
    if (s0(i) > s0(imax)) imax = i;
    if (s0(i) < s0(imin)) imin = i;
  }
  const double smax = s0(imax), smin = s0(imin);
  if (s_star < smin || s_star > smax)
    throw ValidationError("target " + format_double(s_star) +
                          " lies outside the convex hull [" + format_double(smin) +
                          ", " + format_double(smax) + "] of the initial opinions");

  SteerPlan plan;
  plan.target = s_star;

  if (smax == smin) {
    // Everyone already agrees, and the hull check pinned s_star to that
    // value. Any chain with a single isolated root preserves it.
    std::vector<Edge> edges;
    for (int i = 1; i < n; ++i) edges.push_back({i, i - 1, 1.0});
    plan.graph = WeightedDigraph(n, std::move(edges));
    plan.max_node = plan.min_node = 0;
    return plan;
  }

  plan.max_node = imax;
  plan.min_node = imin;
  plan.beta = (s_star - smin) / (smax - smin);
  plan.alpha = 1.0 - plan.beta;

  std::vector<Edge> edges;
  // The isolated pair. A zero rate (target at an endpoint) drops that arc,
  // leaving the opposite extreme as a fixed single-node isolated block.
  edges.push_back({imax, imin, plan.alpha});
  edges.push_back({imin, imax, plan.beta});

  // Everyone else chains off the isolated block. With beta = 0 the arc into
  // the min holder is dropped, so the block shrinks to {min holder} and the
  // chain must root there; symmetrically for alpha = 0.
  const int feed = plan.beta > 0.0 ? imax : imin;
  int prev = feed;
  for (int i = 0; i < n; ++i) {
    if (i == imax || i == imin) continue;
    edges.push_back({i, prev, 1.0});
    prev = i;
  }
  plan.graph = WeightedDigraph(n, std::move(edges));
  return plan;
}

}  // namespace consensus

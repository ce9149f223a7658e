#pragma once

// The averaging ODE sdot = -L s: fixed-step RK4 integration, the exact
// eigendecomposition solution for symmetric Laplacians, and decay-rate
// fitting of the opinion variance
//
//   V(s) = (1/N) sum_i (s_i - mean)^2 = (1/(2N^2)) sum_ij (s_j - s_i)^2,
//
// which contracts like exp(-2 lambda2 t) on symmetric strongly connected
// graphs.

#include <consensus/graph.hpp>
#include <consensus/spectral.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace consensus {

struct TrajectoryMeta {
  std::uint64_t laplacian_hash = 0;
  std::string method = "rk4";
  /// Step actually used; the requested step is shrunk so that an integer
  /// number of steps lands exactly on t_end.
  double dt = 0.0;
  double t_end = 0.0;
  /// Every stride-th step is stored (plus the final one) to keep at most
  /// ten thousand samples.
  int stride = 1;
  std::vector<std::string> warnings;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Vector> states;
  TrajectoryMeta meta;
};

/// Resolves 0.1 / max(1, max_i sigma_i): ten steps per fastest local
/// relaxation time, never coarser than 0.1.
inline double default_step(const LaplacianMatrix& L) {
  return 0.1 / std::max(1.0, L.max_diagonal());
}

/// Horizon covering forty e-foldings of the slowest mode.
inline double default_horizon(double lambda2_real) {
  if (!(lambda2_real > 0.0))
    throw ValidationError("default horizon needs a positive spectral gap");
  return 40.0 / lambda2_real;
}

/// Classical RK4 on a uniform grid. Unconditionally deterministic: same
/// inputs, same floating-point trajectory.
inline Trajectory integrate(const LaplacianMatrix& L, const Vector& s0,
                            double t_end, double dt) {
  if (s0.size() != L.size())
    throw ValidationError("initial state has " + std::to_string(s0.size()) +
                          " entries, Laplacian has " + std::to_string(L.size()));
  if (!(t_end > 0.0) || !std::isfinite(t_end))
    throw ValidationError("integration horizon must be positive");
  if (!(dt > 0.0) || !std::isfinite(dt))
    throw ValidationError("step size must be positive");

  Trajectory traj;
  const double sigma_max = L.max_diagonal();
  if (sigma_max > 0.0 && dt > 2.0 / sigma_max)
    traj.meta.warnings.push_back(
        "step " + format_double(dt) + " exceeds stability guideline 2/sigma_max = " +
        format_double(2.0 / sigma_max));

  const auto n_steps =
      std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(t_end / dt - 1e-12)));
  const double h = t_end / static_cast<double>(n_steps);
  const std::int64_t stride = (n_steps + 10000) / 10000;

  traj.meta.laplacian_hash = matrix_hash(L.matrix());
  traj.meta.dt = h;
  traj.meta.t_end = t_end;
  traj.meta.stride = static_cast<int>(stride);

  const Matrix& m = L.matrix();
  Vector s = s0;
  traj.times.push_back(0.0);
  traj.states.push_back(s);
  Vector k1, k2, k3, k4;
  for (std::int64_t step = 1; step <= n_steps; ++step) {
    k1 = -(m * s);
    k2 = -(m * (s + (h / 2.0) * k1));
    k3 = -(m * (s + (h / 2.0) * k2));
    k4 = -(m * (s + h * k3));
    s += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (step % stride == 0 || step == n_steps) {
      traj.times.push_back(static_cast<double>(step) * h);
      traj.states.push_back(s);
    }
  }
  return traj;
}

/// e^{-Lt} s0 through the eigendecomposition; symmetric Laplacians only.
inline Vector exact_symmetric(const LaplacianMatrix& L, const Vector& s0, double t) {
  if (!L.is_symmetric())
    throw ValidationError("exact_symmetric needs a symmetric Laplacian");
  if (s0.size() != L.size())
    throw ValidationError("initial state size mismatch");
  if (!std::isfinite(t)) throw ValidationError("time must be finite");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(L.matrix());
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("symmetric eigensolver failed to converge");
  Vector coeffs = solver.eigenvectors().transpose() * s0;
  for (Eigen::Index k = 0; k < coeffs.size(); ++k)
    coeffs(k) *= std::exp(-solver.eigenvalues()(k) * t);
  return solver.eigenvectors() * coeffs;
}

/// Population variance of an opinion vector.
inline double variance(const Vector& s) {
  if (s.size() == 0) throw ValidationError("variance of an empty vector");
  const double mean = s.mean();
  return (s.array() - mean).square().sum() / static_cast<double>(s.size());
}

inline std::vector<double> trajectory_variances(const Trajectory& traj) {
  std::vector<double> v;
  v.reserve(traj.states.size());
  for (const Vector& s : traj.states) v.push_back(variance(s));
  return v;
}

/// Least-squares slope of log(values) against times, ignoring non-positive
/// values. No decay assumptions; used for raw curve comparison.
inline double log_slope(const std::vector<double>& times,
                        const std::vector<double>& values) {
  if (times.size() != values.size())
    throw ValidationError("log_slope needs matching lengths");
  double st = 0, sy = 0, stt = 0, sty = 0;
  int n = 0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (!(values[k] > 0.0)) continue;
    const double y = std::log(values[k]);
    st += times[k];
    sy += y;
    stt += times[k] * times[k];
    sty += times[k] * y;
    ++n;
  }
  if (n < 2) throw ValidationError("log_slope needs at least two positive values");
  const double denom = n * stt - st * st;
  if (denom == 0.0) throw ValidationError("log_slope needs distinct times");
  return (n * sty - st * sy) / denom;
}

struct DecayFit {
  /// Positive when the variance is genuinely shrinking.
  double rate = 0.0;
  /// Set when the variance moved by less than 1e-3 nepers across the fit
  /// window; the rate is then reported but not certified.
  bool floor_detected = false;
  int points_used = 0;
  double window_start = 0.0;
  double window_end = 0.0;
};

/// Fits -d log V / dt over the last half of the usable horizon. Samples
/// beyond the point where V falls to the 1e-14 floor are discarded; fewer
/// than four surviving window points is an error.
inline DecayFit fit_decay_rate(const Trajectory& traj) {
  constexpr double kFloor = 1e-14;
  const std::vector<double> v = trajectory_variances(traj);
  std::size_t cut = 0;
  while (cut < v.size() && v[cut] > kFloor) ++cut;
  if (cut == 0)
    throw ValidationError("variance starts at the numerical floor; nothing to fit");

  const double t_half = traj.times[cut - 1] / 2.0;
  std::size_t first = 0;
  while (first < cut && traj.times[first] < t_half) ++first;
  if (cut - first < 4)
    throw ValidationError("decay fit needs at least four usable samples, got " +
                          std::to_string(cut - first));

  std::vector<double> ts(traj.times.begin() + first, traj.times.begin() + cut);
  std::vector<double> vs(v.begin() + first, v.begin() + cut);
  DecayFit fit;
  fit.rate = -log_slope(ts, vs);
  fit.points_used = static_cast<int>(ts.size());
  fit.window_start = ts.front();
  fit.window_end = ts.back();
  fit.floor_detected = std::log(vs.front()) - std::log(vs.back()) < 1e-3;
  return fit;
}

}  // namespace consensus

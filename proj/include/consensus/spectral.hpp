#pragma once

// Eigenstructure of consensus Laplacians.
//
// Everything downstream hangs off three facts. Gershgorin discs centred at
// sigma_i with radius sigma_i put the whole spectrum in the closed right
// half plane and forbid nonzero purely imaginary eigenvalues. The zero
// eigenspace has one dimension per isolated block. And the slowest nonzero
// mode, lambda2, sets both the ODE convergence rate and the mixing time of
// the jump process.

#include <consensus/graph.hpp>

#include <algorithm>
#include <complex>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <json.hpp>

namespace consensus {

struct SpectralSummary {
  /// Sorted by (real, imaginary).
  std::vector<std::complex<double>> eigenvalues;
  /// Eigenvalues with |lambda| < tol_zero. Equals the number of isolated
  /// blocks of the influence graph.
  int zero_multiplicity = 0;
  /// Smallest real part among nonzero eigenvalues; 0 when all eigenvalues
  /// vanish (edgeless graph).
  double lambda2 = 0.0;
  bool symmetric = false;
  /// |lambda| below this counts as zero: 1e-9 * max(1, ||L||_inf).
  double tol_zero = 0.0;
  /// Orthonormal bases (columns) of the right and left kernels, from the
  /// SVD of L. Both have zero_multiplicity columns for diagonalizable
  /// kernels, which every consensus Laplacian has.
  Matrix kernel_right;
  Matrix kernel_left;
};

namespace detail {

inline double laplacian_zero_tolerance(const LaplacianMatrix& L) {
  double inf_norm = 0.0;
  for (Eigen::Index i = 0; i < L.matrix().rows(); ++i)
    inf_norm = std::max(inf_norm, L.matrix().row(i).cwiseAbs().sum());
  return 1e-9 * std::max(1.0, inf_norm);
}

/// Kernel bases via SVD: right kernel from V, left kernel from U, both read
/// off the trailing singular values.
inline std::pair<Matrix, Matrix> kernel_bases(const LaplacianMatrix& L,
                                              double tol_zero) {
  Eigen::BDCSVD<Matrix> svd(L.matrix(), Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  int m = 0;
  for (Eigen::Index k = sv.size() - 1; k >= 0 && sv(k) < tol_zero; --k) ++m;
  const int n = L.size();
  Matrix right(n, m), left(n, m);
  for (int c = 0; c < m; ++c) {
    right.col(c) = svd.matrixV().col(n - m + c);
    left.col(c) = svd.matrixU().col(n - m + c);
  }
  return {std::move(right), std::move(left)};
}

}  // namespace detail

inline SpectralSummary spectrum(const LaplacianMatrix& L) {
  SpectralSummary s;
  s.tol_zero = detail::laplacian_zero_tolerance(L);
  s.symmetric = L.is_symmetric();

  if (s.symmetric) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(L.matrix());
    if (solver.info() != Eigen::Success)
      throw std::runtime_error("symmetric eigensolver failed to converge");
    for (Eigen::Index k = 0; k < solver.eigenvalues().size(); ++k)
      s.eigenvalues.emplace_back(solver.eigenvalues()(k), 0.0);
  } else {
    Eigen::EigenSolver<Matrix> solver(L.matrix(), /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success)
      throw std::runtime_error("eigensolver failed to converge");
    for (Eigen::Index k = 0; k < solver.eigenvalues().size(); ++k)
      s.eigenvalues.push_back(solver.eigenvalues()(k));
    std::sort(s.eigenvalues.begin(), s.eigenvalues.end(),
              [](const std::complex<double>& a, const std::complex<double>& b) {
                if (a.real() != b.real()) return a.real() < b.real();
                return a.imag() < b.imag();
              });
  }

  bool any_nonzero = false;
  double min_re = 0.0;
  for (const auto& ev : s.eigenvalues) {
    if (std::abs(ev) < s.tol_zero) {
      ++s.zero_multiplicity;
    } else if (!any_nonzero || ev.real() < min_re) {
      any_nonzero = true;
      min_re = ev.real();
    }
  }
  s.lambda2 = any_nonzero ? min_re : 0.0;

  std::tie(s.kernel_right, s.kernel_left) = detail::kernel_bases(L, s.tol_zero);
  return s;
}

/// Second-smallest eigenvalue of a symmetric Laplacian. For directed graphs
/// use spectrum(L).lambda2 instead.
inline double algebraic_connectivity(const LaplacianMatrix& L) {
  if (!L.is_symmetric())
    throw ValidationError(
        "algebraic connectivity is defined for symmetric Laplacians; "
        "use the real part of lambda2 from spectrum() for directed graphs");
  if (L.size() < 2) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> solver(L.matrix(), Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("symmetric eigensolver failed to converge");
  return solver.eigenvalues()(1);
}

/// Limit of the ODE flow: u = R (W^T R)^{-1} W^T s0, the projection of s0
/// onto the kernel along the range. Componentwise, every agent's limit is a
/// convex combination of initial opinions inside the isolated blocks.
inline Vector predict_limit(const LaplacianMatrix& L, const Vector& s0) {
  if (s0.size() != L.size())
    throw ValidationError("initial state has " + std::to_string(s0.size()) +
                          " entries, Laplacian has " + std::to_string(L.size()));
  auto [right, left] = detail::kernel_bases(L, detail::laplacian_zero_tolerance(L));
  if (right.cols() == 0)
    throw std::runtime_error("Laplacian kernel is numerically empty");
  Matrix m = left.transpose() * right;
  Eigen::FullPivLU<Matrix> lu(m);
  if (!lu.isInvertible())
    throw std::runtime_error("kernel projector is singular; limit undefined");
  return right * lu.solve(left.transpose() * s0);
}

inline nlohmann::json spectral_to_json(const SpectralSummary& s) {
  nlohmann::json evs = nlohmann::json::array();
  for (const auto& ev : s.eigenvalues)
    evs.push_back(nlohmann::json::array({ev.real(), ev.imag()}));
  return {{"eigenvalues", std::move(evs)},
          {"zero_multiplicity", s.zero_multiplicity},
          {"lambda2", s.lambda2},
          {"symmetric", s.symmetric},
          {"tol_zero", s.tol_zero}};
}

}  // namespace consensus

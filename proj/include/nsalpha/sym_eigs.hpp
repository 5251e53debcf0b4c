#pragma once

#include <cstdint>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace nsalpha {

struct GeneralizedEigenResult {
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXd vectors;  // M-orthonormal columns
  int restarts = 0;
  double max_residual = 0.0;
};

struct GeneralizedEigenOptions {
  double tolerance = 1e-12;  // backward error ||K x - l M x|| / ((||K|| + l ||M||) ||x||)
  int max_restarts = 60;
  std::uint64_t seed = 1;
};

/// Smallest `count` eigenpairs of K x = lambda M x with K, M symmetric positive
/// definite. Block Krylov iteration on K^{-1} M (shift-invert at zero) with
/// M-orthogonalisation and Rayleigh-Ritz restarts; the block is wider than
/// any multiplicity we expect so degenerate pairs are both captured.
/// Throws NumericalError with residual diagnostics if not converged.
GeneralizedEigenResult smallest_generalized_eigenpairs(const Eigen::SparseMatrix<double>& K,
                                                       const Eigen::SparseMatrix<double>& M,
                                                       int count,
                                                       const GeneralizedEigenOptions& options = {});

}  // namespace nsalpha

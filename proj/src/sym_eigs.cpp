#include "nsalpha/sym_eigs.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/SparseCholesky>

#include "nsalpha/errors.hpp"

namespace nsalpha {

namespace {

// Appends the columns of `candidates` to the M-orthonormal set (Q, MQ), dropping
// directions that are numerically contained in span(Q). Classical Gram-Schmidt,
// applied twice.
void append_orthonormal(const Eigen::SparseMatrix<double>& M, const Eigen::MatrixXd& candidates,
                        Eigen::MatrixXd& Q, Eigen::MatrixXd& MQ, Eigen::Index& used) {
  for (Eigen::Index c = 0; c < candidates.cols() && used < Q.cols(); ++c) {
    Eigen::VectorXd y = candidates.col(c);
    const double initial = std::sqrt(std::max(0.0, y.dot(M * y)));
    if (!(initial > 0.0)) continue;
    for (int pass = 0; pass < 2 && used > 0; ++pass) {
      const Eigen::VectorXd proj = MQ.leftCols(used).transpose() * y;
      y.noalias() -= Q.leftCols(used) * proj;
    }
    Eigen::VectorXd My = M * y;
    const double norm = std::sqrt(std::max(0.0, y.dot(My)));
    if (norm <= 1e-10 * initial) continue;
    Q.col(used) = y / norm;
    MQ.col(used) = My / norm;
    ++used;
  }
}

double norm1(const Eigen::SparseMatrix<double>& A) {
  double m = 0.0;
  for (Eigen::Index c = 0; c < A.outerSize(); ++c) {
    double s = 0.0;
    for (Eigen::SparseMatrix<double>::InnerIterator it(A, c); it; ++it) s += std::abs(it.value());
    m = std::max(m, s);
  }
  return m;
}

}  // namespace

GeneralizedEigenResult smallest_generalized_eigenpairs(const Eigen::SparseMatrix<double>& K,
                                                       const Eigen::SparseMatrix<double>& M,
                                                       int count,
                                                       const GeneralizedEigenOptions& options) {
  const Eigen::Index n = K.rows();
  if (K.cols() != n || M.rows() != n || M.cols() != n) {
    throw ConfigError("generalized eigensolver: K and M must be square and of equal size");
  }
  if (count <= 0 || count >= n) {
    std::ostringstream msg;
    msg << "generalized eigensolver: requested " << count << " eigenpairs of a problem of size "
        << n;
    throw ConfigError(msg.str());
  }

  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> factor(K);
  if (factor.info() != Eigen::Success) {
    throw NumericalError("generalized eigensolver: LDL^T factorisation of K failed");
  }

  const Eigen::Index p = std::min<Eigen::Index>(n - 1, count + std::max(6, count / 4));
  const Eigen::Index q_max = std::min<Eigen::Index>(n, std::max<Eigen::Index>(3 * p, 2 * count + 40));

  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd start(n, p);
  for (Eigen::Index j = 0; j < p; ++j)
    for (Eigen::Index i = 0; i < n; ++i) start(i, j) = gauss(rng);

  const double k_norm = norm1(K), m_norm = norm1(M);
  GeneralizedEigenResult result;
  Eigen::VectorXd residuals(count);

  for (int restart = 0; restart <= options.max_restarts; ++restart) {
    Eigen::MatrixXd Q(n, q_max), MQ(n, q_max), Z(n, q_max);
    Eigen::Index used = 0;
    append_orthonormal(M, start, Q, MQ, used);

    // Block Krylov expansion: Z = K^{-1} M Q column by column; each new block
    // of Z feeds the next block of Q.
    Eigen::Index applied = 0;
    while (applied < used) {
      const Eigen::Index block_begin = applied;
      const Eigen::Index block_end = used;
      for (Eigen::Index j = block_begin; j < block_end; ++j) {
        Z.col(j) = factor.solve(MQ.col(j));
      }
      applied = block_end;
      if (used < q_max) {
        append_orthonormal(M, Z.middleCols(block_begin, block_end - block_begin), Q, MQ, used);
      }
    }

    // Rayleigh-Ritz for K^{-1} M in the M inner product.
    Eigen::MatrixXd H = MQ.leftCols(used).transpose() * Z.leftCols(used);
    H = 0.5 * (H + H.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ritz(H);
    if (ritz.info() != Eigen::Success) {
      throw NumericalError("generalized eigensolver: dense Rayleigh-Ritz failed");
    }
    // Largest mu = 1 / lambda first.
    const Eigen::Index keep = std::min<Eigen::Index>(p, used);
    Eigen::MatrixXd S(used, keep);
    Eigen::VectorXd mu(keep);
    for (Eigen::Index j = 0; j < keep; ++j) {
      S.col(j) = ritz.eigenvectors().col(used - 1 - j);
      mu[j] = ritz.eigenvalues()[used - 1 - j];
    }
    Eigen::MatrixXd X = Q.leftCols(used) * S;

    double worst = 0.0;
    for (int j = 0; j < count; ++j) {
      const double lambda = 1.0 / mu[j];
      const Eigen::VectorXd Mx = M * X.col(j);
      const Eigen::VectorXd r = K * X.col(j) - lambda * Mx;
      residuals[j] = r.norm() / ((k_norm + std::abs(lambda) * m_norm) * X.col(j).norm());
      worst = std::max(worst, residuals[j]);
    }

    if (worst <= options.tolerance) {
      result.values.resize(count);
      for (int j = 0; j < count; ++j) result.values[j] = 1.0 / mu[j];
      result.vectors = X.leftCols(count);
      result.restarts = restart;
      result.max_residual = worst;
      return result;
    }
    start = X;
    result.max_residual = worst;
  }

  std::ostringstream msg;
  msg << "generalized eigensolver did not converge: " << options.max_restarts
      << " restarts, subspace " << q_max << ", worst backward error " << result.max_residual
      << " > tolerance " << options.tolerance;
  throw NumericalError(msg.str());
}

}  // namespace nsalpha

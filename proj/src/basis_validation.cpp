#include <algorithm>
#include <cmath>
#include <sstream>

#include "grid_backend.hpp"
#include "nsalpha/eigenbasis.hpp"

namespace nsalpha {

namespace {

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

// Gram matrix in the exact discrete inner product of each domain.
Eigen::MatrixXd gram_matrix(const EigenBasis& basis, detail::GridBackend& backend) {
  const auto n = static_cast<Eigen::Index>(basis.size());
  Eigen::MatrixXd gram(n, n);
  if (basis.kind() == DomainKind::Torus) {
    std::vector<detail::VectorGrid> grids(static_cast<std::size_t>(n));
    for (Eigen::Index j = 0; j < n; ++j) {
      backend.velocity(Eigen::VectorXd::Unit(n, j), grids[static_cast<std::size_t>(j)]);
    }
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i; j < n; ++j)
        gram(i, j) = gram(j, i) =
            backend.inner(grids[static_cast<std::size_t>(i)], grids[static_cast<std::size_t>(j)]);
    return gram;
  }
  // Square: edge-centred differences of psi, h^2 sum |D psi / h|^2 = psi^T (-Delta_h) psi h^2.
  const auto& sm = basis.square_modes();
  const int mesh = sm.mesh;
  const int stride = mesh + 1;
  const Eigen::Index edges = 2 * static_cast<Eigen::Index>(mesh) * stride;
  Eigen::MatrixXd d(edges, n);
  for (Eigen::Index c = 0; c < n; ++c) {
    Eigen::Index e = 0;
    for (int i = 0; i < mesh; ++i)
      for (int j = 0; j <= mesh; ++j)
        d(e++, c) = sm.psi((i + 1) * stride + j, c) - sm.psi(i * stride + j, c);
    for (int i = 0; i <= mesh; ++i)
      for (int j = 0; j < mesh; ++j)
        d(e++, c) = sm.psi(i * stride + j + 1, c) - sm.psi(i * stride + j, c);
  }
  // (D psi / h)^2 h^2 = (D psi)^2
  gram = d.transpose() * d;
  return gram;
}

}  // namespace

ValidationReport validate_basis(const EigenBasis& basis) {
  ValidationReport report;
  auto backend = detail::make_grid_backend(basis);
  const auto n = static_cast<Eigen::Index>(basis.size());

  const Eigen::MatrixXd gram = gram_matrix(basis, *backend);
  report.orthonormality_defect = (gram - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff();

  const auto& lambda = basis.eigenvalues();
  for (Eigen::Index j = 0; j < n; ++j) {
    if (!(lambda[j] > 0.0)) report.eigenvalues_positive = false;
    if (j + 1 < n && lambda[j] > lambda[j + 1]) report.eigenvalues_monotone = false;
  }

  const bool square = basis.kind() == DomainKind::NoSlipSquare;
  const int side = backend->points_per_side();
  std::vector<double> div;
  detail::VectorGrid w;
  for (Eigen::Index j = 0; j < n; ++j) {
    const Eigen::VectorXd e = Eigen::VectorXd::Unit(n, j);
    backend->divergence(e, div);
    backend->velocity(e, w);
    double scale = 0.0;
    for (std::size_t i = 0; i < w.x.size(); ++i) scale = std::max(scale, std::hypot(w.x[i], w.y[i]));
    double worst = 0.0;
    if (square) {
      // One-sided derivatives at the walls are not compatible; interior nodes only.
      for (int a = 1; a < side - 1; ++a)
        for (int b = 1; b < side - 1; ++b) worst = std::max(worst, std::abs(div[a * side + b]));
    } else {
      worst = max_abs(div);
    }
    report.divergence_residual = std::max(report.divergence_residual, worst / scale);

    if (square) {
      // Wall trace by linear extrapolation from the first two interior rows.
      const int m = side - 1;
      auto mag = [&](int a, int b) {
        return std::hypot(w.x[a * side + b], w.y[a * side + b]);
      };
      auto extrap = [&](int a1, int b1, int a2, int b2) {
        const double tx = 2.0 * w.x[a1 * side + b1] - w.x[a2 * side + b2];
        const double ty = 2.0 * w.y[a1 * side + b1] - w.y[a2 * side + b2];
        return std::hypot(tx, ty);
      };
      double trace = 0.0;
      for (int k = 0; k <= m; ++k) {
        trace = std::max({trace, mag(0, k), mag(m, k), mag(k, 0), mag(k, m)});
        trace = std::max({trace, extrap(1, k, 2, k), extrap(m - 1, k, m - 2, k),
                          extrap(k, 1, k, 2), extrap(k, m - 1, k, m - 2)});
      }
      report.boundary_residual = std::max(report.boundary_residual, trace / scale);
    }
  }

  if (square) {
    const double h = basis.square_modes().spacing();
    report.divergence_threshold = 1e-10;
    // Extrapolated wall trace is O(lambda h^2): C h with C = max(1, lambda_N h).
    report.boundary_threshold = h * std::max(1.0, lambda[n - 1] * h);
  }

  auto fail = [&](const std::string& what, double value, double threshold) {
    std::ostringstream msg;
    msg << what << " " << value << " exceeds " << threshold;
    report.failures.push_back(msg.str());
  };
  if (report.orthonormality_defect > report.orthonormality_threshold)
    fail("orthonormality defect", report.orthonormality_defect, report.orthonormality_threshold);
  if (report.divergence_residual > report.divergence_threshold)
    fail("divergence residual", report.divergence_residual, report.divergence_threshold);
  if (square && report.boundary_residual > report.boundary_threshold)
    fail("boundary residual", report.boundary_residual, report.boundary_threshold);
  if (!report.eigenvalues_positive) report.failures.push_back("nonpositive eigenvalue");
  if (!report.eigenvalues_monotone) report.failures.push_back("eigenvalues not nondecreasing");
  return report;
}

}  // namespace nsalpha

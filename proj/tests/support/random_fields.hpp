#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>
#include <random>

#include "nsalpha/fields.hpp"

namespace nsalpha::testing {

/// Gaussian coefficients scaled by lambda_j^{-decay}.
inline SpectralField random_field(const BasisPtr& basis, std::mt19937_64& rng, double decay = 0.5) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::VectorXd c(static_cast<Eigen::Index>(basis->size()));
  for (Eigen::Index j = 0; j < c.size(); ++j) c[j] = g(rng) * std::pow(basis->eigenvalue(j), -decay);
  return SpectralField(basis, c);
}

inline BasisPtr torus(std::size_t n, int grid = 0) {
  return std::make_shared<const EigenBasis>(build_torus_basis(n, grid));
}

}  // namespace nsalpha::testing

namespace nsalpha::testing {

/// Samples f(x, y) -> (ux, uy) on the torus grid, point (i, j) at (2 pi i / G, 2 pi j / G).
template <class F>
GridField sample_torus(const BasisPtr& basis, F f) {
  const int g = basis->grid_resolution();
  GridField out{basis, g, std::vector<double>(std::size_t(g) * g), std::vector<double>(std::size_t(g) * g)};
  const double h = 2.0 * std::numbers::pi / g;
  for (int i = 0; i < g; ++i)
    for (int j = 0; j < g; ++j) {
      const auto [ux, uy] = f(i * h, j * h);
      out.ux[std::size_t(i) * g + j] = ux;
      out.uy[std::size_t(i) * g + j] = uy;
    }
  return out;
}

/// Taylor-Green vortex (sin x cos y, -cos x sin y), an eigenfunction with lambda = 2.
inline SpectralField taylor_green(const BasisPtr& basis) {
  return analyze(sample_torus(basis, [](double x, double y) {
    return std::pair{std::sin(x) * std::cos(y), -std::cos(x) * std::sin(y)};
  }));
}

}  // namespace nsalpha::testing

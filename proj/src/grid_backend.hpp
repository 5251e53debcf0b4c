#pragma once

// Physical-space staging for the two domains. Not part of the public API.

#include <complex>
#include <cstddef>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "nsalpha/eigenbasis.hpp"

namespace nsalpha::detail {

struct VectorGrid {
  std::vector<double> x, y;
  void resize(std::size_t n) {
    x.assign(n, 0.0);
    y.assign(n, 0.0);
  }
};

/// Velocity gradient on the grid: xy = d u_x / dy, yx = d u_y / dx.
struct TensorGrid {
  std::vector<double> xx, xy, yx, yy;
  void resize(std::size_t n) {
    xx.assign(n, 0.0);
    xy.assign(n, 0.0);
    yx.assign(n, 0.0);
    yy.assign(n, 0.0);
  }
};

/// Coefficient <-> grid machinery for one basis. Holds transform workspaces,
/// so an instance must not be shared between threads. The basis must outlive it.
class GridBackend {
 public:
  virtual ~GridBackend() = default;

  virtual std::size_t points() const = 0;
  virtual int points_per_side() const = 0;
  virtual double spacing() const = 0;

  virtual void velocity(const Eigen::VectorXd& coeffs, VectorGrid& out) = 0;
  virtual void gradient(const Eigen::VectorXd& coeffs, TensorGrid& out) = 0;
  virtual void vorticity(const Eigen::VectorXd& coeffs, std::vector<double>& out) = 0;
  virtual void divergence(const Eigen::VectorXd& coeffs, std::vector<double>& out) = 0;

  /// c_j = <g, w_j> by the domain quadrature (exact trigonometric quadrature
  /// plus the projection onto k_perp on the torus; trapezoid rule on the square).
  virtual void project(const VectorGrid& g, Eigen::VectorXd& out) = 0;

  /// Quadrature approximation of the L2 inner product of two grid fields.
  virtual double inner(const VectorGrid& a, const VectorGrid& b) const = 0;
};

std::unique_ptr<GridBackend> make_grid_backend(const EigenBasis& basis);

}  // namespace nsalpha::detail

#pragma once

#include <memory>

#include <Eigen/Dense>

#include "nsalpha/eigenbasis.hpp"
#include "nsalpha/fields.hpp"

namespace nsalpha {

namespace detail {
class GridBackend;
}

/// Galerkin coefficients of the three bilinear convection operators,
/// evaluated pseudospectrally: synthesize, differentiate, multiply pointwise,
/// project back onto the basis (which applies the Leray projection).
///
///   convective(u, v) = B(u, v)  = P((u . grad) v)
///   rotational(u, v) = B~(u, v) = -P(u x curl v)
///   transposed(u, v) = B*(u, v) = P((grad u)^T v)
///
/// On the torus the basis grid is alias-free for these products, so the
/// results are exact up to roundoff. Holds transform workspaces: one instance
/// per thread.
class ConvectionOperator {
 public:
  explicit ConvectionOperator(BasisPtr basis);
  ~ConvectionOperator();
  ConvectionOperator(ConvectionOperator&&) noexcept;
  ConvectionOperator& operator=(ConvectionOperator&&) noexcept;

  const BasisPtr& basis() const noexcept { return basis_; }

  Eigen::VectorXd convective(const Eigen::VectorXd& u, const Eigen::VectorXd& v);
  Eigen::VectorXd rotational(const Eigen::VectorXd& u, const Eigen::VectorXd& v);
  Eigen::VectorXd transposed(const Eigen::VectorXd& u, const Eigen::VectorXd& v);

  /// max over grid points of |u|.
  double max_speed(const Eigen::VectorXd& u);
  /// Grid spacing used for advective CFL estimates.
  double grid_spacing() const;

 private:
  void check(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const;

  BasisPtr basis_;
  std::unique_ptr<detail::GridBackend> backend_;
};

SpectralField nonlinear_B(const SpectralField& u, const SpectralField& v);
SpectralField nonlinear_Btilde(const SpectralField& u, const SpectralField& v);
SpectralField nonlinear_Bstar(const SpectralField& u, const SpectralField& v);

}  // namespace nsalpha

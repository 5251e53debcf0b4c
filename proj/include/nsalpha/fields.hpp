#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "nsalpha/eigenbasis.hpp"

namespace nsalpha {

/// A velocity field as coefficients c_j = <u, w_j> over an eigenbasis.
class SpectralField {
 public:
  SpectralField() = default;
  /// Zero field on `basis`.
  explicit SpectralField(BasisPtr basis);
  /// Throws ConfigError on length mismatch or non-finite entries.
  SpectralField(BasisPtr basis, Eigen::VectorXd coeffs);

  static SpectralField unit(BasisPtr basis, std::size_t j);

  const BasisPtr& basis() const noexcept { return basis_; }
  const EigenBasis& eigenbasis() const { return *basis_; }
  const Eigen::VectorXd& coeffs() const noexcept { return coeffs_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(coeffs_.size()); }
  double operator[](std::size_t j) const { return coeffs_[static_cast<Eigen::Index>(j)]; }

  SpectralField& operator+=(const SpectralField& other);
  SpectralField& operator-=(const SpectralField& other);
  SpectralField& operator*=(double s);

  friend SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
  friend SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
  friend SpectralField operator*(double s, SpectralField a) { return a *= s; }

 private:
  BasisPtr basis_;
  Eigen::VectorXd coeffs_;
};

/// A vector field sampled on the basis grid: G x G periodic points on the
/// torus, (mesh+1)^2 nodes on the square. Point (i, j) is stored at i * side + j.
struct GridField {
  BasisPtr basis;
  int side = 0;
  std::vector<double> ux, uy;
};

/// Throws ConfigError unless both fields live in the same basis.
void require_same_basis(const SpectralField& a, const SpectralField& b);

GridField synthesize(const SpectralField& u);
SpectralField analyze(const GridField& g);

SpectralField project_Pn(const SpectralField& u, std::size_t n);
SpectralField project_Pn_perp(const SpectralField& u, std::size_t n);

/// Coefficient-wise lambda_j^beta.
SpectralField apply_A_power(const SpectralField& u, double beta);

/// J_alpha u = (I + alpha^2 A)^{-1} u. Throws ArgumentError for alpha < 0.
SpectralField helmholtz_filter(const SpectralField& u, double alpha);
/// (I + alpha^2 A) u, the exact inverse of helmholtz_filter.
SpectralField apply_helmholtz(const SpectralField& u, double alpha);

double inner(const SpectralField& u, const SpectralField& v);
/// ||A^beta u|| = (sum lambda_j^{2 beta} c_j^2)^{1/2}
double norm_beta(const SpectralField& u, double beta);

}  // namespace nsalpha

#pragma once

// Brute-force reference for the convection operators on the torus: exact
// convolution over wavevector pairs, no grid, no FFT. Test-only.

#include <Eigen/Dense>

#include "nsalpha/eigenbasis.hpp"
#include "nsalpha/fields.hpp"

namespace nsalpha::oracle {

enum class Form { Convective, Rotational, Transposed };

/// Galerkin coefficients of B (Convective), B~ (Rotational) or B* (Transposed)
/// by direct summation. Throws ConfigError for non-torus bases.
Eigen::VectorXd convolution(const EigenBasis& basis, const Eigen::VectorXd& u,
                            const Eigen::VectorXd& v, Form form);

SpectralField convolution_oracle_B(const SpectralField& u, const SpectralField& v);

}  // namespace nsalpha::oracle

#pragma once

#include "nsalpha/fields.hpp"

namespace nsalpha {

/// Energy functionals of u at time t:
///   E0 = ||u||^2, E_alpha = ||u||^2 + a^2 ||A^1/2 u||^2,
///   D_alpha = E2 = ||A^1/2 u||^2 + a^2 ||A u||^2.
/// balance_residual is filled by the integrator from consecutive steps.
struct EnergyRecord {
  double t = 0.0;
  double E0 = 0.0;
  double E_alpha = 0.0;
  double D_alpha = 0.0;
  double E2 = 0.0;
  double balance_residual = 0.0;
};

EnergyRecord energy_functionals(const SpectralField& u, double alpha, double t);

/// |(E1 - E0)/dt + nu (D0 + D1) - (<f0,u0> + <f1,u1>)|: the discrete form of
/// dE_alpha/dt + 2 nu D_alpha = 2 <f, u> over one step, trapezoidal in time.
double balance_residual(const EnergyRecord& before, const EnergyRecord& after, double dt, double nu,
                        double work_before, double work_after);

}  // namespace nsalpha

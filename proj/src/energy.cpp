#include "nsalpha/energy.hpp"

#include <cmath>

namespace nsalpha {

EnergyRecord energy_functionals(const SpectralField& u, double alpha, double t) {
  const auto lambda = u.eigenbasis().eigenvalues().array();
  const auto c2 = u.coeffs().array().square();
  const double a2 = alpha * alpha;
  EnergyRecord r;
  r.t = t;
  r.E0 = c2.sum();
  const double h1 = (lambda * c2).sum();
  const double h2 = (lambda.square() * c2).sum();
  r.E_alpha = r.E0 + a2 * h1;
  r.D_alpha = h1 + a2 * h2;
  r.E2 = r.D_alpha;
  return r;
}

double balance_residual(const EnergyRecord& before, const EnergyRecord& after, double dt, double nu,
                        double work_before, double work_after) {
  return std::abs((after.E_alpha - before.E_alpha) / dt + nu * (before.D_alpha + after.D_alpha) -
                  (work_before + work_after));
}

}  // namespace nsalpha

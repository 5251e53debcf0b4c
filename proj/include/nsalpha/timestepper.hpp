#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nsalpha/convection.hpp"
#include "nsalpha/eigenbasis.hpp"
#include "nsalpha/energy.hpp"
#include "nsalpha/fields.hpp"

namespace nsalpha {

/// Body force f(t) = P_n f0 * m(t). The default is steady, on lambda <= 2,
/// with ||f0|| = 1: Grashof number 1 for nu = 1 on the torus.
struct ForcingSpec {
  enum class Kind { None, LowModes, Coefficients };
  enum class Modulation { Steady, Sine, LinearGrowth };

  Kind kind = Kind::LowModes;
  /// LowModes: ||f0|| = amplitude, spread evenly over modes with lambda <= max_lambda.
  double amplitude = 1.0;
  double max_lambda = 2.0;
  /// Coefficients: f0 given explicitly (resized with zeros to the basis size).
  Eigen::VectorXd coeffs;

  Modulation modulation = Modulation::Steady;
  double modulation_amplitude = 0.0;  // Sine: m = 1 + a sin(w t)
  double modulation_frequency = 1.0;
  double growth_rate = 0.0;  // LinearGrowth: m = 1 + r t

  double factor(double t) const;
};

/// Initial velocity u0 (before truncation by P_n).
struct InitSpec {
  enum class Kind { Zero, TaylorGreen, Mode, Synthetic, Coefficients, Checkpoint };

  Kind kind = Kind::Synthetic;
  double amplitude = 1.0;
  /// Mode: unit mode index (0-based).
  std::size_t mode = 0;
  /// Synthetic: c_j = amplitude * lambda_j^{-s} * (random sign), for lambda_j <= max_lambda.
  double decay = 1.75;
  std::uint64_t seed = 1;
  double max_lambda = 0.0;  // 0: no cutoff
  Eigen::VectorXd coeffs;
  std::string checkpoint_path;
  /// Time attached to the initial state (ignored for checkpoints, which carry their own).
  double start_time = 0.0;
};

struct SolverConfig {
  double nu = 1.0;
  double alpha = 0.0;
  std::size_t n = 0;  // 0: whole basis
  double dt = 1e-3;
  double t_end = 1.0;
  ForcingSpec forcing;
  InitSpec init;
  int output_cadence = 1;

  /// Advective stability: dt <= cfl * h / max|u|. Violations are recorded as
  /// warnings; with `substep` the step is split until the bound holds.
  double cfl = 0.5;
  bool substep = false;
  /// Test switches: drop the nonlinear term, or integrate the convective form
  /// -P_n B(u, u) (alpha = 0 only) instead of the rotational form.
  bool nonlinear = true;
  bool convective_form = false;

  int checkpoint_every = 0;  // steps between checkpoints, 0: never
  std::string checkpoint_dir;

  /// Throws ConfigError unless nu > 0, dt > 0, alpha >= 0, t_end >= 0, cadence >= 1.
  void validate(std::size_t basis_size) const;
  std::size_t truncation(std::size_t basis_size) const { return n == 0 ? basis_size : n; }
};

/// Coefficients of the filtered variable v = (I + alpha^2 A) u on the full
/// basis; entries with index >= n stay exactly zero.
struct SolverState {
  double t = 0.0;
  SpectralField v;
  double alpha = 0.0;

  SpectralField u() const { return helmholtz_filter(v, alpha); }
};

/// Galerkin right-hand side on V_n with the nonlinear term in rotational form
/// and the viscous part exact. Holds transform workspaces for V_n.
class GalerkinSystem {
 public:
  GalerkinSystem(BasisPtr basis, const SolverConfig& cfg);

  const BasisPtr& basis() const noexcept { return basis_; }
  std::size_t n() const noexcept { return n_; }
  const Eigen::VectorXd& lambda() const noexcept { return lambda_; }
  const SolverConfig& config() const noexcept { return cfg_; }

  /// P_n f0 * m(t) (length n).
  Eigen::VectorXd forcing(double t) const;
  /// Nonlinear + forcing part N(v, t) = -P_n B~(J v, v) + P_n f (length n).
  Eigen::VectorXd nonlinear_part(const Eigen::VectorXd& v_n, double t);
  /// dv/dt = -nu Lambda v + N(v, t) (length n).
  Eigen::VectorXd rhs(const Eigen::VectorXd& v_n, double t);
  /// -nu Lambda u - P_n B(u, u) + P_n f, u = J v (length n).
  Eigen::VectorXd rhs_convective(const Eigen::VectorXd& v_n, double t);

  double max_speed(const Eigen::VectorXd& v_n);
  double grid_spacing() const { return op_.grid_spacing(); }

  /// One IF-RK2 (integrating-factor Heun) step of size dt from (v_n, t).
  Eigen::VectorXd step(const Eigen::VectorXd& v_n, double t, double dt);

 private:
  BasisPtr basis_;
  SolverConfig cfg_;
  std::size_t n_;
  Eigen::VectorXd lambda_;  // first n eigenvalues
  Eigen::VectorXd filter_;  // 1 / (1 + alpha^2 lambda)
  Eigen::VectorXd f0_;      // P_n f0, length n
  ConvectionOperator op_;
};

SpectralField rhs_galerkin(const SolverState& state, const BasisPtr& basis, const SolverConfig& cfg);
SpectralField rhs_convective(const SolverState& state, const BasisPtr& basis, const SolverConfig& cfg);
SolverState step(const SolverState& state, const BasisPtr& basis, const SolverConfig& cfg);

/// u0 on the full basis (not yet truncated). Checkpoint kind is handled by integrate.
SpectralField initial_velocity(const BasisPtr& basis, const InitSpec& init);
/// f0 on the full basis.
SpectralField forcing_field(const BasisPtr& basis, const ForcingSpec& forcing);

/// Output of integrate: records at every output_cadence steps (and t = 0).
struct Trajectory {
  BasisPtr basis;
  double nu = 0.0, alpha = 0.0, dt = 0.0;
  std::size_t n = 0;
  std::vector<double> times;
  std::vector<Eigen::VectorXd> u;  // length-n velocity coefficients per record
  std::vector<EnergyRecord> energy;
  /// Largest per-step balance residual over the whole run, and the largest
  /// per-step increase of E_alpha (<= 0 means nonincreasing at every step).
  double max_balance_residual = 0.0;
  double max_energy_increase = -std::numeric_limits<double>::infinity();
  SolverState final_state;
  std::size_t steps = 0;
  std::vector<std::string> warnings;
  std::vector<std::string> checkpoints;

  /// Velocity at record i on the full basis.
  SpectralField velocity(std::size_t i) const;
};

/// Optional per-step observer (state after the step).
using StepObserver = std::function<void(const SolverState&)>;

/// Integrates from P_n u0 (or a checkpoint) to t_end. Throws BlowUpError if a
/// coefficient exceeds 1e12 in magnitude or becomes non-finite.
Trajectory integrate(const BasisPtr& basis, const SolverConfig& cfg, const StepObserver& observer = {});

}  // namespace nsalpha

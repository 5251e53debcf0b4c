#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "nsalpha/diagnostics.hpp"
#include "nsalpha/timestepper.hpp"

namespace nsalpha {

/// Ordinary least squares on (log x, log y).
struct RateFit {
  std::vector<double> log_x, log_y;
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // root-mean-square residual of the log-log fit
  /// Empirical bound constant max_i y_i / x_i and the spread max/min of y_i / x_i.
  double K_hat = 0.0;
  double K_hat_ratio = 0.0;
};

/// Throws ArgumentError for fewer than 3 samples, mismatched lengths, or
/// nonpositive / non-finite values.
RateFit fit_rate(const std::vector<double>& x, const std::vector<double>& y);

/// How run_alpha_sweep checks that the projection error is subdominant.
///   Bound:     lambda_{n+1}^{-3/2} <= 0.01 lambda_1^{-1/2} alpha_min^2 from the basis.
///   Empirical: the measured alpha = 0, level-n error (sup err^2 against the
///              reference) is <= 0.01 x the smallest alpha-member error.
///   Skip:      no check.
enum class Precondition { Bound, Empirical, Skip };

struct SweepSpec {
  enum class Parameter { Alpha, N };

  SolverConfig base;  // nu, dt, t_end, forcing, initial data, cadence; alpha (N sweep) or n (alpha sweep)
  Parameter parameter = Parameter::Alpha;
  std::vector<double> alphas;    // positive, strictly decreasing
  std::vector<std::size_t> ns;   // strictly increasing, each < n_ref
  std::size_t n_ref = 0;         // >= 4 x the largest swept n
  double dt_ref = 0.0;           // <= dt / 4, dt / dt_ref a whole number
  Precondition precondition = Precondition::Bound;
  int jobs = 1;

  /// Throws ConfigError naming the offending value.
  void validate(const EigenBasis& basis) const;
};

struct SweepMember {
  double alpha = 0.0;
  std::size_t n = 0;
  double x_L2 = 0.0;  // theoretical rate: lambda_1^{-1/2} alpha^2 or lambda_{n+1}^{-3/2}
  double x_H1 = 0.0;  // Dirichlet-norm rate: alpha or lambda_{n+1}^{-1/2}
  double lambda_next = 0.0;
  ErrorSeries errors;
};

struct SweepResult {
  SweepSpec::Parameter parameter = SweepSpec::Parameter::Alpha;
  std::vector<SweepMember> members;
  /// log(sup err_L2^2) against log(alpha^2) or log(lambda_{n+1}); K_hat against x_L2.
  RateFit fit;
  /// log(sup err_H1^2) against log(alpha) or log(lambda_{n+1}); K_hat against x_H1.
  RateFit fit_H1;
  /// Precondition evidence (Empirical mode): alpha = 0 level-n sup err^2.
  double projection_sup_err_sq = 0.0;
  std::vector<std::string> warnings;
};

/// Sup-in-time L2 error of u_n^alpha against the shared alpha = 0, n_ref
/// reference for each alpha; fit against alpha^2.
SweepResult run_alpha_sweep(const BasisPtr& basis, const SweepSpec& spec);
/// Same with alpha = base.alpha (normally 0) over the n list; fit against lambda_{n+1}.
SweepResult run_n_sweep(const BasisPtr& basis, const SweepSpec& spec);
/// Dispatches on spec.parameter and returns the Dirichlet-norm fit.
RateFit run_dirichlet_rate(const BasisPtr& basis, const SweepSpec& spec);

/// Relative change of every member's sup err_L2^2 when the reference is
/// recomputed with 2 n_ref modes, and with dt_ref / 2.
struct AdequacyReport {
  double max_change_n = 0.0;
  double max_change_dt = 0.0;
  bool passed = false;  // both below 5%
};
AdequacyReport check_reference_adequacy(const BasisPtr& basis, const SweepSpec& spec);

struct WindowedErrorReport {
  std::vector<double> window_sup;  // sup err_L2^2 per window
  double first_quarter_max = 0.0;  // max over the first ceil(windows / 4) windows
  double last_window = 0.0;
  double run_sup = 0.0;
  bool secular_growth_flag = false;  // last > 2 x first-quarter max
  ErrorSeries errors;
};

/// u_n^alpha (base.n, base.alpha) against the reference over [0, t_end],
/// t_end >= 20 / (nu lambda_1). A blow-up in either run propagates.
WindowedErrorReport run_global_time(const BasisPtr& basis, const SweepSpec& spec, int windows);

struct PerturbationFit {
  double t0 = 0.0;
  double zeta0_norm = 0.0;
  std::vector<double> times;
  std::vector<double> zeta_norm;  // ||zeta(t)||
  double fit_begin = 0.0;         // t0 + burn
  double fitted_M = 0.0;
  double fitted_B = 0.0;      // envelope: ||zeta||^2 <= B ||zeta0||^2 e^{-M (t - t0)} on the window
  double fitted_B_ols = 0.0;  // from the regression intercept
  double residual = 0.0;
  bool decaying = false;       // M > 0
  bool bound_holds = false;    // pointwise envelope check with the reported B
  bool stability_observed = false;
};

/// Integrates the base flow to t0, then the pair (u, u + zeta0) under the
/// alpha = 0 Galerkin system at level base.n until base.t_end, and fits
/// log ||zeta||^2 against t on [t0 + burn, t_end].
PerturbationFit run_perturbation(const BasisPtr& basis, const SolverConfig& base, const InitSpec& zeta0,
                                 double t0, double burn);

/// Fits and bound constants of a sweep from its members (used by the
/// sweeps and by report regeneration).
void fit_sweep(SweepResult& result);

/// Windowed sup statistics of an error series over [t_first, t_end].
WindowedErrorReport windowed_report(ErrorSeries errors, double t_end, int windows);

/// Log-linear decay fit of ||zeta(t)||^2 on [t0 + burn, end]. Zero or too
/// short data gives NaN fits and stability_observed = false.
PerturbationFit fit_perturbation(std::vector<double> times, std::vector<double> zeta_norm, double t0,
                                 double burn, double zeta0_norm);

/// Runs `count` independent jobs on up to `jobs` threads; the first exception is rethrown.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& body);

/// JSON summary with keys slope, intercept, residual, K_hat, secular_growth_flag,
/// fitted_M, fitted_B (null where not applicable) plus extra detail.
std::string summary_json(const SweepResult* sweep, const WindowedErrorReport* windows,
                         const PerturbationFit* perturbation);

}  // namespace nsalpha

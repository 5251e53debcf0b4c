#pragma once

#include <string>
#include <vector>

#include "nsalpha/energy.hpp"
#include "nsalpha/timestepper.hpp"

namespace nsalpha {

/// Energy functionals of a solver state. With `previous` given, the balance
/// residual over the step previous -> state is filled in.
EnergyRecord energy_record(const SolverState& state, const BasisPtr& basis, const SolverConfig& cfg,
                           const SolverState* previous = nullptr);

struct ErrorRecord {
  double t = 0.0;
  double err_L2 = 0.0;      // ||u1 - u2||
  double err_H1 = 0.0;      // ||A^1/2 (u1 - u2)||
  double err_H1_cum = 0.0;  // int_0^t ||A^1/2 (u1 - u2)||^2, trapezoidal over records
};

/// Error norms between two trajectories at a shared record time t.
/// Coefficients are compared on the union of both truncations (missing = 0).
/// Throws ArgumentError if either run has no record at t or the bases differ.
ErrorRecord error_record(const Trajectory& a, const Trajectory& b, double t);

struct ErrorSeries {
  std::vector<ErrorRecord> records;
  double sup_err_L2_sq = 0.0;  // max over records of err_L2^2
  double sup_err_H1_sq = 0.0;
  double err_H1_cum = 0.0;  // at the last record
};

/// Errors at every record time of `a`; `b` must hold the same record times
/// (relative tolerance 1e-12), otherwise ArgumentError.
ErrorSeries error_series(const Trajectory& a, const Trajectory& b);

/// Rebuilds the sup statistics from stored records (no recomputation).
ErrorSeries series_from_records(std::vector<ErrorRecord> records);

/// Max of err_L2^2 over records with t in [t_begin, t_end), or [t_begin, t_end]
/// when `closed`.
double window_sup_L2_sq(const ErrorSeries& s, double t_begin, double t_end, bool closed);

/// CSV with 17 significant digits. Headers are exactly
/// `t,E0,E_alpha,D_alpha,balance_residual` and `t,err_L2,err_H1,err_H1_cum`.
void write_energy_csv(const std::string& path, const std::vector<EnergyRecord>& records);
void write_error_csv(const std::string& path, const std::vector<ErrorRecord>& records);
std::vector<EnergyRecord> read_energy_csv(const std::string& path);
std::vector<ErrorRecord> read_error_csv(const std::string& path);

}  // namespace nsalpha

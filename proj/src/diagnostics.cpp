#include "nsalpha/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "nsalpha/errors.hpp"

namespace nsalpha {

EnergyRecord energy_record(const SolverState& state, const BasisPtr& basis, const SolverConfig& cfg,
                           const SolverState* previous) {
  const SpectralField u = state.u();
  EnergyRecord r = energy_functionals(u, state.alpha, state.t);
  if (previous) {
    const SpectralField u0 = previous->u();
    const EnergyRecord r0 = energy_functionals(u0, previous->alpha, previous->t);
    const SpectralField f = forcing_field(basis, cfg.forcing);
    const std::size_t n = cfg.truncation(basis->size());
    const auto head = static_cast<Eigen::Index>(n);
    const double w0 = cfg.forcing.factor(previous->t) * f.coeffs().head(head).dot(u0.coeffs().head(head));
    const double w1 = cfg.forcing.factor(state.t) * f.coeffs().head(head).dot(u.coeffs().head(head));
    r.balance_residual = balance_residual(r0, r, state.t - previous->t, cfg.nu, w0, w1);
  }
  return r;
}

namespace {

bool same_time(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a)); }

std::size_t find_record(const Trajectory& tr, double t) {
  for (std::size_t i = 0; i < tr.times.size(); ++i)
    if (same_time(tr.times[i], t)) return i;
  std::ostringstream msg;
  msg << "no output record at t = " << t << " (runs must share their output time grid)";
  throw ArgumentError(msg.str());
}

// (e, A e) of u_a(i) - u_b(j) on the union of the truncations.
std::pair<double, double> difference_norms(const Trajectory& a, std::size_t i, const Trajectory& b,
                                           std::size_t j) {
  const Eigen::VectorXd& ua = a.u[i];
  const Eigen::VectorXd& ub = b.u[j];
  const Eigen::VectorXd& lambda = a.basis->eigenvalues();
  const Eigen::Index m = std::max(ua.size(), ub.size());
  double l2 = 0.0, h1 = 0.0;
  for (Eigen::Index k = 0; k < m; ++k) {
    const double d = (k < ua.size() ? ua[k] : 0.0) - (k < ub.size() ? ub[k] : 0.0);
    l2 += d * d;
    h1 += lambda[k] * d * d;
  }
  return {l2, h1};
}

void check_bases(const Trajectory& a, const Trajectory& b) {
  if (!a.basis || !b.basis) throw ArgumentError("trajectory without a basis");
  if (a.basis->id() != b.basis->id()) throw ArgumentError("trajectories live in different bases");
}

}  // namespace

ErrorRecord error_record(const Trajectory& a, const Trajectory& b, double t) {
  check_bases(a, b);
  const std::size_t ia = find_record(a, t);
  find_record(b, t);
  // cumulative integral over the shared records up to t
  ErrorRecord out;
  double prev_t = 0.0, prev_h1 = 0.0;
  for (std::size_t i = 0; i <= ia; ++i) {
    const std::size_t j = find_record(b, a.times[i]);
    const auto [l2, h1] = difference_norms(a, i, b, j);
    if (i > 0) out.err_H1_cum += 0.5 * (a.times[i] - prev_t) * (h1 + prev_h1);
    prev_t = a.times[i];
    prev_h1 = h1;
    if (i == ia) {
      out.t = a.times[i];
      out.err_L2 = std::sqrt(l2);
      out.err_H1 = std::sqrt(h1);
    }
  }
  return out;
}

ErrorSeries error_series(const Trajectory& a, const Trajectory& b) {
  check_bases(a, b);
  if (a.times.size() != b.times.size()) throw ArgumentError("runs have different numbers of output records");
  ErrorSeries s;
  double cum = 0.0;
  for (std::size_t i = 0; i < a.times.size(); ++i) {
    if (!same_time(a.times[i], b.times[i])) {
      std::ostringstream msg;
      msg << "mismatched output times " << a.times[i] << " vs " << b.times[i];
      throw ArgumentError(msg.str());
    }
    const auto [l2, h1] = difference_norms(a, i, b, i);
    if (i > 0) {
      const double prev = s.records.back().err_H1;
      cum += 0.5 * (a.times[i] - a.times[i - 1]) * (h1 + prev * prev);
    }
    const ErrorRecord rec{a.times[i], std::sqrt(l2), std::sqrt(h1), cum};
    s.records.push_back(rec);
    // sups are taken over the emitted values so they match a recomputation from the records
    s.sup_err_L2_sq = std::max(s.sup_err_L2_sq, rec.err_L2 * rec.err_L2);
    s.sup_err_H1_sq = std::max(s.sup_err_H1_sq, rec.err_H1 * rec.err_H1);
  }
  s.err_H1_cum = cum;
  return s;
}

ErrorSeries series_from_records(std::vector<ErrorRecord> records) {
  ErrorSeries s;
  for (const auto& r : records) {
    s.sup_err_L2_sq = std::max(s.sup_err_L2_sq, r.err_L2 * r.err_L2);
    s.sup_err_H1_sq = std::max(s.sup_err_H1_sq, r.err_H1 * r.err_H1);
  }
  if (!records.empty()) s.err_H1_cum = records.back().err_H1_cum;
  s.records = std::move(records);
  return s;
}

double window_sup_L2_sq(const ErrorSeries& s, double t_begin, double t_end, bool closed) {
  double sup = 0.0;
  for (const auto& r : s.records) {
    const bool inside = r.t >= t_begin && (r.t < t_end || (closed && r.t <= t_end));
    if (inside) sup = std::max(sup, r.err_L2 * r.err_L2);
  }
  return sup;
}

namespace {

std::ofstream open_csv(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << std::setprecision(17);
  return out;
}

std::vector<std::vector<double>> read_csv(const std::string& path, const std::string& header) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line != header) {
    throw ConfigError("'" + path + "': expected header '" + header + "'");
  }
  const auto columns = static_cast<std::size_t>(std::count(header.begin(), header.end(), ',') + 1);
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ConfigError("'" + path + "': malformed number '" + cell + "'");
      }
    }
    if (row.size() != columns) throw ConfigError("'" + path + "': wrong column count");
    rows.push_back(std::move(row));
  }
  return rows;
}

constexpr const char* kEnergyHeader = "t,E0,E_alpha,D_alpha,balance_residual";
constexpr const char* kErrorHeader = "t,err_L2,err_H1,err_H1_cum";

}  // namespace

void write_energy_csv(const std::string& path, const std::vector<EnergyRecord>& records) {
  auto out = open_csv(path);
  out << kEnergyHeader << '\n';
  for (const auto& r : records)
    out << r.t << ',' << r.E0 << ',' << r.E_alpha << ',' << r.D_alpha << ',' << r.balance_residual << '\n';
  if (!out) throw ConfigError("write to '" + path + "' failed");
}

void write_error_csv(const std::string& path, const std::vector<ErrorRecord>& records) {
  auto out = open_csv(path);
  out << kErrorHeader << '\n';
  for (const auto& r : records) out << r.t << ',' << r.err_L2 << ',' << r.err_H1 << ',' << r.err_H1_cum << '\n';
  if (!out) throw ConfigError("write to '" + path + "' failed");
}

std::vector<EnergyRecord> read_energy_csv(const std::string& path) {
  std::vector<EnergyRecord> out;
  for (const auto& row : read_csv(path, kEnergyHeader)) {
    EnergyRecord r;
    r.t = row[0];
    r.E0 = row[1];
    r.E_alpha = row[2];
    r.D_alpha = row[3];
    r.E2 = row[3];
    r.balance_residual = row[4];
    out.push_back(r);
  }
  return out;
}

std::vector<ErrorRecord> read_error_csv(const std::string& path) {
  std::vector<ErrorRecord> out;
  for (const auto& row : read_csv(path, kErrorHeader)) out.push_back(ErrorRecord{row[0], row[1], row[2], row[3]});
  return out;
}

}  // namespace nsalpha

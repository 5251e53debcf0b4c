// Acceptance suite: one PASS/FAIL line per criterion. Optional arguments
// select criteria by number (default: all). Exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "convolution_oracle.hpp"
#include "nsalpha/convection.hpp"
#include "nsalpha/experiments.hpp"
#include "random_fields.hpp"

using namespace nsalpha;
using nsalpha::testing::random_field;
using nsalpha::testing::torus;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

double dot(const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return a.dot(b); }

// Shared bases (built once).
BasisPtr torus_basis(std::size_t n) {
  static std::map<std::size_t, BasisPtr> cache;
  auto& b = cache[n];
  if (!b) b = torus(n);
  return b;
}

// ---------------------------------------------------------------- 1
Outcome operator_identities() {
  const double tol = 1e-11;
  double skew_tilde = 0, skew_b = 0, antisym = 0, transp_literal = 0, transp_corrected = 0, sum = 0;
  int triples = 0;
  std::mt19937_64 rng(101);
  for (std::size_t n : {8u, 32u, 64u}) {
    const BasisPtr basis = torus_basis(n);
    ConvectionOperator op(basis);
    for (int k = 0; k < 100; ++k, ++triples) {
      const Eigen::VectorXd u = random_field(basis, rng).coeffs();
      const Eigen::VectorXd v = random_field(basis, rng).coeffs();
      const Eigen::VectorXd w = random_field(basis, rng).coeffs();
      const Eigen::VectorXd Buv = op.convective(u, v), Buw = op.convective(u, w), Bwv = op.convective(w, v);
      const Eigen::VectorXd Bt = op.rotational(u, v), Bs = op.transposed(u, v);
      skew_tilde = std::max(skew_tilde, std::abs(dot(Bt, u)) / (Bt.norm() * u.norm()));
      skew_b = std::max(skew_b, std::abs(dot(Buv, v)) / (Buv.norm() * v.norm()));
      antisym = std::max(antisym, std::abs(dot(Buv, w) + dot(Buw, v)) / (Buv.norm() * w.norm() + Buw.norm() * v.norm()));
      const double scale = Bs.norm() * w.norm() + Bwv.norm() * u.norm();
      transp_literal = std::max(transp_literal, std::abs(dot(Bs, w) - dot(Bwv, u)) / scale);
      transp_corrected = std::max(transp_corrected, std::abs(dot(Bs, w) + dot(Bwv, u)) / scale);
      const double mag = std::max({Buv.cwiseAbs().maxCoeff(), Bs.cwiseAbs().maxCoeff(), Bt.cwiseAbs().maxCoeff()});
      sum = std::max(sum, (Buv + Bs - Bt).cwiseAbs().maxCoeff() / mag);
    }
  }
  const bool exact_ok = skew_tilde <= tol && skew_b <= tol && antisym <= tol && sum <= tol && transp_corrected <= tol;
  std::ostringstream d;
  d << triples << " triples, n in {8,32,64}: (B~(u,v),u) " << sci(skew_tilde) << ", (B(u,v),v) " << sci(skew_b)
    << ", antisymmetry " << sci(antisym) << ", B+B*-B~ " << sci(sum) << ", (B*(u,v),w)=(B(w,v),u) as stated "
    << sci(transp_literal) << ", sign-corrected (B*(u,v),w)=-(B(w,v),u) " << sci(transp_corrected);
  if (exact_ok && transp_literal > tol) d << " [stated transposition identity has the wrong sign]";
  return {exact_ok && transp_literal <= tol, d.str()};
}

// ---------------------------------------------------------------- 2
Outcome resolvent_projection() {
  std::mt19937_64 rng(202);
  long checks = 0;
  long violations = 0;
  long tight = 0;
  double identity = 0.0;
  // Cases that hold with equality (degenerate tails, alpha^2 lambda >> 1) may
  // round either way: a few ulps of slack, counted separately.
  const double ulps = 4.0 * std::numeric_limits<double>::epsilon();
  auto le = [&](double a, double b) {
    ++checks;
    if (a > b) ++tight;
    if (!(a <= b * (1.0 + ulps))) ++violations;
  };
  std::vector<BasisPtr> bases{torus_basis(64),
                              std::make_shared<const EigenBasis>(build_square_basis(16, 32))};
  for (const auto& basis : bases) {
    const auto N = basis->size();
    for (int trial = 0; trial < 20; ++trial) {
      const SpectralField u = random_field(basis, rng, trial % 2 ? 0.0 : 1.0);
      const Eigen::VectorXd& c = u.coeffs();
      const double cmax = c.cwiseAbs().maxCoeff();
      for (double alpha : {1e-3, 0.05, 0.3, 1.0, 7.0}) {
        const Eigen::VectorXd J = helmholtz_filter(u, alpha).coeffs();
        const Eigen::VectorXd AJ = apply_A_power(helmholtz_filter(u, alpha), 1.0).coeffs();
        const Eigen::VectorXd JA = helmholtz_filter(apply_A_power(u, 1.0), alpha).coeffs();
        const Eigen::VectorXd A12J = apply_A_power(helmholtz_filter(u, alpha), 0.5).coeffs();
        const double a2 = alpha * alpha;
        for (Eigen::Index j = 0; j < c.size(); ++j) {
          le(std::abs(J[j]), std::abs(c[j]));                 // resolvent in L2
          le(std::abs(alpha * A12J[j]), std::abs(c[j]));      // (alpha^2 A)^{1/2} J
          le(std::abs(a2 * AJ[j]), std::abs(c[j]));           // alpha^2 A J
          identity = std::max({identity, std::abs((c[j] - J[j]) - a2 * AJ[j]) / cmax,
                               std::abs((c[j] - J[j]) - a2 * JA[j]) / cmax});
        }
      }
      for (std::size_t n : {std::size_t{1}, std::size_t{4}, N / 2, N - 1}) {
        const double lam = basis->eigenvalue(n);
        const SpectralField Pu = project_Pn(u, n), Qu = project_Pn_perp(u, n);
        le(norm_beta(Pu, 0.0), norm_beta(u, 0.0));
        le(std::pow(norm_beta(Qu, 0.0), 2), std::pow(norm_beta(Qu, 0.5), 2) / lam);
        le(norm_beta(Pu, 0.5), norm_beta(u, 0.5));
        le(std::pow(norm_beta(Qu, 0.5), 2), std::pow(norm_beta(Qu, 1.0), 2) / lam);
        le(std::pow(norm_beta(Qu, 0.0), 2), std::pow(norm_beta(Qu, 1.0), 2) / (lam * lam));
        le(norm_beta(Pu, 1.0), norm_beta(u, 1.0));
      }
    }
  }
  std::ostringstream d;
  d << checks << " inequalities (torus n=64, square n=16), " << violations << " violated (" << tight
    << " equality cases within 4 ulps); I-J = a^2 A J = a^2 J A max deviation " << sci(identity) << " (relative to max|u_j|)";
  return {violations == 0 && identity <= 1e-14, d.str()};
}

// ---------------------------------------------------------------- 3
Outcome oracle_equivalence() {
  const BasisPtr basis = torus_basis(8);
  ConvectionOperator op(basis);
  std::mt19937_64 rng(303);
  double worst = 0.0;
  using oracle::Form;
  for (int k = 0; k < 20; ++k) {
    const Eigen::VectorXd u = random_field(basis, rng).coeffs(), v = random_field(basis, rng).coeffs();
    worst = std::max(worst, (op.convective(u, v) - oracle::convolution(*basis, u, v, Form::Convective)).cwiseAbs().maxCoeff());
    worst = std::max(worst, (op.rotational(u, v) - oracle::convolution(*basis, u, v, Form::Rotational)).cwiseAbs().maxCoeff());
    worst = std::max(worst, (op.transposed(u, v) - oracle::convolution(*basis, u, v, Form::Transposed)).cwiseAbs().maxCoeff());
  }
  return {worst <= 1e-10, "20 pairs, n = 8, B/B~/B* vs direct convolution: max |difference| " + sci(worst)};
}

// ---------------------------------------------------------------- 4
SolverConfig decay_config(double alpha, double dt) {
  SolverConfig cfg;
  cfg.nu = 0.1;
  cfg.alpha = alpha;
  cfg.dt = dt;
  cfg.t_end = 1.0;
  cfg.forcing.kind = ForcingSpec::Kind::None;
  cfg.init.kind = InitSpec::Kind::Synthetic;
  cfg.init.amplitude = 2.0;
  cfg.init.seed = 4;
  cfg.output_cadence = 1000000;
  return cfg;
}

Outcome energy_law() {
  const BasisPtr basis = torus_basis(64);
  bool pass = true;
  std::ostringstream d;
  for (double alpha : {0.0, 0.1}) {
    const double dt0 = 1e-2;
    std::vector<double> dts, res;
    double max_increase = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < 4; ++k) {
      const double dt = dt0 / std::pow(2.0, k);
      const Trajectory t = integrate(basis, decay_config(alpha, dt));
      dts.push_back(dt);
      res.push_back(t.max_balance_residual);
      max_increase = std::max(max_increase, t.max_energy_increase);
    }
    // C fixed by the first halving; the two finer runs must respect it.
    const double C = std::max(res[0] / (dts[0] * dts[0]), res[1] / (dts[1] * dts[1]));
    const bool bounded = res[2] <= C * dts[2] * dts[2] && res[3] <= C * dts[3] * dts[3];
    const bool decreasing = max_increase < 0.0;
    pass = pass && bounded && decreasing;
    d << "alpha=" << alpha << ": max dE_alpha per step " << sci(max_increase) << ", C=" << sci(C)
      << ", residual orders " << sci(std::log2(res[0] / res[1])) << "/" << sci(std::log2(res[1] / res[2])) << "/"
      << sci(std::log2(res[2] / res[3])) << (bounded ? "" : " [residual above C dt^2]") << "; ";
  }
  return {pass, d.str()};
}

// ---------------------------------------------------------------- 5
Outcome taylor_green() {
  const BasisPtr basis = torus_basis(32);
  SolverConfig cfg;
  cfg.nu = 1.0;
  cfg.alpha = 0.0;
  cfg.dt = 1e-3;
  cfg.t_end = 1.0;
  cfg.forcing.kind = ForcingSpec::Kind::None;
  cfg.init.kind = InitSpec::Kind::TaylorGreen;
  cfg.output_cadence = 100;
  const Trajectory t = integrate(basis, cfg);
  const double exact = t.energy.front().E0 * std::exp(-4.0 * t.energy.back().t);
  const double err = std::abs(t.energy.back().E0 - exact) / exact;
  return {err <= 1e-6 && std::abs(t.energy.back().t - 1.0) < 1e-12,
          "E0(1) vs E0(0) e^{-4}: relative error " + sci(err)};
}

// ---------------------------------------------------------------- sweeps (6, 7, 10)
SweepSpec alpha_sweep_spec() {
  SweepSpec s;
  s.parameter = SweepSpec::Parameter::Alpha;
  s.base.nu = 1.0;
  s.base.n = 64;
  s.base.dt = 1e-3;
  s.base.t_end = 2.0;
  s.base.output_cadence = 10;
  s.base.init.kind = InitSpec::Kind::Synthetic;
  s.base.init.decay = 1.75;
  s.base.init.max_lambda = 5.0;
  s.base.forcing.kind = ForcingSpec::Kind::LowModes;
  s.base.forcing.amplitude = 1.0;
  s.alphas = {0.2, 0.1, 0.05, 0.025};
  s.n_ref = 256;
  s.dt_ref = 2.5e-4;
  s.precondition = Precondition::Empirical;
  s.jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  return s;
}

SweepSpec n_sweep_spec() {
  SweepSpec s = alpha_sweep_spec();
  s.parameter = SweepSpec::Parameter::N;
  s.base.alpha = 0.0;
  s.base.n = 0;
  s.base.init.max_lambda = 0.0;
  s.alphas.clear();
  s.ns = {8, 16, 32};
  return s;
}

const SweepResult& alpha_sweep() {
  static std::optional<SweepResult> r;
  if (!r) r = run_alpha_sweep(torus_basis(512), alpha_sweep_spec());
  return *r;
}

const SweepResult& n_sweep() {
  static std::optional<SweepResult> r;
  if (!r) r = run_n_sweep(torus_basis(512), n_sweep_spec());
  return *r;
}

std::string adequacy(const SweepSpec& spec) {
  const AdequacyReport a = check_reference_adequacy(torus_basis(512), spec);
  return std::string("reference adequacy (2 n_ref, dt_ref/2): ") + sci(100 * a.max_change_n) + "%, " +
         sci(100 * a.max_change_dt) + "% " + (a.passed ? "ok" : "NOT ADEQUATE");
}

Outcome alpha_rate() {
  const SweepResult& r = alpha_sweep();
  const double slope_alpha = 2.0 * r.fit.slope;  // log err^2 vs log alpha
  const bool slope_ok = slope_alpha >= 0.85 * 2 && slope_alpha <= 2.3 * 2;
  const bool k_ok = std::isfinite(r.fit.K_hat) && r.fit.K_hat_ratio <= 10.0;
  std::ostringstream d;
  d << "n=64, n_ref=256, T=2: slope vs alpha " << sci(slope_alpha) << " (vs alpha^2 " << sci(r.fit.slope)
    << ", window [1.7, 4.6]) " << (slope_ok ? "ok" : "out of range") << "; K_hat " << sci(r.fit.K_hat)
    << ", max/min K_hat " << sci(r.fit.K_hat_ratio) << (k_ok ? " ok" : " > 10") << "; precondition (empirical): alpha=0 error "
    << sci(r.projection_sup_err_sq) << " vs smallest member " << sci(r.members.back().errors.sup_err_L2_sq) << "; "
    << adequacy(alpha_sweep_spec());
  return {slope_ok && k_ok, d.str()};
}

Outcome n_rate() {
  const SweepResult& r = n_sweep();
  bool bound = std::isfinite(r.fit.K_hat);
  for (const auto& m : r.members) bound = bound && m.errors.sup_err_L2_sq <= r.fit.K_hat * m.x_L2 * (1 + 1e-12);
  const bool slope_ok = r.fit.slope <= -1.5 + 0.2;
  std::ostringstream d;
  d << "n in {8,16,32}, s=1.75, n_ref=256: slope vs lambda_{n+1} " << sci(r.fit.slope) << " (<= -1.3), K_hat "
    << sci(r.fit.K_hat) << ", max/min K_hat " << sci(r.fit.K_hat_ratio) << "; " << adequacy(n_sweep_spec());
  return {bound && slope_ok, d.str()};
}

Outcome dirichlet_rate() {
  const SweepResult& a = alpha_sweep();
  const SweepResult& n = n_sweep();
  const bool a_ok = a.fit_H1.slope >= 1.0 - 0.2;
  const bool n_ok = n.fit_H1.slope <= -0.5 + 0.2;
  std::ostringstream d;
  d << "err_H1^2 slope vs alpha " << sci(a.fit_H1.slope) << " (>= 0.8), vs lambda_{n+1} " << sci(n.fit_H1.slope)
    << " (<= -0.3); K_hat " << sci(a.fit_H1.K_hat) << " / " << sci(n.fit_H1.K_hat);
  return {a_ok && n_ok, d.str()};
}

// ---------------------------------------------------------------- 8
Outcome uniform_in_time() {
  SweepSpec s;
  s.base.nu = 1.0;
  s.base.alpha = 0.05;
  s.base.n = 32;
  s.base.dt = 5e-3;
  s.base.output_cadence = 20;
  s.base.init.kind = InitSpec::Kind::Synthetic;
  s.base.init.decay = 1.75;
  s.base.forcing.kind = ForcingSpec::Kind::LowModes;
  s.base.forcing.amplitude = 1.0;  // Grashof number 1
  const BasisPtr basis = torus_basis(128);
  s.base.t_end = 20.0 / (s.base.nu * basis->lambda1());
  s.n_ref = 128;
  s.dt_ref = 1.25e-3;
  s.jobs = 2;
  const WindowedErrorReport w = run_global_time(basis, s, 10);
  std::ostringstream d;
  d << "T=" << s.base.t_end << ", 10 windows: first-quarter max " << sci(w.first_quarter_max) << ", last window "
    << sci(w.last_window) << ", flag " << (w.secular_growth_flag ? "raised" : "clear");
  return {!w.secular_growth_flag && w.last_window <= 2.0 * w.first_quarter_max, d.str()};
}

// ---------------------------------------------------------------- 9
Outcome perturbation_decay() {
  const BasisPtr basis = torus_basis(64);
  SolverConfig b;
  b.nu = 1.0;
  b.alpha = 0.0;
  b.dt = 5e-3;
  b.t_end = 6.0;
  b.output_cadence = 10;
  b.init.kind = InitSpec::Kind::Synthetic;
  b.init.decay = 1.75;
  InitSpec z;
  z.kind = InitSpec::Kind::Synthetic;
  z.amplitude = 1e-3;
  z.decay = 1.0;
  z.seed = 7;
  const double target = 2.0 * b.nu * basis->lambda1();

  b.forcing.kind = ForcingSpec::Kind::None;
  const PerturbationFit free = run_perturbation(basis, b, z, 1.0, 1.0);
  const bool free_ok = std::abs(free.fitted_M - target) <= 0.2 * target;

  // Exact reference: about u = 0 the perturbation solves the unforced equation, so
  // ||zeta(t)|| <= e^{-nu lambda_1 (t - t0)} ||zeta0||.
  SolverConfig rest = b;
  rest.init.kind = InitSpec::Kind::Zero;
  const PerturbationFit at_rest = run_perturbation(basis, rest, z, 0.0, 0.0);
  bool energy_ok = true;
  for (std::size_t i = 0; i < at_rest.times.size(); ++i) {
    const double bound = std::exp(-b.nu * basis->lambda1() * (at_rest.times[i] - at_rest.t0)) * at_rest.zeta0_norm;
    energy_ok = energy_ok && at_rest.zeta_norm[i] <= bound * (1 + 1e-10);
  }

  b.forcing.kind = ForcingSpec::Kind::LowModes;
  b.forcing.amplitude = 1.0;
  const PerturbationFit forced = run_perturbation(basis, b, z, 1.0, 1.0);
  const bool forced_ok = forced.fitted_M > 0.0 && forced.bound_holds;

  std::ostringstream d;
  d << "f=0: M " << sci(free.fitted_M) << " vs 2 nu lambda_1 = " << target << " (within 20%: " << (free_ok ? "yes" : "no")
    << "), rest-state energy bound " << (energy_ok ? "holds" : "violated") << "; Grashof 1: M " << sci(forced.fitted_M)
    << ", B " << sci(forced.fitted_B) << " (OLS " << sci(forced.fitted_B_ols) << "), envelope "
    << (forced.bound_holds ? "holds" : "violated");
  return {free_ok && energy_ok && forced_ok, d.str()};
}

// ---------------------------------------------------------------- 11
Outcome integrator_order() {
  const BasisPtr basis = torus_basis(64);
  std::vector<Eigen::VectorXd> finals;
  for (double dt : {1e-2, 5e-3, 2.5e-3, 1.25e-3}) {
    SolverConfig cfg;
    cfg.nu = 0.1;
    cfg.alpha = 0.1;
    cfg.dt = dt;
    cfg.t_end = 1.0;
    cfg.output_cadence = 1000000;
    cfg.init.amplitude = 2.0;
    finals.push_back(integrate(basis, cfg).final_state.u().coeffs());
  }
  const double e1 = (finals[0] - finals[1]).norm(), e2 = (finals[1] - finals[2]).norm(),
               e3 = (finals[2] - finals[3]).norm();
  const double p1 = std::log2(e1 / e2), p2 = std::log2(e2 / e3);
  return {std::abs(p1 - 2.0) <= 0.2 && std::abs(p2 - 2.0) <= 0.2,
          "self-convergence orders " + sci(p1) + ", " + sci(p2) + " (forced, alpha=0.1, nu=0.1)"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<int, std::function<Outcome()>>> criteria{
      {1, operator_identities}, {2, resolvent_projection}, {3, oracle_equivalence}, {4, energy_law},
      {5, taylor_green},        {6, alpha_rate},           {7, n_rate},             {8, uniform_in_time},
      {9, perturbation_decay},  {10, dirichlet_rate},      {11, integrator_order}};
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failures = 0;
  for (const auto& [id, run] : criteria) {
    if (!selected.empty() && !selected.count(id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!o.pass) ++failures;
    std::printf("criterion %2d: %s  %s  (%.1f s)\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}

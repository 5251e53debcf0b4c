#include "nsalpha/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "nsalpha/errors.hpp"

namespace nsalpha {

RateFit fit_rate(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw ArgumentError("fit_rate: x and y differ in length");
  if (x.size() < 3) throw ArgumentError("fit_rate: at least 3 samples are required");
  RateFit f;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0) || !std::isfinite(x[i]) || !std::isfinite(y[i])) {
      std::ostringstream msg;
      msg << "fit_rate: sample " << i << " (" << x[i] << ", " << y[i] << ") is not finite and positive";
      throw ArgumentError(msg.str());
    }
    f.log_x.push_back(std::log(x[i]));
    f.log_y.push_back(std::log(y[i]));
  }
  const double m = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += f.log_x[i] / m;
    my += f.log_y[i] / m;
  }
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (f.log_x[i] - mx) * (f.log_x[i] - mx);
    sxy += (f.log_x[i] - mx) * (f.log_y[i] - my);
  }
  if (!(sxx > 0.0)) throw ArgumentError("fit_rate: all x samples coincide");
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = f.log_y[i] - (f.intercept + f.slope * f.log_x[i]);
    ss += r * r;
  }
  f.residual = std::sqrt(ss / m);
  double kmax = 0.0, kmin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < x.size(); ++i) {
    kmax = std::max(kmax, y[i] / x[i]);
    kmin = std::min(kmin, y[i] / x[i]);
  }
  f.K_hat = kmax;
  f.K_hat_ratio = kmax / kmin;
  return f;
}

void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& body) {
  const auto workers = static_cast<std::size_t>(std::clamp<long long>(jobs, 1, static_cast<long long>(std::max<std::size_t>(count, 1))));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) return;
        {
          std::lock_guard lock(error_mutex);
          if (error) return;
        }
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

namespace {

int reference_ratio(const SweepSpec& spec) {
  const double ratio = spec.base.dt / spec.dt_ref;
  const auto r = std::llround(ratio);
  if (r < 1 || std::abs(ratio - static_cast<double>(r)) > 1e-9 * ratio) {
    throw ConfigError("sweep: dt / dt_ref must be a whole number");
  }
  return static_cast<int>(r);
}

SolverConfig reference_config(const SweepSpec& spec, std::size_t n_ref, double dt_ref) {
  SolverConfig ref = spec.base;
  ref.alpha = 0.0;
  ref.n = n_ref;
  const double ratio = spec.base.dt / dt_ref;
  ref.dt = dt_ref;
  ref.output_cadence = spec.base.output_cadence * static_cast<int>(std::llround(ratio));
  ref.checkpoint_every = 0;
  return ref;
}

SolverConfig member_config(const SweepSpec& spec, double alpha, std::size_t n) {
  SolverConfig m = spec.base;
  m.alpha = alpha;
  m.n = n;
  m.checkpoint_every = 0;
  return m;
}

double lambda_next(const EigenBasis& basis, std::size_t n) {
  if (n >= basis.size()) {
    throw ConfigError("lambda_{n+1} needs a basis larger than n = " + std::to_string(n));
  }
  return basis.eigenvalue(n);
}

// Runs the members (and the reference as job 0) concurrently.
std::vector<Trajectory> run_all(const BasisPtr& basis, const std::vector<SolverConfig>& configs, int jobs) {
  std::vector<Trajectory> out(configs.size());
  parallel_for(configs.size(), jobs, [&](std::size_t i) { out[i] = integrate(basis, configs[i]); });
  return out;
}

}  // namespace

void fit_sweep(SweepResult& r) {
  std::vector<double> x_fit, y, x_l2, x_h1_fit, y_h1, x_h1;
  for (const auto& m : r.members) {
    if (r.parameter == SweepSpec::Parameter::Alpha) {
      x_fit.push_back(m.alpha * m.alpha);
      x_h1_fit.push_back(m.alpha);
    } else {
      x_fit.push_back(m.lambda_next);
      x_h1_fit.push_back(m.lambda_next);
    }
    y.push_back(m.errors.sup_err_L2_sq);
    y_h1.push_back(m.errors.sup_err_H1_sq);
    x_l2.push_back(m.x_L2);
    x_h1.push_back(m.x_H1);
  }
  auto bound = [](RateFit& f, const std::vector<double>& x, const std::vector<double>& yy) {
    double kmax = 0.0, kmin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < x.size(); ++i) {
      kmax = std::max(kmax, yy[i] / x[i]);
      kmin = std::min(kmin, yy[i] / x[i]);
    }
    f.K_hat = kmax;
    f.K_hat_ratio = kmax / kmin;
  };
  r.fit = fit_rate(x_fit, y);
  bound(r.fit, x_l2, y);
  r.fit_H1 = fit_rate(x_h1_fit, y_h1);
  bound(r.fit_H1, x_h1, y_h1);
}

void SweepSpec::validate(const EigenBasis& basis) const {
  base.validate(basis.size());
  if (n_ref == 0 || n_ref > basis.size()) {
    throw ConfigError("sweep: n_ref = " + std::to_string(n_ref) + " must lie in [1, basis size " +
                      std::to_string(basis.size()) + "]");
  }
  if (!(dt_ref > 0.0) || dt_ref > base.dt / 4.0 * (1.0 + 1e-12)) {
    throw ConfigError("sweep: dt_ref must satisfy 0 < dt_ref <= dt / 4");
  }
  reference_ratio(*this);
  if (parameter == Parameter::Alpha) {
    if (alphas.size() < 3) throw ConfigError("alpha sweep: at least 3 alpha values are required for a fit");
    for (std::size_t i = 0; i < alphas.size(); ++i) {
      if (!(alphas[i] > 0.0) || !std::isfinite(alphas[i])) {
        throw ConfigError("alpha sweep: alpha = " + std::to_string(alphas[i]) + " is not positive");
      }
      if (i > 0 && !(alphas[i] < alphas[i - 1])) {
        throw ConfigError("alpha sweep: alpha list must be strictly decreasing (offending alpha = " +
                          std::to_string(alphas[i]) + ")");
      }
    }
    const std::size_t n = base.truncation(basis.size());
    if (n_ref < 4 * n) {
      throw ConfigError("alpha sweep: n_ref = " + std::to_string(n_ref) + " is below 4 n = " + std::to_string(4 * n));
    }
  } else {
    if (ns.size() < 3) throw ConfigError("n sweep: at least 3 values of n are required for a fit");
    for (std::size_t i = 0; i < ns.size(); ++i) {
      if (ns[i] == 0 || ns[i] >= n_ref) {
        throw ConfigError("n sweep: n = " + std::to_string(ns[i]) + " must lie in [1, n_ref)");
      }
      if (i > 0 && ns[i] <= ns[i - 1]) {
        throw ConfigError("n sweep: n list must be strictly increasing (offending n = " + std::to_string(ns[i]) + ")");
      }
    }
    if (n_ref < 4 * ns.back()) {
      throw ConfigError("n sweep: n_ref = " + std::to_string(n_ref) + " is below 4 max n = " +
                        std::to_string(4 * ns.back()));
    }
  }
}

SweepResult run_alpha_sweep(const BasisPtr& basis, const SweepSpec& spec) {
  if (spec.parameter != SweepSpec::Parameter::Alpha) throw ConfigError("run_alpha_sweep: spec is not an alpha sweep");
  spec.validate(*basis);
  const std::size_t n = spec.base.truncation(basis->size());
  const double lam_next = lambda_next(*basis, n);
  const double lam1 = basis->lambda1();
  const double alpha_min = spec.alphas.back();
  if (spec.precondition == Precondition::Bound) {
    const double projection = std::pow(lam_next, -1.5);
    const double threshold = 0.01 * std::pow(lam1, -0.5) * alpha_min * alpha_min;
    if (projection > threshold) {
      std::ostringstream msg;
      msg << "alpha sweep precondition violated: lambda_{n+1}^{-3/2} = " << projection << " at n = " << n
          << " exceeds 0.01 lambda_1^{-1/2} alpha^2 = " << threshold << " at alpha = " << alpha_min;
      throw ConfigError(msg.str());
    }
  }

  std::vector<SolverConfig> configs{reference_config(spec, spec.n_ref, spec.dt_ref)};
  for (double a : spec.alphas) configs.push_back(member_config(spec, a, n));
  if (spec.precondition == Precondition::Empirical) configs.push_back(member_config(spec, 0.0, n));
  const auto runs = run_all(basis, configs, spec.jobs);

  SweepResult r;
  r.parameter = SweepSpec::Parameter::Alpha;
  for (std::size_t i = 0; i < spec.alphas.size(); ++i) {
    SweepMember m;
    m.alpha = spec.alphas[i];
    m.n = n;
    m.lambda_next = lam_next;
    m.x_L2 = std::pow(lam1, -0.5) * m.alpha * m.alpha;
    m.x_H1 = m.alpha;
    m.errors = error_series(runs[i + 1], runs[0]);
    r.members.push_back(std::move(m));
  }
  if (spec.precondition == Precondition::Empirical) {
    r.projection_sup_err_sq = error_series(runs.back(), runs[0]).sup_err_L2_sq;
    const double smallest = r.members.back().errors.sup_err_L2_sq;
    if (r.projection_sup_err_sq > 0.01 * smallest) {
      std::ostringstream msg;
      msg << "alpha sweep precondition violated (empirical): the alpha = 0, n = " << n
          << " run has sup err^2 = " << r.projection_sup_err_sq << ", above 1% of the alpha = " << alpha_min
          << " error " << smallest;
      throw ConfigError(msg.str());
    }
  }
  fit_sweep(r);
  return r;
}

SweepResult run_n_sweep(const BasisPtr& basis, const SweepSpec& spec) {
  if (spec.parameter != SweepSpec::Parameter::N) throw ConfigError("run_n_sweep: spec is not an n sweep");
  spec.validate(*basis);
  std::vector<SolverConfig> configs{reference_config(spec, spec.n_ref, spec.dt_ref)};
  for (std::size_t n : spec.ns) configs.push_back(member_config(spec, spec.base.alpha, n));
  const auto runs = run_all(basis, configs, spec.jobs);

  SweepResult r;
  r.parameter = SweepSpec::Parameter::N;
  for (std::size_t i = 0; i < spec.ns.size(); ++i) {
    SweepMember m;
    m.alpha = spec.base.alpha;
    m.n = spec.ns[i];
    m.lambda_next = lambda_next(*basis, m.n);
    m.x_L2 = std::pow(m.lambda_next, -1.5);
    m.x_H1 = std::pow(m.lambda_next, -0.5);
    m.errors = error_series(runs[i + 1], runs[0]);
    r.members.push_back(std::move(m));
  }
  fit_sweep(r);
  return r;
}

RateFit run_dirichlet_rate(const BasisPtr& basis, const SweepSpec& spec) {
  const SweepResult r =
      spec.parameter == SweepSpec::Parameter::Alpha ? run_alpha_sweep(basis, spec) : run_n_sweep(basis, spec);
  return r.fit_H1;
}

AdequacyReport check_reference_adequacy(const BasisPtr& basis, const SweepSpec& spec) {
  spec.validate(*basis);
  if (2 * spec.n_ref > basis->size()) {
    throw ConfigError("reference adequacy check needs a basis of at least 2 n_ref = " + std::to_string(2 * spec.n_ref) +
                      " modes");
  }
  std::vector<SolverConfig> configs{reference_config(spec, spec.n_ref, spec.dt_ref),
                                    reference_config(spec, 2 * spec.n_ref, spec.dt_ref),
                                    reference_config(spec, spec.n_ref, spec.dt_ref / 2)};
  const std::size_t n_members = spec.parameter == SweepSpec::Parameter::Alpha ? spec.alphas.size() : spec.ns.size();
  for (std::size_t i = 0; i < n_members; ++i) {
    configs.push_back(spec.parameter == SweepSpec::Parameter::Alpha
                          ? member_config(spec, spec.alphas[i], spec.base.truncation(basis->size()))
                          : member_config(spec, spec.base.alpha, spec.ns[i]));
  }
  const auto runs = run_all(basis, configs, spec.jobs);
  AdequacyReport rep;
  for (std::size_t i = 0; i < n_members; ++i) {
    const Trajectory& m = runs[3 + i];
    const double base_err = error_series(m, runs[0]).sup_err_L2_sq;
    const double finer_n = error_series(m, runs[1]).sup_err_L2_sq;
    const double finer_dt = error_series(m, runs[2]).sup_err_L2_sq;
    rep.max_change_n = std::max(rep.max_change_n, std::abs(finer_n - base_err) / base_err);
    rep.max_change_dt = std::max(rep.max_change_dt, std::abs(finer_dt - base_err) / base_err);
  }
  rep.passed = rep.max_change_n < 0.05 && rep.max_change_dt < 0.05;
  return rep;
}

WindowedErrorReport run_global_time(const BasisPtr& basis, const SweepSpec& spec, int windows) {
  if (windows < 1) throw ConfigError("global-time experiment: windows must be at least 1");
  spec.base.validate(basis->size());
  const double horizon = 20.0 / (spec.base.nu * basis->lambda1());
  if (spec.base.t_end < horizon * (1.0 - 1e-12)) {
    std::ostringstream msg;
    msg << "global-time experiment: t_end = " << spec.base.t_end << " is below 20 / (nu lambda_1) = " << horizon;
    throw ConfigError(msg.str());
  }
  if (spec.n_ref == 0 || spec.n_ref > basis->size()) throw ConfigError("global-time experiment: bad n_ref");
  if (!(spec.dt_ref > 0.0) || spec.dt_ref > spec.base.dt / 4.0 * (1.0 + 1e-12)) {
    throw ConfigError("global-time experiment: dt_ref must satisfy 0 < dt_ref <= dt / 4");
  }
  reference_ratio(spec);
  const std::vector<SolverConfig> configs{
      reference_config(spec, spec.n_ref, spec.dt_ref),
      member_config(spec, spec.base.alpha, spec.base.truncation(basis->size()))};
  const auto runs = run_all(basis, configs, spec.jobs);

  return windowed_report(error_series(runs[1], runs[0]), spec.base.t_end, windows);
}

WindowedErrorReport windowed_report(ErrorSeries errors, double t_end, int windows) {
  if (windows < 1) throw ConfigError("windows must be at least 1");
  if (errors.records.empty()) throw ArgumentError("empty error series");
  WindowedErrorReport rep;
  rep.errors = std::move(errors);
  rep.run_sup = rep.errors.sup_err_L2_sq;
  const double t_begin = rep.errors.records.front().t;
  const double width = (t_end - t_begin) / windows;
  for (int w = 0; w < windows; ++w) {
    const double a = t_begin + w * width;
    const double b = w + 1 == windows ? t_end : t_begin + (w + 1) * width;
    rep.window_sup.push_back(window_sup_L2_sq(rep.errors, a, b, w + 1 == windows));
  }
  const int quarter = (windows + 3) / 4;
  for (int w = 0; w < quarter; ++w) rep.first_quarter_max = std::max(rep.first_quarter_max, rep.window_sup[w]);
  rep.last_window = rep.window_sup.back();
  rep.secular_growth_flag = rep.last_window > 2.0 * rep.first_quarter_max;
  return rep;
}

PerturbationFit run_perturbation(const BasisPtr& basis, const SolverConfig& base, const InitSpec& zeta_spec,
                                 double t0, double burn) {
  base.validate(basis->size());
  if (base.alpha != 0.0) throw ConfigError("perturbation experiment integrates the alpha = 0 system");
  if (!(t0 >= 0.0) || !(burn >= 0.0) || !(t0 + burn < base.t_end)) {
    throw ConfigError("perturbation experiment: need 0 <= t0, 0 <= burn and t0 + burn < t_end");
  }
  const std::size_t n = base.truncation(basis->size());
  const auto ni = static_cast<Eigen::Index>(n);

  // base flow up to t0
  Eigen::VectorXd u_t0;
  if (t0 > 0.0) {
    SolverConfig pre = base;
    pre.t_end = t0;
    pre.output_cadence = std::max(1, static_cast<int>(std::llround(t0 / base.dt)));
    u_t0 = integrate(basis, pre).final_state.v.coeffs().head(ni);
  } else {
    if (base.init.kind == InitSpec::Kind::Checkpoint) throw ConfigError("perturbation base flow cannot start from a checkpoint");
    u_t0 = initial_velocity(basis, base.init).coeffs().head(ni);
  }
  const Eigen::VectorXd zeta0 = initial_velocity(basis, zeta_spec).coeffs().head(ni);

  SolverConfig a = base;
  a.init = InitSpec{};
  a.init.kind = InitSpec::Kind::Coefficients;
  a.init.coeffs = u_t0;
  a.init.start_time = t0;
  a.checkpoint_every = 0;
  SolverConfig b = a;
  b.init.coeffs = u_t0 + zeta0;
  std::vector<Trajectory> runs(2);
  parallel_for(2, 2, [&](std::size_t i) { runs[i] = integrate(basis, i == 0 ? a : b); });

  std::vector<double> times, norms;
  for (std::size_t i = 0; i < runs[0].times.size(); ++i) {
    times.push_back(runs[0].times[i]);
    norms.push_back((runs[1].u[i] - runs[0].u[i]).norm());
  }
  return fit_perturbation(std::move(times), std::move(norms), t0, burn, zeta0.norm());
}

PerturbationFit fit_perturbation(std::vector<double> times, std::vector<double> zeta_norm, double t0,
                                 double burn, double zeta0_norm) {
  if (times.size() != zeta_norm.size()) throw ArgumentError("perturbation fit: times and norms differ in length");
  PerturbationFit fit;
  fit.t0 = t0;
  fit.zeta0_norm = zeta0_norm;
  fit.fit_begin = t0 + burn;
  fit.times = std::move(times);
  fit.zeta_norm = std::move(zeta_norm);
  std::vector<double> tt, logz;
  for (std::size_t i = 0; i < fit.times.size(); ++i) {
    const double z = fit.zeta_norm[i];
    if (fit.times[i] >= fit.fit_begin - 1e-12 && z > 0.0) {
      tt.push_back(fit.times[i] - t0);
      logz.push_back(2.0 * std::log(z));
    }
  }
  if (fit.zeta0_norm == 0.0 || tt.size() < 3) {
    fit.fitted_M = std::numeric_limits<double>::quiet_NaN();
    fit.fitted_B = std::numeric_limits<double>::quiet_NaN();
    fit.fitted_B_ols = std::numeric_limits<double>::quiet_NaN();
    return fit;
  }
  // log ||zeta||^2 = c - M (t - t0)
  const double m = static_cast<double>(tt.size());
  double mt = 0.0, mz = 0.0;
  for (std::size_t i = 0; i < tt.size(); ++i) {
    mt += tt[i] / m;
    mz += logz[i] / m;
  }
  double stt = 0.0, stz = 0.0;
  for (std::size_t i = 0; i < tt.size(); ++i) {
    stt += (tt[i] - mt) * (tt[i] - mt);
    stz += (tt[i] - mt) * (logz[i] - mz);
  }
  const double slope = stz / stt;
  const double intercept = mz - slope * mt;
  double ss = 0.0;
  for (std::size_t i = 0; i < tt.size(); ++i) ss += std::pow(logz[i] - intercept - slope * tt[i], 2);
  fit.residual = std::sqrt(ss / m);
  fit.fitted_M = -slope;
  const double z0sq = fit.zeta0_norm * fit.zeta0_norm;
  fit.fitted_B_ols = std::exp(intercept) / z0sq;
  double envelope = 0.0;
  for (std::size_t i = 0; i < tt.size(); ++i) envelope = std::max(envelope, std::exp(logz[i] + fit.fitted_M * tt[i]));
  fit.fitted_B = envelope / z0sq;
  fit.decaying = fit.fitted_M > 0.0;
  fit.bound_holds = true;
  for (std::size_t i = 0; i < tt.size(); ++i) {
    const double bound = fit.fitted_B * z0sq * std::exp(-fit.fitted_M * tt[i]);
    if (std::exp(logz[i]) > bound * (1.0 + 1e-12)) fit.bound_holds = false;
  }
  fit.stability_observed = fit.decaying && fit.bound_holds;
  return fit;
}

std::string summary_json(const SweepResult* sweep, const WindowedErrorReport* windows,
                         const PerturbationFit* perturbation) {
  using nlohmann::json;
  auto number = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  json j;
  j["slope"] = nullptr;
  j["intercept"] = nullptr;
  j["residual"] = nullptr;
  j["K_hat"] = nullptr;
  j["secular_growth_flag"] = nullptr;
  j["fitted_M"] = nullptr;
  j["fitted_B"] = nullptr;
  if (sweep) {
    j["kind"] = sweep->parameter == SweepSpec::Parameter::Alpha ? "alpha" : "n";
    j["slope"] = number(sweep->fit.slope);
    j["intercept"] = number(sweep->fit.intercept);
    j["residual"] = number(sweep->fit.residual);
    j["K_hat"] = number(sweep->fit.K_hat);
    j["K_hat_ratio"] = number(sweep->fit.K_hat_ratio);
    j["dirichlet"] = {{"slope", number(sweep->fit_H1.slope)},
                      {"intercept", number(sweep->fit_H1.intercept)},
                      {"residual", number(sweep->fit_H1.residual)},
                      {"K_hat", number(sweep->fit_H1.K_hat)},
                      {"K_hat_ratio", number(sweep->fit_H1.K_hat_ratio)}};
    json members = json::array();
    for (const auto& m : sweep->members) {
      members.push_back({{"alpha", m.alpha},
                         {"n", m.n},
                         {"lambda_next", m.lambda_next},
                         {"sup_err_L2_sq", m.errors.sup_err_L2_sq},
                         {"sup_err_H1_sq", m.errors.sup_err_H1_sq},
                         {"err_H1_cum", m.errors.err_H1_cum}});
    }
    j["members"] = members;
  }
  if (windows) {
    j["kind"] = "global";
    j["secular_growth_flag"] = windows->secular_growth_flag;
    j["window_sup"] = windows->window_sup;
    j["first_quarter_max"] = number(windows->first_quarter_max);
    j["last_window"] = number(windows->last_window);
    j["run_sup"] = number(windows->run_sup);
  }
  if (perturbation) {
    j["kind"] = "perturbation";
    j["fitted_M"] = number(perturbation->fitted_M);
    j["fitted_B"] = number(perturbation->fitted_B);
    j["fitted_B_ols"] = number(perturbation->fitted_B_ols);
    j["residual"] = number(perturbation->residual);
    j["t0"] = perturbation->t0;
    j["zeta0_norm"] = perturbation->zeta0_norm;
    j["stability_observed"] = perturbation->stability_observed;
    j["bound_holds"] = perturbation->bound_holds;
  }
  return j.dump(2);
}

}  // namespace nsalpha

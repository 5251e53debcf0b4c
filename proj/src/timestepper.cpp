#include "nsalpha/timestepper.hpp"

#include <cmath>
#include <filesystem>
#include <iomanip>
#include <numbers>
#include <random>
#include <sstream>

#include "nsalpha/errors.hpp"
#include "nsalpha/io.hpp"

namespace nsalpha {

namespace {

constexpr double kBlowUp = 1e12;

BasisPtr working_basis(const BasisPtr& basis, std::size_t n) {
  if (n == basis->size()) return basis;
  return std::make_shared<const EigenBasis>(basis->prefix(n));
}

Eigen::VectorXd pad(const Eigen::VectorXd& head, std::size_t size) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(size));
  out.head(head.size()) = head;
  return out;
}

std::size_t validated_truncation(const EigenBasis& basis, const SolverConfig& cfg) {
  cfg.validate(basis.size());
  return cfg.truncation(basis.size());
}

bool blown_up(const Eigen::VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (!std::isfinite(v[i]) || std::abs(v[i]) > kBlowUp) return true;
  return false;
}

}  // namespace

double ForcingSpec::factor(double t) const {
  switch (modulation) {
    case Modulation::Steady:
      return 1.0;
    case Modulation::Sine:
      return 1.0 + modulation_amplitude * std::sin(modulation_frequency * t);
    case Modulation::LinearGrowth:
      return 1.0 + growth_rate * t;
  }
  return 1.0;
}

void SolverConfig::validate(std::size_t basis_size) const {
  auto bad = [](const std::string& what) { throw ConfigError("solver config: " + what); };
  if (!(nu > 0.0) || !std::isfinite(nu)) bad("nu must be positive");
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) bad("alpha must be nonnegative");
  if (!(dt > 0.0) || !std::isfinite(dt)) bad("dt must be positive");
  if (!(t_end >= 0.0) || !std::isfinite(t_end)) bad("t_end must be nonnegative");
  if (output_cadence < 1) bad("output_cadence must be at least 1");
  if (checkpoint_every < 0) bad("checkpoint_every must be nonnegative");
  if (n > basis_size) {
    bad("truncation n = " + std::to_string(n) + " exceeds the basis size " + std::to_string(basis_size));
  }
  if (convective_form && alpha != 0.0) bad("the convective form is only defined for alpha = 0");
  if (!(cfl >= 0.0)) bad("cfl must be nonnegative");
}

SpectralField initial_velocity(const BasisPtr& basis, const InitSpec& init) {
  const auto size = static_cast<Eigen::Index>(basis->size());
  Eigen::VectorXd c = Eigen::VectorXd::Zero(size);
  switch (init.kind) {
    case InitSpec::Kind::Zero:
      break;
    case InitSpec::Kind::TaylorGreen: {
      if (basis->kind() != DomainKind::Torus) throw ConfigError("Taylor-Green data needs the torus");
      // (sin x cos y, -cos x sin y), analyzed from grid samples
      const int g = basis->grid_resolution();
      GridField grid{basis, g, std::vector<double>(std::size_t(g) * g), std::vector<double>(std::size_t(g) * g)};
      const double h = 2.0 * std::numbers::pi / g;
      for (int i = 0; i < g; ++i)
        for (int j = 0; j < g; ++j) {
          grid.ux[std::size_t(i) * g + j] = std::sin(i * h) * std::cos(j * h);
          grid.uy[std::size_t(i) * g + j] = -std::cos(i * h) * std::sin(j * h);
        }
      c = init.amplitude * analyze(grid).coeffs();
      break;
    }
    case InitSpec::Kind::Mode:
      if (init.mode >= basis->size()) throw ConfigError("initial mode index out of range");
      c[static_cast<Eigen::Index>(init.mode)] = init.amplitude;
      break;
    case InitSpec::Kind::Synthetic: {
      if (!(init.decay >= 0.0)) throw ConfigError("synthetic data: decay exponent must be nonnegative");
      std::mt19937_64 rng(init.seed);
      for (Eigen::Index j = 0; j < size; ++j) {
        const double sign = (rng() >> 63) ? -1.0 : 1.0;
        const double lam = basis->eigenvalue(static_cast<std::size_t>(j));
        if (init.max_lambda > 0.0 && lam > init.max_lambda) continue;
        c[j] = init.amplitude * sign * std::pow(lam, -init.decay);
      }
      break;
    }
    case InitSpec::Kind::Coefficients:
      if (init.coeffs.size() > size) throw ConfigError("initial coefficients exceed the basis size");
      c.head(init.coeffs.size()) = init.coeffs;
      break;
    case InitSpec::Kind::Checkpoint:
      throw ConfigError("checkpoint initial data is resolved by integrate()");
  }
  return SpectralField(basis, std::move(c));
}

SpectralField forcing_field(const BasisPtr& basis, const ForcingSpec& forcing) {
  const auto size = static_cast<Eigen::Index>(basis->size());
  Eigen::VectorXd f = Eigen::VectorXd::Zero(size);
  switch (forcing.kind) {
    case ForcingSpec::Kind::None:
      break;
    case ForcingSpec::Kind::LowModes: {
      Eigen::Index count = 0;
      for (Eigen::Index j = 0; j < size; ++j)
        if (basis->eigenvalue(static_cast<std::size_t>(j)) <= forcing.max_lambda) ++count;
      if (count == 0) throw ConfigError("forcing: no modes with lambda <= max_lambda");
      const double each = forcing.amplitude / std::sqrt(static_cast<double>(count));
      for (Eigen::Index j = 0; j < count; ++j) f[j] = each;
      break;
    }
    case ForcingSpec::Kind::Coefficients:
      if (forcing.coeffs.size() > size) throw ConfigError("forcing coefficients exceed the basis size");
      f.head(forcing.coeffs.size()) = forcing.coeffs;
      break;
  }
  return SpectralField(basis, std::move(f));
}

GalerkinSystem::GalerkinSystem(BasisPtr basis, const SolverConfig& cfg)
    : basis_(std::move(basis)),
      cfg_(cfg),
      n_(validated_truncation(*basis_, cfg)),
      op_(working_basis(basis_, n_)) {
  const auto n = static_cast<Eigen::Index>(n_);
  lambda_ = basis_->eigenvalues().head(n);
  filter_ = (1.0 + cfg_.alpha * cfg_.alpha * lambda_.array()).inverse();
  f0_ = forcing_field(basis_, cfg_.forcing).coeffs().head(n);
}

Eigen::VectorXd GalerkinSystem::forcing(double t) const { return f0_ * cfg_.forcing.factor(t); }

Eigen::VectorXd GalerkinSystem::nonlinear_part(const Eigen::VectorXd& v_n, double t) {
  Eigen::VectorXd out = forcing(t);
  if (cfg_.nonlinear) {
    const Eigen::VectorXd u = v_n.cwiseProduct(filter_);
    out -= cfg_.convective_form ? op_.convective(u, u) : op_.rotational(u, v_n);
  }
  return out;
}

Eigen::VectorXd GalerkinSystem::rhs(const Eigen::VectorXd& v_n, double t) {
  return nonlinear_part(v_n, t) - cfg_.nu * lambda_.cwiseProduct(v_n);
}

Eigen::VectorXd GalerkinSystem::rhs_convective(const Eigen::VectorXd& v_n, double t) {
  const Eigen::VectorXd u = v_n.cwiseProduct(filter_);
  Eigen::VectorXd out = forcing(t) - cfg_.nu * lambda_.cwiseProduct(u);
  if (cfg_.nonlinear) out -= op_.convective(u, u);
  return out;
}

double GalerkinSystem::max_speed(const Eigen::VectorXd& v_n) {
  return op_.max_speed(v_n.cwiseProduct(filter_));
}

Eigen::VectorXd GalerkinSystem::step(const Eigen::VectorXd& v_n, double t, double dt) {
  const Eigen::ArrayXd decay = (-cfg_.nu * dt * lambda_.array()).exp();
  const Eigen::VectorXd n0 = nonlinear_part(v_n, t);
  const Eigen::VectorXd predictor = (decay * (v_n + dt * n0).array()).matrix();
  const Eigen::VectorXd n1 = nonlinear_part(predictor, t + dt);
  return (decay * (v_n + 0.5 * dt * n0).array()).matrix() + 0.5 * dt * n1;
}

SpectralField rhs_galerkin(const SolverState& state, const BasisPtr& basis, const SolverConfig& cfg) {
  GalerkinSystem sys(basis, cfg);
  const auto n = static_cast<Eigen::Index>(sys.n());
  return SpectralField(basis, pad(sys.rhs(state.v.coeffs().head(n), state.t), basis->size()));
}

SpectralField rhs_convective(const SolverState& state, const BasisPtr& basis, const SolverConfig& cfg) {
  GalerkinSystem sys(basis, cfg);
  const auto n = static_cast<Eigen::Index>(sys.n());
  return SpectralField(basis, pad(sys.rhs_convective(state.v.coeffs().head(n), state.t), basis->size()));
}

SolverState step(const SolverState& state, const BasisPtr& basis, const SolverConfig& cfg) {
  GalerkinSystem sys(basis, cfg);
  const auto n = static_cast<Eigen::Index>(sys.n());
  Eigen::VectorXd next = sys.step(state.v.coeffs().head(n), state.t, cfg.dt);
  if (blown_up(next)) throw BlowUpError("state blew up during a single step", state.t + cfg.dt, "");
  return SolverState{state.t + cfg.dt, SpectralField(basis, pad(next, basis->size())), cfg.alpha};
}

SpectralField Trajectory::velocity(std::size_t i) const { return SpectralField(basis, pad(u.at(i), basis->size())); }

Trajectory integrate(const BasisPtr& basis, const SolverConfig& cfg, const StepObserver& observer) {
  if (!basis) throw ConfigError("integrate: no basis");
  GalerkinSystem sys(basis, cfg);
  const std::size_t n = sys.n();
  const auto ni = static_cast<Eigen::Index>(n);
  const Eigen::VectorXd filter = (1.0 + cfg.alpha * cfg.alpha * sys.lambda().array()).inverse();

  Eigen::VectorXd v;
  double t0 = 0.0;
  if (cfg.init.kind == InitSpec::Kind::Checkpoint) {
    const Checkpoint ck = read_checkpoint(cfg.init.checkpoint_path);
    if (static_cast<std::size_t>(ck.v.size()) != n) {
      throw ConfigError("checkpoint holds " + std::to_string(ck.v.size()) + " coefficients, run truncates at " +
                        std::to_string(n));
    }
    if (ck.nu != cfg.nu || ck.alpha != cfg.alpha) throw ConfigError("checkpoint nu/alpha differ from the config");
    v = ck.v;
    t0 = ck.t;
  } else {
    // u(0) = P_n u0, v(0) = (I + alpha^2 A) u(0)
    const Eigen::VectorXd u0 = initial_velocity(basis, cfg.init).coeffs().head(ni);
    v = u0.cwiseQuotient(filter);
    t0 = cfg.init.start_time;
    if (!std::isfinite(t0)) throw ConfigError("initial time must be finite");
  }
  if (!(cfg.t_end >= t0)) throw ConfigError("t_end lies before the initial time");

  const double span = cfg.t_end - t0;
  const auto total = static_cast<std::size_t>(std::llround(span / cfg.dt));
  if (std::abs(static_cast<double>(total) * cfg.dt - span) > 1e-9 * std::max(1.0, span)) {
    throw ConfigError("t_end - t0 must be a whole number of time steps");
  }
  // Times are k * dt on the global step grid so resumed runs reproduce the
  // uninterrupted run exactly.
  const auto k0 = static_cast<long long>(std::llround(t0 / cfg.dt));
  const bool on_grid = static_cast<double>(k0) * cfg.dt == t0;
  auto time_at = [&](std::size_t j) {
    return on_grid ? static_cast<double>(k0 + static_cast<long long>(j)) * cfg.dt
                   : t0 + static_cast<double>(j) * cfg.dt;
  };

  Trajectory traj;
  traj.basis = basis;
  traj.nu = cfg.nu;
  traj.alpha = cfg.alpha;
  traj.dt = cfg.dt;
  traj.n = n;

  auto velocity_of = [&](const Eigen::VectorXd& vv) { return SpectralField(basis, pad(vv.cwiseProduct(filter), basis->size())); };
  auto work = [&](const SpectralField& u, double t) { return sys.forcing(t).dot(u.coeffs().head(ni)); };

  SpectralField u = velocity_of(v);
  EnergyRecord rec = energy_functionals(u, cfg.alpha, t0);
  double w = work(u, t0);
  auto record = [&](double t, const SpectralField& uu, const EnergyRecord& r) {
    traj.times.push_back(t);
    traj.u.push_back(uu.coeffs().head(ni));
    traj.energy.push_back(r);
  };
  record(t0, u, rec);

  std::string last_checkpoint;
  if (!cfg.checkpoint_dir.empty()) std::filesystem::create_directories(cfg.checkpoint_dir);
  bool warned = false;

  for (std::size_t j = 1; j <= total; ++j) {
    const double t_prev = time_at(j - 1);
    const double t = time_at(j);
    int substeps = 1;
    if (cfg.cfl > 0.0 && cfg.nonlinear) {
      const double speed = sys.max_speed(v);
      const double limit = cfg.cfl * sys.grid_spacing();
      if (speed * cfg.dt > limit) {
        if (!warned) {
          std::ostringstream msg;
          msg << "CFL bound exceeded at t = " << t_prev << ": dt * max|u| = " << speed * cfg.dt << " > "
              << limit << (cfg.substep ? " (substepping)" : "");
          traj.warnings.push_back(msg.str());
          warned = true;
        }
        if (cfg.substep) substeps = static_cast<int>(std::ceil(speed * cfg.dt / limit));
      }
    }
    if (substeps == 1) {
      v = sys.step(v, t_prev, cfg.dt);
    } else {
      const double h = cfg.dt / substeps;
      for (int s = 0; s < substeps; ++s) v = sys.step(v, t_prev + s * h, h);
    }
    if (blown_up(v)) {
      std::ostringstream msg;
      msg << "blow-up at t = " << t << " (coefficient non-finite or above " << kBlowUp << ")";
      if (!last_checkpoint.empty()) msg << "; last checkpoint " << last_checkpoint;
      throw BlowUpError(msg.str(), t, last_checkpoint);
    }
    ++traj.steps;

    const SpectralField u_new = velocity_of(v);
    EnergyRecord next = energy_functionals(u_new, cfg.alpha, t);
    const double w_new = work(u_new, t);
    next.balance_residual = balance_residual(rec, next, cfg.dt, cfg.nu, w, w_new);
    traj.max_balance_residual = std::max(traj.max_balance_residual, next.balance_residual);
    traj.max_energy_increase = std::max(traj.max_energy_increase, next.E_alpha - rec.E_alpha);
    rec = next;
    w = w_new;

    if (j % static_cast<std::size_t>(cfg.output_cadence) == 0 || j == total) record(t, u_new, rec);
    if (cfg.checkpoint_every > 0 && j % static_cast<std::size_t>(cfg.checkpoint_every) == 0 &&
        !cfg.checkpoint_dir.empty()) {
      std::ostringstream name;
      name << "checkpoint_" << std::setw(8) << std::setfill('0') << (on_grid ? k0 + static_cast<long long>(j) : static_cast<long long>(j))
           << ".nsa1";
      const std::string path = (std::filesystem::path(cfg.checkpoint_dir) / name.str()).string();
      write_checkpoint(path, Checkpoint{cfg.nu, cfg.alpha, t, v});
      traj.checkpoints.push_back(path);
      last_checkpoint = path;
    }
    if (observer) observer(SolverState{t, SpectralField(basis, pad(v, basis->size())), cfg.alpha});
  }

  traj.final_state = SolverState{time_at(total), SpectralField(basis, pad(v, basis->size())), cfg.alpha};
  return traj;
}

}  // namespace nsalpha

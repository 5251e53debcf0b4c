#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "nsalpha/errors.hpp"

namespace fs = std::filesystem;

namespace nsalpha::cli {

namespace {

// Keys that select the basis source; a file and a build recipe are exclusive.
const std::vector<std::string> kBuildKeys{"domain", "modes", "grid"};
// Keys that do not change results and stay out of the output hash.
const std::vector<std::string> kUnhashedKeys{"out", "jobs"};

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) parts.push_back(item.substr(b, e - b + 1));
  }
  return parts;
}

std::vector<double> parse_list(const KeyValues& kv) {
  const std::string text = get_string(kv, "list", "");
  if (text.empty()) throw ConfigError("sweep needs --list");
  std::vector<double> values;
  for (const auto& item : split(text, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size()) throw ConfigError("list: malformed value '" + item + "'");
    values.push_back(v);
  }
  return values;
}

std::uint64_t seed_of(const KeyValues& kv) {
  const long long seed = get_int(kv, "seed", 1);
  if (seed < 0) throw ConfigError("seed must be nonnegative");
  return static_cast<std::uint64_t>(seed);
}

InitSpec init_spec(const KeyValues& kv, const std::string& prefix, const std::string& default_kind,
                   double default_amplitude, std::uint64_t seed) {
  InitSpec init;
  const std::string kind = get_string(kv, prefix, default_kind);
  if (kind == "zero") {
    init.kind = InitSpec::Kind::Zero;
  } else if (kind == "taylor_green") {
    init.kind = InitSpec::Kind::TaylorGreen;
  } else if (kind == "mode") {
    init.kind = InitSpec::Kind::Mode;
  } else if (kind == "synthetic") {
    init.kind = InitSpec::Kind::Synthetic;
  } else if (kind == "checkpoint") {
    init.kind = InitSpec::Kind::Checkpoint;
    init.checkpoint_path = get_string(kv, prefix + ".checkpoint", "");
    if (init.checkpoint_path.empty()) throw ConfigError(prefix + " = checkpoint needs " + prefix + ".checkpoint");
  } else {
    throw ConfigError(prefix + ": unknown kind '" + kind +
                      "' (expected zero, taylor_green, mode, synthetic or checkpoint)");
  }
  init.amplitude = get_double(kv, prefix + ".amplitude", default_amplitude);
  const long long mode = get_int(kv, prefix + ".mode", 0);
  if (mode < 0) throw ConfigError(prefix + ".mode must be nonnegative");
  init.mode = static_cast<std::size_t>(mode);
  init.decay = get_double(kv, prefix + ".decay", 1.75);
  init.max_lambda = get_double(kv, prefix + ".max_lambda", 0.0);
  init.seed = seed;
  return init;
}

ForcingSpec forcing_spec(const KeyValues& kv) {
  ForcingSpec f;
  const std::string kind = get_string(kv, "forcing", "low_modes");
  if (kind == "none") {
    f.kind = ForcingSpec::Kind::None;
  } else if (kind == "low_modes") {
    f.kind = ForcingSpec::Kind::LowModes;
  } else {
    throw ConfigError("forcing: unknown kind '" + kind + "' (expected none or low_modes)");
  }
  f.amplitude = get_double(kv, "forcing.amplitude", 1.0);
  f.max_lambda = get_double(kv, "forcing.max_lambda", 2.0);
  const std::string mod = get_string(kv, "forcing.modulation", "steady");
  if (mod == "steady") {
    f.modulation = ForcingSpec::Modulation::Steady;
  } else if (mod == "sine") {
    f.modulation = ForcingSpec::Modulation::Sine;
  } else if (mod == "growth") {
    f.modulation = ForcingSpec::Modulation::LinearGrowth;
  } else {
    throw ConfigError("forcing.modulation: unknown '" + mod + "' (expected steady, sine or growth)");
  }
  f.modulation_amplitude = get_double(kv, "forcing.modulation_amplitude", 0.0);
  f.modulation_frequency = get_double(kv, "forcing.modulation_frequency", 1.0);
  f.growth_rate = get_double(kv, "forcing.growth_rate", 0.0);
  return f;
}

std::size_t size_key(const KeyValues& kv, const std::string& key, std::size_t fallback) {
  const long long v = get_int(kv, key, static_cast<long long>(fallback));
  if (v < 0) throw ConfigError(key + " must be nonnegative");
  return static_cast<std::size_t>(v);
}

int jobs_of(const KeyValues& kv) {
  const long long jobs = get_int(kv, "jobs", 1);
  if (jobs < 1) throw ConfigError("--jobs must be at least 1");
  return static_cast<int>(jobs);
}

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

// Small `name,value` tables for metrics the CSV schemas do not cover.
void write_table(const std::string& path, const std::string& header,
                 const std::vector<std::vector<std::string>>& rows) {
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot write " + path);
  f << header << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) f << (i ? "," : "") << row[i];
    f << '\n';
  }
  if (!f) throw ConfigError("write failed: " + path);
}

std::vector<std::vector<std::string>> read_table(const std::string& path, const std::string& header) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read " + path);
  std::string line;
  if (!std::getline(f, line) || line != header) throw ConfigError(path + ": expected header '" + header + "'");
  std::vector<std::vector<std::string>> rows;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    rows.push_back(split(line, ','));
  }
  return rows;
}

double to_double(const std::string& text, const std::string& where) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || text.empty()) throw ConfigError(where + ": malformed number '" + text + "'");
  return v;
}

KeyValues read_metrics(const std::string& path) {
  KeyValues m;
  if (!fs::exists(path)) return m;
  for (const auto& row : read_table(path, "name,value")) {
    if (row.size() != 2) throw ConfigError(path + ": malformed row");
    m[row[0]] = row[1];
  }
  return m;
}

void write_metrics(const std::string& path, const std::vector<std::pair<std::string, double>>& metrics) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& [k, v] : metrics) rows.push_back({k, fmt(v)});
  write_table(path, "name,value", rows);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot write " + path);
  f << text << '\n';
}

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

std::string hash_of(const std::string& command, const KeyValues& kv) {
  KeyValues hashed = kv;
  for (const auto& k : kUnhashedKeys) hashed.erase(k);
  hashed["command"] = command;
  return config_hash(hashed);
}

RunManifest make_manifest(const std::string& command, const KeyValues& kv, const std::string& dir,
                          const std::string& started, double wall) {
  RunManifest m;
  m.config = kv;
  m.config["command"] = command;
  m.config_hash = hash_of(command, kv);
  m.version = library_version();
  m.basis_path = get_string(kv, "basis", "");
  m.output_dir = dir;
  m.seed = seed_of(kv);
  m.started = started;
  m.wall_seconds = wall;
  return m;
}

std::string prepare_directory(const std::string& command, const KeyValues& kv) {
  const std::string dir = output_directory(command, kv);
  fs::create_directories(dir);
  return dir;
}

// ---- summaries (shared by the commands and by report) ----

std::string sweep_summary(const SweepResult& r, const std::string& kind, const KeyValues& metrics) {
  auto j = nlohmann::json::parse(summary_json(&r, nullptr, nullptr));
  j["kind"] = kind;
  if (kind == "dirichlet") {
    // Headline keys carry the Dirichlet-norm fit; the L2 fit moves to "l2".
    const auto h1 = j["dirichlet"];
    j["l2"] = {{"slope", j["slope"]},
               {"intercept", j["intercept"]},
               {"residual", j["residual"]},
               {"K_hat", j["K_hat"]},
               {"K_hat_ratio", j["K_hat_ratio"]}};
    for (const char* key : {"slope", "intercept", "residual", "K_hat", "K_hat_ratio"}) j[key] = h1[key];
    j.erase("dirichlet");
  }
  for (const auto& [k, v] : metrics) j[k] = to_double(v, "metrics");
  return j.dump(2);
}

std::string global_summary(const WindowedErrorReport& w) {
  return summary_json(nullptr, &w, nullptr);
}

std::string perturbation_summary(const PerturbationFit& p) {
  auto j = nlohmann::json::parse(summary_json(nullptr, nullptr, &p));
  j["decaying"] = p.decaying;
  j["fit_begin"] = p.fit_begin;
  return j.dump(2);
}

// ---- commands ----

int cmd_eigen(const KeyValues& kv, std::ostream& out) {
  const std::string domain = get_string(kv, "domain", "torus");
  const DomainKind kind = domain_kind_from_string(domain);
  const long long modes = get_int(kv, "modes", 64);
  if (modes <= 0) throw ConfigError("--modes must be positive");
  const long long grid = get_int(kv, "grid", kind == DomainKind::Torus ? 0 : 64);
  if (grid < 0) throw ConfigError("--grid must be nonnegative");
  const std::string path =
      get_string(kv, "out", "basis_" + domain + "_" + std::to_string(modes) + ".nsab");

  EigenBasis basis = kind == DomainKind::Torus
                         ? build_torus_basis(static_cast<std::size_t>(modes), static_cast<int>(grid))
                         : build_square_basis(static_cast<std::size_t>(modes), static_cast<int>(grid));
  const ValidationReport report = validate_basis(basis);
  out << report.summary() << '\n';
  if (!report.passed()) throw NumericalError("basis validation failed; no file written");
  if (const auto parent = fs::path(path).parent_path(); !parent.empty()) fs::create_directories(parent);
  write_basis(path, basis);
  out << "basis: " << path << " (" << basis.size() << " modes, lambda_1 = " << fmt(basis.lambda1())
      << ", lambda_N = " << fmt(basis.eigenvalue(basis.size() - 1)) << ")\n";
  return 0;
}

int cmd_run(const KeyValues& kv, std::ostream& out, std::ostream& err) {
  const Timer timer;
  const std::string started = utc_timestamp();
  SolverConfig cfg = solver_config(kv);
  const BasisPtr basis = resolve_basis(kv, cfg.n == 0 ? 64 : cfg.n, cfg.n);
  const std::string dir = prepare_directory("run", kv);
  if (cfg.checkpoint_every > 0) {
    cfg.checkpoint_dir = (fs::path(dir) / "checkpoints").string();
    fs::create_directories(cfg.checkpoint_dir);
  }

  const Trajectory traj = integrate(basis, cfg);
  for (const auto& w : traj.warnings) err << "warning: " << w << '\n';

  write_energy_csv((fs::path(dir) / "energy.csv").string(), traj.energy);
  Checkpoint final_ckpt{cfg.nu, cfg.alpha, traj.final_state.t, traj.final_state.v.coeffs()};
  const std::string final_path = (fs::path(dir) / "final.nsa1").string();
  write_checkpoint(final_path, final_ckpt);
  write_metrics((fs::path(dir) / "metrics.csv").string(),
                {{"steps", static_cast<double>(traj.steps)},
                 {"max_balance_residual", traj.max_balance_residual},
                 {"max_energy_increase", traj.max_energy_increase}});
  write_manifest((fs::path(dir) / "manifest.txt").string(), make_manifest("run", kv, dir, started, timer.seconds()));

  const auto& last = traj.energy.back();
  out << "output: " << dir << '\n'
      << "t = " << fmt(last.t) << " E0 = " << fmt(last.E0) << " E_alpha = " << fmt(last.E_alpha)
      << " max_balance_residual = " << fmt(traj.max_balance_residual) << '\n'
      << "final checkpoint: " << final_path << '\n';
  for (const auto& c : traj.checkpoints) out << "checkpoint: " << c << '\n';
  return 0;
}

SweepSpec sweep_spec(const KeyValues& kv, const std::string& parameter) {
  SweepSpec spec;
  spec.base = solver_config(kv);
  spec.jobs = jobs_of(kv);
  const auto list = parse_list(kv);
  std::size_t max_n = 0;
  if (parameter == "alpha") {
    spec.parameter = SweepSpec::Parameter::Alpha;
    spec.alphas = list;
    if (spec.base.n == 0) spec.base.n = 64;
    max_n = spec.base.n;
  } else if (parameter == "n") {
    spec.parameter = SweepSpec::Parameter::N;
    for (double v : list) {
      if (!(v >= 1.0) || v != std::floor(v)) throw ConfigError("n sweep: list entry " + fmt(v) + " is not a positive integer");
      spec.ns.push_back(static_cast<std::size_t>(v));
    }
    max_n = spec.ns.empty() ? 0 : *std::max_element(spec.ns.begin(), spec.ns.end());
  } else {
    throw ConfigError("parameter: unknown '" + parameter + "' (expected alpha or n)");
  }
  spec.n_ref = size_key(kv, "n_ref", 4 * max_n);
  spec.dt_ref = get_double(kv, "dt_ref", spec.base.dt / 4.0);
  const std::string pre = get_string(kv, "precondition", "bound");
  if (pre == "bound") {
    spec.precondition = Precondition::Bound;
  } else if (pre == "empirical") {
    spec.precondition = Precondition::Empirical;
  } else if (pre == "skip") {
    spec.precondition = Precondition::Skip;
  } else {
    throw ConfigError("precondition: unknown '" + pre + "' (expected bound, empirical or skip)");
  }
  return spec;
}

int cmd_sweep(const KeyValues& kv, std::ostream& out, std::ostream& err) {
  const Timer timer;
  const std::string started = utc_timestamp();
  const std::string kind = get_string(kv, "kind", "");
  if (kind.empty()) throw ConfigError("sweep needs --kind alpha|n|global|dirichlet");

  if (kind == "global") {
    SweepSpec spec;
    spec.base = solver_config(kv);
    spec.jobs = jobs_of(kv);
    if (spec.base.n == 0) spec.base.n = 32;
    spec.n_ref = size_key(kv, "n_ref", 4 * spec.base.n);
    spec.dt_ref = get_double(kv, "dt_ref", spec.base.dt / 4.0);
    const int windows = static_cast<int>(get_int(kv, "windows", 10));
    const BasisPtr basis = resolve_basis(kv, spec.n_ref, spec.n_ref);
    const WindowedErrorReport w = run_global_time(basis, spec, windows);
    const std::string dir = prepare_directory("sweep", kv);
    write_error_csv((fs::path(dir) / "errors.csv").string(), w.errors.records);
    const std::string summary = global_summary(w);
    write_text((fs::path(dir) / "summary.json").string(), summary);
    write_manifest((fs::path(dir) / "manifest.txt").string(),
                   make_manifest("sweep", kv, dir, started, timer.seconds()));
    out << "output: " << dir << '\n' << summary << '\n';
    return 0;
  }

  const std::string parameter = kind == "dirichlet" ? get_string(kv, "parameter", "alpha") : kind;
  if (kind != "alpha" && kind != "n" && kind != "dirichlet") {
    throw ConfigError("sweep: unknown kind '" + kind + "' (expected alpha, n, global or dirichlet)");
  }
  const SweepSpec spec = sweep_spec(kv, parameter);
  const bool check_reference = get_bool(kv, "check_reference", false);
  const std::size_t needed = check_reference ? 2 * spec.n_ref : spec.n_ref;
  const BasisPtr basis = resolve_basis(kv, needed, needed);

  SweepResult r = spec.parameter == SweepSpec::Parameter::Alpha ? run_alpha_sweep(basis, spec)
                                                                 : run_n_sweep(basis, spec);
  std::vector<std::pair<std::string, double>> metrics;
  if (spec.precondition == Precondition::Empirical) metrics.emplace_back("projection_sup_err_sq", r.projection_sup_err_sq);
  if (check_reference) {
    const AdequacyReport a = check_reference_adequacy(basis, spec);
    metrics.emplace_back("reference_change_n", a.max_change_n);
    metrics.emplace_back("reference_change_dt", a.max_change_dt);
    metrics.emplace_back("reference_adequate", a.passed ? 1.0 : 0.0);
    if (!a.passed) err << "warning: reference run is not adequate (changes " << a.max_change_n << ", " << a.max_change_dt << ")\n";
  }

  const std::string dir = prepare_directory("sweep", kv);
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < r.members.size(); ++i) {
    const auto& m = r.members[i];
    const std::string file = "errors_" + std::to_string(i) + ".csv";
    write_error_csv((fs::path(dir) / file).string(), m.errors.records);
    rows.push_back({fmt(m.alpha), std::to_string(m.n), fmt(m.lambda_next), fmt(m.x_L2), fmt(m.x_H1), file});
  }
  write_table((fs::path(dir) / "members.csv").string(), "alpha,n,lambda_next,x_L2,x_H1,errors_file", rows);
  write_metrics((fs::path(dir) / "metrics.csv").string(), metrics);
  KeyValues metric_map = read_metrics((fs::path(dir) / "metrics.csv").string());
  const std::string summary = sweep_summary(r, kind, metric_map);
  write_text((fs::path(dir) / "summary.json").string(), summary);
  write_manifest((fs::path(dir) / "manifest.txt").string(), make_manifest("sweep", kv, dir, started, timer.seconds()));
  out << "output: " << dir << '\n' << summary << '\n';
  return 0;
}

int cmd_perturb(const KeyValues& kv, std::ostream& out) {
  const Timer timer;
  const std::string started = utc_timestamp();
  SolverConfig base = solver_config(kv);
  if (base.n == 0) base.n = 32;
  const std::uint64_t seed = seed_of(kv);
  const InitSpec zeta = init_spec(kv, "zeta", "synthetic", 1e-3, seed + 1);
  const double t0 = get_double(kv, "t0", 0.0);
  const double burn = get_double(kv, "burn", 0.0);
  const BasisPtr basis = resolve_basis(kv, base.n, base.n);
  const PerturbationFit p = run_perturbation(basis, base, zeta, t0, burn);
  const std::string dir = prepare_directory("perturb", kv);
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < p.times.size(); ++i) rows.push_back({fmt(p.times[i]), fmt(p.zeta_norm[i])});
  write_table((fs::path(dir) / "zeta.csv").string(), "t,zeta_norm", rows);
  write_metrics((fs::path(dir) / "metrics.csv").string(), {{"zeta0_norm", p.zeta0_norm}});
  const std::string summary = perturbation_summary(p);
  write_text((fs::path(dir) / "summary.json").string(), summary);
  write_manifest((fs::path(dir) / "manifest.txt").string(),
                 make_manifest("perturb", kv, dir, started, timer.seconds()));
  out << "output: " << dir << '\n' << summary << '\n';
  return 0;
}

int cmd_report(const std::string& dir, std::ostream& out) {
  const fs::path root(dir);
  const RunManifest manifest = read_manifest((root / "manifest.txt").string());
  const KeyValues& kv = manifest.config;
  const std::string command = get_string(kv, "command", "");
  const KeyValues metrics = read_metrics((root / "metrics.csv").string());
  std::string summary;

  if (command == "sweep") {
    const std::string kind = get_string(kv, "kind", "");
    if (kind == "global") {
      ErrorSeries s = series_from_records(read_error_csv((root / "errors.csv").string()));
      const WindowedErrorReport w =
          windowed_report(std::move(s), get_double(kv, "t_end", 1.0), static_cast<int>(get_int(kv, "windows", 10)));
      summary = global_summary(w);
    } else {
      SweepResult r;
      const std::string parameter = kind == "dirichlet" ? get_string(kv, "parameter", "alpha") : kind;
      r.parameter = parameter == "n" ? SweepSpec::Parameter::N : SweepSpec::Parameter::Alpha;
      const std::string header = "alpha,n,lambda_next,x_L2,x_H1,errors_file";
      for (const auto& row : read_table((root / "members.csv").string(), header)) {
        if (row.size() != 6) throw ConfigError("members.csv: malformed row");
        SweepMember m;
        m.alpha = to_double(row[0], "members.csv");
        m.n = static_cast<std::size_t>(to_double(row[1], "members.csv"));
        m.lambda_next = to_double(row[2], "members.csv");
        m.x_L2 = to_double(row[3], "members.csv");
        m.x_H1 = to_double(row[4], "members.csv");
        m.errors = series_from_records(read_error_csv((root / row[5]).string()));
        r.members.push_back(std::move(m));
      }
      fit_sweep(r);
      summary = sweep_summary(r, kind, metrics);
    }
  } else if (command == "perturb") {
    std::vector<double> times, norms;
    for (const auto& row : read_table((root / "zeta.csv").string(), "t,zeta_norm")) {
      if (row.size() != 2) throw ConfigError("zeta.csv: malformed row");
      times.push_back(to_double(row[0], "zeta.csv"));
      norms.push_back(to_double(row[1], "zeta.csv"));
    }
    const auto z0 = metrics.find("zeta0_norm");
    if (z0 == metrics.end()) throw ConfigError("metrics.csv: missing zeta0_norm");
    const PerturbationFit p = fit_perturbation(std::move(times), std::move(norms), get_double(kv, "t0", 0.0),
                                               get_double(kv, "burn", 0.0), to_double(z0->second, "metrics.csv"));
    summary = perturbation_summary(p);
  } else if (command == "run") {
    const auto energy = read_energy_csv((root / "energy.csv").string());
    if (energy.empty()) throw ConfigError("energy.csv has no records");
    nlohmann::json j;
    j["kind"] = "run";
    j["t"] = energy.back().t;
    j["E0"] = energy.back().E0;
    j["E_alpha"] = energy.back().E_alpha;
    double worst = 0.0;
    for (const auto& e : energy) worst = std::max(worst, e.balance_residual);
    j["max_recorded_balance_residual"] = worst;
    summary = j.dump(2);
  } else {
    throw ConfigError("report: manifest has unknown command '" + command + "'");
  }
  write_text((root / "summary.json").string(), summary);
  out << summary << '\n';
  return 0;
}

// ---- argument parsing ----

struct Parsed {
  std::string command;
  std::string config_file;
  std::vector<std::string> sets;
  KeyValues overrides;
  std::string report_dir;
};

CLI::Option* key_option(CLI::App* app, Parsed& p, const std::string& flag, const std::string& key,
                        const std::string& help) {
  return app->add_option_function<std::string>(
      flag, [&p, key](const std::string& v) { p.overrides[key] = v; }, help);
}

void add_config_options(CLI::App* app, Parsed& p) {
  app->add_option("--config", p.config_file, "key = value configuration file")->check(CLI::ExistingFile);
  app->add_option("--set", p.sets, "override any key: --set key=value (repeatable)");
  app->add_option_function<int>(
      "--jobs", [&p](int j) { p.overrides["jobs"] = std::to_string(j); }, "parallel sweep members");
  key_option(app, p, "--out", "out", "output root directory (default nsalpha_out)");
}

void add_basis_options(CLI::App* app, Parsed& p) {
  auto* basis = key_option(app, p, "--basis", "basis", "basis file written by `eigen`");
  auto* domain = key_option(app, p, "--domain", "domain", "build the basis: torus or square");
  auto* modes = key_option(app, p, "--modes", "modes", "build the basis: number of modes");
  auto* grid = key_option(app, p, "--grid", "grid", "build the basis: grid (torus) or mesh (square)");
  basis->excludes(domain)->excludes(modes)->excludes(grid);
}

void add_solver_options(CLI::App* app, Parsed& p) {
  key_option(app, p, "--nu", "nu", "viscosity");
  key_option(app, p, "--alpha", "alpha", "filter length");
  key_option(app, p, "-n,--n", "n", "Galerkin truncation (0: whole basis)");
  key_option(app, p, "--dt", "dt", "time step");
  key_option(app, p, "--t-end", "t_end", "final time");
  key_option(app, p, "--cadence", "cadence", "steps between recorded samples");
  key_option(app, p, "--seed", "seed", "seed for all random data");
  key_option(app, p, "--forcing", "forcing", "none or low_modes");
  key_option(app, p, "--forcing-amplitude", "forcing.amplitude", "||f0||");
}

}  // namespace

KeyValues merge(KeyValues base, const KeyValues& overrides) {
  const bool flag_builds = std::any_of(kBuildKeys.begin(), kBuildKeys.end(),
                                       [&](const std::string& k) { return overrides.count(k) > 0; });
  if (overrides.count("basis")) {
    for (const auto& k : kBuildKeys) base.erase(k);
  } else if (flag_builds) {
    base.erase("basis");
  }
  for (const auto& [k, v] : overrides) base[k] = v;
  return base;
}

SolverConfig solver_config(const KeyValues& kv) {
  SolverConfig cfg;
  cfg.nu = get_double(kv, "nu", 1.0);
  cfg.alpha = get_double(kv, "alpha", 0.0);
  cfg.n = size_key(kv, "n", 0);
  cfg.dt = get_double(kv, "dt", 1e-3);
  cfg.t_end = get_double(kv, "t_end", 1.0);
  cfg.output_cadence = static_cast<int>(get_int(kv, "cadence", 10));
  cfg.cfl = get_double(kv, "cfl", 0.5);
  cfg.substep = get_bool(kv, "substep", false);
  cfg.nonlinear = get_bool(kv, "nonlinear", true);
  const std::string form = get_string(kv, "form", "rotational");
  if (form != "rotational" && form != "convective") {
    throw ConfigError("form: unknown '" + form + "' (expected rotational or convective)");
  }
  cfg.convective_form = form == "convective";
  cfg.checkpoint_every = static_cast<int>(get_int(kv, "checkpoint_every", 0));
  if (cfg.checkpoint_every < 0) throw ConfigError("checkpoint_every must be nonnegative");
  cfg.forcing = forcing_spec(kv);
  cfg.init = init_spec(kv, "init", "synthetic", 1.0, seed_of(kv));
  return cfg;
}

BasisPtr resolve_basis(const KeyValues& kv, std::size_t default_modes, std::size_t min_modes) {
  const std::string path = get_string(kv, "basis", "");
  const bool builds = std::any_of(kBuildKeys.begin(), kBuildKeys.end(),
                                  [&](const std::string& k) { return kv.count(k) > 0; });
  if (!path.empty() && builds) throw ConfigError("basis file and domain/modes/grid are mutually exclusive");
  BasisPtr basis;
  if (!path.empty()) {
    if (!fs::exists(path)) throw ConfigError("basis file not found: " + path);
    basis = std::make_shared<const EigenBasis>(read_basis(path));
  } else {
    const DomainKind kind = domain_kind_from_string(get_string(kv, "domain", "torus"));
    const std::size_t modes = size_key(kv, "modes", std::max(default_modes, min_modes));
    const int grid = static_cast<int>(get_int(kv, "grid", kind == DomainKind::Torus ? 0 : 64));
    basis = std::make_shared<const EigenBasis>(kind == DomainKind::Torus ? build_torus_basis(modes, grid)
                                                                         : build_square_basis(modes, grid));
  }
  if (basis->size() < min_modes) {
    throw ConfigError("basis has " + std::to_string(basis->size()) + " modes; at least " +
                      std::to_string(min_modes) + " are needed");
  }
  return basis;
}

std::string output_directory(const std::string& command, const KeyValues& kv) {
  const fs::path root = get_string(kv, "out", "nsalpha_out");
  return (root / (command + "-" + hash_of(command, kv))).string();
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spectral-Galerkin Navier-Stokes / NS-alpha solver and experiment harness", "nsalpha"};
  app.require_subcommand(1, 1);
  app.failure_message(CLI::FailureMessage::help);
  app.set_version_flag("--version", library_version());
  Parsed p;

  auto* eigen = app.add_subcommand("eigen", "build, validate and save a Stokes eigenbasis");
  key_option(eigen, p, "--domain", "domain", "torus or square")->required();
  key_option(eigen, p, "--modes", "modes", "number of modes")->required();
  key_option(eigen, p, "--grid", "grid", "grid (torus, 0: minimal) or mesh intervals (square)");
  key_option(eigen, p, "--out", "out", "basis file path");

  auto* run = app.add_subcommand("run", "single integration with energy diagnostics");
  add_config_options(run, p);
  add_basis_options(run, p);
  add_solver_options(run, p);
  auto* init = key_option(run, p, "--init", "init", "zero, taylor_green, mode, synthetic");
  auto* resume = run->add_option_function<std::string>(
      "--resume",
      [&p](const std::string& v) {
        p.overrides["init"] = "checkpoint";
        p.overrides["init.checkpoint"] = v;
      },
      "continue from a checkpoint file");
  resume->excludes(init);
  key_option(run, p, "--checkpoint-every", "checkpoint_every", "steps between checkpoints");

  auto* sweep = app.add_subcommand("sweep", "convergence-rate and uniform-in-time experiments");
  add_config_options(sweep, p);
  add_basis_options(sweep, p);
  add_solver_options(sweep, p);
  key_option(sweep, p, "--init", "init", "initial data kind");
  key_option(sweep, p, "--kind", "kind", "alpha, n, global or dirichlet");
  key_option(sweep, p, "--list", "list", "comma-separated alpha or n values");
  key_option(sweep, p, "--parameter", "parameter", "dirichlet sweeps: alpha or n");
  key_option(sweep, p, "--n-ref", "n_ref", "reference truncation");
  key_option(sweep, p, "--dt-ref", "dt_ref", "reference time step");
  key_option(sweep, p, "--windows", "windows", "global: number of time windows");
  key_option(sweep, p, "--precondition", "precondition", "alpha sweeps: bound, empirical or skip");
  sweep->add_flag_callback("--check-reference", [&p] { p.overrides["check_reference"] = "true"; },
                           "also rerun the reference with 2 n_ref and dt_ref / 2");

  auto* perturb = app.add_subcommand("perturb", "perturbation decay experiment");
  add_config_options(perturb, p);
  add_basis_options(perturb, p);
  add_solver_options(perturb, p);
  key_option(perturb, p, "--init", "init", "base-flow initial data kind");
  key_option(perturb, p, "--t0", "t0", "perturbation time");
  key_option(perturb, p, "--burn", "burn", "fit starts at t0 + burn");
  key_option(perturb, p, "--zeta-amplitude", "zeta.amplitude", "perturbation amplitude");

  auto* report = app.add_subcommand("report", "regenerate summary.json from stored CSVs");
  report->add_option("dir", p.report_dir, "output directory of a run, sweep or perturb")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (report->parsed()) return cmd_report(p.report_dir, out);
    KeyValues base;
    if (!p.config_file.empty()) base = read_key_values(p.config_file);
    KeyValues overrides = p.overrides;
    for (const auto& s : p.sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + s + "'");
      overrides[s.substr(0, eq)] = s.substr(eq + 1);
    }
    const KeyValues kv = merge(std::move(base), overrides);
    if (eigen->parsed()) return cmd_eigen(kv, out);
    if (run->parsed()) return cmd_run(kv, out, err);
    if (sweep->parsed()) return cmd_sweep(kv, out, err);
    if (perturb->parsed()) return cmd_perturb(kv, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const ArgumentError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return 3;
  }
  return 2;
}

}  // namespace nsalpha::cli

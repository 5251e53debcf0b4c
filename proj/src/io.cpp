#include "nsalpha/io.hpp"

#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <vector>

#include "nsalpha/errors.hpp"

namespace nsalpha {

namespace {

constexpr std::uint8_t kBasisVersion = 1;
constexpr std::uint8_t kCheckpointVersion = 1;

class Writer {
 public:
  explicit Writer(const std::string& path) : path_(path), out_(path, std::ios::binary) {
    if (!out_) throw ConfigError("cannot open '" + path + "' for writing");
  }
  void raw(const void* data, std::size_t len) {
    out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(len));
  }
  void u8(std::uint8_t v) { raw(&v, 1); }
  void u64(std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    raw(b, 8);
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void f64s(const double* p, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) f64(p[i]);
  }
  void close() {
    out_.close();
    if (!out_) throw ConfigError("write to '" + path_ + "' failed");
  }

 private:
  std::string path_;
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::string& path) : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw ConfigError("cannot open '" + path + "'");
  }
  void raw(void* data, std::size_t len) {
    in_.read(static_cast<char*>(data), static_cast<std::streamsize>(len));
    if (static_cast<std::size_t>(in_.gcount()) != len) fail("truncated file");
  }
  std::uint8_t u8() {
    std::uint8_t v;
    raw(&v, 1);
    return v;
  }
  std::uint64_t u64() {
    unsigned char b[8];
    raw(b, 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  void f64s(double* p, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) p[i] = f64();
  }
  void magic(const char* expected) {
    char m[4];
    raw(m, 4);
    if (std::memcmp(m, expected, 4) != 0) fail(std::string("bad magic, expected ") + expected);
  }
  void expect_end() {
    if (in_.peek() != std::char_traits<char>::eof()) fail("trailing bytes");
  }
  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError("'" + path_ + "': " + what);
  }

 private:
  std::string path_;
  std::ifstream in_;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

void write_basis(const std::string& path, const EigenBasis& basis) {
  Writer w(path);
  w.raw("NSAB", 4);
  w.u8(kBasisVersion);
  w.u8(static_cast<std::uint8_t>(basis.kind()));
  const std::size_t n = basis.size();
  w.u64(n);
  w.u64(static_cast<std::uint64_t>(basis.grid_resolution()));
  const std::size_t nodes = basis.kind() == DomainKind::Torus ? 0 : basis.square_modes().nodes();
  w.u64(nodes);
  w.f64s(basis.eigenvalues().data(), n);
  if (basis.kind() == DomainKind::Torus) {
    for (const auto& m : basis.torus_modes()) {
      w.f64(m.kx);
      w.f64(m.ky);
      w.f64(m.parity == Parity::Cos ? 0.0 : 1.0);
    }
  } else {
    const auto& sm = basis.square_modes();
    w.f64s(sm.psi.data(), nodes * n);
    w.f64s(sm.wx.data(), nodes * n);
    w.f64s(sm.wy.data(), nodes * n);
  }
  w.close();
}

EigenBasis read_basis(const std::string& path) {
  Reader r(path);
  r.magic("NSAB");
  if (const auto v = r.u8(); v != kBasisVersion) r.fail("unsupported basis version " + std::to_string(v));
  const auto kind = r.u8();
  if (kind > 1) r.fail("unknown domain kind " + std::to_string(kind));
  const auto n = r.u64();
  const auto grid = r.u64();
  const auto nodes = r.u64();
  if (n == 0 || n > (1u << 24) || grid > (1u << 16)) r.fail("implausible header counts");
  Eigen::VectorXd lambda(static_cast<Eigen::Index>(n));
  r.f64s(lambda.data(), n);
  if (static_cast<DomainKind>(kind) == DomainKind::Torus) {
    if (nodes != 0) r.fail("torus basis with node data");
    std::vector<TorusMode> modes(n);
    for (auto& m : modes) {
      const double kx = r.f64(), ky = r.f64(), parity = r.f64();
      if (kx != std::floor(kx) || ky != std::floor(ky) || (parity != 0.0 && parity != 1.0)) {
        r.fail("malformed torus mode record");
      }
      m = TorusMode{static_cast<int>(kx), static_cast<int>(ky), parity == 0.0 ? Parity::Cos : Parity::Sin};
    }
    r.expect_end();
    EigenBasis b = EigenBasis::torus(std::move(modes), static_cast<int>(grid));
    if (b.eigenvalues() != lambda) r.fail("stored eigenvalues disagree with the mode wavevectors");
    return b;
  }
  if (nodes != (grid + 1) * (grid + 1)) r.fail("node count does not match the mesh");
  SquareModes sm;
  sm.mesh = static_cast<int>(grid);
  const auto rows = static_cast<Eigen::Index>(nodes), cols = static_cast<Eigen::Index>(n);
  sm.psi.resize(rows, cols);
  sm.wx.resize(rows, cols);
  sm.wy.resize(rows, cols);
  r.f64s(sm.psi.data(), nodes * n);
  r.f64s(sm.wx.data(), nodes * n);
  r.f64s(sm.wy.data(), nodes * n);
  r.expect_end();
  return EigenBasis::square(std::move(lambda), std::move(sm));
}

void write_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  // Write-then-rename so a crash never leaves a torn checkpoint behind.
  const std::string tmp = path + ".tmp";
  {
    Writer w(tmp);
    w.raw("NSA1", 4);
    w.u8(kCheckpointVersion);
    w.u64(static_cast<std::uint64_t>(ckpt.v.size()));
    w.f64(ckpt.nu);
    w.f64(ckpt.alpha);
    w.f64(ckpt.t);
    w.f64s(ckpt.v.data(), static_cast<std::size_t>(ckpt.v.size()));
    w.close();
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw ConfigError("cannot move checkpoint into place at '" + path + "'");
  }
}

Checkpoint read_checkpoint(const std::string& path) {
  Reader r(path);
  r.magic("NSA1");
  if (const auto v = r.u8(); v != kCheckpointVersion) {
    r.fail("unsupported checkpoint version " + std::to_string(v));
  }
  const auto n = r.u64();
  if (n == 0 || n > (1u << 24)) r.fail("implausible coefficient count");
  Checkpoint c;
  c.nu = r.f64();
  c.alpha = r.f64();
  c.t = r.f64();
  c.v.resize(static_cast<Eigen::Index>(n));
  r.f64s(c.v.data(), n);
  r.expect_end();
  return c;
}

KeyValues parse_key_values(const std::string& text) {
  KeyValues kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    if (!kv.emplace(key, value).second) throw ConfigError("duplicate config key '" + key + "'");
  }
  return kv;
}

KeyValues read_key_values(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_key_values(ss.str());
}

std::string format_key_values(const KeyValues& kv) {
  std::string out;
  for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
  return out;
}

std::string config_hash(const KeyValues& kv) {
  std::uint64_t h = 14695981039346656037ULL;
  for (const auto& [k, v] : kv) {
    for (const std::string* s : {&k, &v}) {
      for (unsigned char ch : *s) {
        h ^= ch;
        h *= 1099511628211ULL;
      }
      h ^= 0xff;  // field separator outside the text alphabet
      h *= 1099511628211ULL;
    }
  }
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << h;
  return out.str();
}

double get_double(const KeyValues& kv, const std::string& key, double fallback) {
  const auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  try {
    std::size_t pos = 0;
    const double v = std::stod(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': '" + it->second + "' is not a number");
  }
}

long long get_int(const KeyValues& kv, const std::string& key, long long fallback) {
  const auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': '" + it->second + "' is not an integer");
  }
}

bool get_bool(const KeyValues& kv, const std::string& key, bool fallback) {
  const auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  const std::string& v = it->second;
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("config key '" + key + "': '" + v + "' is not a boolean");
}

std::string get_string(const KeyValues& kv, const std::string& key, const std::string& fallback) {
  const auto it = kv.find(key);
  return it == kv.end() ? fallback : it->second;
}

void write_manifest(const std::string& path, const RunManifest& m) {
  KeyValues kv;
  kv["config_hash"] = m.config_hash;
  kv["version"] = m.version;
  kv["basis_path"] = m.basis_path;
  kv["output_dir"] = m.output_dir;
  kv["seed"] = std::to_string(m.seed);
  kv["started"] = m.started;
  std::ostringstream wall;
  wall << std::setprecision(6) << m.wall_seconds;
  kv["wall_seconds"] = wall.str();
  for (const auto& [k, v] : m.config) kv["config." + k] = v;
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write manifest '" + path + "'");
  out << format_key_values(kv);
}

RunManifest read_manifest(const std::string& path) {
  const KeyValues kv = read_key_values(path);
  RunManifest m;
  m.config_hash = get_string(kv, "config_hash", "");
  m.version = get_string(kv, "version", "");
  m.basis_path = get_string(kv, "basis_path", "");
  m.output_dir = get_string(kv, "output_dir", "");
  m.seed = static_cast<std::uint64_t>(get_int(kv, "seed", 0));
  m.started = get_string(kv, "started", "");
  m.wall_seconds = get_double(kv, "wall_seconds", 0.0);
  for (const auto& [k, v] : kv)
    if (k.rfind("config.", 0) == 0) m.config[k.substr(7)] = v;
  return m;
}

std::string library_version() { return "0.1.0"; }

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

}  // namespace nsalpha

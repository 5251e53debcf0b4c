#pragma once

#include <cstdint>
#include <map>
#include <string>

#include <Eigen/Dense>

#include "nsalpha/eigenbasis.hpp"

namespace nsalpha {

/// Basis file ("NSAB", version 1), all integers and floats little-endian:
///   magic[4] version:u8 kind:u8 N:u64 grid:u64 nodes:u64
///   eigenvalues: N x f64
///   torus:  (kx, ky, parity) as 3 x f64 per mode
///   square: psi, wx, wy as column-major nodes x N f64 blocks (nodes = (grid+1)^2)
/// Throws ConfigError on I/O failure or malformed content.
void write_basis(const std::string& path, const EigenBasis& basis);
EigenBasis read_basis(const std::string& path);

/// Checkpoint file ("NSA1", version 1): magic[4] version:u8 n:u64 nu:f64
/// alpha:f64 t:f64 then n x f64 coefficients of v = (I + alpha^2 A) u.
struct Checkpoint {
  double nu = 0.0;
  double alpha = 0.0;
  double t = 0.0;
  Eigen::VectorXd v;
};

void write_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::string& path);

/// Flat `key = value` configuration. `#` starts a comment; blank lines are
/// ignored. Duplicate keys are a ConfigError.
using KeyValues = std::map<std::string, std::string>;

KeyValues parse_key_values(const std::string& text);
KeyValues read_key_values(const std::string& path);
std::string format_key_values(const KeyValues& kv);

/// FNV-1a 64 of the canonical (key-sorted) form, as 16 hex digits. Invariant
/// under reordering of the input lines.
std::string config_hash(const KeyValues& kv);

/// Typed lookups; throw ConfigError naming the key on a malformed value.
double get_double(const KeyValues& kv, const std::string& key, double fallback);
long long get_int(const KeyValues& kv, const std::string& key, long long fallback);
bool get_bool(const KeyValues& kv, const std::string& key, bool fallback);
std::string get_string(const KeyValues& kv, const std::string& key, const std::string& fallback);

struct RunManifest {
  std::string config_hash;
  std::string version;
  std::string basis_path;
  std::string output_dir;
  std::uint64_t seed = 0;
  std::string started;  // UTC, ISO 8601
  double wall_seconds = 0.0;
  KeyValues config;
};

/// Writes the manifest as key = value lines (config keys prefixed `config.`).
void write_manifest(const std::string& path, const RunManifest& manifest);
RunManifest read_manifest(const std::string& path);

std::string library_version();
std::string utc_timestamp();

}  // namespace nsalpha

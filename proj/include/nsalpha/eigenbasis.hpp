#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace nsalpha {

enum class DomainKind : std::uint8_t { Torus = 0, NoSlipSquare = 1 };

std::string to_string(DomainKind kind);
DomainKind domain_kind_from_string(const std::string& name);

enum class Parity : std::uint8_t { Cos = 0, Sin = 1 };

/// One real Fourier mode of the mean-free 2pi-periodic torus:
///   w = (k_perp / |k|) * trig(k.x) / (sqrt(2) pi),  k_perp = (-ky, kx),
/// with trig = cos or sin. The wavevector is canonical: kx > 0, or kx == 0 and ky > 0.
struct TorusMode {
  int kx = 0;
  int ky = 0;
  Parity parity = Parity::Cos;

  int k_squared() const { return kx * kx + ky * ky; }
  friend bool operator==(const TorusMode&, const TorusMode&) = default;
};

/// Node-based representation of the no-slip square modes on [0,1]^2.
/// Node (i, j) (x = i h, y = j h) is stored at row i * (mesh + 1) + j.
struct SquareModes {
  int mesh = 0;            // intervals per side
  Eigen::MatrixXd psi;     // stream functions, nodes x N
  Eigen::MatrixXd wx, wy;  // velocities w = (d psi/dy, -d psi/dx), nodes x N

  std::size_t nodes() const { return static_cast<std::size_t>(mesh + 1) * (mesh + 1); }
  double spacing() const { return 1.0 / mesh; }
};

/// Velocity gradients and vorticity of each square mode, derived from the
/// stored nodal velocities. Not persisted; rebuilt on load.
struct SquareDerivatives {
  Eigen::MatrixXd dx_wx, dy_wx, dx_wy, dy_wy;  // nodes x N
  Eigen::MatrixXd vorticity;                   // dx_wy - dy_wx
  Eigen::VectorXd weights;                     // trapezoid quadrature weights per node
};

/// Ordered Stokes eigenpairs (lambda_j, w_j), j = 1..N, together with what is
/// needed to move between coefficient and grid representations. Immutable once
/// built; share it through std::shared_ptr<const EigenBasis>.
class EigenBasis {
 public:
  static EigenBasis torus(std::vector<TorusMode> modes, int grid_resolution);
  static EigenBasis square(Eigen::VectorXd eigenvalues, SquareModes modes);

  DomainKind kind() const noexcept { return kind_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(eigenvalues_.size()); }
  const Eigen::VectorXd& eigenvalues() const noexcept { return eigenvalues_; }
  double eigenvalue(std::size_t j) const { return eigenvalues_[static_cast<Eigen::Index>(j)]; }
  double lambda1() const { return eigenvalues_[0]; }

  /// Points per direction of the physical grid: G for the torus (periodic,
  /// G x G), the number of mesh intervals for the square ((G+1)^2 nodes).
  int grid_resolution() const noexcept { return grid_; }

  std::span<const TorusMode> torus_modes() const { return torus_modes_; }
  const SquareModes& square_modes() const { return square_modes_; }
  const SquareDerivatives& square_derivatives() const { return square_derivs_; }

  /// Content hash; fields carry it so mixing bases is detected.
  std::uint64_t id() const noexcept { return id_; }

  /// First n modes (same ordering). Torus prefixes pick the minimal alias-free grid.
  EigenBasis prefix(std::size_t n) const;

 private:
  EigenBasis() = default;
  void finalize_id();

  DomainKind kind_ = DomainKind::Torus;
  Eigen::VectorXd eigenvalues_;
  int grid_ = 0;
  std::vector<TorusMode> torus_modes_;
  SquareModes square_modes_;
  SquareDerivatives square_derivs_;
  std::uint64_t id_ = 0;
};

using BasisPtr = std::shared_ptr<const EigenBasis>;

/// Smallest grid for which every quadratic product of the given modes is
/// alias-free when projected back onto the modes (G >= 3 K + 1, K the largest
/// wavevector component), rounded up to a 2-3-5-smooth size.
int minimal_torus_grid(std::span<const TorusMode> modes);

/// First n_modes torus eigenfunctions, ordered by (|k|^2, kx, ky, parity).
/// grid_resolution == 0 selects minimal_torus_grid.
/// Throws ConfigError if n_modes == 0 or the grid cannot resolve the modes.
EigenBasis build_torus_basis(std::size_t n_modes, int grid_resolution = 0);

struct SquareSolverOptions {
  double tolerance = 1e-12;  // backward error ||K x - l M x|| / ((||K|| + l ||M||) ||x||)
  int max_restarts = 60;
  std::uint64_t seed = 20240607;
};

/// Clamped-plate finite differences for Delta^2 psi = -lambda Delta psi on the
/// unit square with psi = d psi / dn = 0, solved by shift-invert. Throws
/// ConfigError for mesh < 16 or too many modes, NumericalError on non-convergence.
EigenBasis build_square_basis(std::size_t n_modes, int mesh_resolution,
                              const SquareSolverOptions& options = {});

struct ValidationReport {
  double orthonormality_defect = 0.0;  // max |<w_i, w_j> - delta_ij|
  double divergence_residual = 0.0;    // max pointwise |div w_j| / max |w_j|
  double boundary_residual = 0.0;      // square: wall trace extrapolated from the interior
  bool eigenvalues_positive = true;
  bool eigenvalues_monotone = true;

  double orthonormality_threshold = 1e-10;
  double divergence_threshold = 1e-12;
  double boundary_threshold = 0.0;

  std::vector<std::string> failures;
  bool passed() const { return failures.empty(); }
  std::string summary() const;
};

ValidationReport validate_basis(const EigenBasis& basis);

}  // namespace nsalpha

#include "nsalpha/eigenbasis.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>
#include <tuple>

#include <Eigen/Sparse>

#include "nsalpha/errors.hpp"
#include "nsalpha/sym_eigs.hpp"

namespace nsalpha {

std::string to_string(DomainKind kind) {
  return kind == DomainKind::Torus ? "torus" : "square";
}

DomainKind domain_kind_from_string(const std::string& name) {
  if (name == "torus") return DomainKind::Torus;
  if (name == "square") return DomainKind::NoSlipSquare;
  throw ConfigError("unknown domain '" + name + "' (expected torus or square)");
}

namespace {

class Fnv1a {
 public:
  void bytes(const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h_ ^= p[i];
      h_ *= 1099511628211ULL;
    }
  }
  template <class T>
  void value(const T& v) {
    bytes(&v, sizeof(T));
  }
  void matrix(const Eigen::MatrixXd& m) {
    bytes(m.data(), sizeof(double) * static_cast<std::size_t>(m.size()));
  }
  std::uint64_t digest() const { return h_; }

 private:
  std::uint64_t h_ = 14695981039346656037ULL;
};

bool smooth_235(int n) {
  for (int f : {2, 3, 5})
    while (n % f == 0) n /= f;
  return n == 1;
}

int max_component(std::span<const TorusMode> modes) {
  int k = 0;
  for (const auto& m : modes) k = std::max({k, std::abs(m.kx), std::abs(m.ky)});
  return k;
}

// One-sided second-order derivative at the ends, central inside.
double node_derivative(const Eigen::MatrixXd& f, Eigen::Index col, int i, int j, int di, int dj,
                       int mesh, double h) {
  const int stride = mesh + 1;
  auto at = [&](int a, int b) { return f(static_cast<Eigen::Index>(a) * stride + b, col); };
  const int pos = di != 0 ? i : j;
  if (pos == 0) {
    return (-3.0 * at(i, j) + 4.0 * at(i + di, j + dj) - at(i + 2 * di, j + 2 * dj)) / (2.0 * h);
  }
  if (pos == mesh) {
    return (3.0 * at(i, j) - 4.0 * at(i - di, j - dj) + at(i - 2 * di, j - 2 * dj)) / (2.0 * h);
  }
  return (at(i + di, j + dj) - at(i - di, j - dj)) / (2.0 * h);
}

SquareDerivatives derive_square(const SquareModes& modes) {
  const int mesh = modes.mesh;
  const double h = modes.spacing();
  const auto nodes = static_cast<Eigen::Index>(modes.nodes());
  const Eigen::Index count = modes.psi.cols();
  SquareDerivatives d;
  d.dx_wx.resize(nodes, count);
  d.dy_wx.resize(nodes, count);
  d.dx_wy.resize(nodes, count);
  d.dy_wy.resize(nodes, count);
  for (Eigen::Index c = 0; c < count; ++c) {
    for (int i = 0; i <= mesh; ++i) {
      for (int j = 0; j <= mesh; ++j) {
        const Eigen::Index row = static_cast<Eigen::Index>(i) * (mesh + 1) + j;
        d.dx_wx(row, c) = node_derivative(modes.wx, c, i, j, 1, 0, mesh, h);
        d.dy_wx(row, c) = node_derivative(modes.wx, c, i, j, 0, 1, mesh, h);
        d.dx_wy(row, c) = node_derivative(modes.wy, c, i, j, 1, 0, mesh, h);
        d.dy_wy(row, c) = node_derivative(modes.wy, c, i, j, 0, 1, mesh, h);
      }
    }
  }
  d.vorticity = d.dx_wy - d.dy_wx;
  d.weights.resize(nodes);
  for (int i = 0; i <= mesh; ++i) {
    for (int j = 0; j <= mesh; ++j) {
      double w = h * h;
      if (i == 0 || i == mesh) w *= 0.5;
      if (j == 0 || j == mesh) w *= 0.5;
      d.weights[static_cast<Eigen::Index>(i) * (mesh + 1) + j] = w;
    }
  }
  return d;
}

}  // namespace

int minimal_torus_grid(std::span<const TorusMode> modes) {
  int g = 3 * max_component(modes) + 1;
  g = std::max(g, 4);
  while (g % 2 != 0 || !smooth_235(g)) ++g;
  return g;
}

EigenBasis EigenBasis::torus(std::vector<TorusMode> modes, int grid_resolution) {
  if (modes.empty()) throw ConfigError("torus basis needs at least one mode");
  for (const auto& m : modes) {
    if (!(m.kx > 0 || (m.kx == 0 && m.ky > 0))) {
      throw ConfigError("torus mode wavevector is not canonical (kx > 0 or kx == 0, ky > 0)");
    }
  }
  const int needed = 3 * max_component(modes) + 1;
  if (grid_resolution == 0) grid_resolution = minimal_torus_grid(modes);
  if (grid_resolution < needed) {
    std::ostringstream msg;
    msg << "grid resolution " << grid_resolution << " too small for " << modes.size()
        << " torus modes: alias-free products need at least " << needed << " points";
    throw ConfigError(msg.str());
  }
  EigenBasis b;
  b.kind_ = DomainKind::Torus;
  b.grid_ = grid_resolution;
  b.eigenvalues_.resize(static_cast<Eigen::Index>(modes.size()));
  for (std::size_t j = 0; j < modes.size(); ++j) {
    b.eigenvalues_[static_cast<Eigen::Index>(j)] = modes[j].k_squared();
  }
  b.torus_modes_ = std::move(modes);
  b.finalize_id();
  return b;
}

EigenBasis EigenBasis::square(Eigen::VectorXd eigenvalues, SquareModes modes) {
  const auto count = eigenvalues.size();
  if (count == 0) throw ConfigError("square basis needs at least one mode");
  if (modes.mesh < 2 || modes.psi.cols() != count || modes.wx.cols() != count ||
      modes.wy.cols() != count ||
      modes.psi.rows() != static_cast<Eigen::Index>(modes.nodes()) ||
      modes.wx.rows() != modes.psi.rows() || modes.wy.rows() != modes.psi.rows()) {
    throw ConfigError("square basis: mode arrays do not match the mesh and mode count");
  }
  EigenBasis b;
  b.kind_ = DomainKind::NoSlipSquare;
  b.grid_ = modes.mesh;
  b.eigenvalues_ = std::move(eigenvalues);
  b.square_derivs_ = derive_square(modes);
  b.square_modes_ = std::move(modes);
  b.finalize_id();
  return b;
}

void EigenBasis::finalize_id() {
  Fnv1a h;
  h.value(static_cast<std::uint8_t>(kind_));
  h.value(grid_);
  h.bytes(eigenvalues_.data(), sizeof(double) * static_cast<std::size_t>(eigenvalues_.size()));
  for (const auto& m : torus_modes_) {
    h.value(m.kx);
    h.value(m.ky);
    h.value(static_cast<std::uint8_t>(m.parity));
  }
  if (kind_ == DomainKind::NoSlipSquare) {
    h.matrix(square_modes_.psi);
    h.matrix(square_modes_.wx);
    h.matrix(square_modes_.wy);
  }
  id_ = h.digest();
}

EigenBasis EigenBasis::prefix(std::size_t n) const {
  if (n == 0 || n > size()) {
    std::ostringstream msg;
    msg << "basis prefix of " << n << " modes requested from a basis of " << size();
    throw ArgumentError(msg.str());
  }
  if (kind_ == DomainKind::Torus) {
    std::vector<TorusMode> modes(torus_modes_.begin(),
                                 torus_modes_.begin() + static_cast<std::ptrdiff_t>(n));
    return torus(std::move(modes), 0);
  }
  SquareModes sm;
  const auto cols = static_cast<Eigen::Index>(n);
  sm.mesh = square_modes_.mesh;
  sm.psi = square_modes_.psi.leftCols(cols);
  sm.wx = square_modes_.wx.leftCols(cols);
  sm.wy = square_modes_.wy.leftCols(cols);
  return square(eigenvalues_.head(cols), std::move(sm));
}

EigenBasis build_torus_basis(std::size_t n_modes, int grid_resolution) {
  if (n_modes == 0) throw ConfigError("torus basis: n_modes must be at least 1");
  if (grid_resolution < 0) throw ConfigError("torus basis: grid resolution must be nonnegative");
  // A box of half-width K holds (2K+1)^2 - 1 lattice points; every point with
  // |k|^2 at most the n-th eigenvalue lies inside once the box holds >= n points.
  const int half_width = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n_modes)))) + 1;
  std::vector<TorusMode> all;
  for (int kx = 0; kx <= half_width; ++kx) {
    for (int ky = -half_width; ky <= half_width; ++ky) {
      if (!(kx > 0 || ky > 0)) continue;
      all.push_back({kx, ky, Parity::Cos});
      all.push_back({kx, ky, Parity::Sin});
    }
  }
  std::sort(all.begin(), all.end(), [](const TorusMode& a, const TorusMode& b) {
    return std::make_tuple(a.k_squared(), a.kx, a.ky, a.parity) <
           std::make_tuple(b.k_squared(), b.kx, b.ky, b.parity);
  });
  all.resize(n_modes);
  return EigenBasis::torus(std::move(all), grid_resolution);
}

EigenBasis build_square_basis(std::size_t n_modes, int mesh, const SquareSolverOptions& options) {
  if (mesh < 16) throw ConfigError("square basis: mesh resolution must be at least 16");
  if (n_modes == 0) throw ConfigError("square basis: n_modes must be at least 1");
  const int inner = mesh - 1;
  const auto unknowns = static_cast<std::size_t>(inner) * inner;
  if (n_modes * 8 > unknowns) {
    std::ostringstream msg;
    msg << "square basis: " << n_modes << " modes is too many for mesh " << mesh << " ("
        << unknowns << " unknowns)";
    throw ConfigError(msg.str());
  }
  const double h = 1.0 / mesh;
  auto index = [inner](int i, int j) { return (i - 1) * inner + (j - 1); };

  // Clamped plate: psi = 0 on the wall, ghost psi(-1) = psi(1) for d psi / dn = 0.
  auto reflect = [mesh](int i) { return i == -1 ? 1 : (i == mesh + 1 ? mesh - 1 : i); };
  std::vector<Eigen::Triplet<double>> kt, mt;
  kt.reserve(unknowns * 13);
  mt.reserve(unknowns * 5);
  const double h4 = h * h * h * h;
  const double h2 = h * h;
  struct Tap {
    int di, dj;
    double w;
  };
  static constexpr Tap biharmonic[] = {{0, 0, 20},  {1, 0, -8},  {-1, 0, -8}, {0, 1, -8},
                                       {0, -1, -8}, {1, 1, 2},   {1, -1, 2},  {-1, 1, 2},
                                       {-1, -1, 2}, {2, 0, 1},   {-2, 0, 1},  {0, 2, 1},
                                       {0, -2, 1}};
  static constexpr Tap laplacian[] = {{0, 0, 4}, {1, 0, -1}, {-1, 0, -1}, {0, 1, -1}, {0, -1, -1}};
  for (int i = 1; i < mesh; ++i) {
    for (int j = 1; j < mesh; ++j) {
      const int row = index(i, j);
      for (const auto& t : biharmonic) {
        const int a = reflect(i + t.di);
        const int b = reflect(j + t.dj);
        if (a == 0 || a == mesh || b == 0 || b == mesh) continue;
        kt.emplace_back(row, index(a, b), t.w / h4);
      }
      for (const auto& t : laplacian) {
        const int a = i + t.di;
        const int b = j + t.dj;
        if (a == 0 || a == mesh || b == 0 || b == mesh) continue;
        mt.emplace_back(row, index(a, b), t.w / h2);
      }
    }
  }
  const auto n = static_cast<Eigen::Index>(unknowns);
  Eigen::SparseMatrix<double> K(n, n), M(n, n);
  K.setFromTriplets(kt.begin(), kt.end());
  M.setFromTriplets(mt.begin(), mt.end());

  GeneralizedEigenOptions eig_opts;
  eig_opts.tolerance = options.tolerance;
  eig_opts.max_restarts = options.max_restarts;
  eig_opts.seed = options.seed;
  auto eig = smallest_generalized_eigenpairs(K, M, static_cast<int>(n_modes), eig_opts);

  // Clean up numerically degenerate clusters (M-Gram-Schmidt within the cluster),
  // then fix signs so the largest-magnitude entry is positive.
  Eigen::MatrixXd& X = eig.vectors;
  const auto count = static_cast<Eigen::Index>(n_modes);
  for (Eigen::Index start = 0; start < count;) {
    Eigen::Index end = start + 1;
    while (end < count && std::abs(eig.values[end] - eig.values[start]) <=
                              1e-8 * std::abs(eig.values[start])) {
      ++end;
    }
    for (Eigen::Index c = start; c < end; ++c) {
      for (int pass = 0; pass < 2; ++pass) {
        for (Eigen::Index prev = start; prev < c; ++prev) {
          X.col(c) -= X.col(prev).dot(M * X.col(c)) * X.col(prev);
        }
      }
      X.col(c) /= std::sqrt(X.col(c).dot(M * X.col(c)));
    }
    start = end;
  }
  for (Eigen::Index c = 0; c < count; ++c) {
    Eigen::Index arg = 0;
    X.col(c).cwiseAbs().maxCoeff(&arg);
    if (X(arg, c) < 0) X.col(c) = -X.col(c);
  }

  SquareModes modes;
  modes.mesh = mesh;
  const auto nodes = static_cast<Eigen::Index>(modes.nodes());
  modes.psi = Eigen::MatrixXd::Zero(nodes, count);
  modes.wx = Eigen::MatrixXd::Zero(nodes, count);
  modes.wy = Eigen::MatrixXd::Zero(nodes, count);
  const int stride = mesh + 1;
  for (Eigen::Index c = 0; c < count; ++c) {
    // X^T M X = I; the discrete L2 norm of grad psi is psi^T M psi h^2.
    for (int i = 1; i < mesh; ++i)
      for (int j = 1; j < mesh; ++j) modes.psi(i * stride + j, c) = X(index(i, j), c) / h;
    auto psi = [&](int i, int j) { return modes.psi(reflect(i) * stride + reflect(j), c); };
    for (int i = 1; i < mesh; ++i) {
      for (int j = 1; j < mesh; ++j) {
        modes.wx(i * stride + j, c) = (psi(i, j + 1) - psi(i, j - 1)) / (2.0 * h);
        modes.wy(i * stride + j, c) = -(psi(i + 1, j) - psi(i - 1, j)) / (2.0 * h);
      }
    }
  }
  return EigenBasis::square(eig.values, std::move(modes));
}

std::string ValidationReport::summary() const {
  std::ostringstream out;
  out << "orthonormality_defect " << orthonormality_defect << " (threshold "
      << orthonormality_threshold << ")\n"
      << "divergence_residual " << divergence_residual << " (threshold " << divergence_threshold
      << ")\n"
      << "boundary_residual " << boundary_residual << " (threshold " << boundary_threshold
      << ")\n"
      << "eigenvalues_positive " << (eigenvalues_positive ? "yes" : "no") << "\n"
      << "eigenvalues_monotone " << (eigenvalues_monotone ? "yes" : "no") << "\n"
      << (passed() ? "PASS" : "FAIL");
  for (const auto& f : failures) out << "\n  " << f;
  return out.str();
}

}  // namespace nsalpha

#include "nsalpha/fields.hpp"

#include <cmath>
#include <sstream>

#include "grid_backend.hpp"
#include "nsalpha/errors.hpp"

namespace nsalpha {

SpectralField::SpectralField(BasisPtr basis)
    : basis_(std::move(basis)),
      coeffs_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(basis_->size()))) {}

SpectralField::SpectralField(BasisPtr basis, Eigen::VectorXd coeffs)
    : basis_(std::move(basis)), coeffs_(std::move(coeffs)) {
  if (!basis_) throw ConfigError("spectral field without a basis");
  if (static_cast<std::size_t>(coeffs_.size()) != basis_->size()) {
    std::ostringstream msg;
    msg << "spectral field has " << coeffs_.size() << " coefficients, basis has "
        << basis_->size();
    throw ConfigError(msg.str());
  }
  if (!coeffs_.allFinite()) throw ConfigError("spectral field has non-finite coefficients");
}

SpectralField SpectralField::unit(BasisPtr basis, std::size_t j) {
  SpectralField f(std::move(basis));
  if (j >= f.size()) throw ArgumentError("unit field index out of range");
  f.coeffs_[static_cast<Eigen::Index>(j)] = 1.0;
  return f;
}

SpectralField& SpectralField::operator+=(const SpectralField& other) {
  require_same_basis(*this, other);
  coeffs_ += other.coeffs_;
  return *this;
}

SpectralField& SpectralField::operator-=(const SpectralField& other) {
  require_same_basis(*this, other);
  coeffs_ -= other.coeffs_;
  return *this;
}

SpectralField& SpectralField::operator*=(double s) {
  coeffs_ *= s;
  return *this;
}

void require_same_basis(const SpectralField& a, const SpectralField& b) {
  if (!a.basis() || !b.basis() || a.basis()->id() != b.basis()->id()) {
    throw ConfigError("fields live in different eigenbases");
  }
}

GridField synthesize(const SpectralField& u) {
  auto backend = detail::make_grid_backend(u.eigenbasis());
  detail::VectorGrid g;
  backend->velocity(u.coeffs(), g);
  return GridField{u.basis(), backend->points_per_side(), std::move(g.x), std::move(g.y)};
}

SpectralField analyze(const GridField& g) {
  if (!g.basis) throw ConfigError("grid field without a basis");
  auto backend = detail::make_grid_backend(*g.basis);
  if (g.side != backend->points_per_side() || g.ux.size() != backend->points() ||
      g.uy.size() != backend->points()) {
    throw ConfigError("grid field shape does not match its basis grid");
  }
  detail::VectorGrid v{g.ux, g.uy};
  Eigen::VectorXd c;
  backend->project(v, c);
  return SpectralField(g.basis, std::move(c));
}

SpectralField project_Pn(const SpectralField& u, std::size_t n) {
  if (n > u.size()) throw ArgumentError("P_n: n exceeds the basis size");
  Eigen::VectorXd c = u.coeffs();
  c.tail(c.size() - static_cast<Eigen::Index>(n)).setZero();
  return SpectralField(u.basis(), std::move(c));
}

SpectralField project_Pn_perp(const SpectralField& u, std::size_t n) {
  if (n > u.size()) throw ArgumentError("P_n^perp: n exceeds the basis size");
  Eigen::VectorXd c = u.coeffs();
  c.head(static_cast<Eigen::Index>(n)).setZero();
  return SpectralField(u.basis(), std::move(c));
}

SpectralField apply_A_power(const SpectralField& u, double beta) {
  const Eigen::VectorXd& lambda = u.eigenbasis().eigenvalues();
  Eigen::VectorXd c = u.coeffs().cwiseProduct(lambda.array().pow(beta).matrix());
  return SpectralField(u.basis(), std::move(c));
}

namespace {
void check_alpha(double alpha) {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
    throw ArgumentError("alpha must be finite and nonnegative");
  }
}
}  // namespace

SpectralField helmholtz_filter(const SpectralField& u, double alpha) {
  check_alpha(alpha);
  const Eigen::VectorXd& lambda = u.eigenbasis().eigenvalues();
  Eigen::VectorXd c = u.coeffs().array() / (1.0 + alpha * alpha * lambda.array());
  return SpectralField(u.basis(), std::move(c));
}

SpectralField apply_helmholtz(const SpectralField& u, double alpha) {
  check_alpha(alpha);
  const Eigen::VectorXd& lambda = u.eigenbasis().eigenvalues();
  Eigen::VectorXd c = u.coeffs().array() * (1.0 + alpha * alpha * lambda.array());
  return SpectralField(u.basis(), std::move(c));
}

double inner(const SpectralField& u, const SpectralField& v) {
  require_same_basis(u, v);
  return u.coeffs().dot(v.coeffs());
}

double norm_beta(const SpectralField& u, double beta) {
  const Eigen::VectorXd& lambda = u.eigenbasis().eigenvalues();
  return std::sqrt((lambda.array().pow(2.0 * beta) * u.coeffs().array().square()).sum());
}

}  // namespace nsalpha

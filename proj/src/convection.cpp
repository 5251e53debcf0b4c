#include "nsalpha/convection.hpp"

#include <algorithm>
#include <cmath>

#include "grid_backend.hpp"
#include "nsalpha/errors.hpp"

namespace nsalpha {

ConvectionOperator::ConvectionOperator(BasisPtr basis)
    : basis_(std::move(basis)), backend_(detail::make_grid_backend(*basis_)) {}

ConvectionOperator::~ConvectionOperator() = default;
ConvectionOperator::ConvectionOperator(ConvectionOperator&&) noexcept = default;
ConvectionOperator& ConvectionOperator::operator=(ConvectionOperator&&) noexcept = default;

void ConvectionOperator::check(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const {
  const auto n = static_cast<Eigen::Index>(basis_->size());
  if (u.size() != n || v.size() != n) {
    throw ConfigError("convection operator: coefficient vectors do not match the basis size");
  }
}

Eigen::VectorXd ConvectionOperator::convective(const Eigen::VectorXd& u,
                                               const Eigen::VectorXd& v) {
  check(u, v);
  detail::VectorGrid uu, prod;
  detail::TensorGrid dv;
  backend_->velocity(u, uu);
  backend_->gradient(v, dv);
  prod.resize(backend_->points());
  for (std::size_t i = 0; i < prod.x.size(); ++i) {
    prod.x[i] = uu.x[i] * dv.xx[i] + uu.y[i] * dv.xy[i];
    prod.y[i] = uu.x[i] * dv.yx[i] + uu.y[i] * dv.yy[i];
  }
  Eigen::VectorXd out;
  backend_->project(prod, out);
  return out;
}

Eigen::VectorXd ConvectionOperator::rotational(const Eigen::VectorXd& u,
                                               const Eigen::VectorXd& v) {
  check(u, v);
  detail::VectorGrid uu, prod;
  std::vector<double> omega;
  backend_->velocity(u, uu);
  backend_->vorticity(v, omega);
  prod.resize(backend_->points());
  // -(u x omega e_z) = (-u_y omega, u_x omega)
  for (std::size_t i = 0; i < prod.x.size(); ++i) {
    prod.x[i] = -uu.y[i] * omega[i];
    prod.y[i] = uu.x[i] * omega[i];
  }
  Eigen::VectorXd out;
  backend_->project(prod, out);
  return out;
}

Eigen::VectorXd ConvectionOperator::transposed(const Eigen::VectorXd& u,
                                               const Eigen::VectorXd& v) {
  check(u, v);
  detail::VectorGrid vv, prod;
  detail::TensorGrid du;
  backend_->gradient(u, du);
  backend_->velocity(v, vv);
  prod.resize(backend_->points());
  // ((grad u)^T v)_i = sum_j d_i u_j v_j
  for (std::size_t i = 0; i < prod.x.size(); ++i) {
    prod.x[i] = du.xx[i] * vv.x[i] + du.yx[i] * vv.y[i];
    prod.y[i] = du.xy[i] * vv.x[i] + du.yy[i] * vv.y[i];
  }
  Eigen::VectorXd out;
  backend_->project(prod, out);
  return out;
}

double ConvectionOperator::max_speed(const Eigen::VectorXd& u) {
  detail::VectorGrid uu;
  backend_->velocity(u, uu);
  double m = 0.0;
  for (std::size_t i = 0; i < uu.x.size(); ++i) m = std::max(m, std::hypot(uu.x[i], uu.y[i]));
  return m;
}

double ConvectionOperator::grid_spacing() const { return backend_->spacing(); }

namespace {
template <class Method>
SpectralField apply(const SpectralField& u, const SpectralField& v, Method method) {
  require_same_basis(u, v);
  ConvectionOperator op(u.basis());
  return SpectralField(u.basis(), (op.*method)(u.coeffs(), v.coeffs()));
}
}  // namespace

SpectralField nonlinear_B(const SpectralField& u, const SpectralField& v) {
  return apply(u, v, &ConvectionOperator::convective);
}

SpectralField nonlinear_Btilde(const SpectralField& u, const SpectralField& v) {
  return apply(u, v, &ConvectionOperator::rotational);
}

SpectralField nonlinear_Bstar(const SpectralField& u, const SpectralField& v) {
  return apply(u, v, &ConvectionOperator::transposed);
}

}  // namespace nsalpha

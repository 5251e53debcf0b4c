#include "convolution_oracle.hpp"

#include <cmath>
#include <complex>
#include <map>
#include <numbers>
#include <utility>

#include "nsalpha/errors.hpp"

namespace nsalpha::oracle {

namespace {

using cplx = std::complex<double>;
using Key = std::pair<int, int>;

struct Amp {
  cplx x, y;
};

using Spectrum = std::map<Key, Amp>;

// u(x) = sum_k uhat(k) e^{i k.x}
Spectrum fourier(const EigenBasis& basis, const Eigen::VectorXd& c) {
  Spectrum s;
  const double root2pi = std::numbers::sqrt2 * std::numbers::pi;
  const auto modes = basis.torus_modes();
  for (std::size_t j = 0; j < modes.size(); ++j) {
    const double cj = c[static_cast<Eigen::Index>(j)];
    if (cj == 0.0) continue;
    const auto& m = modes[j];
    const double knorm = std::sqrt(static_cast<double>(m.kx * m.kx + m.ky * m.ky));
    const double ex = -m.ky / knorm, ey = m.kx / knorm;
    // cos = (e+ + e-)/2, sin = (e+ - e-)/(2i)
    const cplx plus = m.parity == Parity::Cos ? cplx(0.5, 0) : cplx(0, -0.5);
    const cplx minus = m.parity == Parity::Cos ? cplx(0.5, 0) : cplx(0, 0.5);
    auto& a = s[{m.kx, m.ky}];
    a.x += cj * ex * plus / root2pi;
    a.y += cj * ey * plus / root2pi;
    auto& b = s[{-m.kx, -m.ky}];
    b.x += cj * ex * minus / root2pi;
    b.y += cj * ey * minus / root2pi;
  }
  return s;
}

}  // namespace

Eigen::VectorXd convolution(const EigenBasis& basis, const Eigen::VectorXd& u,
                            const Eigen::VectorXd& v, Form form) {
  if (basis.kind() != DomainKind::Torus) {
    throw ConfigError("convolution oracle supports the torus basis only");
  }
  const Spectrum uh = fourier(basis, u);
  const Spectrum vh = fourier(basis, v);
  const cplx I(0.0, 1.0);
  Spectrum product;
  for (const auto& [p, a] : uh) {
    for (const auto& [q, b] : vh) {
      const Key k{p.first + q.first, p.second + q.second};
      Amp term;
      switch (form) {
        case Form::Convective: {
          // (u . grad) v
          const cplx udotq = a.x * I * double(q.first) + a.y * I * double(q.second);
          term = {udotq * b.x, udotq * b.y};
          break;
        }
        case Form::Rotational: {
          // -(u x omega e_z) = (-u_y omega, u_x omega), omega = dx v_y - dy v_x
          const cplx omega = I * double(q.first) * b.y - I * double(q.second) * b.x;
          term = {-a.y * omega, a.x * omega};
          break;
        }
        case Form::Transposed: {
          // sum_j d_i u_j v_j
          const cplx dot = a.x * b.x + a.y * b.y;
          term = {I * double(p.first) * dot, I * double(p.second) * dot};
          break;
        }
      }
      auto& acc = product[k];
      acc.x += term.x;
      acc.y += term.y;
    }
  }

  const double area = 4.0 * std::numbers::pi * std::numbers::pi;
  const double root2pi = std::numbers::sqrt2 * std::numbers::pi;
  const auto modes = basis.torus_modes();
  Eigen::VectorXd out(static_cast<Eigen::Index>(modes.size()));
  auto lookup = [&](int kx, int ky) {
    auto it = product.find({kx, ky});
    return it == product.end() ? Amp{} : it->second;
  };
  for (std::size_t j = 0; j < modes.size(); ++j) {
    const auto& m = modes[j];
    const double knorm = std::sqrt(static_cast<double>(m.kx * m.kx + m.ky * m.ky));
    const double ex = -m.ky / knorm, ey = m.kx / knorm;
    const Amp gp = lookup(m.kx, m.ky);
    const Amp gm = lookup(-m.kx, -m.ky);
    // int g cos(k.x) = area (g(-k) + g(k)) / 2 ; int g sin(k.x) = area (g(-k) - g(k)) / (2i)
    cplx ix, iy;
    if (m.parity == Parity::Cos) {
      ix = area * (gm.x + gp.x) / 2.0;
      iy = area * (gm.y + gp.y) / 2.0;
    } else {
      ix = area * (gm.x - gp.x) / (2.0 * I);
      iy = area * (gm.y - gp.y) / (2.0 * I);
    }
    out[static_cast<Eigen::Index>(j)] = (ex * ix + ey * iy).real() / root2pi;
  }
  return out;
}

SpectralField convolution_oracle_B(const SpectralField& u, const SpectralField& v) {
  require_same_basis(u, v);
  return SpectralField(u.basis(),
                       convolution(u.eigenbasis(), u.coeffs(), v.coeffs(), Form::Convective));
}

}  // namespace nsalpha::oracle

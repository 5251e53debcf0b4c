#include <cmath>
#include <random>

#include "convolution_oracle.hpp"
#include "doctest.h"
#include "nsalpha/convection.hpp"
#include "nsalpha/errors.hpp"
#include "random_fields.hpp"

using namespace nsalpha;
using nsalpha::testing::random_field;

namespace {
double max_abs(const SpectralField& f) { return f.coeffs().cwiseAbs().maxCoeff(); }
}  // namespace

TEST_CASE("Taylor-Green is a steady Euler solution: B(u,u) = B~(u,u) = 0") {
  const auto b = testing::torus(16);
  const auto tg = testing::taylor_green(b);
  CHECK(tg.coeffs().norm() > 1.0);
  CHECK(max_abs(nonlinear_B(tg, tg)) <= 1e-13);
  CHECK(max_abs(nonlinear_Btilde(tg, tg)) <= 1e-13);
  CHECK(max_abs(oracle::convolution_oracle_B(tg, tg)) <= 1e-13);
}

TEST_CASE("oracle: zero field and non-torus basis") {
  const auto b = testing::torus(8);
  std::mt19937_64 rng(7);
  const auto u = random_field(b, rng);
  CHECK(max_abs(oracle::convolution_oracle_B(SpectralField(b), u)) == 0.0);
  const auto sq = std::make_shared<const EigenBasis>(build_square_basis(2, 16));
  CHECK_THROWS_AS(oracle::convolution_oracle_B(SpectralField(sq), SpectralField(sq)), ConfigError);
}

TEST_CASE("pseudospectral operators match the convolution oracle") {
  for (std::size_t n : {8u, 16u}) {
    const auto b = testing::torus(n);
    std::mt19937_64 rng(8 + n);
    ConvectionOperator op(b);
    for (int trial = 0; trial < 5; ++trial) {
      const auto u = random_field(b, rng, 0.0);
      const auto v = random_field(b, rng, 0.0);
      using oracle::Form;
      const auto& eb = *b;
      CHECK((op.convective(u.coeffs(), v.coeffs()) - oracle::convolution(eb, u.coeffs(), v.coeffs(), Form::Convective)).cwiseAbs().maxCoeff() <= 1e-10);
      CHECK((op.rotational(u.coeffs(), v.coeffs()) - oracle::convolution(eb, u.coeffs(), v.coeffs(), Form::Rotational)).cwiseAbs().maxCoeff() <= 1e-10);
      CHECK((op.transposed(u.coeffs(), v.coeffs()) - oracle::convolution(eb, u.coeffs(), v.coeffs(), Form::Transposed)).cwiseAbs().maxCoeff() <= 1e-10);
    }
  }
}

TEST_CASE("exact identities on the torus") {
  const auto b = testing::torus(8);
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    const auto u = random_field(b, rng, 0.0);
    const auto v = random_field(b, rng, 0.0);
    const auto w = random_field(b, rng, 0.0);
    const auto Buv = nonlinear_B(u, v);
    const double scale = u.coeffs().norm() * v.coeffs().norm() * w.coeffs().norm();
    CHECK(std::abs(inner(Buv, w) + inner(nonlinear_B(u, w), v)) <= 1e-11 * scale);
    CHECK(std::abs(inner(Buv, v)) <= 1e-11 * scale);
    CHECK(std::abs(inner(nonlinear_Btilde(u, v), u)) <= 1e-11 * scale);
    const auto diff = Buv + nonlinear_Bstar(u, v) - nonlinear_Btilde(u, v);
    CHECK(max_abs(diff) <= 1e-11 * u.coeffs().norm() * v.coeffs().norm());
    // Transposition identity, sign-corrected: (B*(u,v), w) = -(B(w,v), u).
    CHECK(std::abs(inner(nonlinear_Bstar(u, v), w) + inner(nonlinear_B(w, v), u)) <= 1e-11 * scale);
    CHECK(max_abs(nonlinear_Bstar(u, u)) <= 1e-12 * u.coeffs().squaredNorm());
  }
}

TEST_CASE("square-domain identities hold to quadrature accuracy") {
  const auto b = std::make_shared<const EigenBasis>(build_square_basis(8, 48));
  std::mt19937_64 rng(10);
  const auto u = random_field(b, rng, 0.0);
  const auto v = random_field(b, rng, 0.0);
  const auto w = random_field(b, rng, 0.0);
  const double scale = u.coeffs().norm() * v.coeffs().norm() * w.coeffs().norm() *
                       std::sqrt(b->eigenvalues().maxCoeff());
  const double skew = std::abs(inner(nonlinear_B(u, v), w) + inner(nonlinear_B(u, w), v)) / scale;
  const double rot = std::abs(inner(nonlinear_Btilde(u, v), u)) / scale;
  const double sum = max_abs(nonlinear_B(u, v) + nonlinear_Bstar(u, v) - nonlinear_Btilde(u, v)) / scale;
  MESSAGE("square relative defects: skew " << skew << " rot " << rot << " sum " << sum);
  CHECK(skew <= 1e-2);
  CHECK(rot <= 1e-12);
  CHECK(sum <= 1e-2);
}

TEST_CASE("mismatched inputs are rejected") {
  const auto b = testing::torus(8);
  ConvectionOperator op(b);
  CHECK_THROWS_AS(op.convective(Eigen::VectorXd::Zero(8), Eigen::VectorXd::Zero(4)), ConfigError);
  CHECK_THROWS_AS(nonlinear_B(SpectralField(b), SpectralField(testing::torus(16))), ConfigError);
}

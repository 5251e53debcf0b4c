#include <cmath>
#include <random>

#include "doctest.h"
#include "nsalpha/errors.hpp"
#include "nsalpha/fields.hpp"
#include "random_fields.hpp"

using namespace nsalpha;
using nsalpha::testing::random_field;

TEST_CASE("synthesize/analyze round trip on the torus") {
  const auto b = testing::torus(32);
  const auto e1 = SpectralField::unit(b, 0);
  CHECK((analyze(synthesize(e1)).coeffs() - e1.coeffs()).cwiseAbs().maxCoeff() <= 1e-14);

  std::mt19937_64 rng(1);
  const auto u = random_field(b, rng, 0.0);
  CHECK((analyze(synthesize(u)).coeffs() - u.coeffs()).cwiseAbs().maxCoeff() <= 1e-12);

  const auto g3 = synthesize(SpectralField::unit(b, 2));
  const auto c3 = analyze(g3).coeffs();
  CHECK((c3 - Eigen::VectorXd::Unit(32, 2)).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("analyze applies the Leray projection") {
  const auto b = testing::torus(16);
  // a pure gradient field grad(cos x cos y) projects to zero
  const auto g = testing::sample_torus(b, [](double x, double y) {
    return std::pair{-std::sin(x) * std::cos(y), -std::cos(x) * std::sin(y)};
  });
  CHECK(analyze(g).coeffs().cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("grid field mismatch is a configuration error") {
  const auto b = testing::torus(8);
  auto g = synthesize(SpectralField::unit(b, 0));
  g.ux.pop_back();
  CHECK_THROWS_AS(analyze(g), ConfigError);
  CHECK_THROWS_AS(SpectralField(b, Eigen::VectorXd::Zero(3)), ConfigError);
  Eigen::VectorXd bad = Eigen::VectorXd::Zero(8);
  bad[1] = std::nan("");
  CHECK_THROWS_AS(SpectralField(b, bad), ConfigError);
  CHECK_THROWS_AS(inner(SpectralField(b), SpectralField(testing::torus(16))), ConfigError);
}

TEST_CASE("square synthesize/analyze round trip") {
  const auto b = std::make_shared<const EigenBasis>(build_square_basis(6, 32));
  std::mt19937_64 rng(2);
  const auto u = random_field(b, rng, 0.0);
  const double err = (analyze(synthesize(u)).coeffs() - u.coeffs()).cwiseAbs().maxCoeff();
  MESSAGE("square round trip error " << err);
  CHECK(err <= 0.05);
}

TEST_CASE("projections P_n and P_n^perp") {
  const auto b = testing::torus(32);
  std::mt19937_64 rng(3);
  const auto u = random_field(b, rng);
  CHECK(project_Pn(u, 32).coeffs() == u.coeffs());
  CHECK((project_Pn(u, 10) + project_Pn_perp(u, 10)).coeffs() == u.coeffs());
  CHECK(project_Pn(project_Pn_perp(u, 10), 10).coeffs().isZero(0.0));
  CHECK_THROWS_AS(project_Pn(u, 33), ArgumentError);
  CHECK_THROWS_AS(project_Pn_perp(u, 33), ArgumentError);

  for (std::size_t n : {1u, 5u, 12u, 31u}) {
    const auto q = project_Pn_perp(u, n);
    const double lam = b->eigenvalue(n);
    const double l2 = norm_beta(q, 0), h1 = norm_beta(q, 0.5), h2 = norm_beta(q, 1.0);
    CHECK(l2 * l2 <= h1 * h1 / lam * (1 + 1e-14));                                // L2 by H1
    CHECK(h1 * h1 <= h2 * h2 / lam * (1 + 1e-14));                                // H1 by H2
    CHECK(norm_beta(project_Pn(u, n), 0.5) <= norm_beta(u, 0.5) * (1 + 1e-14));  // H1 stability
    CHECK(norm_beta(project_Pn(u, n), 1.0) <= norm_beta(u, 1.0) * (1 + 1e-14));  // H2 stability
    CHECK(norm_beta(project_Pn(u, n), 0) <= norm_beta(u, 0) * (1 + 1e-14));      // L2 stability
  }
}

TEST_CASE("fractional powers and Poincare chain") {
  const auto b = testing::torus(32);
  std::mt19937_64 rng(4);
  const auto u = random_field(b, rng);
  CHECK(apply_A_power(u, 0).coeffs() == u.coeffs());
  const auto e = SpectralField::unit(b, 9);
  CHECK(apply_A_power(e, 1)[9] == b->eigenvalue(9));
  CHECK(apply_A_power(apply_A_power(u, 1.5), -1.5).coeffs().isApprox(u.coeffs(), 1e-14));
  const double l1 = b->lambda1();
  CHECK(norm_beta(u, 0) <= std::pow(l1, -0.5) * norm_beta(u, 0.5) * (1 + 1e-14));
  CHECK(std::pow(l1, -0.5) * norm_beta(u, 0.5) <= norm_beta(u, 1) / l1 * (1 + 1e-14));
  for (std::size_t j = 0; j < 32; ++j) {
    const auto w = SpectralField::unit(b, j);
    const double lam = b->eigenvalue(j);
    CHECK(std::pow(lam, -0.5) * norm_beta(w, 0.5) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(norm_beta(w, 1) / lam == doctest::Approx(1.0).epsilon(1e-15));
  }
}

TEST_CASE("Helmholtz filter and its inverse") {
  const auto b = testing::torus(32);
  std::mt19937_64 rng(5);
  const auto u = random_field(b, rng);

  const std::size_t j4 = 8;  // first lambda = 4 mode
  REQUIRE(b->eigenvalue(j4) == 4.0);
  CHECK(helmholtz_filter(SpectralField::unit(b, j4), 1.0)[j4] == doctest::Approx(0.2));
  const std::size_t j2 = 4;
  REQUIRE(b->eigenvalue(j2) == 2.0);
  CHECK(apply_helmholtz(SpectralField::unit(b, j2), 0.5)[j2] == 1.5);

  CHECK(helmholtz_filter(u, 0).coeffs() == u.coeffs());
  CHECK(apply_helmholtz(u, 0).coeffs() == u.coeffs());
  CHECK_THROWS_AS(helmholtz_filter(u, -0.1), ArgumentError);
  CHECK_THROWS_AS(apply_helmholtz(u, -0.1), ArgumentError);

  for (double alpha : {0.05, 0.3, 1.0, 4.0}) {
    const auto ju = helmholtz_filter(u, alpha);
    CHECK((helmholtz_filter(apply_helmholtz(u, alpha), alpha) - u).coeffs().cwiseAbs().maxCoeff() <= 1e-14);
    CHECK((apply_helmholtz(ju, alpha) - u).coeffs().cwiseAbs().maxCoeff() <= 1e-14);
    // I - J = alpha^2 A J
    const auto lhs = u - ju;
    const auto rhs = alpha * alpha * apply_A_power(ju, 1);
    CHECK((lhs - rhs).coeffs().cwiseAbs().maxCoeff() <= 1e-14);
    const double nu = norm_beta(u, 0);
    CHECK(norm_beta(ju, 0) <= nu);
    CHECK(alpha * norm_beta(ju, 0.5) <= nu * (1 + 1e-15));
    CHECK(alpha * alpha * norm_beta(ju, 1) <= nu * (1 + 1e-15));
  }
}

TEST_CASE("inner products and norms") {
  const auto b = testing::torus(16);
  for (std::size_t i = 0; i < 16; ++i)
    for (std::size_t j = 0; j < 16; ++j)
      CHECK(inner(SpectralField::unit(b, i), SpectralField::unit(b, j)) == (i == j ? 1.0 : 0.0));
  const auto e = SpectralField::unit(b, 7);
  CHECK(norm_beta(e, 0.5) == doctest::Approx(std::sqrt(b->eigenvalue(7))));
  std::mt19937_64 rng(6);
  const auto u = random_field(b, rng);
  CHECK(norm_beta(u, 0) == doctest::Approx(u.coeffs().norm()).epsilon(1e-15));
}

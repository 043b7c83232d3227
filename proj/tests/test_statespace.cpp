#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "xferlab/statespace.hpp"
#include "xferlab/rng.hpp"

using namespace xferlab;
using Catch::Approx;

TEST_CASE("Angle arithmetic is exact", "[statespace]") {
  const Angle a(3, 8);
  CHECK(a.doubled() == Angle(3, 4));
  for (const auto& u : a.square_roots()) CHECK(u.doubled() == a);
  CHECK(Angle::parse("5/10") == Angle(1, 2));
  CHECK(Angle::parse("-1/3") == Angle(2, 3));
  CHECK((Angle(1, 3) + Angle(1, 6)) == Angle(1, 2));
  CHECK((Angle(1, 3) + -Angle(1, 3)) == Angle(0, 1));
  CHECK_THROWS_AS(Angle::parse("1/x"), std::invalid_argument);
}

TEST_CASE("Angle characters reduce before evaluating", "[statespace]") {
  const Angle a(1, 3);
  const cplx e = a.character(1);
  CHECK(e.real() == Approx(-0.5));
  CHECK(e.imag() == Approx(std::sqrt(3.0) / 2));
  CHECK(std::abs(a.character(3) - cplx(1.0, 0.0)) < 1e-15);
  CHECK(std::abs(a.character(-2) - a.character(1)) < 1e-15);
}

TEST_CASE("integrate", "[statespace]") {
  CHECK(integrate(FiniteMeasure::uniform(2), Vec::Unit(2, 0)) == 0.5);
  CHECK(integrate(HaarMeasure{}, TrigPoly::constant(1.0)) == cplx(1.0));
  CHECK(integrate(HaarMeasure{}, TrigPoly::character(1)) == cplx(0.0));
  CHECK_THROWS_AS(integrate(FiniteMeasure::uniform(2), Vec::Ones(3)), carrier_mismatch);
}

TEST_CASE("integrate is linear and monotone", "[statespace]") {
  const FiniteMeasure mu(Vec((Vec(3) << 0.2, 0.3, 0.5).finished()));
  for (std::uint64_t i = 0; i < 50; ++i) {
    auto g = make_stream(11, i);
    Vec a(3), b(3);
    for (int k = 0; k < 3; ++k) {
      a(k) = uniform01(g);
      b(k) = uniform01(g) - 0.5;
    }
    const double s = 3.0 * uniform01(g) - 1.5;
    CHECK(std::abs(integrate(mu, a + s * b) - (integrate(mu, a) + s * integrate(mu, b))) < 1e-14);
    CHECK(integrate(mu, a) >= 0.0);
  }
}

TEST_CASE("FiniteMeasure validates mass", "[statespace]") {
  CHECK_THROWS(FiniteMeasure(Vec::Constant(2, 0.4)));
  CHECK_THROWS(FiniteMeasure((Vec(2) << 1.5, -0.5).finished()));
  CHECK_NOTHROW(FiniteMeasure((Vec(2) << 0.25, 0.75).finished()));
}

TEST_CASE("FiniteSpace endomorphisms must be onto", "[statespace]") {
  CHECK_THROWS_AS(FiniteSpace::with_size(3, std::vector<std::size_t>{0, 0, 1}), std::invalid_argument);
  const auto s = FiniteSpace::with_size(3, std::vector<std::size_t>{2, 0, 1});
  for (std::size_t x = 0; x < 3; ++x) {
    REQUIRE(s.fiber(x).size() == 1);
    CHECK(s.r(s.fiber(x)[0]) == x);
  }
  CHECK_THROWS_AS(FiniteSpace::with_size(2).r(0), missing_endomorphism);
}

TEST_CASE("strong invariance", "[statespace]") {
  CHECK(strong_invariance_check(HaarMeasure{}, CircleSpace{}) == 0.0);
  const auto swap = FiniteSpace::with_size(2, std::vector<std::size_t>{1, 0});
  CHECK(strong_invariance_check(FiniteMeasure::uniform(2), swap) == 0.0);
  // fiber average of chi_0 is chi_1 under the swap; a point mass at 0 sees 1 vs 0.
  CHECK(strong_invariance_check(FiniteMeasure::point_mass(2, 0), swap) == 1.0);
  CHECK_THROWS_AS(strong_invariance_check(FiniteMeasure::uniform(2), FiniteSpace::with_size(2)), missing_endomorphism);
}

TEST_CASE("compose_with_endo", "[statespace]") {
  CHECK(coeff_distance(compose_with_endo(TrigPoly::character(1)), TrigPoly::character(2)) == 0.0);
  CHECK(coeff_distance(compose_with_endo(TrigPoly::constant(1.0)), TrigPoly::constant(1.0)) == 0.0);
  const auto swap = FiniteSpace::with_size(2, std::vector<std::size_t>{1, 0});
  // chi_0 o r is the indicator of r^{-1}(0) = {1}.
  CHECK(compose_with_endo(swap, Vec::Unit(2, 0)) == Vec::Unit(2, 1));
  CHECK_THROWS_AS(compose_with_endo(TrigPoly::character(33)), degree_overflow);
}

TEST_CASE("compose_with_endo is multiplicative", "[statespace]") {
  for (std::uint64_t i = 0; i < 20; ++i) {
    auto g = make_stream(5, i);
    TrigPoly::Coeffs ca, cb;
    for (int n = -4; n <= 4; ++n) {
      ca[n] = cplx(uniform01(g) - 0.5, uniform01(g) - 0.5);
      cb[n] = cplx(uniform01(g) - 0.5, uniform01(g) - 0.5);
    }
    const TrigPoly a(64, ca), b(64, cb);
    CHECK(coeff_distance(compose_with_endo(a * b), compose_with_endo(a) * compose_with_endo(b)) <= 1e-12);
  }
}

TEST_CASE("TrigPoly products respect the truncation", "[statespace]") {
  const TrigPoly a = TrigPoly::character(40), b = TrigPoly::character(30);
  CHECK_THROWS_AS(a * b, degree_overflow);
  CHECK_THROWS_AS(TrigPoly::character(65), degree_overflow);
  CHECK_THROWS_AS(TrigPoly::character(1, 8) + TrigPoly::character(1, 16), carrier_mismatch);
}

TEST_CASE("real observables have conjugate-symmetric coefficients", "[statespace]") {
  const TrigPoly c = TrigPoly(64, {{1, cplx(0.5, 0.25)}, {-1, cplx(0.5, -0.25)}});
  CHECK(c.is_real());
  for (int j = 0; j < 16; ++j) CHECK(std::abs(c(Angle(j, 16)).imag()) < 1e-15);
  CHECK_FALSE(TrigPoly::character(1).is_real());
}

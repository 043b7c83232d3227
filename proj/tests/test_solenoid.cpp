#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "xferlab/solenoid.hpp"

using namespace xferlab;
using Catch::Approx;

namespace {

Mat two_state() {
  Mat k(2, 2);
  k << 0.75, 0.25, 0.5, 0.5;
  return k;
}

TrigPoly haar_filter() {
  return TrigPoly(64, {{0, std::numbers::sqrt2 / 2}, {1, std::numbers::sqrt2 / 2}});
}

// Onto maps of a finite set are bijections; a 4-cycle.
FiniteSpace cycle() { return FiniteSpace::with_size(4, std::vector<std::size_t>{1, 2, 3, 0}); }

std::vector<Vec> random_word(SplitMix64& g, std::size_t states, std::size_t depth) {
  std::vector<Vec> w;
  for (std::size_t i = 0; i < depth; ++i) {
    Vec v(static_cast<Eigen::Index>(states));
    for (Eigen::Index j = 0; j < v.size(); ++j) v(j) = 2.0 * uniform01(g) - 1.0;
    w.push_back(v);
  }
  return w;
}

TrigPoly random_poly(SplitMix64& g, int d) {
  TrigPoly::Coeffs c;
  for (int n = -d; n <= d; ++n) c[n] = cplx(uniform01(g) - 0.5, uniform01(g) - 0.5);
  return TrigPoly(64, c);
}

}  // namespace

TEST_CASE("solenoid words", "[solenoid]") {
  const CircleSolenoidWord w({Angle(1, 3), Angle(2, 3), Angle(1, 3)}, CircleDoubling{});
  CHECK(w.rhat().shift() == w);
  CHECK(w.shift().rhat() == w);
  CHECK(w.rhat()[0] == Angle(2, 3));
  CHECK(w.rhat()[1] == Angle(1, 3));
  const auto lifted = w.rhat();
  const auto mapped = w.mapped();
  for (std::size_t i = 0; i < w.depth(); ++i) CHECK(lifted[i] == mapped[i]);
  CHECK_THROWS_AS(CircleSolenoidWord({Angle(1, 3)}, CircleDoubling{}).shift(), length_underflow);
  CHECK_THROWS_AS(CircleSolenoidWord({Angle(1, 3), Angle(1, 3)}, CircleDoubling{}), std::invalid_argument);
  CHECK_THROWS_AS(CircleSolenoidWord({}, CircleDoubling{}), length_underflow);

  const auto space = cycle();
  const FiniteSolenoidWord fw({1, 0}, endo_of(space));
  CHECK(fw.rhat().entries() == std::vector<std::size_t>{2, 1, 0});
  CHECK_THROWS_AS(FiniteSolenoidWord({1, 2}, endo_of(space)), std::invalid_argument);

  for (std::uint64_t i = 0; i < 20; ++i) {
    auto g = make_stream(6, i);
    const auto rw = random_solenoid_word(g, 1 + i % 8, 15);
    CHECK(rw.rhat().shift() == rw);
  }
}

TEST_CASE("support mass", "[solenoid]") {
  const auto c = CircleRuelle::from_filter(haar_filter());
  for (std::size_t n = 1; n <= 6; ++n) {
    for (const Angle& x : {Angle(0, 1), Angle(1, 3), Angle(3, 8), Angle(2, 5)}) CHECK(support_mass(c, x, n) == 1.0);
  }
  const auto space = cycle();
  const auto fr = MatrixOperator::ruelle(space);
  for (std::size_t n = 1; n <= 6; ++n) CHECK(support_mass(fr, space, 3, n) == 1.0);

  const auto perm = FiniteSpace::with_size(3, std::vector<std::size_t>{1, 2, 0});
  CHECK(support_mass(MatrixOperator::ruelle(perm), perm, 0, 5) == 1.0);

  // Identity endo: only paths that stay at 0 are compatible, mass 0.75^(n-1).
  const auto id = FiniteSpace::with_size(2, std::vector<std::size_t>{0, 1});
  const MatrixOperator k(two_state());
  CHECK(support_mass(k, id, 0, 2) == 0.75);
  double prev = 1.0;
  for (std::size_t n = 1; n <= 8; ++n) {
    const double m = support_mass(k, id, 0, n);
    CHECK(m == Approx(std::pow(0.75, static_cast<double>(n - 1))));
    CHECK(m <= prev);
    prev = m;
  }
}

TEST_CASE("sampled Ruelle paths are solenoid words", "[solenoid]") {
  const auto c = CircleRuelle::from_filter(haar_filter());
  const auto ens = sample_paths(c, Angle(1, 7), 11, 2000, 99);
  const auto count = compatibility_violations(ens, CircleDoubling{});
  CHECK(count.transitions == 20000);
  CHECK(count.violations == 0);

  const auto id = FiniteSpace::with_size(2, std::vector<std::size_t>{0, 1});
  const auto bad = compatibility_violations(sample_paths(MatrixOperator(two_state()), std::size_t{0}, 3, 1000, 1),
                                            endo_of(id));
  CHECK(bad.violations > 0);
}

TEST_CASE("shift invariance holds iff mu is stationary", "[solenoid]") {
  const MatrixOperator k(two_state());
  const auto battery = designated_battery(2);
  CHECK(shift_invariance_residual(FiniteMeasure((Vec(2) << 2.0 / 3.0, 1.0 / 3.0).finished()), k, battery) <= 1e-12);
  CHECK(shift_invariance_residual(FiniteMeasure((Vec(2) << 0.9, 0.1).finished()), k, battery) ==
        Approx(0.175).margin(1e-14));
  CHECK(shift_invariance_residual(FiniteMeasure((Vec(2) << 0.9, 0.1).finished()), k,
                                  {v1(constant_observable(2))}) == 0.0);

  std::vector<CylinderFunctional<Vec>> longer;
  for (std::uint64_t i = 0; i < 20; ++i) {
    auto g = make_stream(2, i);
    longer.push_back(make_word(random_word(g, 2, 1 + i % 5)));
  }
  CHECK(shift_invariance_residual(FiniteMeasure((Vec(2) << 2.0 / 3.0, 1.0 / 3.0).finished()), k, longer) <= 1e-12);
}

TEST_CASE("finite covariance relations", "[solenoid]") {
  const auto space = cycle();
  const auto r = MatrixOperator::ruelle(space);
  const auto inv = invariant_measure(r);
  REQUIRE(inv.unique());
  const auto rep = covariance_check(r, space, inv.measure, 3);
  CHECK(rep.v1_covariance <= 1e-12);
  CHECK(rep.multiplication_covariance <= 1e-12);
  CHECK(rep.norm_preservation <= 1e-12);

  // A non-stationary base measure breaks the isometry.
  CHECK(covariance_check(r, space, FiniteMeasure::point_mass(4, 0), 2).norm_preservation > 1e-3);
}

TEST_CASE("circle covariance relations", "[solenoid]") {
  const auto r = CircleRuelle::uniform();
  const TrigPoly e2 = v1_star(r, compose_with_rhat(v1(TrigPoly::character(1))));
  CHECK(coeff_distance(e2, TrigPoly::character(2)) == 0.0);
  const auto rep = covariance_check(r, HaarMeasure{}, 2);
  CHECK(rep.v1_covariance <= 1e-12);
  CHECK(rep.multiplication_covariance <= 1e-12);
  CHECK(rep.norm_preservation <= 1e-12);
}

TEST_CASE("E_x(f o rhat) = E_{r(x), x}(f)", "[solenoid]") {
  const auto space = cycle();
  const auto r = MatrixOperator::ruelle(space);
  for (std::uint64_t i = 0; i < 30; ++i) {
    auto g = make_stream(13, i);
    CHECK(rhat_conditioning_residual(r, space, make_word(random_word(g, 4, 1 + i % 4))) <= 1e-12);
  }
  const auto c = CircleRuelle::from_filter(haar_filter());
  const std::vector<Angle> pts{Angle(0, 1), Angle(1, 3), Angle(5, 8), Angle(2, 7)};
  for (std::uint64_t i = 0; i < 10; ++i) {
    auto g = make_stream(14, i);
    std::vector<TrigPoly> w;
    for (std::size_t d = 0; d < 1 + i % 4; ++d) w.push_back(random_poly(g, 2));
    CHECK(rhat_conditioning_residual(c, make_word(w), pts) <= 1e-12);
  }
}

TEST_CASE("Haar translation invariance", "[solenoid]") {
  const auto r = CircleRuelle::uniform();
  const auto f1 = v1(TrigPoly::character(1));
  CHECK(group_translation_invariance(r, f1, CircleSolenoidWord({Angle(0, 1)}, CircleDoubling{})) == 0.0);
  CHECK(group_translation_invariance(r, f1, CircleSolenoidWord({Angle(1, 3)}, CircleDoubling{})) <= 1e-15);
  CHECK(integrate(HaarMeasure{}, expectation_field(r, f1)) == cplx(0.0));

  const auto f12 = make_word<TrigPoly>({TrigPoly::character(1), TrigPoly::character(2)});
  for (std::uint64_t i = 0; i < 30; ++i) {
    auto g = make_stream(15, i);
    const auto y = random_solenoid_word(g, 4, 45);
    CHECK(group_translation_invariance(r, f12, y) <= 1e-12);
    std::vector<TrigPoly> w;
    for (std::size_t d = 0; d < 4; ++d) w.push_back(random_poly(g, 3));
    CHECK(group_translation_invariance(r, make_word(w), y) <= 1e-12);
  }

  // A translate that is not a backward orbit moves the measure.
  const auto fbad = make_word<TrigPoly>({TrigPoly::character(-1), TrigPoly::character(2)});
  CHECK(translation_residual_unchecked(r, fbad, {Angle(0, 1), Angle(1, 4)}) == Approx(2.0));
  CHECK_THROWS_AS(group_translation_invariance(CircleRuelle::from_filter(haar_filter()), f1,
                                               CircleSolenoidWord({Angle(0, 1)}, CircleDoubling{})),
                  std::invalid_argument);
}

TEST_CASE("Smale-Williams orbits", "[solenoid]") {
  const auto o = smale_williams_orbit({0.0, cplx{}}, 1);
  CHECK(o[1].t == 0.0);
  CHECK(o[1].z == cplx(0.5, 0.0));

  const auto orbit = smale_williams_orbit({0.123, cplx(0.3, -0.9)}, 10000);
  REQUIRE(orbit.size() == 10001);
  for (std::size_t k = 1; k < orbit.size(); ++k) CHECK(std::abs(orbit[k].z) <= 0.75);
  for (double ratio : meridional_contraction(orbit, cplx(1e-3, 2e-3))) CHECK(std::abs(ratio - 0.25) <= 1e-12);
  CHECK_THROWS_AS(smale_williams_orbit({0.0, cplx(1.0, 0.5)}, 3), std::invalid_argument);
  CHECK_THROWS(meridional_contraction(orbit, cplx{}));
}

#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "xferlab/pathmeasure.hpp"
#include "xferlab/solenoid.hpp"

using namespace xferlab;
using Catch::Approx;

namespace {

Mat two_state() {
  Mat k(2, 2);
  k << 0.75, 0.25, 0.5, 0.5;
  return k;
}

Mat three_state() {
  Mat k(3, 3);
  k << 0.2, 0.5, 0.3, 0.6, 0.1, 0.3, 0.25, 0.25, 0.5;
  return k;
}

Vec chi(std::size_t n, std::size_t i) { return indicator(n, i); }

// Brute force: sum over all continuations x_2..x_n of prod K[x_i][x_{i+1}] prod phi_i(x_i).
double enumerate_expectation(const Mat& k, std::size_t x, const std::vector<Vec>& word) {
  const auto s = static_cast<std::size_t>(k.rows());
  const std::size_t n = word.size();
  std::size_t total = 1;
  for (std::size_t i = 1; i < n; ++i) total *= s;
  double sum = 0.0;
  for (std::size_t id = 0; id < total; ++id) {
    std::vector<std::size_t> path{x};
    std::size_t rest = id;
    for (std::size_t i = 1; i < n; ++i) {
      path.push_back(rest % s);
      rest /= s;
    }
    double w = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      w *= word[i](static_cast<Eigen::Index>(path[i]));
      if (i + 1 < n) w *= k(static_cast<Eigen::Index>(path[i]), static_cast<Eigen::Index>(path[i + 1]));
    }
    sum += w;
  }
  return sum;
}

std::vector<Vec> random_word(SplitMix64& g, std::size_t states, std::size_t depth) {
  std::vector<Vec> w;
  for (std::size_t i = 0; i < depth; ++i) {
    Vec v(static_cast<Eigen::Index>(states));
    for (Eigen::Index j = 0; j < v.size(); ++j) v(j) = 2.0 * uniform01(g) - 1.0;
    w.push_back(v);
  }
  return w;
}

}  // namespace

TEST_CASE("cylinder expectations on the two-state chain", "[pathmeasure]") {
  const MatrixOperator r(two_state());
  const Vec phi = (Vec(2) << 0.3, -0.7).finished();
  CHECK(cylinder_expectation(r, 1, make_word<Vec>({phi})) == -0.7);
  CHECK(cylinder_expectation(r, 0, make_word<Vec>({chi(2, 0), chi(2, 0)})) == 0.75);
  CHECK(cylinder_expectation(r, 0, make_word<Vec>({chi(2, 0), chi(2, 0), chi(2, 0)})) == 0.5625);
  CHECK(enumerate_expectation(two_state(), 0, {chi(2, 0), chi(2, 0), chi(2, 0)}) == 0.5625);
}

TEST_CASE("cylinder expectations agree with path enumeration", "[pathmeasure]") {
  const MatrixOperator r(three_state());
  for (std::uint64_t i = 0; i < 40; ++i) {
    auto g = make_stream(31, i);
    const std::size_t depth = 1 + i % 6;
    const auto w = random_word(g, 3, depth);
    const auto word = make_word(w);
    for (std::size_t x = 0; x < 3; ++x) {
      CHECK(std::abs(cylinder_expectation(r, x, word) - enumerate_expectation(three_state(), x, w)) < 1e-13);
    }
  }
}

TEST_CASE("sigma expectations", "[pathmeasure]") {
  const MatrixOperator r(two_state());
  const FiniteMeasure mu((Vec(2) << 2.0 / 3.0, 1.0 / 3.0).finished());
  CHECK(sigma_expectation(mu, r, make_word<Vec>({Vec::Ones(2), Vec::Ones(2), Vec::Ones(2)})) == Approx(1.0));
  CHECK(sigma_expectation(mu, r, make_word<Vec>({chi(2, 0), chi(2, 0)})) == Approx(0.5).margin(1e-15));
  const CircleRuelle c = CircleRuelle::from_filter(TrigPoly(64, {{0, std::numbers::sqrt2 / 2}, {1, std::numbers::sqrt2 / 2}}));
  CHECK(sigma_expectation(HaarMeasure{}, c, make_word<TrigPoly>({TrigPoly::character(1)})) == cplx(0.0));
}

TEST_CASE("Kolmogorov consistency", "[pathmeasure]") {
  const MatrixOperator r(three_state());
  for (std::uint64_t i = 0; i < 50; ++i) {
    auto g = make_stream(17, i);
    CHECK(kolmogorov_residual(r, make_word(random_word(g, 3, 1 + i % 8))) <= 1e-12);
  }
  const CircleRuelle c = CircleRuelle::uniform();
  CHECK(kolmogorov_residual(c, make_word<TrigPoly>({TrigPoly::character(1), TrigPoly::character(-2)})) == 0.0);
}

TEST_CASE("exact depth is capped", "[pathmeasure]") {
  const MatrixOperator r(two_state());
  CHECK_NOTHROW(expectation_field(r, make_word(std::vector<Vec>(kMaxExactDepth, Vec::Ones(2)))));
  CHECK_THROWS_AS(expectation_field(r, make_word(std::vector<Vec>(kMaxExactDepth + 1, Vec::Ones(2)))),
                  depth_cap_exceeded);
  CHECK_THROWS_AS(make_word<Vec>({Vec::Ones(2), Vec::Ones(3)}), carrier_mismatch);
  CHECK_THROWS_AS(cylinder_expectation(r, 0, make_word<Vec>({Vec::Ones(3)})), carrier_mismatch);
}

TEST_CASE("sampling", "[pathmeasure]") {
  const MatrixOperator r(two_state());
  CHECK(sample_paths(r, std::size_t{0}, 3, 0, 1).empty());

  const auto ens = sample_paths(r, std::size_t{0}, 2, 100000, 42);
  REQUIRE(ens.size() == 100000);
  for (const auto& p : ens.samples) CHECK(p.front() == 0);
  const auto est = mc_estimate(ens, at_coordinate<Vec>(chi(2, 0), Vec::Ones(2), 2));
  CHECK(std::abs(est.mean - 0.75) <= 3.0 * std::sqrt(0.75 * 0.25 / 1e5));

  const auto serial = sample_paths(r, std::size_t{1}, 5, 5000, 9, 1);
  const auto parallel = sample_paths(r, std::size_t{1}, 5, 5000, 9, 4);
  CHECK(serial.samples == parallel.samples);
  CHECK(sample_paths(r, std::size_t{1}, 5, 5000, 10, 1).samples != serial.samples);
}

TEST_CASE("ensembles merge in order", "[pathmeasure]") {
  const MatrixOperator r(three_state());
  const auto whole = sample_paths(r, std::size_t{2}, 4, 300, 5, 1);
  auto a = whole, b = whole, c = whole;
  a.samples.assign(whole.samples.begin(), whole.samples.begin() + 100);
  b.samples.assign(whole.samples.begin() + 100, whole.samples.begin() + 200);
  b.first_index = 100;
  c.samples.assign(whole.samples.begin() + 200, whole.samples.end());
  c.first_index = 200;
  CHECK(merge(merge(a, b), c).samples == whole.samples);
  CHECK(merge(a, merge(b, c)).samples == whole.samples);
  CHECK_THROWS(merge(a, c));
}

TEST_CASE("circle sampler produces backward orbits", "[pathmeasure]") {
  const CircleRuelle c = CircleRuelle::from_filter(TrigPoly(64, {{0, std::numbers::sqrt2 / 2}, {1, std::numbers::sqrt2 / 2}}));
  const auto ens = sample_paths(c, Angle(0, 1), 3, 2000, 3);
  for (const auto& p : ens.samples) {
    REQUIRE(p.size() == 3);
    CHECK(p[0] == Angle(0, 1));
    CHECK(p[1].doubled() == p[0]);
    CHECK(p[2].doubled() == p[1]);
  }
}

TEST_CASE("black-box path functions need samples", "[pathmeasure]") {
  PathEnsemble<std::size_t> empty;
  CHECK_THROWS_AS(mc_estimate(empty, [](const std::vector<std::size_t>&) { return 1.0; }), needs_samples);
  CHECK_THROWS_AS(v1_star_mc(empty, [](const std::vector<std::size_t>&) { return 1.0; }), needs_samples);
}

TEST_CASE("V1 and its adjoint", "[pathmeasure]") {
  const MatrixOperator r(two_state());
  const Vec phi = (Vec(2) << 2.0, -1.0).finished();
  CHECK(v1_star(r, v1(phi)) == phi);
  const Vec e = v1_star(r, at_coordinate<Vec>(chi(2, 0), Vec::Ones(2), 2));
  CHECK(e(0) == 0.75);
  CHECK(e(1) == 0.5);
  const FiniteMeasure mu((Vec(2) << 2.0 / 3.0, 1.0 / 3.0).finished());
  for (std::uint64_t i = 0; i < 20; ++i) {
    auto g = make_stream(4, i);
    CHECK(v1_isometry_residual(mu, r, random_word(g, 2, 1)[0]) <= 1e-15);
  }
}

TEST_CASE("V1* V_{n+1} = R^n", "[pathmeasure]") {
  const MatrixOperator r(two_state());
  for (unsigned n = 0; n <= 5; ++n) {
    for (std::size_t i = 0; i < 2; ++i) CHECK(v1_star_v_residual(r, chi(2, i), n) <= 1e-12);
  }
}

TEST_CASE("Q1 projections", "[pathmeasure]") {
  const MatrixOperator r(three_state());
  auto g = make_stream(8, 0);
  const auto w = random_word(g, 3, 2);
  const Vec& psi = w[0];
  const Vec& phi = w[1];
  const Vec one = Vec::Ones(3);
  CHECK(q1_project(r, make_word<Vec>({phi})) == phi);
  CHECK((q1_project(r, make_word<Vec>({one, phi})) - r.apply(phi)).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((q1_project(r, make_word<Vec>({psi, phi})) - psi.cwiseProduct(r.apply(phi))).cwiseAbs().maxCoeff() < 1e-15);
  for (unsigned n = 0; n <= 5; ++n) {
    const Vec lhs = q1_project(r, at_coordinate(phi, one, n + 1));
    CHECK((lhs - apply_power(r, phi, n)).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("Q1 is an orthogonal projection on the cylinder algebra", "[pathmeasure]") {
  const MatrixOperator r(two_state());
  const FiniteMeasure mu((Vec(2) << 2.0 / 3.0, 1.0 / 3.0).finished());
  for (std::size_t n = 1; n <= 4; ++n) {
    const auto alg = CylinderAlgebra::build(mu, r, n);
    CHECK(alg.masses.sum() == Approx(1.0).margin(1e-14));
    CHECK(alg.idempotence_residual() <= 1e-14);
    CHECK(alg.selfadjoint_residual() <= 1e-14);
  }
}

TEST_CASE("V2 adjoint", "[pathmeasure]") {
  const MatrixOperator r(two_state());
  const FiniteMeasure stat((Vec(2) << 2.0 / 3.0, 1.0 / 3.0).finished());
  const Vec phi = (Vec(2) << 0.4, 1.5).finished();
  CHECK((v2_star(r, stat, make_word<Vec>({Vec::Ones(2), phi})) - phi).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((v2_star(r, stat, make_word<Vec>({phi})) - adjoint_apply(r, stat, phi)).cwiseAbs().maxCoeff() == 0.0);

  const FiniteMeasure mu((Vec(2) << 0.3, 0.7).finished());
  const Vec rho = adjoint_apply(r, mu, Vec::Ones(2));
  for (std::uint64_t i = 0; i < 20; ++i) {
    auto g = make_stream(12, i);
    const auto f = make_word(random_word(g, 2, 1 + i % 4));
    const Vec lhs = v2_star(r, mu, f.shifted(Vec::Ones(2)));
    const Vec rhs = rho.cwiseProduct(v1_star(r, f));
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-12);
  }
  CHECK_THROWS_AS(v2_star(r, FiniteMeasure::point_mass(2, 1), make_word<Vec>({phi})), zero_mass);
}

TEST_CASE("transfer-operator characterization", "[pathmeasure]") {
  const MatrixOperator r(three_state());
  std::vector<CylinderFunctional<Vec>> battery;
  for (std::uint64_t i = 0; i < 30; ++i) {
    auto g = make_stream(21, i);
    battery.push_back(make_word(random_word(g, 3, 1 + i % 5)));
  }
  battery.push_back(make_word<Vec>({Vec::Ones(3), Vec::Ones(3)}));
  CHECK(characterization_residual(r, battery) <= 1e-12);
  const MatrixOperator other(Mat::Constant(3, 3, 1.0 / 3.0));
  CHECK(characterization_residual(r, other, battery) > 1e-3);
}

TEST_CASE("correlations", "[pathmeasure]") {
  const MatrixOperator r(two_state());
  const FiniteMeasure mu((Vec(2) << 2.0 / 3.0, 1.0 / 3.0).finished());
  const Vec c0 = chi(2, 0);
  const Vec psi = (Vec(2) << -1.0, 3.0).finished();
  CHECK(correlation(mu, r, c0, psi, 0) == Approx(mu.weights().dot(c0.cwiseProduct(psi))));
  CHECK(correlation(mu, r, c0, c0, 1) == Approx(0.5).margin(1e-15));
  const auto fit = correlation_decay(mu, r, c0, c0, 12);
  CHECK(fit.limit == Approx(4.0 / 9.0).margin(1e-15));
  // Spectral oracle: c_k = 4/9 + (2/9) (1/4)^k.
  for (unsigned k = 0; k <= 12; ++k) {
    CHECK(std::abs(fit.values[k] - (4.0 / 9.0 + 2.0 / 9.0 * std::pow(0.25, k))) < 1e-15);
  }
  CHECK(std::abs(fit.rate - 0.25) < 1e-6);

  const auto ens = sample_paths(r, mu, 3, 100000, 77);
  const auto mc = correlation_mc(ens, c0, c0, 2, 1);
  CHECK(mc.within(0.5));
}

TEST_CASE("marginal distributions", "[pathmeasure]") {
  const MatrixOperator r(two_state());
  const FiniteMeasure mu((Vec(2) << 2.0 / 3.0, 1.0 / 3.0).finished());
  const Vec c0 = chi(2, 0);
  for (std::size_t n = 1; n <= 3; ++n) CHECK(marginal_distribution(mu, r, c0, 0.5, n) == Approx(1.0 / 3.0).margin(1e-15));
  const auto ens = sample_paths(r, mu, 3, 100000, 5);
  CHECK(marginal_distribution_mc(ens, c0, 0.5, 3).within(1.0 / 3.0));
}

TEST_CASE("harmonic functions and martingales", "[pathmeasure]") {
  Mat k(3, 3);
  k << 1, 0, 0, 0.5, 0, 0.5, 0, 0, 1;
  const MatrixOperator r(k);
  const Vec h = (Vec(3) << 0.0, 0.5, 1.0).finished();
  const auto rep = harmonic_correspondence(r, h, 6);
  CHECK(rep.martingale_residual <= 1e-12);
  CHECK(harmonic_correspondence(r, Vec::Ones(3), 6).martingale_residual == 0.0);
  CHECK_THROWS_AS(harmonic_correspondence(r, (Vec(3) << 0.0, 0.9, 1.0).finished(), 3), not_harmonic);

  const auto lim = martingale_limit_mc(r, h, 1, 100000, 2718);
  CHECK(lim.capped == 0);
  CHECK(lim.estimate.within(0.5));
}

TEST_CASE("constant-row kernels give x-independent expectations", "[pathmeasure]") {
  Mat rows(3, 3);
  rows << 0.2, 0.3, 0.5, 0.2, 0.3, 0.5, 0.2, 0.3, 0.5;
  const MatrixOperator flat(rows);
  const MatrixOperator skew(three_state());
  auto g = make_stream(3, 3);
  auto w = random_word(g, 3, 4);
  w[0] = Vec::Ones(3);
  CHECK(x_spread(flat, make_word(w)) < 1e-15);
  CHECK(x_spread(skew, make_word(w)) > 1e-3);
}

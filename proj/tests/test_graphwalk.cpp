#include <catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "xferlab/graphwalk.hpp"

using namespace xferlab;
using namespace xferlab::graph;
using Catch::Approx;

namespace {

Network unit_path() { return Network(3, {{0, 1, 1.0}, {1, 2, 1.0}}, {{0, 0.0}, {2, 1.0}}); }
Network weighted_path() { return Network(3, {{0, 1, 1.0}, {1, 2, 2.0}}, {{0, 0.0}, {2, 1.0}}); }

// Dense oracle: solve L_II phi_I = -L_IB phi_B with a full-pivot LU.
Vec dense_harmonic(const Network& net) {
  const auto n = static_cast<Eigen::Index>(net.size());
  Mat l = Mat::Zero(n, n);
  for (const auto& e : net.edges()) {
    const auto u = static_cast<Eigen::Index>(e.u), v = static_cast<Eigen::Index>(e.v);
    l(u, u) += e.c;
    l(v, v) += e.c;
    l(u, v) -= e.c;
    l(v, u) -= e.c;
  }
  Mat a = l;
  Vec b = Vec::Zero(n);
  for (const auto& [x, value] : net.boundary()) {
    const auto i = static_cast<Eigen::Index>(x);
    a.row(i).setZero();
    a(i, i) = 1.0;
    b(i) = value;
  }
  return a.fullPivLu().solve(b);
}

}  // namespace

TEST_CASE("transition matrices", "[graph]") {
  const Mat p = transition_matrix(unit_path()).matrix();
  CHECK(p(1, 0) == 0.5);
  CHECK(p(1, 1) == 0.0);
  CHECK(p(1, 2) == 0.5);
  const Mat q = transition_matrix(weighted_path()).matrix();
  CHECK(q(1, 0) == Approx(1.0 / 3.0));
  CHECK(q(1, 2) == Approx(2.0 / 3.0));
  const Mat s = transition_matrix(Network(2, {{0, 1, 3.5}})).matrix();
  CHECK(s(0, 1) == 1.0);
  CHECK(s(1, 0) == 1.0);
  CHECK_THROWS_AS(transition_matrix(Network(3, {{0, 1, 1.0}})), graph_error);
  const MatrixOperator op = transition_matrix(weighted_path());
  CHECK(op.unital_residual() <= 1e-15);
  CHECK((op.matrix().array() >= 0.0).all());
}

TEST_CASE("network validation", "[graph]") {
  CHECK_THROWS_AS(Network(2, {{0, 1, 0.0}}), graph_error);
  CHECK_THROWS_AS(Network(2, {{0, 1, -1.0}}), graph_error);
  CHECK_THROWS_AS(Network(2, {{0, 0, 1.0}}), graph_error);
  CHECK_THROWS_AS(Network(2, {{0, 1, 1.0}, {1, 0, 2.0}}), graph_error);
  CHECK_THROWS_AS(Network(2, {{0, 2, 1.0}}), graph_error);
  const Network n(3, {{0, 1, 1.5}});
  CHECK(n.conductance(0, 1) == 1.5);
  CHECK(n.conductance(1, 0) == 1.5);
  CHECK(n.conductance(0, 2) == 0.0);
}

TEST_CASE("graph Laplacian", "[graph]") {
  const Network net = unit_path();
  CHECK(laplacian_apply(net, Vec::Constant(3, 4.0)).cwiseAbs().maxCoeff() == 0.0);
  CHECK(laplacian_apply(net, (Vec(3) << 0.0, 1.0, 0.0).finished())(1) == 2.0);
  CHECK(laplacian_apply(net, (Vec(3) << 0.0, 0.5, 1.0).finished())(1) == 0.0);
}

TEST_CASE("harmonic solve", "[graph]") {
  CHECK(harmonic_solve(unit_path())(1) == Approx(0.5).margin(1e-15));
  const Vec w = harmonic_solve(weighted_path());
  CHECK(std::abs(w(1) - 2.0 / 3.0) <= 1e-15);
  CHECK(harmonic_residual(weighted_path(), w) <= 1e-12);

  const Network all(3, {{0, 1, 1.0}, {1, 2, 1.0}}, {{0, 0.3}, {1, -2.0}, {2, 7.0}});
  const Vec b = harmonic_solve(all);
  CHECK(b == (Vec(3) << 0.3, -2.0, 7.0).finished());

  CHECK_THROWS_AS(harmonic_solve(Network(4, {{0, 1, 1.0}, {2, 3, 1.0}}, {{0, 0.0}, {1, 1.0}})), graph_error);
  CHECK_THROWS_AS(harmonic_solve(Network(2, {{0, 1, 1.0}})), graph_error);
}

TEST_CASE("gambler's ruin on a weighted path", "[graph]") {
  // phi(k) = (sum_{i<k} 1/c_i) / (sum_i 1/c_i).
  const std::vector<double> c{1.0, 0.5, 2.0, 3.0, 0.25, 1.5};
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < c.size(); ++i) edges.push_back({i, i + 1, c[i]});
  const Network net(c.size() + 1, edges, {{0, 0.0}, {c.size(), 1.0}});
  const Vec phi = harmonic_solve(net);
  double total = 0.0;
  for (double ci : c) total += 1.0 / ci;
  double partial = 0.0;
  for (std::size_t k = 0; k <= c.size(); ++k) {
    CHECK(std::abs(phi(static_cast<Eigen::Index>(k)) - partial / total) <= 1e-14);
    if (k < c.size()) partial += 1.0 / c[k];
  }
}

TEST_CASE("linear boundary data on a lattice box", "[graph]") {
  const Network box = lattice_box(4, [](int i, int j) { return 2.0 * i - j; });
  const Vec phi = harmonic_solve(box);
  for (int i = -4; i <= 4; ++i) {
    for (int j = -4; j <= 4; ++j) {
      const auto id = static_cast<Eigen::Index>((i + 4) * 9 + (j + 4));
      CHECK(std::abs(phi(id) - (2.0 * i - j)) <= 1e-12);
    }
  }
  CHECK(maximum_principle_holds(box, phi));
}

TEST_CASE("random networks", "[graph]") {
  for (std::uint64_t s = 0; s < 20; ++s) {
    auto g = make_stream(404, s);
    const std::size_t n = 5 + static_cast<std::size_t>(uniform01(g) * 26.0);
    Network net = random_network(g, n);
    std::map<std::size_t, double> boundary{{0, 0.0}, {n - 1, 1.0}, {n / 2, uniform01(g)}};
    net = net.with_boundary(boundary);
    const Vec phi = harmonic_solve(net);
    CHECK((phi - dense_harmonic(net)).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(harmonic_residual(net, phi) <= 1e-12);
    CHECK(laplacian_mean_value_residual(net, phi) <= 1e-12);
    CHECK(detailed_balance_residual(net) <= 1e-12);
    CHECK(maximum_principle_holds(net, phi));

    Vec other(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < other.size(); ++i) other(i) = uniform01(g);
    CHECK(laplacian_mean_value_residual(net, other) <= 1e-12);
    CHECK(transition_matrix(net).unital_residual() <= 1e-12);
  }
}

TEST_CASE("hitting probabilities", "[graph]") {
  const auto unit = hitting_verification(unit_path(), harmonic_solve(unit_path()), 1, 100000, 1);
  CHECK(unit.capped == 0);
  CHECK(std::abs(unit.estimate.mean - 0.5) <= 3.0 * std::sqrt(0.25 / 1e5));

  const Network wp = weighted_path();
  const auto w = hitting_verification(wp, harmonic_solve(wp), 1, 100000, 2);
  CHECK(w.exact == Approx(2.0 / 3.0));
  CHECK(w.estimate.within(2.0 / 3.0));

  const auto b = hitting_verification(wp, harmonic_solve(wp), 2, 1000, 3);
  CHECK(b.estimate.mean == 1.0);
  CHECK(b.estimate.stderr_ == 0.0);

  const auto serial = hitting_verification(wp, harmonic_solve(wp), 1, 5000, 4, kDefaultStepCap, 1);
  const auto parallel = hitting_verification(wp, harmonic_solve(wp), 1, 5000, 4, kDefaultStepCap, 4);
  CHECK(serial.estimate.mean == parallel.estimate.mean);

  // A cap of one step stops every walk that does not exit immediately.
  const Network longer(5, {{0, 1, 1.0}, {1, 2, 1.0}, {2, 3, 1.0}, {3, 4, 1.0}}, {{0, 0.0}, {4, 1.0}});
  const auto capped = hitting_verification(longer, harmonic_solve(longer), 2, 100, 5, 1);
  CHECK(capped.capped == 100);
}

TEST_CASE("edge paths and edge lists", "[graph]") {
  const Network net = unit_path();
  const auto ens = sample_paths(transition_matrix(net), std::size_t{1}, 6, 50, 8);
  for (const auto& p : ens.samples) CHECK(edge_path(net, p).size() == 5);
  CHECK_THROWS_AS(edge_path(net, {0, 2}), graph_error);

  std::istringstream in("u,v,c\na,b,1.0\nb,c,2\n");
  const Network parsed = parse_edge_list(in);
  CHECK(parsed.size() == 3);
  CHECK(parsed.conductance(parsed.index_of("b"), parsed.index_of("c")) == 2.0);
  std::istringstream bad("a,b,1\nb,c,x\n");
  CHECK_THROWS_AS(parse_edge_list(bad), graph_error);
}

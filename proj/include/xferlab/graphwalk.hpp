#pragma once

// Random walks on conductance networks.
//
// p_xy = c_xy / c(x) with c(x) = sum_{z ~ x} c_xz, and
// (Delta phi)(x) = sum_{y ~ x} c_xy (phi(x) - phi(y)) = c(x) (phi(x) - (P phi)(x)).

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "xferlab/errors.hpp"
#include "xferlab/pathmeasure.hpp"
#include "xferlab/rng.hpp"
#include "xferlab/statespace.hpp"
#include "xferlab/transferop.hpp"

namespace xferlab::graph {

struct Edge {
  std::size_t u = 0;
  std::size_t v = 0;
  double c = 1.0;
};

class Network {
 public:
  Network(std::size_t n, std::vector<Edge> edges, std::map<std::size_t, double> boundary = {},
          std::vector<std::string> labels = {})
      : n_(n), edges_(std::move(edges)), boundary_(std::move(boundary)), labels_(std::move(labels)), adj_(n) {
    if (n_ == 0) throw graph_error("Network: no vertices");
    if (labels_.empty()) {
      for (std::size_t i = 0; i < n_; ++i) labels_.push_back(std::to_string(i));
    }
    if (labels_.size() != n_) throw graph_error("Network: label count differs from vertex count");
    std::set<std::pair<std::size_t, std::size_t>> seen;
    for (const auto& e : edges_) {
      if (e.u >= n_ || e.v >= n_) throw graph_error("Network: edge endpoint out of range");
      if (e.u == e.v) throw graph_error("Network: self-loop at vertex " + labels_[e.u]);
      if (!(e.c > 0.0) || !std::isfinite(e.c)) throw graph_error("Network: conductance must be positive on edges");
      if (!seen.insert({std::min(e.u, e.v), std::max(e.u, e.v)}).second) {
        throw graph_error("Network: duplicate edge " + labels_[e.u] + "-" + labels_[e.v]);
      }
      adj_[e.u].push_back({e.v, e.c});
      adj_[e.v].push_back({e.u, e.c});
    }
    for (const auto& [x, value] : boundary_) {
      if (x >= n_) throw graph_error("Network: boundary vertex out of range");
    }
  }

  std::size_t size() const { return n_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::map<std::size_t, double>& boundary() const { return boundary_; }
  const std::vector<std::string>& labels() const { return labels_; }
  const std::vector<std::pair<std::size_t, double>>& neighbors(std::size_t x) const { return adj_[x]; }
  bool on_boundary(std::size_t x) const { return boundary_.count(x) > 0; }

  /// c_xy, zero off the edge set.
  double conductance(std::size_t x, std::size_t y) const {
    for (const auto& [z, c] : adj_[x]) {
      if (z == y) return c;
    }
    return 0.0;
  }

  /// c(x) = sum_{z ~ x} c_xz.
  double total_conductance(std::size_t x) const {
    double s = 0.0;
    for (const auto& [z, c] : adj_[x]) s += c;
    return s;
  }

  Network with_boundary(std::map<std::size_t, double> boundary) const {
    return Network(n_, edges_, std::move(boundary), labels_);
  }

  std::size_t index_of(const std::string& label) const {
    auto it = std::find(labels_.begin(), labels_.end(), label);
    if (it == labels_.end()) throw graph_error("Network: unknown vertex '" + label + "'");
    return static_cast<std::size_t>(it - labels_.begin());
  }

 private:
  std::size_t n_;
  std::vector<Edge> edges_;
  std::map<std::size_t, double> boundary_;
  std::vector<std::string> labels_;
  std::vector<std::vector<std::pair<std::size_t, double>>> adj_;
};

/// p_xy = c_xy / c(x).
inline MatrixOperator transition_matrix(const Network& net) {
  const auto n = static_cast<Eigen::Index>(net.size());
  Mat p = Mat::Zero(n, n);
  for (std::size_t x = 0; x < net.size(); ++x) {
    const double cx = net.total_conductance(x);
    if (cx <= 0.0) throw graph_error("transition_matrix: isolated vertex " + net.labels()[x]);
    for (const auto& [y, c] : net.neighbors(x)) p(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y)) = c / cx;
  }
  return MatrixOperator(std::move(p));
}

/// Walk that stops on the boundary: boundary rows become point masses.
inline MatrixOperator absorbing_transition_matrix(const Network& net) {
  Mat p = transition_matrix(net).matrix();
  for (const auto& [x, value] : net.boundary()) {
    p.row(static_cast<Eigen::Index>(x)).setZero();
    p(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(x)) = 1.0;
  }
  return MatrixOperator(std::move(p));
}

inline Vec laplacian_apply(const Network& net, const Vec& phi) {
  check_carrier(phi, net.size(), "laplacian_apply");
  Vec out = Vec::Zero(phi.size());
  for (std::size_t x = 0; x < net.size(); ++x) {
    double s = 0.0;
    for (const auto& [y, c] : net.neighbors(x)) {
      s += c * (phi(static_cast<Eigen::Index>(x)) - phi(static_cast<Eigen::Index>(y)));
    }
    out(static_cast<Eigen::Index>(x)) = s;
  }
  return out;
}

/// phi(x) - sum_y p_xy phi(y).
inline Vec mean_value_defect(const Network& net, const Vec& phi) {
  return phi - transition_matrix(net).apply(phi);
}

/// Boundary-reachability: every vertex must reach the boundary.
inline void check_boundary_reachable(const Network& net) {
  if (net.boundary().empty()) throw graph_error("harmonic_solve: empty boundary");
  std::vector<char> seen(net.size(), 0);
  std::vector<std::size_t> stack;
  for (const auto& [x, value] : net.boundary()) {
    seen[x] = 1;
    stack.push_back(x);
  }
  while (!stack.empty()) {
    const std::size_t x = stack.back();
    stack.pop_back();
    for (const auto& [y, c] : net.neighbors(x)) {
      if (!seen[y]) {
        seen[y] = 1;
        stack.push_back(y);
      }
    }
  }
  for (std::size_t x = 0; x < net.size(); ++x) {
    if (!seen[x]) throw graph_error("harmonic_solve: vertex " + net.labels()[x] + " has no path to the boundary");
  }
}

/// Dirichlet problem: phi = boundary data on the boundary, Delta phi = 0 inside.
inline Vec harmonic_solve(const Network& net) {
  check_boundary_reachable(net);
  const std::size_t n = net.size();
  Vec phi = Vec::Zero(static_cast<Eigen::Index>(n));
  std::vector<std::ptrdiff_t> interior_index(n, -1);
  std::size_t m = 0;
  for (std::size_t x = 0; x < n; ++x) {
    if (net.on_boundary(x)) {
      phi(static_cast<Eigen::Index>(x)) = net.boundary().at(x);
    } else {
      interior_index[x] = static_cast<std::ptrdiff_t>(m++);
    }
  }
  if (m == 0) return phi;
  std::vector<Eigen::Triplet<double>> t;
  Vec rhs = Vec::Zero(static_cast<Eigen::Index>(m));
  for (std::size_t x = 0; x < n; ++x) {
    const auto i = interior_index[x];
    if (i < 0) continue;
    t.emplace_back(i, i, net.total_conductance(x));
    for (const auto& [y, c] : net.neighbors(x)) {
      if (interior_index[y] >= 0) {
        t.emplace_back(i, interior_index[y], -c);
      } else {
        rhs(i) += c * phi(static_cast<Eigen::Index>(y));
      }
    }
  }
  Eigen::SparseMatrix<double> l(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  l.setFromTriplets(t.begin(), t.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(l);
  if (solver.info() != Eigen::Success) throw graph_error("harmonic_solve: reduced Laplacian is singular");
  const Vec sol = solver.solve(rhs);
  for (std::size_t x = 0; x < n; ++x) {
    if (interior_index[x] >= 0) phi(static_cast<Eigen::Index>(x)) = sol(interior_index[x]);
  }
  return phi;
}

/// max over interior vertices of |Delta phi|.
inline double harmonic_residual(const Network& net, const Vec& phi) {
  const Vec lap = laplacian_apply(net, phi);
  double worst = 0.0;
  for (std::size_t x = 0; x < net.size(); ++x) {
    if (!net.on_boundary(x)) worst = std::max(worst, std::abs(lap(static_cast<Eigen::Index>(x))));
  }
  return worst;
}

/// max_x |(Delta phi)(x) / c(x) - (phi(x) - (P phi)(x))|.
inline double laplacian_mean_value_residual(const Network& net, const Vec& phi) {
  const Vec lap = laplacian_apply(net, phi);
  const Vec mv = mean_value_defect(net, phi);
  double worst = 0.0;
  for (std::size_t x = 0; x < net.size(); ++x) {
    const double cx = net.total_conductance(x);
    worst = std::max(worst, std::abs(lap(static_cast<Eigen::Index>(x)) / cx - mv(static_cast<Eigen::Index>(x))));
  }
  return worst;
}

/// max over edges of |c(x) p_xy - c(y) p_yx|.
inline double detailed_balance_residual(const Network& net) {
  const MatrixOperator p = transition_matrix(net);
  double worst = 0.0;
  for (const auto& e : net.edges()) {
    worst = std::max(worst, std::abs(net.total_conductance(e.u) * p(e.u, e.v) - net.total_conductance(e.v) * p(e.v, e.u)));
  }
  return worst;
}

/// Interior values lie within [min, max] of the boundary data.
inline bool maximum_principle_holds(const Network& net, const Vec& phi, double tol = 1e-12) {
  if (net.boundary().empty()) return true;
  double lo = 1e300, hi = -1e300;
  for (const auto& [x, v] : net.boundary()) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  for (std::size_t x = 0; x < net.size(); ++x) {
    const double v = phi(static_cast<Eigen::Index>(x));
    if (v < lo - tol || v > hi + tol) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Boundary hitting.

struct HittingEstimate {
  McEstimate estimate;
  double exact = 0.0;
  /// Walks stopped by the step cap; excluded from the estimate.
  std::size_t capped = 0;
  std::size_t requested = 0;
};

/// E_x[phi(X_tau)] with tau the boundary hitting time, one split stream per walk.
inline HittingEstimate hitting_verification(const Network& net, const Vec& phi, std::size_t x, std::size_t count,
                                            std::uint64_t seed, std::size_t step_cap = kDefaultStepCap,
                                            unsigned threads = 0) {
  check_carrier(phi, net.size(), "hitting_verification");
  if (x >= net.size()) throw graph_error("hitting_verification: start vertex out of range");
  if (net.boundary().empty()) throw graph_error("hitting_verification: no absorbing boundary");
  HittingEstimate out;
  out.exact = phi(static_cast<Eigen::Index>(x));
  out.requested = count;
  if (net.on_boundary(x)) {
    out.estimate = mc_from_values(std::vector<double>(count, net.boundary().at(x)));
    return out;
  }
  const MatrixOperator p = transition_matrix(net);
  std::vector<double> values(count, 0.0);
  std::vector<char> ok(count, 0);
  if (threads == 0) threads = std::max(1U, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(count / 1024, 1)));
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      for (std::size_t i = count * t / threads; i < count * (t + 1) / threads; ++i) {
        auto g = make_stream(seed, i);
        std::size_t y = x, steps = 0;
        while (!net.on_boundary(y) && steps < step_cap) {
          y = step(p, y, g);
          ++steps;
        }
        if (net.on_boundary(y)) {
          values[i] = net.boundary().at(y);
          ok[i] = 1;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  std::vector<double> kept;
  kept.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    if (ok[i]) {
      kept.push_back(values[i]);
    } else {
      ++out.capped;
    }
  }
  out.estimate = mc_from_values(kept);
  return out;
}

// ---------------------------------------------------------------------------
// Builders and paths.

/// Unit-conductance grid [-L, L]^2 with the frontier |i| = L or |j| = L as absorbing boundary.
template <class F>
Network lattice_box(int half_width, F boundary_value) {
  if (half_width < 1) throw graph_error("lattice_box: half width must be at least 1");
  const int side = 2 * half_width + 1;
  auto id = [&](int i, int j) { return static_cast<std::size_t>((i + half_width) * side + (j + half_width)); };
  std::vector<Edge> edges;
  std::map<std::size_t, double> boundary;
  std::vector<std::string> labels(static_cast<std::size_t>(side * side));
  for (int i = -half_width; i <= half_width; ++i) {
    for (int j = -half_width; j <= half_width; ++j) {
      labels[id(i, j)] = "(" + std::to_string(i) + "," + std::to_string(j) + ")";
      if (i < half_width) edges.push_back({id(i, j), id(i + 1, j), 1.0});
      if (j < half_width) edges.push_back({id(i, j), id(i, j + 1), 1.0});
      if (std::abs(i) == half_width || std::abs(j) == half_width) boundary[id(i, j)] = boundary_value(i, j);
    }
  }
  return Network(static_cast<std::size_t>(side * side), std::move(edges), std::move(boundary), std::move(labels));
}

/// Connected random network: a random spanning tree plus extra edges, conductances in (0.1, 2.1).
template <class Gen>
Network random_network(Gen& g, std::size_t n, double extra_edge_probability = 0.2) {
  std::vector<Edge> edges;
  std::set<std::pair<std::size_t, std::size_t>> seen;
  auto conductance = [&] { return 0.1 + 2.0 * uniform01(g); };
  for (std::size_t v = 1; v < n; ++v) {
    const auto u = static_cast<std::size_t>(uniform01(g) * static_cast<double>(v));
    edges.push_back({u, v, conductance()});
    seen.insert({u, v});
  }
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = u + 1; v < n; ++v) {
      if (!seen.count({u, v}) && uniform01(g) < extra_edge_probability) edges.push_back({u, v, conductance()});
    }
  }
  return Network(n, std::move(edges));
}

/// Edge path ((x_1, x_2), (x_2, x_3), ...) of a vertex path.
inline std::vector<std::pair<std::size_t, std::size_t>> edge_path(const Network& net,
                                                                  const std::vector<std::size_t>& vertices) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i + 1 < vertices.size(); ++i) {
    if (net.conductance(vertices[i], vertices[i + 1]) <= 0.0) {
      throw graph_error("edge_path: consecutive vertices are not adjacent");
    }
    out.emplace_back(vertices[i], vertices[i + 1]);
  }
  return out;
}

/// Reads "u,v,c" rows (an optional header row is skipped). Vertex labels are
/// taken in order of first appearance.
inline Network parse_edge_list(std::istream& in) {
  std::vector<std::string> labels;
  std::map<std::string, std::size_t> index;
  auto id = [&](const std::string& s) {
    auto [it, inserted] = index.try_emplace(s, labels.size());
    if (inserted) labels.push_back(s);
    return it->second;
  };
  std::vector<Edge> edges;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string u, v, c;
    if (!std::getline(ss, u, ',') || !std::getline(ss, v, ',') || !std::getline(ss, c, ',')) {
      throw graph_error("edge list line " + std::to_string(lineno) + ": expected u,v,c");
    }
    double cv = 0.0;
    try {
      std::size_t used = 0;
      cv = std::stod(c, &used);
      if (used != c.size()) throw std::invalid_argument(c);
    } catch (const std::exception&) {
      if (lineno == 1) continue;
      throw graph_error("edge list line " + std::to_string(lineno) + ": bad conductance '" + c + "'");
    }
    edges.push_back({id(u), id(v), cv});
  }
  const std::size_t n = labels.size();
  return Network(n, std::move(edges), {}, std::move(labels));
}

}  // namespace xferlab::graph

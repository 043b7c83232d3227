#pragma once

// Induced measures on path space Omega = B^N.
//
// P_x is the measure on paths starting at x whose cylinder expectations are
//   E_x(phi_1 o pi_1 ... phi_n o pi_n) = (M_{phi_1} R M_{phi_2} ... R M_{phi_n} 1)(x),
// and Sigma = int P_x dmu(x). Exact evaluation is limited to cylinder
// functionals; other path functions are estimated from sampled ensembles.

#include <algorithm>
#include <concepts>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <type_traits>
#include <vector>

#include "xferlab/errors.hpp"
#include "xferlab/rng.hpp"
#include "xferlab/statespace.hpp"
#include "xferlab/transferop.hpp"

namespace xferlab {

/// Longest word evaluated exactly on a finite carrier.
inline constexpr std::size_t kMaxExactDepth = 12;

// ---------------------------------------------------------------------------
// Carrier-generic helpers.

inline Vec multiply(const Vec& a, const Vec& b) {
  check_carrier(b, static_cast<std::size_t>(a.size()), "multiply");
  return a.cwiseProduct(b);
}
inline TrigPoly multiply(const TrigPoly& a, const TrigPoly& b) { return a * b; }

inline double evaluate(const Vec& f, std::size_t x) {
  if (x >= static_cast<std::size_t>(f.size())) throw std::out_of_range("evaluate: state index out of range");
  return f(static_cast<Eigen::Index>(x));
}
inline cplx evaluate(const TrigPoly& f, const Angle& x) { return f(x); }

inline Vec one_like(const MatrixOperator& r) { return constant_observable(r.size()); }
inline TrigPoly one_like(const CircleRuelle& r) { return TrigPoly::constant(1.0, r.bound()); }

inline bool same_carrier(const Vec& a, const Vec& b) { return a.size() == b.size(); }
inline bool same_carrier(const TrigPoly& a, const TrigPoly& b) { return a.bound() == b.bound(); }

inline std::size_t carrier_size(const MatrixOperator& r) { return r.size(); }

// ---------------------------------------------------------------------------

/// The path function phi_1 o pi_1 * ... * phi_n o pi_n.
template <class Obs>
class CylinderFunctional {
 public:
  using observable_type = Obs;

  explicit CylinderFunctional(std::vector<Obs> word) : word_(std::move(word)) {
    if (word_.empty()) throw length_underflow("CylinderFunctional: empty word");
    for (const auto& phi : word_) {
      if (!same_carrier(phi, word_.front())) throw carrier_mismatch("CylinderFunctional: observables on different carriers");
    }
  }
  CylinderFunctional(std::initializer_list<Obs> word) : CylinderFunctional(std::vector<Obs>(word)) {}

  std::size_t size() const { return word_.size(); }
  const Obs& operator[](std::size_t i) const { return word_[i]; }
  const std::vector<Obs>& word() const { return word_; }

  /// (phi_1, ..., phi_n, extra).
  CylinderFunctional appended(const Obs& extra) const {
    auto w = word_;
    w.push_back(extra);
    return CylinderFunctional(std::move(w));
  }

  /// f o sigma = (1, phi_1, ..., phi_n), with `one` the constant function.
  CylinderFunctional shifted(const Obs& one) const {
    std::vector<Obs> w;
    w.reserve(word_.size() + 1);
    w.push_back(one);
    w.insert(w.end(), word_.begin(), word_.end());
    return CylinderFunctional(std::move(w));
  }

  /// Words dropping the first k factors.
  CylinderFunctional tail(std::size_t k = 1) const {
    if (k >= word_.size()) throw length_underflow("CylinderFunctional: tail of a too short word");
    return CylinderFunctional(std::vector<Obs>(word_.begin() + static_cast<std::ptrdiff_t>(k), word_.end()));
  }

 private:
  std::vector<Obs> word_;
};

template <class Obs>
CylinderFunctional<Obs> make_word(std::vector<Obs> w) {
  return CylinderFunctional<Obs>(std::move(w));
}

/// phi o pi_{k}: (1, ..., 1, phi) with phi at position k (1-based).
template <class Obs>
CylinderFunctional<Obs> at_coordinate(const Obs& phi, const Obs& one, std::size_t k) {
  if (k == 0) throw length_underflow("at_coordinate: coordinates start at 1");
  std::vector<Obs> w(k, one);
  w.back() = phi;
  return CylinderFunctional<Obs>(std::move(w));
}

/// Value of the cylinder functional on a concrete path (x_1, ..., x_m), m >= n.
template <class Obs, class Point>
auto path_value(const CylinderFunctional<Obs>& f, const std::vector<Point>& path) {
  if (path.size() < f.size()) throw length_underflow("path_value: path shorter than the word");
  auto v = evaluate(f[0], path[0]);
  for (std::size_t i = 1; i < f.size(); ++i) v *= evaluate(f[i], path[i]);
  return v;
}

// ---------------------------------------------------------------------------
// Exact expectations.

inline void check_depth(const MatrixOperator&, std::size_t n) {
  if (n > kMaxExactDepth) {
    throw depth_cap_exceeded("exact cylinder expectation: depth " + std::to_string(n) + " exceeds cap " +
                             std::to_string(kMaxExactDepth));
  }
}
inline void check_depth(const CircleRuelle&, std::size_t) {}

inline void check_word_carrier(const MatrixOperator& r, const Vec& phi) {
  check_carrier(phi, r.size(), "cylinder word");
}
inline void check_word_carrier(const CircleRuelle& r, const TrigPoly& phi) { r.weight().check_carrier(phi); }

/// x -> E_x(word) = phi_1 R(phi_2 R(... R(phi_n))), folded right to left.
/// This is V_1^* applied to the word, and also Q_1 of the word read on pi_1.
template <class Op>
typename Op::observable_type expectation_field(const Op& r,
                                               const CylinderFunctional<typename Op::observable_type>& word) {
  check_depth(r, word.size());
  for (const auto& phi : word.word()) check_word_carrier(r, phi);
  auto acc = word[word.size() - 1];
  for (std::size_t i = word.size() - 1; i-- > 0;) acc = multiply(word[i], r.apply(acc));
  return acc;
}

template <class Op>
auto cylinder_expectation(const Op& r, const typename Op::point_type& x,
                          const CylinderFunctional<typename Op::observable_type>& word) {
  return evaluate(expectation_field(r, word), x);
}

/// int E_x(word) dmu(x).
template <class Op, class Measure>
auto sigma_expectation(const Measure& mu, const Op& r, const CylinderFunctional<typename Op::observable_type>& word) {
  return integrate(mu, expectation_field(r, word));
}

/// max_x |E_x(word) - E_x(word, 1)|.
template <class Op>
double kolmogorov_residual(const Op& r, const CylinderFunctional<typename Op::observable_type>& word) {
  const auto a = expectation_field(r, word);
  const auto b = expectation_field(r, word.appended(one_like(r)));
  if constexpr (std::is_same_v<typename Op::observable_type, Vec>) {
    return (a - b).cwiseAbs().maxCoeff();
  } else {
    return coeff_distance(a, b);
  }
}

// ---------------------------------------------------------------------------
// Ensembles.

template <class Point>
struct PathEnsemble {
  /// Empty when roots were drawn from a measure.
  std::optional<Point> root;
  std::size_t depth = 0;
  std::uint64_t seed = 0;
  std::string fingerprint;
  /// Global index of samples.front(); sample i used stream make_stream(seed, first_index + i).
  std::uint64_t first_index = 0;
  std::vector<std::vector<Point>> samples;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
};

/// Concatenates two consecutive chunks of the same experiment.
template <class Point>
PathEnsemble<Point> merge(PathEnsemble<Point> a, PathEnsemble<Point> b) {
  if (a.root != b.root || a.depth != b.depth || a.seed != b.seed || a.fingerprint != b.fingerprint) {
    throw std::invalid_argument("merge: ensembles come from different experiments");
  }
  if (b.first_index != a.first_index + a.samples.size()) {
    throw std::invalid_argument("merge: chunks are not consecutive");
  }
  a.samples.insert(a.samples.end(), std::make_move_iterator(b.samples.begin()),
                   std::make_move_iterator(b.samples.end()));
  return a;
}

template <class Gen>
std::size_t draw_from_row(const Mat& k, std::size_t x, Gen& g) {
  const double u = uniform01(g);
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (Eigen::Index y = 0; y < k.cols(); ++y) {
    const double p = k(static_cast<Eigen::Index>(x), y);
    if (p <= 0.0) continue;
    acc += p;
    last_positive = static_cast<std::size_t>(y);
    if (u < acc) return last_positive;
  }
  return last_positive;
}

template <class Gen>
std::size_t draw_from_measure(const FiniteMeasure& mu, Gen& g) {
  const double u = uniform01(g);
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t x = 0; x < mu.size(); ++x) {
    if (mu(x) <= 0.0) continue;
    acc += mu(x);
    last_positive = x;
    if (u < acc) return x;
  }
  return last_positive;
}

/// One step of the walk with transition probabilities K[x][.].
template <class Gen>
std::size_t step(const MatrixOperator& r, std::size_t x, Gen& g) {
  return draw_from_row(r.matrix(), x, g);
}

/// One backward step on the circle: u in {sqrt z, -sqrt z} with probability W(u).
template <class Gen>
Angle step(const CircleRuelle& r, const Angle& z, Gen& g) {
  const auto roots = z.square_roots();
  return uniform01(g) < r.branch_probability(roots[0]) ? roots[0] : roots[1];
}

inline void check_sampler(const MatrixOperator& r) {
  if (r.unital_residual() > MatrixOperator::kRowTolerance) throw not_markov("sample_paths: unnormalized transition row");
}
inline void check_sampler(const CircleRuelle&) {}

namespace detail {

template <class Op, class RootFn>
PathEnsemble<typename Op::point_type> sample_chunk(const Op& r, RootFn root_fn, std::size_t depth,
                                                   std::uint64_t begin, std::uint64_t end, std::uint64_t seed) {
  PathEnsemble<typename Op::point_type> out;
  out.depth = depth;
  out.seed = seed;
  out.fingerprint = r.fingerprint();
  out.first_index = begin;
  out.samples.reserve(static_cast<std::size_t>(end - begin));
  for (std::uint64_t i = begin; i < end; ++i) {
    auto g = make_stream(seed, i);
    std::vector<typename Op::point_type> path;
    path.reserve(depth);
    path.push_back(root_fn(g));
    for (std::size_t k = 1; k < depth; ++k) path.push_back(step(r, path.back(), g));
    out.samples.push_back(std::move(path));
  }
  return out;
}

template <class Op, class RootFn>
PathEnsemble<typename Op::point_type> sample_parallel(const Op& r, RootFn root_fn, std::size_t depth,
                                                      std::size_t count, std::uint64_t seed, unsigned threads) {
  if (depth == 0) throw length_underflow("sample_paths: depth must be at least 1");
  check_sampler(r);
  if (threads == 0) threads = std::max(1U, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(count / 1024, 1)));
  std::vector<PathEnsemble<typename Op::point_type>> chunks(threads);
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    const std::uint64_t begin = count * t / threads, end = count * (t + 1) / threads;
    pool.emplace_back([&, t, begin, end] { chunks[t] = sample_chunk(r, root_fn, depth, begin, end, seed); });
  }
  for (auto& th : pool) th.join();
  auto out = std::move(chunks[0]);
  for (unsigned t = 1; t < threads; ++t) out = merge(std::move(out), std::move(chunks[t]));
  return out;
}

}  // namespace detail

/// `count` i.i.d. paths (x_1 = root, x_2, ..., x_depth) under P_root.
template <class Op>
PathEnsemble<typename Op::point_type> sample_paths(const Op& r, const typename Op::point_type& root, std::size_t depth,
                                                   std::size_t count, std::uint64_t seed, unsigned threads = 0) {
  auto ens = detail::sample_parallel(r, [root](auto&) { return root; }, depth, count, seed, threads);
  ens.root = root;
  return ens;
}

/// Paths under Sigma: x_1 ~ mu, then the walk.
inline PathEnsemble<std::size_t> sample_paths(const MatrixOperator& r, const FiniteMeasure& mu, std::size_t depth,
                                              std::size_t count, std::uint64_t seed, unsigned threads = 0) {
  if (mu.size() != r.size()) throw carrier_mismatch("sample_paths: measure size");
  return detail::sample_parallel(r, [&mu](auto& g) { return draw_from_measure(mu, g); }, depth, count, seed, threads);
}

/// Circle paths whose roots are uniform rationals j / root_den.
inline PathEnsemble<Angle> sample_paths(const CircleRuelle& r, const HaarMeasure&, std::int64_t root_den,
                                        std::size_t depth, std::size_t count, std::uint64_t seed,
                                        unsigned threads = 0) {
  auto root_fn = [root_den](auto& g) {
    const auto j = static_cast<std::int64_t>(uniform01(g) * static_cast<double>(root_den));
    return Angle(j, root_den);
  };
  return detail::sample_parallel(r, root_fn, depth, count, seed, threads);
}

// ---------------------------------------------------------------------------
// Monte Carlo.

struct McEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
  std::size_t n = 0;

  /// |mean - exact| <= k standard errors.
  bool within(double exact, double k = 3.0) const { return std::abs(mean - exact) <= k * stderr_; }
};

inline McEstimate mc_from_values(const std::vector<double>& v) {
  McEstimate e;
  e.n = v.size();
  if (v.empty()) return e;
  double s = 0.0;
  for (double x : v) s += x;
  e.mean = s / static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - e.mean) * (x - e.mean);
    e.stderr_ = std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
  }
  return e;
}

/// Sample mean of a black-box path function. An ensemble is required.
template <class Point, class F>
  requires std::invocable<F&, const std::vector<Point>&>
McEstimate mc_estimate(const PathEnsemble<Point>& ens, F&& f) {
  if (ens.empty()) throw needs_samples("mc_estimate: path function needs a non-empty sample ensemble");
  std::vector<double> v;
  v.reserve(ens.size());
  for (const auto& path : ens.samples) v.push_back(static_cast<double>(std::real(f(path))));
  return mc_from_values(v);
}

template <class Point, class Obs>
McEstimate mc_estimate(const PathEnsemble<Point>& ens, const CylinderFunctional<Obs>& word) {
  if (!ens.empty() && ens.depth < word.size()) throw length_underflow("mc_estimate: ensemble shallower than the word");
  return mc_estimate(ens, [&word](const std::vector<Point>& p) { return path_value(word, p); });
}

// ---------------------------------------------------------------------------
// V_1, V_1^*, Q_1, V_2^*.

/// V_1 phi = phi o pi_1.
template <class Obs>
CylinderFunctional<Obs> v1(const Obs& phi) {
  return CylinderFunctional<Obs>({phi});
}

/// V_1^* f = E_.(f) for a cylinder functional.
template <class Op>
typename Op::observable_type v1_star(const Op& r, const CylinderFunctional<typename Op::observable_type>& f) {
  return expectation_field(r, f);
}

/// V_1^* f at the ensemble's root for a black-box path function.
template <class Point, class F>
McEstimate v1_star_mc(const PathEnsemble<Point>& ens, F&& f) {
  if (!ens.empty() && !ens.root) throw std::invalid_argument("v1_star_mc: ensemble is not rooted at a point");
  return mc_estimate(ens, std::forward<F>(f));
}

/// | ||V_1 phi||^2_Sigma - ||phi||^2_mu |.
inline double v1_isometry_residual(const FiniteMeasure& mu, const MatrixOperator& r, const Vec& phi) {
  const Vec sq = phi.cwiseProduct(phi);
  return std::abs(sigma_expectation(mu, r, v1(sq)) - integrate(mu, sq));
}

/// psi with Q_1(word) = psi o pi_1.
template <class Op>
typename Op::observable_type q1_project(const Op& r, const CylinderFunctional<typename Op::observable_type>& word) {
  return expectation_field(r, word);
}

/// max |V_1^* V_{n+1} phi - R^n phi|.
inline double v1_star_v_residual(const MatrixOperator& r, const Vec& phi, unsigned n) {
  const Vec lhs = v1_star(r, at_coordinate(phi, one_like(r), n + 1));
  return (lhs - apply_power(r, phi, n)).cwiseAbs().maxCoeff();
}

/// V_2^*(word) = R^*(phi_1) * phi_2 R(phi_3 ... R(phi_n)).
template <class Op, class Measure>
typename Op::observable_type v2_star(const Op& r, const Measure& mu,
                                     const CylinderFunctional<typename Op::observable_type>& word) {
  auto head = adjoint_apply(r, mu, word[0]);
  if (word.size() == 1) return head;
  return multiply(head, expectation_field(r, word.tail()));
}

/// max_x |E_x(f o sigma) - R'(E_. f)(x)| over a battery, with E computed
/// from `r_sigma` and R' = `r_candidate`.
template <class Op>
double characterization_residual(const Op& r_sigma, const Op& r_candidate,
                                 const std::vector<CylinderFunctional<typename Op::observable_type>>& battery) {
  double worst = 0.0;
  for (const auto& f : battery) {
    const auto lhs = expectation_field(r_sigma, f.shifted(one_like(r_sigma)));
    const auto rhs = r_candidate.apply(expectation_field(r_sigma, f));
    if constexpr (std::is_same_v<typename Op::observable_type, Vec>) {
      worst = std::max(worst, (lhs - rhs).cwiseAbs().maxCoeff());
    } else {
      worst = std::max(worst, coeff_distance(lhs, rhs));
    }
  }
  return worst;
}

template <class Op>
double characterization_residual(const Op& r,
                                 const std::vector<CylinderFunctional<typename Op::observable_type>>& battery) {
  return characterization_residual(r, r, battery);
}

// ---------------------------------------------------------------------------
// The process X_n(phi) = phi o pi_n.

/// E(X_n(phi) X_{n+k}(psi)) = int phi R^k(psi) dmu under stationarity.
inline double correlation(const FiniteMeasure& mu, const MatrixOperator& r, const Vec& phi, const Vec& psi, unsigned k) {
  return integrate(mu, phi.cwiseProduct(apply_power(r, psi, k)));
}

/// Sample estimate of E(phi(x_n) psi(x_{n+k})) from a mu-rooted ensemble.
inline McEstimate correlation_mc(const PathEnsemble<std::size_t>& ens, const Vec& phi, const Vec& psi, std::size_t n,
                                 unsigned k) {
  if (n == 0) throw length_underflow("correlation_mc: coordinates start at 1");
  if (!ens.empty() && ens.depth < n + k) throw length_underflow("correlation_mc: ensemble too shallow");
  return mc_estimate(ens, [&](const std::vector<std::size_t>& p) {
    return evaluate(phi, p[n - 1]) * evaluate(psi, p[n - 1 + k]);
  });
}

struct DecayFit {
  double limit = 0.0;
  double rate = 0.0;
  std::vector<double> values;
};

/// Fits c_k - limit ~ C rate^k by least squares on log|c_k - limit|, k = 0..kmax,
/// with limit = (int phi dmu)(int psi dmu).
inline DecayFit correlation_decay(const FiniteMeasure& mu, const MatrixOperator& r, const Vec& phi, const Vec& psi,
                                  unsigned kmax) {
  DecayFit fit;
  fit.limit = integrate(mu, phi) * integrate(mu, psi);
  std::vector<double> ks, ys;
  Vec rk = psi;
  for (unsigned k = 0; k <= kmax; ++k) {
    const double c = integrate(mu, phi.cwiseProduct(rk));
    fit.values.push_back(c);
    const double gap = std::abs(c - fit.limit);
    if (gap > 0.0) {
      ks.push_back(k);
      ys.push_back(std::log(gap));
    }
    rk = r.apply(rk);
  }
  if (ks.size() < 2) return fit;
  const double n = static_cast<double>(ks.size());
  double sk = 0, sy = 0, skk = 0, sky = 0;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    sk += ks[i];
    sy += ys[i];
    skk += ks[i] * ks[i];
    sky += ks[i] * ys[i];
  }
  fit.rate = std::exp((n * sky - sk * sy) / (n * skk - sk * sk));
  return fit;
}

/// Sigma(phi o pi_n <= t), computed as the expectation of (1, ..., 1, [phi <= t]).
inline double marginal_distribution(const FiniteMeasure& mu, const MatrixOperator& r, const Vec& phi, double t,
                                    std::size_t n) {
  const Vec ind = (phi.array() <= t).cast<double>();
  return sigma_expectation(mu, r, at_coordinate(ind, one_like(r), n));
}

inline McEstimate marginal_distribution_mc(const PathEnsemble<std::size_t>& ens, const Vec& phi, double t,
                                           std::size_t n) {
  if (!ens.empty() && ens.depth < n) throw length_underflow("marginal_distribution_mc: ensemble too shallow");
  return mc_estimate(ens, [&](const std::vector<std::size_t>& p) { return evaluate(phi, p[n - 1]) <= t ? 1.0 : 0.0; });
}

// ---------------------------------------------------------------------------
// Harmonic functions and martingales.

inline constexpr double kHarmonicTolerance = 1e-10;

struct HarmonicReport {
  /// max over n <= depth and x of |E_x(h o pi_{n+1}) - h(x)|.
  double martingale_residual = 0.0;
  std::vector<double> per_level;
};

inline HarmonicReport harmonic_correspondence(const MatrixOperator& r, const Vec& h, std::size_t depth) {
  check_carrier(h, r.size(), "harmonic_correspondence");
  if ((r.apply(h) - h).cwiseAbs().maxCoeff() > kHarmonicTolerance) {
    throw not_harmonic("harmonic_correspondence: R h != h");
  }
  HarmonicReport rep;
  for (std::size_t n = 0; n <= depth; ++n) {
    const Vec e = expectation_field(r, at_coordinate(h, one_like(r), n + 1));
    const double res = (e - h).cwiseAbs().maxCoeff();
    rep.per_level.push_back(res);
    rep.martingale_residual = std::max(rep.martingale_residual, res);
  }
  return rep;
}

/// States with K[x][x] = 1.
inline std::vector<bool> absorbing_states(const MatrixOperator& r) {
  std::vector<bool> a(r.size());
  for (std::size_t x = 0; x < r.size(); ++x) a[x] = r(x, x) == 1.0;
  return a;
}

struct AbsorbedEstimate {
  McEstimate estimate;
  /// Walks stopped by the step cap before absorption; excluded from the estimate.
  std::size_t capped = 0;
};

inline constexpr std::size_t kDefaultStepCap = 1'000'000;

/// Runs the walk from x until it reaches an absorbing state and averages
/// h(absorbing state): the a.s. limit of the martingale h(x_n).
inline AbsorbedEstimate martingale_limit_mc(const MatrixOperator& r, const Vec& h, std::size_t x, std::size_t count,
                                            std::uint64_t seed, std::size_t step_cap = kDefaultStepCap) {
  check_carrier(h, r.size(), "martingale_limit_mc");
  check_sampler(r);
  const auto absorbing = absorbing_states(r);
  std::vector<double> values;
  values.reserve(count);
  AbsorbedEstimate out;
  for (std::size_t i = 0; i < count; ++i) {
    auto g = make_stream(seed, i);
    std::size_t y = x;
    std::size_t steps = 0;
    while (!absorbing[y] && steps < step_cap) {
      y = step(r, y, g);
      ++steps;
    }
    if (!absorbing[y]) {
      ++out.capped;
      continue;
    }
    values.push_back(evaluate(h, y));
  }
  out.estimate = mc_from_values(values);
  return out;
}

// ---------------------------------------------------------------------------
// The depth-n cylinder algebra as a finite-dimensional L^2(Sigma).

/// Basis: indicators of the paths (x_1, ..., x_n); inner product diag(masses).
struct CylinderAlgebra {
  std::size_t depth = 0;
  std::vector<std::vector<std::size_t>> paths;
  Vec masses;
  Mat q1;

  static CylinderAlgebra build(const FiniteMeasure& mu, const MatrixOperator& r, std::size_t depth) {
    check_depth(r, depth);
    if (depth == 0) throw length_underflow("CylinderAlgebra: depth must be at least 1");
    CylinderAlgebra a;
    a.depth = depth;
    const std::size_t s = r.size();
    std::size_t total = 1;
    for (std::size_t i = 0; i < depth; ++i) total *= s;
    if (total > 4096) throw depth_cap_exceeded("CylinderAlgebra: too many basis paths");
    a.paths.resize(total);
    a.masses.resize(static_cast<Eigen::Index>(total));
    Vec w(static_cast<Eigen::Index>(total));
    for (std::size_t id = 0; id < total; ++id) {
      std::vector<std::size_t> p(depth);
      std::size_t rest = id;
      for (std::size_t i = depth; i-- > 0;) {
        p[i] = rest % s;
        rest /= s;
      }
      double weight = 1.0;
      for (std::size_t i = 0; i + 1 < depth; ++i) weight *= r(p[i], p[i + 1]);
      w(static_cast<Eigen::Index>(id)) = weight;
      a.masses(static_cast<Eigen::Index>(id)) = mu(p[0]) * weight;
      a.paths[id] = std::move(p);
    }
    // Q_1 chi_p = (E_. chi_p) o pi_1 = w(p) [pi_1 = p_1].
    a.q1 = Mat::Zero(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(total));
    for (std::size_t i = 0; i < total; ++i) {
      for (std::size_t j = 0; j < total; ++j) {
        if (a.paths[i][0] == a.paths[j][0]) {
          a.q1(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = w(static_cast<Eigen::Index>(j));
        }
      }
    }
    return a;
  }

  double idempotence_residual() const { return (q1 * q1 - q1).cwiseAbs().maxCoeff(); }

  /// max |<Q f, g> - <f, Q g>| in L^2(Sigma) over basis pairs.
  double selfadjoint_residual() const {
    const Mat gq = masses.asDiagonal() * q1;
    return (gq - gq.transpose()).cwiseAbs().maxCoeff();
  }
};

/// max_x E_x(word) - min_x E_x(word).
inline double x_spread(const MatrixOperator& r, const CylinderFunctional<Vec>& word) {
  const Vec e = expectation_field(r, word);
  return e.maxCoeff() - e.minCoeff();
}

}  // namespace xferlab

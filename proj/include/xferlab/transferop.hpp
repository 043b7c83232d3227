#pragma once

// Positive unital operators R on C(B).
//
// Finite carriers: a row-stochastic matrix K with (R phi)(x) = sum_y K[x][y] phi(y).
// Circle: a Ruelle weight W >= 0 with sum_{u^2=z} W(u) = 1 and
//   (R phi)(z) = sum_{u^2 = z} W(u) phi(u),
// computed on Fourier coefficients as (R phi)_k = 2 (W phi)_{2k}. For a filter
// m0 the weight is W = |m0|^2 / 2.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "xferlab/errors.hpp"
#include "xferlab/rng.hpp"
#include "xferlab/statespace.hpp"

namespace xferlab {

namespace detail {

inline std::string fnv1a_hex(const void* data, std::size_t bytes, std::uint64_t h = 0xCBF29CE484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < bytes; ++i) {
    h ^= p[i];
    h *= 0x100000001B3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace detail

// ---------------------------------------------------------------------------

class MatrixOperator {
 public:
  using observable_type = Vec;
  using point_type = std::size_t;

  static constexpr double kRowTolerance = 1e-12;

  explicit MatrixOperator(Mat rows) : k_(std::move(rows)) {
    if (k_.rows() == 0 || k_.rows() != k_.cols()) throw not_markov("MatrixOperator: matrix must be square and nonempty");
    if ((k_.array() < 0.0).any()) throw not_markov("MatrixOperator: negative transition weight");
    if (!k_.allFinite()) throw not_markov("MatrixOperator: non-finite entry");
    if (unital_residual() > kRowTolerance) throw not_markov("MatrixOperator: a row does not sum to 1 (R1 != 1)");
  }

  /// Ruelle operator of (r, W): K[x][y] = W(y) when r(y) = x.
  static MatrixOperator ruelle(const FiniteSpace& space, const Vec& weight) {
    check_carrier(weight, space.size(), "MatrixOperator::ruelle");
    Mat k = Mat::Zero(static_cast<Eigen::Index>(space.size()), static_cast<Eigen::Index>(space.size()));
    for (std::size_t y = 0; y < space.size(); ++y) {
      k(static_cast<Eigen::Index>(space.r(y)), static_cast<Eigen::Index>(y)) = weight(static_cast<Eigen::Index>(y));
    }
    return MatrixOperator(std::move(k));
  }

  /// W = 1: the permutation pullback (R phi)(x) = phi(r^{-1}(x)).
  static MatrixOperator ruelle(const FiniteSpace& space) { return ruelle(space, constant_observable(space.size())); }

  std::size_t size() const { return static_cast<std::size_t>(k_.rows()); }
  const Mat& matrix() const { return k_; }
  double operator()(std::size_t x, std::size_t y) const {
    return k_(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y));
  }

  Vec apply(const Vec& phi) const {
    check_carrier(phi, size(), "MatrixOperator::apply");
    return k_ * phi;
  }

  double unital_residual() const { return (k_.rowwise().sum().array() - 1.0).abs().maxCoeff(); }

  std::string fingerprint() const {
    return "matrix:" + detail::fnv1a_hex(k_.data(), sizeof(double) * static_cast<std::size_t>(k_.size()));
  }

  /// Skips validation; for products of already validated operators.
  static MatrixOperator trusted(Mat rows) {
    MatrixOperator op;
    op.k_ = std::move(rows);
    return op;
  }

 private:
  MatrixOperator() = default;
  Mat k_;
};

/// R^k as an operator (k = 0 gives the identity).
inline MatrixOperator power(const MatrixOperator& r, unsigned k) {
  Mat result = Mat::Identity(r.matrix().rows(), r.matrix().cols());
  Mat base = r.matrix();
  while (k > 0) {
    if (k & 1U) result = result * base;
    base = base * base;
    k >>= 1U;
  }
  return MatrixOperator::trusted(std::move(result));
}

// ---------------------------------------------------------------------------

/// Max_k |(R1)_k - delta_{k,0}| for the circle operator with weight w.
inline double ruelle_unital_residual(const TrigPoly& w) {
  double worst = std::abs(2.0 * w[0] - 1.0);
  for (const auto& [n, c] : w.coeffs()) {
    if (n % 2 == 0 && n != 0) worst = std::max(worst, std::abs(2.0 * c));
  }
  return worst;
}

class CircleRuelle {
 public:
  using observable_type = TrigPoly;
  using point_type = Angle;

  static constexpr double kUnitalTolerance = 1e-12;
  static constexpr double kPositivityTolerance = 1e-12;

  explicit CircleRuelle(TrigPoly weight, std::optional<TrigPoly> filter = {})
      : w_(std::move(weight)), m0_(std::move(filter)) {
    if (!w_.is_real(1e-14)) throw not_markov("CircleRuelle: weight is not real-valued");
    if (ruelle_unital_residual(w_) > kUnitalTolerance) throw not_markov("CircleRuelle: R1 != 1");
    if (min_weight_on_grid() < -kPositivityTolerance) throw not_markov("CircleRuelle: weight is negative on the grid");
  }

  /// W = |m0|^2 / 2.
  static CircleRuelle from_filter(const TrigPoly& m0) {
    TrigPoly w(m0.bound(), TrigPoly::product_coeffs(m0.coeffs(), m0.conj().coeffs()));
    w *= 0.5;
    return CircleRuelle(std::move(w), m0);
  }

  /// W = 1/2: the uniform average over the two square roots.
  static CircleRuelle uniform(int bound = kDefaultDegree) { return CircleRuelle(TrigPoly::constant(0.5, bound)); }

  int bound() const { return w_.bound(); }
  const TrigPoly& weight() const { return w_; }
  const std::optional<TrigPoly>& filter() const { return m0_; }

  bool is_uniform() const {
    return w_.coeffs().size() == 1 && w_.coeffs().begin()->first == 0 && w_[0] == cplx(0.5, 0.0);
  }

  TrigPoly apply(const TrigPoly& phi) const {
    w_.check_carrier(phi);
    const auto product = TrigPoly::product_coeffs(w_.coeffs(), phi.coeffs());
    TrigPoly::Coeffs out;
    for (const auto& [n, c] : product) {
      if (n % 2 == 0) out[n / 2] = 2.0 * c;
    }
    return TrigPoly(bound(), out);
  }

  /// Probability of stepping from u^2 to u; the sibling branch gets 1 - p.
  double branch_probability(const Angle& u) const { return std::clamp(w_(u).real(), 0.0, 1.0); }

  double unital_residual() const { return ruelle_unital_residual(w_); }

  /// Min of W on a grid of 8 max(D, 1) points.
  double min_weight_on_grid() const {
    const int g = 8 * std::max(bound(), 1);
    double lo = 1e300;
    for (int j = 0; j < g; ++j) lo = std::min(lo, w_(Angle(j, g)).real());
    return lo;
  }

  std::string fingerprint() const {
    std::vector<double> flat;
    for (const auto& [n, c] : w_.coeffs()) {
      flat.push_back(n);
      flat.push_back(c.real());
      flat.push_back(c.imag());
    }
    return "circle:" + detail::fnv1a_hex(flat.data(), sizeof(double) * flat.size());
  }

 private:
  TrigPoly w_;
  std::optional<TrigPoly> m0_;
};

// ---------------------------------------------------------------------------
// Application, powers, adjoints.

template <class Op>
typename Op::observable_type apply(const Op& r, const typename Op::observable_type& phi) {
  return r.apply(phi);
}

template <class Op>
typename Op::observable_type apply_power(const Op& r, typename Op::observable_type phi, unsigned k) {
  for (unsigned i = 0; i < k; ++i) phi = r.apply(phi);
  return phi;
}

/// Adjoint of R in L^2(B, mu): (R* psi)(y) = sum_x mu(x) K[x][y] psi(x) / mu(y).
inline Vec adjoint_apply(const MatrixOperator& r, const FiniteMeasure& mu, const Vec& psi) {
  check_carrier(psi, r.size(), "adjoint_apply");
  if (mu.size() != r.size()) throw carrier_mismatch("adjoint_apply: measure size");
  if (!mu.full_support()) throw zero_mass("adjoint_apply: measure has a zero-mass state");
  const Vec weighted = mu.weights().cwiseProduct(psi);
  return (r.matrix().transpose() * weighted).cwiseQuotient(mu.weights());
}

/// Circle adjoint under Haar measure: (R* psi)(x) = |m0(x)|^2 psi(r(x)) = 2 W(x) psi(x^2).
inline TrigPoly adjoint_apply(const CircleRuelle& r, const HaarMeasure&, const TrigPoly& psi) {
  return 2.0 * (r.weight() * compose_with_endo(psi));
}

// ---------------------------------------------------------------------------
// Invariant measures.

struct InvariantMeasure {
  FiniteMeasure measure;
  std::size_t closed_classes = 1;
  /// Empty when the invariant measure is unique.
  std::string warning;

  bool unique() const { return closed_classes == 1; }
};

inline constexpr std::size_t kDirectSolveMaxStates = 64;
inline constexpr double kPowerIterationTolerance = 1e-13;
inline constexpr std::size_t kPowerIterationMaxSteps = 1'000'000;

namespace detail {

/// Closed communicating classes of the chain (recurrent classes).
inline std::vector<std::vector<std::size_t>> closed_classes(const Mat& k) {
  const auto n = static_cast<std::size_t>(k.rows());
  std::vector<std::vector<char>> reach(n, std::vector<char>(n, 0));
  for (std::size_t s = 0; s < n; ++s) {
    std::vector<std::size_t> stack{s};
    reach[s][s] = 1;
    while (!stack.empty()) {
      const std::size_t u = stack.back();
      stack.pop_back();
      for (std::size_t v = 0; v < n; ++v) {
        if (k(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(v)) > 0.0 && !reach[s][v]) {
          reach[s][v] = 1;
          stack.push_back(v);
        }
      }
    }
  }
  std::vector<std::vector<std::size_t>> classes;
  std::vector<char> assigned(n, 0);
  for (std::size_t s = 0; s < n; ++s) {
    if (assigned[s]) continue;
    std::vector<std::size_t> cls;
    bool closed = true;
    for (std::size_t v = 0; v < n; ++v) {
      if (reach[s][v] && reach[v][s]) {
        cls.push_back(v);
        assigned[v] = 1;
      } else if (reach[s][v]) {
        closed = false;
      }
    }
    if (closed) classes.push_back(std::move(cls));
  }
  return classes;
}

/// Stationary vector of an irreducible stochastic matrix.
inline Vec irreducible_stationary(const Mat& k) {
  const Eigen::Index n = k.rows();
  if (n == 1) return Vec::Ones(1);
  Vec pi;
  if (static_cast<std::size_t>(n) <= kDirectSolveMaxStates) {
    Mat a = k.transpose() - Mat::Identity(n, n);
    a.row(n - 1).setOnes();
    Vec b = Vec::Zero(n);
    b(n - 1) = 1.0;
    pi = a.fullPivLu().solve(b);
  } else {
    // Lazy chain (K + I)/2 has the same stationary vector and is aperiodic.
    const Mat lazy = 0.5 * (k + Mat::Identity(n, n));
    pi = Vec::Constant(n, 1.0 / static_cast<double>(n));
    for (std::size_t it = 0; it < kPowerIterationMaxSteps; ++it) {
      Vec next = lazy.transpose() * pi;
      next /= next.sum();
      const double delta = (next - pi).lpNorm<1>();
      pi = std::move(next);
      if (delta <= kPowerIterationTolerance) break;
    }
  }
  pi = pi.cwiseMax(0.0);
  return pi / pi.sum();
}

}  // namespace detail

/// Stationary measure mu with mu K = mu. For reducible chains with several
/// closed classes the stationary measure is not unique; the result is then the
/// uniform mixture of the per-class stationary measures and `warning` says so.
inline InvariantMeasure invariant_measure(const MatrixOperator& r) {
  const Mat& k = r.matrix();
  const auto classes = detail::closed_classes(k);
  Vec mu = Vec::Zero(k.rows());
  for (const auto& cls : classes) {
    const auto m = static_cast<Eigen::Index>(cls.size());
    Mat sub(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index j = 0; j < m; ++j) {
        sub(i, j) = k(static_cast<Eigen::Index>(cls[static_cast<std::size_t>(i)]),
                      static_cast<Eigen::Index>(cls[static_cast<std::size_t>(j)]));
      }
    }
    const Vec pi = detail::irreducible_stationary(sub);
    for (Eigen::Index i = 0; i < m; ++i) {
      mu(static_cast<Eigen::Index>(cls[static_cast<std::size_t>(i)])) += pi(i) / static_cast<double>(classes.size());
    }
  }
  mu /= mu.sum();
  InvariantMeasure out{FiniteMeasure(mu), classes.size(), {}};
  if (classes.size() > 1) {
    out.warning = "chain is reducible: " + std::to_string(classes.size()) +
                  " closed classes, invariant measure is not unique (returned the uniform mixture)";
  }
  return out;
}

/// max_y |(mu K)(y) - mu(y)|.
inline double stationarity_residual(const MatrixOperator& r, const FiniteMeasure& mu) {
  if (mu.size() != r.size()) throw carrier_mismatch("stationarity_residual: measure size");
  return (r.matrix().transpose() * mu.weights() - mu.weights()).cwiseAbs().maxCoeff();
}

/// max_{|n| <= D} |int R e_n dHaar - int e_n dHaar|. Zero exactly when Haar
/// measure is R-invariant, which for Ruelle weights means W = 1/2.
inline double haar_stationarity_residual(const CircleRuelle& r) {
  double worst = 0.0;
  for (int n = -r.bound(); n <= r.bound(); ++n) {
    const TrigPoly e = TrigPoly::character(n, r.bound());
    worst = std::max(worst, std::abs(integrate(HaarMeasure{}, r.apply(e)) - integrate(HaarMeasure{}, e)));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// The pull-out axiom R((phi o r) psi) = phi R(psi).

inline constexpr std::uint64_t kBatterySeed = 0x5EED0F7E57BA77E7ULL;

inline double pullout_check(const MatrixOperator& r, const FiniteSpace& space, std::size_t random_pairs = 50,
                            std::uint64_t seed = kBatterySeed) {
  space.require_endo();
  if (space.size() != r.size()) throw carrier_mismatch("pullout_check: operator/space size");
  const std::size_t n = r.size();
  auto residual = [&](const Vec& phi, const Vec& psi) {
    const Vec lhs = r.apply(compose_with_endo(space, phi).cwiseProduct(psi));
    const Vec rhs = phi.cwiseProduct(r.apply(psi));
    return (lhs - rhs).cwiseAbs().maxCoeff();
  };
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) worst = std::max(worst, residual(indicator(n, i), indicator(n, j)));
  }
  for (std::size_t p = 0; p < random_pairs; ++p) {
    auto g = make_stream(seed, p);
    Vec phi(static_cast<Eigen::Index>(n)), psi(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < phi.size(); ++i) phi(i) = 2.0 * uniform01(g) - 1.0;
    for (Eigen::Index i = 0; i < psi.size(); ++i) psi(i) = 2.0 * uniform01(g) - 1.0;
    worst = std::max(worst, residual(phi, psi));
  }
  return worst;
}

/// Random trig poly with coefficients in the unit square, degree <= d.
template <class Gen>
TrigPoly random_trig_poly(Gen& g, int d, int bound) {
  TrigPoly::Coeffs c;
  for (int n = -d; n <= d; ++n) c[n] = cplx(2.0 * uniform01(g) - 1.0, 2.0 * uniform01(g) - 1.0);
  return TrigPoly(bound, c);
}

/// Circle pull-out residual on characters e_a, e_b (|a|,|b| <= d) and random pairs,
/// with d = min(4, D/4) so every intermediate stays inside the truncation.
inline double pullout_check(const CircleRuelle& r, std::size_t random_pairs = 50, std::uint64_t seed = kBatterySeed) {
  const int d = std::min(4, r.bound() / 4);
  auto residual = [&](const TrigPoly& phi, const TrigPoly& psi) {
    const TrigPoly lhs = r.apply(compose_with_endo(phi) * psi);
    const TrigPoly rhs = phi * r.apply(psi);
    return coeff_distance(lhs, rhs);
  };
  double worst = 0.0;
  for (int a = -d; a <= d; ++a) {
    for (int b = -d; b <= d; ++b) {
      worst = std::max(worst, residual(TrigPoly::character(a, r.bound()), TrigPoly::character(b, r.bound())));
    }
  }
  for (std::size_t p = 0; p < random_pairs; ++p) {
    auto g = make_stream(seed, p);
    const TrigPoly phi = random_trig_poly(g, d, r.bound());
    const TrigPoly psi = random_trig_poly(g, d, r.bound());
    worst = std::max(worst, residual(phi, psi));
  }
  return worst;
}

/// max over basis pairs of |int (phi o r) psi dmu - int phi R(psi) dmu|.
/// Under the pull-out axiom this vanishes iff mu o R = mu.
inline double transfer_duality_residual(const MatrixOperator& r, const FiniteSpace& space, const FiniteMeasure& mu) {
  const std::size_t n = r.size();
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const Vec phi = indicator(n, i), psi = indicator(n, j);
      const double lhs = integrate(mu, compose_with_endo(space, phi).cwiseProduct(psi));
      const double rhs = integrate(mu, phi.cwiseProduct(r.apply(psi)));
      worst = std::max(worst, std::abs(lhs - rhs));
    }
  }
  return worst;
}

/// Circle version under Haar measure, over characters of degree <= d.
inline double transfer_duality_residual(const CircleRuelle& r, const HaarMeasure& haar, int d = 4) {
  d = std::min(d, r.bound() / 4);
  double worst = 0.0;
  for (int a = -d; a <= d; ++a) {
    for (int b = -d; b <= d; ++b) {
      const TrigPoly phi = TrigPoly::character(a, r.bound()), psi = TrigPoly::character(b, r.bound());
      const cplx lhs = integrate(haar, compose_with_endo(phi) * psi);
      const cplx rhs = integrate(haar, phi * r.apply(psi));
      worst = std::max(worst, std::abs(lhs - rhs));
    }
  }
  return worst;
}

/// max over a battery of |(||m (f o r)||^2 - ||f||^2)| in L^2(T, Haar).
/// Zero iff the operator built from |m|^2 is unital.
inline double weighted_composition_isometry_residual(const TrigPoly& m, std::size_t random_polys = 20,
                                                     std::uint64_t seed = kBatterySeed) {
  const int d = std::max(0, (m.bound() - m.degree()) / 2);
  const int dd = std::min(d, 4);
  auto residual = [&](const TrigPoly& f) {
    return std::abs((m * compose_with_endo(f)).l2_norm_squared() - f.l2_norm_squared());
  };
  double worst = 0.0;
  for (int a = -dd; a <= dd; ++a) worst = std::max(worst, residual(TrigPoly::character(a, m.bound())));
  for (std::size_t p = 0; p < random_polys; ++p) {
    auto g = make_stream(seed, p);
    worst = std::max(worst, residual(random_trig_poly(g, dd, m.bound())));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Integral kernels.

class IntegralKernel {
 public:
  static constexpr double kNormalizationTolerance = 1e-10;

  IntegralKernel(Mat values, FiniteMeasure quadrature) : k_(std::move(values)), mu_(std::move(quadrature)) {
    if (k_.rows() != k_.cols() || static_cast<std::size_t>(k_.rows()) != mu_.size()) {
      throw carrier_mismatch("IntegralKernel: grid size mismatch");
    }
    if ((k_.array() < 0.0).any()) throw normalization_error("IntegralKernel: negative kernel value");
    if (normalization_residual() > kNormalizationTolerance) {
      throw normalization_error("IntegralKernel: int K(x, y) dmu(y) != 1");
    }
  }

  static IntegralKernel on_uniform_grid(Mat values) {
    const auto n = static_cast<std::size_t>(values.rows());
    return IntegralKernel(std::move(values), FiniteMeasure::uniform(n));
  }

  const Mat& values() const { return k_; }
  const FiniteMeasure& quadrature() const { return mu_; }

  double normalization_residual() const { return ((k_ * mu_.weights()).array() - 1.0).abs().maxCoeff(); }

 private:
  Mat k_;
  FiniteMeasure mu_;
};

/// R_K f(x_i) = sum_j K(x_i, y_j) f(y_j) mu(y_j) on the grid.
inline MatrixOperator kernel_operator(const IntegralKernel& kernel) {
  Mat rows = kernel.values() * kernel.quadrature().weights().asDiagonal();
  // Normalization was certified at 1e-10; renormalize rows so R1 = 1 holds
  // to the operator tolerance.
  rows.array().colwise() /= rows.rowwise().sum().array();
  return MatrixOperator(std::move(rows));
}

}  // namespace xferlab

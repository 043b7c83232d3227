#pragma once

// Quadrature mirror filters, the cascade algorithm for
//   phi(x) = sqrt(2) sum_n h_n phi(2x - n),
// and the wavelet representation on the circle solenoid with
//   U f = (m0 o pi_1)(f o rhat),  pi(g) f = (g o pi_1) f,  phi = 1.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <numbers>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "xferlab/errors.hpp"
#include "xferlab/pathmeasure.hpp"
#include "xferlab/solenoid.hpp"
#include "xferlab/statespace.hpp"
#include "xferlab/transferop.hpp"

namespace xferlab {

class QmfFilter {
 public:
  QmfFilter(std::vector<cplx> coeffs, int offset = 0) : h_(std::move(coeffs)), offset_(offset) {
    if (h_.empty()) throw std::invalid_argument("QmfFilter: no coefficients");
  }

  static QmfFilter haar() { return QmfFilter({std::numbers::sqrt2 / 2, std::numbers::sqrt2 / 2}); }

  /// Daubechies' four-tap filter (1 + s3, 3 + s3, 3 - s3, 1 - s3) / (4 sqrt 2).
  static QmfFilter daubechies4() {
    const double s3 = std::sqrt(3.0);
    const double d = 4.0 * std::numbers::sqrt2;
    return QmfFilter({(1 + s3) / d, (3 + s3) / d, (3 - s3) / d, (1 - s3) / d});
  }

  /// 1/sqrt 2 at 0 and gap + 1, zeros between; phi = chi_[0, gap+1) / (gap + 1).
  /// gap = 1 has sum sqrt 2 but violates the QMF identity (residual 1/2);
  /// gap = 2 is a QMF whose translates are not orthogonal.
  static QmfFilter stretched_haar(int gap = 1) {
    if (gap < 0) throw std::invalid_argument("stretched_haar: negative gap");
    std::vector<cplx> c(static_cast<std::size_t>(gap) + 2, cplx{});
    c.front() = c.back() = std::numbers::sqrt2 / 2;
    return QmfFilter(std::move(c));
  }

  const std::vector<cplx>& coeffs() const { return h_; }
  int offset() const { return offset_; }
  std::size_t length() const { return h_.size(); }
  /// h_n with n the absolute index; zero off the support.
  cplx operator[](int n) const {
    const int k = n - offset_;
    return k >= 0 && k < static_cast<int>(h_.size()) ? h_[static_cast<std::size_t>(k)] : cplx{};
  }
  int first() const { return offset_; }
  int last() const { return offset_ + static_cast<int>(h_.size()) - 1; }

  /// m0(z) = sum h_n z^n.
  TrigPoly m0(int bound = kDefaultDegree) const {
    TrigPoly::Coeffs c;
    for (std::size_t k = 0; k < h_.size(); ++k) c[offset_ + static_cast<int>(k)] = h_[k];
    return TrigPoly(bound, c);
  }

  cplx sum() const {
    cplx s{};
    for (auto v : h_) s += v;
    return s;
  }

 private:
  std::vector<cplx> h_;
  int offset_;
};

struct QmfReport {
  /// max_n |sum_k h_k conj(h_{k-2n}) - delta_{n,0}|.
  double coefficient_residual = 0.0;
  /// max over the grid of |(1/2)(|m0(w)|^2 + |m0(-w)|^2) - 1|.
  double grid_residual = 0.0;
  /// |sum h_n - sqrt 2|.
  double normalization_residual = 0.0;
};

inline QmfReport qmf_check(const QmfFilter& h, int grid = kDefaultGrid) {
  QmfReport rep;
  const int span = static_cast<int>(h.length());
  for (int n = -span; n <= span; ++n) {
    cplx s{};
    for (int k = h.first(); k <= h.last(); ++k) s += h[k] * std::conj(h[k - 2 * n]);
    rep.coefficient_residual = std::max(rep.coefficient_residual, std::abs(s - (n == 0 ? 1.0 : 0.0)));
  }
  const int bound = std::max(std::abs(h.first()), std::abs(h.last()));
  const TrigPoly m = h.m0(bound);
  for (int j = 0; j < grid; ++j) {
    const Angle w(j, grid);
    const Angle minus_w = w + Angle(1, 2);
    const double v = 0.5 * (std::norm(m(w)) + std::norm(m(minus_w)));
    rep.grid_residual = std::max(rep.grid_residual, std::abs(v - 1.0));
  }
  rep.normalization_residual = std::abs(h.sum() - std::numbers::sqrt2);
  return rep;
}

inline constexpr double kCascadeQmfTolerance = 1e-10;

// ---------------------------------------------------------------------------
// Cascade.

/// Piecewise-constant function on cells [left + j/S, left + (j+1)/S), S = 2^J.
struct ScalingFunction {
  int J = 0;
  int left = 0;
  std::vector<cplx> values;
  /// residuals[k] = || phi_k - C phi_k ||_inf for k = 0..iterations.
  std::vector<double> residuals;

  std::int64_t cells_per_unit() const { return std::int64_t{1} << J; }
  /// Absolute index of the first cell: left * S.
  std::int64_t base() const { return static_cast<std::int64_t>(left) * cells_per_unit(); }
  double right() const { return left + static_cast<double>(values.size()) / static_cast<double>(cells_per_unit()); }

  /// Value on the absolute cell c (zero outside the domain).
  cplx cell(std::int64_t c) const {
    const std::int64_t i = c - base();
    return i >= 0 && i < static_cast<std::int64_t>(values.size()) ? values[static_cast<std::size_t>(i)] : cplx{};
  }

  cplx operator()(double x) const {
    return cell(static_cast<std::int64_t>(std::floor(x * static_cast<double>(cells_per_unit()))));
  }

  cplx integral() const {
    cplx s{};
    for (auto v : values) s += v;
    return s / static_cast<double>(cells_per_unit());
  }

  double final_residual() const { return residuals.empty() ? 0.0 : residuals.back(); }
};

namespace detail {

/// One cascade step on cell averages:
/// new[c] = sqrt 2 sum_n h_n (phi[2c - nS] + phi[2c - nS + 1]) / 2.
inline std::vector<cplx> cascade_step(const QmfFilter& h, const ScalingFunction& phi) {
  const std::int64_t s = phi.cells_per_unit();
  std::vector<cplx> out(phi.values.size());
  for (std::size_t j = 0; j < out.size(); ++j) {
    const std::int64_t c = phi.base() + static_cast<std::int64_t>(j);
    cplx acc{};
    for (int n = h.first(); n <= h.last(); ++n) {
      const cplx hn = h[n];
      if (hn == cplx{}) continue;
      const std::int64_t src = 2 * c - n * s;
      acc += hn * (phi.cell(src) + phi.cell(src + 1));
    }
    out[j] = std::numbers::sqrt2 * 0.5 * acc;
  }
  return out;
}

inline double sup_distance(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

}  // namespace detail

inline constexpr int kDivergenceRun = 3;

/// Iterates the refinement operator from the indicator of [0, 1).
/// Throws divergence_error when the residual grows kDivergenceRun times in a row.
/// With require_qmf = false only the normalization sum h = sqrt 2 is enforced.
inline ScalingFunction cascade(const QmfFilter& h, int iterations, int J, bool require_qmf = true) {
  if (iterations < 0) throw std::invalid_argument("cascade: negative iteration count");
  if (J < 0 || J > 20) throw std::invalid_argument("cascade: resolution J must be in [0, 20]");
  const auto check = qmf_check(h);
  if (check.normalization_residual > kCascadeQmfTolerance) {
    throw std::invalid_argument("cascade: sum of coefficients is not sqrt 2");
  }
  if (require_qmf && check.coefficient_residual > kCascadeQmfTolerance) {
    throw std::invalid_argument("cascade: filter is not a QMF");
  }
  ScalingFunction phi;
  phi.J = J;
  phi.left = std::min(h.first(), 0);
  const int right = std::max(h.last(), 1);
  const std::int64_t s = phi.cells_per_unit();
  phi.values.assign(static_cast<std::size_t>((right - phi.left) * s), cplx{});
  for (std::int64_t c = 0; c < s; ++c) phi.values[static_cast<std::size_t>(c - phi.base())] = 1.0;

  std::vector<cplx> next = detail::cascade_step(h, phi);
  phi.residuals.push_back(detail::sup_distance(phi.values, next));
  int growth = 0;
  for (int k = 1; k <= iterations; ++k) {
    phi.values = std::move(next);
    next = detail::cascade_step(h, phi);
    phi.residuals.push_back(detail::sup_distance(phi.values, next));
    growth = phi.residuals[static_cast<std::size_t>(k)] > phi.residuals[static_cast<std::size_t>(k - 1)] ? growth + 1 : 0;
    if (growth >= kDivergenceRun) {
      throw divergence_error("cascade: refinement residual grew for " + std::to_string(kDivergenceRun) +
                             " consecutive iterations");
    }
  }
  return phi;
}

struct TranslateCorrelation {
  /// a(k) = int phi(x) conj(phi(x - k)) dx for k in [-K, K].
  std::map<int, cplx> a;
  double max_offdiagonal = 0.0;
  double diagonal_deviation = 0.0;

  bool orthonormal(double tol) const { return max_offdiagonal <= tol && diagonal_deviation <= tol; }
};

inline TranslateCorrelation translate_orthogonality(const ScalingFunction& phi) {
  TranslateCorrelation out;
  const std::int64_t s = phi.cells_per_unit();
  const int width = static_cast<int>((static_cast<std::int64_t>(phi.values.size()) + s - 1) / s);
  for (int k = -width; k <= width; ++k) {
    cplx acc{};
    for (std::size_t j = 0; j < phi.values.size(); ++j) {
      const std::int64_t c = phi.base() + static_cast<std::int64_t>(j);
      acc += phi.values[j] * std::conj(phi.cell(c - k * s));
    }
    acc /= static_cast<double>(s);
    out.a[k] = acc;
    if (k == 0) {
      out.diagonal_deviation = std::abs(acc - 1.0);
    } else {
      out.max_offdiagonal = std::max(out.max_offdiagonal, std::abs(acc));
    }
  }
  return out;
}

struct AutocorrelationReport {
  /// Multiplicity of the eigenvalue 1 of T_{kl} = A(l - 2k) on |k|, |l| <= L - 1.
  int fixed_dimension = 0;
  /// Largest modulus among the remaining eigenvalues.
  double subdominant = 0.0;
};

/// Filter-domain orthogonality test: the autocorrelation a(k) of phi is a
/// fixed point of T with A(j) = sum_n h_n conj(h_{n+j}); delta is always one.
/// Translates are orthonormal iff the fixed space is one-dimensional.
inline AutocorrelationReport autocorrelation_fixed_space(const QmfFilter& h, double tol = 1e-8) {
  const int l = static_cast<int>(h.length());
  const int m = 2 * l - 1;
  auto a = [&](int j) {
    cplx s{};
    for (int n = h.first(); n <= h.last(); ++n) s += h[n] * std::conj(h[n + j]);
    return s;
  };
  Eigen::MatrixXcd t(m, m);
  for (int k = 0; k < m; ++k) {
    for (int c = 0; c < m; ++c) t(k, c) = a((c - (l - 1)) - 2 * (k - (l - 1)));
  }
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(t, false);
  AutocorrelationReport rep;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    const cplx lambda = es.eigenvalues()(i);
    if (std::abs(lambda - 1.0) < tol) {
      ++rep.fixed_dimension;
    } else {
      rep.subdominant = std::max(rep.subdominant, std::abs(lambda));
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// S_0, W, U on the real line.

/// S_0 xi = m0 (xi o r).
inline TrigPoly s0(const QmfFilter& h, const TrigPoly& xi) { return h.m0(xi.bound()) * compose_with_endo(xi); }

/// max over characters and random trig polys of | ||S_0 xi||^2 - ||xi||^2 |.
inline double s0_isometry_residual(const QmfFilter& h, int bound = kDefaultDegree) {
  return weighted_composition_isometry_residual(h.m0(bound));
}

/// W xi = sum_n xi^(n) phi(. - n) as cell values indexed by absolute cell.
inline std::map<std::int64_t, cplx> synthesize(const ScalingFunction& phi, const TrigPoly& xi) {
  std::map<std::int64_t, cplx> out;
  const std::int64_t s = phi.cells_per_unit();
  for (const auto& [n, c] : xi.coeffs()) {
    for (std::size_t j = 0; j < phi.values.size(); ++j) {
      out[phi.base() + static_cast<std::int64_t>(j) + n * s] += c * phi.values[j];
    }
  }
  return out;
}

/// Grid residual of W S_0 xi = U W xi, checked as U^{-1} W S_0 xi = W xi with
/// (U^{-1} g) = sqrt 2 g(2 .), whose cell average on c is sqrt 2 (g[2c] + g[2c+1]) / 2.
inline double intertwining_residual(const QmfFilter& h, const ScalingFunction& phi, const TrigPoly& xi) {
  const auto g = synthesize(phi, s0(h, xi));
  const auto w = synthesize(phi, xi);
  auto at = [](const std::map<std::int64_t, cplx>& f, std::int64_t c) {
    auto it = f.find(c);
    return it == f.end() ? cplx{} : it->second;
  };
  if (g.empty() && w.empty()) return 0.0;
  std::int64_t lo = std::numeric_limits<std::int64_t>::max(), hi = std::numeric_limits<std::int64_t>::min();
  if (!w.empty()) {
    lo = w.begin()->first;
    hi = w.rbegin()->first;
  }
  if (!g.empty()) {
    lo = std::min(lo, g.begin()->first / 2 - 1);
    hi = std::max(hi, g.rbegin()->first / 2 + 1);
  }
  double worst = 0.0;
  for (std::int64_t c = lo; c <= hi; ++c) {
    const cplx lhs = std::numbers::sqrt2 * 0.5 * (at(g, 2 * c) + at(g, 2 * c + 1));
    worst = std::max(worst, std::abs(lhs - at(w, c)));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// The wavelet representation on L^2(Sol(r), Sigma) with mu = Haar.

struct RepresentationReport {
  /// max |<pi(f) g, h> - <pi(f o r) U g, U h>| (equivalent to U pi(f) U^* = pi(f o r) for isometric U).
  double w1 = 0.0;
  /// || U 1 - pi(m0) 1 ||.
  double w2 = 0.0;
  /// max |<pi(f) 1, 1> - int f dmu|.
  double w3 = 0.0;
  /// dim span{U^{-k} pi(f) 1 : k <= n} for n = 0, 1, ...
  std::vector<int> w4_dimensions;
  /// Grid points where |m0| < 1e-12.
  int grid_zeros = 0;

  bool w4_strictly_increasing() const {
    for (std::size_t i = 1; i < w4_dimensions.size(); ++i) {
      if (w4_dimensions[i] <= w4_dimensions[i - 1]) return false;
    }
    return !w4_dimensions.empty();
  }
};

/// Words of depth <= d in characters e_a, |a| <= k.
inline std::vector<CylinderFunctional<TrigPoly>> character_words(int k, std::size_t d, int bound) {
  std::vector<CylinderFunctional<TrigPoly>> out;
  std::vector<std::vector<int>> frontier{{}};
  for (std::size_t depth = 1; depth <= d; ++depth) {
    std::vector<std::vector<int>> next;
    for (const auto& p : frontier) {
      for (int a = -k; a <= k; ++a) {
        auto q = p;
        q.push_back(a);
        std::vector<TrigPoly> w;
        for (int s : q) w.push_back(TrigPoly::character(s, bound));
        out.emplace_back(std::move(w));
        next.push_back(std::move(q));
      }
    }
    frontier = std::move(next);
  }
  return out;
}

/// pi(f) g = (f o pi_1) g.
inline CylinderFunctional<TrigPoly> pi_apply(const TrigPoly& f, const CylinderFunctional<TrigPoly>& g) {
  auto w = g.word();
  w[0] = f * w[0];
  return CylinderFunctional<TrigPoly>(std::move(w));
}

/// <a, b> in L^2(Sigma).
inline cplx sigma_inner(const CircleRuelle& r, const CylinderFunctional<TrigPoly>& a,
                        const CylinderFunctional<TrigPoly>& b) {
  return sigma_expectation(HaarMeasure{}, r, word_product(a, conj_word(b), one_like(r)));
}

/// Numerical rank of a Hermitian Gram matrix.
inline int gram_rank(const Eigen::MatrixXcd& g, double rel_tol = 1e-9) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(g, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  const double top = ev.cwiseAbs().maxCoeff();
  int rank = 0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) rank += ev(i) > rel_tol * std::max(top, 1e-300) ? 1 : 0;
  return rank;
}

/// Checks the covariance, scaling, orthogonality and density relations of the
/// solenoid realization with mu = Haar, R from |m0|^2 / 2, on character words
/// e_a, |a| <= 1, up to the given depth. Density is reported as span growth over
/// `levels` levels using the forward images U^{n-k} pi(e_a) 1, which span a
/// space of the same dimension as {U^{-k} pi(e_a) 1} since U is isometric.
inline RepresentationReport representation_check(const QmfFilter& h, std::size_t depth, int levels = 4,
                                                 int bound = kDefaultDegree) {
  const TrigPoly m = h.m0(bound);
  if (m.empty()) throw singular_filter("representation_check: m0 vanishes identically");
  RepresentationReport rep;
  for (int j = 0; j < kDefaultGrid; ++j) rep.grid_zeros += std::abs(m(Angle(j, kDefaultGrid))) < 1e-12 ? 1 : 0;
  if (rep.grid_zeros > 2 * m.degree()) throw singular_filter("representation_check: m0 vanishes on a set of positive measure");

  const CircleRuelle r = CircleRuelle::from_filter(m);
  const TrigPoly one = one_like(r);
  const auto basis = character_words(1, depth, bound);
  auto lift = [&](const CylinderFunctional<TrigPoly>& f) { return weighted_lift(m, f); };

  for (int a = -1; a <= 1; ++a) {
    const TrigPoly f = TrigPoly::character(a, bound);
    const TrigPoly fr = compose_with_endo(f);
    for (const auto& g : basis) {
      const auto ug = lift(g);
      const auto pfg = pi_apply(f, g);
      const auto pfrug = pi_apply(fr, ug);
      for (const auto& hh : basis) {
        const cplx lhs = sigma_inner(r, pfg, hh);
        const cplx rhs = sigma_inner(r, pfrug, lift(hh));
        rep.w1 = std::max(rep.w1, std::abs(lhs - rhs));
      }
    }
    rep.w3 = std::max(rep.w3, std::abs(sigma_expectation(HaarMeasure{}, r, v1(f)) - integrate(HaarMeasure{}, f)));
  }

  const auto u1 = lift(v1(one));
  const auto pm1 = pi_apply(m, v1(one));
  const auto diff_word = [&] {
    std::vector<TrigPoly> w = u1.word();
    w[0] = w[0] - pm1[0];
    return CylinderFunctional<TrigPoly>(std::move(w));
  }();
  rep.w2 = std::sqrt(std::abs(sigma_inner(r, diff_word, diff_word)));

  for (int n = 0; n < levels; ++n) {
    std::vector<CylinderFunctional<TrigPoly>> vecs;
    for (int a = -1; a <= 1; ++a) {
      for (int k = 0; k <= n; ++k) {
        auto v = v1(TrigPoly::character(a, bound));
        for (int i = 0; i < n - k; ++i) v = lift(v);
        vecs.push_back(v);
      }
    }
    Eigen::MatrixXcd g(static_cast<Eigen::Index>(vecs.size()), static_cast<Eigen::Index>(vecs.size()));
    for (std::size_t i = 0; i < vecs.size(); ++i) {
      for (std::size_t j = 0; j < vecs.size(); ++j) {
        g(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = sigma_inner(r, vecs[i], vecs[j]);
      }
    }
    rep.w4_dimensions.push_back(gram_rank(g));
  }
  return rep;
}

}  // namespace xferlab

#pragma once

// The solenoid Sol(r) = {(x_1, x_2, ...) : r(x_{i+1}) = x_i}, truncated to
// finite depth. sigma drops the head, rhat prepends r(x_1), and
// pi_i o rhat = r o pi_i.

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "xferlab/errors.hpp"
#include "xferlab/pathmeasure.hpp"
#include "xferlab/statespace.hpp"
#include "xferlab/transferop.hpp"

namespace xferlab {

struct CircleDoubling {
  Angle operator()(const Angle& a) const { return a.doubled(); }
};

struct FiniteEndo {
  const FiniteSpace* space;
  std::size_t operator()(std::size_t x) const { return space->r(x); }
};

inline FiniteEndo endo_of(const FiniteSpace& space) {
  space.require_endo();
  return FiniteEndo{&space};
}

template <class Point, class Endo>
class SolenoidWord {
 public:
  SolenoidWord(std::vector<Point> entries, Endo r) : x_(std::move(entries)), r_(r) {
    if (x_.empty()) throw length_underflow("SolenoidWord: empty word");
    for (std::size_t i = 0; i + 1 < x_.size(); ++i) {
      if (!(r_(x_[i + 1]) == x_[i])) {
        throw std::invalid_argument("SolenoidWord: r(x_" + std::to_string(i + 2) + ") != x_" + std::to_string(i + 1));
      }
    }
  }

  std::size_t depth() const { return x_.size(); }
  const std::vector<Point>& entries() const { return x_; }
  const Point& operator[](std::size_t i) const { return x_[i]; }
  const Endo& endo() const { return r_; }

  /// sigma(x)_i = x_{i+1}.
  SolenoidWord shift() const {
    if (x_.size() < 2) throw length_underflow("SolenoidWord::shift: depth 1 word");
    return SolenoidWord(std::vector<Point>(x_.begin() + 1, x_.end()), r_);
  }

  /// rhat(x) = (r(x_1), x_1, x_2, ...).
  SolenoidWord rhat() const {
    std::vector<Point> y;
    y.reserve(x_.size() + 1);
    y.push_back(r_(x_.front()));
    y.insert(y.end(), x_.begin(), x_.end());
    return SolenoidWord(std::move(y), r_);
  }

  /// Coordinatewise r: pi_i(rhat(w)) = r(pi_i(w)).
  std::vector<Point> mapped() const {
    std::vector<Point> y;
    y.reserve(x_.size());
    for (const auto& p : x_) y.push_back(r_(p));
    return y;
  }

  friend bool operator==(const SolenoidWord& a, const SolenoidWord& b) { return a.x_ == b.x_; }

 private:
  std::vector<Point> x_;
  Endo r_;
};

using CircleSolenoidWord = SolenoidWord<Angle, CircleDoubling>;
using FiniteSolenoidWord = SolenoidWord<std::size_t, FiniteEndo>;

/// A random backward orbit of depth n starting at j/den with j uniform.
template <class Gen>
CircleSolenoidWord random_solenoid_word(Gen& g, std::size_t depth, std::int64_t den) {
  std::vector<Angle> y;
  y.push_back(Angle(static_cast<std::int64_t>(uniform01(g) * static_cast<double>(den)), den));
  while (y.size() < depth) y.push_back(y.back().square_roots()[uniform01(g) < 0.5 ? 0 : 1]);
  return CircleSolenoidWord(std::move(y), CircleDoubling{});
}

// ---------------------------------------------------------------------------
// Support on Sol(r).

struct CompatibilityCount {
  std::size_t transitions = 0;
  std::size_t violations = 0;
};

/// Counts sampled steps with r(x_{i+1}) != x_i.
template <class Point, class Endo>
CompatibilityCount compatibility_violations(const PathEnsemble<Point>& ens, Endo r) {
  CompatibilityCount c;
  for (const auto& p : ens.samples) {
    for (std::size_t i = 0; i + 1 < p.size(); ++i) {
      ++c.transitions;
      if (!(r(p[i + 1]) == p[i])) ++c.violations;
    }
  }
  return c;
}

/// P_x(r(x_{i+1}) = x_i for i < n) on a finite carrier:
/// f_1 = 1, f_k(y) = sum_{z : r(z) = y} K[y][z] f_{k-1}(z).
inline double support_mass(const MatrixOperator& r, const FiniteSpace& space, std::size_t x, std::size_t n) {
  space.require_endo();
  if (space.size() != r.size()) throw carrier_mismatch("support_mass: operator/space size");
  if (n == 0) throw length_underflow("support_mass: depth must be at least 1");
  Vec f = constant_observable(r.size());
  for (std::size_t k = 1; k < n; ++k) {
    Vec next = Vec::Zero(f.size());
    for (std::size_t y = 0; y < r.size(); ++y) {
      double s = 0.0;
      for (std::size_t z : space.fiber(y)) s += r(y, z) * f(static_cast<Eigen::Index>(z));
      next(static_cast<Eigen::Index>(y)) = s;
    }
    f = std::move(next);
  }
  return f(static_cast<Eigen::Index>(x));
}

namespace detail {

inline double circle_support_mass(const CircleRuelle& r, const Angle& z, std::size_t remaining) {
  if (remaining == 0) return 1.0;
  const auto roots = z.square_roots();
  double f[2];
  for (int b = 0; b < 2; ++b) {
    // Kernel targets are the two square roots; each is checked against r exactly.
    f[b] = roots[static_cast<std::size_t>(b)].doubled() == z
               ? circle_support_mass(r, roots[static_cast<std::size_t>(b)], remaining - 1)
               : 0.0;
  }
  const double p = r.branch_probability(roots[0]);
  return f[1] + p * (f[0] - f[1]);
}

}  // namespace detail

/// Circle version, summing over all 2^{n-1} backward branches.
inline double support_mass(const CircleRuelle& r, const Angle& x, std::size_t n) {
  if (n == 0) throw length_underflow("support_mass: depth must be at least 1");
  if (n > 24) throw depth_cap_exceeded("support_mass: circle depth above 24");
  return detail::circle_support_mass(r, x, n - 1);
}

// ---------------------------------------------------------------------------
// Shift invariance of Sigma.

/// Depth-1 point indicators plus the constant word.
inline std::vector<CylinderFunctional<Vec>> designated_battery(std::size_t n) {
  std::vector<CylinderFunctional<Vec>> b;
  for (std::size_t i = 0; i < n; ++i) b.push_back(v1(indicator(n, i)));
  b.push_back(v1(constant_observable(n)));
  return b;
}

/// max over the battery of |int f o sigma dSigma - int f dSigma|.
template <class Op, class Measure>
double shift_invariance_residual(const Measure& mu, const Op& r,
                                 const std::vector<CylinderFunctional<typename Op::observable_type>>& battery) {
  double worst = 0.0;
  for (const auto& f : battery) {
    const auto a = sigma_expectation(mu, r, f.shifted(one_like(r)));
    const auto b = sigma_expectation(mu, r, f);
    worst = std::max(worst, static_cast<double>(std::abs(a - b)));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// U f = (m o pi_1)(f o rhat) on cylinder words.


/// f o rhat = (phi_1 o r, ..., phi_n o r).
inline CylinderFunctional<Vec> compose_with_rhat(const FiniteSpace& space, const CylinderFunctional<Vec>& f) {
  std::vector<Vec> w;
  for (const auto& phi : f.word()) w.push_back(compose_with_endo(space, phi));
  return CylinderFunctional<Vec>(std::move(w));
}

inline CylinderFunctional<TrigPoly> compose_with_rhat(const CylinderFunctional<TrigPoly>& f) {
  std::vector<TrigPoly> w;
  for (const auto& phi : f.word()) w.push_back(compose_with_endo(phi));
  return CylinderFunctional<TrigPoly>(std::move(w));
}

/// (m (phi_1 o r), phi_2 o r, ...).
inline CylinderFunctional<TrigPoly> weighted_lift(const TrigPoly& m, const CylinderFunctional<TrigPoly>& f) {
  auto w = compose_with_rhat(f).word();
  w[0] = m * w[0];
  return CylinderFunctional<TrigPoly>(std::move(w));
}

/// Pointwise product of two cylinder words, padding the shorter with `one`.
template <class Obs>
CylinderFunctional<Obs> word_product(const CylinderFunctional<Obs>& a, const CylinderFunctional<Obs>& b,
                                     const Obs& one) {
  const std::size_t n = std::max(a.size(), b.size());
  std::vector<Obs> w;
  w.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Obs& x = i < a.size() ? a[i] : one;
    const Obs& y = i < b.size() ? b[i] : one;
    w.push_back(multiply(x, y));
  }
  return CylinderFunctional<Obs>(std::move(w));
}

/// Complex conjugate of every factor.
inline CylinderFunctional<TrigPoly> conj_word(const CylinderFunctional<TrigPoly>& f) {
  std::vector<TrigPoly> w;
  for (const auto& phi : f.word()) w.push_back(phi.conj());
  return CylinderFunctional<TrigPoly>(std::move(w));
}
inline const CylinderFunctional<Vec>& conj_word(const CylinderFunctional<Vec>& f) { return f; }

struct CovarianceReport {
  /// max |V_1^* U V_1 phi - phi o r| over the observable battery.
  double v1_covariance = 0.0;
  /// max |<M_F U g, U h> - <M_{F o sigma} g, h>| over basis words.
  double multiplication_covariance = 0.0;
  /// max | ||U g||^2 - ||g||^2 | over basis words.
  double norm_preservation = 0.0;
};

/// All indicator words of depth <= d on n states.
inline std::vector<CylinderFunctional<Vec>> indicator_words(std::size_t n, std::size_t d) {
  std::vector<CylinderFunctional<Vec>> out;
  std::vector<std::vector<std::size_t>> frontier{{}};
  for (std::size_t depth = 1; depth <= d; ++depth) {
    std::vector<std::vector<std::size_t>> next;
    for (const auto& p : frontier) {
      for (std::size_t i = 0; i < n; ++i) {
        auto q = p;
        q.push_back(i);
        std::vector<Vec> w;
        for (std::size_t s : q) w.push_back(indicator(n, s));
        out.emplace_back(std::move(w));
        next.push_back(std::move(q));
      }
    }
    frontier = std::move(next);
  }
  return out;
}

/// Covariance relations of U f = f o rhat on a finite carrier, basis words of depth <= d.
inline CovarianceReport covariance_check(const MatrixOperator& r, const FiniteSpace& space, const FiniteMeasure& mu,
                                         std::size_t d) {
  space.require_endo();
  const std::size_t n = r.size();
  const Vec one = one_like(r);
  CovarianceReport rep;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec phi = indicator(n, i);
    const Vec lhs = v1_star(r, compose_with_rhat(space, v1(phi)));
    rep.v1_covariance = std::max(rep.v1_covariance, (lhs - compose_with_endo(space, phi)).cwiseAbs().maxCoeff());
  }
  const auto basis = indicator_words(n, d);
  std::vector<CylinderFunctional<Vec>> multipliers;
  for (std::size_t i = 0; i < n; ++i) multipliers.push_back(v1(indicator(n, i)));
  for (const auto& g : basis) {
    const auto ug = compose_with_rhat(space, g);
    rep.norm_preservation =
        std::max(rep.norm_preservation, std::abs(sigma_expectation(mu, r, word_product(ug, ug, one)) -
                                                 sigma_expectation(mu, r, word_product(g, g, one))));
    for (const auto& h : basis) {
      const auto uh = compose_with_rhat(space, h);
      for (const auto& f : multipliers) {
        if (g.size() + 1 > kMaxExactDepth || h.size() + 1 > kMaxExactDepth) continue;
        const double lhs = sigma_expectation(mu, r, word_product(word_product(f, ug, one), uh, one));
        const double rhs = sigma_expectation(mu, r, word_product(word_product(f.shifted(one), g, one), h, one));
        rep.multiplication_covariance = std::max(rep.multiplication_covariance, std::abs(lhs - rhs));
      }
    }
  }
  return rep;
}

/// Circle covariance relations under Haar measure. The multiplication
/// relation is checked on characters words e_a o pi_1 e_b o pi_2 with
/// |a|, |b| <= k and multipliers F = e_c o pi_1.
inline CovarianceReport covariance_check(const CircleRuelle& r, const HaarMeasure& haar, int k = 2) {
  const int bound = r.bound();
  const TrigPoly one = one_like(r);
  CovarianceReport rep;
  for (int a = -k; a <= k; ++a) {
    const TrigPoly phi = TrigPoly::character(a, bound);
    const TrigPoly lhs = v1_star(r, compose_with_rhat(v1(phi)));
    rep.v1_covariance = std::max(rep.v1_covariance, coeff_distance(lhs, compose_with_endo(phi)));
  }
  std::vector<CylinderFunctional<TrigPoly>> basis;
  for (int a = -k; a <= k; ++a) {
    basis.push_back(v1(TrigPoly::character(a, bound)));
    for (int b = -k; b <= k; ++b) {
      basis.push_back(CylinderFunctional<TrigPoly>({TrigPoly::character(a, bound), TrigPoly::character(b, bound)}));
    }
  }
  for (const auto& g : basis) {
    const auto ug = compose_with_rhat(g);
    rep.norm_preservation = std::max(
        rep.norm_preservation, std::abs(sigma_expectation(haar, r, word_product(ug, conj_word(ug), one)) -
                                        sigma_expectation(haar, r, word_product(g, conj_word(g), one))));
    for (const auto& h : basis) {
      const auto uh = conj_word(compose_with_rhat(h));
      const auto hc = conj_word(h);
      for (int c = -k; c <= k; ++c) {
        const auto f = v1(TrigPoly::character(c, bound));
        const cplx lhs = sigma_expectation(haar, r, word_product(word_product(f, ug, one), uh, one));
        const cplx rhs = sigma_expectation(haar, r, word_product(word_product(f.shifted(one), g, one), hc, one));
        rep.multiplication_covariance = std::max(rep.multiplication_covariance, std::abs(lhs - rhs));
      }
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// E_x(f o rhat) = E_{r(x), x}(f).

/// E(f | pi_1 = x1, pi_2 = x2) under P_{x1}: conditioning by point indicators.
inline double conditional_expectation2(const MatrixOperator& r, std::size_t x1, std::size_t x2,
                                       const CylinderFunctional<Vec>& f) {
  const std::size_t n = r.size();
  const auto cond = CylinderFunctional<Vec>({indicator(n, x1), indicator(n, x2)});
  const double mass = cylinder_expectation(r, x1, cond);
  if (mass <= 0.0) throw zero_mass("conditional_expectation2: P(pi_1 = x1, pi_2 = x2) = 0");
  return cylinder_expectation(r, x1, word_product(f, cond, one_like(r))) / mass;
}

/// Circle: phi_1(x1) E_{x2}(phi_2, ..., phi_n).
inline cplx conditional_expectation2(const CircleRuelle& r, const Angle& x1, const Angle& x2,
                                     const CylinderFunctional<TrigPoly>& f) {
  const cplx head = f[0](x1);
  if (f.size() == 1) return head;
  return head * cylinder_expectation(r, x2, f.tail());
}

/// max_x |E_x(f o rhat) - E_{r(x), x}(f)| on a finite carrier.
inline double rhat_conditioning_residual(const MatrixOperator& r, const FiniteSpace& space,
                                         const CylinderFunctional<Vec>& f) {
  double worst = 0.0;
  const Vec lhs = expectation_field(r, compose_with_rhat(space, f));
  for (std::size_t x = 0; x < r.size(); ++x) {
    worst = std::max(worst, std::abs(lhs(static_cast<Eigen::Index>(x)) - conditional_expectation2(r, space.r(x), x, f)));
  }
  return worst;
}

/// Circle version evaluated at the given rational points.
inline double rhat_conditioning_residual(const CircleRuelle& r, const CylinderFunctional<TrigPoly>& f,
                                         const std::vector<Angle>& points) {
  const TrigPoly lhs = expectation_field(r, compose_with_rhat(f));
  double worst = 0.0;
  for (const auto& x : points) {
    worst = std::max(worst, std::abs(lhs(x) - conditional_expectation2(r, x.doubled(), x, f)));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Haar measure on the circle solenoid.

/// f(. y) for the cylinder word f: phi_i -> phi_i(. y_i). No compatibility check on y.
inline CylinderFunctional<TrigPoly> translated_word(const CylinderFunctional<TrigPoly>& f,
                                                    const std::vector<Angle>& y) {
  if (y.size() < f.size()) throw length_underflow("translated_word: translate shorter than the word");
  std::vector<TrigPoly> w;
  for (std::size_t i = 0; i < f.size(); ++i) w.push_back(f[i].translated(y[i]));
  return CylinderFunctional<TrigPoly>(std::move(w));
}

/// max of |E(f(. y)) - E(f)| and the coefficient residual of
/// E(f(. y) | pi_1 = x) = E(f | pi_1 = x y_1). Requires W = 1/2.
/// The translate is not checked for compatibility.
inline double translation_residual_unchecked(const CircleRuelle& r, const CylinderFunctional<TrigPoly>& f,
                                             const std::vector<Angle>& y) {
  if (!r.is_uniform()) throw std::invalid_argument("group_translation_invariance: weight is not uniform (W != 1/2)");
  const auto ft = translated_word(f, y);
  const TrigPoly e = expectation_field(r, f);
  const TrigPoly et = expectation_field(r, ft);
  const double conditional = coeff_distance(et, e.translated(y.front()));
  const double global = std::abs(integrate(HaarMeasure{}, et) - integrate(HaarMeasure{}, e));
  return std::max(conditional, global);
}

inline double group_translation_invariance(const CircleRuelle& r, const CylinderFunctional<TrigPoly>& f,
                                           const CircleSolenoidWord& translate) {
  return translation_residual_unchecked(r, f, translate.entries());
}

// ---------------------------------------------------------------------------
// Smale-Williams solid-torus map r(t, z) = (2t mod 1, z/4 + e^{2 pi i t}/2).

struct SmaleWilliamsState {
  double t = 0.0;
  cplx z{};
};

inline SmaleWilliamsState smale_williams_step(const SmaleWilliamsState& s) {
  const double t2 = 2.0 * s.t;
  return {t2 - std::floor(t2), s.z / 4.0 + std::polar(0.5, 2.0 * std::numbers::pi * s.t)};
}

/// Orbit including the initial point (steps + 1 entries).
inline std::vector<SmaleWilliamsState> smale_williams_orbit(SmaleWilliamsState initial, std::size_t steps) {
  if (std::abs(initial.z) > 1.0) throw std::invalid_argument("smale_williams_orbit: |z0| > 1, outside the solid torus");
  initial.t -= std::floor(initial.t);
  std::vector<SmaleWilliamsState> orbit{initial};
  orbit.reserve(steps + 1);
  for (std::size_t k = 0; k < steps; ++k) orbit.push_back(smale_williams_step(orbit.back()));
  return orbit;
}

/// One-step ratios |r(t, z) - r(t, z + delta)| / |delta| at each given point.
inline std::vector<double> meridional_contraction(const std::vector<SmaleWilliamsState>& points, cplx delta) {
  if (delta == cplx{}) throw std::invalid_argument("meridional_contraction: zero displacement");
  std::vector<double> ratios;
  ratios.reserve(points.size());
  for (const auto& p : points) {
    const auto a = smale_williams_step(p);
    const auto b = smale_williams_step({p.t, p.z + delta});
    ratios.push_back(std::abs(a.z - b.z) / std::abs(delta));
  }
  return ratios;
}

}  // namespace xferlab

#pragma once

// Carriers for the base space B.
//
//  * FiniteSpace: a finite state set, optionally with an onto self-map r.
//    Onto self-maps of a finite set are bijections, so every fiber r^{-1}(x)
//    is a singleton. Genuine N-to-1 dynamics live on the circle.
//  * Circle: the unit circle T with r(z) = z^2. Functions are Laurent
//    polynomials truncated at a degree bound D. Every operation either stays
//    inside the truncation or throws degree_overflow; nothing is silently
//    truncated.
//
// Points on the circle are exact rationals p/q (in turns), so backward orbits
// under z -> z^2 satisfy r(x_{i+1}) = x_i exactly.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <numbers>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "xferlab/errors.hpp"

namespace xferlab {

using cplx = std::complex<double>;

inline constexpr int kDefaultDegree = 64;
inline constexpr int kDefaultGrid = 1024;

// ---------------------------------------------------------------------------
// Angle: an exact point p/q (turns) on the circle.

class Angle {
 public:
  static constexpr std::int64_t kMaxDenominator = std::int64_t{1} << 62;

  Angle() = default;

  Angle(std::int64_t num, std::int64_t den) {
    if (den <= 0) throw std::invalid_argument("Angle: denominator must be positive");
    if (den > kMaxDenominator) throw std::overflow_error("Angle: denominator too large");
    num %= den;
    if (num < 0) num += den;
    const std::int64_t g = std::gcd(num, den);
    num_ = num / g;
    den_ = den / g;
  }

  /// Parses "p/q" or a bare integer.
  static Angle parse(std::string_view text) {
    auto to_int = [](std::string_view s) {
      std::int64_t v = 0;
      auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw std::invalid_argument("Angle: cannot parse '" + std::string(s) + "'");
      }
      return v;
    };
    const auto slash = text.find('/');
    if (slash == std::string_view::npos) return Angle(to_int(text), 1);
    return Angle(to_int(text.substr(0, slash)), to_int(text.substr(slash + 1)));
  }

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }

  /// r(z) = z^2.
  Angle doubled() const { return Angle(static_cast<std::int64_t>((__int128{2} * num_) % den_), den_); }

  /// The two preimages under z -> z^2, in the order (p/2q, (p+q)/2q).
  std::array<Angle, 2> square_roots() const {
    if (den_ > kMaxDenominator / 2) throw std::overflow_error("Angle: backward orbit too deep");
    return {Angle(num_, 2 * den_), Angle(num_ + den_, 2 * den_)};
  }

  /// Group product on T (addition of turns).
  Angle operator+(const Angle& o) const {
    const __int128 den = static_cast<__int128>(den_) / std::gcd(den_, o.den_) * o.den_;
    const __int128 num = static_cast<__int128>(num_) * (den / den_) + static_cast<__int128>(o.num_) * (den / o.den_);
    if (den > kMaxDenominator) throw std::overflow_error("Angle: denominator too large");
    return Angle(static_cast<std::int64_t>(num % den), static_cast<std::int64_t>(den));
  }

  Angle operator-() const { return Angle(den_ - num_, den_); }

  double turns() const { return static_cast<double>(num_) / static_cast<double>(den_); }

  /// e_n evaluated here: exp(2 pi i n p/q), with n p reduced mod q first.
  cplx character(int n) const {
    __int128 k = static_cast<__int128>(n) % den_;
    if (k < 0) k += den_;
    const auto r = static_cast<std::int64_t>((k * num_) % den_);
    const double theta = 2.0 * std::numbers::pi * static_cast<double>(r) / static_cast<double>(den_);
    return {std::cos(theta), std::sin(theta)};
  }

  std::string str() const { return std::to_string(num_) + "/" + std::to_string(den_); }

  friend bool operator==(const Angle&, const Angle&) = default;

 private:
  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

// ---------------------------------------------------------------------------
// TrigPoly: sum_{|n| <= bound} c_n z^n, stored sparsely.

class TrigPoly {
 public:
  using Coeffs = std::map<int, cplx>;

  explicit TrigPoly(int bound = kDefaultDegree) : bound_(bound) {
    if (bound < 0) throw std::invalid_argument("TrigPoly: negative degree bound");
  }

  TrigPoly(int bound, const Coeffs& coeffs) : TrigPoly(bound) {
    for (const auto& [n, c] : coeffs) {
      if (c == cplx{}) continue;
      if (std::abs(n) > bound_) {
        throw degree_overflow("TrigPoly: coefficient " + std::to_string(n) + " exceeds bound " +
                              std::to_string(bound_));
      }
      c_[n] = c;
    }
  }

  static TrigPoly character(int n, int bound = kDefaultDegree) { return TrigPoly(bound, {{n, 1.0}}); }
  static TrigPoly constant(cplx value, int bound = kDefaultDegree) { return TrigPoly(bound, {{0, value}}); }

  int bound() const { return bound_; }
  const Coeffs& coeffs() const { return c_; }
  bool empty() const { return c_.empty(); }

  int degree() const {
    int d = 0;
    for (const auto& [n, c] : c_) d = std::max(d, std::abs(n));
    return d;
  }

  cplx operator[](int n) const {
    auto it = c_.find(n);
    return it == c_.end() ? cplx{} : it->second;
  }

  /// Pointwise complex conjugate: c_n -> conj(c_{-n}).
  TrigPoly conj() const {
    TrigPoly out(bound_);
    for (const auto& [n, c] : c_) out.c_[-n] = std::conj(c);
    return out;
  }

  TrigPoly& operator+=(const TrigPoly& o) {
    check_carrier(o);
    for (const auto& [n, c] : o.c_) add_term(c_, n, c);
    return *this;
  }
  TrigPoly& operator-=(const TrigPoly& o) {
    check_carrier(o);
    for (const auto& [n, c] : o.c_) add_term(c_, n, -c);
    return *this;
  }
  TrigPoly& operator*=(cplx s) {
    if (s == cplx{}) {
      c_.clear();
      return *this;
    }
    for (auto& [n, c] : c_) c *= s;
    return *this;
  }

  friend TrigPoly operator+(TrigPoly a, const TrigPoly& b) { return a += b; }
  friend TrigPoly operator-(TrigPoly a, const TrigPoly& b) { return a -= b; }
  friend TrigPoly operator*(TrigPoly a, cplx s) { return a *= s; }
  friend TrigPoly operator*(cplx s, TrigPoly a) { return a *= s; }

  /// Pointwise product. Throws degree_overflow when deg(a) + deg(b) > bound.
  friend TrigPoly operator*(const TrigPoly& a, const TrigPoly& b) {
    a.check_carrier(b);
    if (a.degree() + b.degree() > a.bound_) {
      throw degree_overflow("TrigPoly: product degree " + std::to_string(a.degree() + b.degree()) +
                            " exceeds bound " + std::to_string(a.bound_));
    }
    TrigPoly out(a.bound_);
    out.c_ = product_coeffs(a.c_, b.c_);
    return out;
  }

  /// Coefficients of the product with no truncation bound. Intermediate
  /// results (for example inside R) may exceed the bound before contracting.
  static Coeffs product_coeffs(const Coeffs& a, const Coeffs& b) {
    Coeffs out;
    for (const auto& [n, c] : a) {
      for (const auto& [m, d] : b) add_term(out, n + m, c * d);
    }
    return out;
  }

  /// f(z^2): index doubling.
  TrigPoly composed_with_doubling() const {
    if (2 * degree() > bound_) {
      throw degree_overflow("TrigPoly: composition with z^2 needs degree " + std::to_string(2 * degree()) +
                            " > bound " + std::to_string(bound_));
    }
    TrigPoly out(bound_);
    for (const auto& [n, c] : c_) out.c_[2 * n] = c;
    return out;
  }

  /// f(z y) for a fixed rotation y.
  TrigPoly translated(const Angle& y) const {
    TrigPoly out(bound_);
    for (const auto& [n, c] : c_) out.c_[n] = c * y.character(n);
    return out;
  }

  cplx operator()(const Angle& x) const {
    cplx s{};
    for (const auto& [n, c] : c_) s += c * x.character(n);
    return s;
  }

  /// Evaluation at a float angle given in turns.
  cplx at_turns(double theta) const {
    cplx s{};
    for (const auto& [n, c] : c_) s += c * std::polar(1.0, 2.0 * std::numbers::pi * n * theta);
    return s;
  }

  /// ||f||^2 in L^2(T, Haar) = sum |c_n|^2.
  double l2_norm_squared() const {
    double s = 0.0;
    for (const auto& [n, c] : c_) s += std::norm(c);
    return s;
  }

  /// Largest |c_n|.
  double max_abs_coeff() const {
    double s = 0.0;
    for (const auto& [n, c] : c_) s = std::max(s, std::abs(c));
    return s;
  }

  bool is_real(double tol = 1e-14) const {
    for (const auto& [n, c] : c_) {
      if (std::abs(c - std::conj((*this)[-n])) > tol) return false;
    }
    return true;
  }

  void check_carrier(const TrigPoly& o) const {
    if (o.bound_ != bound_) {
      throw carrier_mismatch("TrigPoly: degree bounds " + std::to_string(bound_) + " and " +
                             std::to_string(o.bound_) + " differ");
    }
  }

 private:
  static void add_term(Coeffs& c, int n, cplx v) {
    auto [it, inserted] = c.try_emplace(n, v);
    if (!inserted) {
      it->second += v;
      if (it->second == cplx{}) c.erase(it);
    } else if (v == cplx{}) {
      c.erase(it);
    }
  }

  int bound_;
  Coeffs c_;
};

/// Max coefficient distance between two trig polys on the same carrier.
inline double coeff_distance(const TrigPoly& a, const TrigPoly& b) { return (a - b).max_abs_coeff(); }

/// Values on the uniform grid theta_j = j/G.
inline std::vector<cplx> sample_on_grid(const TrigPoly& f, int grid = kDefaultGrid) {
  std::vector<cplx> out(static_cast<std::size_t>(grid));
  for (int j = 0; j < grid; ++j) out[static_cast<std::size_t>(j)] = f(Angle(j, grid));
  return out;
}

// ---------------------------------------------------------------------------
// Carriers.

struct CircleSpace {
  int degree = kDefaultDegree;
  int grid = kDefaultGrid;
};

class FiniteSpace {
 public:
  explicit FiniteSpace(std::vector<std::string> labels, std::optional<std::vector<std::size_t>> endo = {})
      : labels_(std::move(labels)), endo_(std::move(endo)) {
    if (labels_.empty()) throw std::invalid_argument("FiniteSpace: no states");
    if (!endo_) return;
    if (endo_->size() != labels_.size()) throw std::invalid_argument("FiniteSpace: endo has wrong length");
    fibers_.assign(labels_.size(), {});
    for (std::size_t y = 0; y < endo_->size(); ++y) {
      const std::size_t x = (*endo_)[y];
      if (x >= labels_.size()) throw std::invalid_argument("FiniteSpace: endo maps outside the state set");
      fibers_[x].push_back(y);
    }
    for (std::size_t x = 0; x < fibers_.size(); ++x) {
      if (fibers_[x].empty()) {
        throw std::invalid_argument("FiniteSpace: endo is not onto (state " + labels_[x] + " has no preimage)");
      }
    }
  }

  /// States labelled "0", "1", ...
  static FiniteSpace with_size(std::size_t n, std::optional<std::vector<std::size_t>> endo = {}) {
    std::vector<std::string> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = std::to_string(i);
    return FiniteSpace(std::move(labels), std::move(endo));
  }

  std::size_t size() const { return labels_.size(); }
  const std::vector<std::string>& labels() const { return labels_; }
  bool has_endo() const { return endo_.has_value(); }

  std::size_t r(std::size_t x) const {
    require_endo();
    return (*endo_)[x];
  }
  const std::vector<std::size_t>& endo() const {
    require_endo();
    return *endo_;
  }
  /// r^{-1}(x); a singleton on any finite carrier.
  const std::vector<std::size_t>& fiber(std::size_t x) const {
    require_endo();
    return fibers_[x];
  }

  std::size_t index_of(std::string_view label) const {
    auto it = std::find(labels_.begin(), labels_.end(), label);
    if (it == labels_.end()) throw std::out_of_range("FiniteSpace: unknown state '" + std::string(label) + "'");
    return static_cast<std::size_t>(it - labels_.begin());
  }

  void require_endo() const {
    if (!endo_) throw missing_endomorphism("FiniteSpace: no endomorphism defined");
  }

 private:
  std::vector<std::string> labels_;
  std::optional<std::vector<std::size_t>> endo_;
  std::vector<std::vector<std::size_t>> fibers_;
};

// ---------------------------------------------------------------------------
// Observables and measures.

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline Vec indicator(std::size_t n, std::size_t i) {
  Vec v = Vec::Zero(static_cast<Eigen::Index>(n));
  v(static_cast<Eigen::Index>(i)) = 1.0;
  return v;
}

inline Vec constant_observable(std::size_t n, double c = 1.0) {
  return Vec::Constant(static_cast<Eigen::Index>(n), c);
}

class FiniteMeasure {
 public:
  static constexpr double kMassTolerance = 1e-12;

  explicit FiniteMeasure(Vec weights) : w_(std::move(weights)) {
    if (w_.size() == 0) throw std::invalid_argument("FiniteMeasure: empty");
    if ((w_.array() < 0.0).any()) throw std::invalid_argument("FiniteMeasure: negative weight");
    if (std::abs(w_.sum() - 1.0) > kMassTolerance) {
      throw std::invalid_argument("FiniteMeasure: total mass is not 1");
    }
  }

  static FiniteMeasure uniform(std::size_t n) {
    return FiniteMeasure(Vec::Constant(static_cast<Eigen::Index>(n), 1.0 / static_cast<double>(n)));
  }
  static FiniteMeasure point_mass(std::size_t n, std::size_t i) { return FiniteMeasure(indicator(n, i)); }

  std::size_t size() const { return static_cast<std::size_t>(w_.size()); }
  const Vec& weights() const { return w_; }
  double operator()(std::size_t i) const { return w_(static_cast<Eigen::Index>(i)); }
  bool full_support() const { return (w_.array() > 0.0).all(); }

 private:
  Vec w_;
};

/// Normalized arc length on the circle; the only circle measure supported.
struct HaarMeasure {};

inline void check_carrier(const Vec& a, std::size_t n, const char* what) {
  if (static_cast<std::size_t>(a.size()) != n) {
    throw carrier_mismatch(std::string(what) + ": observable has " + std::to_string(a.size()) +
                           " entries, carrier has " + std::to_string(n));
  }
}

inline double integrate(const FiniteMeasure& mu, const Vec& phi) {
  check_carrier(phi, mu.size(), "integrate");
  return mu.weights().dot(phi);
}

inline cplx integrate(const HaarMeasure&, const TrigPoly& phi) { return phi[0]; }

// ---------------------------------------------------------------------------
// Endomorphism-related maps.

/// phi o r on a finite carrier.
inline Vec compose_with_endo(const FiniteSpace& space, const Vec& phi) {
  check_carrier(phi, space.size(), "compose_with_endo");
  Vec out(phi.size());
  for (std::size_t x = 0; x < space.size(); ++x) {
    out(static_cast<Eigen::Index>(x)) = phi(static_cast<Eigen::Index>(space.r(x)));
  }
  return out;
}

/// phi o r on the circle (r(z) = z^2).
inline TrigPoly compose_with_endo(const TrigPoly& phi) { return phi.composed_with_doubling(); }

/// x -> (1/#r^{-1}(x)) sum_{r(y)=x} phi(y).
inline Vec fiber_average(const FiniteSpace& space, const Vec& phi) {
  check_carrier(phi, space.size(), "fiber_average");
  Vec out = Vec::Zero(phi.size());
  for (std::size_t x = 0; x < space.size(); ++x) {
    const auto& fib = space.fiber(x);
    double s = 0.0;
    for (std::size_t y : fib) s += phi(static_cast<Eigen::Index>(y));
    out(static_cast<Eigen::Index>(x)) = s / static_cast<double>(fib.size());
  }
  return out;
}

/// Circle version: (1/2)(phi(w) + phi(-w)) with w^2 = z maps e_n to e_{n/2}
/// for even n and to 0 for odd n.
inline TrigPoly fiber_average(const TrigPoly& phi) {
  TrigPoly::Coeffs out;
  for (const auto& [n, c] : phi.coeffs()) {
    if (n % 2 == 0) out[n / 2] = c;
  }
  return TrigPoly(phi.bound(), out);
}

/// Max over the indicator basis of |int phi dmu - int (fiber average of phi) dmu|.
inline double strong_invariance_check(const FiniteMeasure& mu, const FiniteSpace& space) {
  space.require_endo();
  if (mu.size() != space.size()) throw carrier_mismatch("strong_invariance_check: measure/space size");
  double worst = 0.0;
  for (std::size_t y = 0; y < space.size(); ++y) {
    const Vec chi = indicator(space.size(), y);
    worst = std::max(worst, std::abs(integrate(mu, chi) - integrate(mu, fiber_average(space, chi))));
  }
  return worst;
}

/// Same check for Haar measure on the circle over e_n, |n| <= D.
inline double strong_invariance_check(const HaarMeasure& haar, const CircleSpace& space) {
  double worst = 0.0;
  for (int n = -space.degree; n <= space.degree; ++n) {
    const TrigPoly e = TrigPoly::character(n, space.degree);
    worst = std::max(worst, std::abs(integrate(haar, e) - integrate(haar, fiber_average(e))));
  }
  return worst;
}

}  // namespace xferlab

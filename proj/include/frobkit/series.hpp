#pragma once

// Windowed Laurent series in the (z - phi) and z-at-infinity charts, functions
// sampled on the unit circle, and the spectral operations tying them together.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "frobkit/fft.hpp"

namespace frobkit {

inline constexpr double kPi = std::numbers::pi;

struct WindowExhausted : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct BranchError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ChartMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Exact rational number with a positive denominator.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  constexpr Rational() = default;
  constexpr Rational(std::int64_t n) : num(n), den(1) {}  // NOLINT(google-explicit-constructor)
  Rational(std::int64_t n, std::int64_t d) : num(n), den(d) {
    if (d == 0) throw std::invalid_argument("Rational: zero denominator");
    if (den < 0) {
      num = -num;
      den = -den;
    }
    const std::int64_t g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
  }
  [[nodiscard]] double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  [[nodiscard]] bool is_integer() const { return den == 1; }

  friend Rational operator+(Rational a, Rational b) { return {a.num * b.den + b.num * a.den, a.den * b.den}; }
  friend Rational operator-(Rational a, Rational b) { return {a.num * b.den - b.num * a.den, a.den * b.den}; }
  friend Rational operator*(Rational a, Rational b) { return {a.num * b.num, a.den * b.den}; }
  friend Rational operator/(Rational a, Rational b) { return {a.num * b.den, a.den * b.num}; }
  friend Rational operator-(Rational a) { return {-a.num, a.den}; }
  friend bool operator==(Rational a, Rational b) { return a.num == b.num && a.den == b.den; }
};

// ---------------------------------------------------------------------------
// Charts and truncated series
// ---------------------------------------------------------------------------

struct Chart {
  enum class Kind { AtPole, AtInfinity };
  Kind kind = Kind::AtPole;
  cplx center{0.0, 0.0};

  static Chart pole(cplx phi) {
    if (std::abs(phi) >= 1.0) throw std::invalid_argument("AtPole center must lie inside the unit circle");
    return Chart{Kind::AtPole, phi};
  }
  static Chart infinity() { return Chart{Kind::AtInfinity, {0.0, 0.0}}; }
  [[nodiscard]] bool is_pole() const { return kind == Kind::AtPole; }
  friend bool operator==(const Chart& a, const Chart& b) {
    return a.kind == b.kind && (a.kind == Kind::AtInfinity || a.center == b.center);
  }
};

/// Exact-window bounds at or beyond this magnitude mean "no unknown
/// coefficients on that side": everything beyond the stored range is zero.
inline constexpr int kOpen = 1 << 28;

enum class Side { Top, Bottom };

/// A Laurent series sum_k c_k x^k with x = (z - phi) or x = z (at infinity).
///
/// Storage covers exponents lo..hi. The exact window [exact_lo, exact_hi] marks
/// the exponents whose coefficients are guaranteed; it may extend past the
/// storage (up to +-kOpen), in which case the unstored coefficients are known
/// to vanish. Coefficients outside the exact window are not trustworthy.
class TruncatedSeries {
 public:
  TruncatedSeries() : chart_(Chart::infinity()) {}
  TruncatedSeries(Chart chart, int lo, std::vector<cplx> coeffs, int exact_lo = -kOpen, int exact_hi = kOpen)
      : chart_(chart), lo_(lo), coeffs_(std::move(coeffs)), exact_lo_(exact_lo), exact_hi_(exact_hi) {
    for (const auto& c : coeffs_) {
      if (!std::isfinite(c.real()) || !std::isfinite(c.imag()))
        throw std::domain_error("TruncatedSeries: non-finite coefficient");
    }
    exact_lo_ = std::max(exact_lo_, -kOpen);
    exact_hi_ = std::min(exact_hi_, kOpen);
  }

  static TruncatedSeries zero(Chart chart) { return {chart, 0, {}}; }
  static TruncatedSeries monomial(Chart chart, int k, cplx c = 1.0) { return {chart, k, {c}}; }

  [[nodiscard]] const Chart& chart() const { return chart_; }
  [[nodiscard]] int lo() const { return lo_; }
  [[nodiscard]] int hi() const { return lo_ + static_cast<int>(coeffs_.size()) - 1; }
  [[nodiscard]] bool empty_storage() const { return coeffs_.empty(); }
  [[nodiscard]] const std::vector<cplx>& coeffs() const { return coeffs_; }
  [[nodiscard]] int exact_lo() const { return exact_lo_; }
  [[nodiscard]] int exact_hi() const { return exact_hi_; }
  [[nodiscard]] bool known_below() const { return exact_lo_ <= -kOpen; }
  [[nodiscard]] bool known_above() const { return exact_hi_ >= kOpen; }
  [[nodiscard]] bool is_exact(int k) const { return k >= exact_lo_ && k <= exact_hi_; }

  [[nodiscard]] cplx operator[](int k) const {
    if (k < lo_ || k > hi()) return {0.0, 0.0};
    return coeffs_[static_cast<std::size_t>(k - lo_)];
  }

  [[nodiscard]] std::optional<int> top_nonzero() const {
    for (int k = hi(); k >= lo_; --k)
      if ((*this)[k] != cplx{}) return k;
    return std::nullopt;
  }
  [[nodiscard]] std::optional<int> bottom_nonzero() const {
    for (int k = lo_; k <= hi(); ++k)
      if ((*this)[k] != cplx{}) return k;
    return std::nullopt;
  }

  /// Coefficients on [a, b] (zero-filled outside storage).
  [[nodiscard]] std::vector<cplx> range(int a, int b) const {
    std::vector<cplx> out;
    for (int k = a; k <= b; ++k) out.push_back((*this)[k]);
    return out;
  }

 private:
  Chart chart_;
  int lo_ = 0;
  std::vector<cplx> coeffs_;
  int exact_lo_ = -kOpen;
  int exact_hi_ = kOpen;
};

namespace detail {

inline void require_same_chart(const TruncatedSeries& f, const TruncatedSeries& g) {
  if (!(f.chart() == g.chart())) throw ChartMismatch("series live in different charts");
}

inline int clamp_bound(long long v) {
  if (v <= -kOpen) return -kOpen;
  if (v >= kOpen) return kOpen;
  return static_cast<int>(v);
}

inline constexpr long long kInf = 1LL << 40;

// Smallest/largest exponent that can carry a nonzero or unknown coefficient.
struct Extent {
  long long pmin;
  long long pmax;
  bool empty;
};

inline Extent possible_extent(const TruncatedSeries& f) {
  Extent e{kInf, -kInf, true};
  if (auto b = f.bottom_nonzero()) {
    e.pmin = *b;
    e.pmax = *f.top_nonzero();
    e.empty = false;
  }
  if (!f.known_below()) {
    e.pmin = -kInf;
    e.pmax = std::max(e.pmax, static_cast<long long>(f.exact_lo()) - 1);
    e.empty = false;
  }
  if (!f.known_above()) {
    e.pmax = kInf;
    e.pmin = std::min(e.pmin, static_cast<long long>(f.exact_hi()) + 1);
    e.empty = false;
  }
  return e;
}

}  // namespace detail

inline TruncatedSeries add(const TruncatedSeries& f, const TruncatedSeries& g, cplx alpha = 1.0, cplx beta = 1.0) {
  detail::require_same_chart(f, g);
  const int elo = std::max(f.exact_lo(), g.exact_lo());
  const int ehi = std::min(f.exact_hi(), g.exact_hi());
  if (elo > ehi) throw WindowExhausted("add: exact windows do not overlap");
  int lo = 0;
  int hi = -1;
  if (!f.empty_storage() && !g.empty_storage()) {
    lo = std::min(f.lo(), g.lo());
    hi = std::max(f.hi(), g.hi());
  } else if (!f.empty_storage()) {
    lo = f.lo();
    hi = f.hi();
  } else if (!g.empty_storage()) {
    lo = g.lo();
    hi = g.hi();
  }
  std::vector<cplx> c;
  for (int k = lo; k <= hi; ++k) c.push_back(alpha * f[k] + beta * g[k]);
  return {f.chart(), lo, std::move(c), elo, ehi};
}

inline TruncatedSeries sub(const TruncatedSeries& f, const TruncatedSeries& g) { return add(f, g, 1.0, -1.0); }

inline TruncatedSeries scale(const TruncatedSeries& f, cplx c) {
  std::vector<cplx> out = f.coeffs();
  for (auto& x : out) x *= c;
  return {f.chart(), f.lo(), std::move(out), f.exact_lo(), f.exact_hi()};
}

inline TruncatedSeries operator+(const TruncatedSeries& f, const TruncatedSeries& g) { return add(f, g); }
inline TruncatedSeries operator-(const TruncatedSeries& f, const TruncatedSeries& g) { return sub(f, g); }
inline TruncatedSeries operator*(cplx c, const TruncatedSeries& f) { return scale(f, c); }

/// Cauchy product. A product coefficient is kept only if no pair of factor
/// exponents contributing to it touches an unknown coefficient.
inline TruncatedSeries mul(const TruncatedSeries& f, const TruncatedSeries& g) {
  detail::require_same_chart(f, g);
  using detail::kInf;
  const auto ef = detail::possible_extent(f);
  const auto eg = detail::possible_extent(g);
  if (ef.empty || eg.empty) return TruncatedSeries::zero(f.chart());

  long long elo = -kInf;
  long long ehi = kInf;
  if (!f.known_below()) elo = std::max(elo, f.exact_lo() + eg.pmax);
  if (!g.known_below()) elo = std::max(elo, g.exact_lo() + ef.pmax);
  if (!f.known_above()) ehi = std::min(ehi, f.exact_hi() + eg.pmin);
  if (!g.known_above()) ehi = std::min(ehi, g.exact_hi() + ef.pmin);
  if (elo > ehi || elo >= kInf / 2 || ehi <= -kInf / 2) throw WindowExhausted("mul: no exact coefficients survive");

  const auto fb = f.bottom_nonzero();
  const auto gb = g.bottom_nonzero();
  if (!fb || !gb) {
    return {f.chart(), 0, {}, detail::clamp_bound(elo), detail::clamp_bound(ehi)};
  }
  const long long slo = std::max<long long>(*fb + *gb, elo);
  const long long shi = std::min<long long>(*f.top_nonzero() + *g.top_nonzero(), ehi);
  std::vector<cplx> c;
  for (long long k = slo; k <= shi; ++k) {
    cplx acc{};
    for (int i = *fb; i <= *f.top_nonzero(); ++i) {
      const long long j = k - i;
      if (j < *gb || j > *g.top_nonzero()) continue;
      acc += f[i] * g[static_cast<int>(j)];
    }
    c.push_back(acc);
  }
  const int lo = slo <= shi ? static_cast<int>(slo) : 0;
  return {f.chart(), lo, std::move(c), detail::clamp_bound(elo), detail::clamp_bound(ehi)};
}

inline TruncatedSeries operator*(const TruncatedSeries& f, const TruncatedSeries& g) { return mul(f, g); }

inline TruncatedSeries d_dz(const TruncatedSeries& f) {
  std::vector<cplx> c;
  for (int k = f.lo(); k <= f.hi(); ++k) c.push_back(static_cast<double>(k) * f[k]);
  const int elo = f.known_below() ? -kOpen : f.exact_lo() - 1;
  const int ehi = f.known_above() ? kOpen : f.exact_hi() - 1;
  return {f.chart(), f.lo() - 1, std::move(c), elo, ehi};
}

/// Keep exponents >= a. Everything below a becomes known zero.
inline TruncatedSeries clip_ge(const TruncatedSeries& f, int a) {
  std::vector<cplx> c;
  const int lo = std::max(f.lo(), a);
  for (int k = lo; k <= f.hi(); ++k) c.push_back(f[k]);
  int elo = f.exact_lo();
  int ehi = f.exact_hi();
  if (elo <= a) {
    elo = -kOpen;
    ehi = std::max(ehi, a - 1);
  }
  return {f.chart(), lo, std::move(c), elo, ehi};
}

/// Keep exponents <= b. Everything above b becomes known zero.
inline TruncatedSeries clip_le(const TruncatedSeries& f, int b) {
  std::vector<cplx> c;
  const int hi = std::min(f.hi(), b);
  for (int k = f.lo(); k <= hi; ++k) c.push_back(f[k]);
  int elo = f.exact_lo();
  int ehi = f.exact_hi();
  if (ehi >= b) {
    ehi = kOpen;
    elo = std::min(elo, b + 1);
  }
  return {f.chart(), f.lo(), std::move(c), elo, ehi};
}

enum class Sign { Plus, Minus };

/// Nonnegative (plus) or negative (minus) part in powers of (z - phi).
inline TruncatedSeries project(const TruncatedSeries& f, Sign sign) {
  if (!f.chart().is_pole()) throw ChartMismatch("projections are defined in the (z - phi) chart only");
  return sign == Sign::Plus ? clip_ge(f, 0) : clip_le(f, -1);
}

inline cplx residue(const TruncatedSeries& f) {
  if (!f.is_exact(-1)) throw WindowExhausted("residue: exponent -1 is outside the exact window");
  return f.chart().is_pole() ? f[-1] : -f[-1];
}

// ---------------------------------------------------------------------------
// Formal power series kernels (coefficient vectors, p[0] != 0 where required)
// ---------------------------------------------------------------------------

namespace fps {

using Vec = std::vector<cplx>;

inline Vec mul(const Vec& p, const Vec& q, std::size_t len) {
  Vec r(len);
  for (std::size_t i = 0; i < std::min(len, p.size()); ++i)
    for (std::size_t j = 0; j < q.size() && i + j < len; ++j) r[i + j] += p[i] * q[j];
  return r;
}

inline Vec inv(const Vec& p, std::size_t len) {
  if (p.empty() || p[0] == cplx{}) throw std::domain_error("fps::inv: vanishing constant term");
  Vec q(len);
  q[0] = 1.0 / p[0];
  for (std::size_t k = 1; k < len; ++k) {
    cplx acc{};
    for (std::size_t j = 1; j <= k && j < p.size(); ++j) acc += p[j] * q[k - j];
    q[k] = -acc * q[0];
  }
  return q;
}

/// (p/p0)^alpha times the principal value of p0^alpha.
inline Vec pow(const Vec& p, double alpha, std::size_t len) {
  if (p.empty() || p[0] == cplx{}) throw std::domain_error("fps::pow: vanishing constant term");
  Vec g(len);
  for (std::size_t i = 0; i < std::min(len, p.size()); ++i) g[i] = p[i] / p[0];
  Vec h(len);
  h[0] = 1.0;
  for (std::size_t k = 1; k < len; ++k) {
    cplx acc{};
    for (std::size_t j = 1; j <= k; ++j)
      acc += ((alpha + 1.0) * static_cast<double>(j) - static_cast<double>(k)) * g[j] * h[k - j];
    h[k] = acc / static_cast<double>(k);
  }
  const cplx lead = std::pow(p[0], alpha);
  for (auto& x : h) x *= lead;
  return h;
}

/// log(p) with the principal logarithm of p0 as constant term.
inline Vec log(const Vec& p, std::size_t len) {
  if (p.empty() || p[0] == cplx{}) throw std::domain_error("fps::log: vanishing constant term");
  Vec g(len);
  for (std::size_t i = 0; i < std::min(len, p.size()); ++i) g[i] = p[i] / p[0];
  Vec l(len);
  l[0] = std::log(p[0]);
  for (std::size_t k = 1; k < len; ++k) {
    cplx acc = g[k] * static_cast<double>(k);
    for (std::size_t j = 1; j < k; ++j) acc -= static_cast<double>(j) * l[j] * g[k - j];
    l[k] = acc / static_cast<double>(k);
  }
  return l;
}

/// outer(inner(y)) for inner(0) = 0, by Horner's rule.
inline Vec compose(const Vec& outer, const Vec& inner, std::size_t len) {
  if (!inner.empty() && inner[0] != cplx{}) throw std::domain_error("fps::compose: inner series must vanish at 0");
  Vec r(len);
  for (std::size_t i = outer.size(); i-- > 0;) {
    r = mul(r, inner, len);
    r[0] += outer[i];
  }
  return r;
}

}  // namespace fps

// ---------------------------------------------------------------------------
// Leading-term expansions: reciprocal, rational powers, logarithm
// ---------------------------------------------------------------------------

inline constexpr int kDefaultDepth = 24;

namespace detail {

// Normalized leading sequence: for side Top, p_i = c_{t-i}; for Bottom, p_i = c_{b+i}.
struct Leading {
  int lead;
  std::vector<cplx> p;
};

inline Leading leading_sequence(const TruncatedSeries& f, Side side, int depth, const char* who) {
  Leading out{};
  if (side == Side::Top) {
    if (!f.known_above()) throw WindowExhausted(std::string(who) + ": top of series is not known");
    auto t = f.top_nonzero();
    if (!t || !f.is_exact(*t)) throw std::domain_error(std::string(who) + ": vanishing leading coefficient");
    out.lead = *t;
    const long long avail = f.known_below() ? depth : std::min<long long>(depth, *t - f.exact_lo());
    if (avail < 0) throw WindowExhausted(std::string(who) + ": no exact coefficients");
    for (long long i = 0; i <= avail; ++i) out.p.push_back(f[*t - static_cast<int>(i)]);
  } else {
    if (!f.known_below()) throw WindowExhausted(std::string(who) + ": bottom of series is not known");
    auto b = f.bottom_nonzero();
    if (!b || !f.is_exact(*b)) throw std::domain_error(std::string(who) + ": vanishing leading coefficient");
    out.lead = *b;
    const long long avail = f.known_above() ? depth : std::min<long long>(depth, f.exact_hi() - *b);
    if (avail < 0) throw WindowExhausted(std::string(who) + ": no exact coefficients");
    for (long long i = 0; i <= avail; ++i) out.p.push_back(f[*b + static_cast<int>(i)]);
  }
  return out;
}

inline TruncatedSeries from_leading(const Chart& chart, Side side, int lead, const std::vector<cplx>& q) {
  const int len = static_cast<int>(q.size());
  if (side == Side::Top) {
    std::vector<cplx> c(q.rbegin(), q.rend());
    return {chart, lead - len + 1, std::move(c), lead - len + 1, kOpen};
  }
  return {chart, lead, q, -kOpen, lead + len - 1};
}

}  // namespace detail

/// 1/f expanded away from its extreme term on the given side.
inline TruncatedSeries reciprocal_leading(const TruncatedSeries& f, Side side, int depth = kDefaultDepth) {
  auto ls = detail::leading_sequence(f, side, depth, "reciprocal_leading");
  auto q = fps::inv(ls.p, ls.p.size());
  return detail::from_leading(f.chart(), side, -ls.lead, q);
}

/// f^alpha expanded from the extreme term; the constant uses the principal branch.
inline TruncatedSeries power(const TruncatedSeries& f, Rational alpha, Side side, int depth = kDefaultDepth) {
  auto ls = detail::leading_sequence(f, side, depth, "power");
  const Rational e = Rational(ls.lead) * alpha;
  if (!e.is_integer()) throw BranchError("power: leading exponent times alpha is not an integer");
  auto q = fps::pow(ls.p, alpha.value(), ls.p.size());
  return detail::from_leading(f.chart(), side, static_cast<int>(e.num), q);
}

/// log f for a series whose extreme term has exponent 0; principal log of the constant.
inline TruncatedSeries log_series(const TruncatedSeries& f, Side side, int depth = kDefaultDepth) {
  auto ls = detail::leading_sequence(f, side, depth, "log_series");
  if (ls.lead != 0) throw BranchError("log_series: leading exponent must be zero");
  auto q = fps::log(ls.p, ls.p.size());
  return detail::from_leading(f.chart(), side, 0, q);
}

// ---------------------------------------------------------------------------
// Circle samples
// ---------------------------------------------------------------------------

/// Values of a function at z_k = exp(2 pi i k / N).
struct CircleSamples {
  std::vector<cplx> values;
  std::optional<int> winding;

  CircleSamples() = default;
  explicit CircleSamples(std::vector<cplx> v, std::optional<int> w = std::nullopt)
      : values(std::move(v)), winding(w) {}
  static CircleSamples constant(int n, cplx c) { return CircleSamples(std::vector<cplx>(static_cast<std::size_t>(n), c)); }

  [[nodiscard]] int size() const { return static_cast<int>(values.size()); }
  cplx& operator[](int k) { return values[static_cast<std::size_t>(k)]; }
  const cplx& operator[](int k) const { return values[static_cast<std::size_t>(k)]; }
};

inline bool valid_sample_count(int n) { return n >= 32 && (n & (n - 1)) == 0; }

/// Cached nodes exp(2 pi i k / N).
inline const std::vector<cplx>& circle_nodes(int n) {
  static std::mutex mu;
  static std::map<int, std::unique_ptr<std::vector<cplx>>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[n];
  if (!slot) {
    slot = std::make_unique<std::vector<cplx>>(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) (*slot)[static_cast<std::size_t>(k)] = std::polar(1.0, 2.0 * kPi * k / n);
  }
  return *slot;
}

namespace detail {
template <class Op>
CircleSamples zip(const CircleSamples& a, const CircleSamples& b, Op op) {
  if (a.size() != b.size()) throw std::invalid_argument("sample count mismatch");
  std::vector<cplx> v(a.values.size());
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = op(a.values[k], b.values[k]);
  return CircleSamples(std::move(v));
}
template <class Op>
CircleSamples map(const CircleSamples& a, Op op) {
  std::vector<cplx> v(a.values.size());
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = op(a.values[k]);
  return CircleSamples(std::move(v));
}
}  // namespace detail

inline CircleSamples operator+(const CircleSamples& a, const CircleSamples& b) {
  return detail::zip(a, b, [](cplx x, cplx y) { return x + y; });
}
inline CircleSamples operator-(const CircleSamples& a, const CircleSamples& b) {
  return detail::zip(a, b, [](cplx x, cplx y) { return x - y; });
}
inline CircleSamples operator*(const CircleSamples& a, const CircleSamples& b) {
  return detail::zip(a, b, [](cplx x, cplx y) { return x * y; });
}
inline CircleSamples operator/(const CircleSamples& a, const CircleSamples& b) {
  return detail::zip(a, b, [](cplx x, cplx y) { return x / y; });
}
inline CircleSamples operator*(cplx c, const CircleSamples& a) {
  return detail::map(a, [c](cplx x) { return c * x; });
}
inline CircleSamples operator*(const CircleSamples& a, cplx c) { return c * a; }
inline CircleSamples operator+(const CircleSamples& a, cplx c) {
  return detail::map(a, [c](cplx x) { return x + c; });
}
inline CircleSamples operator-(const CircleSamples& a, cplx c) { return a + (-c); }
inline CircleSamples operator-(const CircleSamples& a) {
  return detail::map(a, [](cplx x) { return -x; });
}
inline CircleSamples& operator+=(CircleSamples& a, const CircleSamples& b) { return a = a + b; }
inline CircleSamples& operator-=(CircleSamples& a, const CircleSamples& b) { return a = a - b; }

inline double max_abs(const CircleSamples& a) {
  double m = 0.0;
  for (const auto& x : a.values) m = std::max(m, std::abs(x));
  return m;
}
inline double min_abs(const CircleSamples& a) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& x : a.values) m = std::min(m, std::abs(x));
  return m;
}

/// The sample of z itself on the circle.
inline CircleSamples z_samples(int n) { return CircleSamples(circle_nodes(n)); }

/// Trapezoid rule for (1/2 pi i) times the contour integral over the unit circle.
inline cplx contour_integral(const CircleSamples& f) {
  const auto& z = circle_nodes(f.size());
  cplx acc{};
  for (int k = 0; k < f.size(); ++k) acc += f[k] * z[static_cast<std::size_t>(k)];
  return acc / static_cast<double>(f.size());
}

/// sum_k coeffs[k - lo] (z - phi)^k on the circle.
inline CircleSamples laurent_on_circle(cplx phi, int lo, const std::vector<cplx>& coeffs, int n) {
  const auto& z = circle_nodes(n);
  std::vector<cplx> v(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    const cplx w = z[static_cast<std::size_t>(j)] - phi;
    cplx acc{};
    for (std::size_t i = coeffs.size(); i-- > 0;) acc = acc * w + coeffs[i];
    v[static_cast<std::size_t>(j)] = acc * std::pow(w, lo);
  }
  return CircleSamples(std::move(v));
}

inline CircleSamples eval_on_circle(const TruncatedSeries& f, int n) {
  const cplx c = f.chart().is_pole() ? f.chart().center : cplx{0.0, 0.0};
  if (f.empty_storage()) return CircleSamples::constant(n, 0.0);
  return laurent_on_circle(c, f.lo(), f.coeffs(), n);
}

/// Contour coefficients c_k = (1/2 pi i) \oint f (z - phi)^{-k-1} dz for k = lo..hi.
inline std::vector<cplx> coefficients(const CircleSamples& f, cplx phi, int lo, int hi) {
  const int n = f.size();
  const auto& z = circle_nodes(n);
  std::vector<cplx> out;
  if (hi < lo) return out;
  std::vector<cplx> pw(static_cast<std::size_t>(n));
  std::vector<cplx> r(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    const cplx w = z[static_cast<std::size_t>(j)] - phi;
    r[static_cast<std::size_t>(j)] = 1.0 / w;
    pw[static_cast<std::size_t>(j)] = std::pow(w, -lo - 1) * z[static_cast<std::size_t>(j)] * f[j];
  }
  for (int k = lo; k <= hi; ++k) {
    cplx acc{};
    for (int j = 0; j < n; ++j) {
      acc += pw[static_cast<std::size_t>(j)];
      pw[static_cast<std::size_t>(j)] *= r[static_cast<std::size_t>(j)];
    }
    out.push_back(acc / static_cast<double>(n));
  }
  return out;
}

inline cplx coefficient(const CircleSamples& f, cplx phi, int k) { return coefficients(f, phi, k, k)[0]; }

/// Coefficient extraction into an AtPole series; the outer `guard` exponents on
/// each side are stored but left out of the exact window.
inline TruncatedSeries samples_to_series(const CircleSamples& f, cplx phi, int lo, int hi, int guard = 2) {
  const int n = f.size();
  if (hi - lo + 1 > n / 2 || std::max(std::abs(lo), std::abs(hi)) > n / 2)
    throw WindowExhausted("samples_to_series: window exceeds the resolution of the sample grid");
  return {Chart::pole(phi), lo, coefficients(f, phi, lo, hi), lo + guard, hi - guard};
}

/// Fourier split: plus keeps modes k >= 0, minus keeps k < 0.
inline CircleSamples project(const CircleSamples& f, Sign sign) {
  auto m = fourier_modes(f.values);
  const int n = f.size();
  for (int k = 0; k < n; ++k) {
    const bool nonneg = signed_mode(k, n) >= 0;
    if (nonneg != (sign == Sign::Plus)) m[static_cast<std::size_t>(k)] = 0.0;
  }
  return CircleSamples(from_fourier_modes(std::move(m)));
}
inline CircleSamples plus_part(const CircleSamples& f) { return project(f, Sign::Plus); }
inline CircleSamples minus_part(const CircleSamples& f) { return project(f, Sign::Minus); }

/// Spectral d/dz on the circle.
inline CircleSamples derivative(const CircleSamples& f) {
  const int n = f.size();
  auto m = fourier_modes(f.values);
  std::vector<cplx> d(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    const int kk = signed_mode(k, n);
    const int target = kk - 1;
    if (target < -n / 2) continue;
    d[static_cast<std::size_t>((target + n) % n)] = static_cast<double>(kk) * m[static_cast<std::size_t>(k)];
  }
  return CircleSamples(from_fourier_modes(std::move(d)));
}

/// Keep the (z - phi) exponents >= k0 of an annulus function.
inline CircleSamples clip_ge(const CircleSamples& f, cplx phi, int k0) {
  const int n = f.size();
  auto out = plus_part(f);
  if (k0 < 0) {
    auto c = coefficients(f, phi, k0, -1);
    out += laurent_on_circle(phi, k0, c, n);
  } else if (k0 > 0) {
    auto c = coefficients(f, phi, 0, k0 - 1);
    out -= laurent_on_circle(phi, 0, c, n);
  }
  return out;
}

/// Keep the (z - phi) exponents <= k1 of an annulus function.
inline CircleSamples clip_le(const CircleSamples& f, cplx phi, int k1) {
  const int n = f.size();
  auto out = minus_part(f);
  if (k1 >= 0) {
    auto c = coefficients(f, phi, 0, k1);
    out += laurent_on_circle(phi, 0, c, n);
  } else if (k1 < -1) {
    auto c = coefficients(f, phi, k1 + 1, -1);
    out -= laurent_on_circle(phi, k1 + 1, c, n);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Winding, roots and logarithms along the circle
// ---------------------------------------------------------------------------

struct WindingInfo {
  int winding = 0;
  double residual = 0.0;  // distance of the raw count from the nearest integer
};

inline std::vector<double> unwrapped_argument(const CircleSamples& f) {
  const int n = f.size();
  std::vector<double> th(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k)
    if (f[k] == cplx{}) throw BranchError("zero sample on the circle");
  th[0] = std::arg(f[0]);
  for (int k = 1; k < n; ++k) th[static_cast<std::size_t>(k)] = th[static_cast<std::size_t>(k - 1)] + std::arg(f[k] / f[k - 1]);
  return th;
}

inline WindingInfo winding_info(const CircleSamples& f) {
  const auto th = unwrapped_argument(f);
  const double total = th.back() + std::arg(f[0] / f[f.size() - 1]) - th.front();
  const double raw = total / (2.0 * kPi);
  const double r = std::round(raw);
  return {static_cast<int>(r), std::abs(raw - r)};
}

/// Winding number about 0; throws if the discrete count is not close to an integer.
inline int winding_number(const CircleSamples& f) {
  const auto w = winding_info(f);
  if (w.residual >= 0.1) throw BranchError("winding count is not resolved by the sample grid");
  return w.winding;
}

/// Continuous branch of f^alpha along the circle, anchored at z = 1 by the principal argument.
inline CircleSamples power_on_circle(const CircleSamples& f, Rational alpha, bool accept_cut = false) {
  const int w = winding_number(f);
  const Rational wa = Rational(w) * alpha;
  if (!wa.is_integer() && !accept_cut)
    throw BranchError("power_on_circle: winding " + std::to_string(w) + " times alpha is not an integer");
  const auto th = unwrapped_argument(f);
  const double a = alpha.value();
  std::vector<cplx> v(f.values.size());
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = std::polar(std::pow(std::abs(f.values[k]), a), a * th[k]);
  CircleSamples out(std::move(v));
  if (wa.is_integer()) out.winding = static_cast<int>(wa.num);
  return out;
}

enum class LogMode { Strict, Cut };

/// Logarithm along the circle. Strict requires winding zero; Cut keeps the
/// unwrapped branch anchored at z = 1, which jumps by 2 pi i * winding between
/// the last sample and the first. The winding is recorded on the result.
inline CircleSamples log_on_circle(const CircleSamples& f, LogMode mode) {
  const int w = winding_number(f);
  if (mode == LogMode::Strict && w != 0)
    throw BranchError("log_on_circle: strict mode with winding " + std::to_string(w));
  const auto th = unwrapped_argument(f);
  std::vector<cplx> v(f.values.size());
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = {std::log(std::abs(f.values[k])), th[k]};
  return CircleSamples(std::move(v), w);
}

// ---------------------------------------------------------------------------
// Chart changes and inversion
// ---------------------------------------------------------------------------

namespace detail {
inline std::vector<cplx> z_chart_coefficients(const CircleSamples& f, int lo, int hi) {
  const int n = f.size();
  if (std::max(std::abs(lo), std::abs(hi)) >= n / 2)
    throw WindowExhausted("rechart: window exceeds the resolution of the sample grid");
  auto m = fourier_modes(f.values);
  std::vector<cplx> out;
  for (int k = lo; k <= hi; ++k) out.push_back(m[static_cast<std::size_t>((k % n + n) % n)]);
  return out;
}
}  // namespace detail

/// Re-expand f in another chart on the exponent window [lo, hi]. Series known
/// on the relevant side are re-expanded exactly with binomial sums; anything
/// else goes through the circle samples.
inline TruncatedSeries rechart(const TruncatedSeries& f, const Chart& to, int lo, int hi, int n_samples = 256) {
  if (f.chart() == to) {
    auto g = clip_le(clip_ge(f, lo), hi);
    return g;
  }
  const auto top = f.top_nonzero();
  const auto bot = f.bottom_nonzero();
  if (!top) return TruncatedSeries::zero(to);

  if (f.chart().is_pole() && !to.is_pole() && f.known_above()) {
    const cplx phi = f.chart().center;
    std::vector<cplx> c;
    for (int j = lo; j <= hi; ++j) {
      cplx acc{};
      for (int k = std::max(j, *bot); k <= *top; ++k) {
        // binom(k, k - j) (-phi)^{k - j}
        const int i = k - j;
        cplx b = 1.0;
        for (int r = 0; r < i; ++r) b *= static_cast<double>(k - r) / static_cast<double>(r + 1) * (-phi);
        acc += f[k] * b;
      }
      c.push_back(acc);
    }
    int elo = std::max(lo, f.exact_lo());
    if (f.known_below() && *bot >= 0 && lo <= 0) elo = -kOpen;
    const int ehi = hi >= *top ? kOpen : hi;
    return {to, lo, std::move(c), elo, ehi};
  }

  if (!f.chart().is_pole() && to.is_pole() && f.known_below() && f.known_above() && *bot >= 0) {
    const cplx phi = to.center;
    std::vector<cplx> c;
    for (int i = lo; i <= hi; ++i) {
      cplx acc{};
      for (int j = std::max(i, 0); j <= *top; ++j) {
        if (i < 0) break;
        // binom(j, i) phi^{j - i}
        double b = 1.0;
        for (int r = 0; r < i; ++r) b *= static_cast<double>(j - r) / static_cast<double>(r + 1);
        acc += f[j] * b * std::pow(phi, j - i);
      }
      c.push_back(acc);
    }
    const int elo = lo <= 0 ? -kOpen : lo;
    const int ehi = hi >= *top ? kOpen : hi;
    return {to, lo, std::move(c), elo, ehi};
  }

  const auto s = eval_on_circle(f, n_samples);
  if (to.is_pole()) return samples_to_series(s, to.center, lo, hi);
  return {to, lo, detail::z_chart_coefficients(s, lo, hi), lo + 2, hi - 2};
}

enum class InversionKind { AtInfinity, AtPole };

/// Compositional inverse by iterated substitution.
///
/// AtInfinity: f = z + sum_{k>=1} c_k z^{-k} gives z = chi + sum_{k>=1} d_k chi^{-k},
/// returned as an AtInfinity series in the variable chi.
/// AtPole: f = c_{-1}(z - phi)^{-1} + c_0 + ... gives z = phi + sum_{k>=1} e_k chi^{-k},
/// returned the same way (constant term phi).
inline TruncatedSeries lagrange_invert(const TruncatedSeries& f, InversionKind kind, int depth) {
  const std::size_t len = static_cast<std::size_t>(depth) + 2;
  if (kind == InversionKind::AtInfinity) {
    if (f.chart().is_pole()) throw ChartMismatch("lagrange_invert: expected a series at infinity");
    if (!f.known_above() || f.top_nonzero() != 1 || std::abs(f[1] - 1.0) > 1e-12 || std::abs(f[0]) > 1e-12)
      throw std::domain_error("lagrange_invert: expected the normal form z + O(1/z)");
    if (!f.known_below() && -f.exact_lo() < depth) throw WindowExhausted("lagrange_invert: depth exceeds exact window");
    // z = chi * S(u), u = 1/chi, with S = 1 - sum_k c_k u^{k+1} S^{-k}.
    fps::Vec S(len);
    S[0] = 1.0;
    for (int it = 0; it < depth + 2; ++it) {
      fps::Vec next(len);
      next[0] = 1.0;
      const auto Sinv = fps::inv(S, len);
      fps::Vec Sk(len);
      Sk[0] = 1.0;
      for (int k = 1; k <= depth; ++k) {
        Sk = fps::mul(Sk, Sinv, len);
        const cplx ck = f[-k];
        if (ck == cplx{}) continue;
        for (std::size_t i = 0; i + static_cast<std::size_t>(k) + 1 < len; ++i) next[i + static_cast<std::size_t>(k) + 1] -= ck * Sk[i];
      }
      S = next;
    }
    // coefficient of chi^{1-i} is S[i]
    std::vector<cplx> c;
    for (int e = -depth; e <= 1; ++e) c.push_back(S[static_cast<std::size_t>(1 - e)]);
    return {Chart::infinity(), -depth, std::move(c), -depth, kOpen};
  }

  if (!f.chart().is_pole()) throw ChartMismatch("lagrange_invert: expected a series at the pole");
  if (!f.known_below() || f.bottom_nonzero() != -1) throw std::domain_error("lagrange_invert: expected a simple pole");
  if (!f.known_above() && f.exact_hi() < depth - 2) throw WindowExhausted("lagrange_invert: depth exceeds exact window");
  // y = 1/chi, w = z - phi = B(y) with B = y * P(B), P(w) = c_{-1} + c_0 w + c_1 w^2 + ...
  fps::Vec P(len);
  for (std::size_t i = 0; i < len; ++i) P[i] = f[static_cast<int>(i) - 1];
  fps::Vec B(len);
  for (int it = 0; it < depth + 2; ++it) {
    auto PB = fps::compose(P, B, len);
    fps::Vec next(len);
    for (std::size_t i = 0; i + 1 < len; ++i) next[i + 1] = PB[i];
    B = next;
  }
  std::vector<cplx> c;
  for (int e = -depth; e <= 0; ++e) c.push_back(e == 0 ? f.chart().center : B[static_cast<std::size_t>(-e)]);
  return {Chart::infinity(), -depth, std::move(c), -depth, kOpen};
}

}  // namespace frobkit

#pragma once

// Points (a, ahat) of the manifold, their derived functions zeta and ell,
// tangent and cotangent vectors, and a seeded generator of valid points.

#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "frobkit/series.hpp"

namespace frobkit {

struct ModelParams {
  int m = 2;
  int n = 1;
  int s = 1;
  int tail_depth = 8;
  int n_samples = 256;
  std::map<std::string, double> tolerances;

  void check() const {
    if (m < 1 || n < 1 || s < 1) throw std::invalid_argument("m, n and s must be positive");
    if (tail_depth < 4) throw std::invalid_argument("tail_depth must be at least 4");
    if (n_samples < 64 || !valid_sample_count(n_samples))
      throw std::invalid_argument("n_samples must be a power of two no smaller than 64");
  }

  /// Number of terms kept in formal reciprocals and local power expansions.
  [[nodiscard]] int expansion_depth() const { return tail_depth + 2 * (m + n) + 12; }

  [[nodiscard]] double tol(const std::string& key, double fallback) const {
    auto it = tolerances.find(key);
    return it == tolerances.end() ? fallback : it->second;
  }
};

/// Exact derived data of a point, computed once at construction.
struct PointData {
  TruncatedSeries a, ahat, da, dahat, zeta, dzeta, ell, dell;
  TruncatedSeries inv_da;     // 1/a' expanded from its top term
  TruncatedSeries inv_dahat;  // 1/ahat' expanded from its bottom term
  TruncatedSeries inv_dell;   // 1/ell' at phi, from its bottom term
  TruncatedSeries ell_inf;    // ell in powers of z at infinity
  TruncatedSeries dell_inf;
  TruncatedSeries inv_dell_inf;
  TruncatedSeries a_inf;  // a in powers of z at infinity
  CircleSamples sa, sahat, sda, sdahat, szeta, sdzeta, sell, sdell;
};

/// z^m written in powers of (z - phi).
inline TruncatedSeries head_series(int m, cplx phi) {
  std::vector<cplx> c(static_cast<std::size_t>(m) + 1);
  double binom = 1.0;
  for (int k = 0; k <= m; ++k) {
    c[static_cast<std::size_t>(k)] = binom * std::pow(phi, m - k);
    binom = binom * (m - k) / (k + 1);
  }
  return {Chart::pole(phi), 0, std::move(c)};
}

/// A point of the manifold. The a-tail stores exponents m-2-T..m-2 and ahat
/// stores -n..-n+T, where T is the tail depth; the z^m head of a is implicit.
class Point {
 public:
  Point(ModelParams params, cplx phi, std::vector<cplx> a_tail, std::vector<cplx> ahat)
      : params_(std::move(params)), phi_(phi), a_tail_(std::move(a_tail)), ahat_(std::move(ahat)) {
    params_.check();
    const auto len = static_cast<std::size_t>(params_.tail_depth) + 1;
    if (a_tail_.size() != len || ahat_.size() != len) throw std::invalid_argument("Point: coefficient count must be tail_depth + 1");
    if (std::abs(phi_) >= 1.0) throw std::invalid_argument("Point: |phi| must be below 1");
    build();
  }

  [[nodiscard]] const ModelParams& params() const { return params_; }
  [[nodiscard]] int m() const { return params_.m; }
  [[nodiscard]] int n() const { return params_.n; }
  [[nodiscard]] int s() const { return params_.s; }
  [[nodiscard]] int tail_depth() const { return params_.tail_depth; }
  [[nodiscard]] int n_samples() const { return params_.n_samples; }
  [[nodiscard]] cplx phi() const { return phi_; }
  [[nodiscard]] Chart chart() const { return Chart::pole(phi_); }

  [[nodiscard]] int a_lo() const { return m() - 2 - tail_depth(); }
  [[nodiscard]] int a_hi() const { return m() - 2; }
  [[nodiscard]] int ahat_lo() const { return -n(); }
  [[nodiscard]] int ahat_hi() const { return -n() + tail_depth(); }

  [[nodiscard]] const std::vector<cplx>& a_tail() const { return a_tail_; }
  [[nodiscard]] const std::vector<cplx>& ahat() const { return ahat_; }
  [[nodiscard]] cplx a_coef(int i) const {
    return i < a_lo() || i > a_hi() ? cplx{} : a_tail_[static_cast<std::size_t>(i - a_lo())];
  }
  [[nodiscard]] cplx ahat_coef(int i) const {
    return i < ahat_lo() || i > ahat_hi() ? cplx{} : ahat_[static_cast<std::size_t>(i - ahat_lo())];
  }

  [[nodiscard]] TruncatedSeries a_tail_series() const { return {chart(), a_lo(), a_tail_}; }
  [[nodiscard]] TruncatedSeries ahat_series() const { return {chart(), ahat_lo(), ahat_}; }

  [[nodiscard]] const PointData& data() const { return *data_; }

 private:
  void build() {
    auto d = std::make_shared<PointData>();
    const int N = n_samples();
    const int depth = params_.expansion_depth();
    d->a = add(head_series(m(), phi_), a_tail_series());
    d->ahat = ahat_series();
    d->da = d_dz(d->a);
    d->dahat = d_dz(d->ahat);
    d->zeta = sub(d->a, d->ahat);
    d->dzeta = d_dz(d->zeta);
    d->ell = add(project(d->a, Sign::Plus), project(d->ahat, Sign::Minus));
    d->dell = d_dz(d->ell);
    d->inv_da = reciprocal_leading(d->da, Side::Top, depth);
    d->inv_dahat = reciprocal_leading(d->dahat, Side::Bottom, depth);
    d->inv_dell = reciprocal_leading(d->dell, Side::Bottom, depth);
    d->ell_inf = rechart(d->ell, Chart::infinity(), -depth - n(), m());
    d->dell_inf = d_dz(d->ell_inf);
    d->inv_dell_inf = reciprocal_leading(d->dell_inf, Side::Top, depth);
    d->a_inf = rechart(d->a, Chart::infinity(), -2 * depth, m());
    d->sa = eval_on_circle(d->a, N);
    d->sahat = eval_on_circle(d->ahat, N);
    d->sda = eval_on_circle(d->da, N);
    d->sdahat = eval_on_circle(d->dahat, N);
    d->szeta = eval_on_circle(d->zeta, N);
    d->sdzeta = eval_on_circle(d->dzeta, N);
    d->sell = eval_on_circle(d->ell, N);
    d->sdell = eval_on_circle(d->dell, N);
    data_ = std::move(d);
  }

  ModelParams params_;
  cplx phi_;
  std::vector<cplx> a_tail_;
  std::vector<cplx> ahat_;
  std::shared_ptr<const PointData> data_;
};

inline const TruncatedSeries& zeta(const Point& p) { return p.data().zeta; }
inline const TruncatedSeries& ell(const Point& p) { return p.data().ell; }

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

struct ValidationReport {
  bool ahat_lead_ok = false;
  double ahat_lead_abs = 0.0;
  bool derivatives_ok = false;
  double min_dzeta = 0.0;
  double min_dell = 0.0;
  bool zeta_winding_ok = false;
  WindingInfo zeta_winding;
  bool ab_winding_ok = false;
  WindingInfo a_winding;
  WindingInfo ahat_winding;

  [[nodiscard]] bool ok() const { return ahat_lead_ok && derivatives_ok && zeta_winding_ok && ab_winding_ok; }
};

namespace detail {
inline WindingInfo safe_winding(const CircleSamples& f) {
  try {
    return winding_info(f);
  } catch (const BranchError&) {
    return {0, 0.5};
  }
}
}  // namespace detail

/// The four defining conditions, checked numerically on the sample grid.
inline ValidationReport validate(const Point& p) {
  const auto& d = p.data();
  const double tol = p.params().tol("derivative_floor", 1e-6);
  ValidationReport r;
  r.ahat_lead_abs = std::abs(p.ahat_coef(-p.n()));
  r.ahat_lead_ok = r.ahat_lead_abs > 1e-12;
  r.min_dzeta = min_abs(d.sdzeta);
  r.min_dell = min_abs(d.sdell);
  r.derivatives_ok = r.min_dzeta > tol && r.min_dell > tol;
  r.zeta_winding = detail::safe_winding(d.szeta);
  r.zeta_winding_ok = r.zeta_winding.residual < 0.1 && r.zeta_winding.winding == p.s();
  r.a_winding = detail::safe_winding(d.sa);
  r.ahat_winding = detail::safe_winding(d.sahat);
  r.ab_winding_ok = r.a_winding.residual < 0.1 && r.ahat_winding.residual < 0.1 && r.a_winding.winding == p.m() &&
                    r.ahat_winding.winding == p.n();
  return r;
}

/// Largest Fourier mode in the top band |k| >= N/2 - 8, relative to the largest mode.
inline double spectral_tail(const CircleSamples& f) {
  const auto modes = fourier_modes(f.values);
  const int n = f.size();
  double top = 0.0;
  double tail = 0.0;
  for (int k = 0; k < n; ++k) {
    const double v = std::abs(modes[static_cast<std::size_t>(k)]);
    top = std::max(top, v);
    if (std::abs(signed_mode(k, n)) >= n / 2 - 8) tail = std::max(tail, v);
  }
  return top > 0.0 ? tail / top : 0.0;
}

/// Resolution of the functions whose singularities limit quadrature accuracy:
/// reciprocals of zeta, zeta', a, ahat and ell' must be resolved by the grid.
inline double resolution_tail(const Point& p) {
  const auto& d = p.data();
  const auto one = CircleSamples::constant(p.n_samples(), 1.0);
  double worst = 0.0;
  for (const auto* f : {&d.szeta, &d.sdzeta, &d.sa, &d.sahat, &d.sdell}) worst = std::max(worst, spectral_tail(one / *f));
  return worst;
}

// ---------------------------------------------------------------------------
// Tangent and cotangent vectors
// ---------------------------------------------------------------------------

/// Tangent vector (xi, xihat) as functions on the circle; xi lives in
/// (z-phi)^{m-2} H^- and xihat in (z-phi)^{-n-1} H^+.
struct TangentVec {
  CircleSamples xi;
  CircleSamples xihat;

  static TangentVec zero(int n) { return {CircleSamples::constant(n, 0.0), CircleSamples::constant(n, 0.0)}; }
  friend TangentVec operator+(const TangentVec& u, const TangentVec& v) { return {u.xi + v.xi, u.xihat + v.xihat}; }
  friend TangentVec operator-(const TangentVec& u, const TangentVec& v) { return {u.xi - v.xi, u.xihat - v.xihat}; }
  friend TangentVec operator*(cplx c, const TangentVec& v) { return {c * v.xi, c * v.xihat}; }
};

/// Covector (omega, omegahat); omega lives in (z-phi)^{-m+1} H^+ and omegahat in (z-phi)^n H^-.
struct Covector {
  CircleSamples omega;
  CircleSamples omegahat;

  static Covector zero(int n) { return {CircleSamples::constant(n, 0.0), CircleSamples::constant(n, 0.0)}; }
  friend Covector operator+(const Covector& u, const Covector& v) { return {u.omega + v.omega, u.omegahat + v.omegahat}; }
  friend Covector operator-(const Covector& u, const Covector& v) { return {u.omega - v.omega, u.omegahat - v.omegahat}; }
  friend Covector operator*(cplx c, const Covector& v) { return {c * v.omega, c * v.omegahat}; }
};

inline double max_abs(const TangentVec& t) { return std::max(max_abs(t.xi), max_abs(t.xihat)); }
inline double max_abs(const Covector& w) { return std::max(max_abs(w.omega), max_abs(w.omegahat)); }

/// (1/2 pi i) \oint (omega xi + omegahat xihat) dz.
inline cplx pairing(const Covector& w, const TangentVec& t) {
  return contour_integral(w.omega * t.xi + w.omegahat * t.xihat);
}

/// Size of the part of a tangent vector lying outside its window, measured by
/// the largest contour coefficient beyond the window edge (up to `span` terms).
inline double tangent_window_defect(const Point& p, const TangentVec& t, int span = 12) {
  double e = 0.0;
  for (auto c : coefficients(t.xi, p.phi(), p.m() - 1, p.m() - 2 + span)) e = std::max(e, std::abs(c));
  for (auto c : coefficients(t.xihat, p.phi(), -p.n() - 1 - span, -p.n() - 2)) e = std::max(e, std::abs(c));
  return e;
}

inline double covector_window_defect(const Point& p, const Covector& w, int span = 12) {
  double e = 0.0;
  for (auto c : coefficients(w.omega, p.phi(), -p.m() - span, -p.m())) e = std::max(e, std::abs(c));
  for (auto c : coefficients(w.omegahat, p.phi(), p.n() + 1, p.n() + span)) e = std::max(e, std::abs(c));
  return e;
}

/// Remove the kernel summand (z-phi)^{-m} H^- x (z-phi)^n H^+ of the covector
/// space, leaving the finite part on which identities are compared.
inline Covector kernel_quotient(const Point& p, const Covector& w) {
  const cplx phi = p.phi();
  return {clip_ge(w.omega, phi, -p.m() + 1), clip_le(w.omegahat, phi, p.n() - 1)};
}

// ---------------------------------------------------------------------------
// Raw coordinate directions
// ---------------------------------------------------------------------------

/// A direction in the raw chart (phi, a_i, ahat_i), with the same index layout
/// as the point's stored coefficients.
struct RawVec {
  cplx dphi{};
  std::vector<cplx> da;
  std::vector<cplx> dahat;

  static RawVec zero(const Point& p) {
    const auto len = static_cast<std::size_t>(p.tail_depth()) + 1;
    return {cplx{}, std::vector<cplx>(len), std::vector<cplx>(len)};
  }
  static RawVec phi_dir(const Point& p) {
    auto v = zero(p);
    v.dphi = 1.0;
    return v;
  }
  static RawVec a_dir(const Point& p, int i) {
    auto v = zero(p);
    v.da.at(static_cast<std::size_t>(i - p.a_lo())) = 1.0;
    return v;
  }
  static RawVec ahat_dir(const Point& p, int i) {
    auto v = zero(p);
    v.dahat.at(static_cast<std::size_t>(i - p.ahat_lo())) = 1.0;
    return v;
  }

  friend RawVec operator+(RawVec u, const RawVec& v) {
    u.dphi += v.dphi;
    for (std::size_t k = 0; k < u.da.size(); ++k) u.da[k] += v.da[k];
    for (std::size_t k = 0; k < u.dahat.size(); ++k) u.dahat[k] += v.dahat[k];
    return u;
  }
  friend RawVec operator*(cplx c, RawVec v) {
    v.dphi *= c;
    for (auto& x : v.da) x *= c;
    for (auto& x : v.dahat) x *= c;
    return v;
  }
};

/// p + h v in raw coordinates.
inline Point shifted(const Point& p, const RawVec& v, cplx h) {
  auto at = p.a_tail();
  auto ah = p.ahat();
  for (std::size_t k = 0; k < at.size(); ++k) at[k] += h * v.da[k];
  for (std::size_t k = 0; k < ah.size(); ++k) ah[k] += h * v.dahat[k];
  return {p.params(), p.phi() + h * v.dphi, std::move(at), std::move(ah)};
}

/// Action (da, dahat) of a raw direction, as exact series at the point.
struct SeriesPair {
  TruncatedSeries a;
  TruncatedSeries ahat;
};

inline SeriesPair raw_action(const Point& p, const RawVec& v) {
  const Chart c = p.chart();
  TruncatedSeries va(c, p.a_lo(), v.da);
  TruncatedSeries vah(c, p.ahat_lo(), v.dahat);
  const auto tail_d = d_dz(p.a_tail_series());
  return {sub(va, scale(tail_d, v.dphi)), sub(vah, scale(p.data().dahat, v.dphi))};
}

inline TangentVec to_tangent(const Point& p, const RawVec& v) {
  const auto s = raw_action(p, v);
  return {eval_on_circle(s.a, p.n_samples()), eval_on_circle(s.ahat, p.n_samples())};
}

/// Second derivative d_u d_v (a, ahat) for constant raw directions u, v.
inline SeriesPair raw_second_action(const Point& p, const RawVec& u, const RawVec& v) {
  const Chart c = p.chart();
  auto second = [&](const TruncatedSeries& f, int lo, const std::vector<cplx>& uc, const std::vector<cplx>& vc) {
    TruncatedSeries ua(c, lo, uc);
    TruncatedSeries va(c, lo, vc);
    auto t = scale(d_dz(d_dz(f)), u.dphi * v.dphi);
    t = sub(t, scale(d_dz(va), u.dphi));
    t = sub(t, scale(d_dz(ua), v.dphi));
    return t;
  };
  return {second(p.a_tail_series(), p.a_lo(), u.da, v.da), second(p.ahat_series(), p.ahat_lo(), u.dahat, v.dahat)};
}

/// Convert a tangent vector back to raw coordinates. The phi component is read
/// off the (z-phi)^{-n-1} coefficient of xihat; coefficients outside the stored
/// tails are dropped.
inline RawVec tangent_to_raw(const Point& p, const TangentVec& t) {
  const cplx phi = p.phi();
  RawVec v = RawVec::zero(p);
  const auto ch = coefficients(t.xihat, phi, -p.n() - 1, p.ahat_hi());
  const cplx lead = static_cast<double>(p.n()) * p.ahat_coef(-p.n());
  v.dphi = ch[0] / lead;
  for (int i = p.ahat_lo(); i <= p.ahat_hi(); ++i)
    v.dahat[static_cast<std::size_t>(i - p.ahat_lo())] =
        ch[static_cast<std::size_t>(i + p.n() + 1)] + v.dphi * p.data().dahat[i];
  const auto ca = coefficients(t.xi, phi, p.a_lo(), p.a_hi());
  const auto tail_d = d_dz(p.a_tail_series());
  for (int i = p.a_lo(); i <= p.a_hi(); ++i)
    v.da[static_cast<std::size_t>(i - p.a_lo())] = ca[static_cast<std::size_t>(i - p.a_lo())] + v.dphi * tail_d[i];
  return v;
}

// ---------------------------------------------------------------------------
// Seeded point generation
// ---------------------------------------------------------------------------

struct GenerationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Base ahat = c (z-phi)^{-n} + d (z-phi)^n. With s == m the a-head dominates
/// zeta on the circle (small c, d); with s == n the d-term dominates (large d).
struct BaseFamily {
  double c;
  double d;
};

inline BaseFamily base_family(const ModelParams& params) {
  if (params.s == params.m) return {0.05, 0.3};
  if (params.s == params.n) return {0.3, 5.0};
  throw GenerationError("no point family is known with winding(zeta) = s for these (m, n, s)");
}

/// Deterministic random point: base family plus complex Gaussian noise that
/// shrinks by 0.2 per exponent step away from each head, capped at 0.3 times
/// the head, with phi uniform in |phi| <= 0.4. Draws are retried until the
/// point validates and its reciprocal data are resolved by the sample grid.
inline Point random_point(const ModelParams& params, std::uint64_t seed, int max_retries = 100) {
  params.check();
  const auto fam = base_family(params);
  const double resolution_cap = params.tol("resolution_tail", 1e-8);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(2.0));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  auto noise = [&](double amp) {
    cplx g{normal(rng), normal(rng)};
    if (std::abs(g) > 1.0) g /= std::abs(g);
    return amp * g;
  };
  const int m = params.m;
  const int n = params.n;
  const int T = params.tail_depth;
  for (int attempt = 0; attempt < max_retries; ++attempt) {
    const cplx phi = std::polar(0.4 * std::sqrt(unif(rng)), 2.0 * kPi * unif(rng));
    std::vector<cplx> at(static_cast<std::size_t>(T) + 1);
    for (int i = m - 2 - T; i <= m - 2; ++i) at[static_cast<std::size_t>(i - (m - 2 - T))] = noise(0.3 * std::pow(0.2, m - i));
    std::vector<cplx> ah(static_cast<std::size_t>(T) + 1);
    for (int i = -n; i <= -n + T; ++i) {
      cplx v{};
      v += i == -n ? fam.c * (1.0 + noise(0.15)) : noise(0.3 * fam.c * std::pow(0.2, i + n));
      v += i == n ? fam.d * (1.0 + noise(0.15)) : noise(0.3 * fam.d * std::pow(0.2, std::abs(i - n)));
      ah[static_cast<std::size_t>(i + n)] = v;
    }
    Point p(params, phi, std::move(at), std::move(ah));
    if (!validate(p).ok()) continue;
    if (resolution_tail(p) > resolution_cap) continue;
    return p;
  }
  throw GenerationError("no valid point after " + std::to_string(max_retries) + " draws");
}

}  // namespace frobkit

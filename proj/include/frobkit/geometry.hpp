#pragma once

// Frobenius structure at a point: metric in both directions, the Levi-Civita
// connection on vectors and one-forms, the cotangent product, the operator C,
// unity and Euler fields, the spectrum mu, the R matrix and the intersection form.

#include <functional>
#include <string>
#include <vector>

#include "frobkit/manifold.hpp"

namespace frobkit {

// ---------------------------------------------------------------------------
// Flat coordinate labels, mu and R
// ---------------------------------------------------------------------------

struct CoordIndex {
  enum class Kind { T, H, Hhat };
  Kind kind = Kind::T;
  int index = 0;

  static CoordIndex t(int i) { return {Kind::T, i}; }
  static CoordIndex h(int j) { return {Kind::H, j}; }
  static CoordIndex hhat(int k) { return {Kind::Hhat, k}; }

  friend bool operator==(const CoordIndex& a, const CoordIndex& b) { return a.kind == b.kind && a.index == b.index; }
  friend bool operator<(const CoordIndex& a, const CoordIndex& b) {
    return a.kind != b.kind ? a.kind < b.kind : a.index < b.index;
  }

  [[nodiscard]] std::string name() const {
    switch (kind) {
      case Kind::T: return "t" + std::to_string(index);
      case Kind::H: return "h" + std::to_string(index);
      case Kind::Hhat: return "hhat" + std::to_string(index);
    }
    return "?";
  }

  void check(const ModelParams& p) const {
    if (kind == Kind::H && (index < 1 || index > p.m - 1)) throw std::out_of_range("h index outside 1..m-1");
    if (kind == Kind::Hhat && (index < 0 || index > p.n)) throw std::out_of_range("hhat index outside 0..n");
  }
};

inline Rational mu_of(const ModelParams& p, const CoordIndex& u) {
  u.check(p);
  switch (u.kind) {
    case CoordIndex::Kind::T: return Rational(u.index, p.s) + Rational(1, 2);
    case CoordIndex::Kind::H: return Rational(1, 2) - Rational(u.index, p.m);
    case CoordIndex::Kind::Hhat: return Rational(1, 2) - Rational(u.index, p.n);
  }
  return {};
}

/// Entry R^u_v of the nilpotent matrix R.
inline Rational r_entry(const ModelParams& p, const CoordIndex& u, const CoordIndex& v) {
  u.check(p);
  v.check(p);
  const auto t0 = CoordIndex::t(0);
  const auto hh0 = CoordIndex::hhat(0);
  if (v == CoordIndex::t(-p.s) && (u == t0 || u == hh0)) return Rational(1) - Rational(p.s, p.m);
  if (v == CoordIndex::hhat(p.n) && u == hh0) return Rational(p.n, p.m) + Rational(1);
  if (v == CoordIndex::hhat(p.n) && u == t0) return Rational(p.n, p.m) - Rational(p.n, p.s);
  return {};
}

// ---------------------------------------------------------------------------
// Finite-difference helper
// ---------------------------------------------------------------------------

/// Central difference at step h and h/2 combined by one Richardson step.
template <class F>
auto central_richardson(F&& f, double h = 1e-5) {
  auto d = [&](double hh) { return cplx(1.0 / (2.0 * hh)) * (f(hh) - f(-hh)); };
  auto d1 = d(h);
  auto d2 = d(h / 2.0);
  return cplx(4.0 / 3.0) * d2 - cplx(1.0 / 3.0) * d1;
}

/// Directional derivative of a function of the point along a raw direction.
template <class F>
auto raw_derivative(const Point& p, const RawVec& v, F&& f, double h = 1e-5) {
  return central_richardson([&](double t) { return f(shifted(p, v, t)); }, h);
}

// ---------------------------------------------------------------------------
// Local formal division by a' and ahat'
// ---------------------------------------------------------------------------

namespace detail {

/// Coefficients k in [kmin, kmax] of Y/a' with 1/a' expanded from its top
/// term; only the coefficients j <= jtop of Y enter.
inline CircleSamples formal_div_top(const Point& p, const CircleSamples& y, int kmin, int kmax, int jtop) {
  const int m = p.m();
  if (kmax < kmin) return CircleSamples::constant(p.n_samples(), 0.0);
  const int jmin = kmin + m - 1;
  if (jtop < jmin) return CircleSamples::constant(p.n_samples(), 0.0);
  const auto cy = coefficients(y, p.phi(), jmin, jtop);
  const auto& r = p.data().inv_da;
  std::vector<cplx> out;
  for (int k = kmin; k <= kmax; ++k) {
    cplx acc{};
    for (int j = k + m - 1; j <= jtop; ++j) acc += cy[static_cast<std::size_t>(j - jmin)] * r[k - j];
    out.push_back(acc);
  }
  return laurent_on_circle(p.phi(), kmin, out, p.n_samples());
}

/// Coefficients k in [kmin, kmax] of Y/ahat' with 1/ahat' expanded from its
/// bottom term; only the coefficients j >= jbot of Y enter.
inline CircleSamples formal_div_bottom(const Point& p, const CircleSamples& y, int kmin, int kmax, int jbot) {
  const int n = p.n();
  if (kmax < kmin) return CircleSamples::constant(p.n_samples(), 0.0);
  const int jmax = kmax - n - 1;
  if (jmax < jbot) return CircleSamples::constant(p.n_samples(), 0.0);
  const auto cy = coefficients(y, p.phi(), jbot, jmax);
  const auto& q = p.data().inv_dahat;
  std::vector<cplx> out;
  for (int k = kmin; k <= kmax; ++k) {
    cplx acc{};
    for (int j = jbot; j <= k - n - 1; ++j) acc += cy[static_cast<std::size_t>(j - jbot)] * q[k - j];
    out.push_back(acc);
  }
  return laurent_on_circle(p.phi(), kmin, out, p.n_samples());
}

inline CircleSamples coefficient_band(const Point& p, const CircleSamples& f, int lo, int hi) {
  if (hi < lo) return CircleSamples::constant(p.n_samples(), 0.0);
  return laurent_on_circle(p.phi(), lo, coefficients(f, p.phi(), lo, hi), p.n_samples());
}

/// The variation of ell, xi_+ + xihat_-, as an exact Laurent polynomial in (z - phi).
inline TruncatedSeries ell_variation(const Point& p, const TangentVec& t) {
  const int lo = -p.n() - 1;
  std::vector<cplx> c = coefficients(t.xihat, p.phi(), lo, -1);
  if (p.m() >= 2) {
    const auto cp = coefficients(t.xi, p.phi(), 0, p.m() - 2);
    c.insert(c.end(), cp.begin(), cp.end());
  }
  return {p.chart(), lo, std::move(c), -kOpen, kOpen};
}

/// R = dl1 dl2 / ell' expanded at phi and at infinity.
struct EllQuotient {
  TruncatedSeries at_phi;
  TruncatedSeries at_inf;
};

inline EllQuotient ell_quotient(const Point& p, const TruncatedSeries& dl1, const TruncatedSeries& dl2) {
  const auto& d = p.data();
  const int depth = p.params().expansion_depth();
  const auto prod = mul(dl1, dl2);
  EllQuotient q;
  q.at_phi = mul(prod, d.inv_dell);
  const int top = prod.top_nonzero().value_or(0);
  const auto prod_inf = rechart(prod, Chart::infinity(), -depth, std::max(top, 0));
  q.at_inf = mul(prod_inf, d.inv_dell_inf);
  return q;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// The metric and its two directions
// ---------------------------------------------------------------------------

/// eta: covector to tangent vector.
inline TangentVec eta_lower(const Point& p, const Covector& w) {
  const auto& d = p.data();
  const auto W = w.omega + w.omegahat;
  const auto X = w.omega * d.sda + w.omegahat * d.sdahat;
  return {d.sda * minus_part(W) - minus_part(X), plus_part(X) - d.sdahat * plus_part(W)};
}

/// eta^{-1}: tangent vector to covector.
inline Covector eta_raise(const Point& p, const TangentVec& t) {
  const auto& d = p.data();
  const int m = p.m();
  const int n = p.n();
  const auto D = (t.xi - t.xihat) / d.sdzeta;
  Covector w;
  w.omega = -plus_part(D) + detail::formal_div_top(p, t.xi, -m + 1, -1, m - 2) - detail::coefficient_band(p, D, -m + 1, -1);
  w.omegahat = minus_part(D) + detail::coefficient_band(p, D, 0, n) - detail::formal_div_bottom(p, t.xihat, 0, n, -n - 1);
  return w;
}

/// <t1, t2>_eta: contour term plus the residues of dl1 dl2 / ell' at infinity and phi.
inline cplx metric(const Point& p, const TangentVec& t1, const TangentVec& t2) {
  const auto& d = p.data();
  const cplx gamma = contour_integral((t1.xi - t1.xihat) * (t2.xi - t2.xihat) / d.sdzeta);
  const auto q = detail::ell_quotient(p, detail::ell_variation(p, t1), detail::ell_variation(p, t2));
  return -gamma - residue(q.at_inf) - residue(q.at_phi);
}

// ---------------------------------------------------------------------------
// Levi-Civita connection
// ---------------------------------------------------------------------------

/// nabla_{u} v for constant raw coordinate fields u, v.
inline TangentVec nabla_vec(const Point& p, const RawVec& u, const RawVec& v) {
  const auto& d = p.data();
  const int N = p.n_samples();
  const auto tu = to_tangent(p, u);
  const auto tv = to_tangent(p, v);
  const auto S = (tu.xi - tu.xihat) * (tv.xi - tv.xihat) / d.sdzeta;
  const auto q = detail::ell_quotient(p, detail::ell_variation(p, tu), detail::ell_variation(p, tv));
  const auto r_inf = eval_on_circle(d_dz(clip_ge(q.at_inf, 0)), N);
  const auto r_phi = eval_on_circle(d_dz(clip_le(q.at_phi, -1)), N);
  const auto second = raw_second_action(p, u, v);
  TangentVec out;
  out.xi = eval_on_circle(second.a, N) - (derivative(minus_part(S)) + r_inf + r_phi);
  out.xihat = eval_on_circle(second.ahat, N) + derivative(plus_part(S)) - r_inf - r_phi;
  return out;
}

/// nabla_v w for a covector field w with known derivative dw along v.
inline Covector nabla_form(const Point& p, const RawVec& v, const Covector& w, const Covector& dw) {
  const auto& d = p.data();
  const cplx phi = p.phi();
  const int m = p.m();
  const int n = p.n();
  const auto t = to_tangent(p, v);
  const auto dzeta_over = (t.xi - t.xihat) / d.sdzeta;
  const auto dl = plus_part(t.xi) + minus_part(t.xihat);
  const auto dom = derivative(w.omega);
  const auto domh = derivative(w.omegahat);
  const auto A = plus_part(dom) - minus_part(domh);
  const auto y1 = (minus_part(dom) + minus_part(domh)) * dl;
  const auto y2 = (plus_part(dom) + plus_part(domh)) * dl;
  Covector out;
  out.omega = clip_ge(dw.omega - A * dzeta_over, phi, -m + 1) - detail::formal_div_top(p, y1, -m + 1, -2, m - 3);
  out.omegahat = clip_le(dw.omegahat + A * dzeta_over, phi, n) - detail::formal_div_bottom(p, y2, 0, n, -n - 1);
  return out;
}

using CovectorField = std::function<Covector(const Point&)>;

/// nabla_v of a covector field, differentiating the field by central differences.
inline Covector nabla_form(const Point& p, const RawVec& v, const CovectorField& field, double h = 1e-5) {
  const auto w = field(p);
  const auto dw = raw_derivative(p, v, field, h);
  return nabla_form(p, v, w, dw);
}

// ---------------------------------------------------------------------------
// Products, unity, C operator, Euler field, intersection form
// ---------------------------------------------------------------------------

/// Cotangent product w1 * w2.
inline Covector star(const Point& p, const Covector& w1, const Covector& w2) {
  const auto& d = p.data();
  const auto A1 = w1.omega * d.sda;
  const auto A2 = w2.omega * d.sda;
  const auto B1 = w1.omegahat * d.sdahat;
  const auto B2 = w2.omegahat * d.sdahat;
  Covector out;
  out.omega = clip_ge(w2.omega * plus_part(A1) - w1.omega * minus_part(A2) - w2.omega * minus_part(B1) -
                          w1.omega * minus_part(B2),
                      p.phi(), -p.m() + 1);
  out.omegahat = clip_le(w2.omegahat * plus_part(B1) - w1.omegahat * minus_part(B2) + w1.omegahat * plus_part(A2) +
                             w2.omegahat * plus_part(A1),
                         p.phi(), p.n());
  return out;
}

/// Unity covector ((1/m)(z-phi)^{-m+1}, 0).
inline Covector unity_covector(const Point& p) {
  const int N = p.n_samples();
  return {laurent_on_circle(p.phi(), -p.m() + 1, {1.0 / p.m()}, N), CircleSamples::constant(N, 0.0)};
}

/// C_t(w) = eta^{-1}(t) * w, from the closed form.
inline Covector c_op(const Point& p, const TangentVec& t, const Covector& w) {
  const auto& d = p.data();
  const cplx phi = p.phi();
  const int m = p.m();
  const int n = p.n();
  const auto K = (t.xi - t.xihat) / d.sdzeta;
  const auto X = w.omega * d.sda + w.omegahat * d.sdahat;
  const auto Xm = minus_part(X);
  const auto Xp = plus_part(X);
  Covector out;
  out.omega = clip_ge(t.xi * w.omega - K * d.sda * w.omega + K * Xm, phi, -m + 1) -
              detail::formal_div_top(p, t.xi * Xm, -m + 1, -2, m - 3);
  out.omegahat = clip_le(t.xihat * w.omegahat - K * d.sdahat * w.omegahat + K * Xp, phi, n) -
                 detail::formal_div_bottom(p, t.xihat * Xp, 0, n, -n - 1);
  return out;
}

/// Euler field as a raw direction: phi/m along phi and (1 - i/m) c_i along each coefficient.
inline RawVec euler_raw(const Point& p) {
  RawVec v = RawVec::zero(p);
  const double m = p.m();
  v.dphi = p.phi() / m;
  for (int i = p.a_lo(); i <= p.a_hi(); ++i) v.da[static_cast<std::size_t>(i - p.a_lo())] = (1.0 - i / m) * p.a_coef(i);
  for (int i = p.ahat_lo(); i <= p.ahat_hi(); ++i)
    v.dahat[static_cast<std::size_t>(i - p.ahat_lo())] = (1.0 - i / m) * p.ahat_coef(i);
  return v;
}

/// E = (a - z a'/m, ahat - z ahat'/m).
inline TangentVec euler(const Point& p) {
  const auto& d = p.data();
  const auto z = z_samples(p.n_samples());
  const cplx inv_m = 1.0 / static_cast<double>(p.m());
  return {d.sa - inv_m * z * d.sda, d.sahat - inv_m * z * d.sdahat};
}

inline cplx intersection_form(const Point& p, const Covector& w1, const Covector& w2) {
  return pairing(star(p, w1, w2), euler(p));
}

}  // namespace frobkit

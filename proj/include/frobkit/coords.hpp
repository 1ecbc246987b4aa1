#pragma once

// Flat coordinates t_i, h_j, hhat_k, their coordinate vector fields, the
// Hamiltonian densities theta_{u,p} with their differentials, and residual
// functions for the three defining conditions of the principal hierarchy.

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "frobkit/geometry.hpp"

namespace frobkit {

// ---------------------------------------------------------------------------
// Small exact helpers
// ---------------------------------------------------------------------------

struct HarmonicConst {
  int p = 0;
  Rational value;
};

/// c_0 = 0, c_p = 1 + 1/2 + ... + 1/p.
inline HarmonicConst harmonic(int p) {
  if (p < 0) throw std::invalid_argument("harmonic: p must be nonnegative");
  Rational c(0);
  for (int k = 1; k <= p; ++k) c = c + Rational(1, k);
  return {p, c};
}

/// Gamma(1 - x) / Gamma(2 + p - x) with x = i/d, as the finite product
/// 1 / ((1 - x)(2 - x) ... (1 + p - x)).
inline Rational gamma_ratio(int p, int i, int d) {
  Rational prod(1);
  for (int k = 1; k <= p + 1; ++k) prod = prod * (Rational(k) - Rational(i, d));
  return Rational(1) / prod;
}

inline double factorial(int p) {
  double f = 1.0;
  for (int k = 2; k <= p; ++k) f *= k;
  return f;
}

struct DensityIndex {
  CoordIndex u;
  int p = 0;

  [[nodiscard]] std::string name() const { return u.name() + "," + std::to_string(p); }
  void check(const ModelParams& params) const {
    u.check(params);
    if (p < 0) throw std::out_of_range("density level must be nonnegative");
  }
};

/// Largest |i| for which t_i and theta_{t_i,p} are computed.
inline int t_index_cap(const ModelParams& params) { return params.tail_depth / 2; }

namespace detail {

inline CircleSamples ipow(const CircleSamples& f, int p) {
  auto out = CircleSamples::constant(f.size(), 1.0);
  for (int k = 0; k < p; ++k) out = out * f;
  return out;
}

inline void require_exact_from(const TruncatedSeries& f, int k, const char* who) {
  if (f.exact_lo() > k) throw WindowExhausted(std::string(who) + ": expansion too short");
}

inline void require_exact_to(const TruncatedSeries& f, int k, const char* who) {
  if (f.exact_hi() < k) throw WindowExhausted(std::string(who) + ": expansion too short");
}

/// Polynomial-in-z representative of an expansion at infinity: the terms
/// z^k with k >= lo, evaluated on the circle.
inline CircleSamples inf_terms_from(const Point& p, const TruncatedSeries& f, int lo) {
  require_exact_from(f, lo, "inf_terms_from");
  return eval_on_circle(clip_ge(f, lo), p.n_samples());
}

/// Terms (z - phi)^k with k <= hi of a local expansion at phi, on the circle.
inline CircleSamples pole_terms_to(const Point& p, const TruncatedSeries& f, int hi) {
  require_exact_to(f, hi, "pole_terms_to");
  return eval_on_circle(clip_le(f, hi), p.n_samples());
}

inline int local_depth(const Point& p, int level) {
  return p.params().expansion_depth() + (p.m() + p.n()) * (level + 2);
}

/// a^alpha expanded at infinity, normalized by a^alpha ~ z^{m alpha}.
inline TruncatedSeries a_power_at_inf(const Point& p, Rational alpha, int level) {
  return power(p.data().a_inf, alpha, Side::Top, local_depth(p, level));
}

/// ahat^alpha expanded at phi, with the principal branch of ahat_{-n}^alpha.
inline TruncatedSeries ahat_power_at_phi(const Point& p, Rational alpha, int level) {
  return power(p.data().ahat, alpha, Side::Bottom, local_depth(p, level));
}

inline TruncatedSeries series_ipow(const TruncatedSeries& f, int k) {
  auto out = TruncatedSeries::monomial(f.chart(), 0, 1.0);
  for (int j = 0; j < k; ++j) out = mul(out, f);
  return out;
}

/// (z - phi)^m at infinity.
inline TruncatedSeries wm_at_inf(const Point& p) {
  TruncatedSeries wm = TruncatedSeries::monomial(p.chart(), p.m(), 1.0);
  return rechart(wm, Chart::infinity(), 0, p.m());
}

/// log((z - phi)^m / a) at infinity; the argument tends to 1.
inline TruncatedSeries log_wm_over_a_at_inf(const Point& p, int level) {
  const int depth = local_depth(p, level);
  const auto inv_a = reciprocal_leading(p.data().a_inf, Side::Top, depth);
  return log_series(mul(wm_at_inf(p), inv_a), Side::Top, depth);
}

/// log(ahat^{m/n} (z - phi)^m) at phi, principal branch of ahat_{-n}^{m/n}.
inline TruncatedSeries log_ahat_wm_at_phi(const Point& p, int level) {
  const int depth = local_depth(p, level);
  const auto r = ahat_power_at_phi(p, Rational(p.m(), p.n()), level);
  const auto shifted_r = mul(r, TruncatedSeries::monomial(r.chart(), p.m(), 1.0));
  return log_series(shifted_r, Side::Bottom, depth);
}

/// Strict logarithm of zeta^{m/s} / (z - phi)^m on the circle.
inline CircleSamples log_zeta_over_wm(const Point& p) {
  const auto& d = p.data();
  const auto zr = power_on_circle(d.szeta, Rational(p.m(), p.s()));
  const auto wm = laurent_on_circle(p.phi(), p.m(), {1.0}, p.n_samples());
  return log_on_circle(zr / wm, LogMode::Strict);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Flat coordinates
// ---------------------------------------------------------------------------

/// t_i = (1/2 pi i) \oint z w^{-i-1} w' dz with w = zeta^{1/s}; here
/// w^{-i-1} w' = (1/s) zeta^{-i/s - 1} zeta'.
inline cplx flat_t(const Point& p, int i) {
  const auto& d = p.data();
  const int s = p.s();
  const auto zp = power_on_circle(d.szeta, Rational(-i - s, s));
  const auto z = z_samples(p.n_samples());
  return contour_integral(z * zp * d.sdzeta) / static_cast<double>(s);
}

/// h_1..h_{m-1} (entry j-1 holds h_j) from z(chi) = chi - sum_j h_j chi^{-j},
/// chi = ell^{1/m} at infinity.
inline std::vector<cplx> flat_h(const Point& p) {
  const int m = p.m();
  std::vector<cplx> out;
  if (m < 2) return out;
  const int depth = p.params().expansion_depth();
  const auto chi = power(p.data().ell_inf, Rational(1, m), Side::Top, depth);
  const auto zc = lagrange_invert(chi, InversionKind::AtInfinity, std::max(m, 4));
  for (int j = 1; j <= m - 1; ++j) out.push_back(-zc[-j]);
  return out;
}

/// hhat_0..hhat_n from z(chihat) = hhat_0 + sum_k hhat_k chihat^{-k},
/// chihat = ell^{1/n} at phi.
inline std::vector<cplx> flat_hhat(const Point& p) {
  const int n = p.n();
  const int depth = p.params().expansion_depth();
  const auto chi = power(p.data().ell, Rational(1, n), Side::Bottom, depth);
  const auto zc = lagrange_invert(chi, InversionKind::AtPole, std::max(n, 4));
  std::vector<cplx> out;
  for (int k = 0; k <= n; ++k) out.push_back(zc[-k]);
  return out;
}

/// Value of the flat coordinate u.
inline cplx flat_coordinate(const Point& p, const CoordIndex& u) {
  u.check(p.params());
  switch (u.kind) {
    case CoordIndex::Kind::T: return flat_t(p, u.index);
    case CoordIndex::Kind::H: return flat_h(p)[static_cast<std::size_t>(u.index - 1)];
    case CoordIndex::Kind::Hhat: return flat_hhat(p)[static_cast<std::size_t>(u.index)];
  }
  return {};
}

/// Flat pairing table: eta(t_i, t_j) = -s [i+j = -s], eta(h_i, h_j) = m [i+j = m],
/// eta(hhat_i, hhat_j) = n [i+j = n], cross blocks zero.
inline double flat_eta(const ModelParams& params, const CoordIndex& u, const CoordIndex& v) {
  if (u.kind != v.kind) return 0.0;
  const int sum = u.index + v.index;
  switch (u.kind) {
    case CoordIndex::Kind::T: return sum == -params.s ? -static_cast<double>(params.s) : 0.0;
    case CoordIndex::Kind::H: return sum == params.m ? static_cast<double>(params.m) : 0.0;
    case CoordIndex::Kind::Hhat: return sum == params.n ? static_cast<double>(params.n) : 0.0;
  }
  return 0.0;
}

/// The coordinate vector field d/du, as a tangent vector at p.
inline TangentVec flat_vector(const Point& p, const CoordIndex& u) {
  u.check(p.params());
  const auto& d = p.data();
  const int N = p.n_samples();
  switch (u.kind) {
    case CoordIndex::Kind::T: {
      // z(w) moves by w^i at fixed w, so zeta moves by -zeta^{i/s} zeta' at fixed z
      // while ell stays put.
      const auto dz = -(power_on_circle(d.szeta, Rational(u.index, p.s())) * d.sdzeta);
      return {minus_part(dz), -plus_part(dz)};
    }
    case CoordIndex::Kind::H: {
      const int depth = p.params().expansion_depth();
      const auto chi_mj = power(d.ell_inf, Rational(-u.index, p.m()), Side::Top, depth);
      const auto dl = clip_ge(mul(d.dell_inf, chi_mj), 0);
      const auto s = eval_on_circle(dl, N);
      return {s, s};
    }
    case CoordIndex::Kind::Hhat: {
      const int depth = p.params().expansion_depth();
      const auto chi_mk = power(d.ell, Rational(-u.index, p.n()), Side::Bottom, depth);
      const auto prod = mul(d.dell, chi_mk);
      detail::require_exact_to(prod, -1, "flat_vector");
      const auto s = -eval_on_circle(clip_le(prod, -1), N);
      return {s, s};
    }
  }
  return TangentVec::zero(N);
}

/// All flat labels used by the pairing-table check: t_i for |i| <= tcap, every
/// h_j and every hhat_k.
inline std::vector<CoordIndex> flat_labels(const ModelParams& params, int tcap) {
  std::vector<CoordIndex> out;
  for (int i = -tcap; i <= tcap; ++i) out.push_back(CoordIndex::t(i));
  for (int j = 1; j <= params.m - 1; ++j) out.push_back(CoordIndex::h(j));
  for (int k = 0; k <= params.n; ++k) out.push_back(CoordIndex::hhat(k));
  return out;
}

/// Largest deviation of metric(d/du, d/dv) from the constant table.
inline double gram_residual(const Point& p, int tcap) {
  const auto labels = flat_labels(p.params(), tcap);
  std::vector<TangentVec> vecs;
  for (const auto& u : labels) vecs.push_back(flat_vector(p, u));
  double worst = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i)
    for (std::size_t j = i; j < labels.size(); ++j) {
      const cplx g = metric(p, vecs[i], vecs[j]);
      worst = std::max(worst, std::abs(g - flat_eta(p.params(), labels[i], labels[j])));
    }
  return worst;
}

// ---------------------------------------------------------------------------
// Densities
// ---------------------------------------------------------------------------

/// Integrand Q on the circle together with its partial derivatives in the
/// values of a and ahat, for the densities given by a single contour integral.
struct ContourIntegrand {
  CircleSamples q;
  CircleSamples dq_da;
  CircleSamples dq_dahat;
};

namespace detail {

inline bool is_t_minus_s(const Point& p, const CoordIndex& u) {
  return u.kind == CoordIndex::Kind::T && u.index == -p.s();
}
inline bool is_hhat_n(const Point& p, const CoordIndex& u) {
  return u.kind == CoordIndex::Kind::Hhat && u.index == p.n();
}

/// Q_{t_i,p} = s/((i+s)(p+1)!) zeta^{i/s} (a^{p+1} - ahat^{p+1}), i != -s.
inline ContourIntegrand t_integrand(const Point& p, int i, int level) {
  const auto& d = p.data();
  const int s = p.s();
  const double kappa = static_cast<double>(s) / ((i + s) * factorial(level + 1));
  const Rational e(i, s);
  const auto zi = power_on_circle(d.szeta, e);
  const auto zi1 = power_on_circle(d.szeta, e - Rational(1));
  const auto ap = ipow(d.sa, level);
  const auto hp = ipow(d.sahat, level);
  const auto phi_p1 = ap * d.sa - hp * d.sahat;
  const double ev = e.value();
  const double pp1 = level + 1;
  return {kappa * zi * phi_p1, kappa * (ev * zi1 * phi_p1 + pp1 * zi * ap),
          kappa * (-ev * zi1 * phi_p1 - pp1 * zi * hp)};
}

/// Q_{t_{-s},p} = (s/m)(a^p/p!)(log(zeta^{m/s}/a) + c_p).
inline ContourIntegrand t_minus_s_integrand(const Point& p, int level) {
  const auto& d = p.data();
  const double sm = static_cast<double>(p.s()) / p.m();
  const double ms = static_cast<double>(p.m()) / p.s();
  const double cp = harmonic(level).value.value();
  const auto L = log_on_circle(power_on_circle(d.szeta, Rational(p.m(), p.s())) / d.sa, LogMode::Strict);
  const auto ap = (1.0 / factorial(level)) * ipow(d.sa, level);
  const auto inv_z = CircleSamples::constant(p.n_samples(), 1.0) / d.szeta;
  const auto inv_a = CircleSamples::constant(p.n_samples(), 1.0) / d.sa;
  auto dqa = ap * (ms * inv_z - inv_a);
  if (level >= 1) dqa += (1.0 / factorial(level - 1)) * ipow(d.sa, level - 1) * (L + cp);
  return {sm * ap * (L + cp), sm * dqa, -(ap * inv_z)};
}

/// Contour part of the modified t_{-s} density: (s/m)(a^p/p!) log(zeta^{m/s}/(z-phi)^m).
inline ContourIntegrand t_minus_s_modified_integrand(const Point& p, int level) {
  const auto& d = p.data();
  const double sm = static_cast<double>(p.s()) / p.m();
  const double ms = static_cast<double>(p.m()) / p.s();
  const auto Lam = log_zeta_over_wm(p);
  const auto ap = (1.0 / factorial(level)) * ipow(d.sa, level);
  const auto inv_z = CircleSamples::constant(p.n_samples(), 1.0) / d.szeta;
  auto dqa = ms * ap * inv_z;
  if (level >= 1) dqa += (1.0 / factorial(level - 1)) * ipow(d.sa, level - 1) * Lam;
  return {sm * ap * Lam, sm * dqa, -(ap * inv_z)};
}

/// Contour part of the modified hhat_n density:
/// (n/m)((ahat^p - a^p)/p!) log(zeta^{m/s}/(z-phi)^m).
inline ContourIntegrand hhat_n_modified_integrand(const Point& p, int level) {
  const auto& d = p.data();
  const double nm = static_cast<double>(p.n()) / p.m();
  const double ms = static_cast<double>(p.m()) / p.s();
  const auto Lam = log_zeta_over_wm(p);
  const double pf = 1.0 / factorial(level);
  const auto ap = pf * ipow(d.sa, level);
  const auto hp = pf * ipow(d.sahat, level);
  const auto inv_z = CircleSamples::constant(p.n_samples(), 1.0) / d.szeta;
  auto dqa = ms * (hp - ap) * inv_z;
  auto dqh = ms * (ap - hp) * inv_z;
  if (level >= 1) {
    const double pf1 = 1.0 / factorial(level - 1);
    dqa -= pf1 * ipow(d.sa, level - 1) * Lam;
    dqh += pf1 * ipow(d.sahat, level - 1) * Lam;
  }
  return {nm * (hp - ap) * Lam, nm * dqa, nm * dqh};
}

/// The unmodified hhat_n integrand. Its hatted logarithm has winding 2m on the
/// circle, so the value depends on the cut; the derivatives are only
/// cut-free at p = 0, where that logarithm drops out.
inline ContourIntegrand hhat_n_integrand(const Point& p, int level) {
  const auto& d = p.data();
  const int N = p.n_samples();
  const double nm = static_cast<double>(p.n()) / p.m();
  const double mn = static_cast<double>(p.m()) / p.n();
  const double ms = static_cast<double>(p.m()) / p.s();
  const double cp = harmonic(level).value.value();
  const auto zr = power_on_circle(d.szeta, Rational(p.m(), p.s()));
  const auto L = log_on_circle(zr / d.sa, LogMode::Strict);
  const auto Lhat = log_on_circle(zr * power_on_circle(d.sahat, Rational(p.m(), p.n()), true), LogMode::Cut);
  const double pf = 1.0 / factorial(level);
  const auto ap = pf * ipow(d.sa, level);
  const auto hp = pf * ipow(d.sahat, level);
  const auto one = CircleSamples::constant(N, 1.0);
  const auto inv_z = one / d.szeta;
  const auto q = nm * (hp * (Lhat - mn * cp) - ap * (L + cp));
  auto dqa = nm * (ms * hp * inv_z - ap * (ms * inv_z - one / d.sa));
  auto dqh = nm * (hp * (mn * (one / d.sahat) - ms * inv_z) + ms * ap * inv_z);
  if (level >= 1) {
    const double pf1 = 1.0 / factorial(level - 1);
    dqa -= nm * pf1 * ipow(d.sa, level - 1) * (L + cp);
    dqh += nm * pf1 * ipow(d.sahat, level - 1) * (Lhat - mn * cp);
  }
  return {q, dqa, dqh};
}

inline Covector clip_to_cotangent(const Point& p, const CircleSamples& w, const CircleSamples& wh) {
  return {clip_ge(w, p.phi(), -p.m() + 1), clip_le(wh, p.phi(), p.n())};
}

/// K Res_inf F(a) contributes K clip(F'(a) terms z^k, k >= -m+1) to omega
/// with the sign flip of Res_inf = -(1/2 pi i) \oint.
inline CircleSamples residue_inf_covector(const Point& p, const TruncatedSeries& fprime, cplx k_res) {
  return clip_ge(-k_res * inf_terms_from(p, fprime, -p.m() + 1), p.phi(), -p.m() + 1);
}

/// K Res_phi F(ahat) contributes K F'(ahat)_{<= n} to omegahat.
inline CircleSamples residue_phi_covector(const Point& p, const TruncatedSeries& fprime, cplx k_res) {
  return k_res * pole_terms_to(p, fprime, p.n());
}

/// G(a) = (a^p/p!)(log((z-phi)^m/a) + c_p) at infinity, and G'(a).
struct InfLogTerm {
  TruncatedSeries g;
  TruncatedSeries gprime;
};

inline InfLogTerm inf_log_term(const Point& p, int level) {
  const auto& a = p.data().a_inf;
  const auto lg = log_wm_over_a_at_inf(p, level);
  const cplx cp = harmonic(level).value.value();
  const auto one = TruncatedSeries::monomial(Chart::infinity(), 0, 1.0);
  const auto lgc = add(lg, one, 1.0, cp);
  const auto ap = scale(series_ipow(a, level), 1.0 / factorial(level));
  InfLogTerm out;
  out.g = mul(ap, lgc);
  if (level == 0) {
    out.gprime = scale(reciprocal_leading(a, Side::Top, local_depth(p, level)), -1.0);
  } else {
    const auto ap1 = scale(series_ipow(a, level - 1), 1.0 / factorial(level - 1));
    out.gprime = sub(mul(ap1, lgc), scale(ap1, 1.0 / level));
  }
  return out;
}

/// H(ahat) = (ahat^p/p!)(log(ahat^{m/n}(z-phi)^m) - (m/n)c_p) at phi, and H'(ahat).
inline InfLogTerm phi_log_term(const Point& p, int level) {
  const auto& ah = p.data().ahat;
  const auto lg = log_ahat_wm_at_phi(p, level);
  const double mn = static_cast<double>(p.m()) / p.n();
  const cplx cp = harmonic(level).value.value();
  const auto one = TruncatedSeries::monomial(p.chart(), 0, 1.0);
  const auto lgc = add(lg, one, 1.0, -mn * cp);
  const auto hp = scale(series_ipow(ah, level), 1.0 / factorial(level));
  InfLogTerm out;
  out.g = mul(hp, lgc);
  if (level == 0) {
    out.gprime = scale(reciprocal_leading(ah, Side::Bottom, local_depth(p, level)), mn);
  } else {
    const auto hp1 = scale(series_ipow(ah, level - 1), 1.0 / factorial(level - 1));
    out.gprime = add(mul(hp1, lgc), scale(hp1, mn / level));
  }
  return out;
}

}  // namespace detail

/// Whether the unmodified density is a single contour integral (t_i with i != -s,
/// t_{-s}, hhat_n) and if so its integrand.
inline std::optional<ContourIntegrand> contour_integrand(const Point& p, const DensityIndex& d) {
  d.check(p.params());
  if (d.u.kind == CoordIndex::Kind::T) {
    if (d.u.index == -p.s()) return detail::t_minus_s_integrand(p, d.p);
    return detail::t_integrand(p, d.u.index, d.p);
  }
  if (detail::is_hhat_n(p, d.u)) return detail::hhat_n_integrand(p, d.p);
  return std::nullopt;
}

/// theta_{u,p} as defined case by case. For hhat_n the hatted logarithm is
/// taken on the cut anchored at z = 1.
inline cplx theta(const Point& p, const DensityIndex& d) {
  d.check(p.params());
  if (auto q = contour_integrand(p, d)) return contour_integral(q->q);
  const int lv = d.p;
  if (d.u.kind == CoordIndex::Kind::H) {
    const int i = d.u.index;
    const Rational alpha = Rational(1 + lv) - Rational(i, p.m());
    const auto f = detail::a_power_at_inf(p, alpha, lv);
    return -gamma_ratio(lv, i, p.m()).value() * residue(f);
  }
  const int i = d.u.index;
  const Rational alpha = Rational(1 + lv) - Rational(i, p.n());
  const auto f = detail::ahat_power_at_phi(p, alpha, lv);
  return gamma_ratio(lv, i, p.n()).value() * residue(f);
}

/// Differential of theta_{u,p}. For hhat_n at p >= 1 the unmodified density has
/// no cut-free differential and BranchError is thrown.
inline Covector d_theta(const Point& p, const DensityIndex& d) {
  d.check(p.params());
  const int N = p.n_samples();
  if (detail::is_hhat_n(p, d.u) && d.p >= 1)
    throw BranchError("d_theta: the unmodified hhat_n density has a cut-dependent differential for p >= 1");
  if (auto q = contour_integrand(p, d)) return detail::clip_to_cotangent(p, q->dq_da, q->dq_dahat);
  const int lv = d.p;
  const int i = d.u.index;
  if (d.u.kind == CoordIndex::Kind::H) {
    const Rational alpha = Rational(1 + lv) - Rational(i, p.m());
    const double K = gamma_ratio(lv, i, p.m()).value();
    const auto fp = scale(detail::a_power_at_inf(p, alpha - Rational(1), lv), alpha.value());
    return {detail::residue_inf_covector(p, fp, -K), CircleSamples::constant(N, 0.0)};
  }
  const Rational alpha = Rational(1 + lv) - Rational(i, p.n());
  const double K = gamma_ratio(lv, i, p.n()).value();
  const auto fp = scale(detail::ahat_power_at_phi(p, alpha - Rational(1), lv), alpha.value());
  return {CircleSamples::constant(N, 0.0), detail::residue_phi_covector(p, fp, K)};
}

inline bool has_modified(const Point& p, const CoordIndex& u) {
  return detail::is_t_minus_s(p, u) || detail::is_hhat_n(p, u);
}

/// The redefined densities for t_{-s} and hhat_n: a winding-free logarithm on
/// the circle plus local residue corrections at infinity and at phi.
inline cplx theta_modified(const Point& p, const DensityIndex& d) {
  d.check(p.params());
  const int lv = d.p;
  if (detail::is_t_minus_s(p, d.u)) {
    const double sm = static_cast<double>(p.s()) / p.m();
    const auto q = detail::t_minus_s_modified_integrand(p, lv);
    const auto g = detail::inf_log_term(p, lv);
    return contour_integral(q.q) - sm * residue(g.g);
  }
  if (detail::is_hhat_n(p, d.u)) {
    const double nm = static_cast<double>(p.n()) / p.m();
    const auto q = detail::hhat_n_modified_integrand(p, lv);
    const auto g = detail::inf_log_term(p, lv);
    const auto h = detail::phi_log_term(p, lv);
    return contour_integral(q.q) + nm * residue(h.g) + nm * residue(g.g);
  }
  throw std::invalid_argument("theta_modified: only t_{-s} and hhat_n have a modified density");
}

inline Covector d_theta_modified(const Point& p, const DensityIndex& d) {
  d.check(p.params());
  const int lv = d.p;
  if (detail::is_t_minus_s(p, d.u)) {
    const double sm = static_cast<double>(p.s()) / p.m();
    const auto q = detail::t_minus_s_modified_integrand(p, lv);
    const auto g = detail::inf_log_term(p, lv);
    auto w = detail::clip_to_cotangent(p, q.dq_da, q.dq_dahat);
    w.omega += detail::residue_inf_covector(p, g.gprime, -sm);
    return w;
  }
  if (detail::is_hhat_n(p, d.u)) {
    const double nm = static_cast<double>(p.n()) / p.m();
    const auto q = detail::hhat_n_modified_integrand(p, lv);
    const auto g = detail::inf_log_term(p, lv);
    const auto h = detail::phi_log_term(p, lv);
    auto w = detail::clip_to_cotangent(p, q.dq_da, q.dq_dahat);
    w.omega += detail::residue_inf_covector(p, g.gprime, nm);
    w.omegahat += detail::residue_phi_covector(p, h.gprime, nm);
    return w;
  }
  throw std::invalid_argument("d_theta_modified: only t_{-s} and hhat_n have a modified density");
}

/// The density used by the identity checks: modified for t_{-s} and hhat_n,
/// original otherwise.
inline cplx theta_reg(const Point& p, const DensityIndex& d) {
  return has_modified(p, d.u) ? theta_modified(p, d) : theta(p, d);
}
inline Covector d_theta_reg(const Point& p, const DensityIndex& d) {
  return has_modified(p, d.u) ? d_theta_modified(p, d) : d_theta(p, d);
}

// ---------------------------------------------------------------------------
// Defining conditions
// ---------------------------------------------------------------------------

/// Largest coefficient of a covector on the finite part left by kernel_quotient.
inline double covector_coefficient_norm(const Point& p, const Covector& w, int span = 12) {
  const auto q = kernel_quotient(p, w);
  double e = 0.0;
  for (auto c : coefficients(q.omega, p.phi(), -p.m() + 1, -p.m() + span)) e = std::max(e, std::abs(c));
  for (auto c : coefficients(q.omegahat, p.phi(), p.n() - span, p.n() - 1)) e = std::max(e, std::abs(c));
  return e;
}

/// nabla_dir d theta_{u,p+1} against C_dir d theta_{u,p}; the first is a
/// central difference of the differential field in raw coordinates.
inline double verify_princon1(const Point& p, const DensityIndex& d, const RawVec& dir, double h = 1e-5) {
  const DensityIndex up{d.u, d.p + 1};
  bool zero = dir.dphi == cplx{};
  for (auto c : dir.da) zero = zero && c == cplx{};
  for (auto c : dir.dahat) zero = zero && c == cplx{};
  if (zero) return 0.0;
  const auto lhs = nabla_form(p, dir, [&](const Point& q) { return d_theta_reg(q, up); }, h);
  const auto rhs = c_op(p, to_tangent(p, dir), d_theta_reg(p, d));
  return covector_coefficient_norm(p, lhs - rhs);
}

/// Expected Lie_E theta_{u,p} = (p + mu_u + 1/2 + 1/m) theta_{u,p} + sum_v R^v_u theta_{v,p-1}.
/// Only t_0 and hhat_0 carry nonzero R entries.
inline cplx princon2_expected(const Point& p, const DensityIndex& d) {
  const auto& params = p.params();
  const double factor = d.p + mu_of(params, d.u).value() + 0.5 + 1.0 / p.m();
  cplx out = factor * theta_reg(p, d);
  if (d.p >= 1) {
    for (const auto& v : {CoordIndex::t(0), CoordIndex::hhat(0)}) {
      const double r = r_entry(params, v, d.u).value();
      if (r != 0.0) out += r * theta_reg(p, {v, d.p - 1});
    }
  }
  return out;
}

/// |pairing(d theta, E) - table value|.
inline double verify_princon2(const Point& p, const DensityIndex& d) {
  const cplx lie = pairing(d_theta_reg(p, d), euler(p));
  return std::abs(lie - princon2_expected(p, d));
}

/// theta_{u,0} against eta_{uv} t^v for every implemented label u.
inline double verify_princon3(const Point& p) {
  const auto& params = p.params();
  const int tcap = t_index_cap(params);
  double worst = 0.0;
  auto upd = [&](cplx a, cplx b) { worst = std::max(worst, std::abs(a - b)); };
  for (int i = -tcap; i <= tcap; ++i) {
    upd(theta_reg(p, {CoordIndex::t(i), 0}), -static_cast<double>(p.s()) * flat_t(p, -p.s() - i));
  }
  const auto h = flat_h(p);
  for (int i = 1; i <= p.m() - 1; ++i)
    upd(theta(p, {CoordIndex::h(i), 0}), static_cast<double>(p.m()) * h[static_cast<std::size_t>(p.m() - i - 1)]);
  const auto hh = flat_hhat(p);
  for (int i = 0; i <= p.n(); ++i)
    upd(theta_reg(p, {CoordIndex::hhat(i), 0}), static_cast<double>(p.n()) * hh[static_cast<std::size_t>(p.n() - i)]);
  return worst;
}

}  // namespace frobkit

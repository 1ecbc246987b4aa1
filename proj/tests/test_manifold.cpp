#include <gtest/gtest.h>

#include <random>

#include "frobkit/manifold.hpp"

using namespace frobkit;

namespace {

ModelParams params(int m, int n, int s, int depth = 8) {
  ModelParams p;
  p.m = m;
  p.n = n;
  p.s = s;
  p.tail_depth = depth;
  return p;
}

// a = z^m and ahat = c (z-phi)^{-n} + d (z-phi)^n, nothing else.
Point base_point(const ModelParams& pr, cplx phi, cplx c, cplx d) {
  std::vector<cplx> at(static_cast<std::size_t>(pr.tail_depth) + 1);
  std::vector<cplx> ah(static_cast<std::size_t>(pr.tail_depth) + 1);
  ah[0] = c;
  if (2 * pr.n <= pr.tail_depth) ah[static_cast<std::size_t>(2 * pr.n)] = d;
  return {pr, phi, at, ah};
}

double coeff_dev(const TruncatedSeries& f, const TruncatedSeries& g, int lo, int hi) {
  double e = 0.0;
  for (int k = lo; k <= hi; ++k) e = std::max(e, std::abs(f[k] - g[k]));
  return e;
}

}  // namespace

TEST(Params, Validation) {
  EXPECT_NO_THROW(params(2, 1, 1).check());
  EXPECT_THROW(params(0, 1, 1).check(), std::invalid_argument);
  EXPECT_THROW(params(2, 1, 1, 3).check(), std::invalid_argument);
  auto p = params(2, 1, 1);
  p.n_samples = 96;
  EXPECT_THROW(p.check(), std::invalid_argument);
  p.n_samples = 32;
  EXPECT_THROW(p.check(), std::invalid_argument);
}

TEST(Point, RejectsBadInput) {
  const auto pr = params(2, 1, 1);
  std::vector<cplx> ok(9);
  std::vector<cplx> ah(9);
  ah[0] = 1.0;
  EXPECT_THROW(Point(pr, 1.2, ok, ah), std::invalid_argument);
  EXPECT_THROW(Point(pr, 0.1, std::vector<cplx>(3), ah), std::invalid_argument);
}

TEST(ZetaEll, MobiusExample) {
  const auto p = base_point(params(1, 1, 1), 0.0, 1.0, 0.0);
  const int N = p.n_samples();
  const auto z = z_samples(N);
  const auto one = CircleSamples::constant(N, 1.0);
  EXPECT_LE(max_abs(eval_on_circle(zeta(p), N) - (z - one / z)), 1e-13);
  EXPECT_LE(max_abs(eval_on_circle(ell(p), N) - (z + one / z)), 1e-13);
}

TEST(ZetaEll, HeadIsExpandedExactly) {
  const cplx c = 0.05;
  const auto p = base_point(params(3, 1, 3), cplx(0.2, 0.1), c, 0.3);
  // With a zero tail, ell = z^3 + c/(z - phi): the head z^3 rewritten in the
  // (z - phi) chart plus the principal part of ahat.
  const auto& l = ell(p);
  const auto h = head_series(3, p.phi());
  EXPECT_LE(coeff_dev(l, h, 0, 4), 1e-15);
  EXPECT_LE(std::abs(l[-1] - c), 1e-15);
  for (int k = -4; k <= -2; ++k) EXPECT_LE(std::abs(l[k]), 1e-15);
}

TEST(ZetaEll, ReconstructAandAhat) {
  const auto p = random_point(params(2, 1, 1), 17);
  const auto& d = p.data();
  const auto a_rec = add(project(d.zeta, Sign::Minus), d.ell);
  const auto ah_rec = sub(d.ell, project(d.zeta, Sign::Plus));
  EXPECT_LE(coeff_dev(a_rec, d.a, -12, 4), 1e-14);
  EXPECT_LE(coeff_dev(ah_rec, d.ahat, -12, 12), 1e-14);
  // zeta = (a - ell) + (ell - ahat)
  EXPECT_LE(coeff_dev(add(sub(d.a, d.ell), sub(d.ell, d.ahat)), d.zeta, -12, 12), 1e-14);
}

TEST(Validate, BasePointPassesAndReportsWindings) {
  const auto p = base_point(params(2, 1, 2), cplx(0.2, 0.0), 0.05, 0.3);
  const auto r = validate(p);
  EXPECT_TRUE(r.ok());
  EXPECT_EQ(r.zeta_winding.winding, 2);
  EXPECT_EQ(r.a_winding.winding, 2);
  EXPECT_EQ(r.ahat_winding.winding, 1);
  EXPECT_LT(r.zeta_winding.residual, 1e-6);
}

TEST(Validate, VanishingLeadingCoefficient) {
  const auto p = base_point(params(2, 1, 2), cplx(0.2, 0.0), 0.0, 0.3);
  const auto r = validate(p);
  EXPECT_FALSE(r.ahat_lead_ok);
  EXPECT_FALSE(r.ok());
}

TEST(Validate, ConstructedZeroOfZetaPrime) {
  // m = n = 1, phi = 0, a = z, ahat = -1/z: zeta' = 1 - 1/z^2 vanishes at the sample z = 1.
  const auto p = base_point(params(1, 1, 1), 0.0, -1.0, 0.0);
  const auto r = validate(p);
  EXPECT_FALSE(r.derivatives_ok);
  EXPECT_LT(r.min_dzeta, 1e-12);
  EXPECT_FALSE(r.ok());
}

TEST(Validate, WrongZetaWindingIsReported) {
  // (m, n, s) = (2, 1, 1) with the small-ahat family: zeta winds twice, not once.
  const auto p = base_point(params(2, 1, 1), cplx(0.1, 0.0), 0.05, 0.3);
  const auto r = validate(p);
  EXPECT_EQ(r.zeta_winding.winding, 2);
  EXPECT_FALSE(r.zeta_winding_ok);
}

TEST(Pairing, Examples) {
  const auto p = random_point(params(2, 1, 1), 3);
  const int N = p.n_samples();
  const cplx phi = p.phi();
  const auto zero = CircleSamples::constant(N, 0.0);
  const Covector w{laurent_on_circle(phi, -1, {1.0}, N), zero};
  const TangentVec t{CircleSamples::constant(N, 1.0), zero};
  EXPECT_LE(std::abs(pairing(w, t) - 1.0), 1e-13);
  const Covector w1{CircleSamples::constant(N, 1.0), zero};
  EXPECT_LE(std::abs(pairing(w1, t)), 1e-13);
}

TEST(Pairing, MatchesCoefficientSums) {
  const auto p = random_point(params(2, 1, 1), 4);
  const int N = p.n_samples();
  const cplx phi = p.phi();
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g;
  auto rc = [&](int len, double decay) {
    std::vector<cplx> c(static_cast<std::size_t>(len));
    for (int k = 0; k < len; ++k) c[static_cast<std::size_t>(k)] = cplx{g(rng), g(rng)} * std::pow(decay, k);
    return c;
  };
  for (int trial = 0; trial < 5; ++trial) {
    // omega on [-1, 8] ascending, xi on [0, -9] descending; omegahat on [1, -8], xihat on [-2, 7].
    const auto om = rc(10, 0.5);
    const auto xi = rc(10, 0.5);
    const auto oh = rc(10, 0.5);
    const auto xh = rc(10, 0.5);
    std::vector<cplx> xi_lo(xi.rbegin(), xi.rend());
    std::vector<cplx> oh_lo(oh.rbegin(), oh.rend());
    const Covector w{laurent_on_circle(phi, -1, om, N), laurent_on_circle(phi, -8, oh_lo, N)};
    const TangentVec t{laurent_on_circle(phi, -9, xi_lo, N), laurent_on_circle(phi, -2, xh, N)};
    cplx expect{};
    // omega_j xi_{-1-j}: j = -1..8 with xi exponent 0..-9.
    for (int j = -1; j <= 8; ++j) expect += om[static_cast<std::size_t>(j + 1)] * xi[static_cast<std::size_t>(j + 1)];
    // omegahat_j xihat_{-1-j}: j = 1..-8, xihat exponent -2..7.
    for (int j = 1; j >= -8; --j) expect += oh[static_cast<std::size_t>(1 - j)] * xh[static_cast<std::size_t>(1 - j)];
    EXPECT_LE(std::abs(pairing(w, t) - expect), 1e-10 * std::max(1.0, std::abs(expect)));
  }
}

TEST(Pairing, MonomialBasisIsDual) {
  const auto p = random_point(params(2, 1, 1), 5);
  const int N = p.n_samples();
  const cplx phi = p.phi();
  const auto zero = CircleSamples::constant(N, 0.0);
  for (int k = -p.m() + 1; k <= 6; ++k) {
    const Covector w{laurent_on_circle(phi, k, {1.0}, N), zero};
    const TangentVec t{laurent_on_circle(phi, -1 - k, {1.0}, N), zero};
    EXPECT_LE(std::abs(pairing(w, t) - 1.0), 1e-12) << k;
  }
  for (int k = p.n(); k >= -6; --k) {
    const Covector w{zero, laurent_on_circle(phi, k, {1.0}, N)};
    const TangentVec t{zero, laurent_on_circle(phi, -1 - k, {1.0}, N)};
    EXPECT_LE(std::abs(pairing(w, t) - 1.0), 1e-12) << k;
  }
}

TEST(RandomPoint, DeterministicValidAndSeedDependent) {
  for (auto [m, n, s] : {std::tuple{2, 1, 1}, std::tuple{1, 1, 1}, std::tuple{2, 1, 2}, std::tuple{3, 2, 2}}) {
    const auto pr = params(m, n, s);
    const auto p1 = random_point(pr, 123);
    const auto p2 = random_point(pr, 123);
    const auto p3 = random_point(pr, 124);
    EXPECT_EQ(p1.phi(), p2.phi());
    EXPECT_EQ(p1.a_tail(), p2.a_tail());
    EXPECT_EQ(p1.ahat(), p2.ahat());
    EXPECT_TRUE(p1.phi() != p3.phi() || p1.ahat() != p3.ahat());
    EXPECT_TRUE(validate(p1).ok());
    EXPECT_LE(std::abs(p1.phi()), 0.4);
  }
}

TEST(RandomPoint, IncompatibleWindingFails) {
  EXPECT_THROW(random_point(params(3, 1, 2), 1), GenerationError);
}

TEST(Branches, SquareRootOfZetaSquaresBack) {
  const auto p = random_point(params(2, 1, 2), 8);
  const auto& sz = p.data().szeta;
  const auto w = power_on_circle(sz, Rational(1, 2));
  EXPECT_EQ(w.winding, 1);
  EXPECT_LE(max_abs(w * w - sz), 1e-12 * max_abs(sz));
}

TEST(Branches, ZetaPowerOverAHasZeroWinding) {
  for (auto [m, n, s] : {std::tuple{2, 1, 1}, std::tuple{2, 1, 2}, std::tuple{1, 1, 1}}) {
    const auto p = random_point(params(m, n, s), 21);
    const auto& d = p.data();
    const auto f = power_on_circle(d.szeta, Rational(m, s)) / d.sa;
    EXPECT_NO_THROW(log_on_circle(f, LogMode::Strict));
  }
}

TEST(RawDirections, TangentRoundTrip) {
  const auto p = random_point(params(2, 1, 1), 6);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  RawVec v = RawVec::zero(p);
  v.dphi = {g(rng), g(rng)};
  for (auto& x : v.da) x = {g(rng), g(rng)};
  for (auto& x : v.dahat) x = {g(rng), g(rng)};
  const auto back = tangent_to_raw(p, to_tangent(p, v));
  EXPECT_LE(std::abs(back.dphi - v.dphi), 1e-10);
  for (std::size_t k = 0; k < v.da.size(); ++k) EXPECT_LE(std::abs(back.da[k] - v.da[k]), 1e-9) << k;
  for (std::size_t k = 0; k < v.dahat.size(); ++k) EXPECT_LE(std::abs(back.dahat[k] - v.dahat[k]), 1e-9) << k;
}

TEST(RawDirections, PhiDirectionMovesTheCenter) {
  // d/dphi of a at fixed z is -(a - z^m)'; check against a finite difference of the samples.
  const auto p = random_point(params(2, 1, 1), 7);
  const auto t = to_tangent(p, RawVec::phi_dir(p));
  const double h = 1e-6;
  const auto plus = shifted(p, RawVec::phi_dir(p), h);
  const auto minus = shifted(p, RawVec::phi_dir(p), -h);
  const auto fd = (1.0 / (2.0 * h)) * (plus.data().sa - minus.data().sa);
  EXPECT_LE(max_abs(fd - t.xi), 1e-7 * max_abs(t.xi));
  const auto fdh = (1.0 / (2.0 * h)) * (plus.data().sahat - minus.data().sahat);
  EXPECT_LE(max_abs(fdh - t.xihat), 1e-7 * max_abs(t.xihat));
}

#include <gtest/gtest.h>

#include <random>

#include "frobkit/series.hpp"

using namespace frobkit;

namespace {

const cplx kPhi{0.3, -0.2};

TruncatedSeries pole(int lo, std::vector<cplx> c, cplx phi = kPhi) { return {Chart::pole(phi), lo, std::move(c)}; }

double coeff_dev(const TruncatedSeries& f, const TruncatedSeries& g, int lo, int hi) {
  double e = 0.0;
  for (int k = lo; k <= hi; ++k) e = std::max(e, std::abs(f[k] - g[k]));
  return e;
}

// Complex number with exact rational parts, used by the convolution oracle.
struct CRat {
  Rational re, im;
};

CRat operator*(CRat a, CRat b) { return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re}; }
CRat operator+(CRat a, CRat b) { return {a.re + b.re, a.im + b.im}; }

}  // namespace

TEST(LinearOps, AddScaleAndIdentity) {
  const auto f = pole(0, {1.0, 1.0});
  const auto g = pole(1, {2.0});
  const auto h = f + g;
  EXPECT_EQ(h[0], cplx(1.0));
  EXPECT_EQ(h[1], cplx(3.0));
  const auto z = TruncatedSeries::zero(Chart::pole(kPhi));
  EXPECT_EQ(coeff_dev(f + z, f, -3, 3), 0.0);
  const auto s = scale(pole(-1, {1.0}), 2.0);
  EXPECT_EQ(s[-1], cplx(2.0));
  EXPECT_THROW(add(f, TruncatedSeries::monomial(Chart::infinity(), 1)), ChartMismatch);
}

TEST(LinearOps, ExactWindowIsIntersection) {
  TruncatedSeries f(Chart::pole(kPhi), -3, {1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0}, -2, 2);
  TruncatedSeries g(Chart::pole(kPhi), -3, {1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0}, -1, 3);
  const auto h = f - g;
  EXPECT_EQ(h.exact_lo(), -1);
  EXPECT_EQ(h.exact_hi(), 2);
}

TEST(Mul, SmallExamples) {
  const auto w = pole(1, {1.0});
  const auto winv = pole(-1, {1.0});
  const auto one = w * winv;
  EXPECT_EQ(one[0], cplx(1.0));
  EXPECT_EQ(one[1], cplx(0.0));
  const auto sq = pole(0, {1.0, 1.0}) * pole(0, {1.0, 1.0});
  EXPECT_EQ(sq[0], cplx(1.0));
  EXPECT_EQ(sq[1], cplx(2.0));
  EXPECT_EQ(sq[2], cplx(1.0));
}

TEST(Mul, MatchesExactRationalConvolution) {
  std::mt19937_64 rng(42);
  std::uniform_int_distribution<int> num(-40, 40);
  std::uniform_int_distribution<int> den_exp(0, 3);
  auto draw = [&]() {
    const int d = 1 << den_exp(rng);
    return Rational(num(rng), d);
  };
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<CRat> a(9), b(9);
    std::vector<cplx> ac, bc;
    for (auto& x : a) x = {draw(), draw()};
    for (auto& x : b) x = {draw(), draw()};
    for (auto x : a) ac.push_back({x.re.value(), x.im.value()});
    for (auto x : b) bc.push_back({x.re.value(), x.im.value()});
    // Both factors live on [-4, 4]; their product on [-8, 8].
    const auto prod = pole(-4, ac) * pole(-4, bc);
    for (int k = -8; k <= 8; ++k) {
      CRat acc{Rational(0), Rational(0)};
      for (int i = -4; i <= 4; ++i) {
        const int j = k - i;
        if (j < -4 || j > 4) continue;
        acc = acc + a[static_cast<std::size_t>(i + 4)] * b[static_cast<std::size_t>(j + 4)];
      }
      const cplx expect{acc.re.value(), acc.im.value()};
      ASSERT_TRUE(prod.is_exact(k));
      EXPECT_LE(std::abs(prod[k] - expect), 1e-12 * std::max(1.0, std::abs(expect))) << "k=" << k;
    }
  }
}

TEST(Mul, TracksExactWindowOfTruncatedOperands) {
  // f known on [0, 3] with an unknown tail above; g = 1 + w exactly.
  TruncatedSeries f(Chart::pole(kPhi), 0, {1.0, 2.0, 3.0, 4.0}, -kOpen, 3);
  const auto g = pole(0, {1.0, 1.0});
  const auto h = f * g;
  EXPECT_EQ(h.exact_hi(), 3);
  EXPECT_EQ(h[3], cplx(7.0));
  TruncatedSeries up(Chart::pole(kPhi), 0, {1.0}, 0, 0);
  TruncatedSeries down(Chart::pole(kPhi), 0, {1.0}, 0, 0);
  // unknown coefficients on both sides of both factors leave nothing exact
  EXPECT_THROW(up * down, WindowExhausted);
  TruncatedSeries above(Chart::pole(kPhi), 5, {1.0}, 5, kOpen);
  TruncatedSeries below(Chart::pole(kPhi), -5, {1.0}, -kOpen, -5);
  EXPECT_THROW(mul(TruncatedSeries(Chart::pole(kPhi), 0, {1.0, 1.0}, 0, 1), above * below), WindowExhausted);
}

TEST(Derivative, Examples) {
  const auto d1 = d_dz(pole(2, {1.0}));
  EXPECT_EQ(d1[1], cplx(2.0));
  const auto d2 = d_dz(pole(-1, {1.0}));
  EXPECT_EQ(d2[-2], cplx(-1.0));
  const auto d3 = d_dz(pole(0, {5.0}));
  EXPECT_EQ(d3[-1], cplx(0.0));
  EXPECT_EQ(d3[0], cplx(0.0));
}

TEST(Project, PartitionAndExamples) {
  const auto f = pole(-1, {2.0, 3.0, 4.0});
  const auto p = project(f, Sign::Plus);
  const auto m = project(f, Sign::Minus);
  EXPECT_EQ(p[-1], cplx(0.0));
  EXPECT_EQ(p[0], cplx(3.0));
  EXPECT_EQ(p[1], cplx(4.0));
  EXPECT_EQ(m[-1], cplx(2.0));
  EXPECT_EQ(m[0], cplx(0.0));
  EXPECT_THROW(project(TruncatedSeries::monomial(Chart::infinity(), 1), Sign::Plus), ChartMismatch);

  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;
  for (int t = 0; t < 10; ++t) {
    std::vector<cplx> c(13);
    for (auto& x : c) x = {g(rng), g(rng)};
    const auto r = pole(-6, c);
    EXPECT_EQ(coeff_dev(project(r, Sign::Plus) + project(r, Sign::Minus), r, -8, 8), 0.0);
  }
}

TEST(Clip, Examples) {
  const auto f = pole(-2, {1.0, 1.0, 1.0});
  const auto c = clip_ge(f, -1);
  EXPECT_EQ(c[-2], cplx(0.0));
  EXPECT_EQ(c[-1], cplx(1.0));
  EXPECT_EQ(c[0], cplx(1.0));
  EXPECT_EQ(coeff_dev(clip_le(f, f.hi()), f, -4, 4), 0.0);
  const auto below = clip_le(f, -2);
  EXPECT_EQ(coeff_dev(c + below, f, -4, 4), 0.0);
}

TEST(Residue, SignConventions) {
  EXPECT_EQ(residue(pole(-1, {1.0})), cplx(1.0));
  EXPECT_EQ(residue(TruncatedSeries::monomial(Chart::infinity(), -1)), cplx(-1.0));
  EXPECT_EQ(residue(pole(-2, {1.0})), cplx(0.0));
  TruncatedSeries partial(Chart::pole(kPhi), 0, {1.0, 1.0}, 0, 1);
  EXPECT_THROW(residue(partial), WindowExhausted);
}

TEST(Circle, EvaluationExamples) {
  const auto one = eval_on_circle(pole(0, {1.0}), 64);
  for (auto v : one.values) EXPECT_EQ(v, cplx(1.0));
  const auto z = eval_on_circle(TruncatedSeries::monomial(Chart::infinity(), 1), 64);
  const auto& nodes = circle_nodes(64);
  for (int k = 0; k < 64; ++k) EXPECT_LE(std::abs(z[k] - nodes[static_cast<std::size_t>(k)]), 1e-15);
  const auto inv = eval_on_circle(pole(-1, {1.0}, 0.0), 64);
  for (int k = 0; k < 64; ++k) EXPECT_LE(std::abs(inv[k] - std::conj(nodes[static_cast<std::size_t>(k)])), 1e-15);
}

TEST(Circle, ContourIntegralExamples) {
  const int N = 256;
  EXPECT_LE(std::abs(contour_integral(eval_on_circle(pole(-1, {1.0}, 0.0), N)) - 1.0), 1e-14);
  EXPECT_LE(std::abs(contour_integral(CircleSamples::constant(N, 1.0))), 1e-14);
  EXPECT_LE(std::abs(contour_integral(eval_on_circle(pole(-1, {1.0}, 0.3), N)) - 1.0), 1e-13);
}

TEST(Circle, QuadratureOfMonomials) {
  const int N = 256;
  for (cplx phi : {cplx(0.0), cplx(0.3, -0.2), cplx(-0.1, 0.35)}) {
    for (int k = -N / 4; k <= N / 4; ++k) {
      const auto f = eval_on_circle(pole(k, {1.0}, phi), N);
      const cplx v = contour_integral(f);
      const double scale = std::max(1.0, max_abs(f));
      if (k == -1)
        EXPECT_LE(std::abs(v - 1.0), 1e-12 * scale);
      else
        EXPECT_LE(std::abs(v), 1e-12 * scale) << "k=" << k;
    }
  }
}

TEST(Circle, SamplesToSeries) {
  const int N = 256;
  const auto c1 = samples_to_series(CircleSamples::constant(N, 1.0), kPhi, -4, 4);
  for (int k = -4; k <= 4; ++k) EXPECT_LE(std::abs(c1[k] - (k == 0 ? 1.0 : 0.0)), 1e-12);
  EXPECT_EQ(c1.exact_lo(), -2);
  EXPECT_EQ(c1.exact_hi(), 2);
  const auto cz = samples_to_series(z_samples(N), kPhi, -4, 4);
  EXPECT_LE(std::abs(cz[0] - kPhi), 1e-12);
  EXPECT_LE(std::abs(cz[1] - 1.0), 1e-12);
  EXPECT_LE(std::abs(cz[2]), 1e-12);
  EXPECT_THROW(samples_to_series(CircleSamples::constant(64, 1.0), kPhi, -40, 0), WindowExhausted);
}

TEST(Circle, RoundTrip) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g;
  const int N = 256;
  for (int t = 0; t < 10; ++t) {
    std::vector<cplx> c(17);
    // Decaying coefficients keep the function analytic on a neighbourhood of the circle.
    for (int k = -8; k <= 8; ++k) c[static_cast<std::size_t>(k + 8)] = cplx{g(rng), g(rng)} * std::pow(0.5, std::abs(k));
    const auto f = pole(-8, c, 0.0);
    const auto back = samples_to_series(eval_on_circle(f, N), 0.0, -8, 8);
    EXPECT_LE(coeff_dev(back, f, back.exact_lo(), back.exact_hi()), 1e-10);
  }
}

TEST(Circle, IntegrationByParts) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  const int N = 256;
  for (int t = 0; t < 5; ++t) {
    std::vector<cplx> a(9), b(9);
    for (auto& x : a) x = {g(rng), g(rng)};
    for (auto& x : b) x = {g(rng), g(rng)};
    const auto f = pole(-4, a, 0.1);
    const auto h = pole(-4, b, 0.1);
    const cplx lhs = contour_integral(eval_on_circle(d_dz(f) * h, N));
    const cplx rhs = -contour_integral(eval_on_circle(f * d_dz(h), N));
    EXPECT_LE(std::abs(lhs - rhs), 1e-10 * std::max(1.0, std::abs(lhs)));
  }
}

TEST(Circle, SpectralProjectionAndDerivative) {
  const int N = 128;
  const auto f = eval_on_circle(pole(-2, {1.0, 2.0, 3.0, 4.0}, 0.0), N);
  const auto plus = plus_part(f);
  const auto expect_plus = eval_on_circle(pole(0, {3.0, 4.0}, 0.0), N);
  EXPECT_LE(max_abs(plus - expect_plus), 1e-13);
  const auto df = derivative(f);
  const auto expect_df = eval_on_circle(d_dz(pole(-2, {1.0, 2.0, 3.0, 4.0}, 0.0)), N);
  EXPECT_LE(max_abs(df - expect_df), 1e-12);
}

TEST(Rechart, Examples) {
  const auto r1 = rechart(pole(1, {1.0}, 0.5), Chart::infinity(), 0, 1);
  EXPECT_LE(std::abs(r1[1] - 1.0), 1e-14);
  EXPECT_LE(std::abs(r1[0] + 0.5), 1e-14);

  const cplx phi{0.2, 0.1};
  const auto r2 = rechart(pole(-1, {1.0}, phi), Chart::infinity(), -4, -1);
  for (int k = 1; k <= 4; ++k) EXPECT_LE(std::abs(r2[-k] - std::pow(phi, k - 1)), 1e-12) << k;

  const auto r3 = rechart(TruncatedSeries::monomial(Chart::infinity(), 2), Chart::pole(phi), 0, 2);
  EXPECT_LE(std::abs(r3[2] - 1.0), 1e-14);
  EXPECT_LE(std::abs(r3[1] - 2.0 * phi), 1e-14);
  EXPECT_LE(std::abs(r3[0] - phi * phi), 1e-14);
}

TEST(Reciprocal, Examples) {
  const auto r1 = reciprocal_leading(pole(1, {1.0}), Side::Top);
  EXPECT_EQ(r1.top_nonzero(), -1);
  EXPECT_LE(std::abs(r1[-1] - 1.0), 1e-15);

  const auto r2 = reciprocal_leading(pole(-2, {2.0, 2.0}), Side::Bottom, 8);
  for (int k = 0; k <= 8; ++k) EXPECT_LE(std::abs(r2[2 + k] - 0.5 * std::pow(-1.0, k)), 1e-14) << k;

  EXPECT_THROW(reciprocal_leading(TruncatedSeries(Chart::pole(kPhi), 0, {1.0}, 0, 3), Side::Top), WindowExhausted);
}

TEST(Reciprocal, DefiningProperty) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  for (int t = 0; t < 10; ++t) {
    std::vector<cplx> c(7);
    for (auto& x : c) x = {g(rng), g(rng)};
    c.back() += 3.0;  // keep the top coefficient away from zero
    const auto f = pole(-3, c);
    const auto r = reciprocal_leading(f, Side::Top, 20);
    const auto one = f * r;
    for (int k = std::max(one.lo(), one.exact_lo()); k <= std::min(one.hi(), one.exact_hi()); ++k)
      EXPECT_LE(std::abs(one[k] - (k == 0 ? 1.0 : 0.0)), 1e-12) << k;
    const auto rb = reciprocal_leading(f, Side::Bottom, 20);
    const auto oneb = f * rb;
    // the bottom expansion grows like |c_1 / c_0|^k, so roundoff is measured against that size
    double size = 0.0;
    for (int k = rb.lo(); k <= rb.hi(); ++k) size = std::max(size, std::abs(rb[k]));
    double fsum = 0.0;
    for (const auto& x : c) fsum += std::abs(x);
    for (int k = std::max(oneb.lo(), oneb.exact_lo()); k <= std::min(oneb.hi(), oneb.exact_hi()); ++k)
      EXPECT_LE(std::abs(oneb[k] - (k == 0 ? 1.0 : 0.0)), 1e-13 * size * fsum) << k;
  }
}

TEST(Power, SeriesPowerAndLog) {
  // (1 + w)^{1/2} and log(1 + w) from the bottom.
  const auto f = pole(0, {1.0, 1.0});
  const auto r = power(f, Rational(1, 2), Side::Bottom, 6);
  const double binom[] = {1.0, 0.5, -0.125, 0.0625, -0.0390625};
  for (int k = 0; k < 5; ++k) EXPECT_LE(std::abs(r[k] - binom[k]), 1e-15);
  const auto l = log_series(f, Side::Bottom, 6);
  for (int k = 1; k <= 6; ++k) EXPECT_LE(std::abs(l[k] - std::pow(-1.0, k + 1) / k), 1e-15);
  EXPECT_THROW(power(pole(1, {1.0}), Rational(1, 2), Side::Bottom), BranchError);
  EXPECT_THROW(log_series(pole(1, {1.0, 1.0}), Side::Bottom), BranchError);
}

TEST(Power, OnCircleExamples) {
  const int N = 128;
  const auto z = z_samples(N);
  const auto root = power_on_circle(z * z, Rational(1, 2));
  EXPECT_LE(max_abs(root - z), 1e-13);
  EXPECT_EQ(root.winding, 1);
  const auto two = power_on_circle(CircleSamples::constant(N, 4.0), Rational(1, 2));
  EXPECT_LE(max_abs(two - 2.0), 1e-14);
  EXPECT_THROW(power_on_circle(z, Rational(1, 2)), BranchError);
  EXPECT_NO_THROW(power_on_circle(z, Rational(1, 2), true));
  CircleSamples with_zero = z;
  with_zero.values[3] = 0.0;
  EXPECT_THROW(power_on_circle(with_zero, Rational(1, 2)), BranchError);
}

TEST(Power, BranchConsistency) {
  const int N = 256;
  const auto f = eval_on_circle(pole(-2, {0.2, 0.1, 1.0, 0.3, 0.4}, 0.1), N);
  for (Rational a : {Rational(1, 2), Rational(1, 3), Rational(3, 2)}) {
    const auto g = power_on_circle(f, a, true);
    const auto back = power_on_circle(g, Rational(1) / a, true);
    if (!(Rational(winding_number(f)) * a).is_integer()) continue;
    EXPECT_LE(max_abs(back - f), 1e-10 * max_abs(f));
  }
}

TEST(Log, OnCircleExamples) {
  const int N = 64;
  const auto e = log_on_circle(CircleSamples::constant(N, std::exp(1.0)), LogMode::Strict);
  EXPECT_LE(max_abs(e - 1.0), 1e-15);
  EXPECT_THROW(log_on_circle(z_samples(N), LogMode::Strict), BranchError);
  const auto cut = log_on_circle(z_samples(N), LogMode::Cut);
  EXPECT_EQ(cut.winding, 1);
  // The cut sits between the last sample and the first.
  EXPECT_NEAR((cut[N - 1] - cut[0]).imag(), 2.0 * kPi * (N - 1) / N, 1e-12);
}

TEST(Winding, Counts) {
  const int N = 128;
  const auto z = z_samples(N);
  EXPECT_EQ(winding_number(z * z * z), 3);
  EXPECT_EQ(winding_number(eval_on_circle(pole(-2, {1.0}, 0.3), N)), -2);
  EXPECT_EQ(winding_number(z + 3.0), 0);
}

TEST(Lagrange, AtInfinity) {
  // chi = (z^2 + 2)^{1/2} = z + z^{-1} - z^{-3}/2 + ...; inverse z = chi - chi^{-1} + ...
  const auto ell = TruncatedSeries(Chart::infinity(), 0, {2.0, 0.0, 1.0});
  const auto chi = power(ell, Rational(1, 2), Side::Top, 12);
  const auto inv = lagrange_invert(chi, InversionKind::AtInfinity, 8);
  EXPECT_LE(std::abs(inv[1] - 1.0), 1e-14);
  EXPECT_LE(std::abs(inv[0]), 1e-14);
  EXPECT_LE(std::abs(inv[-1] + 1.0), 1e-13);
  // Substitute back: (z^2 + 2) evaluated at z(chi) equals chi^2 + O(chi^{-8}).
  const auto z2 = inv * inv;
  const auto back = add(z2, TruncatedSeries(Chart::infinity(), 0, {2.0}));
  EXPECT_LE(std::abs(back[2] - 1.0), 1e-13);
  for (int k = -6; k <= 1; ++k) EXPECT_LE(std::abs(back[k]), 1e-12) << k;

  const auto id = lagrange_invert(TruncatedSeries::monomial(Chart::infinity(), 1), InversionKind::AtInfinity, 6);
  for (int k = -6; k <= 0; ++k) EXPECT_EQ(id[k], cplx(0.0));
  EXPECT_EQ(id[1], cplx(1.0));
}

TEST(Lagrange, AtPoleAndErrors) {
  const cplx phi{0.2, -0.1};
  const auto f = scale(pole(-1, {1.0}, phi), 0.7);
  const auto inv = lagrange_invert(f, InversionKind::AtPole, 6);
  EXPECT_LE(std::abs(inv[0] - phi), 1e-15);
  EXPECT_LE(std::abs(inv[-1] - 0.7), 1e-15);
  for (int k = -6; k <= -2; ++k) EXPECT_LE(std::abs(inv[k]), 1e-15);

  // Oracles from classical inversions: z + z^{-1} (Catalan numbers with alternating signs).
  const auto g = TruncatedSeries(Chart::infinity(), -1, {1.0, 0.0, 1.0});
  const auto gi = lagrange_invert(g, InversionKind::AtInfinity, 9);
  // z = chi - sum_j C_j chi^{-(2j+1)}.
  const double catalan[] = {1, 1, 2, 5, 14};
  for (int j = 0; j < 5; ++j) EXPECT_LE(std::abs(gi[-(2 * j + 1)] + catalan[j]), 1e-12) << j;
  for (int j = 1; j <= 4; ++j) EXPECT_LE(std::abs(gi[-2 * j]), 1e-13) << j;

  EXPECT_THROW(lagrange_invert(TruncatedSeries(Chart::infinity(), 0, {1.0, 2.0}), InversionKind::AtInfinity, 4),
               std::domain_error);
  EXPECT_THROW(lagrange_invert(pole(0, {1.0}), InversionKind::AtPole, 4), std::domain_error);
  EXPECT_THROW(lagrange_invert(pole(-1, {1.0}), InversionKind::AtInfinity, 4), ChartMismatch);
  TruncatedSeries short_window(Chart::infinity(), -2, {0.1, 0.2, 0.0, 1.0}, -2, kOpen);
  EXPECT_THROW(lagrange_invert(short_window, InversionKind::AtInfinity, 6), WindowExhausted);
}

TEST(Rational, Arithmetic) {
  const Rational a(1, 2);
  const Rational b(1, 3);
  EXPECT_EQ(a + b, Rational(5, 6));
  EXPECT_EQ(a - b, Rational(1, 6));
  EXPECT_EQ(a * b, Rational(1, 6));
  EXPECT_EQ(a / b, Rational(3, 2));
  EXPECT_EQ(Rational(4, -8), Rational(-1, 2));
  EXPECT_TRUE(Rational(6, 3).is_integer());
  EXPECT_THROW(Rational(1, 0), std::invalid_argument);
}

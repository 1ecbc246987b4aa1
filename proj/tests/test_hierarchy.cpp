#include <gtest/gtest.h>

#include <random>

#include "frobkit/hierarchy.hpp"

using namespace frobkit;

namespace {

ModelParams params(int m, int n, int s) {
  ModelParams p;
  p.m = m;
  p.n = n;
  p.s = s;
  return p;
}

double max_dev(const std::vector<TangentVec>& a, const std::vector<TangentVec>& b, cplx scale = 1.0) {
  double e = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j)
    e = std::max({e, max_abs(a[j].xi - scale * b[j].xi), max_abs(a[j].xihat - scale * b[j].xihat)});
  return e;
}

double max_norm(const std::vector<TangentVec>& a) {
  double e = 0.0;
  for (const auto& t : a) e = std::max({e, max_abs(t.xi), max_abs(t.xihat)});
  return e;
}

// Every node carries the same point, except phi which is shifted by phi_shift(x).
LoopField phi_loop(const Point& base, const std::function<cplx(double)>& phi_shift, int M) {
  std::vector<RawState> st;
  for (int j = 0; j < M; ++j) {
    auto s = RawState::of(base);
    s.phi += phi_shift(2.0 * kPi * j / M);
    st.push_back(s);
  }
  return LoopField::from_states(base.params(), st);
}

Point quadratic_point(cplx a0, cplx c, cplx d, cplx phi) {
  const auto P = params(2, 1, 2);
  std::vector<cplx> at(static_cast<std::size_t>(P.tail_depth) + 1);
  std::vector<cplx> ah(static_cast<std::size_t>(P.tail_depth) + 1);
  at.back() = a0;
  ah[0] = c;
  ah[2] = d;
  return {P, phi, at, ah};
}

constexpr int kGrid = 32;

}  // namespace

TEST(Bracket, SmallExamples) {
  const int N = 64;
  const auto z = z_samples(N);
  const auto g = z * z + 0.3 * laurent_on_circle(0.0, -1, {1.0}, N);
  const auto gz = derivative(g);
  const auto gx = 0.7 * z - 2.0 * laurent_on_circle(0.0, -2, {1.0}, N);
  const auto one = CircleSamples::constant(N, 1.0);
  const auto zero = CircleSamples::constant(N, 0.0);
  EXPECT_LE(max_abs(bracket(one, zero, gz, gx) - gx), 1e-14);
  EXPECT_LE(max_abs(bracket(gz, gx, gz, gx)), 1e-14);
  EXPECT_LE(max_abs(bracket(gz, gx, one, zero) + gx), 1e-14);
}

TEST(Loop, ConstantLoopHasNoDynamics) {
  const auto p = random_point(params(2, 1, 1), 70);
  const auto lf = phi_loop(p, [](double) { return cplx{}; }, kGrid);
  for (const auto& sp : x_derivative(lf)) {
    EXPECT_LE(max_abs(eval_on_circle(sp.a, p.n_samples())), 1e-14);
    EXPECT_LE(max_abs(eval_on_circle(sp.ahat, p.n_samples())), 1e-14);
  }
  for (const auto& fl : {FlowIndex::s(1), FlowIndex::shat(1), FlowIndex::shat0(),
                         FlowIndex::principal(CoordIndex::t(1), 0)})
    EXPECT_LE(max_norm(flow_rhs(lf, fl)), 1e-12) << fl.name();
}

TEST(Loop, MovingPoleOnly) {
  // phi = phi0 + 0.1 cos x with fixed coefficients in powers of (z - phi).
  // The head z^m stays put, so at fixed z only the tail of a moves:
  // a_x = -phi_x (a tail)' and ahat_x = -phi_x ahat'.
  const auto p = random_point(params(2, 1, 1), 71);
  const auto lf = phi_loop(p, [](double x) { return 0.1 * std::cos(x); }, kGrid);
  const auto dx = x_derivative(lf);
  const int N = p.n_samples();
  for (int j = 0; j < kGrid; ++j) {
    const double phix = -0.1 * std::sin(lf.x(j));
    const auto& d = lf.node(j).data();
    const auto tail_prime = eval_on_circle(d_dz(lf.node(j).a_tail_series()), N);
    EXPECT_LE(max_abs(eval_on_circle(dx[static_cast<std::size_t>(j)].a, N) + phix * tail_prime), 1e-12);
    EXPECT_LE(max_abs(eval_on_circle(dx[static_cast<std::size_t>(j)].ahat, N) + phix * d.sdahat), 1e-12);
  }
}

TEST(Loop, SpectralDerivativeAgreesWithFiniteDifferences) {
  const auto lf = smooth_loop(params(2, 1, 1), 72, 64);
  const auto dx = x_derivative(lf);
  const int M = lf.size();
  const int N = lf.params().n_samples;
  const double h = 2.0 * kPi / M;
  // eighth-order central weights
  const double w[4] = {4.0 / 5, -1.0 / 5, 4.0 / 105, -1.0 / 280};
  auto at = [&](int j) { return lf.node(((j % M) + M) % M).data(); };
  for (int j = 0; j < M; j += 7) {
    auto fa = CircleSamples::constant(N, 0.0);
    auto fh = CircleSamples::constant(N, 0.0);
    for (int k = 1; k <= 4; ++k) {
      fa = fa + (w[k - 1] / h) * (at(j + k).sa - at(j - k).sa);
      fh = fh + (w[k - 1] / h) * (at(j + k).sahat - at(j - k).sahat);
    }
    EXPECT_LE(max_abs(eval_on_circle(dx[static_cast<std::size_t>(j)].a, N) - fa), 1e-6);
    EXPECT_LE(max_abs(eval_on_circle(dx[static_cast<std::size_t>(j)].ahat, N) - fh), 1e-6);
  }
}

TEST(Loop, RoughLoopIsRejected) {
  const auto p = random_point(params(2, 1, 1), 73);
  // a kink in phi is not resolved by the spectral x-derivative
  const auto lf = phi_loop(p, [](double x) { return 0.05 * std::abs(std::sin(x)); }, kGrid);
  EXPECT_THROW(x_derivative(lf), EvolutionError);
}

TEST(Flows, LogarithmicFlowExplicitForm) {
  const auto lf = smooth_loop(params(2, 1, 1), 74, kGrid);
  const auto rhs = flow_rhs(lf, FlowIndex::shat0());
  const auto dx = x_derivative(lf);
  const auto v = raw_dx(lf);
  const int N = lf.params().n_samples;
  for (int j = 0; j < kGrid; ++j) {
    const auto k = static_cast<std::size_t>(j);
    const auto& d = lf.node(j).data();
    const auto inv = laurent_on_circle(lf.node(j).phi(), -1, {1.0}, N);
    const auto xi = inv * (eval_on_circle(dx[k].a, N) + v[k].dphi * d.sda);
    const auto xih = inv * (eval_on_circle(dx[k].ahat, N) + v[k].dphi * d.sdahat);
    EXPECT_LE(max_abs(rhs[k].xi - xi), 1e-12);
    EXPECT_LE(max_abs(rhs[k].xihat - xih), 1e-12);
  }
}

TEST(Flows, LogarithmicFlowIsAPrincipalFlow) {
  for (auto [m, n, s] : {std::tuple{2, 1, 1}, std::tuple{1, 1, 1}}) {
    const auto lf = smooth_loop(params(m, n, s), 75, kGrid);
    EXPECT_LE(max_dev(flow_rhs(lf, FlowIndex::principal(CoordIndex::hhat(n), 0)), flow_rhs(lf, FlowIndex::shat0()),
                      static_cast<double>(n)),
              1e-6);
  }
}

TEST(Poisson, FirstTensorIsSkew) {
  const auto lf = smooth_loop(params(2, 1, 1), 76, kGrid);
  // Gradients of commuting Hamiltonians pair to zero, so the fields are
  // reweighted along the loop to give a nontrivial pairing.
  auto w1 = gradient_field(lf, [](const Point& p) { return hamiltonian_gradient(p, HamIndex::h(3)); });
  auto w2 = gradient_field(lf, [](const Point& p) { return d_theta(p, {CoordIndex::hhat(0), 1}); });
  for (int j = 0; j < lf.size(); ++j) {
    const auto k = static_cast<std::size_t>(j);
    w1[k] = (1.0 + 0.3 * std::cos(lf.x(j))) * w1[k];
    w2[k] = (1.0 + 0.2 * std::sin(2.0 * lf.x(j))) * w2[k];
  }
  const cplx a = loop_pairing(lf, w1, p1_apply(lf, w2));
  const cplx b = loop_pairing(lf, w2, p1_apply(lf, w1));
  EXPECT_GT(std::abs(a), 1e-6);
  EXPECT_LE(std::abs(a + b), 1e-8);
}

TEST(Poisson, RecursionSelectsTheSymmetricReading) {
  const auto lf = smooth_loop(params(2, 1, 1), 77, kGrid);
  double sym = 0.0;
  double lit = 0.0;
  for (bool hatted : {false, true}) {
    const int shift = hatted ? 1 : 2;
    for (int k = 1; k <= 2 * shift; ++k) {
      auto idx = [&](int q) { return hatted ? HamIndex::hhat(q) : HamIndex::h(q); };
      const auto hi = gradient_field(lf, [&](const Point& p) { return hamiltonian_gradient(p, idx(k + shift)); });
      const auto lo = gradient_field(lf, [&](const Point& p) { return hamiltonian_gradient(p, idx(k)); });
      const auto lhs = p1_apply(lf, hi);
      sym = std::max(sym, max_dev(lhs, p2_apply(lf, lo, P2Variant::Symmetric)));
      lit = std::max(lit, max_dev(lhs, p2_apply(lf, lo, P2Variant::Literal)));
    }
  }
  EXPECT_LE(sym, 1e-6);
  EXPECT_GT(lit, 1e-4);
}

TEST(Hamiltonians, ClosedForms) {
  const cplx a0{0.1, 0.02};
  const cplx c = 0.05;
  const cplx d = 0.3;
  const auto p = quadratic_point(a0, c, d, {0.1, -0.05});
  EXPECT_LE(std::abs(hamiltonian_density(p, HamIndex::h(1)) - a0), 1e-13);
  EXPECT_LE(std::abs(hamiltonian_density(p, HamIndex::h(2))), 1e-13);
  EXPECT_LE(std::abs(hamiltonian_density(p, HamIndex::h(3)) - a0 * a0 / 4.0), 1e-13);
  EXPECT_LE(std::abs(hamiltonian_density(p, HamIndex::hhat(1)) - c), 1e-13);
  EXPECT_LE(std::abs(hamiltonian_density(p, HamIndex::hhat(2))), 1e-13);
  EXPECT_LE(std::abs(hamiltonian_density(p, HamIndex::hhat(3)) - c * c * d), 1e-13);
  const auto q = quadratic_point(0.0, c, d, 0.0);
  for (int k = 1; k <= 4; ++k) EXPECT_LE(std::abs(hamiltonian_density(q, HamIndex::h(k))), 1e-13) << k;
  EXPECT_THROW(hamiltonian_density(q, HamIndex::h(0)), std::invalid_argument);
}

TEST(Hamiltonians, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(15);
  std::normal_distribution<double> g;
  for (auto [m, n, s] : {std::tuple{2, 1, 1}, std::tuple{1, 1, 1}}) {
    const auto p = random_point(params(m, n, s), 78);
    RawVec dir = RawVec::zero(p);
    dir.dphi = 0.2 * cplx{g(rng), g(rng)};
    for (auto& c : dir.da) c = 0.2 * cplx{g(rng), g(rng)};
    for (auto& c : dir.dahat) c = 0.2 * cplx{g(rng), g(rng)};
    const auto t = to_tangent(p, dir);
    for (const auto& h : {HamIndex::h(1), HamIndex::h(3), HamIndex::h(4), HamIndex::hhat(1), HamIndex::hhat(2)}) {
      const cplx fd = raw_derivative(p, dir, [&](const Point& q) { return hamiltonian_density(q, h); });
      EXPECT_LE(std::abs(pairing(hamiltonian_gradient(p, h), t) - fd), 1e-6 * std::max(1.0, std::abs(fd))) << h.name();
    }
  }
}

TEST(Hamiltonians, LoopIntegralsOfDensities) {
  const auto lf = smooth_loop(params(2, 1, 1), 79, kGrid);
  auto integral = [&](const DensityIndex& d) {
    return loop_integral(lf, [&](const Point& q) { return theta_reg(q, d); });
  };
  // m = 2, n = 1: H_{2p+1} and Hhat_{p+1} are the level-p integrals of h_1 and
  // hhat_0 divided by their normalising constants; H_{2p+2} is p! times the sum
  // of the t_0 and hhat_0 integrals.
  for (int p = 0; p <= 1; ++p) {
    const double ch = gamma_ratio(p, 1, 2).value() * (0.5 + p);
    EXPECT_LE(std::abs(hamiltonian(lf, HamIndex::h(2 * p + 1)) - integral({CoordIndex::h(1), p}) / ch), 1e-7);
    const cplx sum = integral({CoordIndex::t(0), p}) + integral({CoordIndex::hhat(0), p});
    EXPECT_LE(std::abs(hamiltonian(lf, HamIndex::h(2 * p + 2)) - factorial(p) * sum), 1e-7);
    const double chh = gamma_ratio(p, 0, 1).value() * (1.0 + p);
    EXPECT_LE(std::abs(hamiltonian(lf, HamIndex::hhat(p + 1)) - integral({CoordIndex::hhat(0), p}) / chh), 1e-7);
  }
}

TEST(Evolution, ZeroStepsReturnsTheInitialLoop) {
  const auto lf = smooth_loop(params(2, 1, 1), 80, kGrid);
  int calls = 0;
  const auto out = evolve(lf, FlowIndex::shat0(), 1e-3, 0, [&](int, double, const LoopField&) { ++calls; });
  EXPECT_EQ(calls, 1);
  EXPECT_EQ(max_abs_diff(out, lf), 0.0);
}

TEST(Evolution, RungeKuttaIsFourthOrder) {
  const auto lf = smooth_loop(params(2, 1, 1), 81, kGrid);
  const double T = 0.08;
  const auto ref = evolve(lf, FlowIndex::shat0(), T / 32, 32);
  const double e1 = max_abs_diff(evolve(lf, FlowIndex::shat0(), T / 4, 4), ref);
  const double e2 = max_abs_diff(evolve(lf, FlowIndex::shat0(), T / 8, 8), ref);
  EXPECT_GT(e1 / e2, 12.0);
  EXPECT_LT(e1 / e2, 20.0);
}

TEST(Evolution, HamiltoniansAreConserved) {
  const auto lf = smooth_loop(params(2, 1, 1), 82, kGrid);
  const std::vector<HamIndex> hs = {HamIndex::h(1), HamIndex::h(2), HamIndex::h(3), HamIndex::hhat(1), HamIndex::hhat(2)};
  std::vector<cplx> h0;
  for (const auto& h : hs) h0.push_back(hamiltonian(lf, h));
  const auto fin = evolve(lf, FlowIndex::shat0(), 1e-3, 20);
  EXPECT_GT(max_abs_diff(fin, lf), 1e-5);
  for (std::size_t k = 0; k < hs.size(); ++k) EXPECT_LE(std::abs(hamiltonian(fin, hs[k]) - h0[k]), 1e-6) << hs[k].name();
}

TEST(Evolution, FlowsCommuteToFirstOrder) {
  const auto lf = smooth_loop(params(2, 1, 1), 83, kGrid);
  const double r1 = check_commutativity(lf, FlowIndex::s(1), FlowIndex::shat(1), 1e-2);
  const double r2 = check_commutativity(lf, FlowIndex::s(1), FlowIndex::shat(1), 5e-3);
  // the commutator of the Euler maps is O(dt^3) when the flows commute
  EXPECT_NEAR(r1 / r2, 2.0, 0.3);
}

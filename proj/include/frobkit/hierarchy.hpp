#pragma once

// Loop space over the manifold: periodic grids of points, the Lie bracket of
// functions of (z, x), the two Poisson tensors, the Hamiltonians H_k and
// Hhat_k, the Whitham and principal flows, a Runge-Kutta evolver and the
// dynamical checks (flow commutativity and tau-symmetry).

#include <cmath>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "frobkit/coords.hpp"

namespace frobkit {

struct EvolutionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Raw coordinates of one point: phi, the a-tail and the ahat coefficients.
struct RawState {
  cplx phi{};
  std::vector<cplx> a_tail;
  std::vector<cplx> ahat;

  static RawState of(const Point& p) { return {p.phi(), p.a_tail(), p.ahat()}; }
  [[nodiscard]] Point point(const ModelParams& params) const { return {params, phi, a_tail, ahat}; }
};

inline RawState add_scaled(RawState s, const RawVec& v, cplx h) {
  s.phi += h * v.dphi;
  for (std::size_t k = 0; k < s.a_tail.size(); ++k) s.a_tail[k] += h * v.da[k];
  for (std::size_t k = 0; k < s.ahat.size(); ++k) s.ahat[k] += h * v.dahat[k];
  return s;
}

inline double max_abs_diff(const RawState& a, const RawState& b) {
  double e = std::abs(a.phi - b.phi);
  for (std::size_t k = 0; k < a.a_tail.size(); ++k) e = std::max(e, std::abs(a.a_tail[k] - b.a_tail[k]));
  for (std::size_t k = 0; k < a.ahat.size(); ++k) e = std::max(e, std::abs(a.ahat[k] - b.ahat[k]));
  return e;
}

/// Points on the grid x_j = 2 pi j / M of the circle S^1.
class LoopField {
 public:
  LoopField(ModelParams params, std::vector<Point> nodes) : params_(std::move(params)), nodes_(std::move(nodes)) {
    const int M = size();
    if (M < 4 || (M & (M - 1)) != 0) throw std::invalid_argument("LoopField: grid size must be a power of two");
  }

  static LoopField from_states(const ModelParams& params, const std::vector<RawState>& states) {
    std::vector<Point> nodes;
    nodes.reserve(states.size());
    for (const auto& s : states) nodes.push_back(s.point(params));
    return {params, std::move(nodes)};
  }

  [[nodiscard]] const ModelParams& params() const { return params_; }
  [[nodiscard]] int size() const { return static_cast<int>(nodes_.size()); }
  [[nodiscard]] const Point& node(int j) const { return nodes_[static_cast<std::size_t>(j)]; }
  [[nodiscard]] const std::vector<Point>& nodes() const { return nodes_; }
  [[nodiscard]] double x(int j) const { return 2.0 * kPi * j / size(); }

  [[nodiscard]] std::vector<RawState> states() const {
    std::vector<RawState> out;
    for (const auto& p : nodes_) out.push_back(RawState::of(p));
    return out;
  }

 private:
  ModelParams params_;
  std::vector<Point> nodes_;
};

inline bool all_valid(const LoopField& lf) {
  for (const auto& p : lf.nodes())
    if (!validate(p).ok()) return false;
  return true;
}

inline double max_abs_diff(const LoopField& a, const LoopField& b) {
  double e = 0.0;
  for (int j = 0; j < a.size(); ++j) e = std::max(e, max_abs_diff(RawState::of(a.node(j)), RawState::of(b.node(j))));
  return e;
}

/// A smooth loop around a random base point: phi and every stored coefficient
/// receive first and second harmonics of relative size `amplitude`.
inline LoopField smooth_loop(const ModelParams& params, std::uint64_t seed, int grid_size = 64, double amplitude = 0.05,
                             int max_retries = 50) {
  for (int attempt = 0; attempt < max_retries; ++attempt) {
    const auto base = random_point(params, seed + 7919ULL * static_cast<std::uint64_t>(attempt));
    std::mt19937_64 rng(seed ^ 0x5bd1e995ULL ^ static_cast<std::uint64_t>(attempt));
    std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(2.0));
    auto rc = [&]() { return cplx{normal(rng), normal(rng)}; };
    auto harmonics = [&]() { return std::vector<cplx>{rc(), rc(), 0.5 * rc(), 0.5 * rc()}; };
    auto wave = [](const std::vector<cplx>& h, double x) {
      return h[0] * std::cos(x) + h[1] * std::sin(x) + h[2] * std::cos(2 * x) + h[3] * std::sin(2 * x);
    };
    const auto b = RawState::of(base);
    const auto hphi = harmonics();
    std::vector<std::vector<cplx>> ha, hh;
    for (std::size_t k = 0; k < b.a_tail.size(); ++k) ha.push_back(harmonics());
    for (std::size_t k = 0; k < b.ahat.size(); ++k) hh.push_back(harmonics());
    std::vector<RawState> states;
    bool ok = true;
    for (int j = 0; j < grid_size && ok; ++j) {
      const double x = 2.0 * kPi * j / grid_size;
      RawState s = b;
      s.phi += 0.4 * amplitude * wave(hphi, x);
      for (std::size_t k = 0; k < s.a_tail.size(); ++k) s.a_tail[k] *= 1.0 + amplitude * wave(ha[k], x);
      for (std::size_t k = 0; k < s.ahat.size(); ++k) s.ahat[k] *= 1.0 + amplitude * wave(hh[k], x);
      try {
        const auto p = s.point(params);
        ok = validate(p).ok() && resolution_tail(p) <= params.tol("resolution_tail", 1e-8);
      } catch (const std::exception&) {
        ok = false;
      }
      states.push_back(std::move(s));
    }
    if (ok) return LoopField::from_states(params, states);
  }
  throw GenerationError("smooth_loop: no valid loop found");
}

// ---------------------------------------------------------------------------
// x-derivatives
// ---------------------------------------------------------------------------

/// Spectral derivative of a 2 pi-periodic grid function; the Nyquist mode is dropped.
inline std::vector<cplx> spectral_dx(const std::vector<cplx>& v) {
  const int M = static_cast<int>(v.size());
  auto m = fourier_modes(v);
  for (int k = 0; k < M; ++k) {
    const int kk = signed_mode(k, M);
    m[static_cast<std::size_t>(k)] *= (2 * std::abs(kk) == M) ? cplx{} : cplx{0.0, static_cast<double>(kk)};
  }
  return from_fourier_modes(std::move(m));
}

/// Ratio of the top x-modes (|k| >= M/2 - 4) to the largest mode, over all
/// stored coordinates.
inline double smoothness_tail(const LoopField& lf) {
  const int M = lf.size();
  double top = 0.0;
  double peak = 0.0;
  auto scan = [&](const std::vector<cplx>& v) {
    const auto m = fourier_modes(v);
    for (int k = 0; k < M; ++k) {
      const double a = std::abs(m[static_cast<std::size_t>(k)]);
      peak = std::max(peak, a);
      if (std::abs(signed_mode(k, M)) >= M / 2 - 4) top = std::max(top, a);
    }
  };
  const auto st = lf.states();
  std::vector<cplx> v(static_cast<std::size_t>(M));
  for (int j = 0; j < M; ++j) v[static_cast<std::size_t>(j)] = st[static_cast<std::size_t>(j)].phi;
  scan(v);
  for (std::size_t k = 0; k < st[0].a_tail.size(); ++k) {
    for (int j = 0; j < M; ++j) v[static_cast<std::size_t>(j)] = st[static_cast<std::size_t>(j)].a_tail[k];
    scan(v);
  }
  for (std::size_t k = 0; k < st[0].ahat.size(); ++k) {
    for (int j = 0; j < M; ++j) v[static_cast<std::size_t>(j)] = st[static_cast<std::size_t>(j)].ahat[k];
    scan(v);
  }
  return peak == 0.0 ? 0.0 : top / peak;
}

/// x-derivatives of phi and of every stored coefficient, as raw directions.
inline std::vector<RawVec> raw_dx(const LoopField& lf) {
  const int M = lf.size();
  const auto st = lf.states();
  std::vector<RawVec> out(static_cast<std::size_t>(M), RawVec::zero(lf.node(0)));
  std::vector<cplx> v(static_cast<std::size_t>(M));
  auto column = [&](auto get, auto put) {
    for (int j = 0; j < M; ++j) v[static_cast<std::size_t>(j)] = get(st[static_cast<std::size_t>(j)]);
    const auto d = spectral_dx(v);
    for (int j = 0; j < M; ++j) put(out[static_cast<std::size_t>(j)], d[static_cast<std::size_t>(j)]);
  };
  column([](const RawState& s) { return s.phi; }, [](RawVec& r, cplx c) { r.dphi = c; });
  for (std::size_t k = 0; k < st[0].a_tail.size(); ++k)
    column([k](const RawState& s) { return s.a_tail[k]; }, [k](RawVec& r, cplx c) { r.da[k] = c; });
  for (std::size_t k = 0; k < st[0].ahat.size(); ++k)
    column([k](const RawState& s) { return s.ahat[k]; }, [k](RawVec& r, cplx c) { r.dahat[k] = c; });
  return out;
}

/// (a_x, ahat_x) at fixed z: coefficient derivatives plus the chain term of the moving center.
inline std::vector<SeriesPair> x_derivative(const LoopField& lf, double max_tail = 1e-6) {
  if (smoothness_tail(lf) > max_tail) throw EvolutionError("x_derivative: loop is not resolved by the x-grid");
  const auto v = raw_dx(lf);
  std::vector<SeriesPair> out;
  for (int j = 0; j < lf.size(); ++j) out.push_back(raw_action(lf.node(j), v[static_cast<std::size_t>(j)]));
  return out;
}

/// Spectral x-derivative of a sampled function of (z, x), one z-node at a time.
inline std::vector<CircleSamples> spectral_dx(const std::vector<CircleSamples>& f) {
  const int M = static_cast<int>(f.size());
  const int N = f[0].size();
  std::vector<CircleSamples> out(static_cast<std::size_t>(M), CircleSamples::constant(N, 0.0));
  std::vector<cplx> v(static_cast<std::size_t>(M));
  for (int k = 0; k < N; ++k) {
    for (int j = 0; j < M; ++j) v[static_cast<std::size_t>(j)] = f[static_cast<std::size_t>(j)][k];
    const auto d = spectral_dx(v);
    for (int j = 0; j < M; ++j) out[static_cast<std::size_t>(j)].values[static_cast<std::size_t>(k)] = d[static_cast<std::size_t>(j)];
  }
  return out;
}

/// A function of (z, x) on the grid together with its z- and x-derivatives.
struct LoopFn {
  std::vector<CircleSamples> f, fz, fx;
};

inline LoopFn loop_fn(std::vector<CircleSamples> f) {
  LoopFn out;
  for (const auto& v : f) out.fz.push_back(derivative(v));
  out.fx = spectral_dx(f);
  out.f = std::move(f);
  return out;
}

/// The functions a and ahat of the loop with exact z-derivatives and x-derivatives.
struct LoopData {
  LoopFn a, ahat;
};

inline LoopData loop_data(const LoopField& lf) {
  const auto dx = x_derivative(lf);
  const int N = lf.params().n_samples;
  LoopData d;
  for (int j = 0; j < lf.size(); ++j) {
    const auto& pd = lf.node(j).data();
    d.a.f.push_back(pd.sa);
    d.a.fz.push_back(pd.sda);
    d.a.fx.push_back(eval_on_circle(dx[static_cast<std::size_t>(j)].a, N));
    d.ahat.f.push_back(pd.sahat);
    d.ahat.fz.push_back(pd.sdahat);
    d.ahat.fx.push_back(eval_on_circle(dx[static_cast<std::size_t>(j)].ahat, N));
  }
  return d;
}

/// [f, g] = f_z g_x - g_z f_x from the four derivatives.
inline CircleSamples bracket(const CircleSamples& fz, const CircleSamples& fx, const CircleSamples& gz,
                             const CircleSamples& gx) {
  return fz * gx - gz * fx;
}

inline CircleSamples bracket(const LoopFn& f, const LoopFn& g, int j) {
  const auto k = static_cast<std::size_t>(j);
  return bracket(f.fz[k], f.fx[k], g.fz[k], g.fx[k]);
}

// ---------------------------------------------------------------------------
// Poisson tensors
// ---------------------------------------------------------------------------

inline LoopFn covector_part(const std::vector<Covector>& w, bool hatted) {
  std::vector<CircleSamples> f;
  for (const auto& c : w) f.push_back(hatted ? c.omegahat : c.omega);
  return loop_fn(std::move(f));
}

inline void check_grid(const LoopField& lf, const std::vector<Covector>& w) {
  if (static_cast<int>(w.size()) != lf.size()) throw std::invalid_argument("covector field does not match the grid");
}

/// P1 w = ([w,a]_- + [what,ahat]_- - [w_- + what_-, a],
///         -[w,a]_+ - [what,ahat]_+ + [w_+ + what_+, ahat]).
inline std::vector<TangentVec> p1_apply(const LoopField& lf, const std::vector<Covector>& w) {
  check_grid(lf, w);
  const auto d = loop_data(lf);
  const auto om = covector_part(w, false);
  const auto oh = covector_part(w, true);
  std::vector<TangentVec> out;
  for (int j = 0; j < lf.size(); ++j) {
    const auto k = static_cast<std::size_t>(j);
    const auto AB = bracket(om, d.a, j) + bracket(oh, d.ahat, j);
    const auto sz = om.fz[k] + oh.fz[k];
    const auto sx = om.fx[k] + oh.fx[k];
    const auto cm = bracket(minus_part(sz), minus_part(sx), d.a.fz[k], d.a.fx[k]);
    const auto cp = bracket(plus_part(sz), plus_part(sx), d.ahat.fz[k], d.ahat.fx[k]);
    out.push_back({minus_part(AB) - cm, cp - plus_part(AB)});
  }
  return out;
}

/// Reading of the second slot of P2. Literal applies an extra minus projection
/// to [(w a + what ahat)_+, ahat]. Symmetric drops it so that both slots share
/// one structure.
enum class P2Variant { Symmetric, Literal };

inline std::vector<TangentVec> p2_apply(const LoopField& lf, const std::vector<Covector>& w,
                                        P2Variant variant = P2Variant::Symmetric) {
  check_grid(lf, w);
  const auto d = loop_data(lf);
  const auto om = covector_part(w, false);
  const auto oh = covector_part(w, true);
  std::vector<CircleSamples> y;
  for (int j = 0; j < lf.size(); ++j) {
    const auto k = static_cast<std::size_t>(j);
    y.push_back(om.f[k] * d.a.f[k] + oh.f[k] * d.ahat.f[k]);
  }
  const auto Y = loop_fn(std::move(y));
  const double inv_m = 1.0 / lf.params().m;
  std::vector<TangentVec> out;
  for (int j = 0; j < lf.size(); ++j) {
    const auto k = static_cast<std::size_t>(j);
    const auto AB = bracket(om, d.a, j) + bracket(oh, d.ahat, j);
    const cplx sigma = inv_m * contour_integral(AB);
    const auto ym = bracket(minus_part(Y.fz[k]), minus_part(Y.fx[k]), d.a.fz[k], d.a.fx[k]);
    auto yp = bracket(plus_part(Y.fz[k]), plus_part(Y.fx[k]), d.ahat.fz[k], d.ahat.fx[k]);
    if (variant == P2Variant::Literal) yp = minus_part(yp);
    out.push_back({minus_part(AB) * d.a.f[k] - ym - sigma * d.a.fz[k],
                   yp - plus_part(AB) * d.ahat.f[k] - sigma * d.ahat.fz[k]});
  }
  return out;
}

/// Integral over the loop of <w1, P w2> for the antisymmetry checks.
inline cplx loop_pairing(const LoopField& lf, const std::vector<Covector>& w, const std::vector<TangentVec>& t) {
  cplx acc{};
  for (int j = 0; j < lf.size(); ++j) acc += pairing(w[static_cast<std::size_t>(j)], t[static_cast<std::size_t>(j)]);
  return acc * (2.0 * kPi / lf.size());
}

// ---------------------------------------------------------------------------
// Hamiltonians
// ---------------------------------------------------------------------------

struct HamIndex {
  enum class Kind { H, Hhat };
  Kind kind = Kind::H;
  int k = 1;

  static HamIndex h(int k) { return {Kind::H, k}; }
  static HamIndex hhat(int k) { return {Kind::Hhat, k}; }
  [[nodiscard]] std::string name() const { return (kind == Kind::H ? "H" : "Hhat") + std::to_string(k); }
};

/// Density of H_k or Hhat_k at a point: -(m/k) Res_inf lambda^k or (n/k) Res_phi lambdahat^k.
inline cplx hamiltonian_density(const Point& p, const HamIndex& h) {
  if (h.k < 1) throw std::invalid_argument("hamiltonian index must be positive");
  if (h.kind == HamIndex::Kind::H) {
    const auto f = detail::a_power_at_inf(p, Rational(h.k, p.m()), h.k / p.m() + 1);
    return -(static_cast<double>(p.m()) / h.k) * residue(f);
  }
  const auto f = detail::ahat_power_at_phi(p, Rational(h.k, p.n()), h.k / p.n() + 1);
  return (static_cast<double>(p.n()) / h.k) * residue(f);
}

/// Variational gradient: (a^{k/m - 1} truncated at infinity, 0) or (0, ahat^{k/n - 1} up to (z-phi)^n).
inline Covector hamiltonian_gradient(const Point& p, const HamIndex& h) {
  const int N = p.n_samples();
  if (h.kind == HamIndex::Kind::H) {
    const auto f = detail::a_power_at_inf(p, Rational(h.k, p.m()) - Rational(1), h.k / p.m() + 1);
    return {detail::residue_inf_covector(p, f, -1.0), CircleSamples::constant(N, 0.0)};
  }
  const auto f = detail::ahat_power_at_phi(p, Rational(h.k, p.n()) - Rational(1), h.k / p.n() + 1);
  return {CircleSamples::constant(N, 0.0), detail::residue_phi_covector(p, f, 1.0)};
}

/// Trapezoid rule for the integral over x in [0, 2 pi).
template <class F>
cplx loop_integral(const LoopField& lf, F&& density) {
  cplx acc{};
  for (const auto& p : lf.nodes()) acc += density(p);
  return acc * (2.0 * kPi / lf.size());
}

inline cplx hamiltonian(const LoopField& lf, const HamIndex& h) {
  return loop_integral(lf, [&](const Point& p) { return hamiltonian_density(p, h); });
}

inline std::vector<Covector> gradient_field(const LoopField& lf, const std::function<Covector(const Point&)>& g) {
  std::vector<Covector> out;
  for (const auto& p : lf.nodes()) out.push_back(g(p));
  return out;
}

// ---------------------------------------------------------------------------
// Flows
// ---------------------------------------------------------------------------

struct FlowIndex {
  enum class Kind { S, Shat, Shat0, Principal };
  Kind kind = Kind::S;
  int k = 1;
  DensityIndex density{};

  static FlowIndex s(int k) { return {Kind::S, k, {}}; }
  static FlowIndex shat(int k) { return {Kind::Shat, k, {}}; }
  static FlowIndex shat0() { return {Kind::Shat0, 0, {}}; }
  static FlowIndex principal(CoordIndex u, int p) { return {Kind::Principal, 0, {u, p}}; }

  [[nodiscard]] std::string name() const {
    switch (kind) {
      case Kind::S: return "S" + std::to_string(k);
      case Kind::Shat: return "Shat" + std::to_string(k);
      case Kind::Shat0: return "Shat0";
      case Kind::Principal: return "T[" + density.name() + "]";
    }
    return "?";
  }
};

/// Right-hand side of ([f, a], [f, ahat]) for a generator f given on the grid.
inline std::vector<TangentVec> bracket_flow(const LoopField& lf, const LoopFn& f) {
  const auto d = loop_data(lf);
  std::vector<TangentVec> out;
  for (int j = 0; j < lf.size(); ++j) out.push_back({bracket(f, d.a, j), bracket(f, d.ahat, j)});
  return out;
}

inline std::vector<TangentVec> flow_rhs(const LoopField& lf, const FlowIndex& fl) {
  const int N = lf.params().n_samples;
  switch (fl.kind) {
    case FlowIndex::Kind::S:
    case FlowIndex::Kind::Shat: {
      if (fl.k < 1) throw std::invalid_argument("flow index must be positive");
      std::vector<CircleSamples> f;
      for (const auto& p : lf.nodes()) {
        if (fl.kind == FlowIndex::Kind::S) {
          const auto lk = detail::a_power_at_inf(p, Rational(fl.k, p.m()), fl.k / p.m() + 1);
          f.push_back(detail::inf_terms_from(p, lk, 0));
        } else {
          const auto lk = detail::ahat_power_at_phi(p, Rational(fl.k, p.n()), fl.k / p.n() + 1);
          f.push_back(-detail::pole_terms_to(p, lk, -1));
        }
      }
      return bracket_flow(lf, loop_fn(std::move(f)));
    }
    case FlowIndex::Kind::Shat0: {
      // log(z - phi) has z-derivative 1/(z - phi) and x-derivative -phi_x/(z - phi).
      const auto v = raw_dx(lf);
      LoopFn f;
      for (int j = 0; j < lf.size(); ++j) {
        const auto inv_w = laurent_on_circle(lf.node(j).phi(), -1, {1.0}, N);
        f.f.push_back(CircleSamples::constant(N, 0.0));
        f.fz.push_back(inv_w);
        f.fx.push_back(-v[static_cast<std::size_t>(j)].dphi * inv_w);
      }
      return bracket_flow(lf, f);
    }
    case FlowIndex::Kind::Principal: {
      const DensityIndex up{fl.density.u, fl.density.p + 1};
      return p1_apply(lf, gradient_field(lf, [&](const Point& p) { return d_theta_reg(p, up); }));
    }
  }
  return {};
}

/// Flow right-hand side converted to raw coordinates, node by node.
inline std::vector<RawVec> flow_raw(const LoopField& lf, const FlowIndex& fl) {
  const auto t = flow_rhs(lf, fl);
  std::vector<RawVec> out;
  for (int j = 0; j < lf.size(); ++j) out.push_back(tangent_to_raw(lf.node(j), t[static_cast<std::size_t>(j)]));
  return out;
}

inline std::vector<RawState> add_scaled(const std::vector<RawState>& s, const std::vector<RawVec>& v, cplx h) {
  std::vector<RawState> out;
  for (std::size_t j = 0; j < s.size(); ++j) out.push_back(add_scaled(s[j], v[j], h));
  return out;
}

/// One forward Euler step, used by the commutator and tau-symmetry checks.
inline LoopField euler_step(const LoopField& lf, const FlowIndex& fl, double dt) {
  return LoopField::from_states(lf.params(), add_scaled(lf.states(), flow_raw(lf, fl), dt));
}

namespace detail {

inline std::optional<LoopField> try_rk4(const LoopField& lf, const FlowIndex& fl, double dt) {
  try {
    const auto s0 = lf.states();
    const auto k1 = flow_raw(lf, fl);
    const auto f2 = LoopField::from_states(lf.params(), add_scaled(s0, k1, dt / 2));
    if (!all_valid(f2)) return std::nullopt;
    const auto k2 = flow_raw(f2, fl);
    const auto f3 = LoopField::from_states(lf.params(), add_scaled(s0, k2, dt / 2));
    if (!all_valid(f3)) return std::nullopt;
    const auto k3 = flow_raw(f3, fl);
    const auto f4 = LoopField::from_states(lf.params(), add_scaled(s0, k3, dt));
    if (!all_valid(f4)) return std::nullopt;
    const auto k4 = flow_raw(f4, fl);
    auto s = s0;
    s = add_scaled(s, k1, dt / 6);
    s = add_scaled(s, k2, dt / 3);
    s = add_scaled(s, k3, dt / 3);
    s = add_scaled(s, k4, dt / 6);
    auto out = LoopField::from_states(lf.params(), s);
    if (!all_valid(out)) return std::nullopt;
    return out;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

inline LoopField rk4_with_retries(const LoopField& lf, const FlowIndex& fl, double dt, int halvings) {
  if (auto r = try_rk4(lf, fl, dt)) return *r;
  if (halvings == 0) throw EvolutionError("evolve: the point left the valid region");
  const auto mid = rk4_with_retries(lf, fl, dt / 2, halvings - 1);
  return rk4_with_retries(mid, fl, dt / 2, halvings - 1);
}

}  // namespace detail

/// Classical fourth-order Runge-Kutta in the raw coordinates. A step whose
/// stages leave the valid region is redone as two half steps, at most four
/// levels deep. The observer, if given, sees the field after every step.
inline LoopField evolve(const LoopField& lf, const FlowIndex& fl, double dt, int steps,
                        const std::function<void(int, double, const LoopField&)>& observer = {}) {
  LoopField cur = lf;
  if (observer) observer(0, 0.0, cur);
  for (int k = 1; k <= steps; ++k) {
    cur = detail::rk4_with_retries(cur, fl, dt, 4);
    if (observer) observer(k, k * dt, cur);
  }
  return cur;
}

/// |E1 E2 - E2 E1| / dt^2 for forward Euler maps of the two flows.
inline double check_commutativity(const LoopField& lf, const FlowIndex& f1, const FlowIndex& f2, double dt) {
  const auto a = euler_step(euler_step(lf, f2, dt), f1, dt);
  const auto b = euler_step(euler_step(lf, f1, dt), f2, dt);
  return max_abs_diff(a, b) / (dt * dt);
}

/// Central time differences of theta_{d1} along the flow of d2 and of theta_{d2}
/// along the flow of d1, largest nodewise deviation.
inline double check_tau_symmetry(const LoopField& lf, const DensityIndex& d1, const DensityIndex& d2, double dt) {
  auto rate = [&](const DensityIndex& th, const DensityIndex& along) {
    const auto fl = FlowIndex::principal(along.u, along.p);
    const auto plus = euler_step(lf, fl, dt);
    const auto minus = euler_step(lf, fl, -dt);
    std::vector<cplx> out;
    for (int j = 0; j < lf.size(); ++j)
      out.push_back((theta_reg(plus.node(j), th) - theta_reg(minus.node(j), th)) / (2.0 * dt));
    return out;
  };
  const auto r1 = rate(d1, d2);
  const auto r2 = rate(d2, d1);
  double e = 0.0;
  for (std::size_t j = 0; j < r1.size(); ++j) e = std::max(e, std::abs(r1[j] - r2[j]));
  return e;
}

}  // namespace frobkit

#pragma once

// The verification battery shared by the command line tool and the acceptance
// binary. Each check produces one record; records carry the number of the
// acceptance criterion they feed (0 when they feed none).

#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "frobkit/io.hpp"

namespace frobkit {

struct CheckRecord {
  std::string suite;
  std::string id;
  std::string anchor;
  double residual = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  double wall_time = 0.0;
  int criterion = 0;
  std::string note;
};

struct Report {
  RunConfig config;
  std::vector<CheckRecord> records;

  [[nodiscard]] int failed() const {
    int k = 0;
    for (const auto& r : records) k += r.pass ? 0 : 1;
    return k;
  }
  [[nodiscard]] int passed() const { return static_cast<int>(records.size()) - failed(); }
  [[nodiscard]] bool ok() const { return failed() == 0; }
};

inline const std::vector<std::string>& all_suites() {
  static const std::vector<std::string> s = {"series", "manifold", "geometry", "coords", "hierarchy", "dynamics"};
  return s;
}

inline json record_to_json(const CheckRecord& r, bool with_time = true) {
  json j = {{"suite", r.suite},         {"id", r.id},     {"anchor", r.anchor},
            {"tolerance", r.tolerance}, {"pass", r.pass}, {"criterion", r.criterion}};
  // JSON has no infinity; a check that threw reports a null residual.
  if (std::isfinite(r.residual))
    j["residual"] = r.residual;
  else
    j["residual"] = nullptr;
  if (!r.note.empty()) j["note"] = r.note;
  if (with_time) j["wall_time"] = r.wall_time;
  return j;
}

/// Report as JSON. With `with_times` false the body is fully determined by the config.
inline json report_to_json(const Report& rep, bool with_times = true) {
  json recs = json::array();
  for (const auto& r : rep.records) recs.push_back(record_to_json(r, with_times));
  return {{"version", kVersion},
          {"config", config_to_json(rep.config)},
          {"summary", {{"total", rep.records.size()}, {"passed", rep.passed()}, {"failed", rep.failed()}}},
          {"records", recs}};
}

// ---------------------------------------------------------------------------
// Random test data
// ---------------------------------------------------------------------------

namespace detail {

inline cplx gauss(std::mt19937_64& rng) {
  std::normal_distribution<double> d(0.0, 1.0);
  const double re = d(rng);
  return {re, d(rng)};
}

/// Random raw direction with coefficients decaying away from the heads.
inline RawVec random_raw(const Point& p, std::mt19937_64& rng) {
  auto v = RawVec::zero(p);
  v.dphi = 0.5 * gauss(rng);
  const auto len = v.da.size();
  for (std::size_t k = 0; k < len; ++k) {
    v.da[k] = gauss(rng) * std::pow(0.5, static_cast<double>(len - 1 - k));
    v.dahat[k] = gauss(rng) * std::pow(0.5, static_cast<double>(k));
  }
  return v;
}

/// Random covector with a few terms past each window edge.
inline Covector random_covector(const Point& p, std::mt19937_64& rng, int span = 6) {
  const int N = p.n_samples();
  std::vector<cplx> a;
  std::vector<cplx> b;
  for (int k = -p.m() + 1; k <= span; ++k) a.push_back(gauss(rng) * std::pow(0.5, k + p.m()));
  for (int k = -span; k <= p.n(); ++k) b.push_back(gauss(rng) * std::pow(0.5, p.n() - k));
  return {laurent_on_circle(p.phi(), -p.m() + 1, a, N), laurent_on_circle(p.phi(), -span, b, N)};
}

inline double quotient_max(const Point& p, const Covector& a, const Covector& b) {
  return max_abs(kernel_quotient(p, a - b));
}

inline double max_dev(const std::vector<TangentVec>& a, const std::vector<TangentVec>& b, cplx scale_b = 1.0) {
  double e = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) e = std::max(e, max_abs(a[j] - scale_b * b[j]));
  return e;
}

inline double max_norm(const std::vector<TangentVec>& a) {
  double e = 0.0;
  for (const auto& t : a) e = std::max(e, max_abs(t));
  return e;
}

/// Integer power series coefficients convolved exactly, for the product oracle.
inline std::vector<long long> exact_convolution(const std::vector<long long>& f, const std::vector<long long>& g) {
  std::vector<long long> out(f.size() + g.size() - 1, 0);
  for (std::size_t i = 0; i < f.size(); ++i)
    for (std::size_t j = 0; j < g.size(); ++j) out[i + j] += f[i] * g[j];
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Explicit flows of the two worked examples
// ---------------------------------------------------------------------------

/// The closed form (-[K_z]_- a_x + [K_x]_- a', [K_z]_+ ahat_x - [K_x]_+ ahat')
/// where K is the z-primitive-free generator of the flow given by its z- and
/// x-derivatives.
inline std::vector<TangentVec> explicit_log_type_flow(const LoopField& lf,
                                                      const std::function<std::pair<CircleSamples, CircleSamples>(
                                                          const LoopData&, std::size_t)>& kernel) {
  const auto d = loop_data(lf);
  std::vector<TangentVec> out;
  for (int j = 0; j < lf.size(); ++j) {
    const auto k = static_cast<std::size_t>(j);
    const auto [kz, kx] = kernel(d, k);
    out.push_back({minus_part(kx) * d.a.fz[k] - minus_part(kz) * d.a.fx[k],
                   plus_part(kz) * d.ahat.fx[k] - plus_part(kx) * d.ahat.fz[k]});
  }
  return out;
}

/// Flow of t_i at level one, i != -s, written with zeta^{i/s}.
inline std::vector<TangentVec> example_t_flow(const LoopField& lf, int i) {
  const int s = lf.params().s;
  return explicit_log_type_flow(lf, [&](const LoopData& d, std::size_t k) {
    const auto zeta = d.a.f[k] - d.ahat.f[k];
    const auto P = power_on_circle(zeta, Rational(i, s));
    return std::pair{P * (d.a.fz[k] - d.ahat.fz[k]), P * (d.a.fx[k] - d.ahat.fx[k])};
  });
}

/// Flow of t_{-s} at level one, written with the logarithmic derivatives.
inline std::vector<TangentVec> example_t_minus_s_flow(const LoopField& lf) {
  const double r = static_cast<double>(lf.params().s) / lf.params().m;
  return explicit_log_type_flow(lf, [&](const LoopData& d, std::size_t k) {
    const auto zeta = d.a.f[k] - d.ahat.f[k];
    const auto kz = (d.a.fz[k] - d.ahat.fz[k]) / zeta - r * (d.a.fz[k] / d.a.f[k]);
    const auto kx = (d.a.fx[k] - d.ahat.fx[k]) / zeta - r * (d.a.fx[k] / d.a.f[k]);
    return std::pair{kz, kx};
  });
}

// ---------------------------------------------------------------------------
// The battery
// ---------------------------------------------------------------------------

class Verifier {
 public:
  explicit Verifier(RunConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.check();
    params_ = cfg_.params();
  }

  Report run() {
    Report rep;
    rep.config = cfg_;
    records_.clear();
    const auto& wanted = cfg_.suites.empty() ? all_suites() : cfg_.suites;
    for (const auto& s : wanted) {
      if (s == "series") run_series();
      else if (s == "manifold") run_manifold();
      else if (s == "geometry") run_geometry();
      else if (s == "coords") run_coords();
      else if (s == "hierarchy") run_hierarchy();
      else if (s == "dynamics") run_dynamics();
      else throw ConfigError("unknown suite '" + s + "'");
    }
    std::stable_sort(records_.begin(), records_.end(),
                     [](const CheckRecord& a, const CheckRecord& b) { return a.id < b.id; });
    rep.records = records_;
    return rep;
  }

  // Suites may be run one at a time; records accumulate until run() is called.
  void run_series();
  void run_manifold();
  void run_geometry();
  void run_coords();
  void run_hierarchy();
  void run_dynamics();

  [[nodiscard]] const std::vector<CheckRecord>& records() const { return records_; }

 private:
  RunConfig cfg_;
  ModelParams params_;
  std::vector<CheckRecord> records_;
  std::vector<Point> points_;
  std::vector<LoopField> loops_;
  bool points_ready_ = false;
  bool loops_ready_ = false;
  std::string generation_error_;

  /// Tolerance for a check id: an override for the id itself or for any
  /// dot-separated prefix of it wins over the default.
  [[nodiscard]] double tolerance(const std::string& id, double fallback) const {
    std::string key = id;
    while (true) {
      auto it = cfg_.tolerances.find(key);
      if (it != cfg_.tolerances.end()) return it->second;
      const auto dot = key.rfind('.');
      if (dot == std::string::npos) return fallback;
      key.resize(dot);
    }
  }

  [[nodiscard]] std::mt19937_64 rng_for(std::uint64_t salt) const {
    return std::mt19937_64(cfg_.seed * 0x9E3779B97F4A7C15ULL + salt);
  }

  /// Run `body`, which returns a residual, and record the outcome.
  void check(const std::string& suite, const std::string& id, const std::string& anchor, double default_tol,
             int criterion, const std::function<double()>& body) {
    CheckRecord r;
    r.suite = suite;
    r.id = suite + "." + id;
    r.anchor = anchor;
    r.criterion = criterion;
    r.tolerance = tolerance(r.id, default_tol);
    const auto t0 = std::chrono::steady_clock::now();
    try {
      r.residual = body();
    } catch (const std::exception& e) {
      r.residual = std::numeric_limits<double>::infinity();
      r.note = e.what();
    }
    r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    r.pass = std::isfinite(r.residual) && r.residual <= r.tolerance;
    records_.push_back(std::move(r));
  }

  /// Like check(), with a tolerance computed alongside the residual.
  void check_scaled(const std::string& suite, const std::string& id, const std::string& anchor, int criterion,
                    const std::function<std::pair<double, double>()>& body) {
    double tol = 0.0;
    check(suite, id, anchor, 0.0, criterion, [&] {
      auto [res, t] = body();
      tol = t;
      return res;
    });
    auto& r = records_.back();
    if (cfg_.tolerances.count(r.id) == 0) {
      r.tolerance = tol;
      r.pass = std::isfinite(r.residual) && r.residual <= r.tolerance;
    }
  }

  const std::vector<Point>& points() {
    if (!points_ready_) {
      points_ready_ = true;
      try {
        for (int k = 0; k < cfg_.points; ++k)
          points_.push_back(random_point(params_, cfg_.seed * 1000003ULL + static_cast<std::uint64_t>(k)));
      } catch (const std::exception& e) {
        generation_error_ = e.what();
        points_.clear();
      }
    }
    if (points_.empty()) throw GenerationError("point generation failed: " + generation_error_);
    return points_;
  }

  const std::vector<LoopField>& loops() {
    if (!loops_ready_) {
      loops_ready_ = true;
      for (int k = 0; k < cfg_.loops; ++k)
        loops_.push_back(smooth_loop(params_, cfg_.seed * 7777ULL + 13ULL * static_cast<std::uint64_t>(k),
                                     cfg_.grid_size));
    }
    return loops_;
  }

  /// Worst residual of `f` over all sample points.
  double over_points(const std::function<double(const Point&)>& f) {
    double e = 0.0;
    for (const auto& p : points()) e = std::max(e, f(p));
    return e;
  }

  double over_loops(const std::function<double(const LoopField&)>& f) {
    double e = 0.0;
    for (const auto& lf : loops()) e = std::max(e, f(lf));
    return e;
  }

  [[nodiscard]] std::vector<CoordIndex> density_labels(int tmax) const {
    std::vector<CoordIndex> us;
    for (int i = -tmax; i <= tmax; ++i) us.push_back(CoordIndex::t(i));
    if (params_.s > tmax) us.push_back(CoordIndex::t(-params_.s));
    for (int j = 1; j <= params_.m - 1; ++j) us.push_back(CoordIndex::h(j));
    for (int k = 0; k <= params_.n; ++k) us.push_back(CoordIndex::hhat(k));
    return us;
  }

  [[nodiscard]] bool is_log_label(const CoordIndex& u) const {
    return u == CoordIndex::t(-params_.s) || u == CoordIndex::hhat(params_.n);
  }
};

// ---------------------------------------------------------------------------
// series
// ---------------------------------------------------------------------------

inline void Verifier::run_series() {
  const std::string S = "series";
  const int N = params_.n_samples;

  check(S, "roundtrip", "coefficient extraction inverts evaluation on the circle", 1e-10, 10, [&] {
    auto rng = rng_for(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double e = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      const cplx phi = std::polar(0.4 * std::sqrt(u(rng)), 2.0 * kPi * u(rng));
      std::vector<cplx> c;
      for (int k = -8; k <= 8; ++k) c.push_back(detail::gauss(rng));
      const TruncatedSeries f(Chart::pole(phi), -8, c);
      const auto g = samples_to_series(eval_on_circle(f, N), phi, -10, 10);
      for (int k = -8; k <= 8; ++k) e = std::max(e, std::abs(g[k] - f[k]));
    }
    return e;
  });

  check(S, "quadrature", "trapezoid rule on the unit circle is exact for monomials", 1e-10, 10, [&] {
    double e = 0.0;
    for (cplx phi : {cplx{0.0, 0.0}, cplx{0.3, 0.0}, cplx{-0.2, 0.25}}) {
      for (int k = -N / 4; k <= N / 4; ++k) {
        const auto f = laurent_on_circle(phi, k, {1.0}, N);
        const cplx expect = k == -1 ? 1.0 : 0.0;
        // Large negative powers reach |f| ~ 0.6^{-64}, so the error is taken relative to the samples.
        e = std::max(e, std::abs(contour_integral(f) - expect) / std::max(1.0, max_abs(f)));
      }
    }
    const auto z = z_samples(N);
    e = std::max(e, std::abs(contour_integral(CircleSamples::constant(N, 1.0) / z) - 1.0));
    return e;
  });

  check(S, "reciprocal", "formal reciprocal from the extreme coefficient", 1e-12, 10, [&] {
    auto rng = rng_for(2);
    double e = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<cplx> c;
      for (int k = 0; k < 6; ++k) c.push_back(detail::gauss(rng) * (k == 0 || k == 5 ? 1.0 : 0.5));
      c.front() += 3.0;
      c.back() += 3.0;
      const TruncatedSeries f(Chart::pole(0.1 * detail::gauss(rng)), -2, c, -kOpen, kOpen);
      for (Side side : {Side::Top, Side::Bottom}) {
        const auto g = mul(f, reciprocal_leading(f, side, 20));
        const double scale = std::max(1.0, std::abs(f[side == Side::Top ? 3 : -2]));
        for (int k = std::max(g.lo(), g.exact_lo()); k <= std::min(g.hi(), g.exact_hi()); ++k)
          e = std::max(e, std::abs(g[k] - (k == 0 ? 1.0 : 0.0)) / scale);
      }
    }
    return e;
  });

  check(S, "lagrange", "compositional inverses at infinity and at the pole", 1e-10, 10, [&] {
    double e = 0.0;
    // sqrt(z^2 + 2) inverts to sqrt(chi^2 - 2) = chi sum_k binom(1/2, k) (-2)^k chi^{-2k}.
    {
      const TruncatedSeries l(Chart::infinity(), 0, {2.0, 0.0, 1.0});
      const auto chi = power(l, Rational(1, 2), Side::Top, 24);
      const auto inv = lagrange_invert(chi, InversionKind::AtInfinity, 10);
      double binom = 1.0;
      for (int k = 0; 1 - 2 * k >= -9; ++k) {
        e = std::max(e, std::abs(inv[1 - 2 * k] - binom * std::pow(-2.0, k)));
        binom *= (0.5 - k) / (k + 1.0);
      }
      for (int k = 0; k >= -9; k -= 2) e = std::max(e, std::abs(inv[k]));
    }
    // c/w + d w with w = z - phi inverts to phi + sum_k Catalan_k c^{k+1} d^k chi^{-(2k+1)}.
    {
      const cplx phi{0.2, -0.1};
      const double c = 0.7;
      const double d = 0.4;
      const TruncatedSeries f(Chart::pole(phi), -1, {c, 0.0, d}, -kOpen, kOpen);
      const auto inv = lagrange_invert(f, InversionKind::AtPole, 9);
      e = std::max(e, std::abs(inv[0] - phi));
      double catalan = 1.0;
      for (int k = 0; 2 * k + 1 <= 9; ++k) {
        e = std::max(e, std::abs(inv[-(2 * k + 1)] - catalan * std::pow(c, k + 1) * std::pow(d, k)));
        if (2 * k + 2 <= 9) e = std::max(e, std::abs(inv[-(2 * k + 2)]));
        catalan *= 2.0 * (2.0 * k + 1.0) / (k + 2.0);
      }
    }
    // The Moebius case c/(z - phi) inverts to phi + c/chi.
    {
      const cplx phi{-0.3, 0.1};
      const TruncatedSeries f(Chart::pole(phi), -1, {2.0}, -kOpen, kOpen);
      const auto inv = lagrange_invert(f, InversionKind::AtPole, 6);
      e = std::max(e, std::abs(inv[0] - phi));
      e = std::max(e, std::abs(inv[-1] - 2.0));
      for (int k = -6; k <= -2; ++k) e = std::max(e, std::abs(inv[k]));
    }
    return e;
  });

  check(S, "product", "windowed product against an exact integer convolution", 1e-12, 0, [&] {
    auto rng = rng_for(3);
    std::uniform_int_distribution<int> coef(-9, 9);
    double e = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<long long> fi(9), gi(9);
      for (auto& v : fi) v = coef(rng);
      for (auto& v : gi) v = coef(rng);
      std::vector<cplx> fc(fi.begin(), fi.end());
      std::vector<cplx> gc(gi.begin(), gi.end());
      const TruncatedSeries f(Chart::pole(0.25), -4, fc, -kOpen, kOpen);
      const TruncatedSeries g(Chart::pole(0.25), -4, gc, -kOpen, kOpen);
      const auto h = mul(f, g);
      const auto exact = detail::exact_convolution(fi, gi);
      for (std::size_t k = 0; k < exact.size(); ++k) {
        const int expo = -8 + static_cast<int>(k);
        const double ref = static_cast<double>(exact[k]);
        e = std::max(e, std::abs(h[expo] - ref) / std::max(1.0, std::abs(ref)));
      }
    }
    return e;
  });

  check(S, "integration_by_parts", "contour integral of a derivative pairs antisymmetrically", 1e-10, 0, [&] {
    auto rng = rng_for(4);
    double e = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
      const cplx phi = 0.3 * detail::gauss(rng) / 1.5;
      std::vector<cplx> a, b;
      for (int k = -6; k <= 6; ++k) {
        a.push_back(detail::gauss(rng));
        b.push_back(detail::gauss(rng));
      }
      const TruncatedSeries f(Chart::pole(phi), -6, a);
      const TruncatedSeries g(Chart::pole(phi), -6, b);
      const auto lhs = contour_integral(eval_on_circle(d_dz(f), N) * eval_on_circle(g, N));
      const auto rhs = -contour_integral(eval_on_circle(f, N) * eval_on_circle(d_dz(g), N));
      e = std::max(e, std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs)));
    }
    return e;
  });
}

// ---------------------------------------------------------------------------
// manifold
// ---------------------------------------------------------------------------

inline void Verifier::run_manifold() {
  const std::string S = "manifold";

  check(S, "generation", "every generated point satisfies the four defining conditions", 0.0, 0, [&] {
    double bad = 0.0;
    for (const auto& p : points()) bad += validate(p).ok() ? 0.0 : 1.0;
    return bad;
  });

  check(S, "pairing", "pairing by quadrature against the coefficient sum over exponents j + k = -1", 1e-10, 0, [&] {
    auto rng = rng_for(11);
    return over_points([&](const Point& p) {
      const auto w = detail::random_covector(p, rng);
      const auto t = to_tangent(p, detail::random_raw(p, rng));
      const cplx phi = p.phi();
      const int span = 40;
      const auto cw = coefficients(w.omega, phi, -span, span);
      const auto cx = coefficients(t.xi, phi, -span, span);
      const auto cwh = coefficients(w.omegahat, phi, -span, span);
      const auto cxh = coefficients(t.xihat, phi, -span, span);
      cplx acc{};
      for (int j = -span; j <= span; ++j) {
        const int k = -1 - j;
        if (k < -span || k > span) continue;
        const auto a = static_cast<std::size_t>(j + span);
        const auto b = static_cast<std::size_t>(k + span);
        acc += cw[a] * cx[b] + cwh[a] * cxh[b];
      }
      return std::abs(acc - pairing(w, t)) / std::max(1.0, std::abs(acc));
    });
  });

  check(S, "zeta_root", "continuous s-th root of zeta raised back to the s-th power", 1e-10, 0, [&] {
    return over_points([&](const Point& p) {
      const auto& d = p.data();
      const auto r = power_on_circle(d.szeta, Rational(1, p.s()));
      auto back = CircleSamples::constant(p.n_samples(), 1.0);
      for (int k = 0; k < p.s(); ++k) back = back * r;
      return max_abs(back - d.szeta) / max_abs(d.szeta);
    });
  });

  check(S, "zeta_ell_split", "a = zeta_- + ell and ahat = -zeta_+ + ell", 1e-10, 0, [&] {
    return over_points([&](const Point& p) {
      const auto& d = p.data();
      return std::max(max_abs(d.sa - minus_part(d.szeta) - d.sell), max_abs(d.sahat + plus_part(d.szeta) - d.sell));
    });
  });
}

// ---------------------------------------------------------------------------
// geometry
// ---------------------------------------------------------------------------

inline void Verifier::run_geometry() {
  const std::string S = "geometry";

  check(S, "torsion", "the connection is torsion free on coordinate fields", 1e-8, 5, [&] {
    auto rng = rng_for(21);
    return over_points([&](const Point& p) {
      const auto u = detail::random_raw(p, rng);
      const auto v = detail::random_raw(p, rng);
      return max_abs(nabla_vec(p, u, v) - nabla_vec(p, v, u));
    });
  });

  check(S, "metric_compatibility", "the connection preserves the flat metric", 1e-6, 5, [&] {
    auto rng = rng_for(22);
    return over_points([&](const Point& p) {
      const auto u = detail::random_raw(p, rng);
      const auto v = detail::random_raw(p, rng);
      const auto x = detail::random_raw(p, rng);
      const auto lhs =
          raw_derivative(p, u, [&](const Point& q) { return metric(q, to_tangent(q, v), to_tangent(q, x)); });
      const auto rhs = metric(p, nabla_vec(p, u, v), to_tangent(p, x)) + metric(p, to_tangent(p, v), nabla_vec(p, u, x));
      return std::abs(lhs - rhs);
    });
  });

  check(S, "product.commutativity", "the cotangent product is commutative", 1e-10, 6, [&] {
    auto rng = rng_for(23);
    return over_points([&](const Point& p) {
      const auto w1 = detail::random_covector(p, rng);
      const auto w2 = detail::random_covector(p, rng);
      return max_abs(star(p, w1, w2) - star(p, w2, w1));
    });
  });

  check(S, "product.associativity", "the cotangent product is associative modulo the kernel window", 1e-8, 6, [&] {
    auto rng = rng_for(24);
    return over_points([&](const Point& p) {
      const auto w1 = detail::random_covector(p, rng);
      const auto w2 = detail::random_covector(p, rng);
      const auto w3 = detail::random_covector(p, rng);
      return detail::quotient_max(p, star(p, star(p, w1, w2), w3), star(p, w1, star(p, w2, w3)));
    });
  });

  check(S, "product.unity", "the unity covector acts as identity modulo the kernel window", 1e-8, 6, [&] {
    auto rng = rng_for(25);
    return over_points([&](const Point& p) {
      const auto w = detail::random_covector(p, rng);
      return detail::quotient_max(p, star(p, unity_covector(p), w), w);
    });
  });

  check(S, "eta_roundtrip", "raising and lowering with the metric are mutually inverse", 1e-8, 0, [&] {
    auto rng = rng_for(26);
    return over_points([&](const Point& p) {
      const auto w = detail::random_covector(p, rng);
      const auto t = to_tangent(p, detail::random_raw(p, rng));
      return std::max(detail::quotient_max(p, eta_raise(p, eta_lower(p, w)), w),
                      max_abs(eta_lower(p, eta_raise(p, t)) - t));
    });
  });

  check(S, "metric_symmetry", "the metric agrees with the pairing of the raised vector and is symmetric", 1e-10, 0, [&] {
    auto rng = rng_for(27);
    return over_points([&](const Point& p) {
      const auto t1 = to_tangent(p, detail::random_raw(p, rng));
      const auto t2 = to_tangent(p, detail::random_raw(p, rng));
      const cplx g = metric(p, t1, t2);
      return std::max(std::abs(g - metric(p, t2, t1)), std::abs(g - pairing(eta_raise(p, t1), t2))) /
             std::max(1.0, std::abs(g));
    });
  });

  check(S, "c_operator", "the C operator equals the product with the raised vector", 1e-10, 0, [&] {
    auto rng = rng_for(28);
    return over_points([&](const Point& p) {
      const auto t = to_tangent(p, detail::random_raw(p, rng));
      const auto w = detail::random_covector(p, rng);
      return detail::quotient_max(p, c_op(p, t, w), star(p, eta_raise(p, t), w));
    });
  });

  check(S, "euler_field", "Euler field from its raw form and from its closed form", 1e-10, 0, [&] {
    return over_points([&](const Point& p) { return max_abs(euler(p) - to_tangent(p, euler_raw(p))); });
  });

  if (params_.m >= 2) {
    check(S, "unity_vector", "the lowered unity covector is (1, 1)", 1e-8, 0, [&] {
      return over_points([&](const Point& p) {
        const auto e = eta_lower(p, unity_covector(p));
        return std::max(max_abs(e.xi - 1.0), max_abs(e.xihat - 1.0));
      });
    });
  }
}

// ---------------------------------------------------------------------------
// coords
// ---------------------------------------------------------------------------

inline void Verifier::run_coords() {
  const std::string S = "coords";

  check(S, "flat_pairing_table", "flat coordinate vector fields have the constant pairing table", 1e-6, 1,
        [&] { return over_points([&](const Point& p) { return gram_residual(p, 3); }); });

  check(S, "princon3", "level-zero densities are the lowered flat coordinates", 1e-7, 2,
        [&] { return over_points([&](const Point& p) { return verify_princon3(p); }); });

  const int top1 = std::min(1, cfg_.max_level - 1);
  for (const auto& u : density_labels(2)) {
    const std::string id = std::string("princon1.") + (is_log_label(u) ? "log." : "") + u.name();
    check(S, id, "covariant derivative of d theta at level p + 1 equals the product with d theta at level p", 1e-5, 3,
          [&] {
            auto rng = rng_for(31 + 97ULL * static_cast<std::uint64_t>(u.index + 50) +
                               static_cast<std::uint64_t>(u.kind) * 7919ULL);
            return over_points([&](const Point& p) {
              double e = 0.0;
              for (int dirn = 0; dirn < cfg_.directions; ++dirn) {
                const auto v = detail::random_raw(p, rng);
                for (int lv = 0; lv <= top1; ++lv) e = std::max(e, verify_princon1(p, {u, lv}, v));
              }
              return e;
            });
          });
  }

  const int top2 = std::min(2, cfg_.max_level - 1);
  for (const auto& u : density_labels(2)) {
    check(S, "princon2." + u.name(), "Lie derivative along the Euler field of each density", 1e-6, 4, [&] {
      return over_points([&](const Point& p) {
        double e = 0.0;
        for (int lv = 0; lv <= top2; ++lv) e = std::max(e, verify_princon2(p, {u, lv}));
        return e;
      });
    });
  }

  // Recover the coupling of the two logarithmic labels to t_0 and hhat_0 by a
  // least squares fit over the sample points and compare with the exact entries.
  for (const auto& u : {CoordIndex::t(-params_.s), CoordIndex::hhat(params_.n)}) {
    check(S, "princon2.coupling." + u.name(), "nilpotent coupling entries recovered from the Euler derivative", 1e-6,
          4, [&] {
            double e = 0.0;
            for (int lv = 1; lv <= top2; ++lv) {
              // Unknowns x0 (coefficient of theta_{t0,p-1}) and x1 (of theta_{hhat0,p-1}).
              cplx a00{}, a01{}, a11{}, b0{}, b1{};
              for (const auto& p : points()) {
                const DensityIndex d{u, lv};
                const double factor = lv + mu_of(params_, u).value() + 0.5 + 1.0 / params_.m;
                const cplx y = pairing(d_theta_reg(p, d), euler(p)) - factor * theta_reg(p, d);
                const cplx f0 = theta_reg(p, {CoordIndex::t(0), lv - 1});
                const cplx f1 = theta_reg(p, {CoordIndex::hhat(0), lv - 1});
                a00 += std::conj(f0) * f0;
                a01 += std::conj(f0) * f1;
                a11 += std::conj(f1) * f1;
                b0 += std::conj(f0) * y;
                b1 += std::conj(f1) * y;
              }
              const cplx det = a00 * a11 - a01 * std::conj(a01);
              const cplx x0 = (a11 * b0 - a01 * b1) / det;
              const cplx x1 = (a00 * b1 - std::conj(a01) * b0) / det;
              e = std::max(e, std::abs(x0 - r_entry(params_, CoordIndex::t(0), u).value()));
              e = std::max(e, std::abs(x1 - r_entry(params_, CoordIndex::hhat(0), u).value()));
            }
            return e;
          });
  }

  check(S, "coupling_entries", "coupling entries equal 1 - s/m, n/m + 1 and n/m - n/s", 0.0, 4, [&] {
    const auto& P = params_;
    const auto ts = CoordIndex::t(-P.s);
    const auto hn = CoordIndex::hhat(P.n);
    const auto t0 = CoordIndex::t(0);
    const auto h0 = CoordIndex::hhat(0);
    double e = 0.0;
    auto cmp = [&](Rational got, Rational want) { e = std::max(e, std::abs((got - want).value())); };
    cmp(r_entry(P, t0, ts), Rational(1) - Rational(P.s, P.m));
    cmp(r_entry(P, h0, ts), Rational(1) - Rational(P.s, P.m));
    cmp(r_entry(P, h0, hn), Rational(P.n, P.m) + Rational(1));
    cmp(r_entry(P, t0, hn), Rational(P.n, P.m) - Rational(P.n, P.s));
    return e;
  });

  check(S, "gradient", "d theta against a finite difference of theta", 1e-6, 0, [&] {
    auto rng = rng_for(33);
    const int top = std::min(2, cfg_.max_level - 1);
    double e = 0.0;
    const auto& pts = points();
    const std::size_t use = std::min<std::size_t>(pts.size(), 5);
    for (std::size_t k = 0; k < use; ++k) {
      const auto& p = pts[k];
      for (const auto& u : density_labels(2))
        for (int lv = 0; lv <= top; ++lv) {
          const DensityIndex d{u, lv};
          const auto v = detail::random_raw(p, rng);
          const auto fd = raw_derivative(p, v, [&](const Point& q) { return theta_reg(q, d); });
          e = std::max(e, std::abs(fd - pairing(d_theta_reg(p, d), to_tangent(p, v))) / std::max(1.0, std::abs(fd)));
        }
    }
    return e;
  });
}

// ---------------------------------------------------------------------------
// hierarchy
// ---------------------------------------------------------------------------

inline void Verifier::run_hierarchy() {
  const std::string S = "hierarchy";
  const int m = params_.m;
  const int n = params_.n;
  const int top = std::min(2, cfg_.max_level - 1);

  check(S, "identification", "Whitham Hamiltonians as loop integrals of the densities", 1e-7, 7, [&] {
    return over_loops([&](const LoopField& lf) {
      double e = 0.0;
      auto integral = [&](const DensityIndex& d) {
        return loop_integral(lf, [&](const Point& q) { return theta_reg(q, d); });
      };
      for (int p = 0; p <= top; ++p) {
        for (int i = 1; i < m; ++i) {
          const double c = gamma_ratio(p, i, m).value() * (1.0 + p - static_cast<double>(i) / m);
          e = std::max(e, std::abs(hamiltonian(lf, HamIndex::h(m * (p + 1) - i)) - integral({CoordIndex::h(i), p}) / c));
        }
        const cplx sum = integral({CoordIndex::t(0), p}) + integral({CoordIndex::hhat(0), p});
        e = std::max(e, std::abs(hamiltonian(lf, HamIndex::h(m * (p + 1))) - factorial(p) * sum));
        for (int i = 0; i < n; ++i) {
          const double c = gamma_ratio(p, i, n).value() * (1.0 + p - static_cast<double>(i) / n);
          e = std::max(e,
                       std::abs(hamiltonian(lf, HamIndex::hhat(n * (p + 1) - i)) - integral({CoordIndex::hhat(i), p}) / c));
        }
      }
      return e;
    });
  });

  check(S, "log_flow", "P1 d theta of hhat_n at level one is n times the logarithmic flow", 1e-6, 7, [&] {
    return over_loops([&](const LoopField& lf) {
      return detail::max_dev(flow_rhs(lf, FlowIndex::principal(CoordIndex::hhat(n), 0)), flow_rhs(lf, FlowIndex::shat0()),
                             static_cast<double>(n));
    });
  });

  check(S, "example_t", "explicit t_i flow at level one against P1 d theta", 1e-8, 7, [&] {
    return over_loops([&](const LoopField& lf) {
      double e = 0.0;
      for (int i = -2; i <= 2; ++i) {
        if (i == -params_.s) continue;
        e = std::max(e, detail::max_dev(example_t_flow(lf, i), flow_rhs(lf, FlowIndex::principal(CoordIndex::t(i), 0))));
      }
      return e;
    });
  });

  check(S, "example_t_minus_s", "explicit logarithmic t_{-s} flow at level one against P1 d theta", 1e-8, 7, [&] {
    return over_loops([&](const LoopField& lf) {
      return detail::max_dev(example_t_minus_s_flow(lf),
                             flow_rhs(lf, FlowIndex::principal(CoordIndex::t(-params_.s), 0)));
    });
  });

  auto recursion = [&](bool hatted) {
    return over_loops([&](const LoopField& lf) {
      double e = 0.0;
      const int shift = hatted ? n : m;
      for (int k = 1; k <= 2 * shift; ++k) {
        auto idx = [&](int q) { return hatted ? HamIndex::hhat(q) : HamIndex::h(q); };
        const auto lhs = p1_apply(lf, gradient_field(lf, [&](const Point& p) { return hamiltonian_gradient(p, idx(k + shift)); }));
        const auto rhs = p2_apply(lf, gradient_field(lf, [&](const Point& p) { return hamiltonian_gradient(p, idx(k)); }));
        e = std::max(e, detail::max_dev(lhs, rhs));
      }
      return e;
    });
  };
  check(S, "recursion.H", "P1 dH_{k+m} = P2 dH_k", 1e-6, 8, [&] { return recursion(false); });
  check(S, "recursion.Hhat", "P1 dHhat_{k+n} = P2 dHhat_k", 1e-6, 8, [&] { return recursion(true); });

  auto antisym = [&](bool second) {
    return over_loops([&](const LoopField& lf) {
      const auto w1 = gradient_field(lf, [&](const Point& p) { return d_theta(p, {CoordIndex::t(1), 1}); });
      const auto w2 = gradient_field(lf, [&](const Point& p) { return d_theta(p, {CoordIndex::hhat(0), 1}); });
      auto P = [&](const std::vector<Covector>& w) { return second ? p2_apply(lf, w) : p1_apply(lf, w); };
      return std::abs(loop_pairing(lf, w1, P(w2)) + loop_pairing(lf, w2, P(w1)));
    });
  };
  check(S, "antisymmetry.P1", "the first Poisson tensor is skew", 1e-8, 0, [&] { return antisym(false); });
  check(S, "antisymmetry.P2", "the second Poisson tensor is skew", 1e-8, 0, [&] { return antisym(true); });

  check(S, "whitham_gradient", "Whitham flows equal P1 applied to the Hamiltonian gradients", 1e-8, 0, [&] {
    return over_loops([&](const LoopField& lf) {
      double e = 0.0;
      for (int k = 1; k <= 3; ++k) {
        e = std::max(e, detail::max_dev(flow_rhs(lf, FlowIndex::s(k)),
                                        p1_apply(lf, gradient_field(lf, [&](const Point& p) {
                                          return hamiltonian_gradient(p, HamIndex::h(k + m));
                                        }))));
        e = std::max(e, detail::max_dev(flow_rhs(lf, FlowIndex::shat(k)),
                                        p1_apply(lf, gradient_field(lf, [&](const Point& p) {
                                          return hamiltonian_gradient(p, HamIndex::hhat(k + n));
                                        }))));
      }
      return e;
    });
  });
}

// ---------------------------------------------------------------------------
// dynamics
// ---------------------------------------------------------------------------

inline void Verifier::run_dynamics() {
  const std::string S = "dynamics";
  const int m = params_.m;

  std::vector<std::pair<FlowIndex, FlowIndex>> pairs = {{FlowIndex::s(1), FlowIndex::shat(1)}};
  if (m >= 2)
    pairs.emplace_back(FlowIndex::principal(CoordIndex::h(1), 0), FlowIndex::principal(CoordIndex::hhat(0), 0));
  else
    pairs.emplace_back(FlowIndex::principal(CoordIndex::t(1), 0), FlowIndex::principal(CoordIndex::hhat(0), 0));

  for (const auto& [f1, f2] : pairs) {
    check(S, "commutativity." + f1.name() + "," + f2.name(),
          "commutator of two flows shrinks linearly in the step (ratio 2 per halving)", 0.3, 9, [&] {
            const auto& lf = loops().front();
            double dt = 2e-2;
            double r[3];
            for (double& v : r) {
              v = check_commutativity(lf, f1, f2, dt);
              dt /= 2.0;
            }
            return std::max(std::abs(r[0] / r[1] - 2.0), std::abs(r[1] / r[2] - 2.0));
          });
  }

  std::vector<std::pair<DensityIndex, DensityIndex>> taus = {{{CoordIndex::hhat(0), 0}, {CoordIndex::t(0), 0}}};
  if (m >= 2) taus.push_back({{CoordIndex::h(1), 0}, {CoordIndex::hhat(0), 0}});
  for (const auto& [d1, d2] : taus) {
    check_scaled(S, "tau_symmetry." + d1.name() + "/" + d2.name(),
                 "tau symmetry of the densities along each other's flows", 9, [&] {
                   const auto& lf = loops().front();
                   const double norm = std::max(
                       detail::max_norm(flow_rhs(lf, FlowIndex::principal(d1.u, d1.p))),
                       detail::max_norm(flow_rhs(lf, FlowIndex::principal(d2.u, d2.p))));
                   return std::pair{check_tau_symmetry(lf, d1, d2, 1e-3), 1e-4 * (1.0 + norm)};
                 });
  }

  check(S, "conservation", "Hamiltonians conserved over 100 RK4 steps of the logarithmic flow", 1e-6, 9, [&] {
    const auto& lf = loops().front();
    std::vector<HamIndex> hs;
    for (int k = 1; k <= m + 1; ++k) hs.push_back(HamIndex::h(k));
    for (int k = 1; k <= params_.n + 1; ++k) hs.push_back(HamIndex::hhat(k));
    std::vector<cplx> h0;
    for (const auto& h : hs) h0.push_back(hamiltonian(lf, h));
    const auto fin = evolve(lf, FlowIndex::shat0(), 1e-3, 100);
    double e = 0.0;
    for (std::size_t k = 0; k < hs.size(); ++k) e = std::max(e, std::abs(hamiltonian(fin, hs[k]) - h0[k]));
    return e;
  });
}

}  // namespace frobkit

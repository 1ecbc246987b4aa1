// frobkit: command line front end.
//
//   frobkit verify  [--config PATH] [--seed N] [--out DIR] [--suite NAME]... [--tol KEY=VALUE]...
//   frobkit evolve  [--config PATH] [--seed N] [--out DIR] [--flow NAME] [--dt X] [--steps K]
//   frobkit flat    [--config PATH] [--seed N] [--out DIR] [--point FILE]
//
// Exit status: 0 when everything passes, 1 when a check or an evolution fails,
// 2 for configuration and I/O errors.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "frobkit/frobkit.hpp"

namespace fs = std::filesystem;
using namespace frobkit;

namespace {

constexpr int kExitFail = 1;
constexpr int kExitConfig = 2;

struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> m, n, s, tail_depth, n_samples, grid_size, max_level, points, directions, loops;
  std::vector<std::string> suites;
  std::vector<std::string> tols;
  std::optional<std::string> flow;
  std::optional<double> dt;
  std::optional<int> steps, snapshot_every;
  std::optional<std::string> point;
  bool no_timing = false;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_path, "JSON configuration file");
  cmd->add_option("--seed", o.seed, "random seed");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--m", o.m, "pole order of a at infinity");
  cmd->add_option("--n", o.n, "pole order of ahat at phi");
  cmd->add_option("--s", o.s, "winding of zeta");
  cmd->add_option("--tail-depth", o.tail_depth, "number of stored tail coefficients minus one");
  cmd->add_option("--samples", o.n_samples, "samples on the unit circle");
  cmd->add_option("--grid", o.grid_size, "nodes of the periodic x grid");
  cmd->add_option("--max-level", o.max_level, "highest density level");
}

RunConfig resolve(const Overrides& o) {
  RunConfig c = o.config_path.empty() ? RunConfig{} : load_config(o.config_path);
  if (o.seed) c.seed = *o.seed;
  if (o.out) c.out_dir = *o.out;
  if (o.m) c.m = *o.m;
  if (o.n) c.n = *o.n;
  if (o.s) c.s = *o.s;
  if (o.tail_depth) c.tail_depth = *o.tail_depth;
  if (o.n_samples) c.n_samples = *o.n_samples;
  if (o.grid_size) c.grid_size = *o.grid_size;
  if (o.max_level) c.max_level = *o.max_level;
  if (o.points) c.points = *o.points;
  if (o.directions) c.directions = *o.directions;
  if (o.loops) c.loops = *o.loops;
  if (!o.suites.empty()) c.suites = o.suites;
  for (const auto& t : o.tols) {
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError("--tol expects KEY=VALUE, got '" + t + "'");
    try {
      c.tolerances[t.substr(0, eq)] = std::stod(t.substr(eq + 1));
    } catch (const std::exception&) {
      throw ConfigError("--tol: bad number in '" + t + "'");
    }
  }
  if (o.flow) c.flow = *o.flow;
  if (o.dt) c.dt = *o.dt;
  if (o.steps) c.steps = *o.steps;
  if (o.snapshot_every) c.snapshot_every = *o.snapshot_every;
  if (o.point) c.point_file = *o.point;
  c.check();
  return c;
}

fs::path prepare_out(const RunConfig& c) {
  fs::path dir(c.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory '" + c.out_dir + "': " + ec.message());
  return dir;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------

int cmd_verify(const RunConfig& c, bool no_timing) {
  Verifier v(c);
  const auto rep = v.run();
  const auto dir = prepare_out(c);
  write_json(dir / "report.json", report_to_json(rep, !no_timing));
  for (const auto& r : rep.records) {
    if (!r.pass)
      std::printf("FAIL %-50s residual %.3e > %.1e %s\n", r.id.c_str(), r.residual, r.tolerance, r.note.c_str());
  }
  std::printf("%d checks, %d passed, %d failed; report written to %s\n", static_cast<int>(rep.records.size()),
              rep.passed(), rep.failed(), (dir / "report.json").string().c_str());
  return rep.ok() ? 0 : kExitFail;
}

// ---------------------------------------------------------------------------

struct Column {
  std::string name;
  std::function<cplx(const LoopField&)> value;
};

std::vector<Column> evolve_columns(const ModelParams& P) {
  std::vector<Column> cols;
  for (int k = 1; k <= 2 * P.m; ++k)
    cols.push_back({"H" + std::to_string(k), [k](const LoopField& lf) { return hamiltonian(lf, HamIndex::h(k)); }});
  for (int k = 1; k <= 2 * P.n; ++k)
    cols.push_back(
        {"Hhat" + std::to_string(k), [k](const LoopField& lf) { return hamiltonian(lf, HamIndex::hhat(k)); }});
  std::vector<CoordIndex> us;
  for (int i = -2; i <= 2; ++i) us.push_back(CoordIndex::t(i));
  for (int j = 1; j <= P.m - 1; ++j) us.push_back(CoordIndex::h(j));
  for (int k = 0; k <= P.n; ++k) us.push_back(CoordIndex::hhat(k));
  for (const auto& u : us) {
    const DensityIndex d{u, 0};
    cols.push_back({"theta[" + d.name() + "]", [d](const LoopField& lf) {
                      return loop_integral(lf, [&](const Point& p) { return theta_reg(p, d); });
                    }});
  }
  return cols;
}

json loop_snapshot(int step, double time, const LoopField& lf) {
  json nodes = json::array();
  for (const auto& p : lf.nodes()) nodes.push_back(point_to_json(p));
  return {{"step", step}, {"time", time}, {"nodes", nodes}};
}

int cmd_evolve(const RunConfig& c) {
  const auto flow = parse_flow(c.flow);
  const auto P = c.params();
  const auto dir = prepare_out(c);
  const auto lf = smooth_loop(P, c.seed, c.grid_size);
  const auto cols = evolve_columns(P);

  std::ofstream csv(dir / "evolve.csv");
  if (!csv) throw ConfigError("cannot write evolve.csv");
  csv << "step,time";
  for (const auto& col : cols) csv << ',' << col.name << ".re," << col.name << ".im";
  csv << '\n';
  csv.precision(17);

  json snapshots = json::array();
  int completed = 0;
  std::string error;
  try {
    evolve(lf, flow, c.dt, c.steps, [&](int step, double time, const LoopField& cur) {
      csv << step << ',' << time;
      for (const auto& col : cols) {
        const cplx v = col.value(cur);
        csv << ',' << v.real() << ',' << v.imag();
      }
      csv << '\n';
      csv.flush();
      if (step % c.snapshot_every == 0 || step == c.steps) snapshots.push_back(loop_snapshot(step, time, cur));
      completed = step;
    });
  } catch (const std::exception& e) {
    error = e.what();
  }
  write_json(dir / "snapshots.json", snapshots);
  json meta = {{"version", kVersion},     {"flow", flow.name()},          {"dt", c.dt},
               {"steps", c.steps},        {"completed_steps", completed}, {"status", error.empty() ? "ok" : "failed"},
               {"config", config_to_json(c)}};
  if (!error.empty()) meta["error"] = error;
  write_json(dir / "evolve.json", meta);
  if (!error.empty()) {
    std::fprintf(stderr, "evolution stopped after %d of %d steps: %s\n", completed, c.steps, error.c_str());
    return kExitFail;
  }
  std::printf("%s: %d steps of %g written to %s\n", flow.name().c_str(), c.steps, c.dt, dir.string().c_str());
  return 0;
}

// ---------------------------------------------------------------------------

int cmd_flat(const RunConfig& c) {
  const auto P = c.params();
  const auto dir = prepare_out(c);
  Point p = [&] {
    if (c.point_file.empty()) return random_point(P, c.seed);
    std::ifstream in(c.point_file);
    if (!in) throw ConfigError("cannot open point file '" + c.point_file + "'");
    json j;
    try {
      j = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ConfigError(c.point_file + ": " + e.what());
    }
    return point_from_json(j, P);
  }();

  json out = {{"version", kVersion}, {"point", point_to_json(p)}};
  const auto val = validate(p);
  out["validation"] = validation_to_json(val);
  if (!val.ok()) {
    out["error"] = "point does not satisfy the defining conditions";
    write_json(dir / "flat.json", out);
    std::fprintf(stderr, "invalid point; validation report written to %s\n", (dir / "flat.json").string().c_str());
    return kExitConfig;
  }

  const auto& params = p.params();
  const int cap = t_index_cap(params);
  json t = json::object();
  for (int i = -cap; i <= cap; ++i) t["t" + std::to_string(i)] = to_json_c(flat_t(p, i));
  json h = json::object();
  const auto hv = flat_h(p);
  for (int j = 1; j <= p.m() - 1; ++j) h["h" + std::to_string(j)] = to_json_c(hv[static_cast<std::size_t>(j - 1)]);
  json hh = json::object();
  const auto hhv = flat_hhat(p);
  for (int k = 0; k <= p.n(); ++k) hh["hhat" + std::to_string(k)] = to_json_c(hhv[static_cast<std::size_t>(k)]);
  out["t"] = t;
  out["h"] = h;
  out["hhat"] = hh;

  const auto labels = flat_labels(params, cap);
  std::vector<TangentVec> vecs;
  json names = json::array();
  for (const auto& u : labels) {
    vecs.push_back(flat_vector(p, u));
    names.push_back(u.name());
  }
  json gram = json::array();
  double worst = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < labels.size(); ++j) {
      const cplx g = metric(p, vecs[i], vecs[j]);
      worst = std::max(worst, std::abs(g - flat_eta(params, labels[i], labels[j])));
      row.push_back(to_json_c(g));
    }
    gram.push_back(row);
  }
  out["labels"] = names;
  out["gram"] = gram;
  out["gram_residual"] = worst;
  write_json(dir / "flat.json", out);
  std::printf("flat coordinates written to %s (pairing table residual %.2e)\n", (dir / "flat.json").string().c_str(),
              worst);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical Frobenius manifold of pairs of Laurent series: verification and evolution"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));
  Overrides o;

  auto* verify = app.add_subcommand("verify", "run the verification battery and write report.json");
  add_common(verify, o);
  verify->add_option("--suite", o.suites, "suites to run (repeatable)");
  verify->add_option("--tol", o.tols, "tolerance override KEY=VALUE (repeatable)");
  verify->add_option("--points", o.points, "random points per pointwise check");
  verify->add_option("--directions", o.directions, "random directions per point");
  verify->add_option("--loops", o.loops, "random loops per loop check");
  verify->add_flag("--no-timing", o.no_timing, "omit wall times from the report");

  auto* evolve_cmd = app.add_subcommand("evolve", "evolve a random smooth loop and write evolve.csv and snapshots.json");
  add_common(evolve_cmd, o);
  evolve_cmd->add_option("--flow", o.flow, "flow: S<k>, Shat<k>, Shat0 or T:<label>,<p>");
  evolve_cmd->add_option("--dt", o.dt, "time step");
  evolve_cmd->add_option("--steps", o.steps, "number of RK4 steps");
  evolve_cmd->add_option("--snapshot-every", o.snapshot_every, "steps between snapshots");

  auto* flat = app.add_subcommand("flat", "flat coordinates and pairing table of a point, written to flat.json");
  add_common(flat, o);
  flat->add_option("--point", o.point, "point JSON file (a random point is drawn when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    const auto cfg = resolve(o);
    if (verify->parsed()) return cmd_verify(cfg, o.no_timing);
    if (evolve_cmd->parsed()) return cmd_evolve(cfg);
    if (flat->parsed()) return cmd_flat(cfg);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return kExitConfig;
  } catch (const GenerationError& e) {
    std::fprintf(stderr, "generation error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitFail;
  }
  return kExitConfig;
}

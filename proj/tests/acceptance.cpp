// Acceptance run: the full verification battery for (m, n, s) = (2, 1, 1) and
// (1, 1, 1) at the default sizes, summarised as one line per criterion.

#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "frobkit/verify.hpp"

using namespace frobkit;

namespace {

const std::map<int, std::string> kCriteria = {
    {1, "flat pairing table"},
    {2, "level-zero densities equal lowered flat coordinates"},
    {3, "covariant recursion of the density differentials"},
    {4, "Euler homogeneity of the densities with the coupling matrix"},
    {5, "torsion and metric compatibility of the connection"},
    {6, "commutativity, associativity and unity of the product"},
    {7, "Whitham identification, logarithmic flow and worked examples"},
    {8, "bihamiltonian recursion"},
    {9, "flow commutativity, tau symmetry and conservation"},
    {10, "series infrastructure oracles"},
};

}  // namespace

int main() {
  std::vector<CheckRecord> all;
  for (auto [m, n, s] : {std::tuple{2, 1, 1}, std::tuple{1, 1, 1}}) {
    RunConfig cfg;
    cfg.m = m;
    cfg.n = n;
    cfg.s = s;
    const std::string tag = "(" + std::to_string(m) + "," + std::to_string(n) + "," + std::to_string(s) + ") ";
    Verifier v(cfg);
    auto rep = v.run();
    for (auto r : rep.records) {
      r.id = tag + r.id;
      all.push_back(r);
    }
  }

  bool ok = true;
  for (const auto& [k, title] : kCriteria) {
    int checks = 0;
    int failed = 0;
    double worst_ratio = 0.0;
    std::string worst_id;
    for (const auto& r : all) {
      if (r.criterion != k) continue;
      ++checks;
      if (!r.pass) {
        ++failed;
        std::printf("    failed: %s residual %.3e tolerance %.1e %s\n", r.id.c_str(), r.residual, r.tolerance,
                    r.note.c_str());
      }
      const double ratio = r.tolerance > 0.0 ? r.residual / r.tolerance : (r.residual > 0.0 ? 1e300 : 0.0);
      if (ratio >= worst_ratio) {
        worst_ratio = ratio;
        worst_id = r.id;
      }
    }
    const bool pass = checks > 0 && failed == 0;
    ok = ok && pass;
    std::printf("criterion %2d %s: %s (%d checks, worst residual/tolerance %.2e at %s)\n", k, title.c_str(),
                pass ? "PASS" : "FAIL", checks, worst_ratio, worst_id.c_str());
  }
  return ok ? 0 : 1;
}

// Acceptance suite: one PASS/FAIL line per criterion, exit status 0 iff all
// pass. Runs entirely against in-process synthetic scorers.

#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#include "properties.hpp"

using namespace colorsal;

namespace {

struct Line {
  std::string criterion;
  props::Result result;
};

props::Result all_of(const std::vector<props::Result>& parts, double time_limit) {
  props::Result r;
  r.pass = true;
  for (const auto& p : parts) {
    r.pass = r.pass && p.pass;
    r.seconds += p.seconds;
    if (!r.detail.empty()) r.detail += "; ";
    r.detail += p.name + ": " + (p.pass ? "" : "FAILED ") + p.detail;
  }
  if (r.seconds >= time_limit) {
    r.pass = false;
    r.detail += "; over the time limit of " + std::to_string(static_cast<int>(time_limit)) + " s";
  }
  return r;
}

props::Result limit(props::Result r, double time_limit) { return all_of({r}, time_limit); }

}  // namespace

int main() {
  props::Params oracle;
  oracle.num_masks = 100000;
  oracle.seed = 20240917;

  std::vector<Line> lines;
  lines.push_back({"oracle equivalence, RISE (2x2, p=0.5, N=1e5, 4 SE, < 30 s)",
                   limit(props::timed("rise", [&] { return props::oracle_rise(oracle); }), 30.0)});
  lines.push_back({"oracle equivalence, debiased and MC-RISE (K=2, 81 states, 4 SE, < 60 s)",
                   all_of({props::timed("debiased", [&] { return props::oracle_debiased(oracle); }),
                           props::timed("mcrise", [&] { return props::oracle_mcrise(oracle); })},
                          60.0)});
  lines.push_back({"ignored cells vanish in the exact debiased map (1e-12, other cell > 0.01)",
                   props::timed("ignored", [] { return props::ignored_cells_vanish(); })});
  lines.push_back({"debiased map has a near-zero background, RISE does not",
                   props::timed("background", [] { return props::debias_background(100000, 7, 1); })});
  lines.push_back({"constant scorer gives exact MC-RISE and debiased maps of 0 (1e-12)",
                   props::timed("constant", [] { return props::constant_nullity(); })});
  {
    std::vector<props::Result> seeds;
    for (std::uint64_t seed : {1, 2, 3}) {
      seeds.push_back(props::timed("seed " + std::to_string(seed),
                                   [seed] { return props::ca_deletion_direction(4000, seed, 1); }));
    }
    lines.push_back({"CA-deletion with MC-RISE beats RISE deletion beats random (margin 0.05, 3 seeds, < 5 min)",
                     all_of(seeds, 300.0)});
  }
  lines.push_back({"partition of unity over 1000 interpolated, shifted color masks (1e-9)",
                   props::timed("unity", [] { return props::partition_of_unity(1000, 99); })});
  lines.push_back({"explain is byte-identical with 1 worker and within 1e-6 with 8 workers",
                   all_of({props::timed("rise", [] { return props::explain_determinism("rise", 2000, 5); }),
                           props::timed("debias", [] { return props::explain_determinism("debias", 2000, 5); }),
                           props::timed("mcrise", [] { return props::explain_determinism("mcrise", 2000, 5); })},
                          1e9)});
  lines.push_back({"estimators are linear in the scorer (1e-9, all three)",
                   props::timed("linearity", [] { return props::linearity(2000, 13, 1); })});

  std::size_t passed = 0;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto& l = lines[i];
    passed += l.result.pass ? 1 : 0;
    std::printf("%s [%zu] %s: %s (%.2f s)\n", l.result.pass ? "PASS" : "FAIL", i + 1, l.criterion.c_str(),
                l.result.detail.c_str(), l.result.seconds);
  }
  std::printf("%zu/%zu acceptance criteria passed\n", passed, lines.size());
  return passed == lines.size() ? 0 : 1;
}

// Acceptance run: one full `all` suite (workers 8) judged criterion by
// criterion, then two more runs (workers 8 and 1) for byte-for-byte determinism.
// Tolerances below are pinned here and compared against the run settings.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "w2lab/runner.hpp"

using namespace w2lab;
namespace fs = std::filesystem;

namespace {

struct Criterion {
  std::string id;
  std::string title;
  std::vector<std::string> checkers;
  double budget_seconds;
  std::function<std::string(const RunSettings&, const std::map<std::string, const CheckerOutput*>&, bool&)> judge;
};

int failures = 0;

void report(const std::string& id, bool pass, const std::string& title, const std::string& detail) {
  std::printf("%s %s %s: %s\n", id.c_str(), pass ? "PASS" : "FAIL", title.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(double x) {
  char b[32];
  std::snprintf(b, sizeof b, "%.4g", x);
  return b;
}

bool all_pass(const CheckerOutput& c) {
  for (const Verdict& v : c.verdicts)
    if (!v.passed()) return false;
  return !c.verdicts.empty();
}

std::size_t count_pass(const CheckerOutput& c) {
  std::size_t k = 0;
  for (const Verdict& v : c.verdicts) k += v.passed();
  return k;
}

double worst_margin(const CheckerOutput& c) {
  double m = INFINITY;
  for (const Verdict& v : c.verdicts) m = std::min(m, v.margin);
  return m;
}

std::string first_failure(const CheckerOutput& c) {
  for (const Verdict& v : c.verdicts)
    if (!v.passed()) return v.name + " (" + to_string(v.status) + ", lhs " + fmt(v.lhs) + ", rhs " + fmt(v.rhs) + ")";
  return "";
}

bool same_tree(const fs::path& a, const fs::path& b, std::string& why) {
  std::map<std::string, std::string> fa, fb;
  auto load = [](const fs::path& root, std::map<std::string, std::string>& out) {
    for (const auto& e : fs::recursive_directory_iterator(root)) {
      if (!e.is_regular_file()) continue;
      std::ifstream in(e.path(), std::ios::binary);
      std::ostringstream s;
      s << in.rdbuf();
      out[fs::relative(e.path(), root).string()] = s.str();
    }
  };
  load(a, fa);
  load(b, fb);
  if (fa.size() != fb.size()) {
    why = "file counts differ (" + std::to_string(fa.size()) + " vs " + std::to_string(fb.size()) + ")";
    return false;
  }
  for (const auto& [name, content] : fa) {
    auto it = fb.find(name);
    if (it == fb.end()) {
      why = name + " missing in second run";
      return false;
    }
    if (it->second != content) {
      why = name + " differs";
      return false;
    }
  }
  why = std::to_string(fa.size()) + " files identical";
  return true;
}

bool pinned(const RunSettings& s, std::string& why) {
  const RunSettings d;
  struct P {
    const char* name;
    double got, want;
  };
  const std::vector<P> pins = {
      {"tol.closed_form", s.tol_closed_form, 1e-8}, {"tol.ot", s.tol_ot, 1e-9},
      {"tol.identity", s.tol_identity, 1e-6},         {"tol.exact", s.tol_exact, 1e-12},
      {"tol.talagrand_equality", s.tol_talagrand_equality, 1e-6},
      {"se_slack", s.se_slack, 5.0},                  {"slope_min", s.slope_min, -0.65},
      {"slope_max", s.slope_max, -0.35},              {"increment_margin", s.increment_margin, 0.5},
      {"lower_band_lo", s.lower_band_lo, 0.24},       {"lower_band_hi", s.lower_band_hi, 0.26},
      {"plateau_fraction", s.plateau_fraction, 0.95}, {"n_min", double(s.n_min), 16},
      {"n_max", double(s.n_max), 4096},               {"replicas", double(s.replicas), 10},
      {"m", double(s.m), 1e5},                        {"rate2d_m", double(s.rate2d_m), 3000},
      {"lower_proxy_m", double(s.lower_proxy_m), 1e6},
  };
  for (const P& p : pins) {
    if (p.got != p.want) {
      why = std::string(p.name) + " = " + fmt(p.got) + ", pinned " + fmt(p.want);
      return false;
    }
  }
  if (s.estimator != "quantile-1d" || s.rate2d_estimator != "exact" || s.sampler.kind != "rademacher_product" || s.sampler.dim != 1 ||
      s.rate2d_sampler.kind != "scaled_basis" || s.rate2d_sampler.dim != 2) {
    why = "sampler/estimator defaults changed";
    return false;
  }
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path root = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "w2lab-acceptance";
  fs::create_directories(root);
  const RunSettings settings;
  std::string why;
  if (!pinned(settings, why)) {
    report("ACC0", false, "pinned tolerances", why);
    return 1;
  }

  RunOptions opts;
  opts.subcommand = "all";
  opts.seed = 20240607;
  opts.workers = 8;
  opts.out = root / "run-a";
  std::ostringstream sink;
  const RunSummary first = execute(settings, opts, sink);
  write_artifacts(first, settings, opts);
  std::map<std::string, const CheckerOutput*> by_id;
  for (const CheckerOutput& c : first.outputs) by_id[c.id] = &c;

  const std::vector<Criterion> criteria = {
      {"ACC1", "closed form vs Gauss-Hermite quadrature", {"gaussian-closed-form"}, 10,
       [](const RunSettings& s, const auto& m, bool& ok) {
         const Verdict& v = m.at("gaussian-closed-form")->verdicts.at(0);
         ok = v.passed() && s.tol_closed_form == 1e-8;
         return "max relative error " + fmt(v.lhs) + " <= 1e-8 over 50 instances, k <= 3";
       }},
      {"ACC2", "OT solver vs permutation search and quantile coupling", {"ot-brute-force"}, 30,
       [](const RunSettings&, const auto& m, bool& ok) {
         const CheckerOutput& c = *m.at("ot-brute-force");
         ok = all_pass(c) && c.verdicts.size() == 2;
         return "200 instances max |diff| " + fmt(c.verdicts.at(0).lhs) + ", 100 1-d instances max |diff| " + fmt(c.verdicts.at(1).lhs) +
                " (tol 1e-9)";
       }},
      {"ACC3", "chi-square identity, quadrature vs enumeration", {"chi2-identity"}, 120,
       [](const RunSettings&, const auto& m, bool& ok) {
         const CheckerOutput& c = *m.at("chi2-identity");
         std::map<std::string, bool> samplers;
         double worst = 0.0;
         bool above = true;
         for (const Verdict& v : c.verdicts) {
           samplers[v.inputs["sampler"].get<std::string>()] = true;
           worst = std::max(worst, std::abs(v.lhs - v.rhs));
           above = above && v.inputs["n"].get<double>() >= v.inputs["threshold"].get<double>() - 1e-9;
         }
         ok = all_pass(c) && samplers.size() >= 5 && above;
         return std::to_string(samplers.size()) + " samplers, all n >= 5 beta^2 / sigma_min^2, max |LHS - RHS| " + fmt(worst) + " <= 1e-6";
       }},
      {"ACC4", "Q-moment suite", {"q-mean-identity", "q-pointwise", "q-moment-bounds"}, 120,
       [](const RunSettings&, const auto& m, bool& ok) {
         const CheckerOutput& mean = *m.at("q-mean-identity");
         double worst_exact = 0.0;
         for (const Verdict& v : mean.verdicts)
           if (v.inputs["mode"] == "enumeration") worst_exact = std::max(worst_exact, std::abs(v.lhs - v.rhs));
         ok = all_pass(mean) && all_pass(*m.at("q-pointwise")) && all_pass(*m.at("q-moment-bounds")) && worst_exact <= 1e-12;
         return "exact |E Q_i - formula| max " + fmt(worst_exact) + " <= 1e-12; " + std::to_string(m.at("q-moment-bounds")->verdicts.size()) +
                " moment bounds and " + std::to_string(m.at("q-pointwise")->verdicts.size()) + " pointwise suites pass";
       }},
      {"ACC5", "conditional-L2 and remainder suites", {"conditional-l2", "taylor-remainder"}, 60,
       [](const RunSettings&, const auto& m, bool& ok) {
         const Verdict& a = m.at("conditional-l2")->verdicts.at(0);
         const Verdict& b = m.at("taylor-remainder")->verdicts.at(0);
         ok = a.passed() && b.passed() && a.lhs == 0.0 && b.lhs == 0.0;
         return fmt(a.lhs) + " violations in 1e4 tables, " + fmt(b.lhs) + " violations in 1e6 pairs";
       }},
      {"ACC6", "transport-entropy chain", {"talagrand-equality", "talagrand-chain"}, 300,
       [](const RunSettings&, const auto& m, bool& ok) {
         const CheckerOutput& e = *m.at("talagrand-equality");
         const CheckerOutput& c = *m.at("talagrand-chain");
         double worst_eq = 0.0;
         for (const Verdict& v : e.verdicts) worst_eq = std::max(worst_eq, std::abs(v.lhs - v.rhs));
         double min_margin = INFINITY;
         std::size_t margins = 0;
         for (const Verdict& v : c.verdicts) {
           if (v.name.rfind("conditional", 0) == 0) continue;
           min_margin = std::min(min_margin, v.margin);
           ++margins;
         }
         ok = all_pass(e) && all_pass(c) && e.verdicts.size() == 6 && margins == 6 && min_margin > 0.0;
         return "shift equality max |diff| " + fmt(worst_eq) + " <= 1e-6; 3 d=2 models, smallest chain margin " + fmt(min_margin);
       }},
      {"ACC7", "increment bound with 50% margin", {"increment"}, 120,
       [](const RunSettings&, const auto& m, bool& ok) {
         const CheckerOutput& c = *m.at("increment");
         double least = INFINITY;
         for (const Verdict& v : c.verdicts) least = std::min(least, v.details["margin_fraction"].get<double>());
         ok = all_pass(c) && c.verdicts.size() == 3 && least >= 0.5;
         return "n in {20, 40, 80}, m = 1e6, smallest margin fraction " + fmt(least);
       }},
      {"ACC8", "CLT rate in W2", {"rate-main", "rate-2d"}, 900,
       [](const RunSettings&, const auto& m, bool& ok) {
         const CheckerOutput& a = *m.at("rate-main");
         const CheckerOutput& b = *m.at("rate-2d");
         double slope = NAN;
         for (const Verdict& v : a.verdicts)
           if (v.name == "log-log slope <= slope_max") slope = v.lhs;
         ok = all_pass(a) && all_pass(b);
         return "d=1 all 9 points below bound, slope " + fmt(slope) + " in [-0.65, -0.35]; d=2 exact OT m=3000 " +
                std::to_string(count_pass(b)) + "/" + std::to_string(b.verdicts.size()) + " pass";
       }},
      {"ACC9", "lattice lower bound", {"lower-1d", "lower-2d"}, 600,
       [](const RunSettings&, const auto& m, bool& ok) {
         const CheckerOutput& a = *m.at("lower-1d");
         const CheckerOutput& b = *m.at("lower-2d");
         double proxy = NAN, emp = NAN;
         for (const Verdict& v : a.verdicts) {
           if (v.name == "sqrt(n) E d_L(Z) <= band high") proxy = v.lhs;
           if (v.name.rfind("sqrt(n) W2-hat", 0) == 0) emp = v.rhs;
         }
         ok = all_pass(a) && all_pass(b) && !std::isnan(emp);
         return "d=1 proxy " + fmt(proxy) + " in [0.24, 0.26], empirical " + fmt(emp) + " >= 0.24; d=2 plateau " + fmt(b.verdicts.at(0).rhs) +
                " >= " + fmt(b.verdicts.at(0).lhs);
       }},
      {"ACC10", "convex-set conversion", {"ci-calibration", "ci-halfspace"}, 300,
       [](const RunSettings&, const auto& m, bool& ok) {
         const CheckerOutput& a = *m.at("ci-calibration");
         const CheckerOutput& b = *m.at("ci-halfspace");
         ok = all_pass(a) && all_pass(b) && b.verdicts.size() == 18;
         return "calibration " + fmt(a.verdicts.at(0).lhs) + " vs bound " + fmt(a.verdicts.at(1).lhs) + "; " + std::to_string(count_pass(b)) +
                "/18 grid points within bound + 5 SE (smallest margin " + fmt(worst_margin(b)) + ")";
       }},
  };

  for (const Criterion& c : criteria) {
    double seconds = 0.0;
    for (const std::string& id : c.checkers) seconds += by_id.at(id)->seconds;
    // the halfspace criterion reuses the rate clouds, so charge their time too
    if (c.id == "ACC10") seconds += by_id.at("rate-main")->seconds + by_id.at("rate-2d")->seconds;
    bool ok = false;
    std::string detail = c.judge(settings, by_id, ok);
    const bool in_time = seconds <= c.budget_seconds;
    detail += "; " + fmt(seconds) + " s (budget " + fmt(c.budget_seconds) + " s)";
    report(c.id, ok && in_time, c.title, detail);
  }

  // ACC11: two more executions, workers 8 and 1
  opts.out = root / "run-b";
  write_artifacts(execute(settings, opts, sink), settings, opts);
  opts.workers = 1;
  opts.out = root / "run-c";
  write_artifacts(execute(settings, opts, sink), settings, opts);
  std::string why_b, why_c;
  const bool same_b = same_tree(root / "run-a", root / "run-b", why_b);
  const bool same_c = same_tree(root / "run-a", root / "run-c", why_c);
  report("ACC11", same_b && same_c, "determinism across executions and worker counts",
         "repeat (8 workers): " + why_b + "; 1 worker vs 8: " + why_c);

  std::printf("%s: %d criterion(s) failed\n", failures == 0 ? "ACCEPTANCE PASS" : "ACCEPTANCE FAIL", failures);
  return failures == 0 ? 0 : 1;
}

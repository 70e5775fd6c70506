#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "w2lab/runner.hpp"

using namespace w2lab;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("w2lab-test-" + name);
  fs::remove_all(p);
  return p;
}

const char* kSmallConfig = R"(# small grid for tests
[sampler]
kind = rademacher_product
dim = 1
scale = 1

[grid]
n_min = 16
n_max = 64
replicas = 3
m = 2000

[estimator]
name = quantile-1d

[rate2d]
m = 200
)";

}  // namespace

TEST_CASE("config parsing") {
  const RunSettings s = parse_config(kSmallConfig);
  CHECK(s.n_max == 64);
  CHECK(s.m == 2000);
  CHECK(s.rate2d_m == 200);
  CHECK(s.rate2d_sampler.kind == "scaled_basis");
  CHECK(s.hash() != RunSettings{}.hash());
  CHECK(s.hash() == parse_config(kSmallConfig).hash());
  CHECK(RunSettings{}.hash().size() == 16);
}

TEST_CASE("config errors carry line and key") {
  auto message = [](const std::string& text) -> std::string {
    try {
      parse_config(text, "cfg");
    } catch (const ConfigError& e) {
      return e.what();
    }
    return "";
  };
  CHECK(message("[grid]\nm = 10\n").find("missing required [sampler]") != std::string::npos);
  CHECK(message("[sampler]\ndim = 1\n[grid]\nfoo = 3\n").find("cfg:4: unknown key 'foo'") != std::string::npos);
  CHECK(message("[sampler]\ndim = two\n").find("cfg:2: key 'dim'") != std::string::npos);
  CHECK(message("[sampler]\ndim = 1.5\n").find("non-negative integer") != std::string::npos);
  CHECK(message("[sampler]\njunk\n").find("cfg:2: expected 'key = value'") != std::string::npos);
  CHECK(message("[nope]\n").find("unknown block [nope]") != std::string::npos);
  CHECK(message("x = 1\n").find("before any block") != std::string::npos);
  CHECK(message("[sampler]\ndim = 1\ndim = 1\n").find("set twice") != std::string::npos);
  // estimator / dimension mismatch is a configuration error
  CHECK(message("[sampler]\nkind = scaled_basis\ndim = 2\nscale = 1.4\n").find("quantile-1d needs d = 1") != std::string::npos);
  CHECK(message("[sampler]\n[rate2d]\nm = 6000\n").find("exact estimator supports m <= 5000") != std::string::npos);
}

TEST_CASE("registry") {
  const auto& reg = checker_registry();
  CHECK(reg.size() >= 12);
  std::set<std::string> ids, anchors;
  for (const CheckerInfo& c : reg) {
    CHECK_FALSE(c.anchor.empty());
    ids.insert(c.id);
    anchors.insert(c.anchor);
  }
  CHECK(ids.size() == reg.size());
  CHECK(anchors.size() == reg.size());
  CHECK(list_checks().find("increment\tcheck\t") != std::string::npos);
  CHECK(select_checkers("all", {}).size() == reg.size());
  CHECK(select_checkers("rate", {}) == std::vector<std::string>{"rate-main", "rate-2d"});
  CHECK_THROWS_AS(select_checkers("rate", {"increment"}), ConfigError);
  CHECK_THROWS_AS(select_checkers("bogus", {}), ConfigError);
  CHECK_THROWS_AS(select_checkers("all", {"no-such"}), ConfigError);
}

TEST_CASE("check twice gives identical verdicts") {
  RunOptions o;
  o.subcommand = "check";
  o.seed = 7;
  o.only = {"ot-brute-force", "conditional-l2", "q-mean-identity", "increment"};
  std::ostringstream out, err;
  o.out = scratch("det-a");
  CHECK(run(o, out, err) == 0);
  o.out = scratch("det-b");
  CHECK(run(o, out, err) == 0);
  const std::string a = slurp(scratch("x").parent_path() / "w2lab-test-det-a" / "verdicts.json");
  const std::string b = slurp(o.out / "verdicts.json");
  CHECK(!a.empty());
  CHECK(a == b);
  const auto j = nlohmann::json::parse(a);
  CHECK(j["seed"] == 7);
  CHECK(j["summary"]["fail"] == 0);
  CHECK(j["checkers"].size() == 4);
  CHECK_FALSE(fs::exists(fs::path(o.out.string() + ".partial")));
}

TEST_CASE("rate CSV schema") {
  const fs::path cfg = scratch("cfg.ini");
  std::ofstream(cfg) << kSmallConfig;
  RunOptions o;
  o.subcommand = "rate";
  o.config = cfg;
  o.only = {"rate-main"};
  o.out = scratch("rate");
  std::ostringstream out, err;
  run(o, out, err);
  const std::string csv = slurp(o.out / "tables" / "rate.csv");
  std::istringstream lines(csv);
  std::string stamp, header;
  std::getline(lines, stamp);
  std::getline(lines, header);
  CHECK(stamp.rfind("# config_hash=" + parse_config(kSmallConfig).hash() + " seed=", 0) == 0);
  CHECK(header.rfind("n,w2_hat,ci_lo,ci_hi,bound", 0) == 0);
  int rows = 0;
  for (std::string l; std::getline(lines, l);) ++rows;
  CHECK(rows == 3);
  const std::string dat = slurp(o.out / "plotdata" / "rate_w2.dat");
  CHECK(dat.rfind("# config_hash=", 0) == 0);
  CHECK(fs::exists(o.out / "config.ini"));
}

TEST_CASE("usage errors exit 2") {
  const fs::path cfg = scratch("bad.ini");
  std::ofstream(cfg) << "[grid]\nm = 10\n";
  RunOptions o;
  o.config = cfg;
  o.out = scratch("bad-out");
  std::ostringstream out, err;
  CHECK(run(o, out, err) == 2);
  CHECK(err.str().find("missing required [sampler]") != std::string::npos);
  CHECK_FALSE(fs::exists(o.out));
  o.config.reset();
  o.only = {"unknown"};
  CHECK(run(o, out, err) == 2);
  o.only.clear();
  o.config = scratch("absent.ini");
  CHECK(run(o, out, err) == 2);
}

#include "w2lab/runner.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

#include "w2lab/density_ratio.hpp"
#include "w2lab/increment.hpp"
#include "w2lab/inequalities.hpp"
#include "w2lab/q_stats.hpp"
#include "w2lab/quadrature.hpp"
#include "w2lab/talagrand.hpp"

namespace w2lab {

namespace fs = std::filesystem;

BoundedSampler SamplerSettings::build() const {
  switch (sampler_kind_from_string(kind)) {
    case SamplerKind::rademacher_product: return BoundedSampler::rademacher_product(dim, scale);
    case SamplerKind::scaled_basis: return BoundedSampler::scaled_basis(dim, scale);
    case SamplerKind::sphere_uniform: return BoundedSampler::sphere_uniform(dim, scale);
    case SamplerKind::lattice_custom: break;
  }
  throw InvalidArgument("sampler kind '" + kind + "' cannot be built from a config (use rademacher_product, scaled_basis or sphere_uniform)");
}

namespace {

std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

std::string num(std::uint64_t x) { return std::to_string(x); }

// ---------------------------------------------------------------- config

enum class ValueKind { real, count, text };

struct Key {
  std::string section;
  std::string name;
  ValueKind kind;
  std::function<void(RunSettings&, double, const std::string&)> set;
  std::function<std::string(const RunSettings&)> get;
};

template <class T>
Key count_key(std::string section, std::string name, T RunSettings::*field) {
  return {section, name, ValueKind::count,
          [field](RunSettings& s, double v, const std::string&) { s.*field = static_cast<T>(v); },
          [field](const RunSettings& s) { return num(static_cast<std::uint64_t>(s.*field)); }};
}

Key real_key(std::string section, std::string name, double RunSettings::*field) {
  return {section, name, ValueKind::real, [field](RunSettings& s, double v, const std::string&) { s.*field = v; },
          [field](const RunSettings& s) { return num(s.*field); }};
}

Key text_key(std::string section, std::string name, std::string RunSettings::*field) {
  return {section, name, ValueKind::text, [field](RunSettings& s, double, const std::string& t) { s.*field = t; },
          [field](const RunSettings& s) { return s.*field; }};
}

Key sampler_key(std::string section, std::string name, SamplerSettings RunSettings::*block, ValueKind kind) {
  return {section, name, kind,
          [block, name](RunSettings& s, double v, const std::string& t) {
            SamplerSettings& b = s.*block;
            if (name == "kind") b.kind = t;
            else if (name == "dim") b.dim = static_cast<std::size_t>(v);
            else b.scale = v;
          },
          [block, name](const RunSettings& s) {
            const SamplerSettings& b = s.*block;
            if (name == "kind") return b.kind;
            if (name == "dim") return num(static_cast<std::uint64_t>(b.dim));
            return num(b.scale);
          }};
}

const std::vector<Key>& config_keys() {
  static const std::vector<Key> keys = {
      sampler_key("sampler", "kind", &RunSettings::sampler, ValueKind::text),
      sampler_key("sampler", "dim", &RunSettings::sampler, ValueKind::count),
      sampler_key("sampler", "scale", &RunSettings::sampler, ValueKind::real),
      count_key("grid", "n_min", &RunSettings::n_min),
      count_key("grid", "n_max", &RunSettings::n_max),
      count_key("grid", "replicas", &RunSettings::replicas),
      count_key("grid", "m", &RunSettings::m),
      text_key("estimator", "name", &RunSettings::estimator),
      count_key("estimator", "halfspace_directions", &RunSettings::halfspace_directions),
      count_key("estimator", "projection_directions", &RunSettings::projection_directions),
      real_key("estimator", "sinkhorn_epsilon_fraction", &RunSettings::sinkhorn_epsilon_fraction),
      sampler_key("rate2d", "kind", &RunSettings::rate2d_sampler, ValueKind::text),
      sampler_key("rate2d", "dim", &RunSettings::rate2d_sampler, ValueKind::count),
      sampler_key("rate2d", "scale", &RunSettings::rate2d_sampler, ValueKind::real),
      text_key("rate2d", "estimator", &RunSettings::rate2d_estimator),
      count_key("rate2d", "m", &RunSettings::rate2d_m),
      count_key("rate2d", "replicas", &RunSettings::rate2d_replicas),
      count_key("lower", "proxy_m", &RunSettings::lower_proxy_m),
      count_key("lower", "m", &RunSettings::lower_m),
      count_key("lower", "replicas", &RunSettings::lower_replicas),
      count_key("lower", "empirical_n", &RunSettings::lower_empirical_n),
      real_key("tolerance", "exact", &RunSettings::tol_exact),
      real_key("tolerance", "identity", &RunSettings::tol_identity),
      real_key("tolerance", "closed_form", &RunSettings::tol_closed_form),
      real_key("tolerance", "ot", &RunSettings::tol_ot),
      real_key("tolerance", "talagrand_equality", &RunSettings::tol_talagrand_equality),
      real_key("tolerance", "se_slack", &RunSettings::se_slack),
      real_key("tolerance", "slope_min", &RunSettings::slope_min),
      real_key("tolerance", "slope_max", &RunSettings::slope_max),
      real_key("tolerance", "increment_margin", &RunSettings::increment_margin),
      real_key("tolerance", "lower_band_lo", &RunSettings::lower_band_lo),
      real_key("tolerance", "lower_band_hi", &RunSettings::lower_band_hi),
      real_key("tolerance", "plateau_fraction", &RunSettings::plateau_fraction),
  };
  return keys;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::optional<double> parse_real(const std::string& t) {
  double v = 0.0;
  const char* first = t.data();
  const char* last = t.data() + t.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v)) return std::nullopt;
  return v;
}

}  // namespace

std::string RunSettings::canonical() const {
  std::ostringstream out;
  for (const Key& k : config_keys()) out << k.section << "." << k.name << "=" << k.get(*this) << "\n";
  return out.str();
}

std::string RunSettings::hash() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(canonical())));
  return buf;
}

void validate_settings(const RunSettings& s) {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  BoundedSampler main_sampler = [&] {
    try {
      return s.sampler.build();
    } catch (const Error& e) {
      throw ConfigError(std::string("[sampler]: ") + e.what());
    }
  }();
  BoundedSampler secondary = [&] {
    try {
      return s.rate2d_sampler.build();
    } catch (const Error& e) {
      throw ConfigError(std::string("[rate2d]: ") + e.what());
    }
  }();
  auto check_estimator = [&](const std::string& block, const std::string& name, std::size_t d, std::size_t m) {
    Estimator e;
    try {
      e = estimator_from_string(name);
      require_estimator_supports(e, d);
    } catch (const Error& err) {
      throw ConfigError("[" + block + "]: " + err.what());
    }
    if (e == Estimator::exact && m > kDefaultSolverCap) {
      fail("[" + block + "]: exact estimator supports m <= " + std::to_string(kDefaultSolverCap) + " (got m = " + std::to_string(m) + ")");
    }
  };
  check_estimator("estimator", s.estimator, main_sampler.dim(), s.m);
  check_estimator("rate2d", s.rate2d_estimator, secondary.dim(), s.rate2d_m);
  if (s.n_min < 1 || s.n_max < s.n_min) fail("[grid]: need 1 <= n_min <= n_max");
  if (powers_of_two(s.n_min, s.n_max).size() < 2) fail("[grid]: the n range must contain at least two powers of two");
  if (s.replicas < 3 || s.rate2d_replicas < 3) fail("replicas must be at least 3");
  if (s.m < 2 || s.rate2d_m < 2) fail("m must be at least 2");
  if (s.halfspace_directions < 1) fail("[estimator]: halfspace_directions must be at least 1");
  if (!(s.sinkhorn_epsilon_fraction > 0.0)) fail("[estimator]: sinkhorn_epsilon_fraction must be positive");
  if (s.lower_proxy_m < 100000) fail("[lower]: proxy_m must be at least 100000");
  if (s.lower_replicas < 1 || s.lower_m < 2) fail("[lower]: replicas >= 1 and m >= 2 required");
  if (s.lower_empirical_n != 0) {
    const auto grid = powers_of_two(s.n_min, s.n_max);
    if (std::find(grid.begin(), grid.end(), s.lower_empirical_n) == grid.end()) {
      fail("[lower]: empirical_n must be 0 or a grid point (a power of two in [n_min, n_max])");
    }
  }
  if (s.slope_min > s.slope_max) fail("[tolerance]: slope_min > slope_max");
  if (s.lower_band_lo > s.lower_band_hi) fail("[tolerance]: lower_band_lo > lower_band_hi");
}

RunSettings parse_config(const std::string& text, const std::string& source) {
  RunSettings s;
  std::istringstream in(text);
  std::string line, section;
  std::set<std::string> seen_sections, seen_keys;
  std::size_t lineno = 0;
  auto error = [&](const std::string& msg) { throw ConfigError(source + ":" + std::to_string(lineno) + ": " + msg); };
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') error("malformed block header '" + line + "'");
      section = trim(line.substr(1, line.size() - 2));
      const bool known = std::any_of(config_keys().begin(), config_keys().end(), [&](const Key& k) { return k.section == section; });
      if (!known) error("unknown block [" + section + "]");
      if (!seen_sections.insert(section).second) error("block [" + section + "] appears twice");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) error("expected 'key = value', got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (section.empty()) error("key '" + key + "' appears before any block header");
    if (key.empty()) error("empty key");
    auto it = std::find_if(config_keys().begin(), config_keys().end(),
                           [&](const Key& k) { return k.section == section && k.name == key; });
    if (it == config_keys().end()) error("unknown key '" + key + "' in [" + section + "]");
    if (!seen_keys.insert(section + "." + key).second) error("key '" + key + "' set twice in [" + section + "]");
    if (value.empty()) error("key '" + key + "': missing value");
    if (it->kind == ValueKind::text) {
      it->set(s, 0.0, value);
      continue;
    }
    const auto v = parse_real(value);
    if (!v) error("key '" + key + "': expected a number, got '" + value + "'");
    if (it->kind == ValueKind::count && (*v < 0.0 || std::floor(*v) != *v || *v > 9.0e15)) {
      error("key '" + key + "': expected a non-negative integer, got '" + value + "'");
    }
    it->set(s, *v, value);
  }
  if (!seen_sections.count("sampler")) throw ConfigError(source + ": missing required [sampler] block");
  validate_settings(s);
  return s;
}

RunSettings load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string());
}

// ---------------------------------------------------------------- registry

const std::vector<CheckerInfo>& checker_registry() {
  static const std::vector<CheckerInfo> reg = {
      {"gaussian-closed-form", "closed-form Gaussian exponential-quadratic moment", "check"},
      {"ot-brute-force", "exact assignment optimality against permutation search", "check"},
      {"chi2-identity", "second moment of the density ratio via the Q exponent", "check"},
      {"q-mean-identity", "exact mean of the per-coordinate Q statistics", "check"},
      {"q-pointwise", "pointwise bounds on |Q_i|, |Q| and |Q - Q_i|", "check"},
      {"q-moment-bounds", "second-order moment bounds for the Q statistics", "check"},
      {"conditional-l2", "conditional L2 contraction for independent coordinates", "check"},
      {"taylor-remainder", "difference bound for the cubic Taylor remainder of exp", "check"},
      {"talagrand-equality", "equality case of the transport-entropy inequality for a Gaussian shift", "check"},
      {"talagrand-chain", "W2 <= entropy <= chi-square telescope in two dimensions", "check"},
      {"increment", "W2 increment from adding one bounded summand", "check"},
      {"ank-schedule", "recursive dimension-by-dimension W2 bound schedule", "check"},
      {"rate-main", "order sqrt(d) beta log(n) / sqrt(n) CLT rate in W2", "rate"},
      {"rate-2d", "CLT rate in W2 for a two-dimensional lattice summand with exact OT", "rate"},
      {"lower-1d", "lattice quantization floor in one dimension", "lower"},
      {"lower-2d", "lattice quantization floor in two dimensions", "lower"},
      {"ci-calibration", "convex-set distance bound on a Gaussian shift", "ci"},
      {"ci-halfspace", "halfspace discrepancy below 5 d^(1/6) W2^(2/3)", "ci"},
  };
  return reg;
}

std::string list_checks() {
  std::ostringstream out;
  for (const CheckerInfo& c : checker_registry()) out << c.id << "\t" << c.suite << "\t" << c.anchor << "\n";
  return out.str();
}

std::vector<std::string> select_checkers(const std::string& subcommand, const std::vector<std::string>& only) {
  static const std::set<std::string> subcommands = {"check", "rate", "lower", "ci", "all"};
  if (!subcommands.count(subcommand)) throw ConfigError("unknown subcommand '" + subcommand + "'");
  for (const std::string& id : only) {
    const bool known = std::any_of(checker_registry().begin(), checker_registry().end(), [&](const CheckerInfo& c) { return c.id == id; });
    if (!known) throw ConfigError("--only: unknown checker '" + id + "' (see `w2lab list`)");
  }
  std::vector<std::string> out;
  for (const CheckerInfo& c : checker_registry()) {
    if (subcommand != "all" && c.suite != subcommand) continue;
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    out.push_back(c.id);
  }
  if (out.empty()) throw ConfigError("no checker selected: --only ids do not belong to the '" + subcommand + "' suite");
  return out;
}

// ---------------------------------------------------------------- checkers

namespace {

struct QCase {
  std::string label;
  BoundedSampler sampler;
  std::uint64_t n;
  bool exact;
};

struct QResult {
  std::string label;
  std::uint64_t n;
  QMomentReport report;
};

BoundedSampler three_point_lattice() {
  PointCloud pts(1, std::vector<double>{-2.0, 0.0, 2.0});
  return BoundedSampler::lattice_custom(pts, {0.125, 0.75, 0.125});
}

// Sigma = diag(4, 1), beta = 2 sqrt(2).
BoundedSampler anisotropic_cross() {
  const double a = 2.0 * std::sqrt(2.0), b = std::sqrt(2.0);
  PointCloud pts(2, std::vector<double>{a, 0.0, -a, 0.0, 0.0, b, 0.0, -b});
  return BoundedSampler::lattice_custom(pts, {0.25, 0.25, 0.25, 0.25});
}

struct Context {
  const RunSettings& settings;
  const RunOptions& options;
  std::ostream& log;
  std::optional<RateReport> rate_main;
  std::optional<RateReport> rate_2d;
  std::optional<std::vector<QResult>> q_results;

  std::uint64_t seed_for(const std::string& id) const { return derive_seed(options.seed, id); }

  std::uint64_t lower_empirical() const {
    return settings.lower_empirical_n != 0 ? settings.lower_empirical_n : powers_of_two(settings.n_min, settings.n_max).back();
  }

  const RateReport& main_rate() {
    if (!rate_main) {
      RateExperimentConfig cfg{settings.sampler.build()};
      cfg.n_grid = powers_of_two(settings.n_min, settings.n_max);
      cfg.replicas = settings.replicas;
      cfg.m = settings.m;
      cfg.estimator = estimator_from_string(settings.estimator);
      cfg.root_seed = seed_for("rate-main");
      cfg.workers = options.workers;
      cfg.halfspace_directions = settings.halfspace_directions;
      cfg.projection_directions = settings.projection_directions;
      cfg.sinkhorn_epsilon_fraction = settings.sinkhorn_epsilon_fraction;
      rate_main = clt_rate_experiment(cfg);
    }
    return *rate_main;
  }

  const RateReport& secondary_rate() {
    if (!rate_2d) {
      RateExperimentConfig cfg{settings.rate2d_sampler.build()};
      cfg.n_grid = powers_of_two(settings.n_min, settings.n_max);
      cfg.replicas = settings.rate2d_replicas;
      cfg.m = settings.rate2d_m;
      cfg.estimator = estimator_from_string(settings.rate2d_estimator);
      cfg.root_seed = seed_for("rate-2d");
      cfg.workers = options.workers;
      cfg.halfspace_directions = settings.halfspace_directions;
      cfg.projection_directions = settings.projection_directions;
      cfg.sinkhorn_epsilon_fraction = settings.sinkhorn_epsilon_fraction;
      rate_2d = clt_rate_experiment(cfg);
    }
    return *rate_2d;
  }

  const std::vector<QResult>& q_moments() {
    if (!q_results) {
      const double r2 = std::sqrt(2.0), r3 = std::sqrt(3.0);
      const std::vector<QCase> zoo = {
          {"rademacher d=1", BoundedSampler::rademacher_product(1, 1.0), 10, true},
          {"rademacher d=2", BoundedSampler::rademacher_product(2, 1.0), 20, true},
          {"rademacher d=3", BoundedSampler::rademacher_product(3, 1.0), 30, true},
          {"scaled_basis d=2", BoundedSampler::scaled_basis(2, r2), 20, true},
          {"scaled_basis d=3", BoundedSampler::scaled_basis(3, r3), 30, true},
          {"three-point lattice", three_point_lattice(), 40, true},
          {"anisotropic cross", anisotropic_cross(), 50, true},
          {"sphere d=2", BoundedSampler::sphere_uniform(2, r2), 20, false},
          {"sphere d=3", BoundedSampler::sphere_uniform(3, r3), 30, false},
      };
      std::vector<QResult> out;
      for (std::size_t i = 0; i < zoo.size(); ++i) {
        const QCase& c = zoo[i];
        const MomentMode mode = c.exact ? MomentMode::enumeration() : MomentMode::monte_carlo(1000000, derive_seed(seed_for("q-moments"), c.label));
        out.push_back({c.label, c.n, estimate_q_moments(c.sampler, c.n, mode)});
      }
      q_results = std::move(out);
    }
    return *q_results;
  }
};

Json sampler_inputs(const std::string& label, std::uint64_t n) { return Json{{"sampler", label}, {"n", n}}; }

Verdict count_verdict(std::string name, Json inputs, std::size_t violations, double worst) {
  Verdict v = verdict_le(std::move(name), std::move(inputs), static_cast<double>(violations), 0.0);
  v.details["worst_margin"] = worst;
  return v;
}

Table make_table(std::string name, std::vector<std::string> cols) { return Table{std::move(name), std::move(cols), {}}; }

// gaussian_exp_quadratic against a tensor Gauss-Hermite rule. Each factor is
// integrated after rescaling h = x sqrt(2 / (1 - 2a)) so the rule's weight
// absorbs the quadratic term and only exp(c h) is left to the nodes.
CheckerOutput check_gaussian_closed_form(Context& ctx) {
  CheckerOutput out;
  Rng rng = make_rng(ctx.seed_for("gaussian-closed-form"), "instances");
  std::uniform_real_distribution<double> ua(-1.0, 0.4), ub(-1.0, 1.0), us(0.5, 2.0);
  std::normal_distribution<double> nv(0.0, 1.0);
  std::vector<double> gx, gw;
  gauss_hermite(200, gx, gw);
  double worst = 0.0;
  std::size_t violations = 0;
  Table t = make_table("gaussian_closed_form", {"instance", "k", "a", "b", "closed_form", "quadrature", "rel_error"});
  for (int inst = 0; inst < 50; ++inst) {
    const std::size_t k = 1 + inst % 3;
    const double a = ua(rng), b = ub(rng);
    std::vector<double> v(k), sig(k);
    for (std::size_t j = 0; j < k; ++j) {
      v[j] = nv(rng);
      sig[j] = us(rng);
    }
    const CovarianceSpec cov(sig);
    // CovarianceSpec sorts; express v in its coordinate order.
    std::vector<double> vs(k);
    for (std::size_t j = 0; j < k; ++j) vs[j] = v[cov.permutation()[j]];
    const double closed = gaussian_exp_quadratic(a, b, vs, cov);
    double quad = 1.0;
    const double scale = std::sqrt(2.0 / (1.0 - 2.0 * a));
    for (std::size_t j = 0; j < k; ++j) {
      const double c = b * vs[j] / cov.sigma(j);
      double sum = 0.0;
      for (std::size_t q = 0; q < gx.size(); ++q) sum += gw[q] * std::exp(c * scale * gx[q]);
      quad *= sum * scale / std::sqrt(2.0 * std::numbers::pi);
    }
    const double rel = std::abs(closed - quad) / std::abs(closed);
    worst = std::max(worst, rel);
    if (!(rel <= ctx.settings.tol_closed_form)) ++violations;
    t.rows.push_back({num(static_cast<std::uint64_t>(inst)), num(static_cast<std::uint64_t>(k)), num(a), num(b), num(closed), num(quad), num(rel)});
  }
  Verdict v = verdict_le("max relative error, 50 instances", Json{{"instances", 50}, {"k_max", 3}, {"a_max", 0.4}}, worst,
                         ctx.settings.tol_closed_form);
  v.details["violations"] = violations;
  out.verdicts.push_back(std::move(v));
  out.tables.push_back(std::move(t));
  return out;
}

double brute_force_w2_sq(const PointCloud& a, const PointCloud& b) {
  std::vector<std::size_t> perm(a.size());
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double c = 0.0;
    for (std::size_t i = 0; i < perm.size(); ++i) c += squared_distance(a.point(i), b.point(perm[i]));
    best = std::min(best, c);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best / static_cast<double>(a.size());
}

CheckerOutput check_ot_brute_force(Context& ctx) {
  CheckerOutput out;
  Rng rng = make_rng(ctx.seed_for("ot-brute-force"), "instances");
  std::normal_distribution<double> nv(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> um(1, 7), ud(1, 3), um1(1, 60);
  auto cloud = [&](std::size_t d, std::size_t m) {
    PointCloud c(d, m);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < d; ++j) c(i, j) = nv(rng);
    return c;
  };
  double worst = 0.0;
  for (int inst = 0; inst < 200; ++inst) {
    const std::size_t m = um(rng), d = ud(rng);
    PointCloud a = cloud(d, m), b = cloud(d, m);
    const double exact = w2_exact(EmpiricalMeasure(a), EmpiricalMeasure(b)).cost;
    worst = std::max(worst, std::abs(exact - brute_force_w2_sq(a, b)));
  }
  out.verdicts.push_back(verdict_le("w2_exact vs permutation search, 200 instances", Json{{"m_max", 7}, {"d_max", 3}}, worst, ctx.settings.tol_ot));
  double worst1 = 0.0;
  for (int inst = 0; inst < 100; ++inst) {
    const std::size_t m = um1(rng);
    PointCloud a = cloud(1, m), b = cloud(1, m);
    const double exact = w2_exact(EmpiricalMeasure(a), EmpiricalMeasure(b)).distance();
    worst1 = std::max(worst1, std::abs(exact - w2_quantile_1d(a.raw(), b.raw())));
  }
  out.verdicts.push_back(verdict_le("w2_quantile_1d vs w2_exact, 100 instances", Json{{"m_max", 60}, {"d", 1}}, worst1, ctx.settings.tol_ot));
  return out;
}

struct Chi2Case {
  std::string label;
  BoundedSampler sampler;
  std::uint64_t n;
};

std::vector<Chi2Case> chi2_cases() {
  return {
      {"rademacher d=1", BoundedSampler::rademacher_product(1, 1.0), 10},
      {"rademacher d=2", BoundedSampler::rademacher_product(2, 1.0), 20},
      {"scaled_basis d=2", BoundedSampler::scaled_basis(2, std::sqrt(2.0)), 20},
      {"three-point lattice", three_point_lattice(), 25},
      {"anisotropic cross", anisotropic_cross(), 50},
  };
}

CheckerOutput check_chi2_identity(Context& ctx) {
  CheckerOutput out;
  Table t = make_table("chi2_identity", {"sampler", "n", "quantity", "quadrature", "enumeration", "abs_diff"});
  for (const Chi2Case& c : chi2_cases()) {
    const double threshold = increment_threshold(c.sampler.bound(), c.sampler.cov());
    Json inputs = sampler_inputs(c.label, c.n);
    inputs["threshold"] = threshold;
    const DensityRatioModel model(c.sampler, c.n);
    const QuadratureValue lhs = density_second_moment_lhs(model);
    const Estimate rhs = density_second_moment_rhs(c.sampler, c.n, MomentMode::enumeration());
    Verdict v = verdict_close("E f^2 = E exp(Q), " + c.label, inputs, lhs.value, rhs.value, ctx.settings.tol_identity);
    v.details["richardson_error"] = lhs.richardson_error;
    out.verdicts.push_back(std::move(v));
    t.rows.push_back({c.label, num(c.n), "E f^2", num(lhs.value), num(rhs.value), num(std::abs(lhs.value - rhs.value))});
    for (std::size_t i = 0; i < c.sampler.dim(); ++i) {
      const QuadratureValue l = averaged_second_moment_quadrature(model, i);
      const Estimate r = averaged_second_moment(c.sampler, c.n, i, MomentMode::enumeration());
      const std::string q = "E f_(" + std::to_string(i + 1) + ")^2";
      out.verdicts.push_back(verdict_close(q + " = E exp(Q - Q_" + std::to_string(i + 1) + "), " + c.label, inputs, l.value, r.value,
                                           ctx.settings.tol_identity));
      t.rows.push_back({c.label, num(c.n), q, num(l.value), num(r.value), num(std::abs(l.value - r.value))});
    }
  }
  out.tables.push_back(std::move(t));
  return out;
}

Verdict from_bound_check(const BoundCheck& c, const QResult& r, double exact_tol, double se_slack) {
  Verdict v;
  v.name = c.name + ", " + r.label;
  v.inputs = sampler_inputs(r.label, r.n);
  v.inputs["mode"] = r.report.exact ? "enumeration" : "monte-carlo";
  v.lhs = c.lhs;
  v.rhs = c.rhs;
  if (c.equality) {
    const double tol = r.report.exact ? exact_tol : std::max(exact_tol, se_slack * c.se);
    v.margin = tol - std::abs(c.lhs - c.rhs);
    v.details["tolerance"] = tol;
  } else {
    v.margin = c.rhs + 1e-12 + se_slack * c.se - c.lhs;
  }
  if (!r.report.exact) v.details["se"] = c.se;
  v.status = (std::isfinite(v.margin) && v.margin >= 0.0) ? VerdictStatus::pass : VerdictStatus::fail;
  return v;
}

Table q_table(const std::vector<QResult>& rs, bool identity) {
  Table t = make_table(identity ? "q_mean_identity" : "q_moment_bounds", {"sampler", "n", "mode", "check", "lhs", "se", "rhs"});
  for (const QResult& r : rs) {
    for (const BoundCheck& c : r.report.checks) {
      if (c.equality != identity) continue;
      t.rows.push_back({r.label, num(r.n), r.report.exact ? "enumeration" : "monte-carlo", c.name, num(c.lhs), num(c.se), num(c.rhs)});
    }
  }
  return t;
}

CheckerOutput check_q_mean(Context& ctx) {
  CheckerOutput out;
  for (const QResult& r : ctx.q_moments()) {
    for (const BoundCheck& c : r.report.checks) {
      if (c.equality) out.verdicts.push_back(from_bound_check(c, r, ctx.settings.tol_exact, ctx.settings.se_slack));
    }
  }
  out.tables.push_back(q_table(ctx.q_moments(), true));
  return out;
}

CheckerOutput check_q_pointwise(Context& ctx) {
  CheckerOutput out;
  for (const QResult& r : ctx.q_moments()) {
    Json inputs = sampler_inputs(r.label, r.n);
    inputs["pairs"] = r.report.exact ? Json("all") : Json(r.report.pairs);
    out.verdicts.push_back(count_verdict("pointwise |Q| bounds, " + r.label, inputs, r.report.pointwise_violations, r.report.pointwise_worst_gap));
  }
  return out;
}

CheckerOutput check_q_bounds(Context& ctx) {
  CheckerOutput out;
  for (const QResult& r : ctx.q_moments()) {
    for (const BoundCheck& c : r.report.checks) {
      if (!c.equality) out.verdicts.push_back(from_bound_check(c, r, ctx.settings.tol_exact, ctx.settings.se_slack));
    }
  }
  out.tables.push_back(q_table(ctx.q_moments(), false));
  return out;
}

CheckerOutput check_conditional_l2(Context& ctx) {
  CheckerOutput out;
  Rng rng = make_rng(ctx.seed_for("conditional-l2"), "tables");
  std::uniform_int_distribution<std::size_t> usize(1, 6);
  std::uniform_real_distribution<double> u01(0.0, 1.0), uf(-3.0, 3.0);
  std::size_t violations = 0;
  double worst = std::numeric_limits<double>::infinity();
  auto probs = [&](std::size_t k) {
    std::vector<double> p(k);
    double s = 0.0;
    for (double& x : p) s += (x = u01(rng) + 1e-3);
    for (double& x : p) x /= s;
    return p;
  };
  for (int t = 0; t < 10000; ++t) {
    const std::size_t na = usize(rng), nb = usize(rng);
    const auto pa = probs(na), pb = probs(nb);
    std::vector<double> f(na * nb);
    for (double& x : f) x = t % 2 == 0 ? std::exp(uf(rng)) : uf(rng);
    const InequalityResult r = conditional_l2_check(f, pa, pb);
    if (!r.pass) ++violations;
    worst = std::min(worst, r.lhs - r.rhs);
  }
  out.verdicts.push_back(count_verdict("E f^2 + (E f)^2 >= E f_A^2 + E f_B^2, 10^4 tables", Json{{"tables", 10000}, {"max_side", 6}}, violations, worst));
  return out;
}

CheckerOutput check_taylor_remainder(Context& ctx) {
  CheckerOutput out;
  Rng rng = make_rng(ctx.seed_for("taylor-remainder"), "pairs");
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::size_t violations = 0;
  double worst = std::numeric_limits<double>::infinity();
  for (int t = 0; t < 1000000; ++t) {
    const double a = u(rng);
    // every fourth pair is a near-diagonal one to probe small |a - b|
    const double b = t % 4 == 0 ? std::clamp(a + 1e-3 * u(rng), -1.0, 1.0) : u(rng);
    const InequalityResult r = remainder_difference_check(a, b);
    if (!r.pass) ++violations;
    worst = std::min(worst, r.rhs - r.lhs);
  }
  out.verdicts.push_back(count_verdict("|R(a) - R(b)| <= |a - b| (3/2 a^2 + (a - b)^2), 10^6 pairs", Json{{"pairs", 1000000}, {"range", "[-1, 1]"}},
                                       violations, worst));
  return out;
}

CheckerOutput check_talagrand_equality(Context& ctx) {
  CheckerOutput out;
  const double tol = ctx.settings.tol_talagrand_equality;
  for (double m : {0.25, 0.5, 1.0}) {
    const TalagrandChainReport r = talagrand_chain(GaussianMixtureRatio::gaussian({m}, {1.0}, {1.0}));
    const Json inputs{{"shift", m}, {"d", 1}};
    out.verdicts.push_back(verdict_close("W2^2 = shift^2, shift " + num(m), inputs, r.w2_sq, m * m, tol));
    out.verdicts.push_back(verdict_close("2 KL = shift^2, shift " + num(m), inputs, r.rhs_entropy, m * m, tol));
  }
  return out;
}

CheckerOutput check_talagrand_chain(Context&) {
  CheckerOutput out;
  Table t = make_table("talagrand_chain", {"model", "n", "w2_sq_lower", "w2_sq_upper", "rhs_entropy", "rhs_chi2", "margin_w2_entropy",
                                           "margin_entropy_chi2"});
  const std::vector<Chi2Case> models = {
      {"scaled_basis d=2", BoundedSampler::scaled_basis(2, std::sqrt(2.0)), 20},
      {"rademacher d=2", BoundedSampler::rademacher_product(2, 1.0), 20},
      {"anisotropic cross", anisotropic_cross(), 50},
  };
  for (const Chi2Case& c : models) {
    const TalagrandChainReport r = talagrand_chain(DensityRatioModel(c.sampler, c.n));
    const Json inputs = sampler_inputs(c.label, c.n);
    auto make = [&](std::string name, double lhs, double rhs, double margin, VerdictStatus st) {
      Verdict v;
      v.name = std::move(name);
      v.inputs = inputs;
      v.lhs = lhs;
      v.rhs = rhs;
      v.margin = margin;
      v.status = (st == VerdictStatus::pass && !(margin > 0.0)) ? VerdictStatus::fail : st;
      return v;
    };
    Verdict a = make("W2^2 <= entropy bound, " + c.label, r.w2_sq, r.rhs_entropy, r.margin_w2_entropy, r.w2_vs_entropy);
    a.details["w2_sq_lower"] = r.w2_sq_lower;
    a.details["budget_w2"] = r.budget_w2;
    a.details["budget_entropy"] = r.budget_entropy;
    out.verdicts.push_back(std::move(a));
    Verdict b = make("entropy bound <= chi-square bound, " + c.label, r.rhs_entropy, r.rhs_chi2, r.margin_entropy_chi2, r.entropy_vs_chi2);
    b.details["budget_chi2"] = r.budget_chi2;
    out.verdicts.push_back(std::move(b));
    Verdict cnd = verdict_le("conditional prefix bounds, " + c.label, inputs, r.conditional_bound_holds ? 0.0 : 1.0, 0.0);
    out.verdicts.push_back(std::move(cnd));
    t.rows.push_back({c.label, num(c.n), num(r.w2_sq_lower), num(r.w2_sq), num(r.rhs_entropy), num(r.rhs_chi2), num(r.margin_w2_entropy),
                      num(r.margin_entropy_chi2)});
  }
  out.tables.push_back(std::move(t));
  return out;
}

CheckerOutput check_increment(Context& ctx) {
  CheckerOutput out;
  const BoundedSampler s = three_point_lattice();
  Table t = make_table("increment", {"n", "m", "estimator", "w2_hat", "bound", "margin_fraction"});
  for (std::uint64_t n : {20u, 40u, 80u}) {
    Rng rng = make_rng(ctx.seed_for("increment"), "n", n);
    const IncrementCheck c = increment_bound_check(s, n, 1000000, rng);
    const double target = (1.0 - ctx.settings.increment_margin) * c.bound;
    Verdict v = verdict_le("W2(Z_n, Z_{n-1} + X) <= (1 - margin) 5 beta / n, n " + num(n),
                           Json{{"n", n}, {"m", c.m}, {"sigma", 1.0}, {"beta", 2.0}, {"margin", ctx.settings.increment_margin}}, c.w2_hat, target);
    v.details["bound"] = c.bound;
    v.details["margin_fraction"] = c.margin_fraction();
    v.details["estimator"] = c.estimator;
    out.verdicts.push_back(std::move(v));
    t.rows.push_back({num(n), num(static_cast<std::uint64_t>(c.m)), c.estimator, num(c.w2_hat), num(c.bound), num(c.margin_fraction())});
  }
  out.tables.push_back(std::move(t));
  return out;
}

CheckerOutput check_ank_schedule(Context& ctx) {
  CheckerOutput out;
  const BoundedSampler s = ctx.settings.rate2d_sampler.build();
  const std::uint64_t n_max = ctx.settings.n_max;
  const AnkSchedule sch = ank_bound_schedule(n_max, s.cov(), s.bound());
  const Json inputs{{"sampler", s.describe()}, {"n_max", n_max}};
  out.verdicts.push_back(verdict_le("A_{n,k} <= 5 sqrt(k) beta (1 + ln n), all n <= n_max", inputs, sch.worst_ratio, 1.0 + 1e-12));
  Table t = make_table("ank_schedule", {"n", "k", "bound", "branch", "normalized_bound", "rate_bound"});
  PlotData p{"ank_normalized_bound", "n", "A_{n,d} / sqrt(n)", {}};
  PlotData q{"rate_bound_2d", "n", "5 sqrt(d) beta (1 + ln n) / sqrt(n)", {}};
  for (std::uint64_t n : powers_of_two(1, n_max)) {
    for (std::size_t k = 1; k <= s.dim(); ++k) {
      const ScheduleCell& c = sch.at(n, k);
      t.rows.push_back({num(n), num(static_cast<std::uint64_t>(k)), num(c.bound), to_string(c.branch),
                        k == s.dim() ? num(sch.normalized_bound(n)) : "", k == s.dim() ? num(rate_bound(s.dim(), s.bound(), n)) : ""});
    }
    p.points.emplace_back(static_cast<double>(n), sch.normalized_bound(n));
    q.points.emplace_back(static_cast<double>(n), rate_bound(s.dim(), s.bound(), n));
  }
  out.tables.push_back(std::move(t));
  out.plots.push_back(std::move(p));
  out.plots.push_back(std::move(q));
  return out;
}

void rate_bound_verdicts(CheckerOutput& out, const RateReport& r, const std::string& label) {
  for (const RatePoint& p : r.points) {
    const double worst = *std::max_element(p.w2_replicas.begin(), p.w2_replicas.end());
    Verdict v = verdict_le("max replica W2-hat <= 5 sqrt(d) beta (1 + ln n) / sqrt(n), " + label + ", n " + num(p.n),
                           Json{{"n", p.n}, {"d", r.dim}, {"beta", r.beta}, {"m", r.m}, {"replicas", r.replicas}, {"estimator", to_string(r.estimator)}},
                           worst, p.bound);
    v.details["w2_mean"] = p.w2_mean;
    out.verdicts.push_back(std::move(v));
  }
}

Table rate_table(const std::string& name, const RateReport& r) {
  Table t = make_table(name, {"n", "w2_hat", "ci_lo", "ci_hi", "bound", "replicas", "m", "projection_lower", "gaussian_bracket"});
  for (const RatePoint& p : r.points) {
    t.rows.push_back({num(p.n), num(p.w2_mean), num(p.ci_lo), num(p.ci_hi), num(p.bound), num(static_cast<std::uint64_t>(r.replicas)),
                      num(static_cast<std::uint64_t>(r.m)), p.projection_lower ? num(*p.projection_lower) : "",
                      p.gaussian_bracket ? num(*p.gaussian_bracket) : ""});
  }
  return t;
}

std::vector<PlotData> rate_plots(const std::string& name, const RateReport& r) {
  PlotData w{name + "_w2", "n", "mean W2-hat", {}};
  PlotData b{name + "_bound", "n", "5 sqrt(d) beta (1 + ln n) / sqrt(n)", {}};
  for (const RatePoint& p : r.points) {
    w.points.emplace_back(static_cast<double>(p.n), p.w2_mean);
    b.points.emplace_back(static_cast<double>(p.n), p.bound);
  }
  return {w, b};
}

CheckerOutput check_rate_main(Context& ctx) {
  CheckerOutput out;
  const RateReport& r = ctx.main_rate();
  rate_bound_verdicts(out, r, "main");
  Verdict lo = verdict_le("log-log slope >= slope_min", Json{{"replicas", r.replicas}, {"m", r.m}}, ctx.settings.slope_min, r.fit.slope);
  Verdict hi = verdict_le("log-log slope <= slope_max", Json{{"replicas", r.replicas}, {"m", r.m}}, r.fit.slope, ctx.settings.slope_max);
  lo.details["correlation"] = r.fit.correlation;
  hi.details["intercept"] = r.fit.intercept;
  out.verdicts.push_back(std::move(lo));
  out.verdicts.push_back(std::move(hi));
  out.tables.push_back(rate_table("rate", r));
  for (PlotData& p : rate_plots("rate", r)) out.plots.push_back(std::move(p));
  return out;
}

CheckerOutput check_rate_2d(Context& ctx) {
  CheckerOutput out;
  const RateReport& r = ctx.secondary_rate();
  rate_bound_verdicts(out, r, "2d");
  if (r.estimator == Estimator::exact || r.estimator == Estimator::sinkhorn) {
    double worst = -std::numeric_limits<double>::infinity();
    for (const RatePoint& p : r.points) {
      if (p.projection_lower) worst = std::max(worst, *p.projection_lower - p.w2_mean);
    }
    if (std::isfinite(worst)) {
      out.verdicts.push_back(verdict_le("projection lower bound <= W2-hat (replica means), all n", Json{{"estimator", to_string(r.estimator)}},
                                        worst, 0.0, r.estimator == Estimator::sinkhorn ? 1e-3 : 1e-9));
    }
  }
  out.tables.push_back(rate_table("rate_2d", r));
  for (PlotData& p : rate_plots("rate_2d", r)) out.plots.push_back(std::move(p));
  return out;
}

LowerConfig lower_config(Context& ctx, const std::string& id, BoundedSampler s, bool empirical) {
  LowerConfig cfg{std::move(s)};
  cfg.n_grid = powers_of_two(ctx.settings.n_min, ctx.settings.n_max);
  cfg.proxy_m = ctx.settings.lower_proxy_m;
  cfg.m = ctx.settings.lower_m;
  cfg.replicas = ctx.settings.lower_replicas;
  if (empirical) cfg.empirical_n = {ctx.lower_empirical()};
  cfg.estimator = cfg.sampler.dim() == 1 ? Estimator::quantile_1d : Estimator::exact;
  cfg.root_seed = ctx.seed_for(id);
  cfg.workers = ctx.options.workers;
  return cfg;
}

void lower_outputs(CheckerOutput& out, const LowerReport& r, const std::string& name) {
  Table t = make_table(name, {"n", "proxy", "proxy_se", "empirical", "target"});
  PlotData p{name + "_proxy", "n", "sqrt(n) E d_L(Z)", {}};
  for (const LowerPoint& lp : r.points) {
    t.rows.push_back({num(lp.n), num(lp.proxy), num(lp.proxy_se), lp.empirical ? num(*lp.empirical) : "", num(r.target)});
    p.points.emplace_back(static_cast<double>(lp.n), lp.proxy);
  }
  out.tables.push_back(std::move(t));
  out.plots.push_back(std::move(p));
}

CheckerOutput check_lower_1d(Context& ctx) {
  CheckerOutput out;
  const LowerReport r = lattice_lower_experiment(lower_config(ctx, "lower-1d", BoundedSampler::rademacher_product(1, 1.0), true));
  const LowerPoint& last = r.points.back();
  const Json inputs{{"n", last.n}, {"beta", 1.0}, {"proxy_m", ctx.settings.lower_proxy_m}};
  out.verdicts.push_back(verdict_le("sqrt(n) E d_L(Z) >= band low", inputs, ctx.settings.lower_band_lo, last.proxy));
  out.verdicts.push_back(verdict_le("sqrt(n) E d_L(Z) <= band high", inputs, last.proxy, ctx.settings.lower_band_hi));
  for (const LowerPoint& lp : r.points) {
    if (!lp.empirical) continue;
    Verdict v = verdict_le("sqrt(n) W2-hat >= band low, n " + num(lp.n), Json{{"n", lp.n}, {"m", ctx.settings.lower_m}, {"replicas", ctx.settings.lower_replicas}},
                           ctx.settings.lower_band_lo, *lp.empirical);
    out.verdicts.push_back(std::move(v));
  }
  Verdict cube = verdict_close("mean distance to the cube center, d = 1", Json{{"d", 1}}, r.cube_average, 0.25, 1e-12);
  out.verdicts.push_back(std::move(cube));
  lower_outputs(out, r, "lower_1d");
  return out;
}

CheckerOutput check_lower_2d(Context& ctx) {
  CheckerOutput out;
  const LowerReport r = lattice_lower_experiment(lower_config(ctx, "lower-2d", BoundedSampler::scaled_basis(2, 1.0), false));
  Verdict v = verdict_le("proxy plateau >= fraction * sqrt(d) beta / 4", Json{{"n", r.points.back().n}, {"d", 2}, {"beta", 1.0}},
                         ctx.settings.plateau_fraction * r.target, r.plateau);
  v.details["target"] = r.target;
  v.details["cube_average"] = r.cube_average;
  v.details["cube_display_constant"] = r.cube_display_constant;
  out.verdicts.push_back(std::move(v));
  lower_outputs(out, r, "lower_2d");
  return out;
}

CheckerOutput check_ci_calibration(Context& ctx) {
  CheckerOutput out;
  const CiCalibration c = ci_calibration(0.5);
  const Json inputs{{"shift", c.shift}, {"d", 1}};
  out.verdicts.push_back(verdict_close("sup_t |Phi(t) - Phi(t - 0.5)| = 2 Phi(0.25) - 1", inputs, c.delta_numeric, c.delta_exact, ctx.settings.tol_exact * 100));
  out.verdicts.push_back(verdict_close("bound 5 * 0.5^(2/3)", inputs, c.bound, 5.0 * std::cbrt(0.25), 1e-12));
  out.verdicts.push_back(verdict_le("halfspace distance <= bound", inputs, c.delta_exact, c.bound));
  return out;
}

CheckerOutput check_ci_halfspace(Context& ctx) {
  CheckerOutput out;
  Table t = make_table("ci_halfspace", {"experiment", "n", "delta_hat", "se", "w2_hat", "rhs"});
  PlotData pd{"ci_halfspace_delta", "n", "max replica halfspace delta (main)", {}};
  const double slack = ctx.settings.se_slack;
  auto handle = [&](const RateReport& r, const std::string& label) {
    for (const RatePoint& p : r.points) {
      // worst replica: largest delta_hat - rhs
      std::size_t worst = 0;
      double worst_gap = -std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < p.delta_replicas.size(); ++i) {
        const double gap = p.delta_replicas[i] - w2_to_convex_bound(r.dim, p.w2_replicas[i]);
        if (gap > worst_gap) {
          worst_gap = gap;
          worst = i;
        }
      }
      const double delta = p.delta_replicas[worst];
      const double rhs = w2_to_convex_bound(r.dim, p.w2_replicas[worst]);
      Verdict v = verdict_le("delta_hat <= 5 d^(1/6) W2-hat^(2/3) + slack SE, " + label + ", n " + num(p.n),
                             Json{{"n", p.n}, {"d", r.dim}, {"m", r.m}, {"replica", worst}}, delta, rhs, slack * p.delta_se);
      out.verdicts.push_back(std::move(v));
      t.rows.push_back({label, num(p.n), num(delta), num(p.delta_se), num(p.w2_replicas[worst]), num(rhs)});
      if (label == "main") pd.points.emplace_back(static_cast<double>(p.n), *std::max_element(p.delta_replicas.begin(), p.delta_replicas.end()));
    }
  };
  handle(ctx.main_rate(), "main");
  handle(ctx.secondary_rate(), "2d");
  out.tables.push_back(std::move(t));
  out.plots.push_back(std::move(pd));
  return out;
}

using CheckerFn = CheckerOutput (*)(Context&);

CheckerFn checker_fn(const std::string& id) {
  static const std::map<std::string, CheckerFn> fns = {
      {"gaussian-closed-form", check_gaussian_closed_form},
      {"ot-brute-force", check_ot_brute_force},
      {"chi2-identity", check_chi2_identity},
      {"q-mean-identity", check_q_mean},
      {"q-pointwise", check_q_pointwise},
      {"q-moment-bounds", check_q_bounds},
      {"conditional-l2", check_conditional_l2},
      {"taylor-remainder", check_taylor_remainder},
      {"talagrand-equality", check_talagrand_equality},
      {"talagrand-chain", check_talagrand_chain},
      {"increment", check_increment},
      {"ank-schedule", check_ank_schedule},
      {"rate-main", check_rate_main},
      {"rate-2d", check_rate_2d},
      {"lower-1d", check_lower_1d},
      {"lower-2d", check_lower_2d},
      {"ci-calibration", check_ci_calibration},
      {"ci-halfspace", check_ci_halfspace},
  };
  return fns.at(id);
}

Verdict error_verdict(const std::string& id, const std::exception& e, VerdictStatus status) {
  Verdict v;
  v.name = id + " did not complete";
  v.lhs = std::numeric_limits<double>::quiet_NaN();
  v.rhs = std::numeric_limits<double>::quiet_NaN();
  v.margin = std::numeric_limits<double>::quiet_NaN();
  v.status = status;
  v.details["error"] = e.what();
  return v;
}

}  // namespace

RunSummary execute(const RunSettings& settings, const RunOptions& options, std::ostream& log) {
  const std::vector<std::string> ids = select_checkers(options.subcommand, options.only);
  Context ctx{settings, options, log, {}, {}, {}};
  RunSummary summary;
  for (const std::string& id : ids) {
    if (options.verbose) log << "[" << id << "] running\n" << std::flush;
    CheckerOutput out;
    const auto start = std::chrono::steady_clock::now();
    try {
      out = checker_fn(id)(ctx);
    } catch (const InconclusiveError& e) {
      out.verdicts = {error_verdict(id, e, VerdictStatus::inconclusive)};
    } catch (const Error& e) {
      out.verdicts = {error_verdict(id, e, VerdictStatus::fail)};
    }
    out.id = id;
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    for (const Verdict& v : out.verdicts) {
      if (v.status == VerdictStatus::pass) ++summary.passed;
      else if (v.status == VerdictStatus::fail) ++summary.failed;
      else ++summary.inconclusive;
      if (options.verbose && v.status != VerdictStatus::pass) log << "  " << to_string(v.status) << ": " << v.name << "\n";
    }
    if (options.verbose) log << "[" << id << "] " << out.verdicts.size() << " verdicts\n" << std::flush;
    summary.outputs.push_back(std::move(out));
  }
  return summary;
}

namespace {

std::string stamp(const RunSettings& s, const RunOptions& o) {
  return "# config_hash=" + s.hash() + " seed=" + std::to_string(o.seed) + "\n";
}

std::string csv_field(const std::string& f) {
  if (f.find_first_of(",\"\n") == std::string::npos) return f;
  std::string q = "\"";
  for (char c : f) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write '" + p.string() + "'");
  out << content;
  if (!out) throw Error("write failed for '" + p.string() + "'");
}

}  // namespace

void write_artifacts(const RunSummary& summary, const RunSettings& settings, const RunOptions& options) {
  const fs::path final_dir = options.out;
  fs::path partial = final_dir;
  partial += ".partial";
  fs::remove_all(partial);
  fs::create_directories(partial / "tables");
  fs::create_directories(partial / "plotdata");

  Json root = Json::object();
  root["schema_version"] = 1;
  root["config_hash"] = settings.hash();
  root["seed"] = options.seed;
  root["subcommand"] = options.subcommand;
  root["summary"] = Json{{"pass", summary.passed}, {"fail", summary.failed}, {"inconclusive", summary.inconclusive}};
  Json checkers = Json::array();
  const std::string head = stamp(settings, options);
  for (const CheckerOutput& out : summary.outputs) {
    const auto info = std::find_if(checker_registry().begin(), checker_registry().end(), [&](const CheckerInfo& c) { return c.id == out.id; });
    Json c{{"id", out.id}, {"anchor", info->anchor}, {"suite", info->suite}};
    Json vs = Json::array();
    for (const Verdict& v : out.verdicts) vs.push_back(v.to_json());
    c["verdicts"] = std::move(vs);
    checkers.push_back(std::move(c));

    for (const Table& t : out.tables) {
      std::string body = head;
      for (std::size_t i = 0; i < t.columns.size(); ++i) body += (i ? "," : "") + csv_field(t.columns[i]);
      body += "\n";
      for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) body += (i ? "," : "") + csv_field(row[i]);
        body += "\n";
      }
      write_file(partial / "tables" / (t.name + ".csv"), body);
    }
    for (const PlotData& p : out.plots) {
      std::string body = head + "# " + p.x_label + " | " + p.y_label + "\n";
      for (const auto& [x, y] : p.points) body += num(x) + " " + num(y) + "\n";
      write_file(partial / "plotdata" / (p.name + ".dat"), body);
    }
  }
  root["checkers"] = std::move(checkers);
  write_file(partial / "verdicts.json", root.dump(2) + "\n");
  write_file(partial / "config.ini", head + settings.canonical());

  fs::remove_all(final_dir);
  fs::rename(partial, final_dir);
}

int run(const RunOptions& options, std::ostream& out, std::ostream& err) {
  RunSettings settings;
  try {
    if (options.workers < 1) throw ConfigError("--workers must be at least 1");
    settings = options.config ? load_config(*options.config) : RunSettings{};
    if (!options.config) validate_settings(settings);
    select_checkers(options.subcommand, options.only);
  } catch (const ConfigError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  }
  RunSummary summary;
  try {
    summary = execute(settings, options, err);
    write_artifacts(summary, settings, options);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  out << summary.passed << " passed, " << summary.failed << " failed, " << summary.inconclusive << " inconclusive; artifacts in "
      << options.out.string() << "\n";
  if (summary.inconclusive > 0) err << "warning: " << summary.inconclusive << " inconclusive verdict(s)\n";
  return summary.exit_code();
}

}  // namespace w2lab

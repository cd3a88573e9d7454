#include "commands.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <tuple>

#include "unicorn/simulation.hpp"
#include "unicorn/verify.hpp"

namespace unicorn::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  std::size_t workers = 1;
  bool quick = false;
  std::string log_base;
  std::string tie_policy;
  bool adversarial_only = false;
};

// ---------------------------------------------------------------------------
// Formatting

std::string num(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string ramp_label(const std::vector<double>& ramp) {
  std::string s;
  for (std::size_t k = 0; k < ramp.size(); ++k) {
    if (k) s += '/';
    s += num(ramp[k]);
  }
  return s;
}

/// CSV with the resolved config embedded as the first (comment) line.
class CsvFile {
 public:
  CsvFile(const fs::path& path, const json& config, const std::string& header) : path_(path), out_(path) {
    if (!out_) throw std::runtime_error("cannot write " + path.string());
    out_ << "# config=" << config.dump() << '\n' << header << '\n';
  }
  template <class... Ts>
  void row(const Ts&... cells) {
    std::size_t i = 0;
    ((out_ << (i++ ? "," : "") << cell(cells)), ...);
    out_ << '\n';
  }
  ~CsvFile() = default;

 private:
  static std::string cell(double v) { return num(v); }
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  static std::string cell(std::string_view s) { return std::string(s); }
  static std::string cell(bool b) { return b ? "1" : "0"; }
  template <class T>
    requires std::is_integral_v<T>
  static std::string cell(T v) {
    return std::to_string(v);
  }

  fs::path path_;
  std::ofstream out_;
};

void write_json(const fs::path& path, const json& doc) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

fs::path prepare_out(const std::string& dir) {
  const fs::path p(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec || !fs::is_directory(p)) throw std::runtime_error("cannot create output directory " + dir);
  const fs::path probe = p / ".write-probe";
  {
    std::ofstream test(probe);
    if (!test) throw std::runtime_error("output directory is not writable: " + dir);
  }
  fs::remove(probe, ec);
  return p;
}

double quantile(std::vector<double> v, double q) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const double h = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

// ---------------------------------------------------------------------------
// Config resolution: flag > config file > environment > built-in default

json load_config(const Options& o) {
  if (o.config_path.empty()) return json::object();
  std::ifstream in(o.config_path);
  if (!in) throw UsageError("cannot read config file " + o.config_path);
  try {
    json doc = json::parse(in, nullptr, true, true);
    if (!doc.is_object()) throw UsageError("config file must hold a JSON object");
    return doc;
  } catch (const json::parse_error& e) {
    throw UsageError("config file " + o.config_path + ": " + e.what());
  }
}

std::uint64_t resolve_seed(const Options& o, const json& doc) {
  if (o.seed) return *o.seed;
  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned()) throw UsageError("config seed must be a non-negative integer");
    return doc["seed"].get<std::uint64_t>();
  }
  if (const char* env = std::getenv("UNICORN_LAB_SEED"); env && *env) {
    std::uint64_t v = 0;
    const std::string_view s(env);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
      throw UsageError("UNICORN_LAB_SEED is not a non-negative integer");
    }
    return v;
  }
  throw UsageError("a master seed is required (--seed, config \"seed\" or UNICORN_LAB_SEED)");
}

std::string resolve_string(const std::string& flag, const json& doc, const char* key, const char* fallback) {
  if (!flag.empty()) return flag;
  if (doc.contains(key)) return doc[key].get<std::string>();
  return fallback;
}

/// Values of one command section, with defaults.
class Section {
 public:
  Section(const json& doc, const char* name) {
    if (doc.contains(name)) {
      if (!doc[name].is_object()) throw UsageError(std::string("config section ") + name + " must be an object");
      s_ = doc[name];
    }
  }
  template <class T>
  T get(const char* key, T fallback) const {
    if (!s_.contains(key)) return fallback;
    try {
      return s_[key].get<T>();
    } catch (const json::exception& e) {
      throw UsageError(std::string("config key ") + key + ": " + e.what());
    }
  }
  bool has(const char* key) const { return s_.contains(key); }

 private:
  json s_ = json::object();
};

TiePolicy tie_from(const std::string& s) {
  try {
    return parse_tie_policy(s);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

// ---------------------------------------------------------------------------
// Commands

int cmd_alpha_sweep(const Options& o, std::ostream& out) {
  const json doc = load_config(o);
  const Section sec(doc, "alpha_sweep");
  AlphaSweepConfig c;
  c.seed = resolve_seed(o, doc);
  const std::string tie = resolve_string(o.tie_policy, doc, "tie_policy", "random");
  c.tie_policy = tie_from(tie);
  c.env.slots = sec.get<std::size_t>("slots", 100);
  c.env.sessions = o.quick ? 2000 : sec.get<std::size_t>("sessions", 50000);
  c.rhos = sec.get("rhos", c.rhos);
  c.treatment_fractions = sec.get("treatment_fractions", c.treatment_fractions);
  c.alphas = sec.get("alphas", c.alphas);

  const json resolved = {{"command", "alpha-sweep"},         {"seed", c.seed},
                         {"tie_policy", tie},                {"slots", c.env.slots},
                         {"sessions", c.env.sessions},       {"rhos", c.rhos},
                         {"treatment_fractions", c.treatment_fractions}, {"alphas", c.alphas}};
  const fs::path dir = prepare_out(o.out);
  const auto rows = alpha_sweep(c, Execution{o.workers});

  CsvFile positions(dir / "position_errors.csv", resolved, "rho,tp,alpha,position,mae,rmse,count");
  CsvFile tradeoff(dir / "tradeoff.csv", resolved,
                   "rho,tp,alpha,inaccuracy,mean_rmse,mean_mae,analytic_cost,measured_cost");
  json summary_rows = json::array();
  for (const auto& r : rows) {
    for (std::size_t l = 0; l < r.profile.by_position.size(); ++l) {
      const auto& p = r.profile.by_position[l];
      if (!p) continue;
      positions.row(r.rho, r.tp, r.alpha, l + 1, p->mae, p->rmse, p->count);
    }
    tradeoff.row(r.rho, r.tp, r.alpha, r.inaccuracy, r.mean_rmse, r.mean_mae, r.analytic_cost, r.measured_cost);
    summary_rows.push_back({{"rho", r.rho},
                            {"tp", r.tp},
                            {"alpha", r.alpha},
                            {"inaccuracy", r.inaccuracy},
                            {"mean_rmse", r.mean_rmse},
                            {"mean_mae", r.mean_mae},
                            {"analytic_cost", r.analytic_cost},
                            {"measured_cost", r.measured_cost}});
  }
  write_json(dir / "alpha_sweep_summary.json", {{"config", resolved}, {"rows", summary_rows}});
  out << "alpha-sweep: " << rows.size() << " (rho, tp, alpha) cells written to " << dir.string() << '\n';
  return kOk;
}

int cmd_compare(const Options& o, std::ostream& out) {
  const json doc = load_config(o);
  const Section sec(doc, "compare");
  ComparisonConfig c;
  c.seed = resolve_seed(o, doc);
  const std::string tie = resolve_string(o.tie_policy, doc, "tie_policy", "random");
  const std::string base = resolve_string(o.log_base, doc, "log_base", "e");
  c.tie_policy = tie_from(tie);
  try {
    c.log_base = parse_log_base(base);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  c.env.producers = sec.get<std::size_t>("producers", 1000);
  c.env.slots = sec.get<std::size_t>("slots", 100);
  c.env.sessions = o.quick ? 200 : sec.get<std::size_t>("sessions", 1000);
  c.replications = o.quick ? 10 : sec.get<std::size_t>("replications", 100);
  c.treatment_fractions = sec.get("treatment_fractions", c.treatment_fractions);
  std::vector<std::string> names;
  for (const auto& m : c.methods) names.push_back(m.name());
  names = sec.get("methods", names);
  c.methods.clear();
  for (const auto& n : names) {
    try {
      c.methods.push_back(Method::parse(n));
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }

  const json resolved = {{"command", "compare"},
                         {"seed", c.seed},
                         {"tie_policy", tie},
                         {"log_base", std::string(to_string(c.log_base))},
                         {"producers", c.env.producers},
                         {"slots", c.env.slots},
                         {"sessions", c.env.sessions},
                         {"replications", c.replications},
                         {"treatment_fractions", c.treatment_fractions},
                         {"methods", names}};
  const fs::path dir = prepare_out(o.out);
  const auto t0 = std::chrono::steady_clock::now();
  const ComparisonResult result = run_comparison(c, Execution{o.workers});
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  CsvFile errors(dir / "ate_errors.csv", resolved, "method,fn,tp,replication,estimate,truth,error");
  std::map<std::tuple<std::string, std::string, double>, std::vector<double>> by_cell;
  for (const auto& r : result.errors) {
    errors.row(r.method, r.fn, r.tp, r.replication, r.estimate, r.truth, r.error);
    by_cell[{r.method, r.fn, r.tp}].push_back(r.error);
  }
  CsvFile costs(dir / "costs.csv", resolved, "method,tp,replication,cost_per_item");
  std::map<std::pair<std::string, double>, std::vector<double>> cost_cell;
  for (const auto& r : result.costs) {
    costs.row(r.method, r.tp, r.replication, r.cost_per_item);
    cost_cell[{r.method, r.tp}].push_back(r.cost_per_item);
  }

  json cells = json::array();
  for (const auto& [key, errs] : by_cell) {
    std::vector<double> abs_errs(errs.size());
    std::transform(errs.begin(), errs.end(), abs_errs.begin(), [](double e) { return std::abs(e); });
    double mean = 0.0;
    for (double e : errs) mean += e;
    mean /= static_cast<double>(errs.size());
    cells.push_back({{"method", std::get<0>(key)},
                     {"fn", std::get<1>(key)},
                     {"tp", std::get<2>(key)},
                     {"median_abs_error", quantile(abs_errs, 0.5)},
                     {"median_error", quantile(errs, 0.5)},
                     {"mean_error", mean},
                     {"iqr_error", quantile(errs, 0.75) - quantile(errs, 0.25)}});
  }
  json cost_summary = json::array();
  for (const auto& [key, v] : cost_cell) {
    double mean = 0.0;
    for (double x : v) mean += x;
    cost_summary.push_back({{"method", key.first}, {"tp", key.second}, {"mean_cost_per_item", mean / static_cast<double>(v.size())}});
  }
  write_json(dir / "compare_summary.json", {{"config", resolved}, {"errors", cells}, {"costs", cost_summary}});
  out << "compare: " << c.replications << " replications in " << seconds << " s ("
      << seconds / static_cast<double>(c.replications) << " s per replication), written to " << dir.string() << '\n';
  return kOk;
}

int cmd_verify(const Options& o, std::ostream& out) {
  const json doc = load_config(o);
  const Section sec(doc, "verify");
  const std::uint64_t seed = resolve_seed(o, doc);
  const std::string tie = resolve_string(o.tie_policy, doc, "tie_policy", "random");
  BoundCheckConfig b;
  b.seed = derive_seed(seed, {2});
  b.tie_policy = tie_from(tie);
  b.p1_grid = sec.get("p1", b.p1_grid);
  b.sizes = sec.get("sizes", b.sizes);
  b.reps = o.quick ? 2000 : sec.get<std::size_t>("reps", b.reps);
  b.adversarial_only = o.adversarial_only || sec.get("adversarial_only", false);
  const std::size_t trials = o.quick ? 1000 : sec.get<std::size_t>("trials", 10000);
  const auto trial_sizes = sec.get<std::vector<std::size_t>>("trial_sizes", {3, 4, 5, 6, 7});

  const json resolved = {{"command", "verify"},     {"seed", seed},          {"tie_policy", tie},
                         {"p1", b.p1_grid},         {"sizes", b.sizes},      {"reps", b.reps},
                         {"adversarial_only", b.adversarial_only},          {"trials", trials},
                         {"trial_sizes", trial_sizes}};
  const fs::path dir = prepare_out(o.out);
  const Execution exec{o.workers};

  OptimalityReport opt;
  try {
    opt = brute_force_optimality(trial_sizes, trials, derive_seed(seed, {1}), exec);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const auto checks = check_bias_variance(b, exec);

  CsvFile cells(dir / "bound_cells.csv", resolved,
                "kind,n,p1,arm,r,samples,bias,bias_se,bias_bound,variance,variance_se,variance_bound,"
                "skipped,bias_violation,variance_violation,bias_attains_bound,variance_attains_bound");
  json check_docs = json::array();
  std::size_t failed = opt.pass() ? 0 : 1;
  for (const auto& c : checks) {
    for (const auto& cell : c.report.cells) {
      cells.row(to_string(c.kind), c.session_size, c.p1, cell.arm, cell.r, cell.samples, cell.bias, cell.bias_se,
                cell.bias_bound, cell.variance, cell.variance_se, cell.variance_bound, cell.skipped,
                cell.bias_violation, cell.variance_violation, cell.bias_attains_bound,
                cell.variance_attains_bound);
    }
    if (!c.pass) ++failed;
    check_docs.push_back({{"kind", std::string(to_string(c.kind))},
                          {"n", c.session_size},
                          {"p1", c.p1},
                          {"reps", c.reps},
                          {"violations", c.violations},
                          {"equality_cells", c.equality_cells},
                          {"bias_equality_failures", c.bias_equality_failures},
                          {"variance_equality_failures", c.variance_equality_failures},
                          {"warnings", c.report.warnings},
                          {"pass", c.pass}});
  }
  json failures = json::array();
  for (const auto& f : opt.failures) {
    failures.push_back({{"trial", f.trial},
                        {"n", f.session_size},
                        {"adversarial", f.adversarial},
                        {"design_error", f.design_error},
                        {"minimum_error", f.minimum_error}});
  }
  const std::size_t total = checks.size() + 1;
  write_json(dir / "verify_report.json",
             {{"config", resolved},
              {"optimality", {{"trials", opt.trials}, {"passed", opt.passed}, {"pass", opt.pass()}, {"failures", failures}}},
              {"bounds", check_docs},
              {"checks", total},
              {"failed", failed},
              {"pass", failed == 0}});
  if (failed == 0) {
    out << "all " << total << " checks passed\n";
    return kOk;
  }
  out << failed << " of " << total << " checks failed\n";
  return kCheckFailed;
}

int cmd_cost_report(const Options& o, std::ostream& out) {
  const json doc = load_config(o);
  const Section sec(doc, "cost_report");
  CostCheckConfig c;
  c.seed = resolve_seed(o, doc);
  const std::string tie = resolve_string(o.tie_policy, doc, "tie_policy", "random");
  c.tie_policy = tie_from(tie);
  c.sessions = o.quick ? 1000 : sec.get<std::size_t>("sessions", c.sessions);
  c.slots = sec.get<std::size_t>("slots", c.slots);
  c.alphas = sec.get("alphas", c.alphas);
  c.ramps = sec.get("ramps", c.ramps);
  std::vector<std::string> modes;
  for (auto m : c.modes) modes.emplace_back(to_string(m));
  modes = sec.get("modes", modes);
  c.modes.clear();
  for (const auto& m : modes) {
    try {
      c.modes.push_back(parse_mixing_mode(m));
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }

  const json resolved = {{"command", "cost-report"}, {"seed", c.seed},   {"tie_policy", tie},
                         {"sessions", c.sessions},   {"slots", c.slots}, {"alphas", c.alphas},
                         {"ramps", c.ramps},         {"modes", modes}};
  const fs::path dir = prepare_out(o.out);
  std::vector<CostCheckRow> rows;
  try {
    rows = cost_check(c, Execution{o.workers});
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  CsvFile csv(dir / "cost_report.csv", resolved, "mode,ramp,alpha,analytic,measured,relative_error");
  double worst = 0.0;
  for (const auto& r : rows) {
    csv.row(to_string(r.mode), ramp_label(r.ramp), r.alpha, r.analytic, r.measured, r.relative_error);
    worst = std::max(worst, r.relative_error);
  }
  write_json(dir / "cost_report_summary.json",
             {{"config", resolved}, {"rows", rows.size()}, {"max_relative_error", worst}});
  out << "cost-report: " << rows.size() << " rows, max relative error " << worst << '\n';
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Producer-side experiment design simulator"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "JSON config file")->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "Master seed (overrides config and UNICORN_LAB_SEED)");
    sub->add_option("--out", o.out, "Output directory")->capture_default_str();
    sub->add_option("--workers", o.workers, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
    sub->add_flag("--quick", o.quick, "Scaled-down smoke run");
    sub->add_option("--tie-policy", o.tie_policy, "random | favor-treatment")
        ->check(CLI::IsMember({"random", "favor-treatment", "favor-higher-arm"}));
  };

  auto* sweep = app.add_subcommand("alpha-sweep", "Ranking error and cost over alpha (Gaussian scores)");
  auto* compare = app.add_subcommand("compare", "Treatment-effect error of each design (marketplace)");
  auto* verify = app.add_subcommand("verify", "Optimality and bias/variance bound checks");
  auto* cost = app.add_subcommand("cost-report", "Measured scoring cost against the closed forms");
  for (auto* s : {sweep, compare, verify, cost}) add_common(s);
  compare->add_option("--log-base", o.log_base, "Logarithm base of the response function")
      ->check(CLI::IsMember({"e", "10"}));
  verify->add_flag("--adversarial-only", o.adversarial_only, "Only reverse-ranked sessions");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kUsage;
  }

  try {
    if (*sweep) return cmd_alpha_sweep(o, out);
    if (*compare) return cmd_compare(o, out);
    if (*verify) return cmd_verify(o, out);
    if (*cost) return cmd_cost_report(o, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}

}  // namespace unicorn::cli

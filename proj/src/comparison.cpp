#include <algorithm>
#include <charconv>
#include <cstdio>
#include <exception>
#include <stdexcept>
#include <string>

#include "unicorn/designs.hpp"
#include "unicorn/simulation.hpp"

namespace unicorn {

std::string Method::name() const {
  switch (kind) {
    case MethodKind::Oasis:
      return "oasis";
    case MethodKind::SmallRamp:
      return "small-ramp";
    case MethodKind::UniCoRn:
      break;
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "unicorn(%g)", alpha);
  return buf;
}

Method Method::parse(std::string_view s) {
  if (s == "oasis") return {MethodKind::Oasis, 0.0};
  if (s == "small-ramp" || s == "smallramp") return {MethodKind::SmallRamp, 1.0};
  constexpr std::string_view prefix = "unicorn(";
  if (s.starts_with(prefix) && s.ends_with(")")) {
    const auto body = s.substr(prefix.size(), s.size() - prefix.size() - 1);
    double a = 0.0;
    const auto [ptr, ec] = std::from_chars(body.data(), body.data() + body.size(), a);
    if (ec == std::errc() && ptr == body.data() + body.size() && a >= 0.0 && a <= 1.0) {
      return {MethodKind::UniCoRn, a};
    }
  }
  throw std::invalid_argument("unknown method '" + std::string(s) +
                              "' (expected unicorn(A), oasis or small-ramp)");
}

std::vector<Method> default_methods() {
  return {{MethodKind::UniCoRn, 0.0},
          {MethodKind::UniCoRn, 0.2},
          {MethodKind::UniCoRn, 1.0},
          {MethodKind::Oasis, 0.0},
          {MethodKind::SmallRamp, 1.0}};
}

namespace {

// Stream keys of one replication.
enum : std::uint64_t { kEnv = 1, kTruth = 2, kAllocation = 3, kDesign = 4, kSmallRampAllocation = 5 };

DesignOutput run_method(const Method& m, const Session& session, const TreatmentAllocation& two_arm,
                        const TreatmentAllocation& three_arm, TiePolicy tie, Rng& rng) {
  switch (m.kind) {
    case MethodKind::UniCoRn:
      return unicorn_rank(session, two_arm, DesignConfig{m.alpha, MixingMode::SingleTreatment, tie}, rng);
    case MethodKind::Oasis:
      return oasis_rank(session, two_arm, rng, tie);
    case MethodKind::SmallRamp:
      return small_ramp_rank(session, three_arm, rng, tie);
  }
  throw std::logic_error("unhandled method");
}

}  // namespace

ComparisonResult run_replication(const ComparisonConfig& config, std::size_t replication) {
  const std::uint64_t rep_seed = derive_seed(config.seed, {replication});
  MarketplaceEnvConfig env = config.env;
  env.seed = derive_seed(rep_seed, {kEnv});
  const Marketplace market = gen_marketplace_sessions(env);

  const ResponseFunction fns[2] = {{Aggregation::Avg, config.log_base, {}},
                                   {Aggregation::Max, config.log_base, {}}};
  const std::uint64_t truth_seed = derive_seed(rep_seed, {kTruth});
  const double truth[2] = {ground_truth_ate(market.sessions, fns[0], truth_seed, config.tie_policy),
                           ground_truth_ate(market.sessions, fns[1], truth_seed, config.tie_policy)};

  const auto three_arm = TreatmentAllocation::hashed(RampFractions({0.8, 0.1, 0.1}),
                                                     derive_seed(rep_seed, {kSmallRampAllocation}));
  const double items = static_cast<double>(env.sessions * env.slots);

  ComparisonResult out;
  for (std::size_t t = 0; t < config.treatment_fractions.size(); ++t) {
    const double tp = config.treatment_fractions[t];
    const auto two_arm =
        TreatmentAllocation::hashed(RampFractions::two_arm(tp), derive_seed(rep_seed, {kAllocation, t}));
    for (std::size_t mi = 0; mi < config.methods.size(); ++mi) {
      const Method& method = config.methods[mi];
      ResponseAccumulator acc[2] = {ResponseAccumulator(fns[0]), ResponseAccumulator(fns[1])};
      CostLedger ledger;
      for (std::size_t s = 0; s < market.sessions.size(); ++s) {
        const Session& session = market.sessions[s];
        Rng rng = Rng::derive(rep_seed, {kDesign, t, mi, s});
        const DesignOutput d = run_method(method, session, two_arm, three_arm, config.tie_policy, rng);
        acc[0].add(session, d.ranking.ranks());
        acc[1].add(session, d.ranking.ranks());
        ledger.merge(d.ledger);
      }
      const bool small_ramp = method.kind == MethodKind::SmallRamp;
      const TreatmentAllocation& alloc = small_ramp ? three_arm : two_arm;
      for (std::size_t f = 0; f < 2; ++f) {
        const AteResult r = estimate_ate(acc[f].responses(), alloc, small_ramp ? 2 : 1,
                                         small_ramp ? 1 : 0, truth[f]);
        out.errors.push_back({method.name(), fns[f].name(), tp, replication, r.estimate, truth[f], r.error});
      }
      out.costs.push_back({method.name(), tp, replication, static_cast<double>(ledger.total()) / items});
    }
  }
  return out;
}

namespace {

void validate(const ComparisonConfig& config) {
  config.env.validate();
  if (config.replications == 0) throw std::invalid_argument("replications must be positive");
  if (config.methods.empty()) throw std::invalid_argument("no methods selected");
  for (double tp : config.treatment_fractions) {
    if (!(tp > 0.0 && tp < 1.0)) throw std::invalid_argument("treatment fraction must lie in (0, 1)");
  }
}

ComparisonResult concat(std::vector<ComparisonResult>& parts) {
  ComparisonResult out;
  for (auto& p : parts) {
    out.errors.insert(out.errors.end(), p.errors.begin(), p.errors.end());
    out.costs.insert(out.costs.end(), p.costs.begin(), p.costs.end());
  }
  return out;
}

}  // namespace

ComparisonResult run_comparison(const ComparisonConfig& config, const Execution& exec) {
  validate(config);
  std::vector<ComparisonResult> parts(config.replications);
  const auto n = static_cast<std::int64_t>(config.replications);
  const int workers = static_cast<int>(std::max<std::size_t>(1, exec.workers));
  std::exception_ptr failure;
#pragma omp parallel for num_threads(workers) schedule(dynamic)
  for (std::int64_t r = 0; r < n; ++r) {
    try {
      parts[static_cast<std::size_t>(r)] = run_replication(config, static_cast<std::size_t>(r));
    } catch (...) {
#pragma omp critical(unicorn_comparison_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return concat(parts);
}

ComparisonResult run_comparison_serial(const ComparisonConfig& config) {
  validate(config);
  std::vector<ComparisonResult> parts;
  parts.reserve(config.replications);
  for (std::size_t r = 0; r < config.replications; ++r) parts.push_back(run_replication(config, r));
  return concat(parts);
}

}  // namespace unicorn

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "unicorn/allocation.hpp"
#include "unicorn/core.hpp"
#include "unicorn/parallel.hpp"
#include "unicorn/rng.hpp"

namespace unicorn {

// ---------------------------------------------------------------------------
// Environments

/// Correlated Gaussian scores; every item is its own producer.
struct GaussianEnvConfig {
  double rho = 0.8;
  std::size_t slots = 100;
  std::size_t sessions = 50000;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Session `index` of the environment; a pure function of (config, index).
Session gen_gaussian_session(const GaussianEnvConfig& config, std::uint64_t index);
std::vector<Session> gen_gaussian_sessions(const GaussianEnvConfig& config);

/// Producers with Beta(a, b) quality; each session draws `slots` producers
/// with replacement. Control score ~ U[q, 1 + q], treatment score ~ U[q, 2q].
struct MarketplaceEnvConfig {
  std::size_t producers = 1000;
  std::size_t slots = 100;
  std::size_t sessions = 1000;
  unsigned quality_a = 2;
  unsigned quality_b = 5;
  std::uint64_t seed = 0;

  void validate() const;
};

struct Marketplace {
  std::vector<ProducerId> producers;
  std::vector<double> quality;  ///< aligned with `producers`
  std::vector<Session> sessions;
};

Marketplace gen_marketplace_sessions(const MarketplaceEnvConfig& config);

// ---------------------------------------------------------------------------
// Producer responses

enum class Aggregation { Avg, Max };
enum class LogBase { Natural, Ten };

std::string_view to_string(Aggregation a);
std::string_view to_string(LogBase b);
/// "e" or "10".
LogBase parse_log_base(std::string_view s);

/// Rank-to-response: (10 / log(10 + rank))^2 per appearance, aggregated per
/// producer by mean (avg_fn) or max (max_fn).
struct ResponseFunction {
  Aggregation aggregation = Aggregation::Avg;
  LogBase log_base = LogBase::Natural;
  /// Replaces the per-appearance exposure when set.
  std::function<double(Rank)> custom_exposure;

  double exposure(Rank rank) const;
  std::string name() const;  ///< "avg_fn" / "max_fn"
};

/// Per-producer running sums over item appearances.
class ResponseAccumulator {
 public:
  explicit ResponseAccumulator(const ResponseFunction& fn) : fn_(&fn) {}

  void add(const Session& session, std::span<const Rank> ranks);
  /// Producers with at least one appearance, ascending id.
  std::map<ProducerId, double> responses() const;

 private:
  struct Entry {
    double sum = 0.0;
    double max = 0.0;
    std::uint64_t count = 0;
  };
  const ResponseFunction* fn_;
  std::map<ProducerId, Entry> entries_;
};

/// Empty when the producer never appears.
std::optional<double> producer_response(std::span<const Session> sessions,
                                        std::span<const RankingSet> rankings, ProducerId producer,
                                        const ResponseFunction& fn);
std::map<ProducerId, double> producer_responses(std::span<const Session> sessions,
                                                std::span<const RankingSet> rankings,
                                                const ResponseFunction& fn);

// ---------------------------------------------------------------------------
// Treatment effect

struct AteResult {
  double estimate = 0.0;
  double ground_truth = 0.0;
  double error = 0.0;  ///< estimate - ground_truth
  double treatment_mean = 0.0;
  double control_mean = 0.0;
  std::size_t treatment_producers = 0;
  std::size_t control_producers = 0;
};

/// Mean response of `treatment_arm` producers minus mean of `control_arm`
/// producers. Throws when either arm has no responding producer.
AteResult estimate_ate(const std::map<ProducerId, double>& responses,
                       const TreatmentAllocation& allocation, std::size_t treatment_arm = 1,
                       std::size_t control_arm = 0, double ground_truth = 0.0);

/// Mean producer-level difference between the all-T_1 and all-T_0 rollouts.
/// Producers absent from every session are excluded.
double ground_truth_ate(std::span<const Session> sessions, const ResponseFunction& fn,
                        std::uint64_t seed, TiePolicy tie_policy = TiePolicy::Random);

// ---------------------------------------------------------------------------
// Method comparison

enum class MethodKind { UniCoRn, Oasis, SmallRamp };

struct Method {
  MethodKind kind = MethodKind::UniCoRn;
  double alpha = 0.0;

  std::string name() const;  ///< "unicorn(0.2)", "oasis", "small-ramp"
  static Method parse(std::string_view s);
};

std::vector<Method> default_methods();

struct ComparisonConfig {
  MarketplaceEnvConfig env;  ///< env.seed is ignored; replications derive their own
  std::size_t replications = 100;
  std::vector<double> treatment_fractions{0.1, 0.5};
  std::vector<Method> methods = default_methods();
  LogBase log_base = LogBase::Natural;
  TiePolicy tie_policy = TiePolicy::Random;
  std::uint64_t seed = 0;
};

struct AteErrorRow {
  std::string method;
  std::string fn;
  double tp = 0.0;
  std::size_t replication = 0;
  double estimate = 0.0;
  double truth = 0.0;
  double error = 0.0;
};

struct CostRow {
  std::string method;
  double tp = 0.0;
  std::size_t replication = 0;
  double cost_per_item = 0.0;
};

struct ComparisonResult {
  std::vector<AteErrorRow> errors;  ///< replication, tp, method, fn order
  std::vector<CostRow> costs;
};

/// One replication: fresh marketplace and allocations, every method reranked,
/// ATE estimated for both response functions.
ComparisonResult run_replication(const ComparisonConfig& config, std::size_t replication);

/// OpenMP over replications.
ComparisonResult run_comparison(const ComparisonConfig& config, const Execution& exec = {});
/// Serial reference for run_comparison.
ComparisonResult run_comparison_serial(const ComparisonConfig& config);

}  // namespace unicorn

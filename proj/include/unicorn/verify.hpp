#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "unicorn/core.hpp"
#include "unicorn/designs.hpp"
#include "unicorn/metrics.hpp"
#include "unicorn/parallel.hpp"
#include "unicorn/simulation.hpp"

namespace unicorn {

// ---------------------------------------------------------------------------
// Optimality of UniCoRn(1) against every permutation

struct OptimalityTrial {
  std::size_t trial = 0;
  std::size_t session_size = 0;
  bool adversarial = false;       ///< T_1 = -T_0
  std::uint64_t seed = 0;         ///< trial stream
  std::uint64_t design_error = 0;  ///< sum over items of (R_D - R*)^2
  std::uint64_t minimum_error = 0;  ///< minimum over all n! permutations
  bool pass = false;
};

struct OptimalityReport {
  std::size_t trials = 0;
  std::size_t passed = 0;
  std::vector<OptimalityTrial> failures;  ///< at most the first 20
  bool pass() const noexcept { return passed == trials; }
};

/// Minimum of sum_i (sigma(i) - ideal[i])^2 over permutations sigma of 1..n,
/// by exhaustive enumeration. Throws for n > 7.
std::uint64_t enumerated_minimum(std::span<const Rank> ideal);

/// One trial: random scores (every fourth trial reverse-ranked), a fixed
/// random allocation and a fixed tie resolution for R*.
OptimalityTrial optimality_trial(std::size_t session_size, std::uint64_t seed, bool adversarial,
                                 TiePolicy tie_policy = TiePolicy::Random);

/// Trials cycle through `sizes`; throws if any size exceeds 7.
OptimalityReport brute_force_optimality(std::span<const std::size_t> sizes, std::size_t trials,
                                        std::uint64_t seed, const Execution& exec = {});
OptimalityReport brute_force_optimality_serial(std::span<const std::size_t> sizes, std::size_t trials,
                                               std::uint64_t seed);

// ---------------------------------------------------------------------------
// Conditional bias / variance bounds

enum class SessionKind { RandomScores, ReverseRanked };
std::string_view to_string(SessionKind k);

/// Fixed session of the check: i.i.d. normal T_0 and T_1, or T_0 descending
/// with T_1 = -T_0. Each item is its own producer.
Session bound_check_session(std::size_t session_size, SessionKind kind, std::uint64_t seed);

struct BoundCheck {
  SessionKind kind = SessionKind::RandomScores;
  std::size_t session_size = 0;
  double p1 = 0.0;
  std::size_t reps = 0;
  BoundReport report;
  std::size_t violations = 0;
  /// Cells where equality is required (reverse-ranked, r != (n + 1) / 2).
  std::size_t equality_cells = 0;
  std::size_t bias_equality_failures = 0;
  /// Reported only; the pass flag rests on the bias equality.
  std::size_t variance_equality_failures = 0;
  bool pass = false;
};

struct BoundCheckConfig {
  std::vector<double> p1_grid{0.1, 0.3, 0.5, 0.7, 0.9};
  std::vector<std::size_t> sizes{5, 7};
  std::size_t reps = 20000;
  bool adversarial_only = false;
  double slack_se = 3.0;
  TiePolicy tie_policy = TiePolicy::Random;
  std::uint64_t seed = 0;
};

/// Monte Carlo over `reps` per-item Bernoulli(p1) allocations of one fixed session.
BoundAccumulator bound_moments(const Session& session, double p1, std::size_t reps,
                               std::uint64_t seed, TiePolicy tie_policy, const Execution& exec = {});
BoundAccumulator bound_moments_serial(const Session& session, double p1, std::size_t reps,
                                      std::uint64_t seed, TiePolicy tie_policy);

std::vector<BoundCheck> check_bias_variance(const BoundCheckConfig& config, const Execution& exec = {});

// ---------------------------------------------------------------------------
// Cost / inaccuracy trade-off over alpha

struct AlphaSweepConfig {
  GaussianEnvConfig env;  ///< env.rho is replaced by each entry of `rhos`
  std::vector<double> rhos{-1.0, -0.4, -0.2, 0.2, 0.8};
  std::vector<double> treatment_fractions{0.1, 0.5};
  std::vector<double> alphas{0.0, 0.25, 0.5, 0.75, 1.0};
  TiePolicy tie_policy = TiePolicy::Random;
  std::uint64_t seed = 0;
};

struct AlphaSweepRow {
  double rho = 0.0;
  double tp = 0.0;
  double alpha = 0.0;
  double inaccuracy = 0.0;
  double mean_rmse = 0.0;
  double mean_mae = 0.0;
  double analytic_cost = 0.0;  ///< per item, unit model costs
  double measured_cost = 0.0;  ///< ledger total per item
  PositionErrorProfile profile;
};

/// Rows ordered by (rho, tp, alpha) as listed in the config. Sessions and
/// allocations are shared across alphas within one (rho, tp) cell.
std::vector<AlphaSweepRow> alpha_sweep(const AlphaSweepConfig& config, const Execution& exec = {});
std::vector<AlphaSweepRow> alpha_sweep_serial(const AlphaSweepConfig& config);

// ---------------------------------------------------------------------------
// Measured scoring cost against the closed forms

struct CostCheckConfig {
  std::vector<MixingMode> modes{MixingMode::SingleTreatment, MixingMode::GreaterMixing,
                                MixingMode::LimitedMixing};
  /// SingleTreatment rows are produced for two-arm ramps only.
  std::vector<std::vector<double>> ramps{{0.5, 0.5}, {0.9, 0.1}, {0.5, 0.25, 0.25}, {0.6, 0.2, 0.1, 0.1}};
  std::vector<double> alphas{0.0, 0.2, 0.5, 1.0};
  std::size_t sessions = 10000;
  std::size_t slots = 100;
  TiePolicy tie_policy = TiePolicy::Random;
  std::uint64_t seed = 0;
};

struct CostCheckRow {
  MixingMode mode = MixingMode::SingleTreatment;
  std::vector<double> ramp;
  double alpha = 0.0;
  double analytic = 0.0;  ///< per item, unit cost per model call
  double measured = 0.0;  ///< ledger total per item
  double relative_error = 0.0;
};

/// Independent normal scores for every arm; each item is its own producer.
Session cost_check_session(std::size_t slots, std::size_t arm_count, std::uint64_t seed, std::uint64_t index);

/// Rows ordered by (ramp, mode, alpha) as listed in the config.
std::vector<CostCheckRow> cost_check(const CostCheckConfig& config, const Execution& exec = {});
std::vector<CostCheckRow> cost_check_serial(const CostCheckConfig& config);

}  // namespace unicorn

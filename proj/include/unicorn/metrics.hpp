#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "unicorn/allocation.hpp"
#include "unicorn/core.hpp"
#include "unicorn/designs.hpp"

namespace unicorn {

// ---------------------------------------------------------------------------
// Ranking error by ideal position

struct PositionError {
  double mae = 0.0;
  double rmse = 0.0;
  std::uint64_t count = 0;
};

struct PositionErrorProfile {
  /// Index l - 1 holds position l; empty when no item had R* = l.
  std::vector<std::optional<PositionError>> by_position;

  /// Unweighted mean of RMSE over positions that have samples.
  double mean_rmse() const;
  double mean_mae() const;
  /// Count-weighted mean of RMSE^2, i.e. the pooled mean squared error.
  double pooled_mse() const;
};

/// Streaming accumulator. Sums are integers, so merge order never changes the result.
class PositionErrorAccumulator {
 public:
  explicit PositionErrorAccumulator(std::size_t max_position = 0);

  void add(std::span<const Rank> design, std::span<const Rank> ideal);
  void merge(const PositionErrorAccumulator& other);

  PositionErrorProfile profile() const;
  /// Mean squared error over every (item, session) pair seen.
  double inaccuracy() const;
  std::uint64_t samples() const noexcept { return samples_; }

  friend bool operator==(const PositionErrorAccumulator&, const PositionErrorAccumulator&) = default;

 private:
  void grow(std::size_t positions);

  std::vector<std::uint64_t> count_;
  std::vector<std::uint64_t> abs_sum_;
  std::vector<std::uint64_t> sq_sum_;
  std::uint64_t samples_ = 0;
  std::uint64_t total_sq_ = 0;
};

/// Mean over all (item, session) pairs of (R_D - R*)^2. Throws when the two
/// sides disagree on sessions or items.
double inaccuracy(std::span<const RankingSet> design, std::span<const RankingSet> ideal);

PositionErrorProfile position_errors(std::span<const RankingSet> design,
                                     std::span<const RankingSet> ideal);

// ---------------------------------------------------------------------------
// Cost

/// Closed-form expected scoring cost. unit_costs[k] is the cost of scoring
/// every item with T_k.
double analytic_cost(const DesignConfig& config, const RampFractions& ramp,
                     std::span<const double> unit_costs);

// ---------------------------------------------------------------------------
// Conditional bias / variance against the alpha = 1 bounds

/// One item of one Monte Carlo run: its arm, its ideal rank and the rank the design gave it.
struct RankObservation {
  std::size_t arm = 0;
  Rank ideal = 0;
  Rank design = 0;
};

/// c(k, p1) = {k(1 - p1) + (1 - k) p1} / 2.
double bias_bound(std::size_t arm, double p1);
/// 2 min(r - 1, n - r) p1 (1 - p1) + c (1 - c).
double variance_bound(std::size_t arm, double p1, Rank r, std::size_t session_size);

struct BoundCell {
  std::size_t arm = 0;
  Rank r = 0;
  std::uint64_t samples = 0;
  double bias = 0.0;
  double variance = 0.0;
  double bias_se = 0.0;
  double variance_se = 0.0;
  double bias_bound = 0.0;
  double variance_bound = 0.0;
  bool skipped = false;  ///< fewer than the minimum sample count
  bool bias_violation = false;
  bool variance_violation = false;
  /// |bias| within `slack` SE of c; meaningful for reverse-ranked sessions.
  bool bias_attains_bound = false;
  bool variance_attains_bound = false;
};

struct BoundReport {
  double p1 = 0.0;
  std::size_t session_size = 0;
  double slack_se = 3.0;
  std::vector<BoundCell> cells;  ///< sorted by (arm, r)
  std::vector<std::string> warnings;

  std::size_t violations() const;
};

/// Integer moment sums of (R_D - R*) per (arm, r) cell; mergeable in any order.
class BoundAccumulator {
 public:
  BoundAccumulator(std::size_t session_size, std::size_t arm_count = 2);

  void add(const RankObservation& obs);
  void add(std::span<const std::size_t> arms, std::span<const Rank> ideal,
           std::span<const Rank> design);
  void merge(const BoundAccumulator& other);

  BoundReport report(double p1, double slack_se = 3.0, std::uint64_t min_samples = 100) const;

  friend bool operator==(const BoundAccumulator&, const BoundAccumulator&) = default;

 private:
  struct Moments {
    std::uint64_t n = 0;
    std::int64_t s1 = 0;
    std::int64_t s2 = 0;
    std::int64_t s3 = 0;
    std::int64_t s4 = 0;
    friend bool operator==(const Moments&, const Moments&) = default;
  };
  std::size_t session_size_;
  std::size_t arm_count_;
  std::vector<Moments> cells_;  ///< arm * session_size + (r - 1)
};

/// Groups observations by (arm, r) and compares empirical conditional bias and
/// variance with the bounds, using `slack_se` standard errors. Cells with
/// fewer than 100 samples are skipped with a warning.
BoundReport bound_report(std::span<const RankObservation> runs, double p1, std::size_t session_size,
                         double slack_se = 3.0);

}  // namespace unicorn

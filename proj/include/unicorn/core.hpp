#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "unicorn/rng.hpp"

namespace unicorn {

enum class ItemId : std::uint64_t {};
enum class ProducerId : std::uint64_t {};

constexpr std::uint64_t value(ItemId id) noexcept { return static_cast<std::uint64_t>(id); }
constexpr std::uint64_t value(ProducerId id) noexcept { return static_cast<std::uint64_t>(id); }

/// 1-based rank; 1 is the top slot.
using Rank = std::uint32_t;

/// A model score: either a finite real or the minus-infinity sentinel used for
/// items a candidate generator did not select. Ordering is total.
class Score {
 public:
  constexpr Score() = default;
  /// Throws std::invalid_argument on NaN or +inf; -inf maps to the sentinel.
  explicit Score(double v);

  static constexpr Score minus_infinity() noexcept {
    Score s;
    s.minus_infinity_ = true;
    return s;
  }

  constexpr bool is_minus_infinity() const noexcept { return minus_infinity_; }
  /// Finite value; 0 for the sentinel.
  constexpr double value() const noexcept { return value_; }

  friend std::weak_ordering operator<=>(const Score& a, const Score& b) noexcept;
  friend bool operator==(const Score& a, const Score& b) noexcept {
    return (a <=> b) == std::weak_ordering::equivalent;
  }

 private:
  double value_ = 0.0;
  bool minus_infinity_ = false;
};

std::vector<Score> to_scores(std::span<const double> values);

enum class TiePolicy { Random, FavorHigherArm };

std::string_view to_string(TiePolicy p);
/// Accepts "random" and "favor-treatment" (alias "favor-higher-arm").
TiePolicy parse_tie_policy(std::string_view s);

struct Item {
  ItemId id;
  ProducerId producer;
};

/// One consumer request: its candidate items and one score table per model.
/// Score tables are indexed by model k and then by item position.
class Session {
 public:
  Session(std::uint64_t id, std::vector<Item> items,
          std::vector<std::vector<Score>> scores = {});

  std::uint64_t id() const noexcept { return id_; }
  std::size_t size() const noexcept { return items_.size(); }
  std::span<const Item> items() const noexcept { return items_; }
  const Item& item(std::size_t pos) const { return items_.at(pos); }
  std::vector<ItemId> item_ids() const;

  std::size_t model_count() const noexcept { return scores_.size(); }
  std::span<const Score> scores(std::size_t model) const;
  Score score(std::size_t model, std::size_t pos) const { return scores(model)[pos]; }

  /// Position of an item id; throws std::out_of_range when absent.
  std::size_t position_of(ItemId id) const;

  /// New session restricted to `positions` (kept in the given order).
  Session subset(std::span<const std::size_t> positions) const;

 private:
  std::uint64_t id_;
  std::vector<Item> items_;
  std::vector<std::vector<Score>> scores_;
};

/// Scoring-function invocation counts per model (the cost N_D).
class CostLedger {
 public:
  explicit CostLedger(std::size_t models = 0) : calls_(models, 0) {}

  void charge(std::size_t model, std::uint64_t n = 1);
  std::uint64_t calls(std::size_t model) const { return model < calls_.size() ? calls_[model] : 0; }
  std::uint64_t total() const noexcept;
  std::size_t models() const noexcept { return calls_.size(); }

  CostLedger& merge(const CostLedger& other);

  friend bool operator==(const CostLedger&, const CostLedger&) = default;

 private:
  std::vector<std::uint64_t> calls_;
};

class ScoringModel {
 public:
  virtual ~ScoringModel() = default;
  virtual Score score(const Session& session, std::size_t pos) const = 0;
};

/// Reads the session's own score table for model k.
class TableModel final : public ScoringModel {
 public:
  explicit TableModel(std::size_t model) : model_(model) {}
  Score score(const Session& session, std::size_t pos) const override {
    return session.score(model_, pos);
  }

 private:
  std::size_t model_;
};

class FunctionModel final : public ScoringModel {
 public:
  using Fn = std::function<Score(const Session&, std::size_t)>;
  explicit FunctionModel(Fn fn) : fn_(std::move(fn)) {}
  Score score(const Session& session, std::size_t pos) const override { return fn_(session, pos); }

 private:
  Fn fn_;
};

/// Charges every invocation of the wrapped model to one ledger slot.
class CountingModel final : public ScoringModel {
 public:
  CountingModel(const ScoringModel& inner, CostLedger& ledger, std::size_t slot)
      : inner_(&inner), ledger_(&ledger), slot_(slot) {}
  Score score(const Session& session, std::size_t pos) const override {
    ledger_->charge(slot_);
    return inner_->score(session, pos);
  }

 private:
  const ScoringModel* inner_;
  CostLedger* ledger_;
  std::size_t slot_;
};

/// Map from item to rank. Design rankings are permutations of 1..n; the ideal
/// ranking may assign one rank to several items.
class RankingSet {
 public:
  RankingSet() = default;
  RankingSet(std::vector<ItemId> items, std::vector<Rank> ranks);

  std::size_t size() const noexcept { return ranks_.size(); }
  std::span<const ItemId> items() const noexcept { return items_; }
  std::span<const Rank> ranks() const noexcept { return ranks_; }
  Rank rank(std::size_t pos) const { return ranks_.at(pos); }
  Rank rank_of(ItemId id) const;

  bool is_permutation() const;
  /// Items best-first; equal ranks keep their listed order.
  std::vector<ItemId> ordering() const;

  friend bool operator==(const RankingSet&, const RankingSet&) = default;

 private:
  std::vector<ItemId> items_;
  std::vector<Rank> ranks_;
};

/// Orders positions [0, n) best-first by descending score. Equal scores are
/// resolved by `policy`; FavorHigherArm needs `arms` and falls back to a fair
/// random draw between items of the same arm.
std::vector<std::size_t> order_by_score(std::span<const Score> scores, TiePolicy policy,
                                        Rng& rng, std::span<const std::size_t> arms = {});

/// Inverse of an ordering: ranks[order[j]] = j + 1.
std::vector<Rank> ranks_from_order(std::span<const std::size_t> order);

/// Ranks aligned with `scores`. Errors: empty input, FavorHigherArm without arms.
std::vector<Rank> rank_positions(std::span<const Score> scores, TiePolicy policy, Rng& rng,
                                 std::span<const std::size_t> arms = {});

RankingSet rank_by_scores(std::span<const ItemId> items, std::span<const Score> scores,
                          TiePolicy policy, Rng& rng, std::span<const std::size_t> arms = {});
/// Throws std::invalid_argument on NaN.
RankingSet rank_by_scores(std::span<const ItemId> items, std::span<const double> scores,
                          TiePolicy policy, Rng& rng, std::span<const std::size_t> arms = {});
RankingSet rank_by_scores(const Session& session, std::size_t model, TiePolicy policy, Rng& rng,
                          std::span<const std::size_t> arms = {});

/// R*: each item's rank when every item is ranked by its own arm's model.
/// `arms[pos]` is the arm of the item at `pos`. Ties inside each counterfactual
/// ranking follow `policy`.
std::vector<Rank> ideal_ranks(const Session& session, std::span<const std::size_t> arms,
                              TiePolicy policy, Rng& rng);

class TreatmentAllocation;

/// Arm index of every item in the session, by producer.
std::vector<std::size_t> session_arms(const Session& session, const TreatmentAllocation& allocation);

RankingSet ideal_rank(const Session& session, const TreatmentAllocation& allocation,
                      TiePolicy policy, Rng& rng);

}  // namespace unicorn

#include "unicorn/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_set>

#include "unicorn/allocation.hpp"
#include "unicorn/detail/tie_order.hpp"

namespace unicorn {

Score::Score(double v) {
  if (std::isnan(v)) throw std::invalid_argument("score is NaN");
  if (std::isinf(v)) {
    if (v > 0) throw std::invalid_argument("score is +inf");
    minus_infinity_ = true;
    return;
  }
  value_ = v;
}

std::weak_ordering operator<=>(const Score& a, const Score& b) noexcept {
  if (a.minus_infinity_ || b.minus_infinity_) {
    return static_cast<int>(!a.minus_infinity_) <=> static_cast<int>(!b.minus_infinity_);
  }
  if (a.value_ < b.value_) return std::weak_ordering::less;
  if (b.value_ < a.value_) return std::weak_ordering::greater;
  return std::weak_ordering::equivalent;
}

std::vector<Score> to_scores(std::span<const double> values) {
  std::vector<Score> out;
  out.reserve(values.size());
  for (double v : values) out.emplace_back(v);
  return out;
}

std::string_view to_string(TiePolicy p) {
  switch (p) {
    case TiePolicy::Random:
      return "random";
    case TiePolicy::FavorHigherArm:
      return "favor-treatment";
  }
  return "unknown";
}

TiePolicy parse_tie_policy(std::string_view s) {
  if (s == "random") return TiePolicy::Random;
  if (s == "favor-treatment" || s == "favor-higher-arm") return TiePolicy::FavorHigherArm;
  throw std::invalid_argument("unknown tie policy: " + std::string(s));
}

// ---------------------------------------------------------------------------
// Session

Session::Session(std::uint64_t id, std::vector<Item> items, std::vector<std::vector<Score>> scores)
    : id_(id), items_(std::move(items)), scores_(std::move(scores)) {
  if (items_.empty()) throw std::invalid_argument("session has no items");
  for (const auto& table : scores_) {
    if (table.size() != items_.size()) {
      throw std::invalid_argument("score table size does not match item count");
    }
  }
  std::vector<std::uint64_t> ids;
  ids.reserve(items_.size());
  for (const auto& it : items_) ids.push_back(value(it.id));
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
    throw std::invalid_argument("duplicate item id in session " + std::to_string(id_));
  }
}

std::vector<ItemId> Session::item_ids() const {
  std::vector<ItemId> ids;
  ids.reserve(items_.size());
  for (const auto& it : items_) ids.push_back(it.id);
  return ids;
}

std::span<const Score> Session::scores(std::size_t model) const {
  if (model >= scores_.size()) {
    throw std::out_of_range("session " + std::to_string(id_) + " has no score table for model " +
                            std::to_string(model));
  }
  return scores_[model];
}

std::size_t Session::position_of(ItemId id) const {
  for (std::size_t i = 0; i < items_.size(); ++i) {
    if (items_[i].id == id) return i;
  }
  throw std::out_of_range("item not in session");
}

Session Session::subset(std::span<const std::size_t> positions) const {
  std::vector<Item> items;
  items.reserve(positions.size());
  for (std::size_t p : positions) items.push_back(items_.at(p));
  std::vector<std::vector<Score>> scores(scores_.size());
  for (std::size_t k = 0; k < scores_.size(); ++k) {
    scores[k].reserve(positions.size());
    for (std::size_t p : positions) scores[k].push_back(scores_[k][p]);
  }
  return Session(id_, std::move(items), std::move(scores));
}

// ---------------------------------------------------------------------------
// CostLedger

void CostLedger::charge(std::size_t model, std::uint64_t n) {
  if (model >= calls_.size()) calls_.resize(model + 1, 0);
  calls_[model] += n;
}

std::uint64_t CostLedger::total() const noexcept {
  return std::accumulate(calls_.begin(), calls_.end(), std::uint64_t{0});
}

CostLedger& CostLedger::merge(const CostLedger& other) {
  if (other.calls_.size() > calls_.size()) calls_.resize(other.calls_.size(), 0);
  for (std::size_t k = 0; k < other.calls_.size(); ++k) calls_[k] += other.calls_[k];
  return *this;
}

// ---------------------------------------------------------------------------
// RankingSet

RankingSet::RankingSet(std::vector<ItemId> items, std::vector<Rank> ranks)
    : items_(std::move(items)), ranks_(std::move(ranks)) {
  if (items_.size() != ranks_.size()) throw std::invalid_argument("items/ranks size mismatch");
  const auto n = static_cast<Rank>(ranks_.size());
  for (Rank r : ranks_) {
    if (r < 1 || r > n) throw std::invalid_argument("rank out of range 1..n");
  }
}

Rank RankingSet::rank_of(ItemId id) const {
  for (std::size_t i = 0; i < items_.size(); ++i) {
    if (items_[i] == id) return ranks_[i];
  }
  throw std::out_of_range("item not in ranking");
}

bool RankingSet::is_permutation() const {
  std::vector<bool> seen(ranks_.size() + 1, false);
  for (Rank r : ranks_) {
    if (seen[r]) return false;
    seen[r] = true;
  }
  return true;
}

std::vector<ItemId> RankingSet::ordering() const {
  std::vector<std::size_t> idx(ranks_.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return ranks_[a] < ranks_[b]; });
  std::vector<ItemId> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(items_[i]);
  return out;
}

// ---------------------------------------------------------------------------
// Ranking primitives

std::vector<std::size_t> order_by_score(std::span<const Score> scores, TiePolicy policy, Rng& rng,
                                        std::span<const std::size_t> arms) {
  if (scores.empty()) throw std::invalid_argument("cannot rank an empty score set");
  if (!arms.empty() && arms.size() != scores.size()) {
    throw std::invalid_argument("arms/scores size mismatch");
  }
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  detail::order_with_ties(
      idx, [&](std::size_t a, std::size_t b) { return scores[b] < scores[a]; }, arms, policy, rng);
  return idx;
}

std::vector<Rank> ranks_from_order(std::span<const std::size_t> order) {
  std::vector<Rank> ranks(order.size());
  for (std::size_t j = 0; j < order.size(); ++j) ranks[order[j]] = static_cast<Rank>(j + 1);
  return ranks;
}

std::vector<Rank> rank_positions(std::span<const Score> scores, TiePolicy policy, Rng& rng,
                                 std::span<const std::size_t> arms) {
  return ranks_from_order(order_by_score(scores, policy, rng, arms));
}

RankingSet rank_by_scores(std::span<const ItemId> items, std::span<const Score> scores,
                          TiePolicy policy, Rng& rng, std::span<const std::size_t> arms) {
  if (items.size() != scores.size()) throw std::invalid_argument("items/scores size mismatch");
  return RankingSet({items.begin(), items.end()}, rank_positions(scores, policy, rng, arms));
}

RankingSet rank_by_scores(std::span<const ItemId> items, std::span<const double> scores,
                          TiePolicy policy, Rng& rng, std::span<const std::size_t> arms) {
  const auto converted = to_scores(scores);
  return rank_by_scores(items, std::span<const Score>(converted), policy, rng, arms);
}

RankingSet rank_by_scores(const Session& session, std::size_t model, TiePolicy policy, Rng& rng,
                          std::span<const std::size_t> arms) {
  return RankingSet(session.item_ids(), rank_positions(session.scores(model), policy, rng, arms));
}

std::vector<Rank> ideal_ranks(const Session& session, std::span<const std::size_t> arms,
                              TiePolicy policy, Rng& rng) {
  if (arms.size() != session.size()) throw std::invalid_argument("arms/session size mismatch");
  std::vector<Rank> ideal(session.size(), 0);
  const std::size_t max_arm = *std::max_element(arms.begin(), arms.end());
  for (std::size_t k = 0; k <= max_arm; ++k) {
    if (std::find(arms.begin(), arms.end(), k) == arms.end()) continue;
    if (k >= session.model_count()) {
      throw std::invalid_argument("no score table for arm " + std::to_string(k));
    }
    const auto rk = rank_positions(session.scores(k), policy, rng, arms);
    for (std::size_t i = 0; i < arms.size(); ++i) {
      if (arms[i] == k) ideal[i] = rk[i];
    }
  }
  return ideal;
}

std::vector<std::size_t> session_arms(const Session& session, const TreatmentAllocation& allocation) {
  std::vector<std::size_t> arms;
  arms.reserve(session.size());
  for (const auto& it : session.items()) arms.push_back(allocation.arm_of(it.producer));
  return arms;
}

RankingSet ideal_rank(const Session& session, const TreatmentAllocation& allocation, TiePolicy policy,
                      Rng& rng) {
  const auto arms = session_arms(session, allocation);
  return RankingSet(session.item_ids(), ideal_ranks(session, arms, policy, rng));
}

}  // namespace unicorn

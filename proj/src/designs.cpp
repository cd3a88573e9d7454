#include "unicorn/designs.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "unicorn/detail/tie_order.hpp"

namespace unicorn {

std::string_view to_string(MixingMode m) {
  switch (m) {
    case MixingMode::SingleTreatment:
      return "single";
    case MixingMode::GreaterMixing:
      return "greater";
    case MixingMode::LimitedMixing:
      return "limited";
  }
  return "unknown";
}

MixingMode parse_mixing_mode(std::string_view s) {
  if (s == "single") return MixingMode::SingleTreatment;
  if (s == "greater") return MixingMode::GreaterMixing;
  if (s == "limited") return MixingMode::LimitedMixing;
  throw std::invalid_argument("unknown mixing mode: " + std::string(s));
}

void DesignConfig::validate(std::size_t arm_count) const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha outside [0, 1]");
  if (mixing_mode == MixingMode::SingleTreatment && arm_count != 2) {
    throw std::invalid_argument(
        "single-treatment UniCoRn needs exactly 2 arms; use unicorn_multi_rank with greater or "
        "limited mixing for " +
        std::to_string(arm_count) + " arms");
  }
  if (arm_count < 2) throw std::invalid_argument("design needs at least one treatment arm");
}

std::vector<std::size_t> FixedCandidates::generate(const Session& session) const {
  std::vector<std::size_t> out;
  for (ItemId id : ids_) {
    for (std::size_t i = 0; i < session.size(); ++i) {
      if (session.item(i).id == id) {
        out.push_back(i);
        break;
      }
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<std::size_t> TopScoreCandidates::generate(const Session& session) const {
  const auto scores = session.scores(model_);
  std::vector<std::size_t> idx(session.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return scores[b] < scores[a]; });
  idx.resize(std::min(count_, idx.size()));
  std::sort(idx.begin(), idx.end());
  return idx;
}

namespace {

std::vector<Score> gather(std::span<const Score> all, std::span<const std::size_t> positions) {
  std::vector<Score> out;
  out.reserve(positions.size());
  for (std::size_t p : positions) out.push_back(all[p]);
  return out;
}

/// Moves `items` into the slots their control ranks occupy, best slot first,
/// in ascending `key` order. Returns the slots.
template <class Before>
std::vector<Rank> rerank_in_place(std::span<const std::size_t> items, std::span<const Rank> control,
                                  std::span<const std::size_t> item_arms, Before before,
                                  TiePolicy policy, Rng& rng, std::vector<Rank>& ranks) {
  std::vector<Rank> slots;
  slots.reserve(items.size());
  for (std::size_t i : items) slots.push_back(control[i]);
  std::sort(slots.begin(), slots.end());
  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  detail::order_with_ties(order, before, item_arms, policy, rng);
  for (std::size_t j = 0; j < order.size(); ++j) ranks[items[order[j]]] = slots[j];
  return slots;
}

std::vector<const ScoringModel*> table_models(const Session& session, std::size_t arm_count,
                                              std::vector<TableModel>& storage) {
  if (session.model_count() < arm_count) {
    throw std::invalid_argument("session " + std::to_string(session.id()) + " has " +
                                std::to_string(session.model_count()) + " score tables, design needs " +
                                std::to_string(arm_count));
  }
  storage.clear();
  for (std::size_t k = 0; k < arm_count; ++k) storage.emplace_back(k);
  std::vector<const ScoringModel*> out;
  for (const auto& m : storage) out.push_back(&m);
  return out;
}

}  // namespace

DesignOutput unicorn_kernel(const Session& session, std::span<const std::size_t> arms,
                            std::span<const ScoringModel* const> models, const DesignConfig& config,
                            Rng& rng) {
  const std::size_t arm_count = models.size();
  config.validate(arm_count);
  if (arms.size() != session.size()) throw std::invalid_argument("arms/session size mismatch");
  const std::size_t n = session.size();
  const TiePolicy policy = config.tie_policy;

  DesignOutput out;
  out.ledger = CostLedger(arm_count);
  out.provenance = {"unicorn", config.alpha, rng.seed()};
  std::vector<CountingModel> scorer;
  scorer.reserve(arm_count);
  for (std::size_t k = 0; k < arm_count; ++k) scorer.emplace_back(*models[k], out.ledger, k);

  // Control ranking of every item.
  std::vector<Score> control_scores(n);
  for (std::size_t i = 0; i < n; ++i) control_scores[i] = scorer[0].score(session, i);
  const auto control = rank_positions(control_scores, policy, rng, arms);

  out.selection = config.mixing_mode == MixingMode::LimitedMixing
                      ? sample_every_arm(session, arms, arm_count, config.alpha, rng)
                      : sample_p0_star(session, arms, arm_count, config.alpha, rng);
  MixingSelection& sel = out.selection;
  std::vector<Rank> ranks = control;

  const auto& mix = sel.mixing_items;
  if (!mix.empty()) {
    const std::size_t m = mix.size();
    std::vector<std::size_t> mix_arms(m);
    for (std::size_t j = 0; j < m; ++j) mix_arms[j] = arms[mix[j]];

    // Relative rank of each mixing item under its own arm's model.
    std::vector<Rank> rank_score(m, 0);
    for (std::size_t k = 0; k < arm_count; ++k) {
      std::vector<Score> scores;
      if (k == 0) {
        scores = gather(control_scores, mix);
      } else {
        scores.resize(m);
        for (std::size_t j = 0; j < m; ++j) scores[j] = scorer[k].score(session, mix[j]);
      }
      if (std::find(mix_arms.begin(), mix_arms.end(), k) == mix_arms.end()) continue;
      const auto relative = rank_positions(scores, policy, rng, mix_arms);
      for (std::size_t j = 0; j < m; ++j) {
        if (mix_arms[j] == k) rank_score[j] = relative[j];
      }
    }
    sel.positions = rerank_in_place(
        mix, control, mix_arms, [&](std::size_t a, std::size_t b) { return rank_score[a] < rank_score[b]; },
        policy, rng, ranks);
  }

  if (config.mixing_mode == MixingMode::LimitedMixing) {
    // Unsampled treatment items: own-model order within their own control slots.
    for (std::size_t k = 1; k < arm_count; ++k) {
      std::vector<std::size_t> rest;
      std::set_difference(sel.arm_items[k].begin(), sel.arm_items[k].end(), sel.sampled[k].begin(),
                          sel.sampled[k].end(), std::back_inserter(rest));
      if (rest.empty()) continue;
      std::vector<Score> scores(rest.size());
      for (std::size_t j = 0; j < rest.size(); ++j) scores[j] = scorer[k].score(session, rest[j]);
      const std::vector<std::size_t> rest_arms(rest.size(), k);
      rerank_in_place(
          rest, control, rest_arms, [&](std::size_t a, std::size_t b) { return scores[b] < scores[a]; },
          policy, rng, ranks);
    }
  }

  out.ranking = RankingSet(session.item_ids(), std::move(ranks));
  return out;
}

DesignOutput unicorn_rank(const Session& session, const TreatmentAllocation& allocation,
                          std::span<const ScoringModel* const> models, const DesignConfig& config,
                          Rng& rng) {
  if (allocation.arm_count() != 2 || models.size() != 2) {
    throw std::invalid_argument("unicorn_rank handles one treatment; use unicorn_multi_rank for " +
                                std::to_string(allocation.arm_count()) + " arms");
  }
  if (config.mixing_mode != MixingMode::SingleTreatment) {
    throw std::invalid_argument("unicorn_rank expects the single-treatment mixing mode");
  }
  const auto arms = session_arms(session, allocation);
  return unicorn_kernel(session, arms, models, config, rng);
}

DesignOutput unicorn_rank(const Session& session, const TreatmentAllocation& allocation,
                          const DesignConfig& config, Rng& rng) {
  std::vector<TableModel> storage;
  const auto models = table_models(session, 2, storage);
  return unicorn_rank(session, allocation, models, config, rng);
}

DesignOutput unicorn_multi_rank(const Session& session, const TreatmentAllocation& allocation,
                                const DesignConfig& config, Rng& rng) {
  if (config.mixing_mode == MixingMode::SingleTreatment) {
    throw std::invalid_argument("unicorn_multi_rank expects greater or limited mixing");
  }
  if (allocation.arm_count() < 2) throw std::invalid_argument("no treatment arms (K = 0)");
  std::vector<TableModel> storage;
  const auto models = table_models(session, allocation.arm_count(), storage);
  const auto arms = session_arms(session, allocation);
  auto out = unicorn_kernel(session, arms, models, config, rng);
  out.provenance.design = std::string("unicorn-") + std::string(to_string(config.mixing_mode));
  return out;
}

namespace {

/// T_{C_k}: the wrapped model on selected items, minus infinity elsewhere.
class CandidateModel final : public ScoringModel {
 public:
  CandidateModel(const ScoringModel& inner, std::vector<bool> selected)
      : inner_(&inner), selected_(std::move(selected)) {}
  Score score(const Session& session, std::size_t pos) const override {
    return selected_[pos] ? inner_->score(session, pos) : Score::minus_infinity();
  }

 private:
  const ScoringModel* inner_;
  std::vector<bool> selected_;
};

}  // namespace

DesignOutput candgen_rank(const Session& session, const TreatmentAllocation& allocation,
                          const CandidateGenerator& c0, const CandidateGenerator& c1,
                          const DesignConfig& config, Rng& rng) {
  if (allocation.arm_count() != 2) throw std::invalid_argument("candgen_rank handles one treatment");
  const auto set0 = c0.generate(session);
  const auto set1 = c1.generate(session);
  if (set0.empty() && set1.empty()) throw std::invalid_argument("both candidate sets are empty");
  std::vector<std::size_t> all;
  std::set_union(set0.begin(), set0.end(), set1.begin(), set1.end(), std::back_inserter(all));

  const Session candidates = session.subset(all);
  std::vector<bool> in0(all.size(), false), in1(all.size(), false);
  for (std::size_t j = 0; j < all.size(); ++j) {
    in0[j] = std::binary_search(set0.begin(), set0.end(), all[j]);
    in1[j] = std::binary_search(set1.begin(), set1.end(), all[j]);
  }
  std::vector<TableModel> storage;
  const auto tables = table_models(candidates, 2, storage);
  const CandidateModel t0(*tables[0], std::move(in0));
  const CandidateModel t1(*tables[1], std::move(in1));
  const ScoringModel* models[] = {&t0, &t1};

  const auto arms = session_arms(candidates, allocation);
  auto out = unicorn_kernel(candidates, arms, models, config, rng);
  out.provenance.design = "unicorn-candgen";
  return out;
}

DesignOutput oasis_rank(const Session& session, const TreatmentAllocation& allocation, Rng& rng,
                        TiePolicy tie_policy) {
  const std::size_t arm_count = allocation.arm_count();
  std::vector<TableModel> storage;
  const auto models = table_models(session, arm_count, storage);
  const auto arms = session_arms(session, allocation);
  const std::size_t n = session.size();

  DesignOutput out;
  out.ledger = CostLedger(arm_count);
  out.provenance = {"oasis", 0.0, rng.seed()};

  std::vector<std::vector<double>> scores(arm_count, std::vector<double>(n));
  std::vector<double> totals(arm_count, 0.0);
  for (std::size_t k = 0; k < arm_count; ++k) {
    const CountingModel scorer(*models[k], out.ledger, k);
    for (std::size_t i = 0; i < n; ++i) {
      const Score s = scorer.score(session, i);
      if (s.is_minus_infinity()) throw std::invalid_argument("oasis_rank needs finite scores");
      scores[k][i] = s.value();
      totals[k] += s.value();
    }
    if (!(totals[k] > 0.0)) {
      throw std::invalid_argument("non-positive score sum for model " + std::to_string(k));
    }
  }
  std::vector<Score> normalized(n);
  for (std::size_t i = 0; i < n; ++i) normalized[i] = Score(scores[arms[i]][i] / totals[arms[i]]);

  out.selection.arm_items.resize(arm_count);
  for (std::size_t i = 0; i < n; ++i) out.selection.arm_items[arms[i]].push_back(i);
  out.ranking = RankingSet(session.item_ids(), rank_positions(normalized, tie_policy, rng, arms));
  return out;
}

DesignOutput small_ramp_rank(const Session& session, const TreatmentAllocation& allocation, Rng& rng,
                             TiePolicy tie_policy) {
  if (allocation.arm_count() != 3) {
    throw std::invalid_argument(
        "small-ramp design needs 3 arms (holdout, measurement control, measurement treatment)");
  }
  std::vector<std::string> warnings;
  const auto p = allocation.fractions().values();
  if (std::abs(p[0] - 0.8) > 1e-9 || std::abs(p[1] - 0.1) > 1e-9 || std::abs(p[2] - 0.1) > 1e-9) {
    warnings.emplace_back("small-ramp design expects ramp fractions (0.8, 0.1, 0.1)");
  }
  auto arms = session_arms(session, allocation);
  for (auto& k : arms) k = (k == 2) ? 1 : 0;

  std::vector<TableModel> storage;
  const auto models = table_models(session, 2, storage);
  const DesignConfig config{1.0, MixingMode::SingleTreatment, tie_policy};
  auto out = unicorn_kernel(session, arms, models, config, rng);
  out.provenance.design = "small-ramp";
  out.warnings = std::move(warnings);
  return out;
}

}  // namespace unicorn

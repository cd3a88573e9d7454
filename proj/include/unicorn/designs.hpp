#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "unicorn/allocation.hpp"
#include "unicorn/core.hpp"
#include "unicorn/rng.hpp"

namespace unicorn {

enum class MixingMode { SingleTreatment, GreaterMixing, LimitedMixing };

std::string_view to_string(MixingMode m);
MixingMode parse_mixing_mode(std::string_view s);

struct DesignConfig {
  double alpha = 1.0;
  MixingMode mixing_mode = MixingMode::SingleTreatment;
  TiePolicy tie_policy = TiePolicy::Random;

  /// Throws std::invalid_argument for alpha outside [0, 1] or an arm count the
  /// mode does not support (SingleTreatment needs exactly two arms).
  void validate(std::size_t arm_count) const;
};

struct Provenance {
  std::string design;
  double alpha = 0.0;
  std::uint64_t rng_seed = 0;
};

struct DesignOutput {
  RankingSet ranking;
  CostLedger ledger;
  MixingSelection selection;
  Provenance provenance;
  std::vector<std::string> warnings;
};

/// Item subset chosen by a first-phase candidate generator.
class CandidateGenerator {
 public:
  virtual ~CandidateGenerator() = default;
  /// Positions in `session`, ascending, without duplicates.
  virtual std::vector<std::size_t> generate(const Session& session) const = 0;
};

/// Selects a fixed set of item ids (ids absent from the session are ignored).
class FixedCandidates final : public CandidateGenerator {
 public:
  explicit FixedCandidates(std::vector<ItemId> ids) : ids_(std::move(ids)) {}
  std::vector<std::size_t> generate(const Session& session) const override;

 private:
  std::vector<ItemId> ids_;
};

/// Top `count` items by one of the session's score tables.
class TopScoreCandidates final : public CandidateGenerator {
 public:
  TopScoreCandidates(std::size_t model, std::size_t count) : model_(model), count_(count) {}
  std::vector<std::size_t> generate(const Session& session) const override;

 private:
  std::size_t model_;
  std::size_t count_;
};

/// Shared reranking kernel. `models[k]` scores the items of arm k; the ledger
/// has one slot per model. Control-only sampling for SingleTreatment and
/// GreaterMixing, every-arm sampling for LimitedMixing.
DesignOutput unicorn_kernel(const Session& session, std::span<const std::size_t> arms,
                            std::span<const ScoringModel* const> models, const DesignConfig& config,
                            Rng& rng);

/// UniCoRn(alpha) with one treatment. Models are the session's score tables 0 and 1.
DesignOutput unicorn_rank(const Session& session, const TreatmentAllocation& allocation,
                          const DesignConfig& config, Rng& rng);
DesignOutput unicorn_rank(const Session& session, const TreatmentAllocation& allocation,
                          std::span<const ScoringModel* const> models, const DesignConfig& config,
                          Rng& rng);

/// Multi-treatment variants (GreaterMixing / LimitedMixing) over K >= 1 treatment arms.
DesignOutput unicorn_multi_rank(const Session& session, const TreatmentAllocation& allocation,
                                const DesignConfig& config, Rng& rng);

/// Two-phase variant: rerank the union of both candidate sets, where an item
/// outside C_k scores minus infinity under T_k.
DesignOutput candgen_rank(const Session& session, const TreatmentAllocation& allocation,
                          const CandidateGenerator& c0, const CandidateGenerator& c1,
                          const DesignConfig& config, Rng& rng);

/// Score-normalization baseline: each item is ranked by its own arm's score
/// divided by that model's session total.
DesignOutput oasis_rank(const Session& session, const TreatmentAllocation& allocation, Rng& rng,
                        TiePolicy tie_policy = TiePolicy::Random);

/// Small-ramp baseline over a 3-arm allocation (holdout, measurement control,
/// measurement treatment): UniCoRn(1) where holdout and measurement-control
/// items are scored by T_0 and measurement-treatment items by T_1.
DesignOutput small_ramp_rank(const Session& session, const TreatmentAllocation& allocation, Rng& rng,
                             TiePolicy tie_policy = TiePolicy::Random);

}  // namespace unicorn

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <unordered_map>
#include <vector>

#include "unicorn/core.hpp"
#include "unicorn/rng.hpp"

namespace unicorn {

/// Ramp fractions p_0..p_K: each in [0, 1], summing to 1 within 1e-12.
class RampFractions {
 public:
  explicit RampFractions(std::vector<double> p);

  /// (1 - tp, tp).
  static RampFractions two_arm(double treatment_fraction);

  std::size_t arms() const noexcept { return p_.size(); }
  double operator[](std::size_t k) const { return p_.at(k); }
  std::span<const double> values() const noexcept { return p_; }

  friend bool operator==(const RampFractions&, const RampFractions&) = default;

 private:
  std::vector<double> p_;
};

/// Producer -> arm mapping. Hashed allocations bucket a keyed hash of
/// (seed, producer) by the cumulative ramp fractions, so they cover every
/// producer id without a stored table. Table allocations carry an explicit map
/// (hand fixtures, CSV import, or a materialized hashed assignment).
class TreatmentAllocation {
 public:
  static TreatmentAllocation hashed(RampFractions fractions, std::uint64_t seed);
  /// Fractions are the empirical arm shares of the table.
  static TreatmentAllocation from_table(std::unordered_map<ProducerId, std::size_t> table,
                                        std::size_t arm_count);
  /// Table with stated fractions and seed kept as provenance.
  static TreatmentAllocation from_table(std::unordered_map<ProducerId, std::size_t> table,
                                        RampFractions fractions, std::uint64_t seed);

  std::size_t arm_of(ProducerId producer) const;
  std::size_t arm_count() const noexcept { return fractions_.arms(); }
  const RampFractions& fractions() const noexcept { return fractions_; }
  std::uint64_t seed() const noexcept { return seed_; }
  bool is_table() const noexcept { return !table_.empty(); }
  const std::unordered_map<ProducerId, std::size_t>& table() const noexcept { return table_; }

 private:
  TreatmentAllocation(RampFractions fractions, std::uint64_t seed);

  RampFractions fractions_;
  std::uint64_t seed_;
  std::vector<double> cumulative_;
  std::unordered_map<ProducerId, std::size_t> table_;
};

/// Materialized i.i.d. categorical assignment of `producers`. Throws on
/// duplicate producers.
TreatmentAllocation assign(std::span<const ProducerId> producers, const RampFractions& fractions,
                           std::uint64_t seed);

/// Two-column CSV (producer_id,arm), rows sorted by producer id.
void write_allocation_csv(std::ostream& out, const TreatmentAllocation& allocation,
                          std::span<const ProducerId> producers);
void write_allocation_csv(std::ostream& out, const TreatmentAllocation& allocation);
TreatmentAllocation read_allocation_csv(std::istream& in);

/// Per-session split of items into arms and the subset chosen for mixing.
/// All item references are positions in the session.
struct MixingSelection {
  /// I_{s,k}.
  std::vector<std::vector<std::size_t>> arm_items;
  /// Items of each arm that join the mixing set. With control-only sampling,
  /// sampled[0] is I*_{s,0} and sampled[k >= 1] == arm_items[k].
  std::vector<std::vector<std::size_t>> sampled;
  /// Union of `sampled`, ascending by position.
  std::vector<std::size_t> mixing_items;
  /// Control-ranking slots L of the mixing items, ascending. Filled by designs.
  std::vector<Rank> positions;

  std::span<const std::size_t> control_sampled() const { return sampled.at(0); }
};

/// Includes each arm-0 producer present in the session independently with
/// probability alpha; every item of a treatment arm joins the mixing set.
/// Sampling is per producer: all items of a producer share one draw.
MixingSelection sample_p0_star(const Session& session, const TreatmentAllocation& allocation,
                               double alpha, Rng& rng);
MixingSelection sample_p0_star(const Session& session, std::span<const std::size_t> arms,
                               std::size_t arm_count, double alpha, Rng& rng);

/// Per-producer alpha sampling applied to every arm, control included.
MixingSelection sample_every_arm(const Session& session, std::span<const std::size_t> arms,
                                 std::size_t arm_count, double alpha, Rng& rng);

}  // namespace unicorn

#include "unicorn/allocation.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>

namespace unicorn {

RampFractions::RampFractions(std::vector<double> p) : p_(std::move(p)) {
  if (p_.empty()) throw std::invalid_argument("ramp fractions are empty");
  double sum = 0.0;
  for (double v : p_) {
    if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("ramp fraction outside [0, 1]");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-12) {
    throw std::invalid_argument("ramp fractions sum to " + std::to_string(sum) + ", not 1");
  }
}

RampFractions RampFractions::two_arm(double treatment_fraction) {
  return RampFractions({1.0 - treatment_fraction, treatment_fraction});
}

TreatmentAllocation::TreatmentAllocation(RampFractions fractions, std::uint64_t seed)
    : fractions_(std::move(fractions)), seed_(seed) {
  double acc = 0.0;
  for (double p : fractions_.values()) {
    acc += p;
    cumulative_.push_back(acc);
  }
}

TreatmentAllocation TreatmentAllocation::hashed(RampFractions fractions, std::uint64_t seed) {
  return TreatmentAllocation(std::move(fractions), seed);
}

TreatmentAllocation TreatmentAllocation::from_table(std::unordered_map<ProducerId, std::size_t> table,
                                                    std::size_t arm_count) {
  if (table.empty()) throw std::invalid_argument("allocation table is empty");
  if (arm_count == 0) throw std::invalid_argument("allocation needs at least one arm");
  std::vector<double> counts(arm_count, 0.0);
  for (const auto& [producer, arm] : table) {
    if (arm >= arm_count) throw std::invalid_argument("arm index out of range in allocation table");
    counts[arm] += 1.0;
  }
  const auto n = static_cast<double>(table.size());
  double assigned = 0.0;
  for (std::size_t k = 0; k + 1 < arm_count; ++k) {
    counts[k] /= n;
    assigned += counts[k];
  }
  counts.back() = std::max(0.0, 1.0 - assigned);
  return from_table(std::move(table), RampFractions(std::move(counts)), 0);
}

TreatmentAllocation TreatmentAllocation::from_table(std::unordered_map<ProducerId, std::size_t> table,
                                                    RampFractions fractions, std::uint64_t seed) {
  if (table.empty()) throw std::invalid_argument("allocation table is empty");
  for (const auto& [producer, arm] : table) {
    if (arm >= fractions.arms()) throw std::invalid_argument("arm index out of range in allocation table");
  }
  TreatmentAllocation out(std::move(fractions), seed);
  out.table_ = std::move(table);
  return out;
}

std::size_t TreatmentAllocation::arm_of(ProducerId producer) const {
  if (!table_.empty()) {
    auto it = table_.find(producer);
    if (it == table_.end()) {
      throw std::out_of_range("producer " + std::to_string(value(producer)) + " not in allocation");
    }
    return it->second;
  }
  const std::uint64_t h = mix64(seed_ ^ mix64(value(producer) ^ 0x5851f42d4c957f2dULL));
  const double u = static_cast<double>(h >> 11) * 0x1.0p-53;
  for (std::size_t k = 0; k + 1 < cumulative_.size(); ++k) {
    if (u < cumulative_[k]) return k;
  }
  // The last non-empty arm absorbs rounding at the top of the interval.
  for (std::size_t k = cumulative_.size(); k-- > 0;) {
    if (fractions_[k] > 0.0) return k;
  }
  return 0;
}

TreatmentAllocation assign(std::span<const ProducerId> producers, const RampFractions& fractions,
                           std::uint64_t seed) {
  const auto hashed = TreatmentAllocation::hashed(fractions, seed);
  std::unordered_map<ProducerId, std::size_t> table;
  table.reserve(producers.size());
  for (ProducerId p : producers) {
    if (!table.emplace(p, hashed.arm_of(p)).second) {
      throw std::invalid_argument("duplicate producer " + std::to_string(value(p)));
    }
  }
  if (table.empty()) return hashed;
  return TreatmentAllocation::from_table(std::move(table), fractions, seed);
}

namespace {

std::vector<std::pair<std::uint64_t, std::size_t>> sorted_rows(
    const TreatmentAllocation& allocation, std::span<const ProducerId> producers) {
  std::vector<std::pair<std::uint64_t, std::size_t>> rows;
  rows.reserve(producers.size());
  for (ProducerId p : producers) rows.emplace_back(value(p), allocation.arm_of(p));
  std::sort(rows.begin(), rows.end());
  return rows;
}

void write_rows(std::ostream& out, const std::vector<std::pair<std::uint64_t, std::size_t>>& rows) {
  out << "producer_id,arm\n";
  for (const auto& [p, k] : rows) out << p << ',' << k << '\n';
}

}  // namespace

void write_allocation_csv(std::ostream& out, const TreatmentAllocation& allocation,
                          std::span<const ProducerId> producers) {
  write_rows(out, sorted_rows(allocation, producers));
}

void write_allocation_csv(std::ostream& out, const TreatmentAllocation& allocation) {
  if (!allocation.is_table()) {
    throw std::invalid_argument("hashed allocation has no finite producer universe; pass producers");
  }
  std::vector<ProducerId> producers;
  producers.reserve(allocation.table().size());
  for (const auto& [p, k] : allocation.table()) producers.push_back(p);
  write_rows(out, sorted_rows(allocation, producers));
}

TreatmentAllocation read_allocation_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("allocation CSV is empty");
  if (line.rfind("producer_id,arm", 0) != 0) {
    throw std::runtime_error("allocation CSV header must be 'producer_id,arm'");
  }
  std::unordered_map<ProducerId, std::size_t> table;
  std::size_t max_arm = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw std::runtime_error("allocation CSV line " + std::to_string(line_no) + ": missing comma");
    }
    try {
      const auto producer = std::stoull(line.substr(0, comma));
      const auto arm = static_cast<std::size_t>(std::stoull(line.substr(comma + 1)));
      if (!table.emplace(ProducerId{producer}, arm).second) {
        throw std::runtime_error("duplicate producer");
      }
      max_arm = std::max(max_arm, arm);
    } catch (const std::logic_error&) {
      throw std::runtime_error("allocation CSV line " + std::to_string(line_no) + ": bad number");
    } catch (const std::runtime_error& e) {
      throw std::runtime_error("allocation CSV line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return TreatmentAllocation::from_table(std::move(table), std::max<std::size_t>(max_arm + 1, 2));
}

// ---------------------------------------------------------------------------
// Mixing selection

namespace {

void check_alpha(double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha outside [0, 1]");
}

/// One Bernoulli(alpha) draw per distinct producer among `eligible` positions,
/// in ascending producer-id order. Returns the kept positions, ascending.
std::vector<std::size_t> sample_by_producer(const Session& session,
                                            const std::vector<std::size_t>& eligible, double alpha,
                                            Rng& rng) {
  if (alpha <= 0.0) return {};
  if (alpha >= 1.0) return eligible;
  std::vector<std::pair<std::uint64_t, std::size_t>> keyed;
  keyed.reserve(eligible.size());
  for (std::size_t pos : eligible) keyed.emplace_back(value(session.item(pos).producer), pos);
  std::sort(keyed.begin(), keyed.end());
  std::vector<std::size_t> kept;
  std::size_t i = 0;
  while (i < keyed.size()) {
    const bool take = rng.bernoulli(alpha);
    std::size_t j = i;
    for (; j < keyed.size() && keyed[j].first == keyed[i].first; ++j) {
      if (take) kept.push_back(keyed[j].second);
    }
    i = j;
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

MixingSelection split_arms(std::span<const std::size_t> arms, std::size_t arm_count) {
  MixingSelection sel;
  sel.arm_items.resize(arm_count);
  for (std::size_t pos = 0; pos < arms.size(); ++pos) {
    if (arms[pos] >= arm_count) throw std::invalid_argument("item arm exceeds arm count");
    sel.arm_items[arms[pos]].push_back(pos);
  }
  return sel;
}

void finish_union(MixingSelection& sel) {
  for (const auto& s : sel.sampled) sel.mixing_items.insert(sel.mixing_items.end(), s.begin(), s.end());
  std::sort(sel.mixing_items.begin(), sel.mixing_items.end());
}

}  // namespace

MixingSelection sample_p0_star(const Session& session, std::span<const std::size_t> arms,
                               std::size_t arm_count, double alpha, Rng& rng) {
  check_alpha(alpha);
  if (arms.size() != session.size()) throw std::invalid_argument("arms/session size mismatch");
  auto sel = split_arms(arms, arm_count);
  sel.sampled.resize(arm_count);
  sel.sampled[0] = sample_by_producer(session, sel.arm_items[0], alpha, rng);
  for (std::size_t k = 1; k < arm_count; ++k) sel.sampled[k] = sel.arm_items[k];
  finish_union(sel);
  return sel;
}

MixingSelection sample_p0_star(const Session& session, const TreatmentAllocation& allocation,
                               double alpha, Rng& rng) {
  const auto arms = session_arms(session, allocation);
  return sample_p0_star(session, arms, allocation.arm_count(), alpha, rng);
}

MixingSelection sample_every_arm(const Session& session, std::span<const std::size_t> arms,
                                 std::size_t arm_count, double alpha, Rng& rng) {
  check_alpha(alpha);
  if (arms.size() != session.size()) throw std::invalid_argument("arms/session size mismatch");
  auto sel = split_arms(arms, arm_count);
  sel.sampled.resize(arm_count);
  for (std::size_t k = 0; k < arm_count; ++k) {
    sel.sampled[k] = sample_by_producer(session, sel.arm_items[k], alpha, rng);
  }
  finish_union(sel);
  return sel;
}

}  // namespace unicorn

#include <algorithm>
#include <bit>
#include <cmath>
#include <exception>
#include <stdexcept>

#include "unicorn/designs.hpp"
#include "unicorn/verify.hpp"

namespace unicorn {

Session cost_check_session(std::size_t slots, std::size_t arm_count, std::uint64_t seed, std::uint64_t index) {
  Rng rng = Rng::derive(seed, {0x636f7374ULL, index});
  std::vector<Item> items;
  items.reserve(slots);
  for (std::size_t i = 0; i < slots; ++i) {
    const std::uint64_t id = index * slots + i;
    items.push_back(Item{ItemId{id}, ProducerId{id}});
  }
  std::vector<std::vector<Score>> scores(arm_count);
  for (auto& table : scores) {
    table.reserve(slots);
    for (std::size_t i = 0; i < slots; ++i) table.emplace_back(rng.normal());
  }
  return Session(index, std::move(items), std::move(scores));
}

namespace {

struct CostCase {
  MixingMode mode;
  std::size_t ramp;
  double alpha;
};

std::vector<CostCase> cases(const CostCheckConfig& config) {
  std::vector<CostCase> out;
  for (std::size_t r = 0; r < config.ramps.size(); ++r) {
    const std::size_t arms = config.ramps[r].size();
    for (MixingMode mode : config.modes) {
      if (mode == MixingMode::SingleTreatment && arms != 2) continue;
      for (double a : config.alphas) out.push_back({mode, r, a});
    }
  }
  return out;
}

std::vector<TreatmentAllocation> allocations(const CostCheckConfig& config) {
  std::vector<TreatmentAllocation> out;
  for (std::size_t r = 0; r < config.ramps.size(); ++r) {
    out.push_back(TreatmentAllocation::hashed(RampFractions(config.ramps[r]), derive_seed(config.seed, {r})));
  }
  return out;
}

/// Scoring calls of every case on session `s`.
void cost_session(const CostCheckConfig& config, std::span<const CostCase> cs,
                  std::span<const TreatmentAllocation> allocs, std::size_t s, std::vector<std::uint64_t>& calls) {
  std::size_t max_arms = 2;
  for (const auto& ramp : config.ramps) max_arms = std::max(max_arms, ramp.size());
  const Session session = cost_check_session(config.slots, max_arms, config.seed, s);
  std::vector<TableModel> tables;
  for (std::size_t k = 0; k < max_arms; ++k) tables.emplace_back(k);
  std::vector<const ScoringModel*> models;
  for (const auto& t : tables) models.push_back(&t);

  std::vector<std::size_t> arms(session.size());
  for (std::size_t c = 0; c < cs.size(); ++c) {
    const auto& alloc = allocs[cs[c].ramp];
    for (std::size_t i = 0; i < session.size(); ++i) arms[i] = alloc.arm_of(session.item(i).producer);
    Rng rng = Rng::derive(config.seed, {0x6b65726eULL, s, c});
    const std::span<const ScoringModel* const> used(models.data(), alloc.arm_count());
    const DesignOutput d =
        unicorn_kernel(session, arms, used, DesignConfig{cs[c].alpha, cs[c].mode, config.tie_policy}, rng);
    calls[c] += d.ledger.total();
  }
}

std::vector<CostCheckRow> rows(const CostCheckConfig& config, std::span<const CostCase> cs,
                               std::span<const std::uint64_t> calls) {
  std::vector<CostCheckRow> out;
  const double items = static_cast<double>(config.sessions * config.slots);
  for (std::size_t c = 0; c < cs.size(); ++c) {
    const auto& ramp = config.ramps[cs[c].ramp];
    const std::vector<double> unit(ramp.size(), 1.0);
    CostCheckRow row;
    row.mode = cs[c].mode;
    row.ramp = ramp;
    row.alpha = cs[c].alpha;
    row.analytic = analytic_cost(DesignConfig{row.alpha, row.mode, config.tie_policy}, RampFractions(ramp), unit);
    row.measured = static_cast<double>(calls[c]) / items;
    row.relative_error = std::abs(row.measured - row.analytic) / row.analytic;
    out.push_back(std::move(row));
  }
  return out;
}

void validate(const CostCheckConfig& config) {
  if (config.sessions == 0 || config.slots == 0) {
    throw std::invalid_argument("cost check needs a positive session count and slot count");
  }
  for (const auto& ramp : config.ramps) (void)RampFractions(ramp);
  for (double a : config.alphas) {
    if (!(a >= 0.0 && a <= 1.0)) throw std::invalid_argument("alpha outside [0, 1]");
  }
}

}  // namespace

std::vector<CostCheckRow> cost_check(const CostCheckConfig& config, const Execution& exec) {
  validate(config);
  const auto cs = cases(config);
  const auto allocs = allocations(config);
  std::vector<std::uint64_t> total(cs.size(), 0);
  std::exception_ptr failure;
  const int workers = static_cast<int>(std::max<std::size_t>(1, exec.workers));
  const auto n = static_cast<std::int64_t>(config.sessions);
#pragma omp parallel num_threads(workers)
  {
    std::vector<std::uint64_t> local(cs.size(), 0);
#pragma omp for schedule(static)
    for (std::int64_t s = 0; s < n; ++s) {
      try {
        cost_session(config, cs, allocs, static_cast<std::size_t>(s), local);
      } catch (...) {
#pragma omp critical(unicorn_cost_failure)
        if (!failure) failure = std::current_exception();
      }
    }
#pragma omp critical(unicorn_cost_merge)
    for (std::size_t c = 0; c < cs.size(); ++c) total[c] += local[c];
  }
  if (failure) std::rethrow_exception(failure);
  return rows(config, cs, total);
}

std::vector<CostCheckRow> cost_check_serial(const CostCheckConfig& config) {
  validate(config);
  const auto cs = cases(config);
  const auto allocs = allocations(config);
  std::vector<std::uint64_t> total(cs.size(), 0);
  for (std::size_t s = 0; s < config.sessions; ++s) cost_session(config, cs, allocs, s, total);
  return rows(config, cs, total);
}

}  // namespace unicorn

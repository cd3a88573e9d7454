#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "unicorn/allocation.hpp"
#include "unicorn/core.hpp"

namespace fixtures {

using namespace unicorn;

/// Items 0..n-1, each its own producer, with one score table per entry of `tables`.
inline Session make_session(const std::vector<std::vector<double>>& tables, std::uint64_t id = 0) {
  const std::size_t n = tables.at(0).size();
  std::vector<Item> items;
  for (std::size_t i = 0; i < n; ++i) items.push_back(Item{ItemId{i}, ProducerId{i}});
  std::vector<std::vector<Score>> scores;
  for (const auto& t : tables) scores.push_back(to_scores(t));
  return Session(id, std::move(items), std::move(scores));
}

/// Allocation where producer i gets arms[i].
inline TreatmentAllocation make_allocation(const std::vector<std::size_t>& arms, std::size_t arm_count = 2) {
  std::unordered_map<ProducerId, std::size_t> table;
  for (std::size_t i = 0; i < arms.size(); ++i) table[ProducerId{i}] = arms[i];
  return TreatmentAllocation::from_table(std::move(table), arm_count);
}

inline Session random_session(Rng& rng, std::size_t n, std::size_t models = 2, std::uint64_t id = 0) {
  std::vector<std::vector<double>> tables(models, std::vector<double>(n));
  for (auto& t : tables)
    for (auto& v : t) v = rng.normal();
  return make_session(tables, id);
}

}  // namespace fixtures

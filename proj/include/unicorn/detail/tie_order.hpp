#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "unicorn/core.hpp"
#include "unicorn/rng.hpp"

namespace unicorn::detail {

/// Sorts `idx` so that before(a, b) items come first. Items neither before the
/// other form tie groups: under FavorHigherArm the larger arm goes first, and
/// whatever is still tied is shuffled with a fair Fisher-Yates draw. Random
/// draws are consumed group by group in final order, so the result is a pure
/// function of the keys and the rng state.
template <class Before>
void order_with_ties(std::vector<std::size_t>& idx, Before before, std::span<const std::size_t> arms,
                     TiePolicy policy, Rng& rng) {
  const bool favor = policy == TiePolicy::FavorHigherArm;
  if (favor && arms.empty()) {
    throw std::invalid_argument("FavorHigherArm tie policy needs item arms");
  }
  auto tied = [&](std::size_t a, std::size_t b) {
    if (before(a, b) || before(b, a)) return false;
    return !favor || arms[a] == arms[b];
  };
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (before(a, b)) return true;
    if (before(b, a)) return false;
    if (favor && arms[a] != arms[b]) return arms[a] > arms[b];
    return a < b;
  });
  std::size_t start = 0;
  while (start < idx.size()) {
    std::size_t end = start + 1;
    while (end < idx.size() && tied(idx[start], idx[end])) ++end;
    for (std::size_t i = end - start; i > 1; --i) {
      const auto j = static_cast<std::size_t>(rng.below(i));
      std::swap(idx[start + i - 1], idx[start + j]);
    }
    start = end;
  }
}

}  // namespace unicorn::detail

#pragma once

#include <cstddef>

namespace unicorn {

/// Worker count for the OpenMP kernels. Results never depend on it: every
/// kernel derives randomness from (master seed, unit index) and reduces either
/// integers or per-unit slots in index order.
struct Execution {
  std::size_t workers = 1;
};

}  // namespace unicorn

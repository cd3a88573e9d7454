#include <algorithm>
#include <bit>
#include <exception>
#include <stdexcept>

#include "unicorn/designs.hpp"
#include "unicorn/verify.hpp"

namespace unicorn {

namespace {

const TableModel kControl(0);
const TableModel kTreatment(1);
const ScoringModel* const kModels[2] = {&kControl, &kTreatment};

/// Per-alpha accumulators of one (rho, tp) cell.
struct CellSums {
  std::vector<PositionErrorAccumulator> errors;
  std::vector<std::uint64_t> calls;

  explicit CellSums(std::size_t alphas) : errors(alphas), calls(alphas, 0) {}

  void merge(const CellSums& other) {
    for (std::size_t a = 0; a < errors.size(); ++a) {
      errors[a].merge(other.errors[a]);
      calls[a] += other.calls[a];
    }
  }
};

void validate(const AlphaSweepConfig& config) {
  if (config.env.sessions == 0 || config.env.slots == 0) {
    throw std::invalid_argument("alpha sweep needs a positive session count and slot count");
  }
  for (double a : config.alphas) {
    if (!(a >= 0.0 && a <= 1.0)) throw std::invalid_argument("alpha outside [0, 1]");
  }
  for (double tp : config.treatment_fractions) {
    if (!(tp >= 0.0 && tp <= 1.0)) throw std::invalid_argument("treatment fraction outside [0, 1]");
  }
  for (double rho : config.rhos) {
    if (!(rho >= -1.0 && rho <= 1.0)) throw std::invalid_argument("rho outside [-1, 1]");
  }
}

// Streams are keyed by parameter values, so adding a grid point leaves the others unchanged.
std::uint64_t key(double v) { return std::bit_cast<std::uint64_t>(v); }

void sweep_session(const AlphaSweepConfig& config, const GaussianEnvConfig& env,
                   const TreatmentAllocation& allocation, std::uint64_t cell_seed, std::size_t s,
                   std::vector<std::size_t>& arms, CellSums& sums) {
  const Session session = gen_gaussian_session(env, s);
  for (std::size_t i = 0; i < session.size(); ++i) arms[i] = allocation.arm_of(session.item(i).producer);
  Rng ideal_rng = Rng::derive(cell_seed, {s, 0});
  const auto ideal = ideal_ranks(session, arms, config.tie_policy, ideal_rng);
  for (std::size_t a = 0; a < config.alphas.size(); ++a) {
    Rng rng = Rng::derive(cell_seed, {s, 1, key(config.alphas[a])});
    const DesignOutput d = unicorn_kernel(
        session, arms, kModels, DesignConfig{config.alphas[a], MixingMode::SingleTreatment, config.tie_policy},
        rng);
    sums.errors[a].add(d.ranking.ranks(), ideal);
    sums.calls[a] += d.ledger.total();
  }
}

template <class RunCell>
std::vector<AlphaSweepRow> sweep(const AlphaSweepConfig& config, RunCell run_cell) {
  validate(config);
  std::vector<AlphaSweepRow> rows;
  const double items = static_cast<double>(config.env.sessions * config.env.slots);
  for (double rho : config.rhos) {
    GaussianEnvConfig env = config.env;
    env.rho = rho;
    env.seed = derive_seed(config.seed, {0x656e76ULL, key(rho)});
    for (double tp : config.treatment_fractions) {
      const auto ramp = RampFractions::two_arm(tp);
      const auto allocation = TreatmentAllocation::hashed(ramp, derive_seed(config.seed, {key(rho), key(tp)}));
      const std::uint64_t cell_seed = derive_seed(config.seed, {0x63656c6cULL, key(rho), key(tp)});
      const CellSums sums = run_cell(env, allocation, cell_seed);
      const double unit[2] = {1.0, 1.0};
      for (std::size_t a = 0; a < config.alphas.size(); ++a) {
        AlphaSweepRow row;
        row.rho = rho;
        row.tp = tp;
        row.alpha = config.alphas[a];
        row.profile = sums.errors[a].profile();
        row.inaccuracy = sums.errors[a].inaccuracy();
        row.mean_rmse = row.profile.mean_rmse();
        row.mean_mae = row.profile.mean_mae();
        row.analytic_cost = analytic_cost(DesignConfig{row.alpha, MixingMode::SingleTreatment, config.tie_policy},
                                          ramp, unit);
        row.measured_cost = static_cast<double>(sums.calls[a]) / items;
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

}  // namespace

std::vector<AlphaSweepRow> alpha_sweep(const AlphaSweepConfig& config, const Execution& exec) {
  const int workers = static_cast<int>(std::max<std::size_t>(1, exec.workers));
  return sweep(config, [&](const GaussianEnvConfig& env, const TreatmentAllocation& allocation,
                           std::uint64_t cell_seed) {
    CellSums total(config.alphas.size());
    std::exception_ptr failure;
    const auto n = static_cast<std::int64_t>(env.sessions);
#pragma omp parallel num_threads(workers)
    {
      CellSums local(config.alphas.size());
      std::vector<std::size_t> arms(env.slots);
#pragma omp for schedule(static)
      for (std::int64_t s = 0; s < n; ++s) {
        try {
          sweep_session(config, env, allocation, cell_seed, static_cast<std::size_t>(s), arms, local);
        } catch (...) {
#pragma omp critical(unicorn_sweep_failure)
          if (!failure) failure = std::current_exception();
        }
      }
#pragma omp critical(unicorn_sweep_merge)
      total.merge(local);
    }
    if (failure) std::rethrow_exception(failure);
    return total;
  });
}

std::vector<AlphaSweepRow> alpha_sweep_serial(const AlphaSweepConfig& config) {
  return sweep(config, [&](const GaussianEnvConfig& env, const TreatmentAllocation& allocation,
                           std::uint64_t cell_seed) {
    CellSums sums(config.alphas.size());
    std::vector<std::size_t> arms(env.slots);
    for (std::size_t s = 0; s < env.sessions; ++s) {
      sweep_session(config, env, allocation, cell_seed, s, arms, sums);
    }
    return sums;
  });
}

}  // namespace unicorn

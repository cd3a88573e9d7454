#include "unicorn/verify.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <exception>
#include <numeric>
#include <stdexcept>
#include <string>

#include "unicorn/designs.hpp"

namespace unicorn {

// ---------------------------------------------------------------------------
// Optimality

std::uint64_t enumerated_minimum(std::span<const Rank> ideal) {
  const std::size_t n = ideal.size();
  if (n == 0) throw std::invalid_argument("empty ranking");
  if (n > 7) throw std::invalid_argument("enumeration is limited to sessions of at most 7 items");
  std::vector<Rank> sigma(n);
  std::iota(sigma.begin(), sigma.end(), Rank{1});
  std::uint64_t best = UINT64_MAX;
  do {
    std::uint64_t e = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto d = static_cast<std::int64_t>(sigma[i]) - static_cast<std::int64_t>(ideal[i]);
      e += static_cast<std::uint64_t>(d * d);
    }
    best = std::min(best, e);
  } while (std::next_permutation(sigma.begin(), sigma.end()));
  return best;
}

namespace {

const TableModel kControl(0);
const TableModel kTreatment(1);
const ScoringModel* const kModels[2] = {&kControl, &kTreatment};

std::vector<Item> own_producer_items(std::size_t n) {
  std::vector<Item> items;
  items.reserve(n);
  for (std::size_t i = 0; i < n; ++i) items.push_back(Item{ItemId{i}, ProducerId{i}});
  return items;
}

}  // namespace

OptimalityTrial optimality_trial(std::size_t session_size, std::uint64_t seed, bool adversarial,
                                 TiePolicy tie_policy) {
  if (session_size == 0 || session_size > 7) {
    throw std::invalid_argument("optimality trials need 1 to 7 items");
  }
  Rng rng(seed);
  std::vector<Score> t0, t1;
  for (std::size_t i = 0; i < session_size; ++i) {
    const double z = rng.normal();
    t0.emplace_back(z);
    t1.emplace_back(adversarial ? -z : rng.normal());
  }
  std::vector<std::vector<Score>> scores;
  scores.push_back(std::move(t0));
  scores.push_back(std::move(t1));
  const Session session(0, own_producer_items(session_size), std::move(scores));

  const double p1 = rng.uniform(0.1, 0.9);
  std::vector<std::size_t> arms(session_size);
  for (auto& a : arms) a = rng.bernoulli(p1) ? 1 : 0;

  const auto ideal = ideal_ranks(session, arms, tie_policy, rng);
  const DesignOutput d =
      unicorn_kernel(session, arms, kModels, DesignConfig{1.0, MixingMode::SingleTreatment, tie_policy}, rng);

  OptimalityTrial t;
  t.session_size = session_size;
  t.adversarial = adversarial;
  t.seed = seed;
  for (std::size_t i = 0; i < session_size; ++i) {
    const auto e = static_cast<std::int64_t>(d.ranking.rank(i)) - static_cast<std::int64_t>(ideal[i]);
    t.design_error += static_cast<std::uint64_t>(e * e);
  }
  t.minimum_error = enumerated_minimum(ideal);
  t.pass = t.design_error <= t.minimum_error;
  return t;
}

namespace {

OptimalityTrial indexed_trial(std::span<const std::size_t> sizes, std::size_t trial, std::uint64_t seed) {
  auto t = optimality_trial(sizes[trial % sizes.size()], derive_seed(seed, {trial}),
                            trial % 4 == 3);
  t.trial = trial;
  return t;
}

void check_sizes(std::span<const std::size_t> sizes) {
  if (sizes.empty()) throw std::invalid_argument("no session sizes given");
  for (std::size_t n : sizes) {
    if (n == 0 || n > 7) throw std::invalid_argument("session size " + std::to_string(n) + " outside 1..7");
  }
}

OptimalityReport summarize(std::span<const OptimalityTrial> trials) {
  OptimalityReport r;
  r.trials = trials.size();
  for (const auto& t : trials) {
    if (t.pass) {
      ++r.passed;
    } else if (r.failures.size() < 20) {
      r.failures.push_back(t);
    }
  }
  return r;
}

}  // namespace

OptimalityReport brute_force_optimality(std::span<const std::size_t> sizes, std::size_t trials,
                                        std::uint64_t seed, const Execution& exec) {
  check_sizes(sizes);
  std::vector<OptimalityTrial> out(trials);
  const int workers = static_cast<int>(std::max<std::size_t>(1, exec.workers));
  const auto n = static_cast<std::int64_t>(trials);
#pragma omp parallel for num_threads(workers) schedule(dynamic, 64)
  for (std::int64_t t = 0; t < n; ++t) {
    out[static_cast<std::size_t>(t)] = indexed_trial(sizes, static_cast<std::size_t>(t), seed);
  }
  return summarize(out);
}

OptimalityReport brute_force_optimality_serial(std::span<const std::size_t> sizes, std::size_t trials,
                                               std::uint64_t seed) {
  check_sizes(sizes);
  std::vector<OptimalityTrial> out;
  out.reserve(trials);
  for (std::size_t t = 0; t < trials; ++t) out.push_back(indexed_trial(sizes, t, seed));
  return summarize(out);
}

// ---------------------------------------------------------------------------
// Bias / variance

std::string_view to_string(SessionKind k) {
  return k == SessionKind::RandomScores ? "random" : "adversarial";
}

Session bound_check_session(std::size_t session_size, SessionKind kind, std::uint64_t seed) {
  if (session_size == 0) throw std::invalid_argument("session size must be positive");
  std::vector<Score> t0, t1;
  if (kind == SessionKind::ReverseRanked) {
    for (std::size_t i = 0; i < session_size; ++i) {
      const double s = static_cast<double>(session_size - i);
      t0.emplace_back(s);
      t1.emplace_back(-s);
    }
  } else {
    Rng rng = Rng::derive(seed, {0x626f756e64ULL, session_size});
    for (std::size_t i = 0; i < session_size; ++i) {
      t0.emplace_back(rng.normal());
      t1.emplace_back(rng.normal());
    }
  }
  std::vector<std::vector<Score>> scores;
  scores.push_back(std::move(t0));
  scores.push_back(std::move(t1));
  return Session(0, own_producer_items(session_size), std::move(scores));
}

namespace {

void bound_rep(const Session& session, double p1, std::uint64_t seed, std::size_t rep, TiePolicy tie,
               std::vector<std::size_t>& arms, BoundAccumulator& acc) {
  Rng rng = Rng::derive(seed, {rep});
  for (auto& a : arms) a = rng.bernoulli(p1) ? 1 : 0;
  const auto ideal = ideal_ranks(session, arms, tie, rng);
  const DesignOutput d =
      unicorn_kernel(session, arms, kModels, DesignConfig{1.0, MixingMode::SingleTreatment, tie}, rng);
  acc.add(arms, ideal, d.ranking.ranks());
}

}  // namespace

BoundAccumulator bound_moments(const Session& session, double p1, std::size_t reps, std::uint64_t seed,
                               TiePolicy tie_policy, const Execution& exec) {
  const int workers = static_cast<int>(std::max<std::size_t>(1, exec.workers));
  BoundAccumulator total(session.size());
  std::exception_ptr failure;
#pragma omp parallel num_threads(workers)
  {
    BoundAccumulator local(session.size());
    std::vector<std::size_t> arms(session.size());
#pragma omp for schedule(static)
    for (std::int64_t r = 0; r < static_cast<std::int64_t>(reps); ++r) {
      try {
        bound_rep(session, p1, seed, static_cast<std::size_t>(r), tie_policy, arms, local);
      } catch (...) {
#pragma omp critical(unicorn_bound_failure)
        if (!failure) failure = std::current_exception();
      }
    }
#pragma omp critical(unicorn_bound_merge)
    total.merge(local);
  }
  if (failure) std::rethrow_exception(failure);
  return total;
}

BoundAccumulator bound_moments_serial(const Session& session, double p1, std::size_t reps,
                                      std::uint64_t seed, TiePolicy tie_policy) {
  BoundAccumulator acc(session.size());
  std::vector<std::size_t> arms(session.size());
  for (std::size_t r = 0; r < reps; ++r) bound_rep(session, p1, seed, r, tie_policy, arms, acc);
  return acc;
}

std::vector<BoundCheck> check_bias_variance(const BoundCheckConfig& config, const Execution& exec) {
  if (config.reps == 0) throw std::invalid_argument("reps must be positive");
  std::vector<BoundCheck> out;
  for (std::size_t n : config.sizes) {
    for (SessionKind kind : {SessionKind::RandomScores, SessionKind::ReverseRanked}) {
      if (config.adversarial_only && kind == SessionKind::RandomScores) continue;
      const Session session = bound_check_session(n, kind, config.seed);
      for (double p1 : config.p1_grid) {
        if (!(p1 >= 0.0 && p1 <= 1.0)) throw std::invalid_argument("p1 outside [0, 1]");
        const std::uint64_t cell_seed =
            derive_seed(config.seed, {n, static_cast<std::uint64_t>(kind), std::bit_cast<std::uint64_t>(p1)});
        BoundCheck c;
        c.kind = kind;
        c.session_size = n;
        c.p1 = p1;
        c.reps = config.reps;
        c.report = bound_moments(session, p1, config.reps, cell_seed, config.tie_policy, exec)
                       .report(p1, config.slack_se);
        c.violations = c.report.violations();
        if (kind == SessionKind::ReverseRanked) {
          for (const auto& cell : c.report.cells) {
            // The equality case excludes the middle rank.
            if (cell.skipped || 2 * static_cast<std::size_t>(cell.r) == n + 1) continue;
            ++c.equality_cells;
            if (!cell.bias_attains_bound) ++c.bias_equality_failures;
            if (!cell.variance_attains_bound) ++c.variance_equality_failures;
          }
        }
        c.pass = c.violations == 0 && c.bias_equality_failures == 0;
        out.push_back(std::move(c));
      }
    }
  }
  return out;
}

}  // namespace unicorn

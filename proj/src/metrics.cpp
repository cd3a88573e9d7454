#include "unicorn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace unicorn {

// ---------------------------------------------------------------------------
// Position errors

double PositionErrorProfile::mean_rmse() const {
  double acc = 0.0;
  std::size_t n = 0;
  for (const auto& p : by_position) {
    if (!p) continue;
    acc += p->rmse;
    ++n;
  }
  return n ? acc / static_cast<double>(n) : 0.0;
}

double PositionErrorProfile::mean_mae() const {
  double acc = 0.0;
  std::size_t n = 0;
  for (const auto& p : by_position) {
    if (!p) continue;
    acc += p->mae;
    ++n;
  }
  return n ? acc / static_cast<double>(n) : 0.0;
}

double PositionErrorProfile::pooled_mse() const {
  double acc = 0.0;
  std::uint64_t n = 0;
  for (const auto& p : by_position) {
    if (!p) continue;
    acc += p->rmse * p->rmse * static_cast<double>(p->count);
    n += p->count;
  }
  return n ? acc / static_cast<double>(n) : 0.0;
}

PositionErrorAccumulator::PositionErrorAccumulator(std::size_t max_position) { grow(max_position); }

void PositionErrorAccumulator::grow(std::size_t positions) {
  if (positions <= count_.size()) return;
  count_.resize(positions, 0);
  abs_sum_.resize(positions, 0);
  sq_sum_.resize(positions, 0);
}

void PositionErrorAccumulator::add(std::span<const Rank> design, std::span<const Rank> ideal) {
  if (design.size() != ideal.size()) throw std::invalid_argument("design/ideal size mismatch");
  for (std::size_t i = 0; i < design.size(); ++i) {
    const Rank l = ideal[i];
    if (l == 0) throw std::invalid_argument("ideal rank 0");
    grow(l);
    const auto d = static_cast<std::uint64_t>(
        std::abs(static_cast<std::int64_t>(design[i]) - static_cast<std::int64_t>(l)));
    count_[l - 1] += 1;
    abs_sum_[l - 1] += d;
    sq_sum_[l - 1] += d * d;
    total_sq_ += d * d;
  }
  samples_ += design.size();
}

void PositionErrorAccumulator::merge(const PositionErrorAccumulator& other) {
  grow(other.count_.size());
  for (std::size_t l = 0; l < other.count_.size(); ++l) {
    count_[l] += other.count_[l];
    abs_sum_[l] += other.abs_sum_[l];
    sq_sum_[l] += other.sq_sum_[l];
  }
  samples_ += other.samples_;
  total_sq_ += other.total_sq_;
}

PositionErrorProfile PositionErrorAccumulator::profile() const {
  PositionErrorProfile out;
  out.by_position.resize(count_.size());
  for (std::size_t l = 0; l < count_.size(); ++l) {
    if (count_[l] == 0) continue;
    const auto n = static_cast<double>(count_[l]);
    out.by_position[l] = PositionError{static_cast<double>(abs_sum_[l]) / n,
                                       std::sqrt(static_cast<double>(sq_sum_[l]) / n), count_[l]};
  }
  return out;
}

double PositionErrorAccumulator::inaccuracy() const {
  return samples_ ? static_cast<double>(total_sq_) / static_cast<double>(samples_) : 0.0;
}

namespace {

PositionErrorAccumulator accumulate(std::span<const RankingSet> design, std::span<const RankingSet> ideal) {
  if (design.size() != ideal.size()) throw std::invalid_argument("design/ideal session count mismatch");
  PositionErrorAccumulator acc;
  for (std::size_t s = 0; s < design.size(); ++s) {
    if (design[s].size() != ideal[s].size() ||
        !std::equal(design[s].items().begin(), design[s].items().end(), ideal[s].items().begin())) {
      throw std::invalid_argument("design/ideal item sets differ in session index " + std::to_string(s));
    }
    acc.add(design[s].ranks(), ideal[s].ranks());
  }
  return acc;
}

}  // namespace

double inaccuracy(std::span<const RankingSet> design, std::span<const RankingSet> ideal) {
  return accumulate(design, ideal).inaccuracy();
}

PositionErrorProfile position_errors(std::span<const RankingSet> design,
                                     std::span<const RankingSet> ideal) {
  return accumulate(design, ideal).profile();
}

// ---------------------------------------------------------------------------
// Cost

double analytic_cost(const DesignConfig& config, const RampFractions& ramp,
                     std::span<const double> unit_costs) {
  if (unit_costs.size() != ramp.arms()) throw std::invalid_argument("unit_costs length != arm count");
  config.validate(ramp.arms());
  const double a = config.alpha;
  const double p0 = ramp[0];
  double treatment_total = 0.0;
  double treatment_weighted = 0.0;
  for (std::size_t k = 1; k < ramp.arms(); ++k) {
    treatment_total += unit_costs[k];
    treatment_weighted += ramp[k] * unit_costs[k];
  }
  switch (config.mixing_mode) {
    case MixingMode::SingleTreatment:
      return unit_costs[0] + (a * p0 + ramp[1]) * unit_costs[1];
    case MixingMode::GreaterMixing:
      return unit_costs[0] + (1.0 - (1.0 - a) * p0) * treatment_total;
    case MixingMode::LimitedMixing:
      return unit_costs[0] + a * treatment_total + (1.0 - a) * treatment_weighted;
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// Bounds

double bias_bound(std::size_t arm, double p1) {
  const double k = static_cast<double>(arm);
  return (k * (1.0 - p1) + (1.0 - k) * p1) / 2.0;
}

double variance_bound(std::size_t arm, double p1, Rank r, std::size_t session_size) {
  const double c = bias_bound(arm, p1);
  const auto lo = static_cast<double>(r) - 1.0;
  const auto hi = static_cast<double>(session_size) - static_cast<double>(r);
  return 2.0 * std::min(lo, hi) * p1 * (1.0 - p1) + c * (1.0 - c);
}

std::size_t BoundReport::violations() const {
  return static_cast<std::size_t>(std::count_if(cells.begin(), cells.end(), [](const BoundCell& c) {
    return c.bias_violation || c.variance_violation;
  }));
}

BoundAccumulator::BoundAccumulator(std::size_t session_size, std::size_t arm_count)
    : session_size_(session_size), arm_count_(arm_count), cells_(session_size * arm_count) {
  if (session_size == 0) throw std::invalid_argument("session size must be positive");
}

void BoundAccumulator::add(const RankObservation& obs) {
  if (obs.arm >= arm_count_ || obs.ideal < 1 || obs.ideal > session_size_) {
    throw std::invalid_argument("observation outside the accumulator grid");
  }
  auto& m = cells_[obs.arm * session_size_ + (obs.ideal - 1)];
  const std::int64_t d = static_cast<std::int64_t>(obs.design) - static_cast<std::int64_t>(obs.ideal);
  const std::int64_t d2 = d * d;
  m.n += 1;
  m.s1 += d;
  m.s2 += d2;
  m.s3 += d2 * d;
  m.s4 += d2 * d2;
}

void BoundAccumulator::add(std::span<const std::size_t> arms, std::span<const Rank> ideal,
                           std::span<const Rank> design) {
  for (std::size_t i = 0; i < arms.size(); ++i) add(RankObservation{arms[i], ideal[i], design[i]});
}

void BoundAccumulator::merge(const BoundAccumulator& other) {
  if (other.session_size_ != session_size_ || other.arm_count_ != arm_count_) {
    throw std::invalid_argument("bound accumulators have different grids");
  }
  for (std::size_t i = 0; i < cells_.size(); ++i) {
    cells_[i].n += other.cells_[i].n;
    cells_[i].s1 += other.cells_[i].s1;
    cells_[i].s2 += other.cells_[i].s2;
    cells_[i].s3 += other.cells_[i].s3;
    cells_[i].s4 += other.cells_[i].s4;
  }
}

BoundReport BoundAccumulator::report(double p1, double slack_se, std::uint64_t min_samples) const {
  constexpr double kEps = 1e-12;
  BoundReport out;
  out.p1 = p1;
  out.session_size = session_size_;
  out.slack_se = slack_se;
  std::size_t skipped = 0;
  for (std::size_t k = 0; k < arm_count_; ++k) {
    for (std::size_t r = 1; r <= session_size_; ++r) {
      const auto& m = cells_[k * session_size_ + (r - 1)];
      if (m.n == 0) continue;
      BoundCell cell;
      cell.arm = k;
      cell.r = static_cast<Rank>(r);
      cell.samples = m.n;
      cell.bias_bound = bias_bound(k, p1);
      cell.variance_bound = variance_bound(k, p1, cell.r, session_size_);
      if (m.n < min_samples) {
        cell.skipped = true;
        ++skipped;
        out.cells.push_back(cell);
        continue;
      }
      const auto n = static_cast<long double>(m.n);
      const long double e1 = m.s1 / n, e2 = m.s2 / n, e3 = m.s3 / n, e4 = m.s4 / n;
      const long double var = std::max<long double>(0.0L, e2 - e1 * e1);
      const long double mu4 = e4 - 4 * e3 * e1 + 6 * e2 * e1 * e1 - 3 * e1 * e1 * e1 * e1;
      cell.bias = static_cast<double>(e1);
      cell.variance = static_cast<double>(var);
      cell.bias_se = static_cast<double>(std::sqrt(var / n));
      cell.variance_se = static_cast<double>(std::sqrt(std::max<long double>(0.0L, mu4 - var * var) / n));
      const double bias_tol = slack_se * cell.bias_se + kEps;
      const double var_tol = slack_se * cell.variance_se + kEps;
      cell.bias_violation = std::abs(cell.bias) > cell.bias_bound + bias_tol;
      cell.variance_violation = cell.variance > cell.variance_bound + var_tol;
      cell.bias_attains_bound = std::abs(std::abs(cell.bias) - cell.bias_bound) <= bias_tol;
      cell.variance_attains_bound = std::abs(cell.variance - cell.variance_bound) <= var_tol;
      out.cells.push_back(cell);
    }
  }
  if (skipped > 0) {
    out.warnings.push_back(std::to_string(skipped) + " cells skipped with fewer than " +
                           std::to_string(min_samples) + " samples");
  }
  return out;
}

BoundReport bound_report(std::span<const RankObservation> runs, double p1, std::size_t session_size,
                         double slack_se) {
  std::size_t arm_count = 2;
  for (const auto& o : runs) arm_count = std::max(arm_count, o.arm + 1);
  BoundAccumulator acc(session_size, arm_count);
  for (const auto& o : runs) acc.add(o);
  return acc.report(p1, slack_se);
}

}  // namespace unicorn

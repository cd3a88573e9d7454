#include "unicorn/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace unicorn {

// ---------------------------------------------------------------------------
// Environments

void GaussianEnvConfig::validate() const {
  if (!(rho >= -1.0 && rho <= 1.0)) throw std::invalid_argument("rho must lie in [-1, 1]");
  if (slots == 0) throw std::invalid_argument("slots must be positive");
}

Session gen_gaussian_session(const GaussianEnvConfig& config, std::uint64_t index) {
  config.validate();
  Rng rng = Rng::derive(config.seed, {0x6761757373ULL, index});
  const double lateral = std::sqrt(std::max(0.0, 1.0 - config.rho * config.rho));
  std::vector<Item> items;
  std::vector<Score> t0, t1;
  items.reserve(config.slots);
  t0.reserve(config.slots);
  t1.reserve(config.slots);
  for (std::size_t i = 0; i < config.slots; ++i) {
    const std::uint64_t id = index * config.slots + i;
    items.push_back(Item{ItemId{id}, ProducerId{id}});
    const double z1 = rng.normal();
    const double z2 = rng.normal();
    t0.emplace_back(z1);
    t1.emplace_back(config.rho * z1 + lateral * z2);
  }
  std::vector<std::vector<Score>> scores;
  scores.push_back(std::move(t0));
  scores.push_back(std::move(t1));
  return Session(index, std::move(items), std::move(scores));
}

std::vector<Session> gen_gaussian_sessions(const GaussianEnvConfig& config) {
  config.validate();
  std::vector<Session> out;
  out.reserve(config.sessions);
  for (std::size_t s = 0; s < config.sessions; ++s) out.push_back(gen_gaussian_session(config, s));
  return out;
}

void MarketplaceEnvConfig::validate() const {
  if (producers == 0) throw std::invalid_argument("producer count must be positive");
  if (slots == 0) throw std::invalid_argument("slots must be positive");
  if (quality_a == 0 || quality_b == 0) throw std::invalid_argument("quality shapes must be positive");
}

Marketplace gen_marketplace_sessions(const MarketplaceEnvConfig& config) {
  config.validate();
  Marketplace m;
  m.producers.reserve(config.producers);
  m.quality.reserve(config.producers);
  Rng qrng = Rng::derive(config.seed, {0x7175616cULL});
  for (std::size_t p = 0; p < config.producers; ++p) {
    m.producers.push_back(ProducerId{p});
    m.quality.push_back(qrng.beta_integer(config.quality_a, config.quality_b));
  }
  m.sessions.reserve(config.sessions);
  for (std::size_t s = 0; s < config.sessions; ++s) {
    Rng rng = Rng::derive(config.seed, {0x73657373ULL, s});
    std::vector<Item> items;
    std::vector<Score> t0, t1;
    items.reserve(config.slots);
    t0.reserve(config.slots);
    t1.reserve(config.slots);
    for (std::size_t i = 0; i < config.slots; ++i) {
      const auto p = static_cast<std::size_t>(rng.below(config.producers));
      const double q = m.quality[p];
      items.push_back(Item{ItemId{s * config.slots + i}, m.producers[p]});
      t0.emplace_back(rng.uniform(q, 1.0 + q));
      t1.emplace_back(rng.uniform(q, 2.0 * q));
    }
    std::vector<std::vector<Score>> scores;
    scores.push_back(std::move(t0));
    scores.push_back(std::move(t1));
    m.sessions.emplace_back(s, std::move(items), std::move(scores));
  }
  return m;
}

// ---------------------------------------------------------------------------
// Responses

std::string_view to_string(Aggregation a) { return a == Aggregation::Avg ? "avg" : "max"; }

std::string_view to_string(LogBase b) { return b == LogBase::Natural ? "e" : "10"; }

LogBase parse_log_base(std::string_view s) {
  if (s == "e" || s == "natural" || s == "ln") return LogBase::Natural;
  if (s == "10") return LogBase::Ten;
  throw std::invalid_argument("unknown log base '" + std::string(s) + "' (expected e or 10)");
}

double ResponseFunction::exposure(Rank rank) const {
  if (custom_exposure) return custom_exposure(rank);
  const double x = 10.0 + static_cast<double>(rank);
  const double l = log_base == LogBase::Natural ? std::log(x) : std::log10(x);
  const double v = 10.0 / l;
  return v * v;
}

std::string ResponseFunction::name() const {
  return aggregation == Aggregation::Avg ? "avg_fn" : "max_fn";
}

void ResponseAccumulator::add(const Session& session, std::span<const Rank> ranks) {
  if (ranks.size() != session.size()) throw std::invalid_argument("ranks do not match session size");
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    const double y = fn_->exposure(ranks[i]);
    auto& e = entries_[session.item(i).producer];
    e.sum += y;
    e.max = e.count == 0 ? y : std::max(e.max, y);
    e.count += 1;
  }
}

std::map<ProducerId, double> ResponseAccumulator::responses() const {
  std::map<ProducerId, double> out;
  for (const auto& [p, e] : entries_) {
    out.emplace(p, fn_->aggregation == Aggregation::Avg ? e.sum / static_cast<double>(e.count) : e.max);
  }
  return out;
}

namespace {

void check_rankings(std::span<const Session> sessions, std::span<const RankingSet> rankings) {
  if (sessions.size() != rankings.size()) throw std::invalid_argument("session/ranking count mismatch");
}

}  // namespace

std::optional<double> producer_response(std::span<const Session> sessions,
                                        std::span<const RankingSet> rankings, ProducerId producer,
                                        const ResponseFunction& fn) {
  check_rankings(sessions, rankings);
  double sum = 0.0, best = 0.0;
  std::uint64_t count = 0;
  for (std::size_t s = 0; s < sessions.size(); ++s) {
    for (std::size_t i = 0; i < sessions[s].size(); ++i) {
      if (sessions[s].item(i).producer != producer) continue;
      const double y = fn.exposure(rankings[s].rank_of(sessions[s].item(i).id));
      sum += y;
      best = count == 0 ? y : std::max(best, y);
      ++count;
    }
  }
  if (count == 0) return std::nullopt;
  return fn.aggregation == Aggregation::Avg ? sum / static_cast<double>(count) : best;
}

std::map<ProducerId, double> producer_responses(std::span<const Session> sessions,
                                                std::span<const RankingSet> rankings,
                                                const ResponseFunction& fn) {
  check_rankings(sessions, rankings);
  ResponseAccumulator acc(fn);
  std::vector<Rank> ranks;
  for (std::size_t s = 0; s < sessions.size(); ++s) {
    ranks.resize(sessions[s].size());
    for (std::size_t i = 0; i < sessions[s].size(); ++i) {
      ranks[i] = rankings[s].rank_of(sessions[s].item(i).id);
    }
    acc.add(sessions[s], ranks);
  }
  return acc.responses();
}

// ---------------------------------------------------------------------------
// Treatment effect

AteResult estimate_ate(const std::map<ProducerId, double>& responses,
                       const TreatmentAllocation& allocation, std::size_t treatment_arm,
                       std::size_t control_arm, double ground_truth) {
  double t_sum = 0.0, c_sum = 0.0;
  std::size_t t_n = 0, c_n = 0;
  for (const auto& [p, y] : responses) {
    const std::size_t arm = allocation.arm_of(p);
    if (arm == treatment_arm) {
      t_sum += y;
      ++t_n;
    } else if (arm == control_arm) {
      c_sum += y;
      ++c_n;
    }
  }
  if (t_n == 0) throw std::invalid_argument("treatment arm has no responding producer");
  if (c_n == 0) throw std::invalid_argument("control arm has no responding producer");
  AteResult r;
  r.treatment_mean = t_sum / static_cast<double>(t_n);
  r.control_mean = c_sum / static_cast<double>(c_n);
  r.treatment_producers = t_n;
  r.control_producers = c_n;
  r.estimate = r.treatment_mean - r.control_mean;
  r.ground_truth = ground_truth;
  r.error = r.estimate - ground_truth;
  return r;
}

double ground_truth_ate(std::span<const Session> sessions, const ResponseFunction& fn,
                        std::uint64_t seed, TiePolicy tie_policy) {
  if (tie_policy == TiePolicy::FavorHigherArm) tie_policy = TiePolicy::Random;  // one arm per world
  ResponseAccumulator control(fn), treatment(fn);
  for (const auto& session : sessions) {
    Rng r0 = Rng::derive(seed, {session.id(), 0});
    Rng r1 = Rng::derive(seed, {session.id(), 1});
    control.add(session, rank_positions(session.scores(0), tie_policy, r0));
    treatment.add(session, rank_positions(session.scores(1), tie_policy, r1));
  }
  const auto y0 = control.responses();
  const auto y1 = treatment.responses();
  if (y0.empty()) return 0.0;
  double diff = 0.0;
  for (const auto& [p, v0] : y0) diff += y1.at(p) - v0;
  return diff / static_cast<double>(y0.size());
}

}  // namespace unicorn

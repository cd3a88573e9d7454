#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "fixtures.hpp"
#include "unicorn/designs.hpp"
#include "unicorn/metrics.hpp"
#include "unicorn/simulation.hpp"

using namespace unicorn;

namespace {

double sample_correlation(const std::vector<Session>& sessions) {
  double n = 0, sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (const auto& s : sessions) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      const double x = s.score(0, i).value(), y = s.score(1, i).value();
      n += 1;
      sx += x;
      sy += y;
      sxx += x * x;
      syy += y * y;
      sxy += x * y;
    }
  }
  const double cov = sxy / n - sx / n * sy / n;
  return cov / std::sqrt((sxx / n - sx / n * sx / n) * (syy / n - sy / n * sy / n));
}

Session session_of(std::uint64_t id, std::vector<std::uint64_t> producers, std::vector<double> t0,
                   std::vector<double> t1) {
  std::vector<Item> items;
  for (std::size_t i = 0; i < producers.size(); ++i)
    items.push_back(Item{ItemId{id * 10 + i}, ProducerId{producers[i]}});
  return Session(id, std::move(items), {to_scores(t0), to_scores(t1)});
}

double reference_exposure(double rank) { return std::pow(10.0 / std::log(10.0 + rank), 2); }

}  // namespace

TEST(GaussianEnv, CorrelationMatchesRho) {
  for (double rho : {-0.4, 0.2, 0.8}) {
    GaussianEnvConfig cfg{rho, 100, 200, 31};
    const auto sessions = gen_gaussian_sessions(cfg);
    const double r = sample_correlation(sessions);
    // Fisher z: atanh(r) ~ N(atanh(rho), 1 / (n - 3)).
    EXPECT_NEAR(std::atanh(r), std::atanh(rho), 3.0 / std::sqrt(20000.0 - 3.0)) << "rho " << rho;
  }
  GaussianEnvConfig reversed{-1.0, 50, 10, 2};
  EXPECT_NEAR(sample_correlation(gen_gaussian_sessions(reversed)), -1.0, 1e-12);
}

TEST(GaussianEnv, SessionsArePureFunctionsOfIndex) {
  GaussianEnvConfig cfg{0.2, 30, 8, 5};
  const auto all = gen_gaussian_sessions(cfg);
  const auto fifth = gen_gaussian_session(cfg, 5);
  ASSERT_EQ(all[5].size(), fifth.size());
  for (std::size_t i = 0; i < fifth.size(); ++i) {
    EXPECT_EQ(all[5].score(0, i), fifth.score(0, i));
    EXPECT_EQ(all[5].score(1, i), fifth.score(1, i));
  }
  EXPECT_THROW(gen_gaussian_session(GaussianEnvConfig{1.5}, 0), std::invalid_argument);
}

TEST(GaussianEnv, PerfectCorrelationGivesZeroInaccuracy) {
  GaussianEnvConfig cfg{1.0, 40, 50, 3};
  const auto alloc = TreatmentAllocation::hashed(RampFractions::two_arm(0.5), 8);
  PositionErrorAccumulator acc;
  for (std::uint64_t s = 0; s < cfg.sessions; ++s) {
    const auto session = gen_gaussian_session(cfg, s);
    Rng rng(s), ri(s);
    const auto out = unicorn_rank(session, alloc, DesignConfig{0.0}, rng);
    const auto arms = session_arms(session, alloc);
    acc.add(out.ranking.ranks(), ideal_ranks(session, arms, TiePolicy::Random, ri));
  }
  EXPECT_EQ(acc.inaccuracy(), 0.0);
}

TEST(GaussianEnv, ReversedModelsReverseIdealRanks) {
  GaussianEnvConfig cfg{-1.0, 25, 1, 4};
  const auto s = gen_gaussian_session(cfg, 0);
  Rng r0(1), r1(1);
  const auto a = rank_by_scores(s, 0, TiePolicy::Random, r0);
  const auto b = rank_by_scores(s, 1, TiePolicy::Random, r1);
  for (std::size_t i = 0; i < s.size(); ++i) EXPECT_EQ(a.rank(i) + b.rank(i), s.size() + 1);
}

TEST(MarketplaceEnv, QualityMeanAndScoreSupports) {
  MarketplaceEnvConfig cfg;
  cfg.producers = 100000;
  cfg.sessions = 20;
  cfg.seed = 77;
  const auto m = gen_marketplace_sessions(cfg);
  double sum = 0;
  for (double q : m.quality) sum += q;
  EXPECT_NEAR(sum / cfg.producers, 2.0 / 7.0, 3 * std::sqrt(10.0 / 392.0 / cfg.producers));
  for (const auto& s : m.sessions) {
    ASSERT_EQ(s.size(), cfg.slots);
    for (std::size_t i = 0; i < s.size(); ++i) {
      const double q = m.quality[value(s.item(i).producer)];
      ASSERT_GE(s.score(0, i).value(), q);
      ASSERT_LE(s.score(0, i).value(), 1 + q);
      ASSERT_GE(s.score(1, i).value(), q);
      ASSERT_LE(s.score(1, i).value(), 2 * q);
    }
  }
}

TEST(Response, ExposureValues) {
  ResponseFunction avg;
  EXPECT_NEAR(avg.exposure(1), 17.391, 1e-3);
  EXPECT_DOUBLE_EQ(avg.exposure(4), reference_exposure(4));
  for (Rank r = 1; r < 200; ++r) ASSERT_GT(avg.exposure(r), avg.exposure(r + 1));
  ResponseFunction ten{Aggregation::Avg, LogBase::Ten};
  EXPECT_DOUBLE_EQ(ten.exposure(1), std::pow(10.0 / std::log10(11.0), 2));
  EXPECT_EQ(avg.name(), "avg_fn");
  EXPECT_EQ(ResponseFunction{Aggregation::Max}.name(), "max_fn");
  EXPECT_EQ(parse_log_base("10"), LogBase::Ten);
  EXPECT_EQ(parse_log_base("e"), LogBase::Natural);
  EXPECT_THROW(parse_log_base("2"), std::invalid_argument);
}

TEST(Response, MaxDominatesAverageAndAbsentIsEmpty) {
  Rng g(9);
  MarketplaceEnvConfig cfg;
  cfg.producers = 50;
  cfg.slots = 20;
  cfg.sessions = 30;
  cfg.seed = 3;
  const auto m = gen_marketplace_sessions(cfg);
  std::vector<RankingSet> rankings;
  for (const auto& s : m.sessions) rankings.push_back(rank_by_scores(s, 0, TiePolicy::Random, g));
  const ResponseFunction avg{Aggregation::Avg}, max{Aggregation::Max};
  const auto ya = producer_responses(m.sessions, rankings, avg);
  const auto ym = producer_responses(m.sessions, rankings, max);
  ASSERT_EQ(ya.size(), ym.size());
  for (const auto& [p, v] : ya) EXPECT_GE(ym.at(p) + 1e-12, v);
  EXPECT_FALSE(producer_response(m.sessions, rankings, ProducerId{999}, avg).has_value());
  const auto first = ya.begin();
  EXPECT_DOUBLE_EQ(*producer_response(m.sessions, rankings, first->first, avg), first->second);
}

TEST(Ate, HandFixture) {
  // Treatment producers respond 2 and 4, control 3.
  const std::map<ProducerId, double> y{{ProducerId{0}, 2}, {ProducerId{1}, 4}, {ProducerId{2}, 3}};
  const auto alloc = fixtures::make_allocation({1, 1, 0});
  const auto r = estimate_ate(y, alloc, 1, 0, 0.5);
  EXPECT_DOUBLE_EQ(r.estimate, 0.0);
  EXPECT_DOUBLE_EQ(r.error, -0.5);
  EXPECT_EQ(r.treatment_producers, 2u);
  EXPECT_EQ(r.control_producers, 1u);
  const auto none = fixtures::make_allocation({1, 1, 1});
  EXPECT_THROW(estimate_ate(y, none), std::invalid_argument);
}

TEST(GroundTruth, IdenticalModelsHaveNoEffect) {
  MarketplaceEnvConfig cfg;
  cfg.producers = 40;
  cfg.slots = 15;
  cfg.sessions = 30;
  cfg.seed = 4;
  auto m = gen_marketplace_sessions(cfg);
  std::vector<Session> same;
  for (const auto& s : m.sessions) {
    const auto t0 = s.scores(0);
    std::vector<Item> items(s.items().begin(), s.items().end());
    same.emplace_back(s.id(), std::move(items),
                      std::vector<std::vector<Score>>{{t0.begin(), t0.end()}, {t0.begin(), t0.end()}});
  }
  EXPECT_DOUBLE_EQ(ground_truth_ate(same, ResponseFunction{Aggregation::Avg}, 1), 0.0);
  EXPECT_DOUBLE_EQ(ground_truth_ate(same, ResponseFunction{Aggregation::Max}, 1), 0.0);
}

TEST(GroundTruth, HandRollout) {
  // Session 1: producers 0, 1, 2; T_0 order 0, 1, 2, T_1 reversed.
  // Session 2: producers 0, 0, 1; both models agree.
  const std::vector<Session> sessions{session_of(1, {0, 1, 2}, {3, 2, 1}, {1, 2, 3}),
                                      session_of(2, {0, 0, 1}, {3, 2, 1}, {3, 2, 1})};
  const double e1 = reference_exposure(1), e3 = reference_exposure(3);
  // avg: producer 0 moves (e1 + e1 + e2) / 3 -> (e3 + e1 + e2) / 3, producer 2 e3 -> e1.
  EXPECT_NEAR(ground_truth_ate(sessions, ResponseFunction{Aggregation::Avg}, 5),
              ((e3 - e1) / 3 + (e1 - e3)) / 3, 1e-12);
  // max: only producer 2 changes.
  EXPECT_NEAR(ground_truth_ate(sessions, ResponseFunction{Aggregation::Max}, 5), (e1 - e3) / 3, 1e-12);
}

TEST(Response, ConstantExposureMakesEveryEstimateZero) {
  MarketplaceEnvConfig cfg;
  cfg.producers = 60;
  cfg.slots = 20;
  cfg.sessions = 40;
  cfg.seed = 6;
  const auto m = gen_marketplace_sessions(cfg);
  ResponseFunction flat;
  flat.custom_exposure = [](Rank) { return 1.0; };
  const auto two = TreatmentAllocation::hashed(RampFractions::two_arm(0.5), 1);
  const auto three = TreatmentAllocation::hashed(RampFractions({0.8, 0.1, 0.1}), 1);
  for (int design = 0; design < 3; ++design) {
    ResponseAccumulator acc(flat);
    Rng rng(design);
    for (const auto& s : m.sessions) {
      const auto out = design == 0   ? unicorn_rank(s, two, DesignConfig{0.2}, rng)
                       : design == 1 ? oasis_rank(s, two, rng)
                                     : small_ramp_rank(s, three, rng);
      acc.add(s, out.ranking.ranks());
    }
    const auto& alloc = design == 2 ? three : two;
    const auto r = estimate_ate(acc.responses(), alloc, design == 2 ? 2 : 1, design == 2 ? 1 : 0);
    EXPECT_EQ(r.estimate, 0.0) << design;
  }
  EXPECT_EQ(ground_truth_ate(m.sessions, flat, 2), 0.0);
}

TEST(Method, NamesRoundTrip) {
  for (const auto& m : default_methods()) {
    const auto back = Method::parse(m.name());
    EXPECT_EQ(back.kind, m.kind);
    EXPECT_EQ(back.alpha, m.alpha);
  }
  EXPECT_EQ((Method{MethodKind::UniCoRn, 0.2}.name()), "unicorn(0.2)");
  EXPECT_THROW(Method::parse("bandit"), std::invalid_argument);
}

TEST(Comparison, ReplicationShape) {
  ComparisonConfig cfg;
  cfg.env.producers = 100;
  cfg.env.slots = 20;
  cfg.env.sessions = 30;
  cfg.replications = 2;
  cfg.seed = 11;
  const auto rep = run_replication(cfg, 0);
  const std::size_t cells = cfg.treatment_fractions.size() * cfg.methods.size();
  EXPECT_EQ(rep.errors.size(), cells * 2);
  EXPECT_EQ(rep.costs.size(), cells);
  std::set<std::string> fns;
  for (const auto& row : rep.errors) {
    fns.insert(row.fn);
    EXPECT_NEAR(row.error, row.estimate - row.truth, 1e-12);
  }
  EXPECT_EQ(fns, (std::set<std::string>{"avg_fn", "max_fn"}));
  for (const auto& c : rep.costs) {
    EXPECT_GE(c.cost_per_item, 1.0);
    EXPECT_LE(c.cost_per_item, 2.0);
  }
  const auto again = run_replication(cfg, 0);
  for (std::size_t i = 0; i < rep.errors.size(); ++i) EXPECT_EQ(rep.errors[i].estimate, again.errors[i].estimate);
}

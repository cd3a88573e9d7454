#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "fixtures.hpp"
#include "unicorn/allocation.hpp"
#include "unicorn/core.hpp"

using namespace unicorn;
using fixtures::make_allocation;
using fixtures::make_session;

namespace {

std::vector<ItemId> ids(std::size_t n) {
  std::vector<ItemId> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(ItemId{i});
  return out;
}

}  // namespace

TEST(Score, OrderingPutsSentinelLast) {
  EXPECT_LT(Score::minus_infinity(), Score(-1e300));
  EXPECT_LT(Score(1.0), Score(2.0));
  EXPECT_EQ(Score::minus_infinity(), Score::minus_infinity());
  EXPECT_EQ(Score(-std::numeric_limits<double>::infinity()), Score::minus_infinity());
}

TEST(Score, RejectsNanAndPlusInfinity) {
  EXPECT_THROW(Score(std::nan("")), std::invalid_argument);
  EXPECT_THROW(Score(std::numeric_limits<double>::infinity()), std::invalid_argument);
}

TEST(RankByScores, DescendingOrder) {
  Rng rng(1);
  const std::vector<double> s{0.9, 0.5, 0.7};
  const auto r = rank_by_scores(ids(3), s, TiePolicy::Random, rng);
  EXPECT_EQ(r.rank(0), 1u);
  EXPECT_EQ(r.rank(1), 3u);
  EXPECT_EQ(r.rank(2), 2u);
}

TEST(RankByScores, EmptyAndNanAreErrors) {
  Rng rng(1);
  const std::vector<double> none;
  EXPECT_THROW(rank_by_scores(ids(0), none, TiePolicy::Random, rng), std::invalid_argument);
  const std::vector<double> bad{1.0, std::nan("")};
  EXPECT_THROW(rank_by_scores(ids(2), bad, TiePolicy::Random, rng), std::invalid_argument);
}

TEST(RankByScores, MinusInfinityRanksAfterFiniteScores) {
  Rng rng(3);
  const std::vector<Score> s{Score::minus_infinity(), Score(-5.0), Score(2.0), Score::minus_infinity()};
  const auto r = rank_by_scores(ids(4), s, TiePolicy::Random, rng);
  EXPECT_EQ(r.rank(2), 1u);
  EXPECT_EQ(r.rank(1), 2u);
  EXPECT_GE(r.rank(0), 3u);
  EXPECT_GE(r.rank(3), 3u);
}

TEST(RankByScores, RandomTieIsFair) {
  const std::vector<double> s{0.5, 0.5};
  const int trials = 20000;
  int a_first = 0;
  for (int t = 0; t < trials; ++t) {
    Rng rng = Rng::derive(99, {static_cast<std::uint64_t>(t)});
    if (rank_by_scores(ids(2), s, TiePolicy::Random, rng).rank(0) == 1) ++a_first;
  }
  EXPECT_NEAR(a_first / double(trials), 0.5, 3 * std::sqrt(0.25 / trials));
}

TEST(RankByScores, FavorHigherArmPutsTreatmentFirst) {
  Rng rng(5);
  const std::vector<double> s{0.5, 0.5};  // A, B
  const std::vector<std::size_t> arms{0, 1};
  const auto r = rank_by_scores(ids(2), s, TiePolicy::FavorHigherArm, rng, arms);
  EXPECT_EQ(r.rank(1), 1u);
  EXPECT_EQ(r.rank(0), 2u);
}

TEST(RankByScores, FavorHigherArmRequiresArms) {
  Rng rng(5);
  const std::vector<double> s{0.5, 0.5};
  EXPECT_THROW(rank_by_scores(ids(2), s, TiePolicy::FavorHigherArm, rng), std::invalid_argument);
}

TEST(RankByScores, AlwaysABijection) {
  Rng rng(17);
  for (std::size_t n = 1; n <= 200; ++n) {
    std::vector<double> s(n);
    // Coarse values force ties.
    for (auto& v : s) v = std::floor(rng.uniform() * 10);
    const auto r = rank_by_scores(ids(n), s, TiePolicy::Random, rng);
    ASSERT_TRUE(r.is_permutation()) << "n=" << n;
  }
}

TEST(RankByScores, InvariantUnderIncreasingTransforms) {
  Rng gen(23);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> s(30), lin(30), cube(30);
    for (std::size_t i = 0; i < s.size(); ++i) {
      s[i] = gen.normal();
      lin[i] = 2 * s[i] + 1;
      cube[i] = s[i] * s[i] * s[i];
    }
    Rng r1(t), r2(t), r3(t);
    const auto base = rank_by_scores(ids(30), s, TiePolicy::Random, r1);
    EXPECT_EQ(base, rank_by_scores(ids(30), lin, TiePolicy::Random, r2));
    EXPECT_EQ(base, rank_by_scores(ids(30), cube, TiePolicy::Random, r3));
  }
}

TEST(Session, ValidatesItemsAndTables) {
  EXPECT_THROW(Session(0, {}), std::invalid_argument);
  std::vector<Item> dup{{ItemId{1}, ProducerId{1}}, {ItemId{1}, ProducerId{2}}};
  EXPECT_THROW(Session(0, dup), std::invalid_argument);
  std::vector<Item> two{{ItemId{1}, ProducerId{1}}, {ItemId{2}, ProducerId{2}}};
  EXPECT_THROW(Session(0, two, {{Score(1.0)}}), std::invalid_argument);
  const Session ok(0, two, {{Score(1.0), Score(2.0)}});
  EXPECT_THROW(ok.scores(1), std::out_of_range);
  EXPECT_EQ(ok.position_of(ItemId{2}), 1u);
  EXPECT_THROW(ok.position_of(ItemId{3}), std::out_of_range);
}

TEST(IdealRank, SingleArmCollapse) {
  Rng g(2);
  const Session s = fixtures::random_session(g, 12);
  const auto alloc = make_allocation(std::vector<std::size_t>(12, 0));
  Rng r1(8), r2(8);
  const auto ideal = ideal_rank(s, alloc, TiePolicy::Random, r1);
  EXPECT_EQ(ideal, rank_by_scores(s, 0, TiePolicy::Random, r2));
}

TEST(IdealRank, HandFixtureHasConflicts) {
  // A, B, C, D: T_0 order A, B, C, D; T_1 order D, C, B, A. P_0 = {A, B}, P_1 = {C, D}.
  const Session s = make_session({{4, 3, 2, 1}, {1, 2, 3, 4}});
  const auto alloc = make_allocation({0, 0, 1, 1});
  Rng rng(1);
  const auto ideal = ideal_rank(s, alloc, TiePolicy::Random, rng);
  EXPECT_EQ(ideal.rank_of(ItemId{0}), 1u);
  EXPECT_EQ(ideal.rank_of(ItemId{1}), 2u);
  EXPECT_EQ(ideal.rank_of(ItemId{3}), 1u);
  EXPECT_EQ(ideal.rank_of(ItemId{2}), 2u);
  EXPECT_FALSE(ideal.is_permutation());
}

TEST(IdealRank, MissingTableIsAnError) {
  const Session s = make_session({{1, 2, 3}});
  const auto alloc = make_allocation({0, 1, 0});
  Rng rng(1);
  EXPECT_THROW(ideal_rank(s, alloc, TiePolicy::Random, rng), std::invalid_argument);
}

TEST(IdealRank, EqualsPerArmCounterfactualRanking) {
  Rng g(31);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 2 + g.below(40);
    const Session s = fixtures::random_session(g, n, 3);
    std::vector<std::size_t> arms(n);
    for (auto& a : arms) a = g.below(3);
    const auto alloc = make_allocation(arms, 3);
    // Continuous scores: no ties, so the per-arm rankings are seed-free.
    Rng r(0);
    const auto ideal = ideal_rank(s, alloc, TiePolicy::Random, r);
    for (std::size_t k = 0; k < 3; ++k) {
      Rng rk(0);
      const auto full = rank_by_scores(s, k, TiePolicy::Random, rk);
      for (std::size_t i = 0; i < n; ++i) {
        if (arms[i] == k) ASSERT_EQ(ideal.rank(i), full.rank(i));
      }
    }
  }
}

TEST(CostLedger, CountsAndMerges) {
  CostLedger a(2), b;
  a.charge(0, 3);
  a.charge(1);
  b.charge(2, 5);
  a.merge(b);
  EXPECT_EQ(a.calls(0), 3u);
  EXPECT_EQ(a.calls(1), 1u);
  EXPECT_EQ(a.calls(2), 5u);
  EXPECT_EQ(a.total(), 9u);
}

TEST(CountingModel, ChargesEveryCall) {
  const Session s = make_session({{1, 2, 3}});
  const TableModel table(0);
  CostLedger ledger(1);
  const CountingModel counted(table, ledger, 0);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(counted.score(s, i), s.score(0, i));
  counted.score(s, 0);
  EXPECT_EQ(ledger.calls(0), 4u);
}

TEST(RankingSet, ValidatesRanks) {
  EXPECT_THROW(RankingSet({ItemId{0}}, {0}), std::invalid_argument);
  EXPECT_THROW(RankingSet({ItemId{0}, ItemId{1}}, {1, 3}), std::invalid_argument);
  const RankingSet r({ItemId{5}, ItemId{6}, ItemId{7}}, {2, 3, 1});
  EXPECT_EQ(r.ordering(), (std::vector<ItemId>{ItemId{7}, ItemId{5}, ItemId{6}}));
  EXPECT_EQ(r.rank_of(ItemId{6}), 3u);
}

TEST(TiePolicy, ParsesNames) {
  EXPECT_EQ(parse_tie_policy("random"), TiePolicy::Random);
  EXPECT_EQ(parse_tie_policy("favor-treatment"), TiePolicy::FavorHigherArm);
  EXPECT_THROW(parse_tie_policy("first"), std::invalid_argument);
}

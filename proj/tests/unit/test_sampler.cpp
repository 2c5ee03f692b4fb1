#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "adp/bandit.hpp"
#include "adp/sampler.hpp"
#include "oracles/oracles.hpp"

namespace {

const adp::RandomizationSpace kSpace({{"length", 1.0, 0.8, 1.2}});

adp::ParamVector pv(double x) { return adp::ParamVector{{x}}; }

TEST(Candidates, EmptyBufferDrawsAllFromSpace) {
  const adp::BinGrid grid(kSpace, 0.01);
  adp::ParamReplayBuffer buffer;
  adp::Rng rng(1);
  const auto c = adp::sample_candidates(kSpace, buffer, grid, rng);
  ASSERT_EQ(c.size(), 40u);
  for (const auto& x : c) EXPECT_FALSE(x.from_buffer);
}

TEST(Candidates, ShortBufferIsToppedUpFromSpace) {
  const adp::BinGrid grid(kSpace, 0.01);
  adp::ParamReplayBuffer buffer;
  for (double x : {0.81, 0.9, 1.0, 1.1}) buffer.push(pv(x));
  adp::Rng rng(1);
  const auto c = adp::sample_candidates(kSpace, buffer, grid, rng);
  ASSERT_EQ(c.size(), 40u);
  EXPECT_EQ(std::count_if(c.begin(), c.end(), [](const auto& x) { return x.from_buffer; }), 4);
}

TEST(Candidates, FullBufferGivesTenDistinctEntries) {
  const adp::BinGrid grid(kSpace, 0.01);
  adp::ParamReplayBuffer buffer;
  for (int i = 0; i < 40; ++i) buffer.push(pv(0.8 + 0.01 * i));
  adp::Rng rng(2);
  const auto c = adp::sample_candidates(kSpace, buffer, grid, rng);
  std::set<double> seen;
  int n = 0;
  for (const auto& x : c) {
    if (!x.from_buffer) continue;
    ++n;
    seen.insert(x.params[0]);
  }
  EXPECT_EQ(n, 10);
  EXPECT_EQ(seen.size(), 10u);
}

TEST(Tables, FreshTablesGiveSentinelAndZero) {
  const adp::BinGrid grid(kSpace, 0.01);
  adp::ParamReplayBuffer buffer;
  adp::Rng rng(3);
  auto c = adp::sample_candidates(kSpace, buffer, grid, rng);
  adp::ScoreTables tables;
  adp::score_candidates(tables, c);
  for (const auto& x : c) {
    EXPECT_EQ(x.raw_informativeness, adp::kUnseenInformativeness);
    EXPECT_EQ(x.raw_density, 0.0);
  }
}

TEST(Tables, DensityIsVisitShare) {
  adp::ScoreTables t;
  const adp::BinIndex b1{{1}}, b2{{2}};
  adp::update_tables(t, {b1, b1, b1, b2}, {{b1, 1.0}, {b2, 2.0}});
  EXPECT_DOUBLE_EQ(t.density(b1), 0.75);
  EXPECT_DOUBLE_EQ(t.density(b2), 0.25);
  EXPECT_EQ(t.density(adp::BinIndex{{3}}), 0.0);
}

TEST(Tables, LatestScoreReplacesPrevious) {
  adp::ScoreTables t;
  const adp::BinIndex b{{4}};
  adp::update_tables(t, {b}, {{b, 1.47025}});
  EXPECT_EQ(t.informativeness(b), 1.47025);
  EXPECT_EQ(t.counts.at(b), 1);
  adp::update_tables(t, {b}, {{b, 5.0}});
  adp::update_tables(t, {b}, {{b, 1.0}});
  EXPECT_EQ(t.informativeness(b), 1.0);
}

TEST(Tables, DoubleSelectionCountsTwice) {
  adp::ScoreTables t;
  const adp::BinIndex b{{4}};
  adp::update_tables(t, {b, b}, {{b, 0.3}});
  EXPECT_EQ(t.counts.at(b), 2);
  EXPECT_EQ(t.total_count, 2);
  EXPECT_THROW(adp::update_tables(t, {adp::BinIndex{{5}}}, {{b, 0.3}}), adp::LookupError);
}

TEST(Rank, Definition) {
  EXPECT_EQ(adp::rank_scores({0.5, 2.0, 1.0}), (std::vector<int>{3, 1, 2}));
  EXPECT_EQ(adp::rank_scores({7, 7, 7, 7}), (std::vector<int>{1, 2, 3, 4}));
  EXPECT_EQ(adp::rank_scores({9, 5, 2, -1}), (std::vector<int>{1, 2, 3, 4}));
  EXPECT_EQ(adp::rank_scores({adp::kUnseenInformativeness, 3.0, adp::kUnseenInformativeness}),
            (std::vector<int>{1, 3, 2}));
}

TEST(Select, WorkedExample) {
  const std::vector<int> ri{1, 2, 3, 4}, rd{4, 3, 2, 1};
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(adp::selection_score(ri[i], rd[i], 0.2), static_cast<double>(i), 1e-12);
  EXPECT_EQ(adp::select_subset(ri, rd, 0.2, 2), (std::vector<std::size_t>{0, 1}));
}

TEST(Select, WeightDegeneracies) {
  const std::vector<int> ri{3, 1, 4, 2, 5}, rd{2, 5, 1, 4, 3};
  auto sorted = [](std::vector<std::size_t> v) {
    std::sort(v.begin(), v.end());
    return v;
  };
  EXPECT_EQ(sorted(adp::select_subset(ri, rd, 0.0, 2)), (std::vector<std::size_t>{1, 3}));
  EXPECT_EQ(sorted(adp::select_subset(ri, rd, 1.0, 2)), (std::vector<std::size_t>{1, 3}));
  EXPECT_EQ(sorted(adp::select_subset(ri, rd, 1.0, 1)), (std::vector<std::size_t>{1}));
  EXPECT_THROW(adp::select_subset(ri, rd, 0.5, 6), adp::InputError);
  EXPECT_THROW(adp::select_subset(ri, rd, 1.5, 2), adp::InputError);
}

TEST(Select, AgreesWithExhaustiveEnumeration) {
  adp::Rng rng(5);
  const double omegas[] = {0.0, 0.2, 0.5, 0.8, 1.0};
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + rng() % 12;
    const std::size_t m = 1 + rng() % std::min<std::size_t>(4, n);
    std::vector<double> raw_i(n), raw_d(n);
    for (std::size_t i = 0; i < n; ++i) {
      raw_i[i] = static_cast<double>(rng() % 4);  // small alphabet forces ties
      raw_d[i] = static_cast<double>(rng() % 4);
    }
    const auto ri = adp::rank_scores(raw_i), rd = adp::rank_scores(raw_d);
    const double w = omegas[trial % 5];
    auto got = adp::select_subset(ri, rd, w, m);
    std::sort(got.begin(), got.end());
    EXPECT_EQ(got, oracle::subset_bruteforce(ri, rd, w, m)) << "trial " << trial;
  }
}

TEST(Buffer, FifoEviction) {
  adp::ParamReplayBuffer buffer(3);
  adp::buffer_insert(buffer, {pv(1), pv(2), pv(3), pv(4)});
  ASSERT_EQ(buffer.size(), 3u);
  EXPECT_EQ(buffer[0], pv(2));
  EXPECT_EQ(buffer[2], pv(4));
}

TEST(Buffer, KeepsLastFortyInOrder) {
  adp::ParamReplayBuffer buffer;
  std::vector<adp::ParamVector> first;
  for (int i = 0; i < 10; ++i) first.push_back(pv(i));
  adp::buffer_insert(buffer, first);
  EXPECT_EQ(buffer.size(), 10u);
  EXPECT_EQ(buffer[9], pv(9));
  for (int it = 1; it < 5; ++it) {
    std::vector<adp::ParamVector> batch;
    for (int i = 0; i < 10; ++i) batch.push_back(pv(10 * it + i));
    adp::buffer_insert(buffer, batch);
  }
  ASSERT_EQ(buffer.size(), 40u);
  for (int i = 0; i < 40; ++i) EXPECT_EQ(buffer[i], pv(10 + i));
}

TEST(Bandit, SymmetricPosteriorsSplitEvenly) {
  adp::BanditState s;
  adp::Rng rng(10);
  int arm0 = 0;
  for (int i = 0; i < 10000; ++i) arm0 += adp::bandit_sample(s, rng).arm == 0;
  EXPECT_NEAR(arm0 / 10000.0, 0.5, 0.02);
  const auto ref = oracle::beta_argmax_freq({{1, 1}, {1, 1}}, 10000, 3);
  EXPECT_NEAR(ref[0], 0.5, 0.02);
}

TEST(Bandit, ConfidentPosteriorDominates) {
  adp::BanditState s;
  s.arms = {{0.2, 1000, 1}, {0.8, 1, 1000}};
  adp::Rng rng(11);
  int arm0 = 0;
  for (int i = 0; i < 10000; ++i) arm0 += adp::bandit_sample(s, rng).arm == 0;
  EXPECT_GT(arm0 / 10000.0, 0.999);
}

TEST(Bandit, SingleArmAlwaysPulled) {
  adp::BanditState s;
  s.arms = {{0.5, 3, 7}};
  adp::Rng rng(1);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(adp::bandit_sample(s, rng).omega, 0.5);
}

TEST(Bandit, UpdateBranches) {
  adp::BanditState s;
  adp::bandit_update(s, 0, 3.0);  // first call only records the baseline
  EXPECT_EQ(s.arms[0].alpha, 1);
  EXPECT_EQ(s.arms[0].beta, 1);
  EXPECT_EQ(s.last_validation_return, 3.0);

  adp::BanditState success = s;
  adp::bandit_update(success, 0, 5.0);
  EXPECT_EQ(success.arms[0].alpha, 2);
  EXPECT_EQ(success.arms[0].beta, 1);

  adp::BanditState failure = s;
  adp::bandit_update(failure, 0, 3.0);
  EXPECT_EQ(failure.arms[0].alpha, 1);
  EXPECT_EQ(failure.arms[0].beta, 2);
  EXPECT_EQ(failure.arms[1].alpha + failure.arms[1].beta, 2);
}

}  // namespace

#include <gtest/gtest.h>

#include <cmath>

#include "adp/envs.hpp"
#include "adp/policy.hpp"
#include "adp/ppo.hpp"
#include "oracles/oracles.hpp"

namespace {

adp::ParamVector ones(adp::EnvKind kind) {
  return adp::ParamVector{std::vector<double>(adp::env_info(kind).params.dim(), 1.0)};
}

adp::TrajectoryBatch rollouts(adp::EnvKind kind, std::size_t n_envs, std::uint64_t seed, int workers = 1) {
  const auto& info = adp::env_info(kind);
  const auto policy = adp::init_policy(info.obs_dim, info.act_dim, 1);
  const auto value = adp::init_value(info.obs_dim, 2);
  std::vector<adp::Environment> envs;
  std::vector<adp::RolloutSource> sources;
  for (std::size_t i = 0; i < n_envs; ++i) {
    auto xi = ones(kind);
    xi[0] = 0.9 + 0.05 * static_cast<double>(i);
    envs.push_back(adp::make_env(kind, xi, 100 + i));
    sources.push_back({xi, adp::BinIndex{{static_cast<int>(i)}}});
  }
  return adp::collect_rollouts(policy, value, envs, sources, adp::PpoHyper{}, seed, workers);
}

TEST(Rollouts, CountsStepsAndTagsEpisodes) {
  const auto batch = rollouts(adp::EnvKind::kPointMass, 1, 5);
  EXPECT_EQ(batch.size(), 500u);
  ASSERT_EQ(batch.episodes.size(), 5u);
  for (const auto& ep : batch.episodes) {
    EXPECT_EQ(ep.length(), 100u);
    EXPECT_EQ(ep.source, (adp::ParamVector{{0.9, 1.0, 1.0, 1.0}}));
    EXPECT_FALSE(ep.failed);
  }
}

TEST(Rollouts, DeterministicAndIndependentOfWorkerCount) {
  const auto a = rollouts(adp::EnvKind::kCartpole, 4, 9, 1);
  const auto b = rollouts(adp::EnvKind::kCartpole, 4, 9, 1);
  const auto c = rollouts(adp::EnvKind::kCartpole, 4, 9, 3);
  EXPECT_EQ(a.observations, b.observations);
  EXPECT_EQ(a.actions, b.actions);
  EXPECT_EQ(a.rewards, b.rewards);
  EXPECT_EQ(a.observations, c.observations);
  EXPECT_EQ(a.log_probs, c.log_probs);
  for (std::size_t i = 0; i < a.episodes.size(); ++i) EXPECT_EQ(a.episodes[i].env_index, c.episodes[i].env_index);
}

TEST(Rollouts, FailedEpisodesBootstrapZero) {
  const auto batch = rollouts(adp::EnvKind::kCartpole, 2, 3);
  bool any_failed = false;
  for (const auto& ep : batch.episodes) {
    if (ep.failed) {
      any_failed = true;
      EXPECT_EQ(ep.bootstrap_value, 0.0);
    }
  }
  EXPECT_TRUE(any_failed);
}

TEST(Gae, ZeroTdErrorGivesZeroAdvantages) {
  // V_t = r_t + gamma V_{t+1} makes every delta zero.
  const double gamma = 0.99;
  std::vector<double> values{3.0, 2.0, 1.0}, rewards(3);
  const double bootstrap = 0.5;
  for (std::size_t t = 0; t < 3; ++t) rewards[t] = values[t] - gamma * (t + 1 < 3 ? values[t + 1] : bootstrap);
  const auto r = adp::compute_gae(rewards, values, bootstrap, {false, false, false}, gamma, 0.95);
  for (double a : r.advantages) EXPECT_NEAR(a, 0.0, 1e-15);
}

TEST(Gae, TwoStepExample) {
  const auto r = adp::compute_gae(std::vector<double>{1, 1}, std::vector<double>{0, 0}, 0.0, {false, false}, 0.99, 0.95);
  EXPECT_NEAR(r.advantages[0], 1.9405, 1e-12);
  EXPECT_NEAR(r.advantages[1], 1.0, 1e-12);
  const auto o = oracle::gae_bruteforce({1, 1}, {0, 0}, 0.0, {false, false}, 0.99, 0.95);
  EXPECT_NEAR(o[0], 1.9405, 1e-12);
}

TEST(Gae, LambdaZeroIsOneStepTd) {
  const std::vector<double> rewards{0.5, -1.0, 2.0}, values{0.1, 0.2, -0.3};
  const auto r = adp::compute_gae(rewards, values, 0.7, {false, false, false}, 0.9, 0.0);
  EXPECT_DOUBLE_EQ(r.advantages[0], 0.5 + 0.9 * 0.2 - 0.1);
  EXPECT_DOUBLE_EQ(r.advantages[1], -1.0 + 0.9 * -0.3 - 0.2);
  EXPECT_DOUBLE_EQ(r.advantages[2], 2.0 + 0.9 * 0.7 + 0.3);
}

TEST(Gae, MatchesBruteForceWithDoneFlags) {
  adp::Rng rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 64);
    std::vector<double> r(n), v(n);
    std::vector<bool> done(n);
    for (int t = 0; t < n; ++t) {
      r[t] = adp::uniform(rng, -2, 2);
      v[t] = adp::uniform(rng, -2, 2);
      done[t] = adp::uniform(rng, 0, 1) < 0.1;
    }
    const double boot = adp::uniform(rng, -2, 2);
    const auto got = adp::compute_gae(r, v, boot, done, 0.99, 0.95).advantages;
    const auto want = oracle::gae_bruteforce(r, v, boot, done, 0.99, 0.95);
    for (int t = 0; t < n; ++t) EXPECT_NEAR(got[t], want[t], 1e-10);
  }
}

TEST(Informativeness, ExampleAndDegenerateCases) {
  adp::TrajectoryBatch b;
  b.advantages = {1.9405, -1.0, 0.0, 0.0, 1.0, 3.0};
  b.rewards.resize(6);
  adp::Episode e1{0, 2, false, 0, 0, 0, {}, adp::BinIndex{{0}}};
  adp::Episode e2{2, 4, false, 0, 0, 0, {}, adp::BinIndex{{1}}};
  adp::Episode e3{4, 5, false, 0, 0, 0, {}, adp::BinIndex{{2}}};
  adp::Episode e4{5, 6, false, 0, 0, 0, {}, adp::BinIndex{{2}}};
  b.episodes = {e1, e2, e3, e4};
  EXPECT_NEAR(adp::informativeness_of(b, adp::BinIndex{{0}}), 1.47025, 1e-12);
  EXPECT_EQ(adp::informativeness_of(b, adp::BinIndex{{1}}), 0.0);
  EXPECT_DOUBLE_EQ(adp::informativeness_of(b, adp::BinIndex{{2}}), 2.0);
  EXPECT_THROW(adp::informativeness_of(b, adp::BinIndex{{9}}), adp::LookupError);
}

TEST(Normalize, ConstantAdvantagesBecomeZero) {
  for (double a : adp::normalize_advantages(std::vector<double>(10, 0.5))) EXPECT_EQ(a, 0.0);
  const auto n = adp::normalize_advantages(std::vector<double>{1, 2, 3, 4});
  double s = 0, s2 = 0;
  for (double a : n) {
    s += a;
    s2 += a * a;
  }
  EXPECT_NEAR(s, 0.0, 1e-12);
  EXPECT_NEAR(s2 / 4.0, 1.0, 1e-12);
}

TEST(PpoUpdate, ConstantAdvantagesLeavePolicyUnchanged) {
  auto batch = rollouts(adp::EnvKind::kPendulum, 1, 4);
  adp::compute_advantages(batch, adp::PpoHyper{});
  std::fill(batch.advantages.begin(), batch.advantages.end(), 0.5);
  auto policy = adp::init_policy(3, 1, 1);
  auto value = adp::init_value(3, 2);
  const auto before_policy = policy.net;
  const auto before_value = value;
  adp::PpoHyper hyper;
  hyper.epochs = 2;
  auto opt = adp::make_optimizers(policy, value, hyper);
  adp::ppo_update(policy, value, opt, batch, hyper, 3);
  EXPECT_EQ(policy.net, before_policy);
  EXPECT_FALSE(value == before_value);
}

// Batch shaped like a training iteration: 10 environments x 5 trajectories.
TEST(PpoUpdate, RatiosStayNearClipRange) {
  auto batch = rollouts(adp::EnvKind::kPendulum, 10, 6);
  adp::PpoHyper hyper;
  adp::compute_advantages(batch, hyper);
  auto policy = adp::init_policy(3, 1, 1);
  auto value = adp::init_value(3, 2);
  auto opt = adp::make_optimizers(policy, value, hyper);
  adp::ppo_update(policy, value, opt, batch, hyper, 8);
  std::size_t inside = 0;
  for (std::size_t t = 0; t < batch.size(); ++t) {
    const std::span<const double> obs(batch.observations.data() + t * 3, 3);
    const std::span<const double> act(batch.actions.data() + t, 1);
    const double ratio = std::exp(adp::log_prob(policy, adp::policy_forward(policy, obs), act) - batch.log_probs[t]);
    if (ratio >= 1.0 - 0.25 - 0.05 && ratio <= 1.0 + 0.25 + 0.05) ++inside;
  }
  EXPECT_GE(static_cast<double>(inside) / static_cast<double>(batch.size()), 0.99);
}

TEST(PpoUpdate, RejectsBatchWithoutAdvantages) {
  auto batch = rollouts(adp::EnvKind::kPendulum, 1, 4);
  auto policy = adp::init_policy(3, 1, 1);
  auto value = adp::init_value(3, 2);
  auto opt = adp::make_optimizers(policy, value, adp::PpoHyper{});
  EXPECT_THROW(adp::ppo_update(policy, value, opt, batch, adp::PpoHyper{}, 1), adp::InputError);
}

TEST(PpoHyper, DefaultsAreTheDocumentedValues) {
  const adp::PpoHyper h;
  EXPECT_EQ(h.gamma, 0.99);
  EXPECT_EQ(h.lambda, 0.95);
  EXPECT_EQ(h.clip, 0.25);
  EXPECT_EQ(h.entropy_coef, 0.1);
  EXPECT_EQ(h.epochs, 20);
  EXPECT_EQ(h.minibatch, 256);
  EXPECT_EQ(h.trajectories_per_env, 5);
  EXPECT_EQ(h.learning_rate, 3e-4);
  EXPECT_EQ(adp::kPolicyStd, 0.4);
  EXPECT_EQ(adp::kHiddenSizes, (std::vector<int>{64, 128}));
}

}  // namespace

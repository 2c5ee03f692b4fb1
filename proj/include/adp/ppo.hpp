#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <numeric>
#include <span>
#include <sstream>
#include <thread>
#include <vector>

#include "adp/envs.hpp"
#include "adp/errors.hpp"
#include "adp/mlp.hpp"
#include "adp/param_space.hpp"
#include "adp/policy.hpp"
#include "adp/random.hpp"

namespace adp {

struct PpoHyper {
  double gamma = 0.99;
  double lambda = 0.95;
  double clip = 0.25;
  double entropy_coef = 0.1;
  int epochs = 20;
  int minibatch = 256;
  int trajectories_per_env = 5;
  double learning_rate = 3e-4;

  void validate() const {
    if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("ppo.gamma must be in (0, 1]");
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("ppo.lambda must be in [0, 1]");
    if (!(clip > 0.0)) throw ConfigError("ppo.clip must be > 0");
    if (epochs < 1) throw ConfigError("ppo.epochs must be >= 1");
    if (minibatch < 1) throw ConfigError("ppo.minibatch must be >= 1");
    if (trajectories_per_env < 1) throw ConfigError("ppo.trajectories_per_env must be >= 1");
    if (!(learning_rate > 0.0)) throw ConfigError("ppo.learning_rate must be > 0");
  }
};

// Where an environment's parameters came from; copied onto each episode.
struct RolloutSource {
  ParamVector params;
  BinIndex bin;
};

struct Episode {
  std::size_t begin = 0;  // first step in the batch arrays
  std::size_t end = 0;    // one past the last step
  bool failed = false;    // ended by the failure predicate (bootstrap 0)
  double bootstrap_value = 0.0;
  double total_return = 0.0;  // undiscounted
  std::size_t env_index = 0;
  ParamVector source;
  BinIndex bin;

  std::size_t length() const { return end - begin; }
};

// Flat per-step storage; observations and actions are packed row after row.
struct TrajectoryBatch {
  int obs_dim = 0;
  int act_dim = 0;
  std::vector<double> observations;
  std::vector<double> actions;
  std::vector<double> rewards;
  std::vector<double> values;
  std::vector<double> log_probs;
  std::vector<Episode> episodes;
  // Filled by compute_advantages.
  std::vector<double> advantages;
  std::vector<double> value_targets;

  std::size_t size() const { return rewards.size(); }

  void append(const TrajectoryBatch& other) {
    if (obs_dim == 0) {
      obs_dim = other.obs_dim;
      act_dim = other.act_dim;
    }
    const std::size_t offset = size();
    auto cat = [](std::vector<double>& a, const std::vector<double>& b) { a.insert(a.end(), b.begin(), b.end()); };
    cat(observations, other.observations);
    cat(actions, other.actions);
    cat(rewards, other.rewards);
    cat(values, other.values);
    cat(log_probs, other.log_probs);
    cat(advantages, other.advantages);
    cat(value_targets, other.value_targets);
    for (auto ep : other.episodes) {
      ep.begin += offset;
      ep.end += offset;
      episodes.push_back(std::move(ep));
    }
  }

  double mean_episode_return() const {
    if (episodes.empty()) return 0.0;
    double s = 0.0;
    for (const auto& ep : episodes) s += ep.total_return;
    return s / static_cast<double>(episodes.size());
  }
};

namespace detail {

inline TrajectoryBatch rollout_worker(const GaussianPolicy& policy, const MlpParams& value, Environment& env,
                                      const RolloutSource& source, std::size_t env_index, int episodes,
                                      std::uint64_t seed) {
  TrajectoryBatch out;
  out.obs_dim = env.info().obs_dim;
  out.act_dim = env.info().act_dim;
  Rng rng(seed);
  for (int e = 0; e < episodes; ++e) {
    Episode ep;
    ep.begin = out.size();
    ep.env_index = env_index;
    ep.source = source.params;
    ep.bin = source.bin;
    std::vector<double> obs = env.reset();
    while (true) {
      const auto mean = policy_forward(policy, obs);
      const auto action = sample_action(policy, mean, rng);
      out.observations.insert(out.observations.end(), obs.begin(), obs.end());
      out.actions.insert(out.actions.end(), action.begin(), action.end());
      out.values.push_back(value_forward(value, obs));
      out.log_probs.push_back(log_prob(policy, mean, action));
      StepResult r = env.step(action);
      out.rewards.push_back(r.reward);
      ep.total_return += r.reward;
      obs = std::move(r.observation);
      if (r.done) {
        ep.failed = r.failed;
        ep.bootstrap_value = r.failed ? 0.0 : value_forward(value, obs);
        break;
      }
    }
    ep.end = out.size();
    out.episodes.push_back(std::move(ep));
  }
  return out;
}

}  // namespace detail

// Runs `trajectories_per_env` episodes in every environment. Worker i draws
// its exploration noise from a stream seeded by (seed, i) and results are
// concatenated in environment order, so the batch does not depend on `workers`.
inline TrajectoryBatch collect_rollouts(const GaussianPolicy& policy, const MlpParams& value,
                                        std::span<Environment> envs, std::span<const RolloutSource> sources,
                                        const PpoHyper& hyper, std::uint64_t seed, int workers = 1) {
  if (envs.empty()) throw ConfigError("collect_rollouts needs at least one environment");
  if (!sources.empty() && sources.size() != envs.size())
    throw ConfigError("one rollout source per environment required");
  std::vector<TrajectoryBatch> parts(envs.size());
  std::vector<std::exception_ptr> faults(envs.size());
  auto run = [&](std::size_t i) {
    try {
      const RolloutSource src = sources.empty() ? RolloutSource{envs[i].scales(), {}} : sources[i];
      parts[i] = detail::rollout_worker(policy, value, envs[i], src, i, hyper.trajectories_per_env,
                                        derive_seed(seed, {i}));
    } catch (...) {
      faults[i] = std::current_exception();
    }
  };
  const std::size_t n_threads = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), 1,
                                                        envs.size());
  if (n_threads == 1) {
    for (std::size_t i = 0; i < envs.size(); ++i) run(i);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n_threads; ++t)
      pool.emplace_back([&, t] {
        for (std::size_t i = t; i < envs.size(); i += n_threads) run(i);
      });
  }
  for (std::size_t i = 0; i < faults.size(); ++i) {
    if (!faults[i]) continue;
    try {
      std::rethrow_exception(faults[i]);
    } catch (const std::exception& e) {
      throw std::runtime_error("rollout aborted in environment " + std::to_string(i) + " (" +
                               to_string(envs[i].kind()) + "): " + e.what());
    }
  }
  TrajectoryBatch batch;
  for (const auto& p : parts) batch.append(p);
  return batch;
}

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> value_targets;
};

// Backward recursion A_t = delta_t + gamma * lambda * (1 - done_t) * A_{t+1}.
// done[t] marks s_{t+1} as terminal; bootstrap_value is V(s_T) for the step
// after the segment.
inline GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values, double bootstrap_value,
                             const std::vector<bool>& done, double gamma, double lambda) {
  const std::size_t n = rewards.size();
  if (values.size() != n || done.size() != n) throw InputError("compute_gae: misaligned inputs");
  GaeResult out;
  out.advantages.assign(n, 0.0);
  out.value_targets.assign(n, 0.0);
  double running = 0.0;
  for (std::size_t t = n; t-- > 0;) {
    const double next_value = t + 1 < n ? values[t + 1] : bootstrap_value;
    const double not_done = done[t] ? 0.0 : 1.0;
    const double delta = rewards[t] + gamma * next_value * not_done - values[t];
    running = delta + gamma * lambda * not_done * running;
    out.advantages[t] = running;
    out.value_targets[t] = running + values[t];
  }
  return out;
}

inline void compute_advantages(TrajectoryBatch& batch, const PpoHyper& hyper) {
  batch.advantages.assign(batch.size(), 0.0);
  batch.value_targets.assign(batch.size(), 0.0);
  for (const auto& ep : batch.episodes) {
    const std::size_t n = ep.length();
    std::vector<bool> done(n, false);
    if (ep.failed && n > 0) done.back() = true;
    const auto r = compute_gae(std::span(batch.rewards).subspan(ep.begin, n),
                               std::span(batch.values).subspan(ep.begin, n), ep.failed ? 0.0 : ep.bootstrap_value,
                               done, hyper.gamma, hyper.lambda);
    std::copy(r.advantages.begin(), r.advantages.end(), batch.advantages.begin() + static_cast<long>(ep.begin));
    std::copy(r.value_targets.begin(), r.value_targets.end(),
              batch.value_targets.begin() + static_cast<long>(ep.begin));
  }
}

// Time-averaged absolute GAE of one episode.
inline double episode_informativeness(const TrajectoryBatch& batch, const Episode& ep) {
  if (ep.length() == 0) return 0.0;
  double s = 0.0;
  for (std::size_t t = ep.begin; t < ep.end; ++t) s += std::abs(batch.advantages.at(t));
  return s / static_cast<double>(ep.length());
}

inline double informativeness_of(const TrajectoryBatch& batch, const BinIndex& bin) {
  double total = 0.0;
  std::size_t count = 0;
  for (const auto& ep : batch.episodes) {
    if (ep.bin != bin) continue;
    total += episode_informativeness(batch, ep);
    ++count;
  }
  if (count == 0) throw LookupError("no episode in the batch comes from the requested bin");
  return total / static_cast<double>(count);
}

// Zero mean, unit (population) std; a constant input maps to all zeros.
inline std::vector<double> normalize_advantages(std::span<const double> adv) {
  std::vector<double> out(adv.begin(), adv.end());
  if (out.empty()) return out;
  const double n = static_cast<double>(out.size());
  const double mean = std::accumulate(out.begin(), out.end(), 0.0) / n;
  double var = 0.0;
  for (double a : out) var += (a - mean) * (a - mean);
  const double sd = std::sqrt(var / n);
  for (double& a : out) a = sd > 1e-12 ? (a - mean) / sd : 0.0;
  return out;
}

// One minibatch worth of training data, column-per-sample.
struct PpoSamples {
  Eigen::MatrixXd observations;  // obs_dim x B
  Eigen::MatrixXd actions;       // act_dim x B
  Eigen::VectorXd old_log_probs;
  Eigen::VectorXd advantages;  // already normalized
  Eigen::VectorXd value_targets;

  Eigen::Index size() const { return observations.cols(); }
};

struct PpoLoss {
  double policy_loss = 0.0;  // clipped surrogate plus entropy bonus
  double value_loss = 0.0;
  double mean_ratio = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
  MlpParams policy_grad;
  MlpParams value_grad;

  double total() const { return policy_loss + value_loss; }
};

// Loss = -mean(min(r A, clip(r) A)) - c_ent H + mean((V - target)^2) with
// exact gradients for both networks.
inline PpoLoss ppo_loss(const GaussianPolicy& policy, const MlpParams& value, const PpoSamples& s,
                        const PpoHyper& hyper, bool with_gradients = true) {
  const Eigen::Index n = s.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  const double var = policy.std * policy.std;
  const double norm = policy.act_dim() * (std::log(policy.std) + 0.5 * std::log(2.0 * std::numbers::pi));

  PpoLoss out;
  MlpTape ptape;
  const Eigen::MatrixXd mean = mlp_forward(policy.net, s.observations, &ptape);
  const Eigen::MatrixXd diff = s.actions - mean;
  const Eigen::VectorXd logp = (-(diff.array().square().colwise().sum()) / (2.0 * var) - norm).matrix().transpose();

  Eigen::VectorXd d_logp(n);
  double surrogate = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double log_ratio = logp(j) - s.old_log_probs(j);
    const double ratio = std::exp(log_ratio);
    const double adv = s.advantages(j);
    const double unclipped = ratio * adv;
    const double clipped = std::clamp(ratio, 1.0 - hyper.clip, 1.0 + hyper.clip) * adv;
    surrogate += std::min(unclipped, clipped);
    // When the clipped branch is strictly smaller the ratio sits outside the
    // trust region and the term is constant in the parameters.
    d_logp(j) = unclipped <= clipped ? -ratio * adv * inv_n : 0.0;
    out.mean_ratio += ratio;
    out.approx_kl -= log_ratio;
    if (std::abs(ratio - 1.0) > hyper.clip) out.clip_fraction += 1.0;
  }
  out.policy_loss = -surrogate * inv_n - hyper.entropy_coef * entropy(policy);
  out.mean_ratio *= inv_n;
  out.approx_kl *= inv_n;
  out.clip_fraction *= inv_n;

  MlpTape vtape;
  const Eigen::MatrixXd v = mlp_forward(value, s.observations, &vtape);
  const Eigen::RowVectorXd verr = v.row(0) - s.value_targets.transpose();
  out.value_loss = verr.squaredNorm() * inv_n;

  if (!std::isfinite(out.policy_loss) || !std::isfinite(out.value_loss)) {
    std::ostringstream msg;
    msg << "non-finite PPO loss (policy " << out.policy_loss << ", value " << out.value_loss << ", mean ratio "
        << out.mean_ratio << ")";
    throw NumericalError(msg.str());
  }
  if (with_gradients) {
    // d logp / d mean = (a - mean) / var; the entropy term has zero gradient.
    const Eigen::MatrixXd d_mean = diff.array().rowwise() * (d_logp.transpose().array() / var);
    out.policy_grad = mlp_backward(policy.net, ptape, d_mean);
    out.value_grad = mlp_backward(value, vtape, 2.0 * inv_n * verr);
  }
  return out;
}

inline PpoSamples gather_samples(const TrajectoryBatch& batch, std::span<const double> normalized_adv,
                                 std::span<const std::size_t> idx) {
  const auto n = static_cast<Eigen::Index>(idx.size());
  PpoSamples s;
  s.observations.resize(batch.obs_dim, n);
  s.actions.resize(batch.act_dim, n);
  s.old_log_probs.resize(n);
  s.advantages.resize(n);
  s.value_targets.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const std::size_t t = idx[static_cast<std::size_t>(j)];
    for (int k = 0; k < batch.obs_dim; ++k) s.observations(k, j) = batch.observations[t * batch.obs_dim + k];
    for (int k = 0; k < batch.act_dim; ++k) s.actions(k, j) = batch.actions[t * batch.act_dim + k];
    s.old_log_probs(j) = batch.log_probs[t];
    s.advantages(j) = normalized_adv[t];
    s.value_targets(j) = batch.value_targets[t];
  }
  return s;
}

struct PpoOptimizers {
  AdamState policy;
  AdamState value;
};

inline PpoOptimizers make_optimizers(const GaussianPolicy& policy, const MlpParams& value, const PpoHyper& hyper) {
  return {make_adam(policy.net, hyper.learning_rate), make_adam(value, hyper.learning_rate)};
}

struct PpoStats {
  double policy_loss = 0.0;  // averaged over minibatches
  double value_loss = 0.0;
  double mean_ratio = 0.0;  // over the full batch after the update
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
};

// Clipped PPO on a batch whose advantages were computed by compute_advantages.
// Updates `policy` and `value` in place.
inline PpoStats ppo_update(GaussianPolicy& policy, MlpParams& value, PpoOptimizers& opt,
                           const TrajectoryBatch& batch, const PpoHyper& hyper, std::uint64_t seed) {
  if (batch.size() == 0) throw InputError("ppo_update: empty batch");
  if (batch.advantages.size() != batch.size()) throw InputError("ppo_update: advantages not computed");
  const auto adv = normalize_advantages(batch.advantages);
  std::vector<std::size_t> order(batch.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);

  PpoStats stats;
  int updates = 0;
  const auto mb = static_cast<std::size_t>(hyper.minibatch);
  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += mb) {
      const std::size_t stop = std::min(start + mb, order.size());
      const auto s = gather_samples(batch, adv, std::span(order).subspan(start, stop - start));
      PpoLoss loss;
      try {
        loss = ppo_loss(policy, value, s, hyper);
      } catch (const NumericalError& e) {
        throw NumericalError(std::string(e.what()) + " at epoch " + std::to_string(epoch) + ", sample offset " +
                             std::to_string(start));
      }
      opt_step(policy.net, loss.policy_grad, opt.policy);
      opt_step(value, loss.value_grad, opt.value);
      stats.policy_loss += loss.policy_loss;
      stats.value_loss += loss.value_loss;
      ++updates;
    }
  }
  stats.policy_loss /= updates;
  stats.value_loss /= updates;

  std::vector<std::size_t> all(batch.size());
  std::iota(all.begin(), all.end(), 0);
  const auto after = ppo_loss(policy, value, gather_samples(batch, adv, all), hyper, false);
  stats.mean_ratio = after.mean_ratio;
  stats.approx_kl = after.approx_kl;
  stats.clip_fraction = after.clip_fraction;
  return stats;
}

}  // namespace adp

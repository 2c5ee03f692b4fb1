#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "adp/bandit.hpp"
#include "adp/baselines.hpp"
#include "adp/checkpoint.hpp"
#include "adp/config.hpp"
#include "adp/envs.hpp"
#include "adp/eval.hpp"
#include "adp/param_space.hpp"
#include "adp/policy.hpp"
#include "adp/ppo.hpp"
#include "adp/random.hpp"
#include "adp/report_io.hpp"
#include "adp/sampler.hpp"

namespace adp {

// Purpose tags for derive_seed; every consumer of randomness gets its own stream.
namespace stream {
inline constexpr std::uint64_t kPolicyInit = 1;
inline constexpr std::uint64_t kValueInit = 2;
inline constexpr std::uint64_t kSampler = 3;
inline constexpr std::uint64_t kBandit = 4;
inline constexpr std::uint64_t kValidationSet = 5;
inline constexpr std::uint64_t kRollout = 6;
inline constexpr std::uint64_t kEnvReset = 7;
inline constexpr std::uint64_t kMinibatch = 8;
inline constexpr std::uint64_t kValidationEval = 9;
}  // namespace stream

struct IterationRecord {
  int iteration = 0;
  long long env_steps = 0;
  double mean_return = 0.0;
  PpoStats ppo;
  double mean_abs_gae = 0.0;
  double validation_return = 0.0;
  double omega = -1.0;
  int arm = -1;
};

struct TrainResult {
  int iterations = 0;
  long long env_steps = 0;
  int best_iteration = 0;
  double best_validation = 0.0;
  std::vector<IterationRecord> history;
  std::filesystem::path best_checkpoint;
  std::filesystem::path final_checkpoint;
  std::size_t bins_visited = 0;
  std::size_t total_bins = 0;
};

// Per-interval selection percentages of the first randomized parameter over
// the three thirds of training.
struct EvolutionTable {
  std::string param;
  std::vector<double> interval_low;
  std::vector<double> interval_high;
  std::vector<std::array<long long, 3>> counts;
  std::array<long long, 3> third_totals{0, 0, 0};

  double percent(std::size_t interval, int third) const {
    const auto total = third_totals[static_cast<std::size_t>(third)];
    return total == 0 ? 0.0 : 100.0 * static_cast<double>(counts[interval][static_cast<std::size_t>(third)]) / total;
  }
};

inline EvolutionTable make_evolution_table(const ParamSpec& spec, double width) {
  if (!(width > 0.0)) throw ConfigError("evolution interval width must be > 0");
  EvolutionTable t;
  t.param = spec.name;
  const double span = spec.scale_high - spec.scale_low;
  const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil(span / width - 1e-9)));
  for (std::size_t k = 0; k < n; ++k) {
    t.interval_low.push_back(spec.scale_low + static_cast<double>(k) * width);
    t.interval_high.push_back(std::min(spec.scale_high, spec.scale_low + static_cast<double>(k + 1) * width));
    t.counts.push_back({0, 0, 0});
  }
  return t;
}

inline int training_third(int iteration, int total_iterations) {
  return std::min(2, 3 * (iteration - 1) / std::max(total_iterations, 1));
}

inline void record_selection(EvolutionTable& t, const ParamSpec& spec, double scale, int third) {
  const double q = (scale - spec.scale_low) / (t.interval_high.front() - t.interval_low.front());
  auto k = static_cast<long long>(std::floor(q + 1e-9 * std::max(1.0, std::abs(q))));
  k = std::clamp<long long>(k, 0, static_cast<long long>(t.counts.size()) - 1);
  ++t.counts[static_cast<std::size_t>(k)][static_cast<std::size_t>(third)];
  ++t.third_totals[static_cast<std::size_t>(third)];
}

inline void write_evolution_csv(const EvolutionTable& t, const std::filesystem::path& path) {
  auto out = open_for_write(path);
  out << "param,interval_low,interval_high,third1_pct,third2_pct,third3_pct,selections\n";
  for (std::size_t k = 0; k < t.counts.size(); ++k) {
    out << t.param << ',' << format_real(t.interval_low[k]) << ',' << format_real(t.interval_high[k]);
    for (int third = 0; third < 3; ++third) out << ',' << format_real(t.percent(k, third));
    out << ',' << (t.counts[k][0] + t.counts[k][1] + t.counts[k][2]) << '\n';
  }
  close_checked(out, path);
}

namespace detail {

inline void write_train_header(std::ostream& out) {
  out << "iteration,env_steps,mean_return,policy_loss,value_loss,mean_abs_gae,approx_kl,clip_fraction,"
         "validation_return,omega,arm,wall_ms\n";
}

inline void write_sampler_header(std::ostream& out, const RandomizationSpace& space, bool with_scores) {
  out << "iteration,slot";
  for (const auto& s : space.specs()) out << ',' << s.name;
  for (const auto& s : space.specs()) out << ",bin_" << s.name;
  if (with_scores) out << ",from_buffer,informativeness,density,informativeness_rank,density_rank,score,omega,arm";
  out << '\n';
}

inline void prune_checkpoints(std::deque<std::filesystem::path>& kept, int keep) {
  while (static_cast<int>(kept.size()) > keep) {
    std::error_code ec;
    std::filesystem::remove(kept.front(), ec);
    kept.pop_front();
  }
}

}  // namespace detail

// Runs one seed of the configured algorithm and writes train_log.csv,
// sampler_log.csv, evolution.csv, checkpoints/ and summary.json under
// `out_dir`. Periodic checkpoints are renamed into place, so a fault
// mid-run leaves the last complete one on disk.
inline TrainResult run_train(const ExperimentConfig& cfg, std::uint64_t seed, const std::filesystem::path& out_dir,
                             std::ostream* progress = nullptr) {
  const EnvInfo& info = env_info(cfg.env);
  const int n_iter = cfg.planned_iterations();
  const auto m = static_cast<std::size_t>(cfg.sampler.select);
  const bool adaptive = cfg.algorithm == Algorithm::kAdp;
  const bool sampler_based = uses_sampler(cfg.algorithm);
  const std::string hash = config_hash(cfg);

  const BinGrid grid(cfg.space, cfg.bin_width);
  GaussianPolicy policy = init_policy(info.obs_dim, info.act_dim, derive_seed(seed, {stream::kPolicyInit}));
  MlpParams value = init_value(info.obs_dim, derive_seed(seed, {stream::kValueInit}));
  PpoOptimizers opt = make_optimizers(policy, value, cfg.ppo);

  Rng sampler_rng(derive_seed(seed, {stream::kSampler}));
  Rng bandit_rng(derive_seed(seed, {stream::kBandit}));
  BanditState bandit;
  bandit.arms.clear();
  for (double w : cfg.sampler.arms) bandit.arms.push_back({w, 1, 1});
  ScoreTables tables;
  ParamReplayBuffer buffer(static_cast<std::size_t>(cfg.sampler.buffer_capacity));
  const EvalSet validation =
      build_validation_set(cfg.space, derive_seed(seed, {stream::kValidationSet}), cfg.validation.members,
                           cfg.validation.episodes, cfg.validation.scale_low, cfg.validation.scale_high);
  const std::uint64_t validation_seed = derive_seed(seed, {stream::kValidationEval});
  EvolutionTable evolution = make_evolution_table(cfg.space.spec(0), cfg.evolution_interval);
  std::set<BinIndex> visited;

  const auto ck_dir = out_dir / "checkpoints";
  std::filesystem::create_directories(ck_dir);
  const auto train_log_path = out_dir / "train_log.csv";
  const auto sampler_log_path = out_dir / "sampler_log.csv";
  auto train_log = open_for_write(train_log_path);
  auto sampler_log = open_for_write(sampler_log_path);
  detail::write_train_header(train_log);
  detail::write_sampler_header(sampler_log, cfg.space, sampler_based);

  TrainResult result;
  result.total_bins = grid.total_bins();
  result.best_checkpoint = ck_dir / "best.json";
  result.final_checkpoint = ck_dir / "final.json";
  std::optional<double> best;
  std::deque<std::filesystem::path> periodic;
  auto snapshot = [&](int iteration, double validation_return) {
    return Checkpoint{{info.obs_dim, info.act_dim, iteration, seed, to_string(cfg.env), validation_return},
                      policy,
                      value};
  };

  int iteration = 0;
  try {
    for (iteration = 1; iteration <= n_iter; ++iteration) {
      const auto t0 = std::chrono::steady_clock::now();
      IterationRecord rec;
      rec.iteration = iteration;

      // Choose this iteration's environment parameters.
      std::vector<ParamVector> chosen;
      CandidateSet cands;
      std::vector<std::size_t> picked;
      if (sampler_based) {
        cands = sample_candidates(cfg.space, buffer, grid, sampler_rng,
                                  {cfg.sampler.from_space, cfg.sampler.from_buffer});
        if (adaptive) {
          const BanditPull pull = bandit_sample(bandit, bandit_rng);
          rec.arm = static_cast<int>(pull.arm);
          rec.omega = pull.omega;
        } else {
          rec.omega = cfg.omega;
        }
        score_candidates(tables, cands);
        rank_candidates(cands);
        picked = select_subset(cands, rec.omega, m);
        for (std::size_t i : picked) chosen.push_back(cands[i].params);
      } else {
        chosen = udr_sample(cfg.space, static_cast<int>(m), sampler_rng);
      }

      std::vector<Environment> envs;
      std::vector<RolloutSource> sources;
      for (std::size_t i = 0; i < chosen.size(); ++i) {
        envs.push_back(make_env(cfg.env, expand_scales(cfg.env, cfg.space, chosen[i]),
                                derive_seed(seed, {stream::kEnvReset, static_cast<std::uint64_t>(iteration), i})));
        sources.push_back({chosen[i], grid.bin_of(chosen[i])});
      }
      TrajectoryBatch batch = collect_rollouts(policy, value, envs, sources, cfg.ppo,
                                               derive_seed(seed, {stream::kRollout, static_cast<std::uint64_t>(iteration)}),
                                               cfg.workers);
      compute_advantages(batch, cfg.ppo);
      result.env_steps += static_cast<long long>(batch.size());
      rec.env_steps = result.env_steps;
      rec.mean_return = batch.mean_episode_return();
      for (double a : batch.advantages) rec.mean_abs_gae += std::abs(a);
      rec.mean_abs_gae /= static_cast<double>(batch.size());

      if (sampler_based) {
        std::vector<BinIndex> bins;
        std::map<BinIndex, double> measured;
        for (const auto& src : sources) {
          bins.push_back(src.bin);
          if (!measured.count(src.bin)) measured[src.bin] = informativeness_of(batch, src.bin);
        }
        update_tables(tables, bins, measured);
      }

      if (cfg.algorithm == Algorithm::kEpopt) batch = epopt_filter(batch, epopt_epsilon(iteration, n_iter));
      rec.ppo = ppo_update(policy, value, opt, batch, cfg.ppo,
                           derive_seed(seed, {stream::kMinibatch, static_cast<std::uint64_t>(iteration)}));

      rec.validation_return = evaluate(policy, validation, cfg.env, std::nullopt, validation_seed).mean;
      if (adaptive) bandit_update(bandit, static_cast<std::size_t>(rec.arm), rec.validation_return);
      if (sampler_based) buffer_insert(buffer, chosen);

      const int third = training_third(iteration, n_iter);
      for (std::size_t slot = 0; slot < chosen.size(); ++slot) {
        const auto& bin = sources[slot].bin;
        visited.insert(bin);
        record_selection(evolution, cfg.space.spec(0), chosen[slot][0], third);
        sampler_log << iteration << ',' << slot;
        for (double s : chosen[slot].scales) sampler_log << ',' << format_real(s);
        for (int o : bin.ordinals) sampler_log << ',' << o;
        if (sampler_based) {
          const Candidate& c = cands[picked[slot]];
          sampler_log << ',' << (c.from_buffer ? 1 : 0) << ',' << format_real(c.raw_informativeness) << ','
                      << format_real(c.raw_density) << ',' << c.informativeness_rank << ',' << c.density_rank << ','
                      << format_real(selection_score(c.informativeness_rank, c.density_rank, rec.omega)) << ','
                      << format_real(rec.omega) << ',' << rec.arm;
        }
        sampler_log << '\n';
      }

      long long wall_ms = 0;
      if (cfg.record_wall_time)
        wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0).count();
      train_log << iteration << ',' << rec.env_steps << ',' << format_real(rec.mean_return) << ','
                << format_real(rec.ppo.policy_loss) << ',' << format_real(rec.ppo.value_loss) << ','
                << format_real(rec.mean_abs_gae) << ',' << format_real(rec.ppo.approx_kl) << ','
                << format_real(rec.ppo.clip_fraction) << ',' << format_real(rec.validation_return) << ','
                << format_real(rec.omega) << ',' << rec.arm << ',' << wall_ms << '\n';
      train_log.flush();
      sampler_log.flush();

      if (!best || rec.validation_return > *best) {
        best = rec.validation_return;
        result.best_iteration = iteration;
        result.best_validation = rec.validation_return;
        save_checkpoint(snapshot(iteration, rec.validation_return), result.best_checkpoint);
      }
      if (iteration % cfg.checkpoint_every == 0) {
        char name[32];
        std::snprintf(name, sizeof(name), "iter_%06d.json", iteration);
        save_checkpoint(snapshot(iteration, rec.validation_return), ck_dir / name);
        periodic.push_back(ck_dir / name);
        detail::prune_checkpoints(periodic, cfg.checkpoint_keep);
      }
      if (progress)
        *progress << to_string(cfg.algorithm) << " seed " << seed << " iter " << iteration << '/' << n_iter
                  << " return " << rec.mean_return << " validation " << rec.validation_return << '\n';
      result.history.push_back(rec);
    }
  } catch (const std::exception& e) {
    throw std::runtime_error("training failed at iteration " + std::to_string(iteration) + ": " + e.what());
  }
  close_checked(train_log, train_log_path);
  close_checked(sampler_log, sampler_log_path);

  const double final_validation = result.history.empty() ? 0.0 : result.history.back().validation_return;
  save_checkpoint(snapshot(n_iter, final_validation), result.final_checkpoint);
  write_evolution_csv(evolution, out_dir / "evolution.csv");
  result.iterations = n_iter;
  result.bins_visited = visited.size();

  nlohmann::json summary;
  summary["algorithm"] = to_string(cfg.algorithm);
  summary["env"] = to_string(cfg.env);
  summary["seed"] = seed;
  summary["config_hash"] = hash;
  summary["iterations"] = n_iter;
  summary["env_steps"] = result.env_steps;
  summary["best_iteration"] = result.best_iteration;
  summary["best_validation_return"] = result.best_validation;
  summary["final_validation_return"] = final_validation;
  summary["bins_visited"] = result.bins_visited;
  summary["total_bins"] = result.total_bins;
  if (adaptive) {
    nlohmann::json arms = nlohmann::json::array();
    for (const auto& a : bandit.arms) arms.push_back({{"omega", a.omega}, {"alpha", a.alpha}, {"beta", a.beta}});
    summary["bandit"] = arms;
  }
  summary["config"] = canonical_json(cfg);
  const auto summary_path = out_dir / "summary.json";
  auto out = open_for_write(summary_path);
  out << summary.dump(2) << '\n';
  close_checked(out, summary_path);
  return result;
}

}  // namespace adp

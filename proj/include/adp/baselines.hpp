#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "adp/errors.hpp"
#include "adp/param_space.hpp"
#include "adp/ppo.hpp"
#include "adp/random.hpp"

namespace adp {

enum class Algorithm { kAdp, kUdr, kEpopt, kAdpFixed };

inline std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::kAdp: return "adp";
    case Algorithm::kUdr: return "udr";
    case Algorithm::kEpopt: return "epopt";
    case Algorithm::kAdpFixed: return "adp_fixed";
  }
  return "unknown";
}

inline Algorithm parse_algorithm(const std::string& name) {
  if (name == "adp") return Algorithm::kAdp;
  if (name == "udr") return Algorithm::kUdr;
  if (name == "epopt") return Algorithm::kEpopt;
  if (name == "adp_fixed") return Algorithm::kAdpFixed;
  throw ConfigError("unknown algorithm '" + name + "'");
}

inline bool uses_sampler(Algorithm a) { return a == Algorithm::kAdp || a == Algorithm::kAdpFixed; }

inline std::vector<ParamVector> udr_sample(const RandomizationSpace& space, int m, Rng& rng) {
  if (m < 1) throw ConfigError("udr_sample: m must be >= 1");
  std::vector<ParamVector> out;
  out.reserve(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) out.push_back(sample_uniform(space, rng));
  return out;
}

// Full batch for the first half of training (iteration N/2 included), then
// the worst 10%.
inline double epopt_epsilon(int iteration, int total_iterations) {
  if (iteration < 1 || iteration > total_iterations)
    throw RangeError("epopt_epsilon: iteration " + std::to_string(iteration) + " outside [1, " +
                     std::to_string(total_iterations) + "]");
  return 2 * iteration <= total_iterations ? 1.0 : 0.1;
}

// Nearest-rank quantile: the ceil(eps * n)-th smallest value (at least the first).
inline double nearest_rank_quantile(std::vector<double> values, double epsilon) {
  if (values.empty()) throw InputError("quantile of an empty set");
  std::sort(values.begin(), values.end());
  const double pos = std::ceil(epsilon * static_cast<double>(values.size()) - 1e-12);
  const auto rank = std::clamp<long long>(static_cast<long long>(pos), 1, static_cast<long long>(values.size()));
  return values[static_cast<std::size_t>(rank - 1)];
}

// Keeps the episodes whose undiscounted return is at or below the
// epsilon-quantile of all episode returns. Per-step arrays (including any
// computed advantages) are carried over for the kept episodes.
inline TrajectoryBatch epopt_filter(const TrajectoryBatch& batch, double epsilon) {
  if (batch.episodes.empty()) throw InputError("epopt_filter: batch has no episodes");
  std::vector<double> returns;
  for (const auto& ep : batch.episodes) returns.push_back(ep.total_return);
  const double threshold = nearest_rank_quantile(returns, epsilon);

  TrajectoryBatch out;
  out.obs_dim = batch.obs_dim;
  out.act_dim = batch.act_dim;
  const bool has_adv = batch.advantages.size() == batch.size();
  auto copy_range = [](std::vector<double>& dst, const std::vector<double>& src, std::size_t b, std::size_t e,
                       std::size_t width) {
    dst.insert(dst.end(), src.begin() + static_cast<long>(b * width), src.begin() + static_cast<long>(e * width));
  };
  for (const auto& ep : batch.episodes) {
    if (ep.total_return > threshold) continue;
    Episode kept = ep;
    kept.begin = out.size();
    copy_range(out.observations, batch.observations, ep.begin, ep.end, static_cast<std::size_t>(batch.obs_dim));
    copy_range(out.actions, batch.actions, ep.begin, ep.end, static_cast<std::size_t>(batch.act_dim));
    copy_range(out.rewards, batch.rewards, ep.begin, ep.end, 1);
    copy_range(out.values, batch.values, ep.begin, ep.end, 1);
    copy_range(out.log_probs, batch.log_probs, ep.begin, ep.end, 1);
    if (has_adv) {
      copy_range(out.advantages, batch.advantages, ep.begin, ep.end, 1);
      copy_range(out.value_targets, batch.value_targets, ep.begin, ep.end, 1);
    }
    kept.end = out.size();
    out.episodes.push_back(std::move(kept));
  }
  return out;
}

}  // namespace adp

#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "adp/envs.hpp"
#include "adp/errors.hpp"
#include "adp/param_space.hpp"
#include "adp/policy.hpp"
#include "adp/random.hpp"

namespace adp {

// A frozen list of environment configurations. `space` names the parameter
// behind each member coordinate; unnamed parameters run at their defaults.
struct EvalSet {
  std::string kind = "validation";
  double scale_low = 0.5;
  double scale_high = 1.5;
  RandomizationSpace space;
  std::vector<ParamVector> members;
  int episodes_per_member = 3;
};

struct MemberResult {
  ParamVector scales;
  std::vector<double> returns;
  double mean = 0.0;
  double std = 0.0;

  int episodes() const { return static_cast<int>(returns.size()); }
};

struct ReportMeta {
  std::string algorithm;
  std::string env;
  std::string sweep;
  std::uint64_t seed = 0;
  int iteration = 0;
  std::optional<NoiseSpec> noise;
  std::string config_hash;
};

struct EvalReport {
  std::vector<std::string> param_names;
  std::vector<MemberResult> members;
  double mean = 0.0;  // mean of member means
  double std = 0.0;   // population std of member means
  ReportMeta meta;
};

inline void mean_std(const std::vector<double>& xs, double& mean, double& sd) {
  mean = 0.0;
  sd = 0.0;
  if (xs.empty()) return;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  sd = std::sqrt(var / static_cast<double>(xs.size()));
}

inline void finalize_report(EvalReport& r) {
  std::vector<double> means;
  for (auto& m : r.members) {
    mean_std(m.returns, m.mean, m.std);
    means.push_back(m.mean);
  }
  mean_std(means, r.mean, r.std);
}

inline EvalSet build_validation_set(const RandomizationSpace& space, std::uint64_t seed, int members = 8,
                                    int episodes = 3, double scale_low = 0.5, double scale_high = 1.5) {
  EvalSet set;
  set.kind = "validation";
  set.scale_low = scale_low;
  set.scale_high = scale_high;
  set.space = space.with_range(scale_low, scale_high);
  set.episodes_per_member = episodes;
  Rng rng(seed);
  for (int i = 0; i < members; ++i) set.members.push_back(sample_uniform(set.space, rng));
  return set;
}

// Mean-action return of `episodes` episodes in one environment configuration.
inline std::vector<double> run_member(const GaussianPolicy& policy, EnvKind kind, const ParamVector& full_scales,
                                      int episodes, const std::optional<NoiseSpec>& noise, std::uint64_t seed) {
  Environment env = make_env(kind, full_scales, derive_seed(seed, {0}));
  Rng noise_rng(derive_seed(seed, {1}));
  std::vector<double> returns;
  for (int e = 0; e < episodes; ++e) {
    std::vector<double> obs = env.reset();
    double total = 0.0;
    while (true) {
      if (noise && noise->target == NoiseTarget::kObservation) obs = apply_noise(std::move(obs), *noise, noise_rng);
      std::vector<double> action = policy_forward(policy, obs);
      if (noise && noise->target == NoiseTarget::kAction) action = apply_noise(std::move(action), *noise, noise_rng);
      StepResult r = env.step(action);
      total += r.reward;
      obs = std::move(r.observation);
      if (r.done) break;
    }
    returns.push_back(total);
  }
  return returns;
}

// Member j is evaluated with streams derived from (seed, j).
inline EvalReport evaluate(const GaussianPolicy& policy, const EvalSet& set, EnvKind kind,
                           const std::optional<NoiseSpec>& noise, std::uint64_t seed) {
  if (policy.obs_dim() != env_info(kind).obs_dim || policy.act_dim() != env_info(kind).act_dim)
    throw CompatibilityError("policy dimensions do not match environment '" + to_string(kind) + "'");
  EvalReport report;
  for (const auto& s : set.space.specs()) report.param_names.push_back(s.name);
  report.meta.noise = noise;
  report.meta.env = to_string(kind);
  report.meta.seed = seed;
  for (std::size_t j = 0; j < set.members.size(); ++j) {
    MemberResult m;
    m.scales = set.members[j];
    m.returns = run_member(policy, kind, expand_scales(kind, set.space, set.members[j]), set.episodes_per_member,
                           noise, derive_seed(seed, {j}));
    report.members.push_back(std::move(m));
  }
  finalize_report(report);
  return report;
}

// Scale points 0.2, 0.4, ..., 2.0.
inline std::vector<double> default_scale_grid() {
  std::vector<double> g;
  for (int k = 1; k <= 10; ++k) g.push_back(k / 5.0);
  return g;
}

inline EvalSet single_point_set(EnvKind kind, const ParamVector& full_scales, int episodes, const std::string& label) {
  EvalSet set;
  set.kind = label;
  set.space = env_info(kind).params;
  set.members = {full_scales};
  set.episodes_per_member = episodes;
  return set;
}

inline std::size_t param_index(EnvKind kind, const std::string& name) {
  const int idx = env_info(kind).params.index_of(name);
  if (idx < 0) throw ConfigError("environment '" + to_string(kind) + "' has no parameter '" + name + "'");
  return static_cast<std::size_t>(idx);
}

// One report per scale point (ascending), every other parameter at default.
inline std::vector<EvalReport> sweep_single(const GaussianPolicy& policy, EnvKind kind, const std::string& param,
                                            const std::vector<double>& scales, int episodes, std::uint64_t seed) {
  const std::size_t idx = param_index(kind, param);
  std::vector<EvalReport> out;
  for (double s : scales) {
    ParamVector xi{std::vector<double>(env_info(kind).params.dim(), 1.0)};
    xi[idx] = s;
    out.push_back(evaluate(policy, single_point_set(kind, xi, episodes, "test"), kind, std::nullopt, seed));
  }
  return out;
}

// Row-major grid: cell (i, j) has param_a at scales[i] and param_b at scales[j].
inline EvalReport sweep_double(const GaussianPolicy& policy, EnvKind kind, const std::string& param_a,
                               const std::string& param_b, const std::vector<double>& scales, int episodes,
                               std::uint64_t seed) {
  if (param_a == param_b) throw ConfigError("sweep_double needs two distinct parameters");
  const std::size_t ia = param_index(kind, param_a), ib = param_index(kind, param_b);
  EvalReport grid;
  for (const auto& s : env_info(kind).params.specs()) grid.param_names.push_back(s.name);
  grid.meta.env = to_string(kind);
  grid.meta.seed = seed;
  for (double sa : scales) {
    for (double sb : scales) {
      ParamVector xi{std::vector<double>(env_info(kind).params.dim(), 1.0)};
      xi[ia] = sa;
      xi[ib] = sb;
      auto cell = evaluate(policy, single_point_set(kind, xi, episodes, "test"), kind, std::nullopt, seed);
      grid.members.push_back(std::move(cell.members.front()));
    }
  }
  finalize_report(grid);
  return grid;
}

// Every parameter of the kind drawn uniformly from [low, high]; one episode per task.
inline EvalSet random_task_set(EnvKind kind, int n_tasks, double low, double high, std::uint64_t seed) {
  if (n_tasks < 1) throw ConfigError("random sweep needs at least one task");
  if (low > high) throw ConfigError("random sweep range is inverted");
  EvalSet set;
  set.kind = "test";
  set.scale_low = low;
  set.scale_high = high;
  set.space = env_info(kind).params;
  set.episodes_per_member = 1;
  Rng rng(seed);
  for (int i = 0; i < n_tasks; ++i) {
    ParamVector xi;
    for (std::size_t d = 0; d < set.space.dim(); ++d) xi.scales.push_back(uniform(rng, low, high));
    set.members.push_back(std::move(xi));
  }
  return set;
}

inline EvalReport sweep_random(const GaussianPolicy& policy, EnvKind kind, int n_tasks, double low, double high,
                               std::uint64_t seed) {
  return evaluate(policy, random_task_set(kind, n_tasks, low, high, derive_seed(seed, {0x7a5c})), kind,
                  std::nullopt, seed);
}

inline std::vector<double> observation_noise_sigmas() { return {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0}; }
inline std::vector<double> action_noise_sigmas() { return {0.0, 0.1, 0.2, 0.3, 0.4}; }

// Default-parameter environment, one report per sigma.
inline std::vector<EvalReport> noise_sweep(const GaussianPolicy& policy, EnvKind kind, NoiseTarget target,
                                           const std::vector<double>& sigmas, int episodes, std::uint64_t seed) {
  std::vector<EvalReport> out;
  const ParamVector defaults{std::vector<double>(env_info(kind).params.dim(), 1.0)};
  for (double sigma : sigmas) {
    if (sigma < 0.0) throw InputError("noise sigma must be non-negative");
    const NoiseSpec spec = target == NoiseTarget::kObservation ? observation_noise(kind, sigma) : action_noise(sigma);
    out.push_back(evaluate(policy, single_point_set(kind, defaults, episodes, "test"), kind, spec, seed));
  }
  return out;
}

}  // namespace adp

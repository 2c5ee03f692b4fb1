#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "adp/checkpoint.hpp"
#include "adp/config.hpp"
#include "adp/eval.hpp"
#include "adp/report_io.hpp"
#include "adp/trainer.hpp"

namespace adp {

namespace stream {
inline constexpr std::uint64_t kTest = 10;
}  // namespace stream

enum class SweepKind { kValidation, kSingle, kDouble, kRandom, kNoiseObservation, kNoiseAction };

struct SweepSpec {
  SweepKind kind = SweepKind::kValidation;
  std::string param_a;
  std::string param_b;
  int n_tasks = 0;  // random sweeps; 0 means the configured count
  std::string label;
};

namespace detail {

// Accepts "length" as well as "pendulum.length".
inline std::string strip_env_prefix(const std::string& name, EnvKind kind) {
  const std::string prefix = to_string(kind) + ".";
  return name.rfind(prefix, 0) == 0 ? name.substr(prefix.size()) : name;
}

inline int parse_count(const std::string& text, const std::string& spec) {
  if (text.empty() || text.find_first_not_of("0123456789") != std::string::npos)
    throw ConfigError("sweep '" + spec + "': bad task count '" + text + "'");
  const int n = std::stoi(text);
  if (n < 1) throw ConfigError("sweep '" + spec + "': task count must be >= 1");
  return n;
}

}  // namespace detail

// validation | single:<param> | double:<a>,<b> | random | random<N> | random:<N> |
// noise:obs | noise:action
inline SweepSpec parse_sweep(const std::string& spec, EnvKind env) {
  SweepSpec s;
  if (spec == "validation") {
    s.label = "validation";
  } else if (spec.rfind("single:", 0) == 0) {
    s.kind = SweepKind::kSingle;
    s.param_a = detail::strip_env_prefix(spec.substr(7), env);
    param_index(env, s.param_a);
    s.label = "single-" + s.param_a;
  } else if (spec.rfind("double:", 0) == 0) {
    s.kind = SweepKind::kDouble;
    const std::string rest = spec.substr(7);
    const auto comma = rest.find(',');
    if (comma == std::string::npos) throw ConfigError("sweep '" + spec + "': expected double:<a>,<b>");
    s.param_a = detail::strip_env_prefix(rest.substr(0, comma), env);
    s.param_b = detail::strip_env_prefix(rest.substr(comma + 1), env);
    param_index(env, s.param_a);
    param_index(env, s.param_b);
    if (s.param_a == s.param_b) throw ConfigError("sweep '" + spec + "': parameters must differ");
    s.label = "double-" + s.param_a + "-" + s.param_b;
  } else if (spec.rfind("random", 0) == 0) {
    s.kind = SweepKind::kRandom;
    std::string rest = spec.substr(6);
    if (!rest.empty() && rest.front() == ':') rest.erase(0, 1);
    s.n_tasks = rest.empty() ? 0 : detail::parse_count(rest, spec);
    s.label = "random";
  } else if (spec == "noise:obs" || spec == "noise:observation") {
    s.kind = SweepKind::kNoiseObservation;
    s.label = "noise-obs";
  } else if (spec == "noise:action" || spec == "noise:act") {
    s.kind = SweepKind::kNoiseAction;
    s.label = "noise-action";
  } else {
    throw ConfigError("unknown sweep '" + spec + "'");
  }
  return s;
}

// n evenly spaced scale points from low to high inclusive.
inline std::vector<double> scale_grid(double low, double high, int n = 10) {
  if (n < 2) return {low};
  std::vector<double> g;
  for (int k = 0; k < n; ++k) g.push_back(low + (high - low) * k / (n - 1));
  return g;
}

inline std::string report_stem(const ExperimentConfig& cfg, const SweepSpec& sweep, std::uint64_t seed) {
  std::string label = sweep.label;
  if (sweep.kind == SweepKind::kRandom)
    label += std::to_string(sweep.n_tasks > 0 ? sweep.n_tasks : cfg.evaluation.random_tasks);
  return to_string(cfg.algorithm) + "_" + to_string(cfg.env) + "_" + label + "_" + std::to_string(seed);
}

// Evaluates a policy on one sweep. Validation sweeps rebuild the exact
// validation set training used for this seed.
inline std::vector<EvalReport> run_sweep(const ExperimentConfig& cfg, const GaussianPolicy& policy,
                                         const SweepSpec& sweep, std::uint64_t seed) {
  const auto& ev = cfg.evaluation;
  const std::uint64_t test_seed = derive_seed(seed, {stream::kTest});
  const auto grid = scale_grid(ev.test_scale_low, ev.test_scale_high);
  std::vector<EvalReport> reports;
  switch (sweep.kind) {
    case SweepKind::kValidation: {
      const EvalSet set =
          build_validation_set(cfg.space, derive_seed(seed, {stream::kValidationSet}), cfg.validation.members,
                               cfg.validation.episodes, cfg.validation.scale_low, cfg.validation.scale_high);
      reports.push_back(evaluate(policy, set, cfg.env, std::nullopt, derive_seed(seed, {stream::kValidationEval})));
      break;
    }
    case SweepKind::kSingle:
      reports = sweep_single(policy, cfg.env, sweep.param_a, grid, ev.sweep_episodes, test_seed);
      break;
    case SweepKind::kDouble:
      reports.push_back(sweep_double(policy, cfg.env, sweep.param_a, sweep.param_b, grid, ev.sweep_episodes, test_seed));
      break;
    case SweepKind::kRandom:
      reports.push_back(sweep_random(policy, cfg.env, sweep.n_tasks > 0 ? sweep.n_tasks : ev.random_tasks,
                                     ev.test_scale_low, ev.test_scale_high, test_seed));
      break;
    case SweepKind::kNoiseObservation:
      reports = noise_sweep(policy, cfg.env, NoiseTarget::kObservation, observation_noise_sigmas(), ev.noise_episodes,
                            test_seed);
      break;
    case SweepKind::kNoiseAction:
      reports = noise_sweep(policy, cfg.env, NoiseTarget::kAction, action_noise_sigmas(), ev.noise_episodes, test_seed);
      break;
  }
  return reports;
}

// Mean over the reports of each report's aggregate mean.
inline double reports_mean(const std::vector<EvalReport>& reports) {
  if (reports.empty()) return 0.0;
  double s = 0.0;
  for (const auto& r : reports) s += r.mean;
  return s / static_cast<double>(reports.size());
}

// Loads a checkpoint, runs the sweep and writes
// {algo}_{env}_{sweep}_{seed}.csv/.json under out_dir.
inline std::vector<EvalReport> run_eval(const ExperimentConfig& cfg, const std::filesystem::path& checkpoint,
                                        const std::string& sweep_spec, std::uint64_t seed,
                                        const std::filesystem::path& out_dir) {
  const SweepSpec sweep = parse_sweep(sweep_spec, cfg.env);
  const Checkpoint ck = load_checkpoint(checkpoint);
  check_compatible(ck, cfg.env);
  auto reports = run_sweep(cfg, ck.policy, sweep, seed);
  const std::string hash = config_hash(cfg);
  for (auto& r : reports) {
    r.meta.algorithm = to_string(cfg.algorithm);
    r.meta.sweep = sweep.label;
    r.meta.seed = seed;
    r.meta.iteration = ck.meta.iteration;
    r.meta.config_hash = hash;
  }
  const std::string stem = report_stem(cfg, sweep, seed);
  write_report(reports, out_dir / (stem + ".csv"), out_dir / (stem + ".json"));
  return reports;
}

inline std::filesystem::path run_dir(const std::filesystem::path& root, const ExperimentConfig& cfg,
                                     std::uint64_t seed) {
  return root / (to_string(cfg.algorithm) + "_" + to_string(cfg.env)) / ("seed_" + std::to_string(seed));
}

// Trains every configured seed, one after another.
inline std::vector<TrainResult> run_seed_sweep(const ExperimentConfig& cfg, const std::filesystem::path& root,
                                               std::ostream* progress = nullptr) {
  std::vector<TrainResult> out;
  for (std::uint64_t seed : cfg.seeds) out.push_back(run_train(cfg, seed, run_dir(root, cfg, seed), progress));
  return out;
}

struct AblationVariant {
  std::string name;
  ExperimentConfig config;
};

// bin_width: {0.001, 0.01, 0.05, 0.1}; fixed_omega: {0.2, 0.8, adaptive}.
inline std::vector<AblationVariant> ablation_variants(const ExperimentConfig& base, const std::string& kind) {
  std::vector<AblationVariant> out;
  if (kind == "bin_width") {
    for (double w : {0.001, 0.01, 0.05, 0.1}) {
      ExperimentConfig c = base;
      c.algorithm = Algorithm::kAdp;
      c.bin_width = w;
      out.push_back({"bin_width=" + format_real(w), c});
    }
  } else if (kind == "fixed_omega") {
    for (double w : {0.2, 0.8}) {
      ExperimentConfig c = base;
      c.algorithm = Algorithm::kAdpFixed;
      c.omega = w;
      out.push_back({"omega=" + format_real(w), c});
    }
    ExperimentConfig c = base;
    c.algorithm = Algorithm::kAdp;
    out.push_back({"omega=adaptive", c});
  } else {
    throw ConfigError("unknown ablation '" + kind + "' (expected bin_width or fixed_omega)");
  }
  return out;
}

struct AblationRow {
  std::string variant;
  std::uint64_t seed = 0;
  std::string config_hash;
  double best_validation = 0.0;
  double test_mean = 0.0;
};

// Trains each variant on every seed, scores its best checkpoint on the
// single-parameter test grid of the first randomized parameter, and writes
// ablation_<kind>.csv (one row per run) and ablation_<kind>_summary.csv.
inline std::vector<AblationRow> run_ablation(const ExperimentConfig& base, const std::string& kind,
                                             const std::filesystem::path& root, std::ostream* progress = nullptr) {
  std::vector<AblationRow> rows;
  const SweepSpec sweep = parse_sweep("single:" + base.space.spec(0).name, base.env);
  for (const auto& v : ablation_variants(base, kind)) {
    const std::string hash = config_hash(v.config);
    for (std::uint64_t seed : v.config.seeds) {
      const auto dir = root / ("ablation_" + kind) / v.name / ("seed_" + std::to_string(seed));
      const TrainResult tr = run_train(v.config, seed, dir, progress);
      const Checkpoint ck = load_checkpoint(tr.best_checkpoint);
      const auto reports = run_sweep(v.config, ck.policy, sweep, seed);
      rows.push_back({v.name, seed, hash, tr.best_validation, reports_mean(reports)});
    }
  }

  const auto detail_path = root / ("ablation_" + kind + ".csv");
  auto out = open_for_write(detail_path);
  out << "variant,seed,config_hash,best_validation,test_mean\n";
  for (const auto& r : rows)
    out << r.variant << ',' << r.seed << ',' << r.config_hash << ',' << format_real(r.best_validation) << ','
        << format_real(r.test_mean) << '\n';
  close_checked(out, detail_path);

  const auto summary_path = root / ("ablation_" + kind + "_summary.csv");
  auto sum = open_for_write(summary_path);
  sum << "variant,config_hash,seeds,test_mean,test_std,validation_mean\n";
  for (std::size_t i = 0; i < rows.size();) {
    std::size_t j = i;
    std::vector<double> test, val;
    while (j < rows.size() && rows[j].variant == rows[i].variant) {
      test.push_back(rows[j].test_mean);
      val.push_back(rows[j].best_validation);
      ++j;
    }
    double tm = 0, ts = 0, vm = 0, vs = 0;
    mean_std(test, tm, ts);
    mean_std(val, vm, vs);
    sum << rows[i].variant << ',' << rows[i].config_hash << ',' << test.size() << ',' << format_real(tm) << ','
        << format_real(ts) << ',' << format_real(vm) << '\n';
    i = j;
  }
  close_checked(sum, summary_path);
  return rows;
}

}  // namespace adp

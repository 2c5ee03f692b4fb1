#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "adp/baselines.hpp"
#include "adp/envs.hpp"
#include "adp/errors.hpp"
#include "adp/param_space.hpp"
#include "adp/ppo.hpp"

namespace adp {

struct SamplerConfig {
  int from_space = 30;
  int from_buffer = 10;
  int select = 10;
  int buffer_capacity = 40;
  std::vector<double> arms = {0.2, 0.8};
};

struct ValidationConfig {
  int members = 8;
  int episodes = 3;
  double scale_low = 0.5;
  double scale_high = 1.5;
};

struct EvaluationConfig {
  double test_scale_low = 0.2;
  double test_scale_high = 2.0;
  int sweep_episodes = 20;
  int random_tasks = 1000;
  int noise_episodes = 30;
};

struct ExperimentConfig {
  EnvKind env = EnvKind::kPendulum;
  Algorithm algorithm = Algorithm::kAdp;
  double omega = 0.2;  // adp_fixed only
  RandomizationSpace space = env_info(EnvKind::kPendulum).params;
  double bin_width = 0.01;
  PpoHyper ppo;
  long long budget_env_steps = 1'000'000;
  std::optional<int> iterations;  // overrides the step budget when set
  SamplerConfig sampler;
  ValidationConfig validation;
  EvaluationConfig evaluation;
  std::vector<std::uint64_t> seeds = {0};
  std::string output_dir = "runs";
  int checkpoint_every = 10;
  int checkpoint_keep = 3;
  int workers = 1;
  bool record_wall_time = false;
  double evolution_interval = 0.05;

  // Planned iteration count: floor(budget / (m * trajectories * horizon)).
  int planned_iterations() const {
    if (iterations) return *iterations;
    const long long per_iter = static_cast<long long>(sampler.select) * ppo.trajectories_per_env *
                               env_info(env).horizon;
    return static_cast<int>(budget_env_steps / per_iter);
  }
};

namespace detail {

// Strict reader over one JSON object: every key must be consumed and every
// error names the full field path.
class ObjectReader {
 public:
  ObjectReader(const nlohmann::json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  bool has(const std::string& key) const { return obj_.contains(key); }

  const nlohmann::json* get(const std::string& key) {
    seen_.insert(key);
    const auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  std::string field(const std::string& key) const { return path_ + "." + key; }

  void number(const std::string& key, double& out) {
    if (const auto* v = get(key)) {
      if (!v->is_number()) throw ConfigError(field(key) + ": expected a number");
      out = v->get<double>();
      if (!std::isfinite(out)) throw ConfigError(field(key) + ": must be finite");
    }
  }

  template <typename Int>
  void integer(const std::string& key, Int& out) {
    if (const auto* v = get(key)) {
      if (v->is_number_integer()) {
        out = v->get<Int>();
      } else if (v->is_number_float() && std::floor(v->get<double>()) == v->get<double>()) {
        out = static_cast<Int>(v->get<double>());  // accepts 1e6 style literals
      } else {
        throw ConfigError(field(key) + ": expected an integer");
      }
    }
  }

  void string(const std::string& key, std::string& out) {
    if (const auto* v = get(key)) {
      if (!v->is_string()) throw ConfigError(field(key) + ": expected a string");
      out = v->get<std::string>();
    }
  }

  void boolean(const std::string& key, bool& out) {
    if (const auto* v = get(key)) {
      if (!v->is_boolean()) throw ConfigError(field(key) + ": expected a boolean");
      out = v->get<bool>();
    }
  }

  void finish() const {
    for (const auto& [key, value] : obj_.items())
      if (!seen_.count(key)) throw ConfigError(field(key) + ": unknown field");
  }

  const std::string& path() const { return path_; }

 private:
  const nlohmann::json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

inline RandomizationSpace parse_space(EnvKind env, const nlohmann::json* params, const std::string& path) {
  const auto& full = env_info(env).params;
  if (!params) return full;
  if (!params->is_array() || params->empty()) throw ConfigError(path + ": expected a non-empty array");
  std::vector<ParamSpec> specs;
  for (std::size_t i = 0; i < params->size(); ++i) {
    const std::string item_path = path + "[" + std::to_string(i) + "]";
    ObjectReader r((*params)[i], item_path);
    std::string name;
    r.string("name", name);
    if (name.empty()) throw ConfigError(item_path + ".name: required");
    const int idx = full.index_of(name);
    if (idx < 0) throw ConfigError(item_path + ".name: environment '" + to_string(env) + "' has no parameter '" + name + "'");
    ParamSpec spec = full.spec(static_cast<std::size_t>(idx));
    const double declared = spec.default_value;
    r.number("default", spec.default_value);
    if (std::abs(spec.default_value - declared) > 1e-12 * std::abs(declared))
      throw ConfigError(item_path + ".default: must equal the environment default " + std::to_string(declared));
    r.number("scale_low", spec.scale_low);
    r.number("scale_high", spec.scale_high);
    if (!(spec.scale_low > 0.0 && spec.scale_low < spec.scale_high))
      throw ConfigError(item_path + ": need 0 < scale_low < scale_high");
    r.finish();
    specs.push_back(spec);
  }
  try {
    return RandomizationSpace(std::move(specs));
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

}  // namespace detail

inline ExperimentConfig parse_config(const nlohmann::json& doc) {
  ExperimentConfig c;
  detail::ObjectReader root(doc, "config");

  std::string env_name = "pendulum";
  root.string("env", env_name);
  try {
    c.env = parse_env_kind(env_name);
  } catch (const ConfigError& e) {
    throw ConfigError("config.env: " + std::string(e.what()));
  }
  std::string algo = "adp";
  root.string("algorithm", algo);
  try {
    c.algorithm = parse_algorithm(algo);
  } catch (const ConfigError& e) {
    throw ConfigError("config.algorithm: " + std::string(e.what()));
  }
  root.number("omega", c.omega);
  if (!(c.omega >= 0.0 && c.omega <= 1.0)) throw ConfigError("config.omega: must lie in [0, 1]");

  if (const auto* rand = root.get("randomization")) {
    detail::ObjectReader r(*rand, "config.randomization");
    r.number("bin_width", c.bin_width);
    c.space = detail::parse_space(c.env, r.get("params"), "config.randomization.params");
    r.finish();
  } else {
    c.space = env_info(c.env).params;
  }
  if (!(c.bin_width > 0.0)) throw ConfigError("config.randomization.bin_width: must be > 0");

  if (const auto* ppo = root.get("ppo")) {
    detail::ObjectReader r(*ppo, "config.ppo");
    r.number("gamma", c.ppo.gamma);
    r.number("lambda", c.ppo.lambda);
    r.number("clip", c.ppo.clip);
    r.number("entropy_coef", c.ppo.entropy_coef);
    r.integer("epochs", c.ppo.epochs);
    r.integer("minibatch", c.ppo.minibatch);
    r.integer("trajectories_per_env", c.ppo.trajectories_per_env);
    r.number("learning_rate", c.ppo.learning_rate);
    r.finish();
  }
  c.ppo.validate();

  if (const auto* budget = root.get("budget")) {
    detail::ObjectReader r(*budget, "config.budget");
    r.integer("env_steps", c.budget_env_steps);
    if (r.has("iterations")) {
      int it = 0;
      r.integer("iterations", it);
      if (it < 1) throw ConfigError("config.budget.iterations: must be >= 1");
      c.iterations = it;
    }
    r.finish();
  }
  if (c.budget_env_steps < 1) throw ConfigError("config.budget.env_steps: must be >= 1");

  if (const auto* s = root.get("sampler")) {
    detail::ObjectReader r(*s, "config.sampler");
    r.integer("from_space", c.sampler.from_space);
    r.integer("from_buffer", c.sampler.from_buffer);
    r.integer("select", c.sampler.select);
    r.integer("buffer_capacity", c.sampler.buffer_capacity);
    if (const auto* arms = r.get("arms")) {
      if (!arms->is_array() || arms->empty()) throw ConfigError("config.sampler.arms: expected a non-empty array");
      c.sampler.arms.clear();
      for (const auto& a : *arms) {
        if (!a.is_number()) throw ConfigError("config.sampler.arms: expected numbers");
        c.sampler.arms.push_back(a.get<double>());
        if (!(c.sampler.arms.back() >= 0.0 && c.sampler.arms.back() <= 1.0))
          throw ConfigError("config.sampler.arms: values must lie in [0, 1]");
      }
    }
    r.finish();
  }
  if (c.sampler.from_space < 0 || c.sampler.from_buffer < 0) throw ConfigError("config.sampler: counts must be >= 0");
  if (c.sampler.select < 1) throw ConfigError("config.sampler.select: must be >= 1");
  if (c.sampler.select > c.sampler.from_space + c.sampler.from_buffer)
    throw ConfigError("config.sampler.select: cannot exceed the candidate count");
  if (c.sampler.buffer_capacity < 1) throw ConfigError("config.sampler.buffer_capacity: must be >= 1");

  if (const auto* v = root.get("validation")) {
    detail::ObjectReader r(*v, "config.validation");
    r.integer("members", c.validation.members);
    r.integer("episodes", c.validation.episodes);
    r.number("scale_low", c.validation.scale_low);
    r.number("scale_high", c.validation.scale_high);
    r.finish();
  }
  if (c.validation.members < 1 || c.validation.episodes < 1)
    throw ConfigError("config.validation: members and episodes must be >= 1");
  if (!(c.validation.scale_low > 0.0 && c.validation.scale_low < c.validation.scale_high))
    throw ConfigError("config.validation: need 0 < scale_low < scale_high");

  if (const auto* e = root.get("evaluation")) {
    detail::ObjectReader r(*e, "config.evaluation");
    r.number("test_scale_low", c.evaluation.test_scale_low);
    r.number("test_scale_high", c.evaluation.test_scale_high);
    r.integer("sweep_episodes", c.evaluation.sweep_episodes);
    r.integer("random_tasks", c.evaluation.random_tasks);
    r.integer("noise_episodes", c.evaluation.noise_episodes);
    r.finish();
  }
  if (!(c.evaluation.test_scale_low > 0.0 && c.evaluation.test_scale_low <= c.evaluation.test_scale_high))
    throw ConfigError("config.evaluation: need 0 < test_scale_low <= test_scale_high");
  if (c.evaluation.sweep_episodes < 1 || c.evaluation.random_tasks < 1 || c.evaluation.noise_episodes < 1)
    throw ConfigError("config.evaluation: episode and task counts must be >= 1");

  if (const auto* seeds = root.get("seeds")) {
    if (!seeds->is_array() || seeds->empty()) throw ConfigError("config.seeds: expected a non-empty array");
    c.seeds.clear();
    for (const auto& s : *seeds) {
      if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0))
        throw ConfigError("config.seeds: expected non-negative integers");
      c.seeds.push_back(s.get<std::uint64_t>());
    }
  }
  root.string("output_dir", c.output_dir);
  if (const auto* ck = root.get("checkpoint")) {
    detail::ObjectReader r(*ck, "config.checkpoint");
    r.integer("every", c.checkpoint_every);
    r.integer("keep", c.checkpoint_keep);
    r.finish();
  }
  if (c.checkpoint_every < 1 || c.checkpoint_keep < 1) throw ConfigError("config.checkpoint: values must be >= 1");
  root.integer("workers", c.workers);
  if (c.workers < 1) throw ConfigError("config.workers: must be >= 1");
  root.boolean("record_wall_time", c.record_wall_time);
  root.number("evolution_interval", c.evolution_interval);
  if (!(c.evolution_interval > 0.0)) throw ConfigError("config.evolution_interval: must be > 0");
  root.finish();
  if (c.planned_iterations() < 1) throw ConfigError("config.budget: budget too small for a single iteration");
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return parse_config(doc);
}

// Canonical, fully defaulted form. Seeds and output_dir are run bookkeeping
// and stay out of it so every seed of one experiment shares a hash.
inline nlohmann::json canonical_json(const ExperimentConfig& c) {
  nlohmann::json params = nlohmann::json::array();
  for (const auto& s : c.space.specs())
    params.push_back({{"name", s.name}, {"default", s.default_value}, {"scale_low", s.scale_low},
                      {"scale_high", s.scale_high}});
  nlohmann::json j;
  j["env"] = to_string(c.env);
  j["algorithm"] = to_string(c.algorithm);
  j["omega"] = c.omega;
  j["randomization"] = {{"bin_width", c.bin_width}, {"params", params}};
  j["ppo"] = {{"gamma", c.ppo.gamma},
              {"lambda", c.ppo.lambda},
              {"clip", c.ppo.clip},
              {"entropy_coef", c.ppo.entropy_coef},
              {"epochs", c.ppo.epochs},
              {"minibatch", c.ppo.minibatch},
              {"trajectories_per_env", c.ppo.trajectories_per_env},
              {"learning_rate", c.ppo.learning_rate}};
  j["budget"] = {{"env_steps", c.budget_env_steps}};
  if (c.iterations) j["budget"]["iterations"] = *c.iterations;
  j["sampler"] = {{"from_space", c.sampler.from_space},
                  {"from_buffer", c.sampler.from_buffer},
                  {"select", c.sampler.select},
                  {"buffer_capacity", c.sampler.buffer_capacity},
                  {"arms", c.sampler.arms}};
  j["validation"] = {{"members", c.validation.members},
                     {"episodes", c.validation.episodes},
                     {"scale_low", c.validation.scale_low},
                     {"scale_high", c.validation.scale_high}};
  j["evaluation"] = {{"test_scale_low", c.evaluation.test_scale_low},
                     {"test_scale_high", c.evaluation.test_scale_high},
                     {"sweep_episodes", c.evaluation.sweep_episodes},
                     {"random_tasks", c.evaluation.random_tasks},
                     {"noise_episodes", c.evaluation.noise_episodes}};
  j["checkpoint"] = {{"every", c.checkpoint_every}, {"keep", c.checkpoint_keep}};
  j["workers"] = c.workers;
  j["record_wall_time"] = c.record_wall_time;
  j["evolution_interval"] = c.evolution_interval;
  return j;
}

// 64-bit FNV-1a of the canonical JSON text, as 16 hex digits.
inline std::string config_hash(const ExperimentConfig& c) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical_json(c).dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace adp

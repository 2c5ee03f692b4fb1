#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "adp/experiment.hpp"

namespace {

std::filesystem::path temp_dir(const std::string& name) {
  auto d = std::filesystem::temp_directory_path() / ("adp_exp_" + name);
  std::filesystem::remove_all(d);
  return d;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

adp::ExperimentConfig tiny(adp::Algorithm algo) {
  return adp::parse_config(nlohmann::json{
      {"env", "point_mass"},
      {"algorithm", adp::to_string(algo)},
      {"randomization", {{"params", {{{"name", "mass"}}, {{"name", "damping_x"}}}}}},
      {"budget", {{"iterations", 3}}},
      {"sampler", {{"from_space", 6}, {"from_buffer", 2}, {"select", 2}}},
      {"ppo", {{"epochs", 2}}},
      {"validation", {{"members", 2}, {"episodes", 1}}},
      {"evaluation", {{"sweep_episodes", 1}, {"random_tasks", 4}, {"noise_episodes", 1}}},
      {"checkpoint", {{"every", 1}, {"keep", 2}}}});
}

TEST(Config, DefaultsFollowDocumentedValues) {
  const auto c = adp::parse_config(nlohmann::json::object());
  EXPECT_EQ(c.env, adp::EnvKind::kPendulum);
  EXPECT_EQ(c.algorithm, adp::Algorithm::kAdp);
  EXPECT_EQ(c.bin_width, 0.01);
  EXPECT_EQ(c.sampler.from_space, 30);
  EXPECT_EQ(c.sampler.from_buffer, 10);
  EXPECT_EQ(c.sampler.select, 10);
  EXPECT_EQ(c.sampler.buffer_capacity, 40);
  EXPECT_EQ(c.sampler.arms, (std::vector<double>{0.2, 0.8}));
  EXPECT_EQ(c.budget_env_steps, 1000000);
  EXPECT_EQ(c.ppo.clip, 0.25);
  EXPECT_EQ(c.checkpoint_every, 10);
  EXPECT_EQ(c.checkpoint_keep, 3);
  for (const auto& s : c.space.specs()) {
    EXPECT_EQ(s.scale_low, 0.8);
    EXPECT_EQ(s.scale_high, 1.2);
  }
  // floor(1e6 / (10 * 5 * 200))
  EXPECT_EQ(c.planned_iterations(), 100);
}

TEST(Config, ErrorsNameTheFieldPath) {
  auto expect_error = [](const nlohmann::json& doc, const std::string& fragment) {
    try {
      adp::parse_config(doc);
      FAIL() << "accepted " << doc.dump();
    } catch (const adp::ConfigError& e) {
      EXPECT_NE(std::string(e.what()).find(fragment), std::string::npos) << e.what();
    }
  };
  expect_error({{"ppo", {{"clip_range", 0.2}}}}, "config.ppo.clip_range");
  expect_error({{"ppo", {{"epochs", "many"}}}}, "config.ppo.epochs");
  expect_error({{"env", "hopper"}}, "config.env");
  expect_error({{"randomization", {{"params", {{{"name", "radius"}}}}}}}, "config.randomization.params[0].name");
  expect_error({{"randomization", {{"params", {{{"name", "mass"}, {"default", 3.0}}}}}}},
               "config.randomization.params[0].default");
  expect_error({{"sampler", {{"select", 50}}}}, "config.sampler.select");
  expect_error({{"omega", 1.5}}, "config.omega");
}

TEST(Config, ShippedConfigsLoad) {
  int n = 0;
  for (const auto& entry : std::filesystem::directory_iterator(ADP_CONFIG_DIR)) {
    if (entry.path().extension() != ".json") continue;
    EXPECT_NO_THROW(adp::load_config(entry.path())) << entry.path();
    ++n;
  }
  EXPECT_GT(n, 0);
}

TEST(Config, HashIgnoresSeedsAndOutputDir) {
  auto a = adp::parse_config({{"seeds", {1, 2}}, {"output_dir", "x"}});
  auto b = adp::parse_config({{"seeds", {7}}, {"output_dir", "y"}});
  auto c = adp::parse_config({{"randomization", {{"bin_width", 0.05}}}});
  EXPECT_EQ(adp::config_hash(a), adp::config_hash(b));
  EXPECT_NE(adp::config_hash(a), adp::config_hash(c));
  EXPECT_EQ(adp::config_hash(a).size(), 16u);
}

TEST(Checkpoint, BitExactRoundTrip) {
  const auto dir = temp_dir("ck");
  std::filesystem::create_directories(dir);
  adp::Checkpoint ck{{3, 1, 12, 99, "pendulum", -123.456}, adp::init_policy(3, 1, 4), adp::init_value(3, 5)};
  adp::save_checkpoint(ck, dir / "a.json");
  const auto back = adp::load_checkpoint(dir / "a.json");
  EXPECT_EQ(back.policy.net, ck.policy.net);
  EXPECT_EQ(back.value, ck.value);
  EXPECT_EQ(back.meta.iteration, 12);
  EXPECT_EQ(back.meta.seed, 99u);
  adp::save_checkpoint(back, dir / "b.json");
  EXPECT_EQ(slurp(dir / "a.json"), slurp(dir / "b.json"));
  EXPECT_FALSE(std::filesystem::exists(dir / "a.json.tmp"));
}

TEST(Checkpoint, MismatchIsCompatibilityError) {
  const auto dir = temp_dir("ck_bad");
  std::filesystem::create_directories(dir);
  adp::Checkpoint ck{{3, 1, 1, 0, "pendulum", 0.0}, adp::init_policy(3, 1, 4), adp::init_value(3, 5)};
  adp::save_checkpoint(ck, dir / "p.json");
  EXPECT_THROW(adp::check_compatible(adp::load_checkpoint(dir / "p.json"), adp::EnvKind::kCartpole),
               adp::CompatibilityError);
  std::ofstream(dir / "junk.json") << "{\"meta\": 1}";
  EXPECT_THROW(adp::load_checkpoint(dir / "junk.json"), adp::CompatibilityError);
}

TEST(Train, DeterministicOutputs) {
  const auto cfg = tiny(adp::Algorithm::kAdp);
  const auto d1 = temp_dir("det1"), d2 = temp_dir("det2");
  const auto r1 = adp::run_train(cfg, 5, d1);
  adp::run_train(cfg, 5, d2);
  for (const char* f : {"train_log.csv", "sampler_log.csv", "evolution.csv", "summary.json", "checkpoints/final.json"})
    EXPECT_EQ(slurp(d1 / f), slurp(d2 / f)) << f;
  EXPECT_EQ(r1.iterations, 3);
  EXPECT_EQ(r1.env_steps, 3 * 2 * 5 * 100);
  // Periodic checkpoints beyond the last two are pruned.
  EXPECT_FALSE(std::filesystem::exists(d1 / "checkpoints/iter_000001.json"));
  EXPECT_TRUE(std::filesystem::exists(d1 / "checkpoints/iter_000003.json"));
  EXPECT_TRUE(std::filesystem::exists(d1 / "checkpoints/best.json"));
}

TEST(Train, UdrLogHasNoBanditColumns) {
  const auto dir = temp_dir("udr");
  adp::run_train(tiny(adp::Algorithm::kUdr), 1, dir);
  std::ifstream in(dir / "sampler_log.csv");
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "iteration,slot,mass,damping_x,bin_mass,bin_damping_x");
}

TEST(Train, FixedOmegaLogsConstantOmega) {
  auto cfg = tiny(adp::Algorithm::kAdpFixed);
  cfg.omega = 0.2;
  const auto r = adp::run_train(cfg, 1, temp_dir("fixed"));
  for (const auto& rec : r.history) {
    EXPECT_EQ(rec.omega, 0.2);
    EXPECT_EQ(rec.arm, -1);
  }
}

TEST(Train, IterationCountFromBudget) {
  auto cfg = tiny(adp::Algorithm::kUdr);
  cfg.iterations.reset();
  cfg.budget_env_steps = 2500;  // floor(2500 / (2 * 5 * 100)) = 2
  EXPECT_EQ(cfg.planned_iterations(), 2);
  const auto dir = temp_dir("budget");
  adp::run_train(cfg, 1, dir);
  EXPECT_NE(slurp(dir / "summary.json").find("\"iterations\": 2"), std::string::npos);
}

TEST(Eval, SweepsWriteNamedReports) {
  const auto cfg = tiny(adp::Algorithm::kUdr);
  const auto dir = temp_dir("sweeps");
  const auto tr = adp::run_train(cfg, 2, dir / "run");
  const auto single = adp::run_eval(cfg, tr.best_checkpoint, "single:point_mass.mass", 2, dir);
  EXPECT_EQ(single.size(), 10u);
  EXPECT_TRUE(std::filesystem::exists(dir / "udr_point_mass_single-mass_2.csv"));
  EXPECT_EQ(adp::run_eval(cfg, tr.best_checkpoint, "noise:obs", 2, dir).size(), 11u);
  EXPECT_EQ(adp::run_eval(cfg, tr.best_checkpoint, "random4", 2, dir).front().members.size(), 4u);
  EXPECT_TRUE(std::filesystem::exists(dir / "udr_point_mass_random4_2.json"));
  const auto val = adp::run_eval(cfg, tr.best_checkpoint, "validation", 2, dir);
  EXPECT_EQ(val.front().mean, tr.best_validation);
  EXPECT_THROW(adp::parse_sweep("single:radius", adp::EnvKind::kPointMass), adp::ConfigError);
  EXPECT_THROW(adp::parse_sweep("sideways", adp::EnvKind::kPointMass), adp::ConfigError);

  auto wrong = cfg;
  wrong.env = adp::EnvKind::kPendulum;
  wrong.space = adp::env_info(adp::EnvKind::kPendulum).params;
  EXPECT_THROW(adp::run_eval(wrong, tr.best_checkpoint, "validation", 2, dir), adp::CompatibilityError);
}

TEST(Ablation, VariantFamilies) {
  const auto base = tiny(adp::Algorithm::kAdp);
  const auto bins = adp::ablation_variants(base, "bin_width");
  ASSERT_EQ(bins.size(), 4u);
  EXPECT_EQ(bins[0].config.bin_width, 0.001);
  EXPECT_EQ(bins[3].config.bin_width, 0.1);
  const auto omegas = adp::ablation_variants(base, "fixed_omega");
  ASSERT_EQ(omegas.size(), 3u);
  EXPECT_EQ(omegas[0].config.algorithm, adp::Algorithm::kAdpFixed);
  EXPECT_EQ(omegas[1].config.omega, 0.8);
  EXPECT_EQ(omegas[2].config.algorithm, adp::Algorithm::kAdp);
  EXPECT_THROW(adp::ablation_variants(base, "learning_rate"), adp::ConfigError);
}

TEST(Ablation, SummaryRowsCarryHashes) {
  auto base = tiny(adp::Algorithm::kAdp);
  base.iterations = 1;
  const auto dir = temp_dir("ablate");
  const auto rows = adp::run_ablation(base, "fixed_omega", dir);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_NE(rows[0].config_hash, rows[2].config_hash);
  const std::string summary = slurp(dir / "ablation_fixed_omega_summary.csv");
  for (const auto& r : rows) EXPECT_NE(summary.find(r.config_hash), std::string::npos);
}

}  // namespace

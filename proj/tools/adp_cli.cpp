#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "adp/adp.hpp"

namespace {

struct CommonArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool verbose = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", args.seed, "run this seed instead of the configured list");
  cmd->add_option("--out", args.out, "output directory (defaults to the config's output_dir)");
  cmd->add_flag("-v,--verbose", args.verbose, "print per-iteration progress");
}

adp::ExperimentConfig load(const CommonArgs& args) {
  adp::ExperimentConfig cfg = adp::load_config(args.config);
  if (args.seed) cfg.seeds = {*args.seed};
  if (!args.out.empty()) cfg.output_dir = args.out;
  return cfg;
}

void print_reports(const std::vector<adp::EvalReport>& reports) {
  for (const auto& r : reports) {
    std::cout << "  ";
    if (r.meta.noise) std::cout << "sigma=" << r.meta.noise->sigma << ' ';
    if (r.members.size() == 1) {
      for (std::size_t i = 0; i < r.param_names.size(); ++i)
        std::cout << r.param_names[i] << '=' << r.members.front().scales[i] << ' ';
    } else {
      std::cout << r.members.size() << " members ";
    }
    std::cout << "mean=" << r.mean << " std=" << r.std << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Active dynamics preference training and evaluation"};
  app.require_subcommand(1);

  CommonArgs train_args, eval_args, sweep_args, ablate_args;
  auto* train = app.add_subcommand("train", "train every configured seed");
  add_common(train, train_args);

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on one sweep");
  add_common(eval, eval_args);
  std::string checkpoint, sweep_spec = "validation";
  eval->add_option("--checkpoint", checkpoint, "checkpoint JSON")->required();
  eval->add_option("--sweep", sweep_spec,
                   "validation | single:<param> | double:<a>,<b> | random<N> | noise:obs | noise:action");

  auto* sweep = app.add_subcommand("sweep", "train all seeds, then evaluate each best checkpoint");
  add_common(sweep, sweep_args);
  std::vector<std::string> sweep_specs;
  sweep->add_option("--sweep", sweep_specs, "sweeps to run (default: single:<first randomized parameter>)");

  auto* ablate = app.add_subcommand("ablate", "run an ablation family");
  add_common(ablate, ablate_args);
  std::string variant;
  ablate->add_option("--variant", variant, "bin_width | fixed_omega")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*train) {
      const auto cfg = load(train_args);
      for (const auto& r : adp::run_seed_sweep(cfg, cfg.output_dir, train_args.verbose ? &std::cout : nullptr))
        std::cout << "trained " << r.iterations << " iterations, " << r.env_steps
                  << " steps, best validation " << r.best_validation << " at iteration " << r.best_iteration
                  << " -> " << r.best_checkpoint.string() << '\n';
    } else if (*eval) {
      const auto cfg = load(eval_args);
      for (std::uint64_t seed : cfg.seeds) {
        std::cout << "seed " << seed << ":\n";
        print_reports(adp::run_eval(cfg, checkpoint, sweep_spec, seed, cfg.output_dir));
      }
    } else if (*sweep) {
      const auto cfg = load(sweep_args);
      if (sweep_specs.empty()) sweep_specs.push_back("single:" + cfg.space.spec(0).name);
      const auto results = adp::run_seed_sweep(cfg, cfg.output_dir, sweep_args.verbose ? &std::cout : nullptr);
      for (std::size_t i = 0; i < results.size(); ++i) {
        const auto seed = cfg.seeds[i];
        for (const auto& spec : sweep_specs) {
          std::cout << "seed " << seed << ' ' << spec << ":\n";
          print_reports(adp::run_eval(cfg, results[i].best_checkpoint, spec, seed,
                                      adp::run_dir(cfg.output_dir, cfg, seed) / "reports"));
        }
      }
    } else if (*ablate) {
      const auto cfg = load(ablate_args);
      for (const auto& r : adp::run_ablation(cfg, variant, cfg.output_dir, ablate_args.verbose ? &std::cout : nullptr))
        std::cout << r.variant << " seed " << r.seed << " test_mean " << r.test_mean << " (" << r.config_hash
                  << ")\n";
    }
  } catch (const adp::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const adp::CompatibilityError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

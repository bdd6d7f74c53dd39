#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cvarucb/pipeline.hpp"

namespace fs = std::filesystem;
using namespace cvarucb;

namespace {

ExperimentConfig resolve_config(const std::string& path) {
  if (path.empty()) return config_from_json(default_config_json());
  return load_config(path);
}

void write_json(const json& j, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Causal-bound risk-averse bandit toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = ".";
  std::uint64_t seed = 1;
  bool exact_joint_flag = false;

  auto* gen = app.add_subcommand("gen-data", "Sample an expert observational dataset to CSV");
  gen->add_option("--config", config_path, "Experiment config JSON");
  gen->add_option("--out", out_dir, "Output directory");
  gen->add_option("--seed", seed, "Random seed");

  auto* bounds = app.add_subcommand("bounds", "Compute causal probability and CVaR bounds");
  bounds->add_option("--config", config_path, "Experiment config JSON");
  bounds->add_option("--out", out_dir, "Output directory");
  bounds->add_option("--seed", seed, "Random seed for the sampled-joint mode");
  bounds->add_flag("--exact-joint", exact_joint_flag, "Use the exact model joint, no sampling");

  auto* sim = app.add_subcommand("simulate", "Run the bandit experiment grid");
  sim->add_option("--config", config_path, "Experiment config JSON");
  sim->add_option("--out", out_dir, "Output directory");

  auto* oracle = app.add_subcommand("oracle-check", "Compare solvers against grid oracles");
  oracle->add_option("--config", config_path, "Experiment config JSON");
  oracle->add_option("--out", out_dir, "Output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    ExperimentConfig cfg = resolve_config(config_path);
    fs::create_directories(out_dir);
    fs::path out(out_dir);

    if (gen->parsed()) {
      Rng rng(seed);
      ObservationalDataset ds = sample_dataset(cfg.model, cfg.expert_n, rng);
      fs::path path = out / ("expert_dataset_seed" + std::to_string(seed) + ".csv");
      write_dataset_csv(ds, path.string());
      std::cout << "wrote " << path.string() << " (" << ds.size() << " records)\n";
    } else if (bounds->parsed()) {
      JointActionRewardTable joint;
      if (exact_joint_flag || cfg.exact_joint) {
        joint = exact_joint_table(cfg.model);
      } else {
        Rng rng(seed);
        joint = joint_table(sample_dataset(cfg.model, cfg.expert_n, rng));
      }
      BoundsReport report = bounds_pipeline(joint, cfg.model.context_marginal(), cfg.alpha);
      fs::path path = out / "bounds.json";
      write_json(bounds_report_to_json(report), path);
      std::cout << "wrote " << path.string() << '\n';
      for (std::size_t x = 0; x < report.arms.size(); ++x)
        std::cout << "arm " << x << ": CVaR in [" << report.arms[x].cvar.lower << ", "
                  << report.arms[x].cvar.upper << "]\n";
    } else if (sim->parsed()) {
      ExperimentResults results = run_experiment(cfg);
      for (std::size_t i = 0; i < results.traces.size(); ++i) {
        const auto& [policy, traces] = results.traces[i];
        for (std::size_t s = 0; s < traces.size(); ++s) {
          fs::path path = out / ("trace_" + std::string(policy_name(policy)) + "_seed" +
                                 std::to_string(cfg.seeds[s]) + ".csv");
          std::ofstream f(path, std::ios::binary);
          if (!f) throw std::runtime_error("cannot open " + path.string());
          write_trace_csv(traces[s], f);
        }
      }
      {
        std::ofstream f(out / "aggregate.csv", std::ios::binary);
        if (!f) throw std::runtime_error("cannot open aggregate.csv");
        write_aggregate_csv(results, f);
      }
      write_json(experiment_summary(cfg, results), out / "summary.json");
      std::cout << "wrote " << (out / "aggregate.csv").string() << " and "
                << (out / "summary.json").string() << '\n';
    } else if (oracle->parsed()) {
      OracleCheckResult result = oracle_check(cfg);
      write_json(result.report, out / "oracle_report.json");
      std::cout << "max do-bounds gap " << result.max_do_gap << ", max cvar gap "
                << result.max_cvar_gap << '\n';
      if (!result.passed) {
        std::cerr << "oracle gap threshold exceeded\n";
        return 2;
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

#pragma once

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "cvarucb/bandit.hpp"
#include "cvarucb/causal_bounds.hpp"
#include "cvarucb/cvar.hpp"
#include "cvarucb/dataset.hpp"
#include "cvarucb/model.hpp"

namespace cvarucb {

using nlohmann::json;

struct ExperimentConfig {
  ConfoundedModel model;
  double alpha = 0.75;
  std::size_t horizon = 5000;
  std::vector<std::uint64_t> seeds;
  std::size_t expert_n = 1000000;
  bool exact_joint = true;
  std::vector<PolicyKind> policies;
};

inline ConfoundedModel model_from_json(const json& j) {
  RewardSupport support(j.at("support").get<std::vector<double>>(), j.at("upper_bound").get<double>());
  auto marginal = j.at("context_marginal").get<std::vector<double>>();
  auto policy = j.at("policy").get<std::vector<std::vector<double>>>();
  auto law = j.at("reward_law").get<std::vector<std::vector<std::vector<double>>>>();
  std::size_t num_arms = policy.empty() ? 0 : policy[0].size();
  std::vector<std::vector<DiscreteDistribution>> reward_law;
  for (const auto& per_context : law) {
    std::vector<DiscreteDistribution> row;
    for (const auto& probs : per_context) row.emplace_back(support, probs);
    reward_law.push_back(std::move(row));
  }
  return ConfoundedModel(num_arms, marginal, policy, std::move(reward_law), support);
}

inline PolicyKind policy_from_name(const std::string& name) {
  if (name == "clipped") return PolicyKind::Clipped;
  if (name == "unclipped") return PolicyKind::Unclipped;
  if (name == "ucb1") return PolicyKind::Ucb1;
  throw std::invalid_argument("unknown policy: " + name);
}

inline ExperimentConfig config_from_json(const json& j) {
  if (j.value("schema_version", 0) != 1)
    throw std::invalid_argument("config schema_version must be 1");
  ExperimentConfig cfg{model_from_json(j.at("model"))};
  cfg.alpha = j.value("alpha", 0.75);
  cfg.horizon = j.value("horizon", std::size_t{5000});
  cfg.seeds = j.value("seeds", std::vector<std::uint64_t>{1});
  cfg.expert_n = j.value("expert_n", std::size_t{1000000});
  cfg.exact_joint = j.value("exact_joint", true);
  for (const auto& name : j.value("policies", std::vector<std::string>{"clipped", "unclipped", "ucb1"}))
    cfg.policies.push_back(policy_from_name(name));
  if (cfg.seeds.empty()) throw std::invalid_argument("seed list must be non-empty");
  check_alpha(cfg.alpha);
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  json j;
  in >> j;
  return config_from_json(j);
}

// The two-strategy, binary-context mobile-intervention example shipped as
// the default experiment. Context 1 occurs with probability 0.12.
inline ConfoundedModel default_experiment_model() {
  RewardSupport support({0.0, 1.0}, 1.0);
  auto bern = [&](double p1) { return DiscreteDistribution(support, {1.0 - p1, p1}); };
  return ConfoundedModel(
      /*num_arms=*/2,
      /*context_marginal=*/{0.88, 0.12},
      /*policy=*/{{0.3, 0.7}, {0.8, 0.2}},
      /*reward_law=*/
      {{bern(0.45), bern(0.55)},   // context 0: arms 0, 1
       {bern(0.30), bern(0.10)}},  // context 1
      support);
}

inline json default_config_json() {
  return json{
      {"schema_version", 1},
      {"model",
       {{"support", {0.0, 1.0}},
        {"upper_bound", 1.0},
        {"context_marginal", {0.88, 0.12}},
        {"policy", {{0.3, 0.7}, {0.8, 0.2}}},
        {"reward_law",
         {{{0.55, 0.45}, {0.45, 0.55}}, {{0.70, 0.30}, {0.90, 0.10}}}}}},
      {"alpha", 0.75},
      {"horizon", 5000},
      {"seeds", {93, 94, 95, 96, 97, 98, 99, 100, 101, 102, 103, 104, 105, 106, 107}},
      {"expert_n", 1000000},
      {"exact_joint", true},
      {"policies", {"clipped", "unclipped", "ucb1"}}};
}

struct ArmBoundsReport {
  std::vector<ProbabilityInterval> tian_pearl;  // per reward level
  std::vector<ProbabilityInterval> program;     // per reward level
  std::vector<DoBoundsSolution> lower_solutions;
  std::vector<DoBoundsSolution> upper_solutions;
  CvarInterval cvar;
};

struct BoundsReport {
  RewardSupport support;
  double alpha = 0.75;
  std::vector<ArmBoundsReport> arms;
};

// Full chain: joint -> per-level ratio program -> CVaR interval per arm.
inline BoundsReport bounds_pipeline(const JointActionRewardTable& joint,
                                    const std::vector<double>& context_marginal, double alpha,
                                    const DoBoundsOptions& opt = {}) {
  check_alpha(alpha);
  joint.validate();
  BoundsReport report;
  report.support = joint.support;
  report.alpha = alpha;
  for (std::size_t x = 0; x < joint.num_arms; ++x) {
    ArmBoundsReport arm;
    for (std::size_t level = 0; level < joint.support.size(); ++level) {
      arm.tian_pearl.push_back(tian_pearl_bounds(joint, x, level));
      auto lo = do_probability_bounds(joint, context_marginal, x, level, OptSense::Min, opt);
      auto hi = do_probability_bounds(joint, context_marginal, x, level, OptSense::Max, opt);
      ProbabilityInterval iv{lo.value, std::max(lo.value, hi.value)};
      iv.validate();
      arm.program.push_back(iv);
      arm.lower_solutions.push_back(std::move(lo));
      arm.upper_solutions.push_back(std::move(hi));
    }
    if (is_binary01(joint.support)) {
      arm.cvar = cvar_bounds_binary(arm.program[1], alpha);
    } else {
      OutcomeIntervalSet set{joint.support, {}};
      for (const auto& iv : arm.program)
        set.intervals.push_back({std::max(0.0, iv.lower - 1e-7), std::min(1.0, iv.upper + 1e-7)});
      arm.cvar = cvar_interval_general(set, alpha);
    }
    report.arms.push_back(std::move(arm));
  }
  return report;
}

inline json interval_to_json(const ProbabilityInterval& iv) {
  return json{{"lower", iv.lower}, {"upper", iv.upper}};
}

inline json bounds_report_to_json(const BoundsReport& report, const DoBoundsOptions& opt = {}) {
  json arms = json::array();
  for (std::size_t x = 0; x < report.arms.size(); ++x) {
    const auto& arm = report.arms[x];
    json levels = json::array();
    for (std::size_t i = 0; i < arm.program.size(); ++i) {
      levels.push_back({{"reward", report.support.values[i]},
                        {"tian_pearl", interval_to_json(arm.tian_pearl[i])},
                        {"program", interval_to_json(arm.program[i])},
                        {"lower_a", arm.lower_solutions[i].a},
                        {"lower_b", arm.lower_solutions[i].b},
                        {"upper_a", arm.upper_solutions[i].a},
                        {"upper_b", arm.upper_solutions[i].b}});
    }
    arms.push_back({{"arm", x},
                    {"levels", levels},
                    {"cvar", {{"lower", arm.cvar.lower}, {"upper", arm.cvar.upper}}}});
  }
  return json{{"alpha", report.alpha},
              {"support", report.support.values},
              {"arms", arms},
              {"solver", {{"grid_step", opt.grid_step},
                          {"refine_step", opt.refine_step},
                          {"descent_starts", opt.descent_starts}}}};
}

struct AggregateRow {
  std::size_t step;  // total-pull index, 1-based
  double mean_cvar, std_cvar, mean_mean, std_mean;
};

struct ExperimentResults {
  // policy -> seed -> trace, in config order
  std::vector<std::pair<PolicyKind, std::vector<RegretTrace>>> traces;
  std::vector<std::pair<PolicyKind, std::vector<AggregateRow>>> aggregates;
};

inline std::vector<AggregateRow> aggregate_traces(const std::vector<RegretTrace>& traces) {
  std::size_t len = traces.front().cum_cvar_regret.size();
  std::vector<AggregateRow> rows;
  rows.reserve(len);
  double count = static_cast<double>(traces.size());
  for (std::size_t t = 0; t < len; ++t) {
    double mc = 0.0, mm = 0.0;
    for (const auto& tr : traces) {
      mc += tr.cum_cvar_regret[t];
      mm += tr.cum_mean_regret[t];
    }
    mc /= count;
    mm /= count;
    double vc = 0.0, vm = 0.0;
    for (const auto& tr : traces) {
      vc += (tr.cum_cvar_regret[t] - mc) * (tr.cum_cvar_regret[t] - mc);
      vm += (tr.cum_mean_regret[t] - mm) * (tr.cum_mean_regret[t] - mm);
    }
    double denom = traces.size() > 1 ? count - 1.0 : 1.0;
    rows.push_back({t + 1, mc, std::sqrt(vc / denom), mm, std::sqrt(vm / denom)});
  }
  return rows;
}

// CVaR causal bounds used by the clipped policy, from the exact joint or a
// sampled expert dataset depending on the config.
inline std::vector<CvarInterval> experiment_bounds(const ExperimentConfig& cfg,
                                                   const DoBoundsOptions& opt = {}) {
  JointActionRewardTable joint;
  if (cfg.exact_joint) {
    joint = exact_joint_table(cfg.model);
  } else {
    Rng rng(cfg.seeds.front());
    joint = joint_table(sample_dataset(cfg.model, cfg.expert_n, rng));
  }
  BoundsReport report = bounds_pipeline(joint, cfg.model.context_marginal(), cfg.alpha, opt);
  std::vector<CvarInterval> bounds;
  for (const auto& arm : report.arms) bounds.push_back(arm.cvar);
  return bounds;
}

inline ExperimentResults run_experiment(const ExperimentConfig& cfg,
                                        const DoBoundsOptions& opt = {}) {
  std::vector<CvarInterval> bounds = experiment_bounds(cfg, opt);
  ExperimentResults results;
  for (PolicyKind policy : cfg.policies) {
    std::vector<RegretTrace> traces;
    for (std::uint64_t seed : cfg.seeds) {
      BanditConfig bc;
      bc.alpha = cfg.alpha;
      bc.reward_upper = cfg.model.support().upper_bound;
      bc.horizon = cfg.horizon;
      bc.policy = policy;
      Rng rng(seed);
      traces.push_back(run_episode(cfg.model, bc, bounds, rng));
    }
    results.aggregates.emplace_back(policy, aggregate_traces(traces));
    results.traces.emplace_back(policy, std::move(traces));
  }
  return results;
}

inline void write_trace_csv(const RegretTrace& trace, std::ostream& out) {
  out << "step,arm,reward,cum_cvar_regret,cum_mean_regret\n";
  for (std::size_t i = 0; i < trace.steps.size(); ++i)
    out << trace.steps[i] << ',' << trace.arms[i] << ',' << trace.rewards[i] << ','
        << trace.cum_cvar_regret[i] << ',' << trace.cum_mean_regret[i] << '\n';
}

inline void write_aggregate_csv(const ExperimentResults& results, std::ostream& out) {
  out << "step,policy,mean_cum_cvar_regret,std_cum_cvar_regret,mean_cum_mean_regret,"
         "std_cum_mean_regret\n";
  for (const auto& [policy, rows] : results.aggregates)
    for (const auto& r : rows)
      out << r.step << ',' << policy_name(policy) << ',' << r.mean_cvar << ',' << r.std_cvar << ','
          << r.mean_mean << ',' << r.std_mean << '\n';
}

inline json experiment_summary(const ExperimentConfig& cfg, const ExperimentResults& results) {
  json policies = json::array();
  for (std::size_t i = 0; i < results.aggregates.size(); ++i) {
    const auto& [policy, rows] = results.aggregates[i];
    const auto& traces = results.traces[i].second;
    json pulls = json::array();
    for (const auto& tr : traces) pulls.push_back(tr.pull_counts);
    const AggregateRow& last = rows.back();
    policies.push_back({{"policy", policy_name(policy)},
                        {"final_mean_cum_cvar_regret", last.mean_cvar},
                        {"final_std_cum_cvar_regret", last.std_cvar},
                        {"final_mean_cum_mean_regret", last.mean_mean},
                        {"final_std_cum_mean_regret", last.std_mean},
                        {"pull_counts_per_seed", pulls}});
  }
  return json{{"alpha", cfg.alpha},
              {"horizon", cfg.horizon},
              {"num_seeds", cfg.seeds.size()},
              {"policies", policies}};
}

struct OracleCheckResult {
  double max_do_gap = 0.0;
  double max_cvar_gap = 0.0;
  bool passed = true;
  json report;
};

// Runs the grid referees against both solvers on the config model plus a
// batch of random instances. Gap threshold 1e-3.
inline OracleCheckResult oracle_check(const ExperimentConfig& cfg, int random_instances = 20,
                                      std::uint64_t seed = 7) {
  if (cfg.model.num_contexts() > 4)
    throw std::invalid_argument("oracle check requires at most 4 contexts");
  OracleCheckResult result;
  json checks = json::array();

  auto check_model = [&](const ConfoundedModel& model, const std::string& label) {
    JointActionRewardTable joint = exact_joint_table(model);
    double res = model.num_contexts() <= 2 ? 1e-4 : 1e-3;
    for (std::size_t x = 0; x < model.num_arms(); ++x) {
      if (joint.arm_marginal(x) <= 1e-6) continue;
      for (std::size_t level = 0; level < model.support().size(); ++level) {
        for (OptSense sense : {OptSense::Min, OptSense::Max}) {
          double solver =
              do_probability_bounds(joint, model.context_marginal(), x, level, sense).value;
          double oracle =
              brute_force_do_bounds(joint, model.context_marginal(), x, level, sense, res);
          double gap = std::abs(solver - oracle);
          result.max_do_gap = std::max(result.max_do_gap, gap);
          checks.push_back({{"kind", "do_bounds"}, {"instance", label}, {"arm", x},
                            {"level", level}, {"sense", sense == OptSense::Min ? "min" : "max"},
                            {"solver", solver}, {"oracle", oracle}, {"gap", gap}});
        }
      }
    }
  };

  check_model(cfg.model, "config");

  Rng rng(seed);
  for (int i = 0; i < random_instances; ++i) {
    // random OutcomeIntervalSet around a random distribution
    std::size_t n = 2 + static_cast<std::size_t>(rng.uniform() * 3.0);
    std::vector<double> values;
    double v = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      v += 0.05 + rng.uniform() * 0.3;
      values.push_back(v);
    }
    RewardSupport support(values, v);
    std::vector<double> p(n);
    double total = 0.0;
    for (auto& e : p) total += (e = 0.05 + rng.uniform());
    for (auto& e : p) e /= total;
    OutcomeIntervalSet set{support, {}};
    for (double e : p) {
      double lo = std::max(0.0, e - rng.uniform() * 0.2);
      double hi = std::min(1.0, e + rng.uniform() * 0.2);
      set.intervals.push_back({lo, hi});
    }
    double alpha = 0.1 + rng.uniform() * 0.9;
    if (alpha > 1.0) alpha = 1.0;
    for (OptSense sense : {OptSense::Min, OptSense::Max}) {
      double solver = cvar_bounds_general(set, alpha, sense);
      double oracle = brute_force_cvar_bounds(set, alpha, sense, 1e-3);
      // the grid referee only visits lattice points, allow its quantization
      double gap = std::abs(solver - oracle);
      result.max_cvar_gap = std::max(result.max_cvar_gap, gap);
      checks.push_back({{"kind", "cvar_bounds"}, {"instance", i},
                        {"sense", sense == OptSense::Min ? "min" : "max"},
                        {"solver", solver}, {"oracle", oracle}, {"gap", gap}});
    }
  }

  result.passed = result.max_do_gap <= 1e-3 && result.max_cvar_gap <= 2e-3;
  result.report = json{{"max_do_gap", result.max_do_gap},
                       {"max_cvar_gap", result.max_cvar_gap},
                       {"passed", result.passed},
                       {"checks", checks}};
  return result;
}

}  // namespace cvarucb

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "cvarucb/cvar.hpp"
#include "cvarucb/empirical_cdf.hpp"
#include "cvarucb/model.hpp"

namespace cvarucb {

enum class PolicyKind { Clipped, Unclipped, Ucb1 };

inline const char* policy_name(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::Clipped: return "clipped";
    case PolicyKind::Unclipped: return "unclipped";
    case PolicyKind::Ucb1: return "ucb1";
  }
  return "?";
}

enum class TieRule { LowestIndex };

struct BanditConfig {
  double alpha = 0.75;
  double reward_upper = 1.0;
  // Total pull budget, including the one initialization pull per kept arm.
  std::size_t horizon = 5000;
  PolicyKind policy = PolicyKind::Clipped;
  TieRule tie_rule = TieRule::LowestIndex;

  void validate(std::size_t kept_arms) const {
    check_alpha(alpha);
    if (reward_upper <= 0.0) throw std::invalid_argument("reward upper bound must be positive");
    if (horizon < kept_arms)
      throw std::invalid_argument("horizon smaller than the number of arms to initialize");
  }
};

struct ArmState {
  std::size_t pulls = 0;
  EmpiricalCDF cdf;
  CvarInterval bounds{0.0, std::numeric_limits<double>::infinity()};
  bool pruned = false;

  explicit ArmState(RewardSupport support) : cdf(std::move(support)) {}
};

struct RegretTrace {
  // step index per played pull: -(K'-1)..0 for initialization, then 1..n
  std::vector<long> steps;
  std::vector<std::size_t> arms;
  std::vector<double> rewards;
  std::vector<double> cum_cvar_regret;
  std::vector<double> cum_mean_regret;
  std::vector<std::size_t> pull_counts;  // per original arm, final
};

// Step 1 of the algorithm: drop every arm whose causal upper bound falls
// below the best causal lower bound.
inline std::vector<std::size_t> prune_arms(const std::vector<CvarInterval>& bounds) {
  if (bounds.empty()) throw std::invalid_argument("no arms to prune");
  double l_max = -std::numeric_limits<double>::infinity();
  for (const auto& b : bounds) l_max = std::max(l_max, b.lower);
  std::vector<std::size_t> kept;
  for (std::size_t x = 0; x < bounds.size(); ++x)
    if (bounds[x].upper >= l_max) kept.push_back(x);
  return kept;
}

// DKW radius eps_x = sqrt(ln(2 n^2) / (2 T_x)).
inline double exploration_radius(std::size_t horizon, std::size_t pulls) {
  if (pulls == 0) throw std::invalid_argument("exploration radius needs at least one pull");
  if (horizon < 1) throw std::invalid_argument("horizon must be at least 1");
  double n = static_cast<double>(horizon);
  return std::sqrt(std::log(2.0 * n * n) / (2.0 * static_cast<double>(pulls)));
}

// Optimistic shift (F - eps)^+ on [0, U); the value at U stays 1.
inline StepCdf optimistic_cdf(const EmpiricalCDF& cdf, double epsilon, double upper) {
  StepCdf base = cdf.to_step_cdf();
  StepCdf out;
  out.upper_bound = upper;
  for (std::size_t i = 0; i < base.points.size(); ++i) {
    if (base.points[i] >= upper) break;
    out.points.push_back(base.points[i]);
    out.values.push_back(std::max(base.values[i] - epsilon, 0.0));
  }
  out.points.push_back(upper);
  out.values.push_back(1.0);
  return out;
}

// UCB index min{CVaR_alpha(F~), h_x}; h_x = +inf recovers the unclipped rule.
inline double clipped_index(const ArmState& arm, double epsilon, double alpha, double upper) {
  double optimistic = cvar_of_cdf(optimistic_cdf(arm.cdf, epsilon, upper), alpha);
  return std::min(optimistic, arm.bounds.upper);
}

inline double ucb1_index(const ArmState& arm, std::size_t t) {
  if (arm.pulls == 0) throw std::invalid_argument("ucb1 index needs at least one pull");
  return arm.cdf.mean() +
         std::sqrt(2.0 * std::log(static_cast<double>(t)) / static_cast<double>(arm.pulls));
}

// Argmax with deterministic lowest-index tie-breaking. `candidates` maps
// position to original arm index.
inline std::size_t select_action(const std::vector<double>& indices,
                                 const std::vector<std::size_t>& candidates) {
  if (indices.empty() || indices.size() != candidates.size())
    throw std::invalid_argument("empty or mismatched index list");
  std::size_t best = 0;
  for (std::size_t i = 1; i < indices.size(); ++i)
    if (indices[i] > indices[best]) best = i;
  return candidates[best];
}

// Per-trajectory regret accumulation; the final value matches
// sum_x gap_x * T_x exactly up to summation rounding.
inline std::vector<double> cvar_regret(const RegretTrace& trace,
                                       const std::vector<double>& true_cvars) {
  double best = *std::max_element(true_cvars.begin(), true_cvars.end());
  std::vector<double> curve;
  curve.reserve(trace.arms.size());
  double acc = 0.0;
  for (std::size_t arm : trace.arms) {
    if (arm >= true_cvars.size()) throw std::invalid_argument("trace arm outside the model");
    acc += best - true_cvars[arm];
    curve.push_back(acc);
  }
  return curve;
}

// Algorithm loop: prune, initialize each kept arm once, then n rounds of
// index computation, selection and CDF update. Rewards are drawn from the
// interventional distribution (the learner intervenes; no confounding).
inline RegretTrace run_episode(const ConfoundedModel& model, const BanditConfig& config,
                               const std::vector<CvarInterval>& bounds, Rng& rng) {
  std::size_t K = model.num_arms();
  if (bounds.size() != K && config.policy == PolicyKind::Clipped)
    throw std::invalid_argument("bounds count does not match arm count");

  std::vector<std::size_t> kept;
  if (config.policy == PolicyKind::Clipped) kept = prune_arms(bounds);
  else for (std::size_t x = 0; x < K; ++x) kept.push_back(x);
  config.validate(kept.size());

  std::vector<ArmState> arms;
  arms.reserve(K);
  for (std::size_t x = 0; x < K; ++x) {
    arms.emplace_back(model.support());
    arms.back().pruned = true;
    if (config.policy == PolicyKind::Clipped) arms.back().bounds = bounds[x];
  }
  for (std::size_t x : kept) arms[x].pruned = false;

  std::vector<DiscreteDistribution> truth;
  std::vector<double> true_cvar(K), true_mean(K);
  for (std::size_t x = 0; x < K; ++x) {
    truth.push_back(interventional_distribution(model, x));
    true_cvar[x] = cvar_discrete(truth[x], config.alpha);
    true_mean[x] = truth[x].mean();
  }
  double best_cvar = *std::max_element(true_cvar.begin(), true_cvar.end());
  double best_mean = *std::max_element(true_mean.begin(), true_mean.end());

  RegretTrace trace;
  trace.pull_counts.assign(K, 0);
  double cvar_acc = 0.0, mean_acc = 0.0;
  auto play = [&](std::size_t x, long step) {
    std::size_t level = static_cast<std::size_t>(rng.categorical(truth[x].probs));
    double reward = model.support().values[level];
    arms[x].cdf.add(reward);
    ++arms[x].pulls;
    ++trace.pull_counts[x];
    trace.steps.push_back(step);
    trace.arms.push_back(x);
    trace.rewards.push_back(reward);
    cvar_acc += best_cvar - true_cvar[x];
    mean_acc += best_mean - true_mean[x];
    trace.cum_cvar_regret.push_back(cvar_acc);
    trace.cum_mean_regret.push_back(mean_acc);
  };

  // initialization: one pull per kept arm at steps -(K'-1)..0
  for (std::size_t i = 0; i < kept.size(); ++i)
    play(kept[i], static_cast<long>(i) + 1 - static_cast<long>(kept.size()));

  std::size_t rounds = config.horizon - kept.size();
  for (std::size_t t = 1; t <= rounds; ++t) {
    std::vector<double> indices(kept.size());
    for (std::size_t i = 0; i < kept.size(); ++i) {
      const ArmState& arm = arms[kept[i]];
      if (config.policy == PolicyKind::Ucb1) {
        indices[i] = ucb1_index(arm, kept.size() + t - 1);
      } else {
        double eps = exploration_radius(rounds, arm.pulls);
        indices[i] = clipped_index(arm, eps, config.alpha, config.reward_upper);
      }
    }
    play(select_action(indices, kept), static_cast<long>(t));
  }
  return trace;
}

}  // namespace cvarucb

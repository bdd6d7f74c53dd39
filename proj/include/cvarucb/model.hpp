#pragma once

#include <cstddef>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "cvarucb/distribution.hpp"
#include "cvarucb/rng.hpp"

namespace cvarucb {

// Empirical or exact joint law over (arm, reward level) pairs.
struct JointActionRewardTable {
  std::size_t num_arms = 0;
  RewardSupport support;
  // entries[x][i] = P(X = x, Y = y_i)
  std::vector<std::vector<double>> entries;

  double prob(std::size_t arm, std::size_t level) const { return entries.at(arm).at(level); }

  double arm_marginal(std::size_t arm) const {
    double total = 0.0;
    for (double p : entries.at(arm)) total += p;
    return total;
  }

  void validate() const {
    if (entries.size() != num_arms) throw std::invalid_argument("joint table arm count mismatch");
    double total = 0.0;
    for (const auto& row : entries) {
      if (row.size() != support.size()) throw std::invalid_argument("joint table level count mismatch");
      for (double p : row) {
        if (p < -kProbTol) throw std::invalid_argument("negative joint probability");
        total += p;
      }
    }
    if (std::abs(total - 1.0) > kProbTol) throw std::invalid_argument("joint table mass is not 1");
  }
};

// Ground-truth generative triple: P(C), P(X|C), P(Y|X,C). Plays the expert in
// the harness and supplies interventional ground truth for regret accounting.
class ConfoundedModel {
 public:
  ConfoundedModel(std::size_t num_arms, std::vector<double> context_marginal,
                  std::vector<std::vector<double>> policy,
                  std::vector<std::vector<DiscreteDistribution>> reward_law, RewardSupport support)
      : num_arms_(num_arms),
        context_marginal_(std::move(context_marginal)),
        policy_(std::move(policy)),
        reward_law_(std::move(reward_law)),
        support_(std::move(support)) {
    validate();
  }

  std::size_t num_arms() const { return num_arms_; }
  std::size_t num_contexts() const { return context_marginal_.size(); }
  const std::vector<double>& context_marginal() const { return context_marginal_; }
  const RewardSupport& support() const { return support_; }

  double context_prob(std::size_t c) const { return context_marginal_.at(c); }
  double policy_prob(std::size_t arm, std::size_t c) const { return policy_.at(c).at(arm); }
  const DiscreteDistribution& reward_dist(std::size_t arm, std::size_t c) const {
    return reward_law_.at(c).at(arm);
  }

 private:
  std::size_t num_arms_;
  std::vector<double> context_marginal_;           // P(c), indexed by context
  std::vector<std::vector<double>> policy_;        // policy_[c][x] = P(x|c)
  std::vector<std::vector<DiscreteDistribution>> reward_law_;  // reward_law_[c][x] = P(Y|x,c)
  RewardSupport support_;

  void validate() const {
    if (num_arms_ == 0) throw std::invalid_argument("model needs at least one arm");
    if (context_marginal_.empty()) throw std::invalid_argument("model needs at least one context");
    check_probability_vector(context_marginal_, "context marginal");
    if (policy_.size() != context_marginal_.size() || reward_law_.size() != context_marginal_.size())
      throw std::invalid_argument("per-context table count mismatch");
    for (std::size_t c = 0; c < context_marginal_.size(); ++c) {
      if (policy_[c].size() != num_arms_) throw std::invalid_argument("policy row length mismatch");
      check_probability_vector(policy_[c], "policy column");
      if (reward_law_[c].size() != num_arms_) throw std::invalid_argument("reward law row length mismatch");
      for (const auto& d : reward_law_[c]) {
        d.validate();
        if (d.support.values != support_.values)
          throw std::invalid_argument("reward law support mismatch");
      }
    }
  }
};

struct ExpertStep {
  std::size_t context;
  std::size_t action;
  double reward;
};

// One draw of the expert's generative process: c ~ P(C), x ~ P(x|c),
// y ~ P(Y|x,c). Callers drop the context to form observational records.
inline ExpertStep sample_expert_step(const ConfoundedModel& model, Rng& rng) {
  std::size_t c = static_cast<std::size_t>(rng.categorical(model.context_marginal()));
  std::vector<double> pol(model.num_arms());
  for (std::size_t x = 0; x < model.num_arms(); ++x) pol[x] = model.policy_prob(x, c);
  std::size_t x = static_cast<std::size_t>(rng.categorical(pol));
  const auto& dist = model.reward_dist(x, c);
  std::size_t level = static_cast<std::size_t>(rng.categorical(dist.probs));
  return {c, x, dist.support.values[level]};
}

// Back-door adjustment against the ground-truth model:
// P(y|do(x)) = sum_c P(y|x,c) P(c).
inline DiscreteDistribution interventional_distribution(const ConfoundedModel& model, std::size_t arm) {
  std::vector<double> probs(model.support().size(), 0.0);
  for (std::size_t c = 0; c < model.num_contexts(); ++c) {
    const auto& d = model.reward_dist(arm, c);
    for (std::size_t i = 0; i < probs.size(); ++i) probs[i] += d.probs[i] * model.context_prob(c);
  }
  return DiscreteDistribution(model.support(), std::move(probs));
}

// Noise-free joint P(x,y) = sum_c P(c) P(x|c) P(y|x,c).
inline JointActionRewardTable exact_joint_table(const ConfoundedModel& model) {
  JointActionRewardTable table;
  table.num_arms = model.num_arms();
  table.support = model.support();
  table.entries.assign(model.num_arms(), std::vector<double>(model.support().size(), 0.0));
  for (std::size_t c = 0; c < model.num_contexts(); ++c)
    for (std::size_t x = 0; x < model.num_arms(); ++x) {
      const auto& d = model.reward_dist(x, c);
      double pxc = model.context_prob(c) * model.policy_prob(x, c);
      for (std::size_t i = 0; i < d.probs.size(); ++i) table.entries[x][i] += pxc * d.probs[i];
    }
  table.validate();
  return table;
}

}  // namespace cvarucb

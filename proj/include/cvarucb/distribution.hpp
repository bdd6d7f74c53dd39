#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace cvarucb {

inline constexpr double kProbTol = 1e-9;

// Ordered reward levels y_0 < y_1 < ... < y_n, all within [0, upper_bound].
struct RewardSupport {
  std::vector<double> values;
  double upper_bound = 1.0;

  RewardSupport() = default;
  RewardSupport(std::vector<double> vals, double upper) : values(std::move(vals)), upper_bound(upper) {
    validate();
  }

  std::size_t size() const { return values.size(); }

  void validate() const {
    if (values.empty()) throw std::invalid_argument("reward support is empty");
    if (upper_bound <= 0.0) throw std::invalid_argument("reward upper bound must be positive");
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (values[i] < 0.0 || values[i] > upper_bound)
        throw std::invalid_argument("reward level outside [0, U]");
      if (i > 0 && values[i] <= values[i - 1])
        throw std::invalid_argument("reward levels must be strictly increasing");
    }
  }

  // Index of an exact support value, or throws.
  std::size_t index_of(double y) const {
    for (std::size_t i = 0; i < values.size(); ++i)
      if (values[i] == y) return i;
    throw std::invalid_argument("reward value " + std::to_string(y) + " not in declared support");
  }
};

inline bool is_binary01(const RewardSupport& s) {
  return s.values.size() == 2 && s.values[0] == 0.0 && s.values[1] == 1.0;
}

// Probability vector aligned with a reward support.
struct DiscreteDistribution {
  RewardSupport support;
  std::vector<double> probs;

  DiscreteDistribution() = default;
  DiscreteDistribution(RewardSupport s, std::vector<double> p) : support(std::move(s)), probs(std::move(p)) {
    validate();
  }

  void validate() const {
    support.validate();
    if (probs.size() != support.size())
      throw std::invalid_argument("probability vector length mismatch");
    double total = 0.0;
    for (double p : probs) {
      if (p < -kProbTol || p > 1.0 + kProbTol)
        throw std::invalid_argument("probability outside [0, 1]");
      total += p;
    }
    if (std::abs(total - 1.0) > kProbTol)
      throw std::invalid_argument("probabilities sum to " + std::to_string(total) + ", not 1");
  }

  double mean() const {
    double m = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) m += probs[i] * support.values[i];
    return m;
  }
};

inline void check_probability_vector(const std::vector<double>& p, const char* what) {
  double total = 0.0;
  for (double v : p) {
    if (v < -kProbTol || v > 1.0 + kProbTol)
      throw std::invalid_argument(std::string(what) + ": entry outside [0, 1]");
    total += v;
  }
  if (std::abs(total - 1.0) > kProbTol)
    throw std::invalid_argument(std::string(what) + ": entries do not sum to 1");
}

}  // namespace cvarucb

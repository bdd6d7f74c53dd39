#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "cvarucb/distribution.hpp"

namespace cvarucb {

// Right-continuous step CDF on [0, U], represented by its jump points.
// values[i] is the CDF evaluated at points[i]; the last point carries 1.
struct StepCdf {
  std::vector<double> points;
  std::vector<double> values;
  double upper_bound = 1.0;

  void validate() const {
    if (points.empty() || points.size() != values.size())
      throw std::invalid_argument("step CDF shape mismatch");
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (points[i] < 0.0 || points[i] > upper_bound)
        throw std::invalid_argument("step CDF point outside [0, U]");
      if (i > 0 && points[i] <= points[i - 1])
        throw std::invalid_argument("step CDF points not increasing");
      if (values[i] < -kProbTol || values[i] > 1.0 + kProbTol)
        throw std::invalid_argument("step CDF value outside [0, 1]");
      if (i > 0 && values[i] < values[i - 1] - 1e-12)
        throw std::invalid_argument("step CDF not nondecreasing");
    }
    if (values.back() < 1.0 - kProbTol)
      throw std::invalid_argument("step CDF does not reach 1 on [0, U]");
  }

  double at(double y) const {
    double v = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (points[i] <= y) v = values[i];
      else break;
    }
    return v;
  }
};

// Per-arm running statistic of Algorithm steps: counts per support level.
class EmpiricalCDF {
 public:
  explicit EmpiricalCDF(RewardSupport support)
      : support_(std::move(support)), counts_(support_.size(), 0), total_(0) {}

  const RewardSupport& support() const { return support_; }
  std::size_t total() const { return total_; }
  const std::vector<std::size_t>& counts() const { return counts_; }

  void add(double reward) {
    ++counts_[support_.index_of(reward)];
    ++total_;
  }

  // Fraction of samples <= y.
  double at(double y) const {
    if (total_ == 0) throw std::logic_error("empirical CDF has no samples");
    std::size_t acc = 0;
    for (std::size_t i = 0; i < counts_.size(); ++i)
      if (support_.values[i] <= y) acc += counts_[i];
    return static_cast<double>(acc) / static_cast<double>(total_);
  }

  double mean() const {
    if (total_ == 0) throw std::logic_error("empirical CDF has no samples");
    double m = 0.0;
    for (std::size_t i = 0; i < counts_.size(); ++i)
      m += static_cast<double>(counts_[i]) * support_.values[i];
    return m / static_cast<double>(total_);
  }

  StepCdf to_step_cdf() const {
    if (total_ == 0) throw std::logic_error("empirical CDF has no samples");
    StepCdf cdf;
    cdf.upper_bound = support_.upper_bound;
    double acc = 0.0;
    for (std::size_t i = 0; i < counts_.size(); ++i) {
      acc += static_cast<double>(counts_[i]) / static_cast<double>(total_);
      cdf.points.push_back(support_.values[i]);
      cdf.values.push_back(acc);
    }
    // all mass sits within the support, so the CDF is 1 from the top level on
    cdf.values.back() = 1.0;
    return cdf;
  }

 private:
  RewardSupport support_;
  std::vector<std::size_t> counts_;
  std::size_t total_;
};

inline double cdf_evaluate(const EmpiricalCDF& cdf, double y) { return cdf.at(y); }

}  // namespace cvarucb

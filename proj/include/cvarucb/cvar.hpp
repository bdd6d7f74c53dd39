#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "cvarucb/causal_bounds.hpp"
#include "cvarucb/distribution.hpp"
#include "cvarucb/empirical_cdf.hpp"

namespace cvarucb {

// Lower-tail CVaR of rewards: higher is better, CVaR_1 is the mean.
struct CvarInterval {
  double lower = 0.0;
  double upper = 0.0;
};

// Per-level probability intervals [a_i, b_i] around an unknown distribution.
struct OutcomeIntervalSet {
  RewardSupport support;
  std::vector<ProbabilityInterval> intervals;

  void validate() const {
    support.validate();
    if (intervals.size() != support.size())
      throw std::invalid_argument("interval count does not match support");
    double lo = 0.0, hi = 0.0;
    for (const auto& iv : intervals) {
      iv.validate();
      lo += iv.lower;
      hi += iv.upper;
    }
    if (lo > 1.0 + kProbTol || hi < 1.0 - kProbTol)
      throw std::invalid_argument("empty feasible simplex slice");
  }
};

inline void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("risk level must be in (0, 1]");
}

// Branch formula on raw vectors; no validation. Used by the grid oracles
// where distributions are synthesized in bulk.
inline double cvar_discrete_raw(const std::vector<double>& y, const std::vector<double>& p,
                                double alpha) {
  double cum = 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < p.size(); ++i) {
    if (cum + p[i] >= alpha) return (acc + y[i] * (alpha - cum)) / alpha;
    cum += p[i];
    acc += y[i] * p[i];
  }
  return (acc + y.back() * (alpha - cum)) / alpha;
}

// Discrete CVaR by the cumulative-mass branch formula; equals the
// sup_nu {nu - E[(nu - X)^+]/alpha} form exactly on finite supports.
inline double cvar_discrete(const DiscreteDistribution& dist, double alpha) {
  check_alpha(alpha);
  return cvar_discrete_raw(dist.support.values, dist.probs, alpha);
}

// CVaR of a right-continuous step CDF on [0, U] via the first-order
// condition: nu* = inf{t : F(t) >= alpha}, E[(nu* - X)^+] as an exact step
// integral.
inline double cvar_of_cdf(const StepCdf& cdf, double alpha) {
  check_alpha(alpha);
  cdf.validate();
  std::size_t k = 0;
  while (k < cdf.points.size() && cdf.values[k] < alpha - 1e-12) ++k;
  if (k == cdf.points.size()) k = cdf.points.size() - 1;
  double nu = cdf.points[k];
  double integral = 0.0;
  for (std::size_t i = 0; i < k; ++i)
    integral += cdf.values[i] * (cdf.points[i + 1] - cdf.points[i]);
  return nu - integral / alpha;
}

namespace detail {

// One branch of the interval-propagation program: the crossing index sits at
// `pivot`, head levels 0..pivot-1 stay below alpha cumulatively. Within the
// branch the payoff is linear in the head masses, so a greedy saturation is
// exact. Returns NaN when the branch has no feasible point.
inline double cvar_branch_value(const OutcomeIntervalSet& set, double alpha, OptSense sense,
                                std::size_t pivot) {
  const auto& y = set.support.values;
  const auto& iv = set.intervals;
  std::size_t n = iv.size();
  constexpr double tol = 1e-12;

  double a_head = 0.0, b_head = 0.0;
  for (std::size_t i = 0; i < pivot; ++i) {
    a_head += iv[i].lower;
    b_head += iv[i].upper;
  }
  double a_tail = 0.0, b_tail = 0.0;
  for (std::size_t i = pivot + 1; i < n; ++i) {
    a_tail += iv[i].lower;
    b_tail += iv[i].upper;
  }
  // cumulative mass through the pivot must be able to reach alpha
  if (a_tail > 1.0 - alpha + tol) return std::numeric_limits<double>::quiet_NaN();

  double s_lo = std::max({a_head, alpha - iv[pivot].upper, 1.0 - iv[pivot].upper - b_tail});
  double s_hi = std::min({b_head, alpha, 1.0 - iv[pivot].lower - a_tail});
  if (s_lo > s_hi + tol) return std::numeric_limits<double>::quiet_NaN();

  if (pivot == 0) return y[0];  // head empty, payoff constant y_0

  // payoff = y_pivot + (1/alpha) sum_head (y_i - y_pivot) p_i with negative
  // weights, so Max wants minimal head mass placed on the cheapest levels
  // (nearest the pivot) and Min wants maximal mass on the most damaging ones.
  double s = sense == OptSense::Max ? s_lo : s_hi;
  std::vector<double> p(pivot);
  double rem = s;
  for (std::size_t i = 0; i < pivot; ++i) {
    p[i] = iv[i].lower;
    rem -= p[i];
  }
  if (rem < -1e-9) return std::numeric_limits<double>::quiet_NaN();
  if (rem < 0.0) rem = 0.0;
  if (sense == OptSense::Max) {
    for (std::size_t i = pivot; i-- > 0 && rem > 0.0;) {
      double add = std::min(rem, iv[i].upper - iv[i].lower);
      p[i] += add;
      rem -= add;
    }
  } else {
    for (std::size_t i = 0; i < pivot && rem > 0.0; ++i) {
      double add = std::min(rem, iv[i].upper - iv[i].lower);
      p[i] += add;
      rem -= add;
    }
  }
  if (rem > 1e-9) return std::numeric_limits<double>::quiet_NaN();

  double penalty = 0.0;
  for (std::size_t i = 0; i < pivot; ++i) penalty += (y[i] - y[pivot]) * p[i];
  return y[pivot] + penalty / alpha;
}

}  // namespace detail

// Exact optimum of CVaR over {a <= p <= b, sum p = 1} by enumerating the
// crossing branch; adjacent branches share their boundary, so boundary optima
// cannot be missed.
inline double cvar_bounds_general(const OutcomeIntervalSet& set, double alpha, OptSense sense) {
  check_alpha(alpha);
  set.validate();
  double best = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t pivot = 0; pivot < set.intervals.size(); ++pivot) {
    double v = detail::cvar_branch_value(set, alpha, sense, pivot);
    if (std::isnan(v)) continue;
    if (std::isnan(best) || (sense == OptSense::Min ? v < best : v > best)) best = v;
  }
  if (std::isnan(best)) throw std::invalid_argument("empty feasible simplex slice");
  return best;
}

inline CvarInterval cvar_interval_general(const OutcomeIntervalSet& set, double alpha) {
  return {cvar_bounds_general(set, alpha, OptSense::Min),
          cvar_bounds_general(set, alpha, OptSense::Max)};
}

// Binary-outcome closed form: with p_0 = 1 - p_1, CVaR is 0 when p_0 >= alpha
// and 1 - p_0/alpha otherwise, nondecreasing in p_1. General two-point
// supports rescale affinely from {0, 1}.
inline CvarInterval cvar_bounds_binary(const ProbabilityInterval& p1, double alpha, double y0 = 0.0,
                                       double y1 = 1.0) {
  check_alpha(alpha);
  p1.validate();
  if (y1 <= y0) throw std::invalid_argument("two-point support must be increasing");
  auto unit = [alpha](double prob1) {
    double p0 = 1.0 - prob1;
    return p0 >= alpha ? 0.0 : 1.0 - p0 / alpha;
  };
  return {y0 + (y1 - y0) * unit(p1.lower), y0 + (y1 - y0) * unit(p1.upper)};
}

// Independent referee for cvar_bounds_general: exhaustive grid over the
// box-constrained simplex slice at a fixed step.
inline double brute_force_cvar_bounds(const OutcomeIntervalSet& set, double alpha, OptSense sense,
                                      double step) {
  check_alpha(alpha);
  set.validate();
  if (step <= 0.0) throw std::invalid_argument("grid step must be positive");
  std::size_t n = set.intervals.size();
  std::vector<double> p(n, 0.0);
  double best = std::numeric_limits<double>::quiet_NaN();
  std::function<void(std::size_t, double)> walk = [&](std::size_t dim, double used) {
    if (dim == n - 1) {
      double last = 1.0 - used;
      if (last < set.intervals[dim].lower - 1e-9 || last > set.intervals[dim].upper + 1e-9) return;
      p[dim] = std::clamp(last, 0.0, 1.0);
      double v = cvar_discrete_raw(set.support.values, p, alpha);
      if (std::isnan(best) || (sense == OptSense::Min ? v < best : v > best)) best = v;
      return;
    }
    double lo = set.intervals[dim].lower, hi = set.intervals[dim].upper;
    long steps = static_cast<long>(std::floor((hi - lo) / step));
    for (long k = 0; k <= steps + 1; ++k) {
      double v = std::min(lo + static_cast<double>(k) * step, hi);
      p[dim] = v;
      walk(dim + 1, used + v);
      if (v >= hi) break;
    }
  };
  walk(0, 0.0);
  if (std::isnan(best)) throw std::invalid_argument("empty feasible simplex slice");
  return best;
}

}  // namespace cvarucb

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "cvarucb/model.hpp"
#include "cvarucb/rng.hpp"

namespace cvarucb {

enum class OptSense { Min, Max };

// Closed interval [lower, upper] on a probability.
struct ProbabilityInterval {
  double lower = 0.0;
  double upper = 1.0;

  void validate() const {
    if (!(0.0 <= lower && lower <= upper && upper <= 1.0))
      throw std::invalid_argument("probability interval violates 0 <= lower <= upper <= 1");
  }
};

// Assumption-free interval [P(x,y), 1 - P(x,y')] where y' collects all other levels.
inline ProbabilityInterval tian_pearl_bounds(const JointActionRewardTable& joint, std::size_t arm,
                                             std::size_t level) {
  double pxy = joint.prob(arm, level);
  double other = joint.arm_marginal(arm) - pxy;
  ProbabilityInterval iv{std::clamp(pxy, 0.0, 1.0), std::clamp(1.0 - other, 0.0, 1.0)};
  iv.validate();
  return iv;
}

namespace detail {

constexpr double kFeasTol = 1e-9;
constexpr std::size_t kMaxContexts = 16;

// Linear inner problem for a fixed b vector: optimize sum_c w_c a_c over the
// box lo <= a <= hi with sum_c a_c = target. Continuous transportation
// problem; solved greedily by saturating contexts in coefficient order,
// ties broken by lowest index. Returns NaN when infeasible.
inline double inner_allocate_core(std::size_t m, double target, const double* lo, const double* hi,
                                  const double* w, OptSense sense, double* a) {
  double rem = target;
  for (std::size_t i = 0; i < m; ++i) {
    if (hi[i] < lo[i] - kFeasTol) return std::numeric_limits<double>::quiet_NaN();
    a[i] = lo[i];
    rem -= lo[i];
  }
  if (rem < -kFeasTol) return std::numeric_limits<double>::quiet_NaN();
  if (rem < 0.0) rem = 0.0;

  // insertion sort on indices; m is tiny and this sits on the hot path
  std::size_t idx[kMaxContexts];
  for (std::size_t i = 0; i < m; ++i) idx[i] = i;
  for (std::size_t i = 1; i < m; ++i) {
    std::size_t cur = idx[i];
    std::size_t j = i;
    while (j > 0 && (sense == OptSense::Max ? w[cur] > w[idx[j - 1]] : w[cur] < w[idx[j - 1]])) {
      idx[j] = idx[j - 1];
      --j;
    }
    idx[j] = cur;
  }
  for (std::size_t k = 0; k < m && rem > 0.0; ++k) {
    std::size_t i = idx[k];
    double add = std::min(rem, std::max(0.0, hi[i] - lo[i]));
    a[i] += add;
    rem -= add;
  }
  if (rem > kFeasTol) return std::numeric_limits<double>::quiet_NaN();

  double obj = 0.0;
  for (std::size_t i = 0; i < m; ++i) obj += a[i] * w[i];
  return obj;
}

// Shared data for one (arm, level) instance of the ratio program.
struct RatioInstance {
  std::size_t m;
  double pxy;  // P(x, y)
  double px;   // P(x)
  double pc[kMaxContexts];
  double b_lo[kMaxContexts];
  double b_hi[kMaxContexts];

  // Evaluates the inner optimum at a full b vector; NaN when infeasible.
  double eval(const double* b, OptSense sense, double* a) const {
    double lo[kMaxContexts], hi[kMaxContexts], w[kMaxContexts];
    for (std::size_t i = 0; i < m; ++i) {
      if (b[i] < b_lo[i] - 1e-7 || b[i] > b_hi[i] + 1e-7)
        return std::numeric_limits<double>::quiet_NaN();
      lo[i] = std::max(0.0, pxy + pc[i] - 1.0);
      hi[i] = std::min(b[i], pxy);
      // b_c = 0 forces a_c = 0 and a zero term, taken as the 0/0 limit
      w[i] = b[i] > 1e-12 ? pc[i] / b[i] : 0.0;
    }
    return inner_allocate_core(m, pxy, lo, hi, w, sense, a);
  }
};

inline RatioInstance make_ratio_instance(const JointActionRewardTable& joint,
                                         const std::vector<double>& context_marginal,
                                         std::size_t arm, std::size_t level) {
  if (context_marginal.size() > kMaxContexts)
    throw std::invalid_argument("too many contexts for the ratio solver");
  RatioInstance inst;
  inst.m = context_marginal.size();
  inst.pxy = joint.prob(arm, level);
  inst.px = joint.arm_marginal(arm);
  if (inst.px <= 0.0) throw std::invalid_argument("arm never observed: P(x) = 0, unidentifiable");
  double lo_sum = 0.0, hi_sum = 0.0;
  for (std::size_t i = 0; i < inst.m; ++i) {
    inst.pc[i] = context_marginal[i];
    double a_lo = std::max(0.0, inst.pxy + inst.pc[i] - 1.0);
    inst.b_lo[i] = std::max({0.0, inst.px + inst.pc[i] - 1.0, a_lo});
    inst.b_hi[i] = std::min(inst.pc[i], inst.px);
    lo_sum += inst.b_lo[i];
    hi_sum += inst.b_hi[i];
  }
  if (lo_sum > inst.px + kFeasTol || hi_sum < inst.px - kFeasTol)
    throw std::invalid_argument("infeasible constraint set: inputs are inconsistent");
  return inst;
}

struct Incumbent {
  double value;
  double b[kMaxContexts];
  double a[kMaxContexts];
  bool found = false;

  void offer(double v, const double* bv, const double* av, std::size_t m, OptSense sense) {
    if (std::isnan(v)) return;
    bool better = !found || (sense == OptSense::Min ? v < value : v > value);
    if (better) {
      value = v;
      std::copy(bv, bv + m, b);
      std::copy(av, av + m, a);
      found = true;
    }
  }
};

// Exhaustive grid over the free coordinates b_0..b_{m-2}; the last coordinate
// is pinned by the sum constraint.
inline void grid_pass(const RatioInstance& inst, OptSense sense, const double* center,
                      double radius, double step, Incumbent& inc) {
  std::size_t m = inst.m;
  double b[kMaxContexts], a[kMaxContexts];
  std::function<void(std::size_t, double)> walk = [&](std::size_t dim, double used) {
    if (dim == m - 1) {
      double last = inst.px - used;
      if (last < inst.b_lo[m - 1] - 1e-7 || last > inst.b_hi[m - 1] + 1e-7) return;
      b[m - 1] = std::clamp(last, inst.b_lo[m - 1], inst.b_hi[m - 1]);
      double v = inst.eval(b, sense, a);
      inc.offer(v, b, a, m, sense);
      return;
    }
    double lo = inst.b_lo[dim], hi = inst.b_hi[dim];
    if (center != nullptr) {
      lo = std::max(lo, center[dim] - radius);
      hi = std::min(hi, center[dim] + radius);
    }
    if (hi < lo) return;
    long steps = static_cast<long>(std::floor((hi - lo) / step));
    for (long k = 0; k <= steps + 1; ++k) {
      double v = std::min(lo + static_cast<double>(k) * step, hi);
      b[dim] = v;
      walk(dim + 1, used + v);
      if (v >= hi) break;
    }
  };
  walk(0, 0.0);
}

// Sum-preserving pairwise coordinate descent from a feasible start.
inline void local_descent(const RatioInstance& inst, OptSense sense, const double* start,
                          double step0, double step_min, Incumbent& inc) {
  std::size_t m = inst.m;
  double b[kMaxContexts], a[kMaxContexts], trial[kMaxContexts];
  std::copy(start, start + m, b);
  double cur = inst.eval(b, sense, a);
  if (std::isnan(cur)) return;
  inc.offer(cur, b, a, m, sense);
  for (double step = step0; step >= step_min; step *= 0.5) {
    bool improved = true;
    int guard = 0;
    while (improved && guard++ < 200) {
      improved = false;
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) {
          if (i == j) continue;
          std::copy(b, b + m, trial);
          double delta = std::min({step, inst.b_hi[i] - b[i], b[j] - inst.b_lo[j]});
          if (delta <= 0.0) continue;
          trial[i] += delta;
          trial[j] -= delta;
          double v = inst.eval(trial, sense, a);
          if (std::isnan(v)) continue;
          bool better = sense == OptSense::Min ? v < cur - 1e-14 : v > cur + 1e-14;
          if (better) {
            std::copy(trial, trial + m, b);
            cur = v;
            inc.offer(v, b, a, m, sense);
            improved = true;
          }
        }
    }
  }
}

// Projects an arbitrary point in the b box onto the sum constraint by
// distributing the deficit over coordinates with slack.
inline bool project_to_sum(const RatioInstance& inst, double* b) {
  std::size_t m = inst.m;
  for (std::size_t i = 0; i < m; ++i) b[i] = std::clamp(b[i], inst.b_lo[i], inst.b_hi[i]);
  for (int pass = 0; pass < 64; ++pass) {
    double sum = std::accumulate(b, b + m, 0.0);
    double diff = inst.px - sum;
    if (std::abs(diff) < 1e-12) return true;
    double slack = 0.0;
    for (std::size_t i = 0; i < m; ++i)
      slack += diff > 0 ? inst.b_hi[i] - b[i] : b[i] - inst.b_lo[i];
    if (slack <= 0.0) return false;
    for (std::size_t i = 0; i < m; ++i) {
      double room = diff > 0 ? inst.b_hi[i] - b[i] : b[i] - inst.b_lo[i];
      b[i] += diff * room / slack;
      b[i] = std::clamp(b[i], inst.b_lo[i], inst.b_hi[i]);
    }
  }
  double sum = std::accumulate(b, b + m, 0.0);
  return std::abs(sum - inst.px) < 1e-9;
}

}  // namespace detail

struct DoBoundsSolution {
  double value = 0.0;
  std::vector<double> a;
  std::vector<double> b;
};

struct DoBoundsOptions {
  double grid_step = 1e-3;    // coarse pass for |C| <= 3
  double refine_step = 1e-4;  // refinement around the incumbent
  int descent_starts = 64;    // multi-start budget for |C| = 4 and above
  std::uint64_t descent_seed = 20240817;
};

// Global optimum of the per-arm ratio program: optimize sum_c a_c P(c) / b_c
// over the coupled (a, b) polytope. Exact greedy inner step in a; grid plus
// multi-start descent over the b polytope.
inline DoBoundsSolution do_probability_bounds(const JointActionRewardTable& joint,
                                              const std::vector<double>& context_marginal,
                                              std::size_t arm, std::size_t level, OptSense sense,
                                              const DoBoundsOptions& opt = {}) {
  using namespace detail;
  RatioInstance inst = make_ratio_instance(joint, context_marginal, arm, level);
  std::size_t m = inst.m;

  Incumbent inc;
  if (m == 1) {
    double b = inst.px, a = inst.pxy;
    double v = inst.pc[0] * a / b;
    return {std::clamp(v, 0.0, 1.0), {a}, {b}};
  }

  double max_width = 0.0;
  for (std::size_t i = 0; i < m; ++i) max_width = std::max(max_width, inst.b_hi[i] - inst.b_lo[i]);
  max_width = std::max(max_width, 1e-6);

  double coarse;
  if (m == 2) coarse = std::min(opt.grid_step, std::max(max_width / 1000.0, opt.refine_step));
  else if (m == 3) coarse = std::max(opt.grid_step, max_width / 400.0);
  else coarse = std::max(max_width / 24.0, 5e-3);
  grid_pass(inst, sense, nullptr, 0.0, coarse, inc);

  if (m >= 4) {
    Rng rng(opt.descent_seed);
    double start[kMaxContexts];
    for (int s = 0; s < opt.descent_starts; ++s) {
      for (std::size_t i = 0; i < m; ++i)
        start[i] = inst.b_lo[i] + rng.uniform() * (inst.b_hi[i] - inst.b_lo[i]);
      if (!project_to_sum(inst, start)) continue;
      local_descent(inst, sense, start, max_width / 8.0, 1e-5, inc);
    }
  }

  if (!inc.found) throw std::invalid_argument("infeasible constraint set: inputs are inconsistent");

  // refinement: fine grid window around the incumbent, then descent polish;
  // for four and more contexts a straight refine-step window is too large,
  // so the window stays coarse and the descent does the fine work
  Incumbent refined = inc;
  double window_step = m <= 3 ? opt.refine_step : coarse / 10.0;
  grid_pass(inst, sense, inc.b, 2.0 * coarse, window_step, refined);
  local_descent(inst, sense, refined.b, std::max(window_step, opt.refine_step), 1e-7, refined);

  DoBoundsSolution out;
  out.value = std::clamp(refined.value, 0.0, 1.0);
  out.a.assign(refined.a, refined.a + m);
  out.b.assign(refined.b, refined.b + m);
  return out;
}

inline ProbabilityInterval do_probability_interval(const JointActionRewardTable& joint,
                                                   const std::vector<double>& context_marginal,
                                                   std::size_t arm, std::size_t level,
                                                   const DoBoundsOptions& opt = {}) {
  double lo = do_probability_bounds(joint, context_marginal, arm, level, OptSense::Min, opt).value;
  double hi = do_probability_bounds(joint, context_marginal, arm, level, OptSense::Max, opt).value;
  ProbabilityInterval iv{lo, std::max(lo, hi)};
  iv.validate();
  return iv;
}

struct InnerAllocation {
  std::vector<double> a;
  double objective = 0.0;
};

// Public wrapper over the greedy inner step, for a caller-supplied b vector.
inline InnerAllocation inner_allocation(const std::vector<double>& b,
                                        const JointActionRewardTable& joint,
                                        const std::vector<double>& context_marginal, std::size_t arm,
                                        std::size_t level, OptSense sense) {
  using namespace detail;
  RatioInstance inst = make_ratio_instance(joint, context_marginal, arm, level);
  if (b.size() != inst.m) throw std::invalid_argument("b vector length mismatch");
  double a[kMaxContexts];
  double v = inst.eval(b.data(), sense, a);
  if (std::isnan(v)) throw std::invalid_argument("infeasible a-box for the given b vector");
  return {std::vector<double>(a, a + inst.m), v};
}

// Plain exhaustive grid at a fixed resolution; the independent referee for
// do_probability_bounds. Exponential in |C|, so capped at 4 contexts.
inline double brute_force_do_bounds(const JointActionRewardTable& joint,
                                    const std::vector<double>& context_marginal, std::size_t arm,
                                    std::size_t level, OptSense sense, double resolution) {
  using namespace detail;
  if (resolution <= 0.0) throw std::invalid_argument("grid resolution must be positive");
  if (context_marginal.size() > 4)
    throw std::invalid_argument("brute-force oracle supports at most 4 contexts");
  RatioInstance inst = make_ratio_instance(joint, context_marginal, arm, level);
  if (inst.m == 1) return std::clamp(inst.pc[0] * inst.pxy / inst.px, 0.0, 1.0);
  Incumbent inc;
  grid_pass(inst, sense, nullptr, 0.0, resolution, inc);
  if (!inc.found) throw std::invalid_argument("infeasible constraint set: inputs are inconsistent");
  return std::clamp(inc.value, 0.0, 1.0);
}

}  // namespace cvarucb

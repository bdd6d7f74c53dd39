#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "cvarucb/cvar.hpp"
#include "cvarucb/empirical_cdf.hpp"
#include "test_support.hpp"

using namespace cvarucb;
using Catch::Approx;

namespace {

// Direct maximization of the sup-form definition over a nu grid; the
// independent referee for cvar_discrete.
double cvar_sup_oracle(const DiscreteDistribution& dist, double alpha, double step = 1e-5) {
  double lo = dist.support.values.front(), hi = dist.support.values.back();
  double best = -1e300;
  for (double nu = lo; nu <= hi + step; nu += step) {
    double expect = 0.0;
    for (std::size_t i = 0; i < dist.probs.size(); ++i)
      expect += dist.probs[i] * std::max(nu - dist.support.values[i], 0.0);
    best = std::max(best, nu - expect / alpha);
  }
  return best;
}

}  // namespace

TEST_CASE("discrete cvar matches the reported binary truth") {
  RewardSupport s({0.0, 1.0}, 1.0);
  DiscreteDistribution d(s, {0.504, 0.496});
  CHECK(cvar_discrete(d, 0.75) == Approx(0.328).margin(1e-9));
}

TEST_CASE("cvar at alpha one is the mean") {
  Rng rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    ConfoundedModel model = cvarucb::testing::random_model(rng, 1, 1, 4);
    auto d = model.reward_dist(0, 0);
    CHECK(cvar_discrete(d, 1.0) == Approx(d.mean()).margin(1e-12));
  }
}

TEST_CASE("three-level branch formula by hand") {
  RewardSupport s({0.0, 0.5, 1.0}, 1.0);
  DiscreteDistribution d(s, {0.2, 0.3, 0.5});
  CHECK(cvar_discrete(d, 0.4) == Approx(0.25).margin(1e-12));
  CHECK(cvar_discrete(d, 0.4) == Approx(cvar_sup_oracle(d, 0.4)).margin(1e-4));
}

TEST_CASE("alpha outside (0,1] is rejected") {
  RewardSupport s({0.0, 1.0}, 1.0);
  DiscreteDistribution d(s, {0.5, 0.5});
  CHECK_THROWS(cvar_discrete(d, 0.0));
  CHECK_THROWS(cvar_discrete(d, 1.5));
  CHECK_THROWS(cvar_discrete(d, -0.2));
}

TEST_CASE("branch formula agrees with the sup-form oracle on random distributions") {
  Rng rng(21);
  for (int trial = 0; trial < 1000; ++trial) {
    std::size_t levels = 2 + static_cast<std::size_t>(rng.uniform() * 5.0);
    ConfoundedModel model = cvarucb::testing::random_model(rng, 1, 1, levels);
    auto d = model.reward_dist(0, 0);
    double alpha = 0.05 + rng.uniform() * 0.95;
    if (alpha > 1.0) alpha = 1.0;
    CHECK(cvar_discrete(d, alpha) == Approx(cvar_sup_oracle(d, alpha)).margin(1e-4));
  }
}

TEST_CASE("cvar is nondecreasing in alpha") {
  Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    ConfoundedModel model = cvarucb::testing::random_model(rng, 1, 1, 5);
    auto d = model.reward_dist(0, 0);
    double prev = -1e300;
    for (int k = 1; k <= 100; ++k) {
      double v = cvar_discrete(d, k / 100.0);
      CHECK(v >= prev - 1e-12);
      prev = v;
    }
    CHECK(cvar_discrete(d, 1.0) == Approx(d.mean()).margin(1e-12));
  }
}

TEST_CASE("cvar of a step cdf") {
  RewardSupport s({0.0, 1.0}, 1.0);
  EmpiricalCDF cdf(s);
  cdf.add(0.0);
  cdf.add(1.0);
  cdf.add(1.0);
  cdf.add(1.0);
  CHECK(cvar_of_cdf(cdf.to_step_cdf(), 0.5) == Approx(0.5).margin(1e-12));
}

TEST_CASE("cvar of a point mass is the point") {
  RewardSupport s({0.7}, 1.0);
  EmpiricalCDF cdf(s);
  cdf.add(0.7);
  for (double alpha : {0.1, 0.5, 1.0})
    CHECK(cvar_of_cdf(cdf.to_step_cdf(), alpha) == Approx(0.7).margin(1e-12));
}

TEST_CASE("shifting a cdf down is optimistic") {
  Rng rng(41);
  for (int trial = 0; trial < 30; ++trial) {
    ConfoundedModel model = cvarucb::testing::random_model(rng, 1, 1, 4);
    auto d = model.reward_dist(0, 0);
    StepCdf cdf;
    cdf.upper_bound = d.support.upper_bound;
    double acc = 0.0;
    for (std::size_t i = 0; i < d.probs.size(); ++i) {
      acc += d.probs[i];
      cdf.points.push_back(d.support.values[i]);
      cdf.values.push_back(std::min(acc, 1.0));
    }
    cdf.values.back() = 1.0;
    StepCdf shifted = cdf;
    for (std::size_t i = 0; i + 1 < shifted.values.size(); ++i)
      shifted.values[i] = std::max(shifted.values[i] - 0.1, 0.0);
    double alpha = 0.1 + rng.uniform() * 0.9;
    if (alpha > 1.0) alpha = 1.0;
    CHECK(cvar_of_cdf(shifted, alpha) >= cvar_of_cdf(cdf, alpha) - 1e-12);
  }
}

TEST_CASE("cvar of cdf agrees with cvar of the underlying distribution") {
  Rng rng(43);
  for (int trial = 0; trial < 100; ++trial) {
    ConfoundedModel model = cvarucb::testing::random_model(rng, 1, 1, 5);
    auto d = model.reward_dist(0, 0);
    StepCdf cdf;
    cdf.upper_bound = d.support.upper_bound;
    double acc = 0.0;
    for (std::size_t i = 0; i < d.probs.size(); ++i) {
      acc += d.probs[i];
      cdf.points.push_back(d.support.values[i]);
      cdf.values.push_back(std::min(acc, 1.0));
    }
    cdf.values.back() = 1.0;
    double alpha = 0.05 + rng.uniform() * 0.95;
    if (alpha > 1.0) alpha = 1.0;
    CHECK(cvar_of_cdf(cdf, alpha) == Approx(cvar_discrete(d, alpha)).margin(1e-9));
  }
}

TEST_CASE("invalid cdf is rejected") {
  StepCdf cdf;
  cdf.upper_bound = 1.0;
  cdf.points = {0.0, 1.0};
  cdf.values = {0.2, 0.8};  // never reaches 1
  CHECK_THROWS(cvar_of_cdf(cdf, 0.5));
}

TEST_CASE("binary interval propagation reproduces the reported intervals") {
  auto iv = cvar_bounds_binary({0.4675, 0.5875}, 0.75);
  CHECK(iv.lower == Approx(0.29).margin(1e-9));
  CHECK(iv.upper == Approx(0.45).margin(1e-9));

  auto zero = cvar_bounds_binary({0.0, 0.2}, 0.75);
  CHECK(zero.lower == 0.0);
  CHECK(zero.upper == 0.0);

  auto point = cvar_bounds_binary({0.55, 0.55}, 0.75);
  CHECK(point.lower == Approx(0.4).margin(1e-12));
  CHECK(point.upper == Approx(0.4).margin(1e-12));
}

TEST_CASE("general propagation matches the reported binary interval") {
  RewardSupport s({0.0, 1.0}, 1.0);
  OutcomeIntervalSet set{s, {{1.0 - 0.5875, 1.0 - 0.4675}, {0.4675, 0.5875}}};
  CHECK(cvar_bounds_general(set, 0.75, OptSense::Min) == Approx(0.29).margin(1e-9));
  CHECK(cvar_bounds_general(set, 0.75, OptSense::Max) == Approx(0.45).margin(1e-9));
}

TEST_CASE("degenerate intervals return the point cvar") {
  Rng rng(55);
  for (int trial = 0; trial < 30; ++trial) {
    ConfoundedModel model = cvarucb::testing::random_model(rng, 1, 1, 4);
    auto d = model.reward_dist(0, 0);
    OutcomeIntervalSet set{d.support, {}};
    for (double p : d.probs) set.intervals.push_back({std::max(0.0, p), std::min(1.0, p)});
    double alpha = 0.1 + rng.uniform() * 0.9;
    if (alpha > 1.0) alpha = 1.0;
    double truth = cvar_discrete(d, alpha);
    CHECK(cvar_bounds_general(set, alpha, OptSense::Min) == Approx(truth).margin(1e-9));
    CHECK(cvar_bounds_general(set, alpha, OptSense::Max) == Approx(truth).margin(1e-9));
  }
}

TEST_CASE("three-level propagation matches the simplex grid oracle") {
  RewardSupport s({0.0, 0.5, 1.0}, 1.0);
  OutcomeIntervalSet set{s, {{0.1, 0.3}, {0.2, 0.4}, {0.4, 0.6}}};
  for (OptSense sense : {OptSense::Min, OptSense::Max}) {
    double exact = cvar_bounds_general(set, 0.4, sense);
    double grid = brute_force_cvar_bounds(set, 0.4, sense, 1e-3);
    CHECK(std::abs(exact - grid) < 2e-3);
  }
}

TEST_CASE("propagation soundness: true cvar inside the interval") {
  Rng rng(61);
  for (int trial = 0; trial < 1000; ++trial) {
    std::size_t levels = 2 + static_cast<std::size_t>(rng.uniform() * 4.0);
    ConfoundedModel model = cvarucb::testing::random_model(rng, 1, 1, levels);
    auto d = model.reward_dist(0, 0);
    OutcomeIntervalSet set{d.support, {}};
    for (double p : d.probs)
      set.intervals.push_back({std::max(0.0, p - rng.uniform() * 0.3),
                               std::min(1.0, p + rng.uniform() * 0.3)});
    double alpha = 0.05 + rng.uniform() * 0.95;
    if (alpha > 1.0) alpha = 1.0;
    double truth = cvar_discrete(d, alpha);
    CHECK(cvar_bounds_general(set, alpha, OptSense::Min) <= truth + 1e-9);
    CHECK(cvar_bounds_general(set, alpha, OptSense::Max) >= truth - 1e-9);
  }
}

TEST_CASE("binary closed form equals general enumeration") {
  Rng rng(71);
  RewardSupport s({0.0, 1.0}, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    double lo = rng.uniform(), hi = lo + (1.0 - lo) * rng.uniform();
    double alpha = 0.05 + rng.uniform() * 0.95;
    if (alpha > 1.0) alpha = 1.0;
    auto closed = cvar_bounds_binary({lo, hi}, alpha);
    OutcomeIntervalSet set{s, {{1.0 - hi, 1.0 - lo}, {lo, hi}}};
    CHECK(closed.lower == Approx(cvar_bounds_general(set, alpha, OptSense::Min)).margin(1e-9));
    CHECK(closed.upper == Approx(cvar_bounds_general(set, alpha, OptSense::Max)).margin(1e-9));
  }
}

TEST_CASE("widening an interval never shrinks the cvar interval") {
  Rng rng(81);
  for (int trial = 0; trial < 200; ++trial) {
    std::size_t levels = 2 + static_cast<std::size_t>(rng.uniform() * 3.0);
    ConfoundedModel model = cvarucb::testing::random_model(rng, 1, 1, levels);
    auto d = model.reward_dist(0, 0);
    OutcomeIntervalSet set{d.support, {}};
    for (double p : d.probs)
      set.intervals.push_back({std::max(0.0, p - rng.uniform() * 0.2),
                               std::min(1.0, p + rng.uniform() * 0.2)});
    double alpha = 0.1 + rng.uniform() * 0.9;
    if (alpha > 1.0) alpha = 1.0;
    double lo1 = cvar_bounds_general(set, alpha, OptSense::Min);
    double hi1 = cvar_bounds_general(set, alpha, OptSense::Max);
    std::size_t which = static_cast<std::size_t>(rng.uniform() * static_cast<double>(levels));
    set.intervals[which].lower = std::max(0.0, set.intervals[which].lower - rng.uniform() * 0.2);
    set.intervals[which].upper = std::min(1.0, set.intervals[which].upper + rng.uniform() * 0.2);
    double lo2 = cvar_bounds_general(set, alpha, OptSense::Min);
    double hi2 = cvar_bounds_general(set, alpha, OptSense::Max);
    CHECK(lo2 <= lo1 + 1e-9);
    CHECK(hi2 >= hi1 - 1e-9);
  }
}

TEST_CASE("empty feasible slice is rejected") {
  RewardSupport s({0.0, 1.0}, 1.0);
  OutcomeIntervalSet set{s, {{0.0, 0.3}, {0.0, 0.3}}};  // upper sums below 1
  CHECK_THROWS(cvar_bounds_general(set, 0.5, OptSense::Min));
}

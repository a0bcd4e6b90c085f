// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "hotstreak/segmentation.hpp"

namespace hotstreak {
namespace {

std::vector<double> random_series(std::mt19937_64& rng, std::size_t n, int hi) {
  std::uniform_int_distribution<int> v(0, hi);
  std::vector<double> s(n);
  for (auto& x : s) x = v(rng);
  return s;
}

void expect_consistent(const std::vector<double>& series, const Segmentation& seg, double alpha) {
  ASSERT_EQ(seg.levels.size(), seg.breakpoints.size());
  ASSERT_FALSE(seg.breakpoints.empty());
  EXPECT_EQ(seg.breakpoints.front(), 1u);
  for (std::size_t s = 1; s < seg.breakpoints.size(); ++s)
    EXPECT_LT(seg.breakpoints[s - 1], seg.breakpoints[s]);
  for (std::size_t s = 0; s < seg.num_segments(); ++s) {
    double sum = 0.0;
    for (std::size_t t = seg.breakpoints[s]; t <= seg.segment_end(s); ++t) sum += series[t - 1];
    const double mean = sum / static_cast<double>(seg.segment_end(s) - seg.breakpoints[s] + 1);
    EXPECT_NEAR(seg.levels[s], mean, 1e-9 * std::max(1.0, std::abs(mean)));
  }
  const double re = recompute_objective(series, seg, alpha);
  EXPECT_NEAR(seg.objective, re, 1e-9 * std::max(1.0, std::abs(re)));
}

TEST(SegmentSse, SinglePointIsZero) {
  const std::vector<double> s = {4, 9, 2};
  const PrefixSums p(s);
  for (std::size_t i = 1; i <= 3; ++i) EXPECT_DOUBLE_EQ(segment_sse(p, i, i), 0.0);
}

TEST(SegmentSse, TwoPoints) {
  const std::vector<double> s = {1, 3};
  EXPECT_DOUBLE_EQ(segment_sse(PrefixSums(s), 1, 2), 2.0);
}

TEST(SegmentSse, IndexOrderViolated) {
  const std::vector<double> s = {1, 3, 5};
  const PrefixSums p(s);
  EXPECT_THROW(segment_sse(p, 3, 2), ArgumentError);
  EXPECT_THROW(segment_sse(p, 0, 2), ArgumentError);
  EXPECT_THROW(segment_sse(p, 1, 4), ArgumentError);
}

TEST(SegmentSse, MatchesTwoPassOracle) {
  std::mt19937_64 rng(5);
  const auto s = random_series(rng, 200, 1000);
  const PrefixSums p(s);
  std::uniform_int_distribution<std::size_t> pos(1, s.size());
  for (int trial = 0; trial < 500; ++trial) {
    std::size_t i = pos(rng), j = pos(rng);
    if (i > j) std::swap(i, j);
    double mean = 0.0;
    for (std::size_t t = i; t <= j; ++t) mean += s[t - 1];
    mean /= static_cast<double>(j - i + 1);
    double ss = 0.0;
    for (std::size_t t = i; t <= j; ++t) ss += (s[t - 1] - mean) * (s[t - 1] - mean);
    EXPECT_NEAR(segment_sse(p, i, j), ss, 1e-9 * std::max(1.0, ss));
  }
}

TEST(FitPiecewiseConstant, ConstantSeries) {
  const std::vector<double> s = {5, 5, 5, 5};
  const auto seg = fit_piecewise_constant(s, 1.0);
  EXPECT_EQ(seg.num_segments(), 1u);
  EXPECT_DOUBLE_EQ(seg.levels[0], 5.0);
  EXPECT_DOUBLE_EQ(seg.objective, 0.0);
}

TEST(FitPiecewiseConstant, StepSeries) {
  const std::vector<double> s = {0, 0, 0, 10, 10, 10};
  const auto seg = fit_piecewise_constant(s, 1.0);
  EXPECT_EQ(seg.breakpoints, (std::vector<std::size_t>{1, 4}));
  EXPECT_DOUBLE_EQ(seg.levels[0], 0.0);
  EXPECT_DOUBLE_EQ(seg.levels[1], 10.0);
  EXPECT_NEAR(seg.objective, 1.0, 1e-12);
  const auto bf = brute_force_fit(s, 1.0);
  EXPECT_EQ(bf.breakpoints, seg.breakpoints);
  EXPECT_NEAR(bf.objective, 1.0, 1e-12);
}

TEST(FitPiecewiseConstant, PenaltyDominates) {
  const std::vector<double> s = {1, 2, 1, 2};
  const auto seg = fit_piecewise_constant(s, 100.0);
  EXPECT_EQ(seg.num_segments(), 1u);
  EXPECT_DOUBLE_EQ(seg.levels[0], 1.5);
  EXPECT_NEAR(seg.objective, 1.0, 1e-12);
}

TEST(FitPiecewiseConstant, RejectsBadArguments) {
  const std::vector<double> empty;
  const std::vector<double> s = {1, 2};
  EXPECT_THROW(fit_piecewise_constant(empty, 1.0), ArgumentError);
  EXPECT_THROW(fit_piecewise_constant(s, 0.0), ArgumentError);
  EXPECT_THROW(fit_piecewise_constant(s, -1.0), ArgumentError);
}

TEST(BruteForce, LengthOne) {
  const std::vector<double> s = {3.5};
  const auto seg = brute_force_fit(s, 1.0);
  EXPECT_EQ(seg.num_segments(), 1u);
  EXPECT_DOUBLE_EQ(seg.objective, 0.0);
}

TEST(BruteForce, HandEnumeratedStep) {
  const std::vector<double> s = {0, 0, 10, 10};
  const auto seg = brute_force_fit(s, 1.0);
  EXPECT_EQ(seg.breakpoints, (std::vector<std::size_t>{1, 3}));
  EXPECT_NEAR(seg.objective, 1.0, 1e-12);
}

TEST(BruteForce, TooLong) {
  const std::vector<double> s(21, 1.0);
  EXPECT_THROW(brute_force_fit(s, 1.0), ArgumentError);
}

TEST(FitPiecewiseConstant, OracleEquivalenceRandom) {
  std::mt19937_64 rng(20240601);
  std::uniform_int_distribution<std::size_t> len(1, 12);
  const double alphas[] = {0.5, 1.0, 5.0};
  for (int trial = 0; trial < 500; ++trial) {
    const auto s = random_series(rng, len(rng), 20);
    const double alpha = alphas[trial % 3];
    const auto dp = fit_piecewise_constant(s, alpha);
    const auto bf = brute_force_fit(s, alpha);
    EXPECT_NEAR(dp.objective, bf.objective, 1e-9 * std::max(1.0, bf.objective));
    EXPECT_EQ(dp.breakpoints, bf.breakpoints);
    expect_consistent(s, dp, alpha);
  }
}

TEST(FitPiecewiseConstant, OracleEquivalenceWithTies) {
  // Small alphabets force many exactly tied objectives.
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<std::size_t> len(2, 10);
  for (int trial = 0; trial < 300; ++trial) {
    const auto s = random_series(rng, len(rng), 1);
    for (double alpha : {0.25, 0.5, 1.0}) {
      const auto dp = fit_piecewise_constant(s, alpha);
      const auto bf = brute_force_fit(s, alpha);
      EXPECT_EQ(dp.breakpoints, bf.breakpoints);
    }
  }
}

TEST(FitPiecewiseConstant, MonotoneInAlpha) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const auto s = random_series(rng, 80, 30);
    const auto lo = fit_piecewise_constant(s, 0.5);
    const auto hi = fit_piecewise_constant(s, 20.0);
    EXPECT_GE(lo.num_segments(), hi.num_segments());
    EXPECT_LE(lo.objective, hi.objective + 1e-9);
  }
}

TEST(FitPiecewiseConstant, SmallAlphaSeparatesDistinctValues) {
  std::vector<double> s(30);
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = static_cast<double>((i * 7) % 30);
  const double alpha = 1e-6;
  const auto seg = fit_piecewise_constant(s, alpha);
  EXPECT_EQ(seg.num_segments(), s.size());
  EXPECT_NEAR(seg.objective, alpha * static_cast<double>(s.size() - 1), 1e-9);
}

TEST(FitPiecewiseConstant, ScaleCovariance) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    const auto s = random_series(rng, 60, 20);
    std::vector<double> scaled(s);
    const double c = 3.0;
    for (auto& v : scaled) v *= c;
    const auto a = fit_piecewise_constant(s, 1.0);
    const auto b = fit_piecewise_constant(scaled, 1.0 * c * c);
    EXPECT_EQ(a.breakpoints, b.breakpoints);
  }
}

TEST(FitPiecewiseConstant, ReconstructionOnLargeCounts) {
  std::mt19937_64 rng(31);
  std::lognormal_distribution<double> d(8.0, 2.0);
  std::vector<double> s(400);
  for (auto& v : s) v = std::round(d(rng));
  const auto seg = fit_piecewise_constant(s, 1.0);
  expect_consistent(s, seg, 1.0);
}

}  // namespace
}  // namespace hotstreak

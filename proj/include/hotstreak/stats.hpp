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

#ifndef HOTSTREAK_STATS_HPP
#define HOTSTREAK_STATS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hotstreak/common.hpp"

namespace hotstreak::stats {

struct TestResult {
  double statistic = 0.0;
  double df = 0.0;
  double p_two_sided = 1.0;
  std::optional<double> corrected_p;
};

inline double mean(std::span<const double> x) {
  if (x.empty()) throw InsufficientData("mean of an empty sample");
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

// Sample variance, n - 1 denominator. Two-pass.
inline double variance(std::span<const double> x) {
  if (x.size() < 2) throw InsufficientData("variance needs at least 2 values");
  const double m = mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return ss / static_cast<double>(x.size() - 1);
}

inline double stddev(std::span<const double> x) { return std::sqrt(variance(x)); }

inline double median(std::vector<double> x) {
  if (x.empty()) throw InsufficientData("median of an empty sample");
  const std::size_t h = x.size() / 2;
  std::nth_element(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(h), x.end());
  const double upper = x[h];
  if (x.size() % 2 == 1) return upper;
  const double lower = *std::max_element(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(h));
  return 0.5 * (lower + upper);
}

inline double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ArgumentError("pearson: length mismatch");
  if (x.size() < 3) throw InsufficientData("pearson needs at least 3 pairs");
  const double mx = mean(x), my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw InsufficientData("pearson undefined for constant input");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

namespace detail {

// Continued fraction for the incomplete beta function (modified Lentz).
inline double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 10000;
  constexpr double kEps = 1e-15;
  constexpr double kTiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) return h;
  }
  return h;
}

}  // namespace detail

// Regularized incomplete beta I_x(a, b).
inline double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0 && b > 0.0)) throw ArgumentError("incomplete_beta requires a, b > 0");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                           b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * detail::beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * detail::beta_continued_fraction(b, a, 1.0 - x) / b;
}

// P(|T| >= |t|) for Student's t with df degrees of freedom.
inline double student_t_two_sided_p(double t, double df) {
  if (!(df > 0.0)) throw ArgumentError("degrees of freedom must be positive");
  if (std::isinf(t)) return 0.0;
  const double x = df / (df + t * t);
  return std::clamp(incomplete_beta(0.5 * df, 0.5, x), 0.0, 1.0);
}

inline double student_t_cdf(double t, double df) {
  const double tail = 0.5 * student_t_two_sided_p(t, df);
  return t >= 0.0 ? 1.0 - tail : tail;
}

// Welch's unequal-variance t-test, Welch-Satterthwaite df.
inline TestResult welch_t(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw InsufficientData("welch_t needs at least 2 values per sample");
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double va = variance(a) / na, vb = variance(b) / nb;
  const double se2 = va + vb;
  if (!(se2 > 0.0)) throw InsufficientData("welch_t undefined: both samples have zero variance");
  TestResult r;
  r.statistic = (mean(a) - mean(b)) / std::sqrt(se2);
  r.df = se2 * se2 / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
  r.p_two_sided = student_t_two_sided_p(r.statistic, r.df);
  return r;
}

inline double bonferroni(double p, std::size_t m) {
  if (!(p >= 0.0 && p <= 1.0)) throw ArgumentError("p-value outside [0, 1]");
  if (m == 0) throw ArgumentError("number of tests must be positive");
  return std::min(1.0, static_cast<double>(m) * p);
}

// Shannon entropy in bits of a count vector.
inline double shannon_entropy(std::span<const std::int64_t> counts) {
  double total = 0.0;
  for (auto c : counts) {
    if (c < 0) throw ArgumentError("negative count");
    total += static_cast<double>(c);
  }
  if (total <= 0.0) throw InsufficientData("entropy of all-zero counts");
  double h = 0.0;
  for (auto c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / total;
    h -= p * std::log2(p);
  }
  return h;
}

template <typename Key>
double shannon_entropy(const std::map<Key, std::int64_t>& counts) {
  std::vector<std::int64_t> v;
  v.reserve(counts.size());
  for (const auto& [k, c] : counts) v.push_back(c);
  return shannon_entropy(std::span<const std::int64_t>(v));
}

// Entropy in bits of a (not necessarily normalized) nonnegative weight vector.
inline double entropy_of_distribution(std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw ArgumentError("negative probability");
    total += w;
  }
  if (total <= 0.0) throw InsufficientData("entropy of an all-zero distribution");
  double h = 0.0;
  for (double w : weights) {
    if (w <= 0.0) continue;
    const double p = w / total;
    h -= p * std::log2(p);
  }
  return h;
}

struct Line {
  double slope = 0.0;
  double intercept = 0.0;
};

inline Line ols_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ArgumentError("ols_line: length mismatch");
  if (x.size() < 2) throw InsufficientData("ols_line needs at least 2 points");
  const double mx = mean(x), my = mean(y);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0.0) throw ArgumentError("ols_line: x is constant");
  Line l;
  l.slope = sxy / sxx;
  l.intercept = my - l.slope * mx;
  return l;
}

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

// Percentile bootstrap confidence interval of the median.
inline Interval bootstrap_median_ci(std::span<const double> sample, double level = 0.95,
                                    std::size_t reps = 1000, std::uint64_t seed = 0) {
  if (sample.size() < 5) throw InsufficientData("bootstrap needs at least 5 values");
  if (!(level > 0.0 && level < 1.0)) throw ArgumentError("confidence level outside (0, 1)");
  if (reps < 2) throw ArgumentError("bootstrap needs at least 2 replicates");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, sample.size() - 1);
  std::vector<double> medians(reps), resample(sample.size());
  for (auto& m : medians) {
    for (auto& v : resample) v = sample[pick(rng)];
    m = median(resample);
  }
  std::sort(medians.begin(), medians.end());
  const double tail = 0.5 * (1.0 - level);
  auto at = [&](double q) {
    const double pos = q * static_cast<double>(reps - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, reps - 1);
    const double frac = pos - static_cast<double>(lo);
    return medians[lo] + frac * (medians[hi] - medians[lo]);
  };
  return {at(tail), at(1.0 - tail)};
}

}  // namespace hotstreak::stats

#endif  // HOTSTREAK_STATS_HPP

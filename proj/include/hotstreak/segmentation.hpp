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

#ifndef HOTSTREAK_SEGMENTATION_HPP
#define HOTSTREAK_SEGMENTATION_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "hotstreak/common.hpp"

namespace hotstreak {

// Piecewise-constant fit of a series. Segment s covers
// [breakpoints[s], segment_end(s)] (1-based, inclusive) with constant levels[s].
struct Segmentation {
  std::size_t series_len = 0;
  std::vector<std::size_t> breakpoints;
  std::vector<double> levels;
  double objective = 0.0;

  std::size_t num_segments() const { return breakpoints.size(); }

  std::size_t segment_end(std::size_t s) const {
    return s + 1 < breakpoints.size() ? breakpoints[s + 1] - 1 : series_len;
  }

  // Fitted constant c_i at 1-based position i.
  double level_at(std::size_t i) const {
    auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), i);
    return levels[static_cast<std::size_t>(it - breakpoints.begin()) - 1];
  }
};

// Prefix sums of r and r^2 for O(1) segment SSE queries. Values are centered
// on their mean first; SSE is shift invariant and centering keeps the
// S2 - S1^2/n cancellation small for large counts.
class PrefixSums {
 public:
  explicit PrefixSums(std::span<const double> series)
      : s1_(series.size() + 1, 0.0), s2_(series.size() + 1, 0.0) {
    double mean = 0.0;
    for (double v : series) mean += v;
    if (!series.empty()) mean /= static_cast<double>(series.size());
    shift_ = mean;
    for (std::size_t t = 0; t < series.size(); ++t) {
      const double c = series[t] - shift_;
      s1_[t + 1] = s1_[t] + c;
      s2_[t + 1] = s2_[t] + c * c;
    }
  }

  std::size_t size() const { return s1_.size() - 1; }

  // Sum of squared deviations from the mean over [i, j], 1-based inclusive.
  double sse(std::size_t i, std::size_t j) const {
    if (i < 1 || i > j || j > size())
      throw ArgumentError("segment_sse requires 1 <= i <= j <= N (got i=" + std::to_string(i) +
                          ", j=" + std::to_string(j) + ")");
    return sse_unchecked(i, j);
  }

  double sse_unchecked(std::size_t i, std::size_t j) const {
    const double d1 = s1_[j] - s1_[i - 1];
    const double d2 = s2_[j] - s2_[i - 1];
    const double r = d2 - d1 * d1 / static_cast<double>(j - i + 1);
    return r > 0.0 ? r : 0.0;
  }

  const std::vector<double>& s1() const { return s1_; }
  const std::vector<double>& s2() const { return s2_; }

 private:
  double shift_ = 0.0;
  std::vector<double> s1_;
  std::vector<double> s2_;
};

inline double segment_sse(const PrefixSums& prefixes, std::size_t i, std::size_t j) {
  return prefixes.sse(i, j);
}

namespace detail {

// Two objectives closer than this are treated as equal and resolved by the
// tie-break (fewest segments, then earliest breakpoints).
inline double tie_tolerance(double value) { return 1e-10 * std::max(1.0, std::abs(value)); }

inline void check_fit_args(std::span<const double> series, double alpha) {
  if (series.empty()) throw ArgumentError("cannot segment an empty series");
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ArgumentError("alpha must be positive");
  for (double v : series)
    if (!std::isfinite(v)) throw ArgumentError("series contains a non-finite value");
}

inline Segmentation assemble(std::span<const double> series, std::vector<std::size_t> starts,
                             double objective) {
  Segmentation seg;
  seg.series_len = series.size();
  seg.breakpoints = std::move(starts);
  seg.objective = objective;
  seg.levels.reserve(seg.breakpoints.size());
  for (std::size_t s = 0; s < seg.breakpoints.size(); ++s) {
    const std::size_t lo = seg.breakpoints[s], hi = seg.segment_end(s);
    double sum = 0.0;
    for (std::size_t t = lo; t <= hi; ++t) sum += series[t - 1];
    seg.levels.push_back(sum / static_cast<double>(hi - lo + 1));
  }
  return seg;
}

}  // namespace detail

// Exact minimizer of  sum_i (c_i - r_i)^2 + alpha * #{i : c_i != c_{i+1}}.
//
// For fixed breakpoints the optimal constants are segment means, so the
// search runs over breakpoints only. The recursion goes right to left:
//   best[i] = min_{j >= i} sse(i, j) + (j < N ? alpha + best[j + 1] : 0)
// Choosing the smallest j among equal-cost, equal-count candidates yields the
// lexicographically earliest breakpoint list. O(N^2) time, O(N) memory.
inline Segmentation fit_piecewise_constant(std::span<const double> series, double alpha) {
  detail::check_fit_args(series, alpha);
  const std::size_t n = series.size();
  const PrefixSums prefixes(series);
  const auto& s1 = prefixes.s1();
  const auto& s2 = prefixes.s2();

  // tail[j] = alpha + best[j] for j <= N, tail[N + 1] = 0.
  std::vector<double> best(n + 2, 0.0), tail(n + 2, 0.0);
  std::vector<std::uint32_t> count(n + 2, 0);
  std::vector<std::size_t> end_of(n + 2, n);

  for (std::size_t i = n; i >= 1; --i) {
    const double a1 = s1[i - 1], a2 = s2[i - 1];
    double best_v = std::numeric_limits<double>::infinity();
    double lo = best_v;
    std::uint32_t best_c = 0;
    std::size_t best_j = i;
    for (std::size_t j = i; j <= n; ++j) {
      const double d1 = s1[j] - a1;
      double sse = (s2[j] - a2) - d1 * d1 / static_cast<double>(j - i + 1);
      sse = sse > 0.0 ? sse : 0.0;
      const double v = sse + tail[j + 1];
      if (v < lo) {
        best_v = v;
        best_c = count[j + 1] + 1;
        best_j = j;
        lo = v - detail::tie_tolerance(v);
      } else if (v <= best_v + detail::tie_tolerance(best_v) && count[j + 1] + 1 < best_c) {
        best_v = v;
        best_c = count[j + 1] + 1;
        best_j = j;
        lo = best_v - detail::tie_tolerance(best_v);
      }
    }
    best[i] = best_v;
    count[i] = best_c;
    end_of[i] = best_j;
    tail[i] = alpha + best_v;
  }

  std::vector<std::size_t> starts;
  starts.reserve(count[1]);
  for (std::size_t i = 1; i <= n; i = end_of[i] + 1) starts.push_back(i);
  return detail::assemble(series, std::move(starts), best[1]);
}

inline constexpr std::size_t kBruteForceMaxLen = 20;

// Exhaustive search over all 2^(N-1) segmentations with the same objective
// evaluation order and tie-break as fit_piecewise_constant. Verification only.
inline Segmentation brute_force_fit(std::span<const double> series, double alpha) {
  detail::check_fit_args(series, alpha);
  const std::size_t n = series.size();
  if (n > kBruteForceMaxLen)
    throw ArgumentError("brute_force_fit supports at most " + std::to_string(kBruteForceMaxLen) +
                        " points (got " + std::to_string(n) + ")");
  const PrefixSums prefixes(series);

  std::vector<std::size_t> best_starts;
  double best_v = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> starts;
  const std::uint64_t masks = std::uint64_t{1} << (n - 1);
  for (std::uint64_t mask = 0; mask < masks; ++mask) {
    // bit b set: a segment starts at position b + 2.
    starts.assign(1, 1);
    for (std::size_t b = 0; b + 1 < n; ++b)
      if (mask & (std::uint64_t{1} << b)) starts.push_back(b + 2);
    // Accumulate right to left, as the recursion does.
    double v = 0.0;
    for (std::size_t s = starts.size(); s-- > 0;) {
      const std::size_t hi = s + 1 < starts.size() ? starts[s + 1] - 1 : n;
      const double sse = prefixes.sse_unchecked(starts[s], hi);
      v = s + 1 < starts.size() ? sse + (alpha + v) : sse + v;
    }
    bool take = false;
    if (best_starts.empty() || v < best_v - detail::tie_tolerance(best_v)) {
      take = true;
    } else if (v <= best_v + detail::tie_tolerance(best_v)) {
      if (starts.size() < best_starts.size())
        take = true;
      else if (starts.size() == best_starts.size() && starts < best_starts)
        take = true;
    }
    if (take) {
      best_v = v;
      best_starts = starts;
    }
  }
  return detail::assemble(series, std::move(best_starts), best_v);
}

// Objective of a segmentation recomputed from scratch: SSE against the
// stored levels plus alpha per breakpoint.
inline double recompute_objective(std::span<const double> series, const Segmentation& seg,
                                  double alpha) {
  double sse = 0.0;
  for (std::size_t s = 0; s < seg.num_segments(); ++s)
    for (std::size_t t = seg.breakpoints[s]; t <= seg.segment_end(s); ++t) {
      const double d = series[t - 1] - seg.levels[s];
      sse += d * d;
    }
  return sse + alpha * static_cast<double>(seg.num_segments() - 1);
}

}  // namespace hotstreak

#endif  // HOTSTREAK_SEGMENTATION_HPP

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

#ifndef HOTSTREAK_STREAKS_HPP
#define HOTSTREAK_STREAKS_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "hotstreak/common.hpp"
#include "hotstreak/model.hpp"
#include "hotstreak/segmentation.hpp"

namespace hotstreak {

inline constexpr double kDefaultAlpha = 1.0;
inline constexpr double kDefaultPercentile = 90.0;
// "Has a hot streak" means a streak longer than 10 tweets.
inline constexpr std::size_t kHasStreakMinLen = 11;

struct HotStreak {
  std::size_t start_index = 0;  // inclusive, 1-based
  std::size_t end_index = 0;    // inclusive
  double level = 0.0;           // mean fitted constant over the streak
  double threshold = 0.0;

  std::size_t length() const { return end_index - start_index + 1; }

  friend bool operator==(const HotStreak&, const HotStreak&) = default;
};

struct StreakProfile {
  std::vector<HotStreak> streaks;
  std::size_t longest_len = 0;
  std::size_t count = 0;
  double influence_fraction = 0.0;
  std::optional<double> first_streak_position;  // start / N
};

// Nearest-rank percentile: the ceil(k/100 * n)-th smallest value.
inline double percentile_nearest_rank(std::span<const double> values, double k) {
  if (values.empty()) throw ArgumentError("percentile of an empty sample");
  if (!(k > 0.0 && k <= 100.0)) throw ArgumentError("percentile must lie in (0, 100]");
  std::vector<double> sorted(values.begin(), values.end());
  const auto n = sorted.size();
  auto rank = static_cast<std::size_t>(std::ceil(k * static_cast<double>(n) / 100.0));
  rank = std::clamp<std::size_t>(rank, 1, n);
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(rank - 1),
                   sorted.end());
  return sorted[rank - 1];
}

// Maximal runs of segments whose level is strictly above the k-th percentile
// of the career's retweet counts. Runs shorter than min_len tweets are dropped.
inline std::vector<HotStreak> detect_hot_streaks(const Career& career, const Segmentation& seg,
                                                 double k = kDefaultPercentile,
                                                 std::size_t min_len = 1) {
  if (seg.series_len != career.size())
    throw ArgumentError("segmentation length " + std::to_string(seg.series_len) +
                        " does not match career length " + std::to_string(career.size()));
  const auto series = career.retweet_series();
  const double threshold = percentile_nearest_rank(series, k);

  std::vector<HotStreak> out;
  std::optional<HotStreak> open;
  double weighted = 0.0;
  auto close = [&]() {
    if (!open) return;
    open->level = weighted / static_cast<double>(open->length());
    if (open->length() >= min_len) out.push_back(*open);
    open.reset();
  };
  for (std::size_t s = 0; s < seg.num_segments(); ++s) {
    const std::size_t lo = seg.breakpoints[s], hi = seg.segment_end(s);
    if (seg.levels[s] > threshold) {
      if (!open) {
        open = HotStreak{lo, hi, 0.0, threshold};
        weighted = 0.0;
      }
      open->end_index = hi;
      weighted += seg.levels[s] * static_cast<double>(hi - lo + 1);
    } else {
      close();
    }
  }
  close();
  return out;
}

inline StreakProfile streak_profile(const Career& career, const std::vector<HotStreak>& streaks) {
  StreakProfile p;
  p.streaks = streaks;
  p.count = streaks.size();
  std::int64_t inside = 0;
  for (const auto& s : streaks) {
    p.longest_len = std::max(p.longest_len, s.length());
    for (std::size_t i = s.start_index; i <= s.end_index; ++i) inside += career.at(i).retweet_count;
  }
  const std::int64_t total = career.total_retweets();
  p.influence_fraction = total > 0 ? static_cast<double>(inside) / static_cast<double>(total) : 0.0;
  if (!streaks.empty())
    p.first_streak_position =
        static_cast<double>(streaks.front().start_index) / static_cast<double>(career.size());
  return p;
}

// Longest streak, earliest on ties.
inline std::optional<HotStreak> longest_streak(const std::vector<HotStreak>& streaks) {
  std::optional<HotStreak> best;
  for (const auto& s : streaks)
    if (!best || s.length() > best->length()) best = s;
  return best;
}

inline constexpr std::size_t kPositionBins = 10;

struct AgeBucketHistogram {
  std::int64_t lo_weeks = 0;  // inclusive
  std::int64_t hi_weeks = 0;  // exclusive
  std::size_t users = 0;
  std::array<double, kPositionBins> mass{};  // sums to 1 when users > 0
};

struct ProfileWithAge {
  StreakProfile profile;
  std::int64_t career_weeks = 0;
};

// Distribution of first-streak positions for users grouped by career length
// in weeks, buckets [lo, lo + width) covering [range_lo, range_hi).
inline std::vector<AgeBucketHistogram> position_by_age_buckets(
    std::span<const ProfileWithAge> profiles, std::int64_t bucket_width = 100,
    std::int64_t range_lo = 100, std::int64_t range_hi = 500) {
  if (bucket_width <= 0 || range_hi <= range_lo)
    throw ArgumentError("invalid age bucket layout");
  std::vector<AgeBucketHistogram> out;
  for (std::int64_t lo = range_lo; lo < range_hi; lo += bucket_width)
    out.push_back({lo, std::min(lo + bucket_width, range_hi), 0, {}});
  for (const auto& u : profiles) {
    if (u.career_weeks < 0) throw ArgumentError("negative career length");
    if (!u.profile.first_streak_position) continue;
    if (u.career_weeks < range_lo || u.career_weeks >= range_hi) continue;
    auto& b = out[static_cast<std::size_t>((u.career_weeks - range_lo) / bucket_width)];
    const double pos = std::clamp(*u.profile.first_streak_position, 0.0, 1.0);
    auto bin = static_cast<std::size_t>(pos * static_cast<double>(kPositionBins));
    bin = std::min(bin, kPositionBins - 1);
    b.mass[bin] += 1.0;
    ++b.users;
  }
  for (auto& b : out)
    if (b.users > 0)
      for (auto& m : b.mass) m /= static_cast<double>(b.users);
  return out;
}

}  // namespace hotstreak

#endif  // HOTSTREAK_STREAKS_HPP

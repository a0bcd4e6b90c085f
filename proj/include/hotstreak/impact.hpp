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

#ifndef HOTSTREAK_IMPACT_HPP
#define HOTSTREAK_IMPACT_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "hotstreak/common.hpp"
#include "hotstreak/followers.hpp"
#include "hotstreak/model.hpp"
#include "hotstreak/parallel.hpp"
#include "hotstreak/segmentation.hpp"
#include "hotstreak/stats.hpp"
#include "hotstreak/streaks.hpp"

namespace hotstreak {

using FitMap = std::map<std::string, FollowerFit>;

// r_i divided by the estimated follower count at the tweet's time, with the
// divisor clamped below at 1.
inline std::vector<double> retweets_per_follower(const Career& career, const FollowerFit& fit) {
  std::vector<double> out;
  out.reserve(career.size());
  for (const auto& t : career.tweets()) {
    const double f = std::max(1.0, followers_at(fit, static_cast<double>(t.timestamp)));
    out.push_back(static_cast<double>(t.retweet_count) / f);
  }
  return out;
}

inline std::vector<double> retweets_per_follower(const Career& career, const FollowerFit* fit) {
  if (fit == nullptr)
    throw Unavailable("no follower fit for user '" + career.user_id() + "'");
  return retweets_per_follower(career, *fit);
}

// Positions of a user's top-k tweets, by raw count and (when a follower fit
// exists) by retweets per follower.
struct TopPositions {
  std::string user_id;
  std::size_t n = 0;
  std::vector<std::size_t> raw_positions;
  std::optional<std::vector<std::size_t>> per_follower_positions;
};

inline TopPositions make_top_positions(const Career& career, std::size_t k,
                                       const FollowerFit* fit = nullptr) {
  if (k == 0) throw ArgumentError("k must be positive");
  TopPositions tp;
  tp.user_id = career.user_id();
  tp.n = career.size();
  const std::size_t kk = std::min(k, career.size());
  tp.raw_positions = top_k_positions(career, kk);
  if (fit != nullptr) tp.per_follower_positions = top_k_of(retweets_per_follower(career, *fit), kk);
  return tp;
}

enum class PositionKind { kRaw, kPerFollower };

struct PositionPairs {
  std::vector<double> first;
  std::vector<double> second;
  std::size_t excluded = 0;
};

// Position of rank i and rank j for every user that has both. With
// `relative`, positions are divided by the user's N.
inline PositionPairs collect_position_pairs(std::span<const TopPositions> users, std::size_t i,
                                            std::size_t j, PositionKind kind, bool relative) {
  if (i < 1 || j < 1) throw ArgumentError("ranks are 1-based");
  PositionPairs out;
  for (const auto& u : users) {
    const std::vector<std::size_t>* pos = &u.raw_positions;
    if (kind == PositionKind::kPerFollower) {
      if (!u.per_follower_positions) {
        ++out.excluded;
        continue;
      }
      pos = &*u.per_follower_positions;
    }
    if (pos->size() < std::max(i, j)) {
      ++out.excluded;
      continue;
    }
    const double scale = relative ? static_cast<double>(u.n) : 1.0;
    out.first.push_back(static_cast<double>((*pos)[i - 1]) / scale);
    out.second.push_back(static_cast<double>((*pos)[j - 1]) / scale);
  }
  return out;
}

inline double position_correlation(std::span<const TopPositions> users, std::size_t i,
                                   std::size_t j, PositionKind kind = PositionKind::kRaw,
                                   bool relative = false) {
  const auto pairs = collect_position_pairs(users, i, j, kind, relative);
  if (pairs.first.size() < 3)
    throw InsufficientData("position correlation needs at least 3 users with ranks " +
                           std::to_string(i) + " and " + std::to_string(j));
  return stats::pearson(pairs.first, pairs.second);
}

// (P(T_1) - P(T_2)) / N.
inline double normalized_gap(const Career& career) {
  if (career.size() < 2) throw ArgumentError("normalized gap needs at least 2 tweets");
  const auto top = top_k_positions(career, 2);
  return (static_cast<double>(top[0]) - static_cast<double>(top[1])) /
         static_cast<double>(career.size());
}

// Statistics evaluated on a whole population of careers; each can be
// recomputed on shuffled copies to build a null distribution.
struct PositionCorrelationMetric {
  std::size_t rank_a = 1;
  std::size_t rank_b = 2;
  PositionKind kind = PositionKind::kRaw;
  bool relative = false;
  const FitMap* fits = nullptr;  // required for kPerFollower
};

// Fraction of users with |normalized gap| <= width.
struct GapPeakMassMetric {
  double width = 0.1;
};

// Fraction of users having a hot streak of at least min_len tweets.
struct StreakFractionMetric {
  double alpha = kDefaultAlpha;
  double percentile = kDefaultPercentile;
  std::size_t min_len = kHasStreakMinLen;
};

using Metric = std::variant<PositionCorrelationMetric, GapPeakMassMetric, StreakFractionMetric>;

inline std::string metric_name(const Metric& m) {
  struct {
    std::string operator()(const PositionCorrelationMetric& c) const {
      return "position_correlation(" + std::to_string(c.rank_a) + "," + std::to_string(c.rank_b) + ")";
    }
    std::string operator()(const GapPeakMassMetric&) const { return "gap_peak_mass"; }
    std::string operator()(const StreakFractionMetric&) const { return "streak_fraction"; }
  } visitor;
  return std::visit(visitor, m);
}

inline bool has_streak(const Career& c, double alpha, double percentile, std::size_t min_len) {
  const auto series = c.retweet_series();
  const auto seg = fit_piecewise_constant(series, alpha);
  return !detect_hot_streaks(c, seg, percentile, min_len).empty();
}

inline double evaluate_metric(const Metric& metric, std::span<const Career> careers,
                              std::size_t workers = 1) {
  if (careers.empty()) throw InsufficientData("metric over an empty population");
  if (const auto* m = std::get_if<PositionCorrelationMetric>(&metric)) {
    const std::size_t k = std::max(m->rank_a, m->rank_b);
    std::vector<TopPositions> users;
    users.reserve(careers.size());
    for (const auto& c : careers) {
      const FollowerFit* fit = nullptr;
      if (m->kind == PositionKind::kPerFollower) {
        if (m->fits == nullptr) throw Unavailable("per-follower positions need follower fits");
        auto it = m->fits->find(c.user_id());
        if (it == m->fits->end()) continue;
        fit = &it->second;
      }
      users.push_back(make_top_positions(c, k, fit));
    }
    return position_correlation(users, m->rank_a, m->rank_b, m->kind, m->relative);
  }
  if (const auto* m = std::get_if<GapPeakMassMetric>(&metric)) {
    std::size_t hits = 0, users = 0;
    for (const auto& c : careers) {
      if (c.size() < 2) continue;
      ++users;
      if (std::abs(normalized_gap(c)) <= m->width) ++hits;
    }
    if (users == 0) throw InsufficientData("no careers with at least 2 tweets");
    return static_cast<double>(hits) / static_cast<double>(users);
  }
  const auto& m = std::get<StreakFractionMetric>(metric);
  std::vector<char> flags(careers.size(), 0);
  parallel_for(careers.size(), workers, [&](std::size_t i) {
    flags[i] = has_streak(careers[i], m.alpha, m.percentile, m.min_len) ? 1 : 0;
  });
  std::size_t hits = 0;
  for (char f : flags) hits += static_cast<std::size_t>(f);
  return static_cast<double>(hits) / static_cast<double>(careers.size());
}

// Every career shuffled with a seed derived from (seed, user_id).
inline std::vector<Career> shuffle_population(std::span<const Career> careers, std::uint64_t seed) {
  std::vector<Career> out;
  out.reserve(careers.size());
  for (const auto& c : careers) out.push_back(shuffle_career(c, derive_seed(seed, c.user_id())));
  return out;
}

struct ContrastResult {
  std::string metric;
  double observed = 0.0;
  double null_mean = 0.0;
  double null_sd = 0.0;
  double z = 0.0;
  std::vector<double> null_values;  // one per seed, in seed order
};

inline ContrastResult shuffle_contrast(const Metric& metric, std::span<const Career> careers,
                                       std::span<const std::uint64_t> seeds,
                                       std::size_t workers = 1) {
  if (seeds.empty()) throw ArgumentError("shuffle_contrast needs at least one seed");
  ContrastResult r;
  r.metric = metric_name(metric);
  r.observed = evaluate_metric(metric, careers, workers);
  r.null_values.resize(seeds.size());
  for (std::size_t s = 0; s < seeds.size(); ++s) {
    const auto shuffled = shuffle_population(careers, seeds[s]);
    r.null_values[s] = evaluate_metric(metric, shuffled, workers);
  }
  r.null_mean = stats::mean(r.null_values);
  r.null_sd = r.null_values.size() > 1 ? stats::stddev(r.null_values) : 0.0;
  const double diff = r.observed - r.null_mean;
  if (r.null_sd > 0.0)
    r.z = diff / r.null_sd;
  else
    r.z = diff == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), diff);
  return r;
}

}  // namespace hotstreak

#endif  // HOTSTREAK_IMPACT_HPP

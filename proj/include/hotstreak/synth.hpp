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

#ifndef HOTSTREAK_SYNTH_HPP
#define HOTSTREAK_SYNTH_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "hotstreak/common.hpp"
#include "hotstreak/followers.hpp"
#include "hotstreak/model.hpp"

namespace hotstreak::synth {

struct StreakSpec {
  std::optional<double> start_frac;  // nullopt: uniformly random placement
  std::size_t len = 50;
  double boost = 8.0;
};

// Shifts applied to tweets inside planted streaks.
struct ContentShift {
  double media_delta = 0.0;
  double reply_delta = 0.0;
  double entropy_delta = 0.0;  // in [0, 1]: 0 = no change, 1 = single topic / tiny vocabulary
};

// Rising then falling expected counts around a peak tweet, which is forced to
// be the career maximum.
struct TentSpec {
  std::optional<double> center_frac;  // nullopt: random, at least half_width from either end
  std::size_t half_width = 10;
  double peak = 50.0;  // peak mean as a multiple of the baseline
};

struct FollowerCurve {
  std::vector<double> coefficients = {1000.0, 4000.0, 2000.0, 0.0, 500.0};  // in u over the career
  double noise_sd = 20.0;
  std::size_t n_snapshots = 15;
};

struct SynthConfig {
  std::string user_id = "synth";
  std::size_t n_tweets = 2500;
  double baseline_mean = 2.0;
  double dispersion = 0.5;  // sigma of the lognormal rate multiplier
  std::vector<StreakSpec> streaks;
  bool cluster_top5 = false;
  std::optional<TentSpec> tent;
  std::optional<FollowerCurve> follower_curve;
  ContentShift content_shift;
  bool with_content = false;
  bool with_retweeters = false;
  bool with_activity = false;
  double mean_gap_hours = 6.0;
  std::int64_t start_timestamp = 1'230'768'000;  // 2009-01-01
  std::uint64_t seed = 0;
};

struct TruthRange {
  std::size_t start_index = 0;
  std::size_t end_index = 0;

  friend bool operator==(const TruthRange&, const TruthRange&) = default;
};

struct SynthCareer {
  Career career;
  std::vector<TruthRange> truth;  // planted streaks with boost > 1, sorted
  std::optional<FollowerSnapshots> snapshots;
};

inline constexpr std::size_t kTopics = 10;
inline constexpr std::size_t kVocabulary = 200;
inline constexpr double kClusterWindowFrac = 0.05;

namespace detail {

inline void validate(const SynthConfig& c) {
  if (c.n_tweets == 0) throw ArgumentError("synth: n_tweets must be positive");
  if (!(c.baseline_mean > 0.0)) throw ArgumentError("synth: baseline_mean must be positive");
  if (!(c.dispersion >= 0.0)) throw ArgumentError("synth: dispersion must be nonnegative");
  if (!(c.mean_gap_hours > 0.0)) throw ArgumentError("synth: mean_gap_hours must be positive");
  for (const auto& s : c.streaks) {
    if (!(s.boost >= 1.0)) throw ArgumentError("synth: streak boost must be >= 1");
    if (s.len == 0 || s.len > c.n_tweets) throw ArgumentError("synth: streak length out of range");
    if (s.start_frac && !(*s.start_frac >= 0.0 && *s.start_frac < 1.0))
      throw ArgumentError("synth: streak start_frac must lie in [0, 1)");
  }
  for (double d : {c.content_shift.media_delta, c.content_shift.reply_delta})
    if (!(d >= -1.0 && d <= 1.0)) throw ArgumentError("synth: content delta outside [-1, 1]");
  if (!(c.content_shift.entropy_delta >= 0.0 && c.content_shift.entropy_delta <= 1.0))
    throw ArgumentError("synth: entropy_delta outside [0, 1]");
  if (c.tent) {
    if (2 * c.tent->half_width + 1 > c.n_tweets) throw ArgumentError("synth: tent wider than career");
    if (!(c.tent->peak > 1.0)) throw ArgumentError("synth: tent peak must exceed 1");
  }
  if (c.cluster_top5 && c.n_tweets < 5) throw ArgumentError("synth: cluster_top5 needs 5 tweets");
  if (c.follower_curve && c.follower_curve->n_snapshots < 1)
    throw ArgumentError("synth: need at least one snapshot");
}

inline double clamp01(double p) { return std::clamp(p, 0.0, 1.0); }

// Places streaks in order; random placements avoid earlier ones.
inline std::vector<TruthRange> place_streaks(const SynthConfig& c, std::mt19937_64& rng) {
  std::vector<TruthRange> placed;
  std::vector<char> used(c.n_tweets + 2, 0);
  for (const auto& s : c.streaks) {
    std::size_t start = 0;
    if (s.start_frac) {
      start = static_cast<std::size_t>(std::floor(*s.start_frac * static_cast<double>(c.n_tweets))) + 1;
      if (start + s.len - 1 > c.n_tweets) throw ArgumentError("synth: streak runs past the career end");
    } else {
      std::uniform_int_distribution<std::size_t> pick(1, c.n_tweets - s.len + 1);
      bool ok = false;
      for (int attempt = 0; attempt < 1000 && !ok; ++attempt) {
        start = pick(rng);
        ok = true;
        for (std::size_t i = start; i < start + s.len; ++i)
          if (used[i]) ok = false;
      }
      if (!ok) throw ArgumentError("synth: cannot place non-overlapping streaks");
    }
    for (std::size_t i = start; i < start + s.len; ++i) {
      if (used[i]) throw ArgumentError("synth: streak specs overlap");
      used[i] = 1;
    }
    placed.push_back({start, start + s.len - 1});
  }
  return placed;
}

inline std::vector<double> dirichlet_ones(std::size_t k, std::mt19937_64& rng) {
  std::gamma_distribution<double> g(1.0, 1.0);
  std::vector<double> p(k);
  double total = 0.0;
  for (auto& v : p) {
    v = g(rng);
    total += v;
  }
  for (auto& v : p) v /= total;
  return p;
}

// Renormalizes so the sum is exactly 1 up to rounding of the last element.
inline void normalize(std::vector<double>& p) {
  double total = 0.0;
  for (double v : p) total += v;
  for (auto& v : p) v /= total;
  double rest = 1.0;
  for (std::size_t i = 0; i + 1 < p.size(); ++i) rest -= p[i];
  p.back() = std::max(0.0, rest);
}

}  // namespace detail

inline SynthCareer generate_career(const SynthConfig& config) {
  detail::validate(config);
  std::mt19937_64 rng(config.seed);
  const std::size_t n = config.n_tweets;

  std::vector<TruthRange> placed = detail::place_streaks(config, rng);
  std::vector<double> mean(n, config.baseline_mean);
  std::vector<char> in_streak(n, 0);
  std::vector<TruthRange> truth;
  for (std::size_t s = 0; s < placed.size(); ++s) {
    const double boost = config.streaks[s].boost;
    for (std::size_t i = placed[s].start_index; i <= placed[s].end_index; ++i) {
      mean[i - 1] *= boost;
      if (boost > 1.0) in_streak[i - 1] = 1;
    }
    if (boost > 1.0) truth.push_back(placed[s]);
  }
  std::sort(truth.begin(), truth.end(),
            [](const TruthRange& a, const TruthRange& b) { return a.start_index < b.start_index; });

  std::size_t tent_center = 0;
  if (config.tent) {
    const auto hw = config.tent->half_width;
    if (config.tent->center_frac) {
      tent_center = std::clamp<std::size_t>(
          static_cast<std::size_t>(std::floor(*config.tent->center_frac * static_cast<double>(n))) + 1,
          hw + 1, n - hw);
    } else {
      std::uniform_int_distribution<std::size_t> pick(hw + 1, n - hw);
      tent_center = pick(rng);
    }
    for (std::size_t d = 0; d <= hw; ++d) {
      const double h = 1.0 + (config.tent->peak - 1.0) * (1.0 - static_cast<double>(d) / static_cast<double>(hw + 1));
      mean[tent_center - 1 - d] = std::max(mean[tent_center - 1 - d], config.baseline_mean * h);
      mean[tent_center - 1 + d] = std::max(mean[tent_center - 1 + d], config.baseline_mean * h);
    }
  }

  // Poisson-lognormal counts with E[count] = mean.
  std::normal_distribution<double> z(0.0, 1.0);
  const double sigma = config.dispersion;
  std::vector<std::int64_t> counts(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double rate = mean[i] * std::exp(sigma * z(rng) - 0.5 * sigma * sigma);
    std::poisson_distribution<std::int64_t> pois(std::max(rate, 1e-12));
    counts[i] = pois(rng);
  }

  if (config.tent) {
    std::int64_t top = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (i != tent_center - 1) top = std::max(top, counts[i]);
    counts[tent_center - 1] = std::max(counts[tent_center - 1], top + 1);
  }

  if (config.cluster_top5) {
    const auto width = std::max<std::size_t>(
        5, static_cast<std::size_t>(std::floor(kClusterWindowFrac * static_cast<double>(n))));
    std::uniform_int_distribution<std::size_t> lo_pick(1, n - width + 1);
    const std::size_t lo = lo_pick(rng);
    std::vector<std::size_t> slots(width);
    for (std::size_t i = 0; i < width; ++i) slots[i] = lo + i;
    std::shuffle(slots.begin(), slots.end(), rng);
    slots.resize(5);
    std::int64_t top = 0;
    for (auto c : counts) top = std::max(top, c);
    const std::int64_t step = std::max<std::int64_t>(5, top / 4);
    for (std::size_t r = 0; r < 5; ++r)
      counts[slots[r] - 1] = top + step * static_cast<std::int64_t>(5 - r);
  }

  // Timestamps with exponential gaps.
  std::exponential_distribution<double> gap(1.0 / (config.mean_gap_hours * 3600.0));
  std::vector<std::int64_t> ts(n);
  std::int64_t now = config.start_timestamp;
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) now += std::max<std::int64_t>(1, static_cast<std::int64_t>(std::llround(gap(rng))));
    ts[i] = now;
  }

  std::vector<TweetRecord> tweets(n);
  for (std::size_t i = 0; i < n; ++i) {
    tweets[i].timestamp = ts[i];
    tweets[i].retweet_count = counts[i];
  }

  if (config.with_content) {
    const auto& shift = config.content_shift;
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::uniform_int_distribution<std::int64_t> length(40, 140);
    std::normal_distribution<double> sentiment(0.0, 1.0);
    // Zipf-like word weights; streak tweets draw from a shrunken vocabulary.
    std::vector<double> weights(kVocabulary);
    for (std::size_t w = 0; w < kVocabulary; ++w) weights[w] = 1.0 / static_cast<double>(w + 1);
    const auto hot_vocab = std::max<std::size_t>(
        2, static_cast<std::size_t>(std::llround(static_cast<double>(kVocabulary) * (1.0 - shift.entropy_delta))));
    std::discrete_distribution<std::size_t> word(weights.begin(), weights.end());
    std::discrete_distribution<std::size_t> hot_word(weights.begin(), weights.begin() + static_cast<std::ptrdiff_t>(hot_vocab));
    std::uniform_int_distribution<std::size_t> topic_pick(0, kTopics - 1);
    const std::size_t dominant = topic_pick(rng);
    for (std::size_t i = 0; i < n; ++i) {
      const bool hot = in_streak[i] != 0;
      auto& t = tweets[i];
      TweetFlags f;
      f.is_reply = u01(rng) < detail::clamp01(0.2 + (hot ? shift.reply_delta : 0.0));
      f.has_mention = u01(rng) < 0.3;
      f.has_hashtag = u01(rng) < 0.2;
      f.has_url = u01(rng) < 0.25;
      f.has_media = u01(rng) < detail::clamp01(0.15 + (hot ? shift.media_delta : 0.0));
      t.flags = f;
      t.text_length = length(rng);
      TokenCounts tokens;
      const auto words = std::max<std::int64_t>(1, *t.text_length / 6);
      for (std::int64_t w = 0; w < words; ++w)
        ++tokens["w" + std::to_string(hot ? hot_word(rng) : word(rng))];
      t.tokens = std::move(tokens);
      auto topics = detail::dirichlet_ones(kTopics, rng);
      if (hot && shift.entropy_delta > 0.0) {
        for (auto& p : topics) p *= (1.0 - shift.entropy_delta);
        topics[dominant] += shift.entropy_delta;
      }
      detail::normalize(topics);
      t.topic_dist = std::move(topics);
      t.sentiment = sentiment(rng);
    }
  }

  if (config.with_retweeters) {
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::exponential_distribution<double> delay(1.0 / 7200.0);
    std::geometric_distribution<std::size_t> recency(0.05);
    std::size_t next_id = 0;
    std::vector<std::size_t> pool;
    for (std::size_t i = 0; i < n; ++i) {
      const double p_new = in_streak[i] ? 0.6 : 0.2;
      std::vector<Retweet> rts;
      rts.reserve(static_cast<std::size_t>(counts[i]));
      std::set<std::size_t> seen;
      for (std::int64_t r = 0; r < counts[i]; ++r) {
        std::size_t who;
        if (pool.empty() || u01(rng) < p_new) {
          who = next_id++;
          pool.push_back(who);
        } else {
          const std::size_t back = std::min(recency(rng), pool.size() - 1);
          who = pool[pool.size() - 1 - back];
        }
        rts.push_back({"r" + std::to_string(who),
                       ts[i] + static_cast<std::int64_t>(std::llround(delay(rng)))});
      }
      std::sort(rts.begin(), rts.end(),
                [](const Retweet& a, const Retweet& b) { return a.timestamp < b.timestamp; });
      tweets[i].retweeters = std::move(rts);
    }
  }

  std::optional<std::vector<ActivityEvent>> activity;
  if (config.with_activity) {
    std::poisson_distribution<int> own_retweets(0.5);
    std::vector<ActivityEvent> events;
    for (std::size_t i = 0; i < n; ++i) {
      const bool reply = tweets[i].flags && tweets[i].flags->is_reply;
      events.push_back({ts[i], reply ? "reply" : "tweet"});
      if (i + 1 < n && ts[i + 1] > ts[i] + 1) {
        std::uniform_int_distribution<std::int64_t> when(ts[i] + 1, ts[i + 1] - 1);
        const int k = own_retweets(rng);
        for (int r = 0; r < k; ++r) events.push_back({when(rng), "retweet"});
      }
    }
    std::stable_sort(events.begin(), events.end(),
                     [](const ActivityEvent& a, const ActivityEvent& b) { return a.timestamp < b.timestamp; });
    activity = std::move(events);
  }

  std::optional<FollowerSnapshots> snapshots;
  if (config.follower_curve) {
    const auto& fc = *config.follower_curve;
    FollowerSnapshots snaps;
    snaps.user_id = config.user_id;
    const std::int64_t t0 = ts.front(), t1 = std::max(ts.back(), ts.front() + 1);
    std::uniform_int_distribution<std::int64_t> when(t0, t1);
    std::set<std::int64_t> times = {t0, t1};
    while (times.size() < fc.n_snapshots && times.size() < static_cast<std::size_t>(t1 - t0 + 1))
      times.insert(when(rng));
    std::normal_distribution<double> noise(0.0, fc.noise_sd);
    for (auto t : times) {
      const double u = static_cast<double>(t - t0) / static_cast<double>(t1 - t0);
      double v = 0.0;
      for (auto it = fc.coefficients.rbegin(); it != fc.coefficients.rend(); ++it) v = v * u + *it;
      v += fc.noise_sd > 0.0 ? noise(rng) : 0.0;
      snaps.points.push_back({t, std::max<std::int64_t>(0, std::llround(v))});
    }
    snapshots = std::move(snaps);
  }

  return {Career(config.user_id, std::move(tweets), std::move(activity)), std::move(truth),
          std::move(snapshots)};
}

// `users` careers from a template config; user i gets id "<prefix>NNNNN" and
// a seed derived from (seed, i).
inline std::vector<SynthCareer> generate_population(const SynthConfig& base, std::size_t users,
                                                    std::uint64_t seed,
                                                    const std::string& prefix = "user") {
  std::vector<SynthCareer> out;
  out.reserve(users);
  for (std::size_t u = 0; u < users; ++u) {
    SynthConfig c = base;
    std::string num = std::to_string(u);
    c.user_id = prefix + std::string(num.size() < 5 ? 5 - num.size() : 0, '0') + num;
    c.seed = derive_seed(seed, static_cast<std::uint64_t>(u));
    out.push_back(generate_career(c));
  }
  return out;
}

struct DetectionScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double jaccard = 0.0;
};

// Per-tweet overlap between two sets of inclusive index ranges.
inline DetectionScore score_detection(std::span<const TruthRange> truth,
                                      std::span<const TruthRange> detected) {
  std::set<std::size_t> t, d;
  for (const auto& r : truth)
    for (std::size_t i = r.start_index; i <= r.end_index; ++i) t.insert(i);
  for (const auto& r : detected)
    for (std::size_t i = r.start_index; i <= r.end_index; ++i) d.insert(i);
  DetectionScore s;
  if (t.empty() && d.empty()) return {1.0, 1.0, 1.0, 1.0};
  std::size_t both = 0;
  for (auto i : d) both += t.count(i);
  const std::size_t uni = t.size() + d.size() - both;
  s.precision = d.empty() ? 0.0 : static_cast<double>(both) / static_cast<double>(d.size());
  s.recall = t.empty() ? 0.0 : static_cast<double>(both) / static_cast<double>(t.size());
  s.f1 = s.precision + s.recall > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  s.jaccard = static_cast<double>(both) / static_cast<double>(uni);
  return s;
}

}  // namespace hotstreak::synth

#endif  // HOTSTREAK_SYNTH_HPP

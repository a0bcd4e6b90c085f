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

#ifndef HOTSTREAK_WINDOWS_HPP
#define HOTSTREAK_WINDOWS_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hotstreak/common.hpp"
#include "hotstreak/followers.hpp"
#include "hotstreak/model.hpp"
#include "hotstreak/stats.hpp"
#include "hotstreak/streaks.hpp"

namespace hotstreak {

struct IndexRange {
  std::size_t first = 0;
  std::size_t last = 0;

  std::size_t length() const { return last - first + 1; }
  friend bool operator==(const IndexRange&, const IndexRange&) = default;
};

struct WindowTriple {
  IndexRange before;
  IndexRange during;
  IndexRange after;
};

enum class Period { kBefore = 0, kDuring = 1, kAfter = 2 };

inline const char* to_string(Period p) {
  switch (p) {
    case Period::kBefore: return "before";
    case Period::kDuring: return "during";
    case Period::kAfter: return "after";
  }
  return "?";
}

inline constexpr std::array<Period, 3> kPeriods = {Period::kBefore, Period::kDuring, Period::kAfter};

inline WindowTriple extract_windows(const Career& career, const HotStreak& streak) {
  if (streak.start_index < 1 || streak.end_index < streak.start_index || streak.end_index > career.size())
    throw ArgumentError("streak outside career");
  const std::size_t k = streak.length();
  if (streak.start_index <= k || streak.end_index + k > career.size())
    throw Unavailable("window of " + std::to_string(k) + " tweets around streak [" +
                      std::to_string(streak.start_index) + ".." + std::to_string(streak.end_index) +
                      "] crosses the career boundary");
  return {{streak.start_index - k, streak.start_index - 1},
          {streak.start_index, streak.end_index},
          {streak.end_index + 1, streak.end_index + k}};
}

// Names of the per-tweet flag fractions, in TweetFlags order.
inline constexpr std::array<const char*, 6> kFlagNames = {"retweet", "reply",   "mention",
                                                          "hashtag", "url",     "media"};

inline std::array<bool, 6> flag_values(const TweetFlags& f) {
  return {f.is_retweet, f.is_reply, f.has_mention, f.has_hashtag, f.has_url, f.has_media};
}

struct WindowStats {
  IndexRange range;
  double mean_retweets = 0.0;
  std::optional<double> follower_gain;
  std::optional<double> mean_retweets_per_follower;
  std::optional<double> tweets_per_hour;
  std::map<std::string, double> fractions;  // present only when every tweet has flags
  std::optional<double> activity_retweet_fraction;
  std::optional<double> mean_length;
  std::optional<double> word_entropy;
  std::optional<double> topic_entropy;
  std::optional<double> mean_sentiment;
};

struct FeatureTest {
  std::string feature;
  Period a = Period::kBefore;
  Period b = Period::kDuring;
  stats::TestResult result;
};

struct WindowReport {
  std::array<WindowStats, 3> windows;
  std::vector<FeatureTest> tests;  // corrected_p set, m = tests.size()
};

namespace detail {

// Per-tweet samples of one feature in one window; nullopt when any tweet
// lacks the field.
using Sample = std::optional<std::vector<double>>;

template <typename Get>
Sample sample_of(const Career& career, IndexRange r, Get get) {
  std::vector<double> out;
  out.reserve(r.length());
  for (std::size_t i = r.first; i <= r.last; ++i) {
    std::optional<double> v = get(career.at(i), i);
    if (!v) return std::nullopt;
    out.push_back(*v);
  }
  return out;
}

inline bool is_constant(std::span<const double> x) {
  return std::all_of(x.begin(), x.end(), [&](double v) { return v == x.front(); });
}

// welch_t extended to degenerate samples: two equal constants give t = 0,
// p = 1; two different constants give t = +-inf, p = 0.
inline std::optional<stats::TestResult> compare(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) return std::nullopt;
  if (is_constant(a) && is_constant(b)) {
    stats::TestResult r;
    r.df = static_cast<double>(a.size() + b.size() - 2);
    if (a.front() == b.front()) {
      r.statistic = 0.0;
      r.p_two_sided = 1.0;
    } else {
      r.statistic = std::copysign(std::numeric_limits<double>::infinity(), a.front() - b.front());
      r.p_two_sided = 0.0;
    }
    return r;
  }
  return stats::welch_t(a, b);
}

inline std::optional<double> mean_of(const Sample& s) {
  if (!s || s->empty()) return std::nullopt;
  return stats::mean(*s);
}

}  // namespace detail

// Follower increment of tweet i: f(t_i) - f(t_{i-1}), zero for the first tweet.
inline double follower_increment(const Career& career, const FollowerFit& fit, std::size_t i) {
  const auto t = static_cast<double>(career.at(i).timestamp);
  const auto prev = i > 1 ? static_cast<double>(career.at(i - 1).timestamp) : t;
  return follower_gain(fit, prev, t);
}

inline WindowReport window_report(const Career& career, const WindowTriple& triple,
                                  const FollowerFit* fit = nullptr) {
  const std::array<IndexRange, 3> ranges = {triple.before, triple.during, triple.after};
  for (const auto& r : ranges)
    if (r.first < 1 || r.last < r.first || r.last > career.size())
      throw ArgumentError("window outside career");

  struct Feature {
    std::string name;
    std::array<detail::Sample, 3> samples;
  };
  std::vector<Feature> features;
  auto add = [&](std::string name, auto get) {
    Feature f{std::move(name), {}};
    for (std::size_t w = 0; w < 3; ++w) f.samples[w] = detail::sample_of(career, ranges[w], get);
    features.push_back(std::move(f));
  };
  add("retweets", [](const TweetRecord& t, std::size_t) -> std::optional<double> {
    return static_cast<double>(t.retweet_count);
  });
  if (fit != nullptr) {
    add("follower_increment", [&](const TweetRecord&, std::size_t i) -> std::optional<double> {
      return follower_increment(career, *fit, i);
    });
    add("retweets_per_follower", [&](const TweetRecord& t, std::size_t) -> std::optional<double> {
      return static_cast<double>(t.retweet_count) /
             std::max(1.0, followers_at(*fit, static_cast<double>(t.timestamp)));
    });
  }
  for (std::size_t f = 0; f < kFlagNames.size(); ++f) {
    add(std::string(kFlagNames[f]) + "_fraction",
        [f](const TweetRecord& t, std::size_t) -> std::optional<double> {
          if (!t.flags) return std::nullopt;
          return flag_values(*t.flags)[f] ? 1.0 : 0.0;
        });
  }
  add("length", [](const TweetRecord& t, std::size_t) -> std::optional<double> {
    if (!t.text_length) return std::nullopt;
    return static_cast<double>(*t.text_length);
  });
  add("sentiment", [](const TweetRecord& t, std::size_t) { return t.sentiment; });

  WindowReport report;
  for (std::size_t w = 0; w < 3; ++w) {
    auto& ws = report.windows[w];
    const auto r = ranges[w];
    ws.range = r;
    for (const auto& f : features) {
      const auto m = detail::mean_of(f.samples[w]);
      if (!m) continue;
      if (f.name == "retweets") ws.mean_retweets = *m;
      else if (f.name == "retweets_per_follower") ws.mean_retweets_per_follower = *m;
      else if (f.name == "length") ws.mean_length = *m;
      else if (f.name == "sentiment") ws.mean_sentiment = *m;
      else if (f.name.ends_with("_fraction")) ws.fractions[f.name.substr(0, f.name.size() - 9)] = *m;
    }
    const auto t_first = static_cast<double>(career.at(r.first).timestamp);
    const auto t_last = static_cast<double>(career.at(r.last).timestamp);
    if (fit != nullptr) {
      const auto t_prev = r.first > 1 ? static_cast<double>(career.at(r.first - 1).timestamp) : t_first;
      ws.follower_gain = follower_gain(*fit, t_prev, t_last);
    }
    if (career.activity() && t_last > t_first) {
      std::size_t events = 0, retweets = 0;
      for (const auto& e : *career.activity()) {
        if (static_cast<double>(e.timestamp) < t_first || static_cast<double>(e.timestamp) > t_last) continue;
        ++events;
        if (e.kind == "retweet") ++retweets;
      }
      ws.tweets_per_hour = static_cast<double>(events) / ((t_last - t_first) / 3600.0);
      if (events > 0) ws.activity_retweet_fraction = static_cast<double>(retweets) / static_cast<double>(events);
    }
    TokenCounts pooled;
    bool have_tokens = true;
    std::vector<double> topic_mean;
    bool have_topics = true;
    for (std::size_t i = r.first; i <= r.last; ++i) {
      const auto& t = career.at(i);
      if (t.tokens) {
        for (const auto& [word, c] : *t.tokens) pooled[word] += c;
      } else {
        have_tokens = false;
      }
      if (t.topic_dist && (topic_mean.empty() || topic_mean.size() == t.topic_dist->size())) {
        topic_mean.resize(t.topic_dist->size(), 0.0);
        for (std::size_t d = 0; d < topic_mean.size(); ++d) topic_mean[d] += (*t.topic_dist)[d];
      } else {
        have_topics = false;
      }
    }
    std::int64_t total_tokens = 0;
    for (const auto& [word, c] : pooled) total_tokens += c;
    if (have_tokens && total_tokens > 0) ws.word_entropy = stats::shannon_entropy(pooled);
    if (have_topics && !topic_mean.empty()) ws.topic_entropy = stats::entropy_of_distribution(topic_mean);
  }

  constexpr std::array<std::array<std::size_t, 2>, 3> pairs = {{{0, 1}, {1, 2}, {0, 2}}};
  for (const auto& f : features) {
    for (const auto& [a, b] : pairs) {
      if (!f.samples[a] || !f.samples[b]) continue;
      const auto res = detail::compare(*f.samples[a], *f.samples[b]);
      if (!res) continue;
      report.tests.push_back({f.name, kPeriods[a], kPeriods[b], *res});
    }
  }
  for (auto& t : report.tests) t.result.corrected_p = stats::bonferroni(t.result.p_two_sided, report.tests.size());
  return report;
}

// True unless before -> during follower increments rise significantly.
// The cutoff is a free choice; 0.01 on the corrected p is the default.
inline std::optional<bool> no_significant_follower_increase(const WindowReport& report,
                                                            double cutoff = 0.01) {
  for (const auto& t : report.tests) {
    if (t.feature != "follower_increment" || t.a != Period::kBefore || t.b != Period::kDuring) continue;
    return !(t.result.statistic < 0.0 && *t.result.corrected_p < cutoff);
  }
  return std::nullopt;
}

// Retweeter cohorts, keyed by the period of each retweeter's first retweet.
struct CohortRates {
  std::size_t retweeters = 0;
  std::vector<double> weekly_rate;  // retweets per member per week since the period start
};

struct CohortTable {
  std::array<std::int64_t, 3> period_start{};  // timestamps
  std::array<CohortRates, 3> cohorts;
  std::array<std::int64_t, 3> before_cohort_totals{};  // retweets by the before cohort per period
  std::map<std::string, Period> membership;
};

inline CohortTable cohort_analysis(const Career& career, const HotStreak& streak) {
  if (streak.start_index < 1 || streak.end_index < streak.start_index || streak.end_index > career.size())
    throw ArgumentError("streak outside career");
  struct Event {
    std::string user;
    std::int64_t ts;
  };
  std::vector<Event> events;
  bool any = false;
  for (const auto& t : career.tweets()) {
    if (!t.retweeters) continue;
    any = true;
    for (const auto& r : *t.retweeters) events.push_back({r.user, r.timestamp});
  }
  if (!any) throw Unavailable("no retweeter data for user '" + career.user_id() + "'");

  CohortTable table;
  table.period_start[0] = career.tweets().front().timestamp;
  table.period_start[1] = career.at(streak.start_index).timestamp;
  table.period_start[2] = streak.end_index < career.size() ? career.at(streak.end_index + 1).timestamp
                                                            : career.at(streak.end_index).timestamp + 1;
  auto period_of = [&](std::int64_t ts) {
    if (ts < table.period_start[1]) return Period::kBefore;
    if (ts < table.period_start[2]) return Period::kDuring;
    return Period::kAfter;
  };

  std::map<std::string, std::int64_t> first;
  for (const auto& e : events) {
    auto [it, inserted] = first.try_emplace(e.user, e.ts);
    if (!inserted) it->second = std::min(it->second, e.ts);
  }
  for (const auto& [user, ts] : first) {
    const Period p = period_of(ts);
    table.membership[user] = p;
    ++table.cohorts[static_cast<std::size_t>(p)].retweeters;
  }

  std::array<std::vector<std::int64_t>, 3> weekly;
  for (const auto& e : events) {
    const auto c = static_cast<std::size_t>(table.membership[e.user]);
    if (c == 0) ++table.before_cohort_totals[static_cast<std::size_t>(period_of(e.ts))];
    const std::int64_t offset = e.ts - table.period_start[c];
    if (offset < 0) continue;
    const auto week = static_cast<std::size_t>(offset / kSecondsPerWeek);
    if (weekly[c].size() <= week) weekly[c].resize(week + 1, 0);
    ++weekly[c][week];
  }
  for (std::size_t c = 0; c < 3; ++c) {
    const auto members = table.cohorts[c].retweeters;
    for (auto n : weekly[c])
      table.cohorts[c].weekly_rate.push_back(
          members ? static_cast<double>(n) / static_cast<double>(members) : 0.0);
  }
  return table;
}

struct UserSlopes {
  std::string user_id;
  std::size_t peak_index = 0;
  double before = 0.0;
  double after = 0.0;
};

struct BuildupResult {
  std::size_t window = 0;
  std::vector<double> mean_curve;  // offsets -window..window
  std::vector<UserSlopes> users;
  std::size_t excluded = 0;
  double mean_before = 0.0;
  double mean_after = 0.0;
  double se_before = 0.0;
  double se_after = 0.0;
  double frac_positive_before = 0.0;
  double frac_negative_after = 0.0;
  double frac_both = 0.0;
};

inline BuildupResult buildup_dropoff(std::span<const Career> careers, std::size_t window = 10,
                                     std::size_t rank = 1) {
  if (window < 2) throw ArgumentError("buildup window must be at least 2");
  if (rank < 1) throw ArgumentError("rank is 1-based");
  BuildupResult out;
  out.window = window;
  out.mean_curve.assign(2 * window + 1, 0.0);
  std::vector<double> xb, xa;
  for (std::size_t d = window; d >= 1; --d) xb.push_back(-static_cast<double>(d));
  for (std::size_t d = 1; d <= window; ++d) xa.push_back(static_cast<double>(d));
  for (const auto& c : careers) {
    if (c.size() < rank) {
      ++out.excluded;
      continue;
    }
    const std::size_t p = top_k_positions(c, rank)[rank - 1];
    if (p <= window || p + window > c.size()) {
      ++out.excluded;
      continue;
    }
    std::vector<double> yb, ya;
    for (std::size_t i = p - window; i < p; ++i) yb.push_back(static_cast<double>(c.at(i).retweet_count));
    for (std::size_t i = p + 1; i <= p + window; ++i) ya.push_back(static_cast<double>(c.at(i).retweet_count));
    for (std::size_t o = 0; o <= 2 * window; ++o)
      out.mean_curve[o] += static_cast<double>(c.at(p - window + o).retweet_count);
    out.users.push_back({c.user_id(), p, stats::ols_line(xb, yb).slope, stats::ols_line(xa, ya).slope});
  }
  if (out.users.empty()) throw InsufficientData("no careers with a full window around the peak");
  const auto n = static_cast<double>(out.users.size());
  for (auto& v : out.mean_curve) v /= n;
  std::vector<double> before, after;
  std::size_t pos = 0, neg = 0, both = 0;
  for (const auto& u : out.users) {
    before.push_back(u.before);
    after.push_back(u.after);
    pos += u.before > 0.0;
    neg += u.after < 0.0;
    both += u.before > 0.0 && u.after < 0.0;
  }
  out.mean_before = stats::mean(before);
  out.mean_after = stats::mean(after);
  if (out.users.size() > 1) {
    out.se_before = stats::stddev(before) / std::sqrt(n);
    out.se_after = stats::stddev(after) / std::sqrt(n);
  }
  out.frac_positive_before = static_cast<double>(pos) / n;
  out.frac_negative_after = static_cast<double>(neg) / n;
  out.frac_both = static_cast<double>(both) / n;
  return out;
}

struct PeakContentCurve {
  std::size_t window = 0;
  std::vector<double> mean_entropy;  // topic entropy, or word entropy when topics are absent
  std::vector<double> mean_length;
  std::size_t users = 0;
  std::size_t excluded = 0;
  bool topic_based = true;
};

inline std::optional<double> tweet_entropy(const TweetRecord& t, bool topics) {
  if (topics) {
    if (!t.topic_dist) return std::nullopt;
    return stats::entropy_of_distribution(*t.topic_dist);
  }
  if (!t.tokens || t.tokens->empty()) return std::nullopt;
  return stats::shannon_entropy(*t.tokens);
}

inline PeakContentCurve entropy_around_peak(std::span<const Career> careers, std::size_t window = 10) {
  PeakContentCurve out;
  out.window = window;
  bool any_topics = false;
  for (const auto& c : careers)
    for (const auto& t : c.tweets())
      if (t.topic_dist) any_topics = true;
  out.topic_based = any_topics;
  const std::size_t width = 2 * window + 1;
  out.mean_entropy.assign(width, 0.0);
  out.mean_length.assign(width, 0.0);
  for (const auto& c : careers) {
    const std::size_t p = top_k_positions(c, 1)[0];
    if (p <= window || p + window > c.size()) {
      ++out.excluded;
      continue;
    }
    std::vector<double> h, len;
    for (std::size_t i = p - window; i <= p + window; ++i) {
      const auto& t = c.at(i);
      const auto e = tweet_entropy(t, any_topics);
      if (!e || !t.text_length) break;
      h.push_back(*e);
      len.push_back(static_cast<double>(*t.text_length));
    }
    if (h.size() != width) {
      ++out.excluded;
      continue;
    }
    for (std::size_t o = 0; o < width; ++o) {
      out.mean_entropy[o] += h[o];
      out.mean_length[o] += len[o];
    }
    ++out.users;
  }
  if (out.users == 0) throw Unavailable("no careers with content data around the peak");
  for (std::size_t o = 0; o < width; ++o) {
    out.mean_entropy[o] /= static_cast<double>(out.users);
    out.mean_length[o] /= static_cast<double>(out.users);
  }
  return out;
}

}  // namespace hotstreak

#endif  // HOTSTREAK_WINDOWS_HPP

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

#ifndef HOTSTREAK_MODEL_HPP
#define HOTSTREAK_MODEL_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "hotstreak/common.hpp"

namespace hotstreak {

struct TweetFlags {
  bool is_retweet = false;
  bool is_reply = false;
  bool has_mention = false;
  bool has_hashtag = false;
  bool has_url = false;
  bool has_media = false;

  friend bool operator==(const TweetFlags&, const TweetFlags&) = default;
};

struct Retweet {
  std::string user;
  std::int64_t timestamp = 0;

  friend bool operator==(const Retweet&, const Retweet&) = default;
};

using TokenCounts = std::map<std::string, std::int64_t>;

struct TweetRecord {
  std::size_t index = 0;  // 1-based, assigned by Career
  std::int64_t timestamp = 0;
  std::int64_t retweet_count = 0;
  std::optional<TweetFlags> flags;
  std::optional<std::int64_t> text_length;
  std::optional<TokenCounts> tokens;
  std::optional<std::vector<double>> topic_dist;
  std::optional<double> sentiment;
  std::optional<std::vector<Retweet>> retweeters;

  friend bool operator==(const TweetRecord&, const TweetRecord&) = default;
};

struct ActivityEvent {
  std::int64_t timestamp = 0;
  std::string kind;  // "tweet", "retweet", "reply", ...

  friend bool operator==(const ActivityEvent&, const ActivityEvent&) = default;
};

// A user's ordered sequence of original tweets. Immutable once built; the
// constructor assigns indices 1..N and rejects malformed input with
// StructuralError.
class Career {
 public:
  Career(std::string user_id, std::vector<TweetRecord> tweets,
         std::optional<std::vector<ActivityEvent>> activity = std::nullopt)
      : user_id_(std::move(user_id)), tweets_(std::move(tweets)), activity_(std::move(activity)) {
    if (tweets_.empty()) throw StructuralError("career '" + user_id_ + "' has no tweets");
    for (std::size_t i = 0; i < tweets_.size(); ++i) {
      auto& t = tweets_[i];
      t.index = i + 1;
      if (i > 0 && t.timestamp < tweets_[i - 1].timestamp)
        throw StructuralError("career '" + user_id_ + "': timestamps decrease at tweet " +
                              std::to_string(i + 1));
      if (t.retweet_count < 0)
        throw StructuralError("career '" + user_id_ + "': negative retweet count at tweet " +
                              std::to_string(i + 1));
      if (t.text_length && *t.text_length < 0)
        throw StructuralError("career '" + user_id_ + "': negative text length");
      if (t.topic_dist) {
        double total = 0.0;
        for (double p : *t.topic_dist) {
          if (!(p >= 0.0)) throw StructuralError("career '" + user_id_ + "': negative topic weight");
          total += p;
        }
        if (std::abs(total - 1.0) > 1e-9)
          throw StructuralError("career '" + user_id_ + "': topic distribution does not sum to 1");
      }
    }
    if (activity_) {
      for (std::size_t i = 1; i < activity_->size(); ++i)
        if ((*activity_)[i].timestamp < (*activity_)[i - 1].timestamp)
          throw StructuralError("career '" + user_id_ + "': activity timestamps decrease");
    }
  }

  const std::string& user_id() const { return user_id_; }
  const std::vector<TweetRecord>& tweets() const { return tweets_; }
  const std::optional<std::vector<ActivityEvent>>& activity() const { return activity_; }
  std::size_t size() const { return tweets_.size(); }

  // 1-based access.
  const TweetRecord& at(std::size_t index) const {
    if (index < 1 || index > tweets_.size())
      throw ArgumentError("tweet index " + std::to_string(index) + " outside 1.." +
                          std::to_string(tweets_.size()));
    return tweets_[index - 1];
  }

  std::vector<double> retweet_series() const {
    std::vector<double> out;
    out.reserve(tweets_.size());
    for (const auto& t : tweets_) out.push_back(static_cast<double>(t.retweet_count));
    return out;
  }

  std::int64_t total_retweets() const {
    std::int64_t s = 0;
    for (const auto& t : tweets_) s += t.retweet_count;
    return s;
  }

  friend bool operator==(const Career&, const Career&) = default;

 private:
  std::string user_id_;
  std::vector<TweetRecord> tweets_;
  std::optional<std::vector<ActivityEvent>> activity_;
};

struct CareerFilter {
  std::int64_t min_tweets = 0;
  std::int64_t max_tweets = std::numeric_limits<std::int64_t>::max();
  std::int64_t min_top_retweets = 50;
};

enum class FilterRule { kNone, kMinTweets, kMaxTweets, kMinTopRetweets };

inline const char* to_string(FilterRule r) {
  switch (r) {
    case FilterRule::kNone: return "accepted";
    case FilterRule::kMinTweets: return "min_tweets";
    case FilterRule::kMaxTweets: return "max_tweets";
    case FilterRule::kMinTopRetweets: return "min_top_retweets";
  }
  return "unknown";
}

struct FilterResult {
  bool accepted = true;
  FilterRule violated = FilterRule::kNone;
};

inline FilterResult validate_career(const Career& career, const CareerFilter& filter) {
  if (filter.min_tweets < 0 || filter.max_tweets < 0 || filter.min_top_retweets < 0 ||
      filter.min_tweets > filter.max_tweets)
    throw ArgumentError("invalid career filter bounds");
  const auto n = static_cast<std::int64_t>(career.size());
  if (n < filter.min_tweets) return {false, FilterRule::kMinTweets};
  if (n > filter.max_tweets) return {false, FilterRule::kMaxTweets};
  std::int64_t top = 0;
  for (const auto& t : career.tweets()) top = std::max(top, t.retweet_count);
  if (top < filter.min_top_retweets) return {false, FilterRule::kMinTopRetweets};
  return {};
}

// Indices of the k largest values in descending order; equal values rank the
// earlier index first.
inline std::vector<std::size_t> top_k_of(const std::vector<double>& values, std::size_t k) {
  if (k < 1 || k > values.size())
    throw ArgumentError("k=" + std::to_string(k) + " outside 1.." + std::to_string(values.size()));
  std::vector<std::size_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  auto before = [&](std::size_t a, std::size_t b) {
    if (values[a] != values[b]) return values[a] > values[b];
    return a < b;
  };
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(), before);
  idx.resize(k);
  for (auto& i : idx) ++i;
  return idx;
}

// P(T_1)..P(T_k).
inline std::vector<std::size_t> top_k_positions(const Career& career, std::size_t k) {
  return top_k_of(career.retweet_series(), k);
}

// Permutes whole tweet records (count and content together) while keeping
// timestamps and indices in place. Retweet timestamps move with their tweet
// so the delay after posting is preserved.
inline Career shuffle_career(const Career& career, std::uint64_t seed) {
  const auto& src = career.tweets();
  std::vector<std::size_t> perm(src.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  for (std::size_t i = perm.size(); i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(perm[i - 1], perm[pick(rng)]);
  }
  std::vector<TweetRecord> out;
  out.reserve(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) {
    TweetRecord t = src[perm[i]];
    const std::int64_t shift = src[i].timestamp - t.timestamp;
    t.timestamp = src[i].timestamp;
    if (t.retweeters)
      for (auto& r : *t.retweeters) r.timestamp += shift;
    out.push_back(std::move(t));
  }
  return Career(career.user_id(), std::move(out), career.activity());
}

inline std::int64_t week_of(const Career& career, std::size_t index) {
  const auto& t = career.at(index);
  const std::int64_t dt = t.timestamp - career.tweets().front().timestamp;
  return dt / kSecondsPerWeek;
}

// Career length in whole weeks (week of the last tweet).
inline std::int64_t career_weeks(const Career& career) { return week_of(career, career.size()); }

}  // namespace hotstreak

#endif  // HOTSTREAK_MODEL_HPP

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

#include <algorithm>
#include <map>
#include <random>
#include <utility>
#include <vector>

#include "hotstreak/model.hpp"
#include "test_util.hpp"

namespace hotstreak {
namespace {

using testing::career_from_counts;

std::vector<std::int64_t> counts_of(const Career& c) {
  std::vector<std::int64_t> out;
  for (const auto& t : c.tweets()) out.push_back(t.retweet_count);
  return out;
}

TEST(ValidateCareer, AcceptsPaperBand) {
  std::vector<std::int64_t> counts(2500, 3);
  counts[100] = 120;
  const auto c = career_from_counts(counts);
  const auto r = validate_career(c, {2000, 3200, 50});
  EXPECT_TRUE(r.accepted);
}

TEST(ValidateCareer, DegenerateBoundsAccept) {
  const auto c = career_from_counts({0});
  EXPECT_TRUE(validate_career(c, {0, 10, 0}).accepted);
}

TEST(ValidateCareer, RejectsBelowTopRetweetBoundary) {
  std::vector<std::int64_t> counts(2500, 1);
  counts[7] = 49;
  const auto r = validate_career(career_from_counts(counts), {2000, 3200, 50});
  EXPECT_FALSE(r.accepted);
  EXPECT_EQ(r.violated, FilterRule::kMinTopRetweets);
}

TEST(ValidateCareer, ReportsFirstViolatedRule) {
  const auto c = career_from_counts({1, 2});
  EXPECT_EQ(validate_career(c, {5, 10, 50}).violated, FilterRule::kMinTweets);
  EXPECT_EQ(validate_career(c, {0, 1, 0}).violated, FilterRule::kMaxTweets);
  EXPECT_THROW(validate_career(c, {10, 5, 0}), ArgumentError);
}

TEST(Career, StructuralErrorsAreDistinct) {
  std::vector<TweetRecord> tweets(2);
  tweets[0].timestamp = 100;
  tweets[1].timestamp = 50;
  EXPECT_THROW(Career("x", tweets), StructuralError);
  EXPECT_THROW(Career("x", {}), StructuralError);
  tweets[1].timestamp = 200;
  tweets[1].topic_dist = std::vector<double>{0.5, 0.6};
  EXPECT_THROW(Career("x", tweets), StructuralError);
  tweets[1].topic_dist = std::vector<double>{0.5, 0.5};
  const Career ok("x", tweets);
  EXPECT_EQ(ok.at(1).index, 1u);
  EXPECT_EQ(ok.at(2).index, 2u);
}

TEST(TopK, TieBrokenByEarlierIndex) {
  const auto c = career_from_counts({5, 9, 9, 1});
  EXPECT_EQ(top_k_positions(c, 2), (std::vector<std::size_t>{2, 3}));
}

TEST(TopK, StrictlyIncreasing) {
  const auto c = career_from_counts({1, 2, 3});
  EXPECT_EQ(top_k_positions(c, 3), (std::vector<std::size_t>{3, 2, 1}));
}

TEST(TopK, KOutOfRange) {
  const auto c = career_from_counts({1, 2, 3});
  EXPECT_THROW(top_k_positions(c, 4), ArgumentError);
  EXPECT_THROW(top_k_positions(c, 0), ArgumentError);
}

TEST(TopK, MatchesFullSortOracle) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<std::int64_t> d(0, 50);
  std::vector<std::int64_t> counts(1000);
  for (auto& v : counts) v = d(rng);
  const auto c = career_from_counts(counts);

  std::vector<std::pair<std::int64_t, std::int64_t>> keyed;
  for (std::size_t i = 0; i < counts.size(); ++i)
    keyed.emplace_back(counts[i], -static_cast<std::int64_t>(i + 1));
  std::sort(keyed.rbegin(), keyed.rend());
  std::vector<std::size_t> oracle;
  for (std::size_t r = 0; r < 5; ++r) oracle.push_back(static_cast<std::size_t>(-keyed[r].second));
  EXPECT_EQ(top_k_positions(c, 5), oracle);
}

TEST(TopK, PrefixProperty) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<std::int64_t> d(0, 5);
  std::vector<std::int64_t> counts(60);
  for (auto& v : counts) v = d(rng);
  const auto c = career_from_counts(counts);
  const auto all = top_k_positions(c, c.size());
  for (std::size_t k = 1; k <= c.size(); ++k) {
    const auto part = top_k_positions(c, k);
    EXPECT_TRUE(std::equal(part.begin(), part.end(), all.begin()));
  }
}

TEST(Shuffle, Singleton) {
  const auto c = career_from_counts({7});
  EXPECT_EQ(counts_of(shuffle_career(c, 123)), (std::vector<std::int64_t>{7}));
}

TEST(Shuffle, DeterministicPerSeed) {
  const auto c = career_from_counts({1, 2, 3});
  EXPECT_EQ(shuffle_career(c, 42), shuffle_career(c, 42));
}

TEST(Shuffle, KeepsTimestampsAndMultiset) {
  std::vector<std::int64_t> counts = {4, 4, 0, 9, 1, 1, 7, 3};
  const auto c = career_from_counts(counts);
  const auto s = shuffle_career(c, 5);
  for (std::size_t i = 1; i <= c.size(); ++i) {
    EXPECT_EQ(s.at(i).timestamp, c.at(i).timestamp);
    EXPECT_EQ(s.at(i).index, i);
  }
  auto a = counts_of(s);
  std::sort(a.begin(), a.end());
  std::sort(counts.begin(), counts.end());
  EXPECT_EQ(a, counts);
}

TEST(Shuffle, RetweetDelaysMoveWithTweet) {
  std::vector<TweetRecord> tweets(3);
  for (int i = 0; i < 3; ++i) {
    tweets[i].timestamp = 1000 * (i + 1);
    tweets[i].retweet_count = i + 1;
    tweets[i].retweeters = std::vector<Retweet>{{"r" + std::to_string(i), 1000 * (i + 1) + 10 * (i + 1)}};
  }
  const Career c("u", tweets);
  const auto s = shuffle_career(c, 3);
  for (const auto& t : s.tweets()) {
    const auto delay = t.retweeters->front().timestamp - t.timestamp;
    EXPECT_EQ(delay, 10 * t.retweet_count);
  }
}

// Chi-square over all 24 orderings of 4 tweets; critical value for df=23 at
// alpha=0.01 is 41.638.
TEST(Shuffle, PermutationsUniform) {
  const auto c = career_from_counts({1, 2, 3, 4});
  std::map<std::vector<std::int64_t>, int> freq;
  constexpr int kTrials = 10000;
  for (int s = 0; s < kTrials; ++s) ++freq[counts_of(shuffle_career(c, static_cast<std::uint64_t>(s)))];
  ASSERT_EQ(freq.size(), 24u);
  const double expected = kTrials / 24.0;
  double chi2 = 0.0;
  for (const auto& [perm, n] : freq) chi2 += (n - expected) * (n - expected) / expected;
  EXPECT_LT(chi2, 41.638);
}

TEST(Shuffle, DistinctSeedsDistinctPermutations) {
  const auto c = career_from_counts({1, 2, 3, 4, 5, 6, 7, 8, 9, 10});
  int distinct = 0;
  for (std::uint64_t s = 0; s < 100; ++s)
    if (counts_of(shuffle_career(c, 2 * s)) != counts_of(shuffle_career(c, 2 * s + 1))) ++distinct;
  EXPECT_GE(distinct, 99);
}

TEST(WeekOf, Boundaries) {
  std::vector<TweetRecord> tweets(3);
  tweets[0].timestamp = 1000;
  tweets[1].timestamp = 1000 + 604799;
  tweets[2].timestamp = 1000 + 604800;
  const Career c("u", tweets);
  EXPECT_EQ(week_of(c, 1), 0);
  EXPECT_EQ(week_of(c, 2), 0);
  EXPECT_EQ(week_of(c, 3), 1);
  EXPECT_THROW(week_of(c, 4), ArgumentError);
  EXPECT_THROW(week_of(c, 0), ArgumentError);
}

TEST(WeekOf, MatchesFloorDivisionAndIsMonotone) {
  std::mt19937_64 rng(3);
  std::exponential_distribution<double> gap(1.0 / 40000.0);
  std::vector<TweetRecord> tweets(500);
  std::int64_t ts = 1'400'000'000;
  for (auto& t : tweets) {
    ts += static_cast<std::int64_t>(gap(rng));
    t.timestamp = ts;
  }
  const Career c("u", tweets);
  std::int64_t prev = 0;
  for (std::size_t i = 1; i <= c.size(); ++i) {
    const std::int64_t dt = tweets[i - 1].timestamp - tweets[0].timestamp;
    EXPECT_EQ(week_of(c, i), dt / 604800);
    EXPECT_GE(week_of(c, i), prev);
    prev = week_of(c, i);
  }
}

}  // namespace
}  // namespace hotstreak

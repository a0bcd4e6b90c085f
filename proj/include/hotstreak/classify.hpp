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

#ifndef HOTSTREAK_CLASSIFY_HPP
#define HOTSTREAK_CLASSIFY_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "hotstreak/common.hpp"
#include "hotstreak/followers.hpp"
#include "hotstreak/model.hpp"
#include "hotstreak/parallel.hpp"
#include "hotstreak/stats.hpp"
#include "hotstreak/streaks.hpp"

namespace hotstreak::classify {

enum class FeatureGroup { kContent, kNetwork };

struct FeatureInfo {
  const char* name;
  FeatureGroup group;
};

inline constexpr std::array<FeatureInfo, 15> kFeatures = {{
    {"retweet_fraction", FeatureGroup::kContent},
    {"reply_fraction", FeatureGroup::kContent},
    {"mention_fraction", FeatureGroup::kContent},
    {"hashtag_fraction", FeatureGroup::kContent},
    {"url_fraction", FeatureGroup::kContent},
    {"media_fraction", FeatureGroup::kContent},
    {"mean_length", FeatureGroup::kContent},
    {"word_entropy", FeatureGroup::kContent},
    {"topic_entropy", FeatureGroup::kContent},
    {"mean_sentiment", FeatureGroup::kContent},
    {"tweet_count", FeatureGroup::kContent},
    {"follower_gain", FeatureGroup::kNetwork},
    {"mean_retweeter_activity", FeatureGroup::kNetwork},
    {"first_time_retweeters", FeatureGroup::kNetwork},
    {"active_prior_retweeters", FeatureGroup::kNetwork},
}};

inline constexpr std::size_t kNumFeatures = kFeatures.size();

inline std::size_t feature_index(std::string_view name) {
  for (std::size_t f = 0; f < kNumFeatures; ++f)
    if (name == kFeatures[f].name) return f;
  throw ArgumentError("unknown feature '" + std::string(name) + "'");
}

struct WeekFeatures {
  std::string user_id;
  std::int64_t week = 0;
  std::array<std::optional<double>, kNumFeatures> values;
  bool label = false;

  std::optional<double> get(std::string_view name) const { return values[feature_index(name)]; }
};

namespace detail {

struct RetweeterWeeks {
  std::map<std::int64_t, std::map<std::string, std::int64_t>> by_week;  // week -> user -> retweets
  std::map<std::string, std::int64_t> first_week;
  bool present = false;
};

inline std::int64_t floor_week(std::int64_t dt) {
  return dt >= 0 ? dt / kSecondsPerWeek : -((-dt + kSecondsPerWeek - 1) / kSecondsPerWeek);
}

inline RetweeterWeeks retweeter_weeks(const Career& career) {
  RetweeterWeeks rw;
  const auto t0 = career.tweets().front().timestamp;
  for (const auto& t : career.tweets()) {
    if (!t.retweeters) continue;
    rw.present = true;
    for (const auto& r : *t.retweeters) {
      const auto w = floor_week(r.timestamp - t0);
      ++rw.by_week[w][r.user];
      auto [it, inserted] = rw.first_week.try_emplace(r.user, w);
      if (!inserted) it->second = std::min(it->second, w);
    }
  }
  return rw;
}

inline WeekFeatures features_for_week(const Career& career, const std::vector<HotStreak>& streaks,
                                      const FollowerFit* fit, std::int64_t week,
                                      std::span<const std::size_t> tweet_indices,
                                      const RetweeterWeeks& rw) {
  WeekFeatures wf;
  wf.user_id = career.user_id();
  wf.week = week;
  auto set = [&](const char* name, double v) { wf.values[feature_index(name)] = v; };

  for (const auto& s : streaks)
    for (std::size_t i = s.start_index; i <= s.end_index && !wf.label; ++i)
      if (week_of(career, i) == week) wf.label = true;

  const auto n = tweet_indices.size();
  set("tweet_count", static_cast<double>(n));
  const auto t0 = career.tweets().front().timestamp;
  const auto w_start = t0 + week * kSecondsPerWeek;
  const auto w_end = w_start + kSecondsPerWeek;

  if (n > 0) {
    bool all_flags = true, all_len = true, all_sent = true, all_tokens = true, all_topics = true;
    std::array<double, 6> flag_sum{};
    double len = 0, sent = 0;
    TokenCounts pooled;
    std::vector<double> topic_mean;
    for (auto i : tweet_indices) {
      const auto& t = career.at(i);
      if (t.flags) {
        const std::array<bool, 6> f = {t.flags->is_retweet, t.flags->is_reply,  t.flags->has_mention,
                                       t.flags->has_hashtag, t.flags->has_url, t.flags->has_media};
        for (std::size_t k = 0; k < 6; ++k) flag_sum[k] += f[k] ? 1.0 : 0.0;
      } else {
        all_flags = false;
      }
      if (t.text_length) len += static_cast<double>(*t.text_length); else all_len = false;
      if (t.sentiment) sent += *t.sentiment; else all_sent = false;
      if (t.tokens) {
        for (const auto& [word, c] : *t.tokens) pooled[word] += c;
      } else {
        all_tokens = false;
      }
      if (t.topic_dist && (topic_mean.empty() || topic_mean.size() == t.topic_dist->size())) {
        topic_mean.resize(t.topic_dist->size(), 0.0);
        for (std::size_t d = 0; d < topic_mean.size(); ++d) topic_mean[d] += (*t.topic_dist)[d];
      } else {
        all_topics = false;
      }
    }
    const auto dn = static_cast<double>(n);
    if (all_flags) {
      const char* names[6] = {"retweet_fraction", "reply_fraction", "mention_fraction",
                              "hashtag_fraction", "url_fraction",   "media_fraction"};
      for (std::size_t k = 0; k < 6; ++k) set(names[k], flag_sum[k] / dn);
    }
    if (all_len) set("mean_length", len / dn);
    if (all_sent) set("mean_sentiment", sent / dn);
    std::int64_t total = 0;
    for (const auto& [word, c] : pooled) total += c;
    if (all_tokens && total > 0) set("word_entropy", stats::shannon_entropy(pooled));
    if (all_topics && !topic_mean.empty()) set("topic_entropy", stats::entropy_of_distribution(topic_mean));
  }

  // The user's own retweets come from the activity stream when present.
  if (career.activity()) {
    std::size_t events = 0, retweets = 0;
    for (const auto& e : *career.activity()) {
      if (e.timestamp < w_start || e.timestamp >= w_end) continue;
      ++events;
      if (e.kind == "retweet") ++retweets;
    }
    if (events > 0) set("retweet_fraction", static_cast<double>(retweets) / static_cast<double>(events));
  }

  if (fit != nullptr)
    set("follower_gain", follower_gain(*fit, static_cast<double>(w_start), static_cast<double>(w_end)));

  if (rw.present) {
    std::int64_t first = 0, prior = 0, retweets = 0;
    if (auto it = rw.by_week.find(week); it != rw.by_week.end()) {
      for (const auto& [user, c] : it->second) {
        retweets += c;
        if (rw.first_week.at(user) == week) ++first; else ++prior;
      }
    }
    const auto active = first + prior;
    set("first_time_retweeters", static_cast<double>(first));
    set("active_prior_retweeters", static_cast<double>(prior));
    set("mean_retweeter_activity", active > 0 ? static_cast<double>(retweets) / static_cast<double>(active) : 0.0);
  }
  return wf;
}

}  // namespace detail

inline WeekFeatures extract_week_features(const Career& career, const std::vector<HotStreak>& streaks,
                                          const FollowerFit* fit, std::int64_t week) {
  if (week < 0 || week > career_weeks(career)) throw ArgumentError("week outside career span");
  std::vector<std::size_t> idx;
  for (std::size_t i = 1; i <= career.size(); ++i)
    if (week_of(career, i) == week) idx.push_back(i);
  return detail::features_for_week(career, streaks, fit, week, idx, detail::retweeter_weeks(career));
}

// One sample per week from week 0 through the last tweet's week.
inline std::vector<WeekFeatures> extract_career_weeks(const Career& career, const std::vector<HotStreak>& streaks,
                                                      const FollowerFit* fit) {
  const auto weeks = career_weeks(career);
  std::vector<std::vector<std::size_t>> idx(static_cast<std::size_t>(weeks + 1));
  for (std::size_t i = 1; i <= career.size(); ++i) idx[static_cast<std::size_t>(week_of(career, i))].push_back(i);
  const auto rw = detail::retweeter_weeks(career);
  std::vector<WeekFeatures> out;
  out.reserve(idx.size());
  for (std::int64_t w = 0; w <= weeks; ++w)
    out.push_back(detail::features_for_week(career, streaks, fit, w, idx[static_cast<std::size_t>(w)], rw));
  return out;
}

inline std::vector<WeekFeatures> balance_dataset(std::span<const WeekFeatures> samples, std::uint64_t seed) {
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < samples.size(); ++i) (samples[i].label ? pos : neg).push_back(i);
  if (pos.empty() || neg.empty()) throw ArgumentError("balance_dataset needs both classes");
  auto& major = pos.size() > neg.size() ? pos : neg;
  const auto keep = std::min(pos.size(), neg.size());
  std::mt19937_64 rng(seed);
  std::shuffle(major.begin(), major.end(), rng);
  major.resize(keep);
  std::vector<std::size_t> kept(pos);
  kept.insert(kept.end(), neg.begin(), neg.end());
  std::sort(kept.begin(), kept.end());
  std::vector<WeekFeatures> out;
  out.reserve(kept.size());
  for (auto i : kept) out.push_back(samples[i]);
  return out;
}

struct TrainOptions {
  double l2 = 1e-3;
  double lr = 1.0;  // fraction of the inverse Lipschitz bound of the loss gradient
  std::size_t epochs = 500;
};

struct LogisticModel {
  std::vector<std::string> feature_names;
  std::vector<double> means;
  std::vector<double> scales;
  std::vector<double> weights;
  double bias = 0.0;
  TrainOptions options;

  double predict_proba(const WeekFeatures& s) const;
  bool predict(const WeekFeatures& s) const { return predict_proba(s) >= 0.5; }
};

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Mean log loss plus (l2 / 2) |w|^2; the bias is not penalized.
inline double log_loss(const Eigen::VectorXd& w, double b, const Eigen::MatrixXd& x,
                       const Eigen::VectorXd& y, double l2) {
  const Eigen::VectorXd z = (x * w).array() + b;
  double loss = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    // log(1 + e^z) - y z, evaluated stably
    const double zi = z[i];
    loss += (zi > 0.0 ? zi + std::log1p(std::exp(-zi)) : std::log1p(std::exp(zi))) - y[i] * zi;
  }
  return loss / static_cast<double>(z.size()) + 0.5 * l2 * w.squaredNorm();
}

inline std::pair<Eigen::VectorXd, double> log_loss_gradient(const Eigen::VectorXd& w, double b,
                                                            const Eigen::MatrixXd& x,
                                                            const Eigen::VectorXd& y, double l2) {
  const Eigen::VectorXd z = (x * w).array() + b;
  Eigen::VectorXd r(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) r[i] = sigmoid(z[i]) - y[i];
  const double n = static_cast<double>(z.size());
  Eigen::VectorXd gw = x.transpose() * r / n + l2 * w;
  return {gw, r.sum() / n};
}

namespace detail {

inline std::vector<std::size_t> all_features() {
  std::vector<std::size_t> f(kNumFeatures);
  std::iota(f.begin(), f.end(), 0);
  return f;
}

inline Eigen::MatrixXd design(std::span<const WeekFeatures> samples, std::span<const std::size_t> cols,
                              const std::vector<double>& means, const std::vector<double>& scales) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(samples.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < samples.size(); ++i)
    for (std::size_t c = 0; c < cols.size(); ++c) {
      const auto& v = samples[i].values[cols[c]];
      if (v && !std::isfinite(*v)) throw ArgumentError("non-finite feature value");
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = ((v ? *v : means[c]) - means[c]) / scales[c];
    }
  return x;
}

}  // namespace detail

inline LogisticModel train_classifier(std::span<const WeekFeatures> samples, const TrainOptions& opt = {},
                                      std::span<const std::size_t> columns = {}) {
  if (samples.empty()) throw InsufficientData("no training samples");
  if (!(opt.l2 >= 0.0) || !(opt.lr > 0.0)) throw ArgumentError("invalid training options");
  const auto all = detail::all_features();
  const std::span<const std::size_t> cols = columns.empty() ? std::span<const std::size_t>(all) : columns;

  LogisticModel m;
  m.options = opt;
  for (auto c : cols) {
    double sum = 0.0, sq = 0.0;
    std::size_t n = 0;
    for (const auto& s : samples) {
      const auto& v = s.values[c];
      if (!v) continue;
      if (!std::isfinite(*v)) throw ArgumentError("non-finite feature value");
      sum += *v;
      ++n;
    }
    const double mean = n > 0 ? sum / static_cast<double>(n) : 0.0;
    for (const auto& s : samples)
      if (s.values[c]) sq += (*s.values[c] - mean) * (*s.values[c] - mean);
    const double sd = n > 0 ? std::sqrt(sq / static_cast<double>(n)) : 0.0;
    m.feature_names.emplace_back(kFeatures[c].name);
    m.means.push_back(mean);
    m.scales.push_back(sd > 0.0 ? sd : 1.0);
  }
  const Eigen::MatrixXd x = detail::design(samples, cols, m.means, m.scales);
  Eigen::VectorXd y(x.rows());
  for (std::size_t i = 0; i < samples.size(); ++i) y[static_cast<Eigen::Index>(i)] = samples[i].label ? 1.0 : 0.0;

  // Gradient is Lipschitz with constant at most (|x|^2 + 1) / 4 averaged plus l2.
  double sq = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) sq += x.row(i).squaredNorm() + 1.0;
  const double lipschitz = 0.25 * sq / static_cast<double>(x.rows()) + opt.l2;
  const double step = opt.lr / lipschitz;

  Eigen::VectorXd w = Eigen::VectorXd::Zero(x.cols());
  double b = 0.0;
  for (std::size_t e = 0; e < opt.epochs; ++e) {
    const auto [gw, gb] = log_loss_gradient(w, b, x, y, opt.l2);
    w -= step * gw;
    b -= step * gb;
  }
  m.weights.assign(w.data(), w.data() + w.size());
  m.bias = b;
  return m;
}

inline double LogisticModel::predict_proba(const WeekFeatures& s) const {
  double z = bias;
  for (std::size_t c = 0; c < feature_names.size(); ++c) {
    const auto& v = s.values[feature_index(feature_names[c])];
    z += weights[c] * ((v ? *v : means[c]) - means[c]) / scales[c];
  }
  return sigmoid(z);
}

inline double accuracy(const LogisticModel& m, std::span<const WeekFeatures> samples) {
  if (samples.empty()) throw InsufficientData("accuracy of an empty set");
  std::size_t hit = 0;
  for (const auto& s : samples) hit += m.predict(s) == s.label;
  return static_cast<double>(hit) / static_cast<double>(samples.size());
}

// Fold per sample; all samples of a user share a fold, and per-class counts
// are spread as evenly as the user grouping allows.
inline std::vector<std::size_t> assign_folds(std::span<const WeekFeatures> samples, std::size_t folds,
                                             std::uint64_t seed) {
  if (folds < 2) throw ArgumentError("need at least 2 folds");
  std::size_t pos = 0;
  for (const auto& s : samples) pos += s.label;
  const std::size_t neg = samples.size() - pos;
  if (pos < folds || neg < folds)
    throw InsufficientData("need at least " + std::to_string(folds) + " samples per class");

  std::map<std::string, std::array<std::size_t, 2>> per_user;
  for (const auto& s : samples) ++per_user[s.user_id][s.label ? 1 : 0];
  if (per_user.size() < folds)
    throw InsufficientData("need at least " + std::to_string(folds) + " users for grouped folds");
  std::vector<std::string> users;
  for (const auto& [u, c] : per_user) users.push_back(u);
  std::mt19937_64 rng(seed);
  std::shuffle(users.begin(), users.end(), rng);
  std::stable_sort(users.begin(), users.end(), [&](const std::string& a, const std::string& b) {
    const auto& ca = per_user[a];
    const auto& cb = per_user[b];
    return ca[0] + ca[1] > cb[0] + cb[1];
  });

  const std::array<double, 2> target = {static_cast<double>(neg) / static_cast<double>(folds),
                                        static_cast<double>(pos) / static_cast<double>(folds)};
  std::vector<std::array<double, 2>> load(folds, {0.0, 0.0});
  std::map<std::string, std::size_t> fold_of_user;
  for (const auto& u : users) {
    const auto& c = per_user[u];
    std::size_t best = 0;
    double best_cost = std::numeric_limits<double>::infinity();
    for (std::size_t f = 0; f < folds; ++f) {
      double cost = 0.0;
      for (int k = 0; k < 2; ++k) {
        const double after = load[f][k] + static_cast<double>(c[k]) - target[k];
        const double before = load[f][k] - target[k];
        cost += after * after - before * before;
      }
      if (cost < best_cost) {
        best_cost = cost;
        best = f;
      }
    }
    load[best][0] += static_cast<double>(c[0]);
    load[best][1] += static_cast<double>(c[1]);
    fold_of_user[u] = best;
  }
  std::vector<std::size_t> out(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) out[i] = fold_of_user[samples[i].user_id];
  return out;
}

enum class FeatureSet { kContent, kNetwork, kCombined };

inline const char* to_string(FeatureSet s) {
  switch (s) {
    case FeatureSet::kContent: return "content";
    case FeatureSet::kNetwork: return "network";
    case FeatureSet::kCombined: return "combined";
  }
  return "?";
}

inline std::vector<std::size_t> feature_columns(FeatureSet s) {
  std::vector<std::size_t> out;
  for (std::size_t f = 0; f < kNumFeatures; ++f) {
    const bool content = kFeatures[f].group == FeatureGroup::kContent;
    if (s == FeatureSet::kCombined || (s == FeatureSet::kContent) == content) out.push_back(f);
  }
  return out;
}

struct CvReport {
  FeatureSet set = FeatureSet::kCombined;
  std::vector<double> fold_accuracies;
  double mean = 0.0;
  double sd = 0.0;
  std::map<std::string, double> importance;  // mean |standardized weight| over folds
};

struct CvResult {
  std::vector<std::size_t> fold_of;
  std::vector<CvReport> reports;  // content, network, combined
};

inline CvResult cross_validate(std::span<const WeekFeatures> samples, std::size_t folds = 10,
                               std::uint64_t seed = 0, const TrainOptions& opt = {},
                               std::size_t workers = 1) {
  CvResult out;
  out.fold_of = assign_folds(samples, folds, seed);
  std::vector<std::vector<WeekFeatures>> train(folds), test(folds);
  for (std::size_t i = 0; i < samples.size(); ++i)
    for (std::size_t f = 0; f < folds; ++f) (out.fold_of[i] == f ? test : train)[f].push_back(samples[i]);
  for (std::size_t f = 0; f < folds; ++f)
    if (test[f].empty()) throw InsufficientData("a fold received no samples");

  for (auto set : {FeatureSet::kContent, FeatureSet::kNetwork, FeatureSet::kCombined}) {
    const auto cols = feature_columns(set);
    std::vector<LogisticModel> models(folds);
    parallel_for(folds, workers, [&](std::size_t f) { models[f] = train_classifier(train[f], opt, cols); });
    CvReport r;
    r.set = set;
    for (std::size_t f = 0; f < folds; ++f) {
      r.fold_accuracies.push_back(accuracy(models[f], test[f]));
      for (std::size_t c = 0; c < cols.size(); ++c)
        r.importance[models[f].feature_names[c]] += std::abs(models[f].weights[c]) / static_cast<double>(folds);
    }
    r.mean = stats::mean(r.fold_accuracies);
    r.sd = stats::stddev(r.fold_accuracies);
    out.reports.push_back(std::move(r));
  }
  return out;
}

}  // namespace hotstreak::classify

#endif  // HOTSTREAK_CLASSIFY_HPP

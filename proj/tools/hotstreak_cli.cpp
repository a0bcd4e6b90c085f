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

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hotstreak/classify.hpp"
#include "hotstreak/followers.hpp"
#include "hotstreak/impact.hpp"
#include "hotstreak/io.hpp"
#include "hotstreak/model.hpp"
#include "hotstreak/parallel.hpp"
#include "hotstreak/segmentation.hpp"
#include "hotstreak/streaks.hpp"
#include "hotstreak/synth.hpp"
#include "hotstreak/windows.hpp"

namespace {

using namespace hotstreak;
using io::Cell;
using io::Json;
using io::Report;
using io::Table;

constexpr std::size_t kBatch = 256;

struct Common {
  std::string input;
  std::string snapshots;
  std::string output = "-";
  std::string format = "json";
  std::string plotdata;
  std::uint64_t seed = 0;
  std::size_t workers = 0;
  double alpha = kDefaultAlpha;
  double percentile = kDefaultPercentile;
  std::size_t min_len = 1;
  std::size_t shuffle_seeds = 0;
};

struct Options {
  Common common;
  // clustered
  std::size_t max_rank = 10;
  bool per_follower = false;
  bool relative = false;
  double gap_width = 0.1;
  // windows
  std::size_t window = 10;
  bool shuffled = false;
  // classify
  std::size_t folds = 10;
  double l2 = 1e-3;
  std::size_t epochs = 500;
  std::string model_out;
  // synth
  std::size_t users = 100;
  std::size_t n_tweets = 2500;
  double baseline = 2.0;
  double dispersion = 0.5;
  std::size_t streak_len = 50;
  double streak_boost = 8.0;
  bool cluster_top5 = false;
  bool tent = false;
  bool with_content = false;
  bool with_retweeters = false;
  bool with_activity = false;
  bool followers = false;
  double media_delta = 0.0;
  double reply_delta = 0.0;
  double entropy_delta = 0.0;
  std::string truth_out;
  std::string snapshots_out;
  std::string truth;
};

std::size_t workers_of(const Common& c) { return c.workers > 0 ? c.workers : default_workers(); }

Json config_echo(const std::vector<std::string>& argv, const CLI::App& sub) {
  Json j;
  j["argv"] = argv;
  Json opts = Json::object();
  for (const auto* opt : sub.get_options()) {
    if (opt->get_name() == "--help") continue;
    const auto name = opt->get_name();
    const auto& res = opt->results();
    if (opt->get_expected_min() == 0) {
      opts[name] = opt->count() > 0;
    } else if (!res.empty()) {
      opts[name] = res.back();
    } else {
      opts[name] = opt->get_default_str();
    }
  }
  j["options"] = opts;
  return j;
}

void emit(const Report& r, const Common& c) {
  const auto text = io::render_report(r, io::parse_format(c.format));
  if (c.output == "-")
    std::cout << text;
  else
    io::write_text(text, c.output);
}

Table error_table(const std::vector<io::LineError>& errors) {
  Table t;
  t.columns = {"line", "reason"};
  for (const auto& e : errors) {
    t.add({static_cast<std::int64_t>(e.line), e.reason});
    std::cerr << "warning: input line " << e.line << ": " << e.reason << '\n';
  }
  return t;
}

// Reads careers in batches, maps each through fn on the worker pool, and
// hands results to sink in input order.
template <typename R, typename Fn, typename Sink>
std::vector<io::LineError> for_each_career(const std::string& path, std::size_t workers, Fn fn, Sink sink) {
  io::CareerReader reader(path);
  std::vector<Career> batch;
  auto flush = [&]() {
    std::vector<std::optional<R>> out(batch.size());
    parallel_for(batch.size(), workers, [&](std::size_t i) { out[i] = fn(batch[i]); });
    for (std::size_t i = 0; i < batch.size(); ++i) sink(batch[i], std::move(*out[i]));
    batch.clear();
  };
  while (auto c = reader.next()) {
    batch.push_back(std::move(*c));
    if (batch.size() == kBatch) flush();
  }
  flush();
  return reader.errors();
}

std::vector<std::uint64_t> shuffle_seed_list(const Common& c) {
  std::vector<std::uint64_t> s(c.shuffle_seeds);
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = derive_seed(c.seed, static_cast<std::uint64_t>(i));
  return s;
}

struct FitCatalog {
  FitMap fits;
  Table table;
};

FitCatalog load_fits(const std::string& path, Table* errors_out) {
  FitCatalog out;
  out.table.columns = {"user_id", "status", "degree", "r_squared", "snapshots"};
  if (path.empty()) return out;
  const auto file = io::read_snapshots(path);
  if (errors_out) *errors_out = error_table(file.errors);
  for (const auto& [user, snaps] : file.users) {
    try {
      const auto fit = fit_follower_curve(snaps);
      out.fits.emplace(user, fit);
      out.table.add({user, std::string("ok"), std::int64_t{fit.degree}, fit.r_squared,
                     static_cast<std::int64_t>(snaps.points.size())});
    } catch (const FollowerFitError& e) {
      const std::string status =
          e.kind() == FollowerFitError::Kind::kInsufficientSnapshots ? "insufficient_snapshots" : "poor_fit";
      out.table.add({user, status, std::monostate{}, std::monostate{},
                     static_cast<std::int64_t>(snaps.points.size())});
    } catch (const ArgumentError& e) {
      out.table.add({user, std::string("invalid"), std::monostate{}, std::monostate{},
                     static_cast<std::int64_t>(snaps.points.size())});
    }
  }
  return out;
}

const FollowerFit* fit_for(const FitMap& fits, const std::string& user) {
  auto it = fits.find(user);
  return it == fits.end() ? nullptr : &it->second;
}

std::string join_sizes(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ";" : "") + std::to_string(v[i]);
  return s;
}

std::string join_reals(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ";" : "") + io::format_real(v[i]);
  return s;
}

struct NullStats {
  double mean = 0.0;
  double sd = 0.0;
  double z = 0.0;
};

NullStats null_stats(double observed, const std::vector<double>& null) {
  NullStats s;
  s.mean = stats::mean(null);
  s.sd = null.size() > 1 ? stats::stddev(null) : 0.0;
  const double diff = observed - s.mean;
  s.z = s.sd > 0.0 ? diff / s.sd : (diff == 0.0 ? 0.0 : std::copysign(INFINITY, diff));
  return s;
}

// ---- segment ----

int run_segment(const Options& o, Report& r) {
  Table seg;
  seg.columns = {"user_id", "n_tweets", "num_segments", "objective", "breakpoints", "levels"};
  const double alpha = o.common.alpha;
  const auto errors = for_each_career<Segmentation>(
      o.common.input, workers_of(o.common),
      [&](const Career& c) {
        const auto series = c.retweet_series();
        return fit_piecewise_constant(series, alpha);
      },
      [&](const Career& c, Segmentation s) {
        seg.add({c.user_id(), static_cast<std::int64_t>(c.size()), static_cast<std::int64_t>(s.num_segments()),
                 s.objective, join_sizes(s.breakpoints), join_reals(s.levels)});
      });
  r.tables["segments"] = std::move(seg);
  r.tables["input_errors"] = error_table(errors);
  return 0;
}

// ---- streaks ----

struct StreakResult {
  Segmentation seg;
  std::vector<HotStreak> streaks;
  StreakProfile profile;
  std::int64_t weeks = 0;
  std::int64_t first_week = -1;
  std::vector<char> null_has;  // per shuffle seed
};

int run_streaks(const Options& o, Report& r) {
  const auto& c0 = o.common;
  const auto seeds = shuffle_seed_list(c0);
  std::optional<std::map<std::string, std::vector<synth::TruthRange>>> truth;
  if (!o.truth.empty()) truth = io::read_truth(o.truth);

  Table profiles, streaks, detection;
  profiles.columns = {"user_id", "n_tweets", "career_weeks", "streak_count", "longest_len", "has_streak",
                      "influence_fraction", "first_streak_position", "first_streak_week", "threshold"};
  streaks.columns = {"user_id", "start_index", "end_index", "length", "level", "threshold"};
  detection.columns = {"user_id", "precision", "recall", "f1", "jaccard"};
  std::vector<ProfileWithAge> ages;
  std::size_t users = 0, with_streak = 0;
  double influence_sum = 0.0;
  std::vector<double> null_hits(seeds.size(), 0.0);
  double f1_sum = 0.0;
  std::size_t scored = 0;

  const auto errors = for_each_career<StreakResult>(
      c0.input, workers_of(c0),
      [&](const Career& c) {
        StreakResult s;
        const auto series = c.retweet_series();
        s.seg = fit_piecewise_constant(series, c0.alpha);
        s.streaks = detect_hot_streaks(c, s.seg, c0.percentile, c0.min_len);
        s.profile = streak_profile(c, s.streaks);
        s.weeks = career_weeks(c);
        if (!s.streaks.empty()) s.first_week = week_of(c, s.streaks.front().start_index);
        for (auto seed : seeds)
          s.null_has.push_back(
              has_streak(shuffle_career(c, derive_seed(seed, c.user_id())), c0.alpha, c0.percentile, kHasStreakMinLen));
        return s;
      },
      [&](const Career& c, StreakResult s) {
        ++users;
        // "has streak" always means longer than 10 tweets, whatever --min-len is.
        std::size_t longest_has = 0;
        for (const auto& h : detect_hot_streaks(c, s.seg, c0.percentile, kHasStreakMinLen))
          longest_has = std::max(longest_has, h.length());
        const bool has = longest_has > 0;
        with_streak += has;
        influence_sum += s.profile.influence_fraction;
        const double threshold = s.streaks.empty() ? percentile_nearest_rank(c.retweet_series(), c0.percentile)
                                                   : s.streaks.front().threshold;
        profiles.add({c.user_id(), static_cast<std::int64_t>(c.size()), s.weeks,
                      static_cast<std::int64_t>(s.profile.count), static_cast<std::int64_t>(s.profile.longest_len), has,
                      s.profile.influence_fraction,
                      s.profile.first_streak_position ? Cell{*s.profile.first_streak_position} : Cell{},
                      s.first_week >= 0 ? Cell{s.first_week} : Cell{}, threshold});
        for (const auto& h : s.streaks)
          streaks.add({c.user_id(), static_cast<std::int64_t>(h.start_index), static_cast<std::int64_t>(h.end_index),
                       static_cast<std::int64_t>(h.length()), h.level, h.threshold});
        for (std::size_t k = 0; k < seeds.size(); ++k) null_hits[k] += s.null_has[k];
        ages.push_back({s.profile, s.weeks});
        if (truth) {
          std::vector<synth::TruthRange> det;
          for (const auto& h : s.streaks) det.push_back({h.start_index, h.end_index});
          auto it = truth->find(c.user_id());
          const std::vector<synth::TruthRange> none;
          const auto sc = synth::score_detection(it == truth->end() ? none : it->second, det);
          detection.add({c.user_id(), sc.precision, sc.recall, sc.f1, sc.jaccard});
          f1_sum += sc.f1;
          ++scored;
        }
      });

  Table summary;
  summary.columns = {"metric", "value"};
  summary.add({std::string("users"), static_cast<std::int64_t>(users)});
  if (users > 0) {
    const double frac = static_cast<double>(with_streak) / static_cast<double>(users);
    summary.add({std::string("fraction_with_streak"), frac});
    summary.add({std::string("mean_influence_fraction"), influence_sum / static_cast<double>(users)});
    if (!seeds.empty()) {
      std::vector<double> null(seeds.size());
      for (std::size_t k = 0; k < seeds.size(); ++k) null[k] = null_hits[k] / static_cast<double>(users);
      const auto ns = null_stats(frac, null);
      summary.add({std::string("shuffled_fraction_mean"), ns.mean});
      summary.add({std::string("shuffled_fraction_sd"), ns.sd});
      summary.add({std::string("shuffle_z"), ns.z});
      summary.add({std::string("shuffle_seeds"), static_cast<std::int64_t>(seeds.size())});
    }
    if (scored > 0) summary.add({std::string("mean_f1"), f1_sum / static_cast<double>(scored)});
  }
  Table buckets;
  buckets.columns = {"lo_weeks", "hi_weeks", "users", "bin", "mass"};
  for (const auto& b : position_by_age_buckets(ages))
    for (std::size_t k = 0; k < kPositionBins; ++k)
      buckets.add({b.lo_weeks, b.hi_weeks, static_cast<std::int64_t>(b.users), static_cast<std::int64_t>(k), b.mass[k]});

  r.tables["profiles"] = std::move(profiles);
  r.tables["streaks"] = std::move(streaks);
  r.tables["summary"] = std::move(summary);
  r.tables["position_by_age"] = std::move(buckets);
  if (truth) r.tables["detection"] = std::move(detection);
  r.tables["input_errors"] = error_table(errors);
  return 0;
}

// ---- clustered ----

struct ClusterResult {
  TopPositions real;
  std::vector<TopPositions> null;
  std::optional<double> gap;
  std::vector<double> null_gap;
};

int run_clustered(const Options& o, Report& r) {
  const auto& c0 = o.common;
  if (o.per_follower && c0.snapshots.empty())
    throw ArgumentError("--normalize-per-follower requires --snapshots");
  if (o.max_rank < 2) throw ArgumentError("--max-rank must be at least 2");
  Table snapshot_errors;
  const auto fits = load_fits(c0.snapshots, &snapshot_errors);
  const auto seeds = shuffle_seed_list(c0);
  const auto kind = o.per_follower ? PositionKind::kPerFollower : PositionKind::kRaw;

  std::vector<TopPositions> real;
  std::vector<std::vector<TopPositions>> null(seeds.size());
  std::vector<double> gaps;
  std::vector<std::vector<double>> null_gaps(seeds.size());
  const auto errors = for_each_career<ClusterResult>(
      c0.input, workers_of(c0),
      [&](const Career& c) {
        ClusterResult res;
        const FollowerFit* fit = o.per_follower ? fit_for(fits.fits, c.user_id()) : nullptr;
        res.real = make_top_positions(c, o.max_rank, fit);
        if (c.size() >= 2) res.gap = normalized_gap(c);
        for (auto seed : seeds) {
          const auto s = shuffle_career(c, derive_seed(seed, c.user_id()));
          res.null.push_back(make_top_positions(s, o.max_rank, fit));
          if (c.size() >= 2) res.null_gap.push_back(normalized_gap(s));
        }
        return res;
      },
      [&](const Career&, ClusterResult res) {
        real.push_back(std::move(res.real));
        if (res.gap) gaps.push_back(*res.gap);
        for (std::size_t k = 0; k < seeds.size(); ++k) {
          null[k].push_back(std::move(res.null[k]));
          if (res.gap) null_gaps[k].push_back(res.null_gap[k]);
        }
      });

  Table corr;
  corr.columns = {"rank_a", "rank_b", "kind", "r", "users", "excluded", "shuffled_mean", "shuffled_sd", "z"};
  std::vector<io::PlotSeries> plots = {{"correlation_real", {}}, {"correlation_shuffled", {}}};
  for (std::size_t j = 2; j <= o.max_rank; ++j) {
    const auto pairs = collect_position_pairs(real, 1, j, kind, o.relative);
    if (pairs.first.size() < 3) {
      corr.add({std::int64_t{1}, static_cast<std::int64_t>(j), std::string(o.per_follower ? "per_follower" : "raw"),
                std::monostate{}, static_cast<std::int64_t>(pairs.first.size()),
                static_cast<std::int64_t>(pairs.excluded), std::monostate{}, std::monostate{}, std::monostate{}});
      continue;
    }
    const double rv = stats::pearson(pairs.first, pairs.second);
    Cell nm, nsd, z;
    if (!seeds.empty()) {
      std::vector<double> nv;
      for (const auto& users : null) nv.push_back(position_correlation(users, 1, j, kind, o.relative));
      const auto ns = null_stats(rv, nv);
      nm = ns.mean;
      nsd = ns.sd;
      z = ns.z;
      plots[1].points.push_back({static_cast<double>(j), ns.mean, std::nullopt, std::nullopt});
    }
    plots[0].points.push_back({static_cast<double>(j), rv, std::nullopt, std::nullopt});
    corr.add({std::int64_t{1}, static_cast<std::int64_t>(j), std::string(o.per_follower ? "per_follower" : "raw"), rv,
              static_cast<std::int64_t>(pairs.first.size()), static_cast<std::int64_t>(pairs.excluded), nm, nsd, z});
  }

  constexpr int kGapBins = 20;
  auto histogram = [&](const std::vector<double>& g) {
    std::vector<double> h(kGapBins, 0.0);
    for (double v : g) {
      const int b = std::clamp(static_cast<int>(std::floor((v + 1.0) / 2.0 * kGapBins)), 0, kGapBins - 1);
      h[b] += 1.0 / static_cast<double>(g.size());
    }
    return h;
  };
  auto peak_mass = [&](const std::vector<double>& g) {
    std::size_t n = 0;
    for (double v : g) n += std::abs(v) <= o.gap_width;
    return static_cast<double>(n) / static_cast<double>(g.size());
  };
  Table gap_hist, summary;
  gap_hist.columns = {"bin_lo", "bin_hi", "real_mass", "shuffled_mass"};
  summary.columns = {"metric", "value"};
  summary.add({std::string("users"), static_cast<std::int64_t>(real.size())});
  if (!gaps.empty()) {
    const auto hr = histogram(gaps);
    std::vector<double> hs(kGapBins, 0.0);
    for (const auto& g : null_gaps) {
      const auto h = histogram(g);
      for (int b = 0; b < kGapBins; ++b) hs[b] += h[b] / static_cast<double>(null_gaps.size());
    }
    for (int b = 0; b < kGapBins; ++b) {
      const double lo = -1.0 + 2.0 * b / kGapBins;
      gap_hist.add({lo, lo + 2.0 / kGapBins, hr[b], seeds.empty() ? Cell{} : Cell{hs[b]}});
    }
    const double pm = peak_mass(gaps);
    summary.add({std::string("gap_peak_mass"), pm});
    if (!seeds.empty()) {
      std::vector<double> nv;
      for (const auto& g : null_gaps) nv.push_back(peak_mass(g));
      const auto ns = null_stats(pm, nv);
      summary.add({std::string("gap_peak_mass_shuffled_mean"), ns.mean});
      summary.add({std::string("gap_peak_mass_shuffled_sd"), ns.sd});
      summary.add({std::string("gap_peak_mass_z"), ns.z});
    }
  }
  if (!c0.plotdata.empty()) {
    std::vector<io::PlotPoint> gap_real, gap_null;
    const auto hr = gaps.empty() ? std::vector<double>{} : histogram(gaps);
    for (std::size_t b = 0; b < hr.size(); ++b)
      gap_real.push_back({-1.0 + (2.0 * static_cast<double>(b) + 1.0) / kGapBins, hr[b], std::nullopt, std::nullopt});
    plots.push_back({"gap_real", gap_real});
    if (!seeds.empty() && !gaps.empty()) {
      for (std::size_t b = 0; b < kGapBins; ++b) {
        std::vector<double> vals;
        for (const auto& g : null_gaps) vals.push_back(histogram(g)[b]);
        std::sort(vals.begin(), vals.end());
        const auto lo = vals[static_cast<std::size_t>(std::floor(0.025 * static_cast<double>(vals.size() - 1)))];
        const auto hi = vals[static_cast<std::size_t>(std::ceil(0.975 * static_cast<double>(vals.size() - 1)))];
        gap_null.push_back({-1.0 + (2.0 * static_cast<double>(b) + 1.0) / kGapBins, stats::mean(vals), lo, hi});
      }
      plots.push_back({"gap_shuffled", gap_null});
    }
    io::export_plotdata(plots, c0.plotdata);
  }
  r.tables["correlations"] = std::move(corr);
  r.tables["gap_histogram"] = std::move(gap_hist);
  r.tables["summary"] = std::move(summary);
  if (!c0.snapshots.empty()) {
    r.tables["follower_fits"] = fits.table;
    r.tables["snapshot_errors"] = std::move(snapshot_errors);
  }
  r.tables["input_errors"] = error_table(errors);
  return 0;
}

// ---- windows ----

struct WindowResult {
  std::string status = "ok";
  std::optional<WindowReport> report;
  std::optional<CohortTable> cohorts;
  std::optional<BuildupResult> buildup;
  std::vector<BuildupResult> null_buildup;
  std::optional<PeakContentCurve> content;
};

void merge_curve(std::vector<double>& sum, std::size_t& users, const std::vector<double>& mean, std::size_t n) {
  if (sum.empty()) sum.assign(mean.size(), 0.0);
  for (std::size_t i = 0; i < mean.size(); ++i) sum[i] += mean[i] * static_cast<double>(n);
  users += n;
}

int run_windows(const Options& o, Report& r) {
  const auto& c0 = o.common;
  Table snapshot_errors;
  const auto fits = load_fits(c0.snapshots, &snapshot_errors);
  const auto seeds = shuffle_seed_list(c0);
  const std::vector<Career> no_careers;

  Table stats_t, tests, excluded, slopes;
  stats_t.columns = {"user_id", "period", "first", "last", "mean_retweets", "follower_gain",
                     "mean_retweets_per_follower", "tweets_per_hour", "activity_retweet_fraction",
                     "retweet_fraction", "reply_fraction", "mention_fraction", "hashtag_fraction",
                     "url_fraction", "media_fraction", "mean_length", "word_entropy", "topic_entropy",
                     "mean_sentiment"};
  tests.columns = {"user_id", "feature", "a", "b", "t", "df", "p", "corrected_p"};
  excluded.columns = {"user_id", "reason"};
  slopes.columns = {"user_id", "peak_index", "before_slope", "after_slope"};

  std::array<std::map<std::size_t, std::pair<double, std::size_t>>, 3> cohort_rates;
  std::array<std::int64_t, 3> before_totals{};
  std::vector<double> curve_sum, entropy_sum, length_sum;
  std::size_t curve_users = 0, content_users = 0, content_users_len = 0, buildup_excluded = 0;
  std::vector<std::vector<double>> null_curve_sum(seeds.size());
  std::vector<std::size_t> null_users(seeds.size(), 0);
  std::vector<double> before_all, after_all;
  std::vector<std::vector<double>> null_before(seeds.size()), null_after(seeds.size());

  auto opt_cell = [](const std::optional<double>& v) { return v ? Cell{*v} : Cell{}; };

  const auto errors = for_each_career<WindowResult>(
      c0.input, workers_of(c0),
      [&](const Career& input) {
        WindowResult res;
        const Career c = o.shuffled ? shuffle_career(input, derive_seed(c0.seed, input.user_id())) : input;
        const std::vector<Career> one = {c};
        try {
          res.buildup = buildup_dropoff(one, o.window);
        } catch (const InsufficientData&) {
        }
        for (auto seed : seeds) {
          const std::vector<Career> s = {shuffle_career(c, derive_seed(seed, c.user_id()))};
          try {
            res.null_buildup.push_back(buildup_dropoff(s, o.window));
          } catch (const InsufficientData&) {
            res.null_buildup.emplace_back();
          }
        }
        try {
          res.content = entropy_around_peak(one, o.window);
        } catch (const Unavailable&) {
        }
        const auto series = c.retweet_series();
        const auto seg = fit_piecewise_constant(series, c0.alpha);
        const auto longest = longest_streak(detect_hot_streaks(c, seg, c0.percentile, c0.min_len));
        if (!longest) {
          res.status = "no_streak";
          return res;
        }
        try {
          const auto triple = extract_windows(c, *longest);
          res.report = window_report(c, triple, fit_for(fits.fits, c.user_id()));
        } catch (const Unavailable&) {
          res.status = "window_unavailable";
        }
        try {
          res.cohorts = cohort_analysis(c, *longest);
        } catch (const Unavailable&) {
        }
        return res;
      },
      [&](const Career& c, WindowResult res) {
        if (res.status != "ok") excluded.add({c.user_id(), res.status});
        if (res.report) {
          for (std::size_t w = 0; w < 3; ++w) {
            const auto& ws = res.report->windows[w];
            std::vector<Cell> row = {c.user_id(), std::string(to_string(kPeriods[w])),
                                     static_cast<std::int64_t>(ws.range.first), static_cast<std::int64_t>(ws.range.last),
                                     ws.mean_retweets, opt_cell(ws.follower_gain),
                                     opt_cell(ws.mean_retweets_per_follower), opt_cell(ws.tweets_per_hour),
                                     opt_cell(ws.activity_retweet_fraction)};
            for (const char* f : kFlagNames) {
              auto it = ws.fractions.find(f);
              row.push_back(it == ws.fractions.end() ? Cell{} : Cell{it->second});
            }
            for (const auto* v : {&ws.mean_length, &ws.word_entropy, &ws.topic_entropy, &ws.mean_sentiment})
              row.push_back(opt_cell(*v));
            stats_t.add(std::move(row));
          }
          for (const auto& t : res.report->tests)
            tests.add({c.user_id(), t.feature, std::string(to_string(t.a)), std::string(to_string(t.b)),
                       t.result.statistic, t.result.df, t.result.p_two_sided, *t.result.corrected_p});
        }
        if (res.cohorts) {
          for (std::size_t k = 0; k < 3; ++k) {
            if (res.cohorts->cohorts[k].retweeters == 0) continue;
            const auto& rates = res.cohorts->cohorts[k].weekly_rate;
            for (std::size_t w = 0; w < rates.size(); ++w) {
              auto& [sum, n] = cohort_rates[k][w];
              sum += rates[w];
              ++n;
            }
          }
          for (std::size_t k = 0; k < 3; ++k) before_totals[k] += res.cohorts->before_cohort_totals[k];
        }
        if (res.buildup) {
          merge_curve(curve_sum, curve_users, res.buildup->mean_curve, 1);
          const auto& u = res.buildup->users.front();
          slopes.add({c.user_id(), static_cast<std::int64_t>(u.peak_index), u.before, u.after});
          before_all.push_back(u.before);
          after_all.push_back(u.after);
        } else {
          ++buildup_excluded;
        }
        for (std::size_t k = 0; k < seeds.size(); ++k) {
          const auto& b = res.null_buildup[k];
          if (b.users.empty()) continue;
          merge_curve(null_curve_sum[k], null_users[k], b.mean_curve, 1);
          null_before[k].push_back(b.users.front().before);
          null_after[k].push_back(b.users.front().after);
        }
        if (res.content) {
          merge_curve(entropy_sum, content_users, res.content->mean_entropy, 1);
          merge_curve(length_sum, content_users_len, res.content->mean_length, 1);
        }
      });

  const auto width = 2 * o.window + 1;
  Table curve, summary, cohort_t, totals;
  curve.columns = {"offset", "mean_retweets", "shuffled_mean", "mean_entropy", "mean_length"};
  summary.columns = {"metric", "value"};
  cohort_t.columns = {"cohort", "week", "mean_rate", "users"};
  totals.columns = {"period", "before_cohort_retweets"};
  std::vector<double> null_curve(width, 0.0);
  std::size_t null_sets = 0;
  for (std::size_t k = 0; k < seeds.size(); ++k) {
    if (null_users[k] == 0) continue;
    ++null_sets;
    for (std::size_t i = 0; i < width; ++i) null_curve[i] += null_curve_sum[k][i] / static_cast<double>(null_users[k]);
  }
  std::vector<io::PlotSeries> plots = {{"buildup_real", {}}, {"buildup_shuffled", {}}, {"entropy", {}}, {"length", {}}};
  for (std::size_t i = 0; i < width; ++i) {
    const auto off = static_cast<std::int64_t>(i) - static_cast<std::int64_t>(o.window);
    Cell mean = curve_users ? Cell{curve_sum[i] / static_cast<double>(curve_users)} : Cell{};
    Cell nm = null_sets ? Cell{null_curve[i] / static_cast<double>(null_sets)} : Cell{};
    Cell he = content_users ? Cell{entropy_sum[i] / static_cast<double>(content_users)} : Cell{};
    Cell hl = content_users ? Cell{length_sum[i] / static_cast<double>(content_users_len)} : Cell{};
    curve.add({off, mean, nm, he, hl});
    const auto x = static_cast<double>(off);
    if (curve_users) plots[0].points.push_back({x, std::get<double>(mean), std::nullopt, std::nullopt});
    if (null_sets) plots[1].points.push_back({x, std::get<double>(nm), std::nullopt, std::nullopt});
    if (content_users) {
      plots[2].points.push_back({x, std::get<double>(he), std::nullopt, std::nullopt});
      plots[3].points.push_back({x, std::get<double>(hl), std::nullopt, std::nullopt});
    }
  }
  summary.add({std::string("buildup_users"), static_cast<std::int64_t>(curve_users)});
  summary.add({std::string("buildup_excluded"), static_cast<std::int64_t>(buildup_excluded)});
  if (!before_all.empty()) {
    std::size_t pos = 0, neg = 0, both = 0;
    for (std::size_t i = 0; i < before_all.size(); ++i) {
      pos += before_all[i] > 0;
      neg += after_all[i] < 0;
      both += before_all[i] > 0 && after_all[i] < 0;
    }
    const auto n = static_cast<double>(before_all.size());
    summary.add({std::string("mean_before_slope"), stats::mean(before_all)});
    summary.add({std::string("mean_after_slope"), stats::mean(after_all)});
    if (before_all.size() > 1) {
      summary.add({std::string("se_before_slope"), stats::stddev(before_all) / std::sqrt(n)});
      summary.add({std::string("se_after_slope"), stats::stddev(after_all) / std::sqrt(n)});
    }
    summary.add({std::string("frac_positive_before"), static_cast<double>(pos) / n});
    summary.add({std::string("frac_negative_after"), static_cast<double>(neg) / n});
    summary.add({std::string("frac_both"), static_cast<double>(both) / n});
  }
  if (null_sets > 0) {
    std::vector<double> mb, ma;
    for (std::size_t k = 0; k < seeds.size(); ++k)
      if (!null_before[k].empty()) {
        mb.push_back(stats::mean(null_before[k]));
        ma.push_back(stats::mean(null_after[k]));
      }
    summary.add({std::string("shuffled_mean_before_slope"), stats::mean(mb)});
    summary.add({std::string("shuffled_mean_after_slope"), stats::mean(ma)});
  }
  summary.add({std::string("window_users"), static_cast<std::int64_t>(stats_t.rows.size() / 3)});
  summary.add({std::string("window_excluded"), static_cast<std::int64_t>(excluded.rows.size())});
  for (std::size_t k = 0; k < 3; ++k)
    for (const auto& [week, acc] : cohort_rates[k])
      cohort_t.add({std::string(to_string(kPeriods[k])), static_cast<std::int64_t>(week),
                    acc.first / static_cast<double>(acc.second), static_cast<std::int64_t>(acc.second)});
  for (std::size_t k = 0; k < 3; ++k) totals.add({std::string(to_string(kPeriods[k])), before_totals[k]});

  if (!c0.plotdata.empty()) io::export_plotdata(plots, c0.plotdata);
  r.tables["window_stats"] = std::move(stats_t);
  r.tables["window_tests"] = std::move(tests);
  r.tables["window_excluded"] = std::move(excluded);
  r.tables["peak_curve"] = std::move(curve);
  r.tables["peak_slopes"] = std::move(slopes);
  r.tables["summary"] = std::move(summary);
  r.tables["cohort_rates"] = std::move(cohort_t);
  r.tables["before_cohort_totals"] = std::move(totals);
  if (!c0.snapshots.empty()) {
    r.tables["follower_fits"] = fits.table;
    r.tables["snapshot_errors"] = std::move(snapshot_errors);
  }
  r.tables["input_errors"] = error_table(errors);
  return 0;
}

// ---- classify ----

int run_classify(const Options& o, Report& r) {
  const auto& c0 = o.common;
  Table snapshot_errors;
  const auto fits = load_fits(c0.snapshots, &snapshot_errors);
  std::vector<classify::WeekFeatures> samples;
  const auto errors = for_each_career<std::vector<classify::WeekFeatures>>(
      c0.input, workers_of(c0),
      [&](const Career& c) {
        const auto series = c.retweet_series();
        const auto seg = fit_piecewise_constant(series, c0.alpha);
        const auto streaks = detect_hot_streaks(c, seg, c0.percentile, c0.min_len);
        return classify::extract_career_weeks(c, streaks, fit_for(fits.fits, c.user_id()));
      },
      [&](const Career&, std::vector<classify::WeekFeatures> w) {
        samples.insert(samples.end(), std::make_move_iterator(w.begin()), std::make_move_iterator(w.end()));
      });
  std::size_t pos = 0;
  for (const auto& s : samples) pos += s.label;
  if (pos == 0 || pos == samples.size()) throw InsufficientData("classification needs weeks of both classes");
  const auto balanced = classify::balance_dataset(samples, c0.seed);
  classify::TrainOptions opt;
  opt.l2 = o.l2;
  opt.epochs = o.epochs;
  const auto cv = classify::cross_validate(balanced, o.folds, c0.seed, opt, workers_of(c0));

  Table dataset, folds, summary, importance;
  dataset.columns = {"metric", "value"};
  dataset.add({std::string("weeks"), static_cast<std::int64_t>(samples.size())});
  dataset.add({std::string("positive_weeks"), static_cast<std::int64_t>(pos)});
  dataset.add({std::string("balanced_size"), static_cast<std::int64_t>(balanced.size())});
  folds.columns = {"feature_set", "fold", "accuracy"};
  summary.columns = {"feature_set", "mean_accuracy", "sd_accuracy"};
  importance.columns = {"feature_set", "feature", "importance"};
  for (const auto& rep : cv.reports) {
    const std::string set = classify::to_string(rep.set);
    for (std::size_t f = 0; f < rep.fold_accuracies.size(); ++f)
      folds.add({set, static_cast<std::int64_t>(f), rep.fold_accuracies[f]});
    summary.add({set, rep.mean, rep.sd});
    for (const auto& [name, v] : rep.importance) importance.add({set, name, v});
  }
  if (!o.model_out.empty()) {
    const auto model = classify::train_classifier(balanced, opt);
    io::write_text(io::model_to_json(model).dump(2) + "\n", o.model_out);
  }
  r.tables["dataset"] = std::move(dataset);
  r.tables["cv_folds"] = std::move(folds);
  r.tables["cv_summary"] = std::move(summary);
  r.tables["importance"] = std::move(importance);
  if (!c0.snapshots.empty()) {
    r.tables["follower_fits"] = fits.table;
    r.tables["snapshot_errors"] = std::move(snapshot_errors);
  }
  r.tables["input_errors"] = error_table(errors);
  return 0;
}

// ---- synth ----

int run_synth(const Options& o, Report& r) {
  const auto& c0 = o.common;
  synth::SynthConfig cfg;
  cfg.n_tweets = o.n_tweets;
  cfg.baseline_mean = o.baseline;
  cfg.dispersion = o.dispersion;
  if (o.streak_boost > 1.0 && o.streak_len > 0) cfg.streaks = {{std::nullopt, o.streak_len, o.streak_boost}};
  cfg.cluster_top5 = o.cluster_top5;
  if (o.tent) cfg.tent = synth::TentSpec{};
  if (o.followers) cfg.follower_curve = synth::FollowerCurve{};
  cfg.with_content = o.with_content;
  cfg.with_retweeters = o.with_retweeters;
  cfg.with_activity = o.with_activity;
  cfg.content_shift = {o.media_delta, o.reply_delta, o.entropy_delta};

  std::vector<std::optional<synth::SynthCareer>> slots(o.users);
  parallel_for(o.users, workers_of(c0), [&](std::size_t u) {
    synth::SynthConfig c = cfg;
    std::string num = std::to_string(u);
    c.user_id = "user" + std::string(num.size() < 5 ? 5 - num.size() : 0, '0') + num;
    c.seed = derive_seed(c0.seed, static_cast<std::uint64_t>(u));
    slots[u] = synth::generate_career(c);
  });
  std::vector<synth::SynthCareer> pop;
  pop.reserve(o.users);
  for (auto& s : slots) pop.push_back(std::move(*s));
  {
    auto out = io::open_for_write(c0.output);
    for (const auto& s : pop) out << io::career_to_json(s.career).dump() << '\n';
  }
  if (!o.truth_out.empty()) io::write_truth(pop, o.truth_out);
  if (!o.snapshots_out.empty()) {
    std::vector<FollowerSnapshots> snaps;
    for (const auto& s : pop)
      if (s.snapshots) snaps.push_back(*s.snapshots);
    io::write_snapshots(snaps, o.snapshots_out);
  }
  Table summary;
  summary.columns = {"metric", "value"};
  summary.add({std::string("users"), static_cast<std::int64_t>(pop.size())});
  std::int64_t planted = 0;
  for (const auto& s : pop) planted += static_cast<std::int64_t>(s.truth.size());
  summary.add({std::string("planted_streaks"), planted});
  r.tables["summary"] = std::move(summary);
  return 0;
}

void add_common(CLI::App* sub, Options& o, bool needs_input) {
  auto& c = o.common;
  if (needs_input) {
    sub->add_option("-i,--input", c.input, "career JSONL file")->required();
    sub->add_option("-o,--output", c.output, "report path ('-' for stdout)")->capture_default_str();
  } else {
    sub->add_option("-o,--output", c.output, "career JSONL path")->required();
  }
  sub->add_option("--format", c.format, "report format")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
  sub->add_option("--seed", c.seed, "master seed")->capture_default_str();
  sub->add_option("--workers", c.workers, "worker threads (0: $HOTSTREAK_WORKERS or all cores)")->capture_default_str();
}

void add_detection(CLI::App* sub, Options& o) {
  auto& c = o.common;
  sub->add_option("--alpha", c.alpha, "breakpoint penalty")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sub->add_option("--percentile", c.percentile, "streak threshold percentile k")
      ->check(CLI::Range(1e-9, 100.0))
      ->capture_default_str();
  sub->add_option("--min-len", c.min_len, "minimum streak length")->check(CLI::PositiveNumber)->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hot-streak analysis of per-post impact careers"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  Options o;

  auto* seg = app.add_subcommand("segment", "fit piecewise-constant segmentations");
  add_common(seg, o, true);
  seg->add_option("--alpha", o.common.alpha, "breakpoint penalty")->check(CLI::PositiveNumber)->capture_default_str();

  auto* str = app.add_subcommand("streaks", "detect hot streaks and profile them");
  add_common(str, o, true);
  add_detection(str, o);
  str->add_option("--shuffle-seeds", o.common.shuffle_seeds, "number of shuffled null replicates")->capture_default_str();
  str->add_option("--truth", o.truth, "ground-truth JSONL for detection scores");

  auto* clu = app.add_subcommand("clustered", "position correlations and gaps of top posts");
  add_common(clu, o, true);
  clu->add_option("--snapshots", o.common.snapshots, "follower snapshot CSV");
  clu->add_option("--max-rank", o.max_rank, "correlate T1 with T2..T_max")->capture_default_str();
  clu->add_flag("--normalize-per-follower", o.per_follower, "rank by retweets per follower");
  clu->add_flag("--relative", o.relative, "divide positions by career length");
  clu->add_option("--gap-width", o.gap_width, "half-width of the gap peak")->check(CLI::Range(0.0, 1.0))->capture_default_str();
  clu->add_option("--shuffle-seeds", o.common.shuffle_seeds, "number of shuffled null replicates")->capture_default_str();
  clu->add_option("--plotdata", o.common.plotdata, "plot-data CSV path");

  auto* win = app.add_subcommand("windows", "before/during/after windows, cohorts, build-up");
  add_common(win, o, true);
  add_detection(win, o);
  win->add_option("--snapshots", o.common.snapshots, "follower snapshot CSV");
  win->add_option("--window", o.window, "tweets on each side of the peak")->check(CLI::Range(2, 100000))->capture_default_str();
  win->add_flag("--shuffled", o.shuffled, "analyze shuffled careers instead");
  win->add_option("--shuffle-seeds", o.common.shuffle_seeds, "number of shuffled null replicates")->capture_default_str();
  win->add_option("--plotdata", o.common.plotdata, "plot-data CSV path");

  auto* cls = app.add_subcommand("classify", "predict hot-streak weeks");
  add_common(cls, o, true);
  add_detection(cls, o);
  cls->add_option("--snapshots", o.common.snapshots, "follower snapshot CSV");
  cls->add_option("--folds", o.folds, "cross-validation folds")->check(CLI::Range(2, 1000))->capture_default_str();
  cls->add_option("--l2", o.l2, "L2 penalty")->check(CLI::NonNegativeNumber)->capture_default_str();
  cls->add_option("--epochs", o.epochs, "gradient steps")->check(CLI::PositiveNumber)->capture_default_str();
  cls->add_option("--model-out", o.model_out, "write the full-data model as JSON");

  auto* syn = app.add_subcommand("synth", "generate synthetic careers");
  add_common(syn, o, false);
  syn->add_option("--users", o.users, "careers to generate")->check(CLI::PositiveNumber)->capture_default_str();
  syn->add_option("--n-tweets", o.n_tweets, "tweets per career")->check(CLI::PositiveNumber)->capture_default_str();
  syn->add_option("--baseline", o.baseline, "baseline mean retweets")->check(CLI::PositiveNumber)->capture_default_str();
  syn->add_option("--dispersion", o.dispersion, "lognormal sigma")->check(CLI::NonNegativeNumber)->capture_default_str();
  syn->add_option("--streak-len", o.streak_len, "planted streak length (0: none)")->capture_default_str();
  syn->add_option("--streak-boost", o.streak_boost, "planted streak boost (<= 1: none)")->check(CLI::NonNegativeNumber)->capture_default_str();
  syn->add_flag("--cluster-top5", o.cluster_top5, "place the top five posts close together");
  syn->add_flag("--tent", o.tent, "rise and fall around the top post");
  syn->add_flag("--with-content", o.with_content, "generate flags, tokens, topics, sentiment");
  syn->add_flag("--with-retweeters", o.with_retweeters, "generate retweeter lists");
  syn->add_flag("--with-activity", o.with_activity, "generate the activity stream");
  syn->add_flag("--followers", o.followers, "generate follower snapshots");
  syn->add_option("--media-delta", o.media_delta, "media fraction shift in streaks")->capture_default_str();
  syn->add_option("--reply-delta", o.reply_delta, "reply fraction shift in streaks")->capture_default_str();
  syn->add_option("--entropy-delta", o.entropy_delta, "topic concentration in streaks")->capture_default_str();
  syn->add_option("--truth-out", o.truth_out, "ground-truth JSONL path");
  syn->add_option("--snapshots-out", o.snapshots_out, "follower snapshot CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  std::vector<std::string> args(argv + 1, argv + argc);
  CLI::App* sub = app.get_subcommands().front();
  Report report;
  report.command = sub->get_name();
  report.config = config_echo(args, *sub);
  try {
    int rc = 0;
    if (sub == seg) rc = run_segment(o, report);
    else if (sub == str) rc = run_streaks(o, report);
    else if (sub == clu) rc = run_clustered(o, report);
    else if (sub == win) rc = run_windows(o, report);
    else if (sub == cls) rc = run_classify(o, report);
    else rc = run_synth(o, report);
    if (sub == syn)
      std::cout << io::render_report(report, io::parse_format(o.common.format));
    else
      emit(report, o.common);
    return rc;
  } catch (const ArgumentError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

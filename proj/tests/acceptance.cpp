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

// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <sys/wait.h>

#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "hotstreak/classify.hpp"
#include "hotstreak/followers.hpp"
#include "hotstreak/impact.hpp"
#include "hotstreak/io.hpp"
#include "hotstreak/segmentation.hpp"
#include "hotstreak/stats.hpp"
#include "hotstreak/streaks.hpp"
#include "hotstreak/synth.hpp"
#include "hotstreak/windows.hpp"

namespace {

using namespace hotstreak;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::size_t g_workers = 0;

// ---- segmentation ----

Outcome dp_optimality() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(20240501);
  std::uniform_int_distribution<int> len(1, 12), val(0, 20);
  const double alphas[] = {0.5, 1.0, 5.0};
  std::size_t bad_obj = 0, bad_bp = 0;
  for (int i = 0; i < 500; ++i) {
    std::vector<double> s(static_cast<std::size_t>(len(rng)));
    for (auto& v : s) v = val(rng);
    const double a = alphas[i % 3];
    const auto dp = fit_piecewise_constant(s, a);
    const auto bf = brute_force_fit(s, a);
    bad_obj += std::abs(dp.objective - bf.objective) > 1e-9;
    bad_bp += dp.breakpoints != bf.breakpoints;
  }
  const double secs = seconds_since(t0);
  return {bad_obj == 0 && bad_bp == 0 && secs < 10.0,
          "500 series, objective mismatches " + std::to_string(bad_obj) + ", breakpoint mismatches " +
              std::to_string(bad_bp) + ", " + fmt("%.2f s (limit 10 s)", secs)};
}

// ---- planted streaks ----

Outcome planted_recovery() {
  const auto t0 = Clock::now();
  synth::SynthConfig cfg;
  cfg.n_tweets = 2500;
  cfg.baseline_mean = 2.0;
  cfg.streaks = {{std::nullopt, 50, 8.0}};
  const auto pop = synth::generate_population(cfg, 100, 11);
  std::vector<double> f1(pop.size()), f1_unfiltered(pop.size());
  parallel_for(pop.size(), g_workers, [&](std::size_t u) {
    const auto series = pop[u].career.retweet_series();
    const auto seg = fit_piecewise_constant(series, 1.0);
    auto score = [&](std::size_t min_len) {
      std::vector<synth::TruthRange> det;
      for (const auto& h : detect_hot_streaks(pop[u].career, seg, 90.0, min_len))
        det.push_back({h.start_index, h.end_index});
      return synth::score_detection(pop[u].truth, det).f1;
    };
    f1[u] = score(kHasStreakMinLen);
    f1_unfiltered[u] = score(1);
  });
  const double mean = stats::mean(f1);
  const double secs = seconds_since(t0);
  return {mean >= 0.8 && secs < 60.0,
          "mean F1 " + fmt("%.4f", mean) + " (streaks longer than 10 tweets; " +
              fmt("%.4f", stats::mean(f1_unfiltered)) + " with no length filter), " +
              fmt("%.2f s (limit 60 s)", secs)};
}

// ---- clustering cohort ----

const std::vector<Career>& cluster_cohort() {
  static const std::vector<Career> careers = [] {
    synth::SynthConfig cfg;
    cfg.n_tweets = 2500;
    cfg.cluster_top5 = true;
    std::vector<Career> out;
    for (auto& s : synth::generate_population(cfg, 1000, 31)) out.push_back(std::move(s.career));
    return out;
  }();
  return careers;
}

std::vector<std::uint64_t> seed_list(std::size_t n, std::uint64_t master) {
  std::vector<std::uint64_t> s(n);
  for (std::size_t i = 0; i < n; ++i) s[i] = derive_seed(master, static_cast<std::uint64_t>(i));
  return s;
}

Outcome cluster_contrast() {
  const auto& careers = cluster_cohort();
  const auto r = shuffle_contrast(PositionCorrelationMetric{}, careers, seed_list(20, 7), g_workers);
  double mean_abs = 0.0;
  for (double v : r.null_values) mean_abs += std::abs(v) / static_cast<double>(r.null_values.size());
  return {r.observed >= 0.5 && std::abs(r.null_mean) <= 0.1,
          "1000 users, r(T1,T2) " + fmt("%.4f", r.observed) + ", shuffled mean over 20 seeds " +
              fmt("%.4f", r.null_mean) + " (mean |r| " + fmt("%.4f", mean_abs) + ")"};
}

Outcome gap_peak() {
  const auto& careers = cluster_cohort();
  const auto r = shuffle_contrast(GapPeakMassMetric{0.1}, careers, seed_list(20, 8), g_workers);
  return {r.observed >= 2.0 * r.null_mean,
          "fraction |gap| <= 0.1: real " + fmt("%.4f", r.observed) + ", shuffled " + fmt("%.4f", r.null_mean) +
              ", ratio " + fmt("%.2f", r.null_mean > 0 ? r.observed / r.null_mean : INFINITY)};
}

// ---- build-up and drop-off ----

Outcome buildup() {
  synth::SynthConfig cfg;
  cfg.n_tweets = 1000;
  cfg.tent = synth::TentSpec{};
  std::vector<Career> careers, shuffled;
  for (auto& s : synth::generate_population(cfg, 500, 41)) careers.push_back(std::move(s.career));
  for (const auto& c : careers) shuffled.push_back(shuffle_career(c, derive_seed(42, c.user_id())));
  const auto real = buildup_dropoff(careers, 10);
  const auto null = buildup_dropoff(shuffled, 10);
  const bool within = std::abs(null.mean_before) <= 3 * null.se_before && std::abs(null.mean_after) <= 3 * null.se_after;
  return {real.frac_both >= 0.95 && within,
          "tent cohort " + std::to_string(real.users.size()) + " users, both slopes in direction " +
              fmt("%.4f", real.frac_both) + "; shuffled before " + fmt("%.3f", null.mean_before) + " (3 SE " +
              fmt("%.3f", 3 * null.se_before) + "), after " + fmt("%.3f", null.mean_after) + " (3 SE " +
              fmt("%.3f", 3 * null.se_after) + ")"};
}

// ---- follower fit ----

Outcome follower_fit() {
  const std::vector<double> coef = {500, 1200, -300, 800, 250};
  auto snaps = [&](std::size_t n, double noise, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z(0.0, 1.0);
    FollowerSnapshots s;
    s.user_id = "f";
    for (std::size_t i = 0; i < n; ++i) {
      const double u = static_cast<double>(i) / static_cast<double>(n - 1);
      const double v = noise > 0 ? 1000 + noise * z(rng) : 1000 * detail::horner(coef, u);
      SnapshotPoint p;
      p.timestamp = 1'300'000'000 + static_cast<std::int64_t>(i) * 86400;
      p.count = std::llround(v);
      s.points.push_back(p);
    }
    return s;
  };
  FollowerSnapshots exact;
  exact.user_id = "exact";
  for (std::int64_t i = 0; i < 12; ++i) {
    const std::int64_t x = i;
    SnapshotPoint p;
    p.timestamp = 1'300'000'000 + x * 86400;
    p.count = 1000 + 3 * x + 2 * x * x - x * x * x + x * x * x * x;
    exact.points.push_back(p);
  }
  const auto fit = fit_follower_curve(exact);
  const bool exact_ok = fit.degree == 4 && std::abs(fit.r_squared - 1.0) <= 1e-9;
  auto kind_of = [](const FollowerSnapshots& s) -> std::string {
    try {
      fit_follower_curve(s);
      return "fit";
    } catch (const FollowerFitError& e) {
      return e.kind() == FollowerFitError::Kind::kInsufficientSnapshots ? "insufficient" : "poor";
    }
  };
  const auto nine = kind_of(snaps(9, 0.0, 1));
  const auto noisy = snaps(40, 300.0, 2);
  double best_r2 = -INFINITY;
  for (int d : kCandidateDegrees) best_r2 = std::max(best_r2, fit_polynomial(noisy, d).r_squared);
  const auto noisy_kind = kind_of(noisy);
  return {exact_ok && nine == "insufficient" && best_r2 <= 0.9 && noisy_kind == "poor",
          "exact: degree " + std::to_string(fit.degree) + ", 1-R2 " + fmt("%.2e", 1.0 - fit.r_squared) +
              "; 9 points: " + nine + "; noisy best R2 " + fmt("%.4f", best_r2) + ": " + noisy_kind};
}

// ---- statistics kit ----

Outcome stats_kit() {
  const std::vector<double> a = {1, 2, 3, 4, 5}, b = {3, 4, 5, 6, 7};
  const auto w = stats::welch_t(a, b);
  const std::vector<double> x = {1, 2, 3}, y = {1, 3, 2};
  const double r = stats::pearson(x, y);
  const std::vector<std::int64_t> counts = {3, 1};
  const double h = stats::shannon_entropy(counts);
  const bool ok = std::abs(w.statistic + 2.0) <= 1e-3 && std::abs(w.df - 8.0) <= 1e-3 &&
                  std::abs(w.p_two_sided - 0.0805) <= 1e-3 && std::abs(r - 0.5) <= 1e-12 &&
                  std::abs(h - 0.8113) <= 1e-4;
  return {ok, "welch t " + fmt("%.6f", w.statistic) + " df " + fmt("%.6f", w.df) + " p " +
                  fmt("%.6f", w.p_two_sided) + "; pearson " + fmt("%.15f", r) + "; entropy " + fmt("%.6f", h)};
}

// ---- classifier ----

Outcome gradient_check() {
  std::mt19937_64 rng(77);
  std::normal_distribution<double> z;
  const Eigen::Index n = 200, d = 15;
  Eigen::MatrixXd x(n, d);
  Eigen::VectorXd y(n), w(d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) x(i, j) = z(rng);
    y[i] = z(rng) > 0 ? 1.0 : 0.0;
  }
  for (Eigen::Index j = 0; j < d; ++j) w[j] = 0.5 * z(rng);
  const double b = -0.2, l2 = 1e-2, eps = 1e-6;
  const auto [gw, gb] = classify::log_loss_gradient(w, b, x, y, l2);
  Eigen::VectorXd fd(d + 1), an(d + 1);
  for (Eigen::Index j = 0; j < d; ++j) {
    Eigen::VectorXd wp = w, wm = w;
    wp[j] += eps;
    wm[j] -= eps;
    fd[j] = (classify::log_loss(wp, b, x, y, l2) - classify::log_loss(wm, b, x, y, l2)) / (2 * eps);
    an[j] = gw[j];
  }
  fd[d] = (classify::log_loss(w, b + eps, x, y, l2) - classify::log_loss(w, b - eps, x, y, l2)) / (2 * eps);
  an[d] = gb;
  const double rel = (fd - an).norm() / an.norm();
  return {rel < 1e-5, "relative error " + fmt("%.3e", rel)};
}

// Week samples from synthetic careers whose planted streaks shift content.
std::vector<classify::WeekFeatures> planted_weeks(std::uint64_t seed) {
  synth::SynthConfig cfg;
  cfg.n_tweets = 1500;
  cfg.streaks = {{std::nullopt, 300, 4.0}};
  cfg.with_content = cfg.with_retweeters = cfg.with_activity = true;
  cfg.follower_curve = synth::FollowerCurve{};
  cfg.content_shift = {0.6, 0.4, 0.8};
  const auto pop = synth::generate_population(cfg, 160, seed);
  std::vector<std::vector<classify::WeekFeatures>> per(pop.size());
  parallel_for(pop.size(), g_workers, [&](std::size_t u) {
    const auto& s = pop[u];
    std::vector<HotStreak> truth;
    for (const auto& t : s.truth) truth.push_back({t.start_index, t.end_index, 0.0, 0.0});
    std::optional<FollowerFit> fit;
    try {
      fit = fit_follower_curve(*s.snapshots);
    } catch (const FollowerFitError&) {
    }
    per[u] = classify::extract_career_weeks(s.career, truth, fit ? &*fit : nullptr);
  });
  std::vector<classify::WeekFeatures> out;
  for (auto& v : per) out.insert(out.end(), v.begin(), v.end());
  return classify::balance_dataset(out, seed);
}

Outcome random_labels() {
  auto weeks = planted_weeks(51);
  std::mt19937_64 rng(52);
  std::shuffle(weeks.begin(), weeks.end(), rng);
  weeks.resize(std::min<std::size_t>(weeks.size(), 2000));
  std::bernoulli_distribution coin(0.5);
  for (auto& w : weeks) w.label = coin(rng);
  const auto r = classify::cross_validate(weeks, 10, 53, {}, g_workers);
  bool ok = weeks.size() == 2000;
  std::string detail = "n " + std::to_string(weeks.size());
  for (const auto& rep : r.reports) {
    ok = ok && std::abs(rep.mean - 0.5) <= 0.05;
    detail += std::string(", ") + classify::to_string(rep.set) + " " + fmt("%.4f", rep.mean);
  }
  return {ok, detail};
}

Outcome planted_classifier() {
  const auto weeks = planted_weeks(61);
  const auto r = classify::cross_validate(weeks, 10, 62, {}, g_workers);
  const double content = r.reports[0].mean, network = r.reports[1].mean, combined = r.reports[2].mean;
  return {combined >= 0.95 && combined >= std::max(content, network) - 0.03,
          "n " + std::to_string(weeks.size()) + ", content " + fmt("%.4f", content) + ", network " +
              fmt("%.4f", network) + ", combined " + fmt("%.4f", combined)};
}

// ---- command-line runs ----

std::string g_cli;

int run_cli(const std::string& args) {
  const std::string cmd = g_cli + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct ScratchDir {
  fs::path path;
  explicit ScratchDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~ScratchDir() { fs::remove_all(path); }
  std::string operator/(const std::string& f) const { return (path / f).string(); }
};

Outcome determinism() {
  ScratchDir dir("hotstreak_acceptance_det");
  const std::string synth_args = "synth --users 40 --n-tweets 600 --streak-len 60 --seed 3 --with-content "
                                 "--with-retweeters --with-activity --followers --media-delta 0.3 "
                                 "--snapshots-out " + (dir / "s.csv") + " --truth-out " + (dir / "t.jsonl");
  std::vector<std::string> failures;
  if (run_cli(synth_args + " -o " + (dir / "c1.jsonl")) != 0 || run_cli(synth_args + " -o " + (dir / "c2.jsonl")) != 0)
    return {false, "synth failed"};
  if (slurp(dir / "c1.jsonl") != slurp(dir / "c2.jsonl"))
    failures.push_back("synth");
  const std::string in = " -i " + (dir / "c1.jsonl") + " --seed 5";
  const std::string snaps = " --snapshots " + (dir / "s.csv");
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"segment", "segment" + in},
      {"streaks", "streaks" + in + " --shuffle-seeds 5 --truth " + (dir / "t.jsonl")},
      {"clustered", "clustered" + in + snaps + " --normalize-per-follower --shuffle-seeds 5 --plotdata " +
                        (dir / "plot.csv")},
      {"windows", "windows" + in + snaps + " --shuffle-seeds 3 --min-len 11"},
      {"classify", "classify" + in + snaps + " --min-len 11 --folds 5 --format csv"},
  };
  for (const auto& [name, args] : commands) {
    std::string out[2];
    for (int k = 0; k < 2; ++k) {
      if (run_cli(args + " -o " + (dir / "r.out")) != 0) {
        failures.push_back(name + " (exit)");
        break;
      }
      out[k] = slurp(dir / "r.out");
    }
    if (out[0].empty() || out[0] != out[1]) failures.push_back(name);
  }
  std::string detail = "synth, segment, streaks, clustered, windows, classify run twice";
  if (!failures.empty()) {
    detail += "; differing:";
    for (const auto& f : failures) detail += " " + f;
  } else {
    detail += "; all byte-identical";
  }
  return {failures.empty(), detail};
}

Outcome scale() {
  ScratchDir dir("hotstreak_acceptance_scale");
  const auto tg = Clock::now();
  if (run_cli("synth --users 10000 --n-tweets 2500 --seed 9 -o " + (dir / "c.jsonl")) != 0)
    return {false, "synth failed"};
  const double gen = seconds_since(tg);
  const auto t0 = Clock::now();
  const int a = run_cli("segment -i " + (dir / "c.jsonl") + " -o " + (dir / "seg.json"));
  const double seg = seconds_since(t0);
  const int b = run_cli("streaks -i " + (dir / "c.jsonl") + " -o " + (dir / "str.json"));
  const double total = seconds_since(t0);
  return {a == 0 && b == 0 && total < 300.0,
          "10000 careers x 2500 tweets on " + std::to_string(default_workers()) + " worker(s): segment " +
              fmt("%.1f s", seg) + ", streaks " + fmt("%.1f s", total - seg) + ", total " +
              fmt("%.1f s (limit 300 s)", total) + "; generation " + fmt("%.1f s", gen) + " not counted"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hotstreak acceptance run"};
  std::vector<std::string> only;
  g_cli = HOTSTREAK_CLI;
  app.add_option("--only", only, "run only the named criteria");
  app.add_option("--cli", g_cli, "path to the hotstreak binary")->capture_default_str();
  app.add_option("--workers", g_workers, "worker threads (0: default)");
  CLI11_PARSE(app, argc, argv);
  if (g_workers == 0) g_workers = default_workers();

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"dp_optimality", dp_optimality},
      {"planted_streak_recovery", planted_recovery},
      {"cluster_shuffle_contrast", cluster_contrast},
      {"normalized_gap_peak", gap_peak},
      {"buildup_dropoff", buildup},
      {"follower_fit", follower_fit},
      {"statistics_kit", stats_kit},
      {"classifier_gradient", gradient_check},
      {"classifier_random_labels", random_labels},
      {"classifier_planted_signal", planted_classifier},
      {"determinism", determinism},
      {"scale", scale},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), name) == only.end()) continue;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  std::printf("%s: %d failed\n", failed == 0 ? "ALL PASS" : "SOME FAILED", failed);
  return failed == 0 ? 0 : 1;
}

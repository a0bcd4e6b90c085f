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

#ifndef HOTSTREAK_FOLLOWERS_HPP
#define HOTSTREAK_FOLLOWERS_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "hotstreak/common.hpp"

namespace hotstreak {

struct SnapshotPoint {
  std::int64_t timestamp = 0;
  std::int64_t count = 0;

  friend bool operator==(const SnapshotPoint&, const SnapshotPoint&) = default;
};

struct FollowerSnapshots {
  std::string user_id;
  std::vector<SnapshotPoint> points;
};

// Follower count as a polynomial in u = (t - t_min) / (t_max - t_min).
// coefficients[d] multiplies u^d.
struct FollowerFit {
  int degree = 0;
  std::vector<double> coefficients;
  std::int64_t t_min = 0;
  std::int64_t t_max = 0;
  double r_squared = 0.0;
};

class FollowerFitError : public Error {
 public:
  enum class Kind { kInsufficientSnapshots, kPoorFit };

  FollowerFitError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}

  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

inline constexpr std::size_t kMinSnapshots = 10;
inline constexpr double kMinRSquared = 0.9;
inline constexpr std::array<int, 3> kCandidateDegrees = {4, 5, 6};

namespace detail {

inline double normalized_time(const FollowerFit& fit, double t) {
  const double span = static_cast<double>(fit.t_max - fit.t_min);
  return span > 0.0 ? (t - static_cast<double>(fit.t_min)) / span : 0.0;
}

inline double horner(const std::vector<double>& coefficients, double u) {
  double v = 0.0;
  for (auto it = coefficients.rbegin(); it != coefficients.rend(); ++it) v = v * u + *it;
  return v;
}

}  // namespace detail

// Polynomial value at a raw timestamp, before clamping.
inline double followers_unclamped(const FollowerFit& fit, double timestamp) {
  return detail::horner(fit.coefficients, detail::normalized_time(fit, timestamp));
}

inline double followers_at(const FollowerFit& fit, double timestamp) {
  const double v = followers_unclamped(fit, timestamp);
  return v > 0.0 ? v : 0.0;
}

inline double follower_gain(const FollowerFit& fit, double t0, double t1) {
  if (t0 > t1) throw ArgumentError("follower_gain requires t0 <= t1");
  return followers_unclamped(fit, t1) - followers_unclamped(fit, t0);
}

// Least-squares polynomial of a single degree on the normalized time axis.
inline FollowerFit fit_polynomial(const FollowerSnapshots& snaps, int degree) {
  const auto& pts = snaps.points;
  if (pts.size() < static_cast<std::size_t>(degree) + 1)
    throw FollowerFitError(FollowerFitError::Kind::kInsufficientSnapshots,
                           "degree " + std::to_string(degree) + " needs more snapshots");
  FollowerFit fit;
  fit.degree = degree;
  fit.t_min = pts.front().timestamp;
  fit.t_max = pts.back().timestamp;

  const auto n = static_cast<Eigen::Index>(pts.size());
  Eigen::MatrixXd design(n, degree + 1);
  Eigen::VectorXd y(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const double u = detail::normalized_time(fit, static_cast<double>(pts[static_cast<std::size_t>(r)].timestamp));
    double p = 1.0;
    for (int c = 0; c <= degree; ++c, p *= u) design(r, c) = p;
    y(r) = static_cast<double>(pts[static_cast<std::size_t>(r)].count);
  }
  const Eigen::VectorXd beta = design.colPivHouseholderQr().solve(y);
  fit.coefficients.assign(beta.data(), beta.data() + beta.size());

  const double mean_y = y.mean();
  const double ss_tot = (y.array() - mean_y).square().sum();
  const double ss_res = (design * beta - y).squaredNorm();
  if (ss_tot > 0.0) {
    fit.r_squared = 1.0 - ss_res / ss_tot;
  } else {
    // Constant counts: a perfect fit explains everything there is.
    fit.r_squared = ss_res <= 1e-18 * std::max(1.0, mean_y * mean_y) ? 1.0 : 0.0;
  }
  return fit;
}

// Fits degrees 4, 5 and 6 and keeps the best R^2 (lower degree on ties).
inline FollowerFit fit_follower_curve(const FollowerSnapshots& snaps) {
  const auto& pts = snaps.points;
  if (pts.size() < kMinSnapshots)
    throw FollowerFitError(FollowerFitError::Kind::kInsufficientSnapshots,
                           "user '" + snaps.user_id + "' has " + std::to_string(pts.size()) +
                               " snapshots, need " + std::to_string(kMinSnapshots));
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (pts[i].count < 0) throw ArgumentError("negative follower count");
    if (i > 0 && pts[i].timestamp <= pts[i - 1].timestamp)
      throw ArgumentError("snapshot timestamps must be strictly increasing");
  }
  constexpr double kTie = 1e-10;
  FollowerFit best;
  bool have = false;
  for (int degree : kCandidateDegrees) {
    FollowerFit f = fit_polynomial(snaps, degree);
    if (!have || f.r_squared > best.r_squared + kTie) {
      best = std::move(f);
      have = true;
    }
  }
  if (!(best.r_squared > kMinRSquared))
    throw FollowerFitError(FollowerFitError::Kind::kPoorFit,
                           "user '" + snaps.user_id + "': best R^2 " +
                               std::to_string(best.r_squared) + " <= 0.9");
  return best;
}

}  // namespace hotstreak

#endif  // HOTSTREAK_FOLLOWERS_HPP

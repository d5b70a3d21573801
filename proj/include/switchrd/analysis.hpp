#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <ostream>
#include <vector>

#include <json.hpp>

#include "switchrd/common.hpp"
#include "switchrd/pde.hpp"
#include "switchrd/switching_ode.hpp"

namespace switchrd {

// ---------------------------------------------------------------------------
// Extinction rate
// ---------------------------------------------------------------------------

struct ExtinctionFit {
  double t_lo = 0;
  double t_hi = 0;
  double slope = 0;
  double intercept = 0;
  double r_squared = 0;
  bool all_zero = false;  // v identically zero; slope reported as -inf
  std::size_t n_samples = 0;
};

// Least-squares line through (t, ln sup_x v) over the final tail_fraction of
// samples with positive sup. The early transient pollutes the asymptotic
// rate, hence the default half-window.
inline ExtinctionFit extinction_rate(const SnapshotSeries& series, double tail_fraction = 0.5) {
  if (series.snapshots.empty()) throw insufficient_data_error("extinction_rate: empty series");
  if (!series.has_v) throw insufficient_data_error("extinction_rate: series has no v field");

  std::vector<std::pair<double, double>> usable;  // (t, ln sup v)
  usable.reserve(series.snapshots.size());
  for (const auto& snap : series.snapshots) {
    const double sup = *std::max_element(snap.v.begin(), snap.v.end());
    if (sup > 0.0) usable.emplace_back(snap.t, std::log(sup));
  }
  if (usable.empty()) {
    ExtinctionFit fit;
    fit.all_zero = true;
    fit.slope = -std::numeric_limits<double>::infinity();
    return fit;
  }

  const auto n_tail = static_cast<std::size_t>(
      std::ceil(tail_fraction * static_cast<double>(usable.size())));
  const std::size_t start = usable.size() - std::max<std::size_t>(n_tail, 1);
  const std::size_t n = usable.size() - start;
  if (n < 10) throw insufficient_data_error("extinction_rate: need at least 10 usable samples");

  double st = 0, sy = 0;
  for (std::size_t i = start; i < usable.size(); ++i) {
    st += usable[i].first;
    sy += usable[i].second;
  }
  const double tbar = st / static_cast<double>(n);
  const double ybar = sy / static_cast<double>(n);
  double stt = 0, sty = 0, syy = 0;
  for (std::size_t i = start; i < usable.size(); ++i) {
    const double dt = usable[i].first - tbar;
    const double dy = usable[i].second - ybar;
    stt += dt * dt;
    sty += dt * dy;
    syy += dy * dy;
  }
  ExtinctionFit fit;
  fit.t_lo = usable[start].first;
  fit.t_hi = usable.back().first;
  fit.n_samples = n;
  fit.slope = sty / stt;
  fit.intercept = ybar - fit.slope * tbar;
  fit.r_squared = (syy > 0.0) ? (sty * sty) / (stt * syy) : 1.0;
  return fit;
}

// ---------------------------------------------------------------------------
// Persistence averages
// ---------------------------------------------------------------------------

struct PersistenceAverages {
  double horizon = 0;
  double avg_u = 0;
  double avg_v = 0;
};

// (1/T) int_0^T (1/|E|) int_E z dx dt, trapezoid in both t and x.
inline PersistenceAverages persistence_averages(const SnapshotSeries& series) {
  if (series.snapshots.size() < 2) {
    throw insufficient_data_error("persistence_averages: need at least two snapshots");
  }
  const double T = series.snapshots.back().t - series.snapshots.front().t;
  if (!(T > 0.0)) throw insufficient_data_error("persistence_averages: zero time span");

  auto spatial_mean = [&series](const std::vector<double>& v) {
    double s = 0.5 * (v.front() + v.back());
    for (std::size_t j = 1; j + 1 < v.size(); ++j) s += v[j];
    return s / static_cast<double>(series.grid.nx - 1);
  };

  double acc_u = 0, acc_v = 0;
  for (std::size_t i = 0; i + 1 < series.snapshots.size(); ++i) {
    const auto& s0 = series.snapshots[i];
    const auto& s1 = series.snapshots[i + 1];
    const double w = 0.5 * (s1.t - s0.t);
    acc_u += w * (spatial_mean(s0.u) + spatial_mean(s1.u));
    if (series.has_v) acc_v += w * (spatial_mean(s0.v) + spatial_mean(s1.v));
  }
  return {T, acc_u / T, acc_v / T};
}

// ---------------------------------------------------------------------------
// Flatness and comparison
// ---------------------------------------------------------------------------

inline double spatial_flatness(const Field& f) { return f.sup() - f.inf(); }

inline double spatial_flatness(const std::vector<double>& values) {
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  return *hi - *lo;
}

struct ComparisonResult {
  double max_violation = -std::numeric_limits<double>::infinity();  // max(u - y)
  bool pass = false;
};

// Checks the supersolution inequality u(t,x) <= y(t) pointwise, where y is
// the switching logistic trajectory started from max_x u0 on the same path
// and sampled at the same times.
inline ComparisonResult comparison_check(const SnapshotSeries& series,
                                         const LogisticTrajectory& logistic, double slack) {
  if (series.path.digest() != logistic.path.digest()) {
    throw path_mismatch_error("comparison_check: series and trajectory use different paths");
  }
  if (series.snapshots.size() != logistic.times.size()) {
    throw path_mismatch_error("comparison_check: sample time grids differ in length");
  }
  ComparisonResult result;
  for (std::size_t i = 0; i < series.snapshots.size(); ++i) {
    const auto& snap = series.snapshots[i];
    if (std::abs(snap.t - logistic.times[i]) > 1e-9 * std::max(1.0, snap.t)) {
      throw path_mismatch_error("comparison_check: sample times diverge");
    }
    const double y = logistic.values[i];
    for (double u : snap.u) result.max_violation = std::max(result.max_violation, u - y);
  }
  result.pass = result.max_violation <= slack;
  return result;
}

// ---------------------------------------------------------------------------
// Omega-limit distance
// ---------------------------------------------------------------------------

struct OmegaDistancePoint {
  double t = 0;
  double distance = 0;
  double running_min = 0;
};

// Distance of a snapshot to the candidate set: flatness penalties plus the
// Chebyshev distance of the spatial means to the nearest cloud point. The
// candidate states are constants, so flatness has to enter the metric.
inline std::vector<OmegaDistancePoint> omega_distance(const SnapshotSeries& series,
                                                      const OmegaSetSample& cloud,
                                                      double t_start = 0.0) {
  if (cloud.points.empty()) throw empty_cloud_error();
  std::vector<OmegaDistancePoint> out;
  double running = std::numeric_limits<double>::infinity();
  for (const auto& snap : series.snapshots) {
    if (snap.t < t_start) continue;
    const double flat = spatial_flatness(snap.u) +
                        (series.has_v ? spatial_flatness(snap.v) : 0.0);
    double u_mean = 0, v_mean = 0;
    {
      double su = 0.5 * (snap.u.front() + snap.u.back());
      for (std::size_t j = 1; j + 1 < snap.u.size(); ++j) su += snap.u[j];
      u_mean = su / static_cast<double>(series.grid.nx - 1);
      if (series.has_v) {
        double sv = 0.5 * (snap.v.front() + snap.v.back());
        for (std::size_t j = 1; j + 1 < snap.v.size(); ++j) sv += snap.v[j];
        v_mean = sv / static_cast<double>(series.grid.nx - 1);
      }
    }
    double nearest = std::numeric_limits<double>::infinity();
    for (const auto& pt : cloud.points) {
      nearest = std::min(nearest, std::max(std::abs(u_mean - pt[0]), std::abs(v_mean - pt[1])));
    }
    const double dist = flat + nearest;
    running = std::min(running, dist);
    out.push_back({snap.t, dist, running});
  }
  if (out.empty()) throw insufficient_data_error("omega_distance: no snapshots past t_start");
  return out;
}

// ---------------------------------------------------------------------------
// Report serialization
// ---------------------------------------------------------------------------

inline void to_json(nlohmann::json& j, const ExtinctionFit& fit) {
  j = nlohmann::json{{"t_lo", fit.t_lo},           {"t_hi", fit.t_hi},
                     {"slope", fit.slope},         {"intercept", fit.intercept},
                     {"r_squared", fit.r_squared}, {"all_zero", fit.all_zero},
                     {"n_samples", fit.n_samples}};
}

inline void to_json(nlohmann::json& j, const PersistenceAverages& pa) {
  j = nlohmann::json{{"horizon", pa.horizon}, {"avg_u", pa.avg_u}, {"avg_v", pa.avg_v}};
}

inline void write_flatness_csv(std::ostream& os, const SnapshotSeries& series) {
  os << "t,flat_u,flat_v\n";
  for (const auto& snap : series.snapshots) {
    os << format_double(snap.t) << ',' << format_double(spatial_flatness(snap.u)) << ','
       << format_double(series.has_v ? spatial_flatness(snap.v) : 0.0) << '\n';
  }
}

inline void write_omega_distance_csv(std::ostream& os,
                                     const std::vector<OmegaDistancePoint>& points) {
  os << "t,dist\n";
  for (const auto& p : points) {
    os << format_double(p.t) << ',' << format_double(p.distance) << '\n';
  }
}

}  // namespace switchrd

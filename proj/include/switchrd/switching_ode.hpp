#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <utility>
#include <vector>

#include "switchrd/common.hpp"
#include "switchrd/markov.hpp"
#include "switchrd/model.hpp"
#include "switchrd/rng.hpp"

namespace switchrd {

// ---------------------------------------------------------------------------
// Closed-form logistic flow (one constant-regime segment)
// ---------------------------------------------------------------------------

// y(t) for dy/dt = y(a - b*y), y(0) = y0, written so large a*t cannot
// overflow: y(t) = a*y0 / (b*y0*(1 - exp(-a*t)) + (a - b*y0 + b*y0)*...).
inline double logistic_flow(double a, double b, double y0, double t) {
  if (y0 == 0.0) return 0.0;
  const double em = std::exp(-a * t);
  return a * y0 / (b * y0 + (a - b * y0) * em);
}

// Integral of the flow over [0, t]: (a*t + log((b*y0 + (a-b*y0)e^{-a t})/a))/b.
// Exact per segment, which keeps time-discretization error out of the
// downstream Monte Carlo threshold estimator.
inline double logistic_flow_integral(double a, double b, double y0, double t) {
  if (y0 == 0.0) return 0.0;
  const double em = std::exp(-a * t);
  return (a * t + std::log((b * y0 + (a - b * y0) * em) / a)) / b;
}

// ---------------------------------------------------------------------------
// Switching logistic trajectory
// ---------------------------------------------------------------------------

struct LogisticTrajectory {
  std::vector<double> times;
  std::vector<double> values;
  std::vector<Regime> states;  // state on [t_k, next jump); post-jump at jump rows
  MarkovPath path;
};

// Walks the path segment by segment, emitting (t, y, regime) at every
// multiple of sample_dt and at every jump time. y is advanced with the
// closed-form flow, so the only error is rounding.
template <typename Emit>
void visit_switching_logistic(const SwitchingEnvironment& env, const MarkovPath& path, double y0,
                              double sample_dt, Emit&& emit) {
  const double snap = 1e-12 * std::max(1.0, path.horizon);
  double t_seg = 0.0;
  double y_seg = y0;
  std::uint64_t k_sample = 1;
  emit(0.0, y0, path.state_after(0));
  for (std::size_t seg = 0; seg < path.segment_count(); ++seg) {
    const bool is_jump = seg < path.jump_times.size();
    const double seg_end = is_jump ? path.jump_times[seg] : path.horizon;
    const Regime r = path.state_after(seg);
    const RegimeParams& rp = env.regime(r);
    for (;;) {
      const double ts = static_cast<double>(k_sample) * sample_dt;
      if (ts >= seg_end - snap) {
        if (std::abs(ts - seg_end) <= snap) ++k_sample;  // coincident; jump row covers it
        break;
      }
      emit(ts, logistic_flow(rp.a, rp.b, y_seg, ts - t_seg), r);
      ++k_sample;
    }
    y_seg = logistic_flow(rp.a, rp.b, y_seg, seg_end - t_seg);
    t_seg = seg_end;
    if (is_jump) {
      emit(seg_end, y_seg, path.state_after(seg + 1));
    } else if (seg_end > 0.0) {
      emit(seg_end, y_seg, r);
    }
  }
}

inline LogisticTrajectory simulate_switching_logistic(const SwitchingEnvironment& env,
                                                      const MarkovPath& path, double y0,
                                                      double sample_dt) {
  validate_or_throw(env);
  if (!(y0 > 0.0)) throw std::invalid_argument("simulate_switching_logistic: y0 must be > 0");
  if (!(sample_dt > 0.0)) {
    throw std::invalid_argument("simulate_switching_logistic: sample_dt must be > 0");
  }
  LogisticTrajectory traj;
  traj.path = path;
  visit_switching_logistic(env, path, y0, sample_dt, [&traj](double t, double y, Regime r) {
    traj.times.push_back(t);
    traj.values.push_back(y);
    traj.states.push_back(r);
  });
  return traj;
}

inline void write_logistic_csv(std::ostream& os, const LogisticTrajectory& traj) {
  os << "t,y,state\n";
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    os << format_double(traj.times[i]) << ',' << format_double(traj.values[i]) << ','
       << regime_label(traj.states[i]) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Deterministic Lotka-Volterra flow (adaptive Dormand-Prince 5(4))
// ---------------------------------------------------------------------------

namespace detail {

inline std::array<double, 2> lv_rhs(const RegimeParams& r, const std::array<double, 2>& z) {
  const double u = z[0], v = z[1];
  return {u * (r.a - r.b * u - r.c * v), v * (-r.d + r.e * u - r.f * v)};
}

}  // namespace detail

inline constexpr double kLvAbsTolFloor = 1e-12;  // trajectories approach the axes

// Time-t solution map of the single-regime predator-prey ODE. Local error
// controlled by (kLvAbsTolFloor + tol*|z|); negative round-off clamped at 0.
inline std::pair<double, double> lv_flow(const RegimeParams& r, double u0, double v0, double t,
                                         double tol = 1e-10) {
  if (!(u0 >= 0.0) || !(v0 >= 0.0)) throw std::invalid_argument("lv_flow: negative initial data");
  if (!(t >= 0.0)) throw std::invalid_argument("lv_flow: negative time");
  if (t == 0.0) return {u0, v0};

  std::array<double, 2> z{u0, v0};
  double time = 0.0;
  double h = std::min(t, 0.1 / std::max({r.a, r.d, 1.0}));
  auto k1 = detail::lv_rhs(r, z);
  const double hmin = 1e-14 * std::max(1.0, t);

  while (time < t) {
    if (time + h > t) h = t - time;
    if (h < hmin) throw tolerance_not_met_error("lv_flow: step size underflow");

    const auto f = [&r](const std::array<double, 2>& y) { return detail::lv_rhs(r, y); };
    std::array<double, 2> y2, y3, y4, y5, y6, ynew;
    for (int i = 0; i < 2; ++i) y2[i] = z[i] + h * (1.0 / 5) * k1[i];
    const auto k2 = f(y2);
    for (int i = 0; i < 2; ++i) y3[i] = z[i] + h * (3.0 / 40 * k1[i] + 9.0 / 40 * k2[i]);
    const auto k3 = f(y3);
    for (int i = 0; i < 2; ++i) {
      y4[i] = z[i] + h * (44.0 / 45 * k1[i] - 56.0 / 15 * k2[i] + 32.0 / 9 * k3[i]);
    }
    const auto k4 = f(y4);
    for (int i = 0; i < 2; ++i) {
      y5[i] = z[i] + h * (19372.0 / 6561 * k1[i] - 25360.0 / 2187 * k2[i] +
                          64448.0 / 6561 * k3[i] - 212.0 / 729 * k4[i]);
    }
    const auto k5 = f(y5);
    for (int i = 0; i < 2; ++i) {
      y6[i] = z[i] + h * (9017.0 / 3168 * k1[i] - 355.0 / 33 * k2[i] + 46732.0 / 5247 * k3[i] +
                          49.0 / 176 * k4[i] - 5103.0 / 18656 * k5[i]);
    }
    const auto k6 = f(y6);
    for (int i = 0; i < 2; ++i) {
      ynew[i] = z[i] + h * (35.0 / 384 * k1[i] + 500.0 / 1113 * k3[i] + 125.0 / 192 * k4[i] -
                            2187.0 / 6784 * k5[i] + 11.0 / 84 * k6[i]);
    }
    const auto k7 = f(ynew);

    double err = 0.0;
    for (int i = 0; i < 2; ++i) {
      const double e = h * ((35.0 / 384 - 5179.0 / 57600) * k1[i] +
                            (500.0 / 1113 - 7571.0 / 16695) * k3[i] +
                            (125.0 / 192 - 393.0 / 640) * k4[i] +
                            (-2187.0 / 6784 + 92097.0 / 339200) * k5[i] +
                            (11.0 / 84 - 187.0 / 2100) * k6[i] - (1.0 / 40) * k7[i]);
      const double scale = kLvAbsTolFloor + tol * std::max(std::abs(z[i]), std::abs(ynew[i]));
      err = std::max(err, std::abs(e) / scale);
    }

    if (err <= 1.0) {
      time += h;
      z = ynew;
      if (z[0] < 0.0) z[0] = 0.0;
      if (z[1] < 0.0) z[1] = 0.0;
      k1 = k7;  // FSAL
    }
    const double factor = (err == 0.0) ? 5.0 : 0.9 * std::pow(err, -0.2);
    h *= std::clamp(factor, 0.2, 5.0);
  }
  return {z[0], z[1]};
}

// ---------------------------------------------------------------------------
// Equilibria
// ---------------------------------------------------------------------------

struct Equilibrium {
  double u_star = 0;
  double v_star = 0;
  bool interior = false;
  bool degenerate = false;  // a*e == b*d exactly
};

// Interior point ((af+cd)/(bf+ce), (ae-bd)/(bf+ec)) when a*e > b*d,
// otherwise the prey-only point (a/b, 0).
inline Equilibrium equilibrium(const RegimeParams& r) {
  const double det = r.a * r.e - r.b * r.d;
  if (det > 0.0) {
    const double denom = r.b * r.f + r.c * r.e;
    return {(r.a * r.f + r.c * r.d) / denom, det / denom, true, false};
  }
  return {r.a / r.b, 0.0, false, det == 0.0};
}

// ---------------------------------------------------------------------------
// Omega-limit candidate set
// ---------------------------------------------------------------------------

// Point cloud of alternating flow compositions applied to the plus-regime
// interior equilibrium: level 0 is a + flow (a no-op at the equilibrium,
// drawn anyway), odd levels -, even levels +.
struct OmegaSetSample {
  std::vector<std::array<double, 2>> points;
  std::vector<std::vector<double>> times;  // per point, level 0..depth
  int depth = 0;
  double time_cap = 0;
  std::uint64_t seed = 0;
};

inline OmegaSetSample sample_omega_set(const SwitchingEnvironment& env, int depth,
                                       double time_cap, int n_points, std::uint64_t seed,
                                       double flow_tol = 1e-10) {
  validate_or_throw(env);
  if (depth < 0) throw std::invalid_argument("sample_omega_set: depth must be >= 0");
  if (!(time_cap > 0.0)) throw std::invalid_argument("sample_omega_set: time_cap must be > 0");
  const Equilibrium eq = equilibrium(env.plus);
  if (!eq.interior) throw no_interior_equilibrium_error();

  OmegaSetSample sample;
  sample.depth = depth;
  sample.time_cap = time_cap;
  sample.seed = seed;
  sample.points.resize(static_cast<std::size_t>(n_points));
  sample.times.resize(static_cast<std::size_t>(n_points));
  for (int i = 0; i < n_points; ++i) {
    Rng rng(derive_stream_seed(seed, static_cast<std::uint64_t>(i)));
    std::vector<double> ts(static_cast<std::size_t>(depth) + 1);
    for (auto& t : ts) t = rng.uniform(0.0, time_cap);
    std::pair<double, double> z{eq.u_star, eq.v_star};
    for (int level = 0; level <= depth; ++level) {
      const Regime r = (level % 2 == 0) ? Regime::plus : Regime::minus;
      z = lv_flow(env.regime(r), z.first, z.second, ts[static_cast<std::size_t>(level)], flow_tol);
    }
    sample.points[static_cast<std::size_t>(i)] = {z.first, z.second};
    sample.times[static_cast<std::size_t>(i)] = std::move(ts);
  }
  return sample;
}

inline void write_omega_csv(std::ostream& os, const OmegaSetSample& sample) {
  os << "index,u,v,depth,times\n";
  for (std::size_t i = 0; i < sample.points.size(); ++i) {
    os << i << ',' << format_double(sample.points[i][0]) << ','
       << format_double(sample.points[i][1]) << ',' << sample.depth << ',';
    for (std::size_t k = 0; k < sample.times[i].size(); ++k) {
      if (k > 0) os << ';';
      os << format_double(sample.times[i][k]);
    }
    os << '\n';
  }
}

}  // namespace switchrd

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <ostream>
#include <vector>

#include "switchrd/common.hpp"
#include "switchrd/markov.hpp"
#include "switchrd/model.hpp"

namespace switchrd {

// ---------------------------------------------------------------------------
// Grid and fields
// ---------------------------------------------------------------------------

// Uniform 1-D grid on [0, L] with nodes at both endpoints.
struct Grid {
  double length = 1.0;
  int nx = 3;

  double dx() const { return length / (nx - 1); }
  double x(int j) const { return static_cast<double>(j) * dx(); }

  bool operator==(const Grid&) const = default;
};

struct Field {
  Grid grid{};
  std::vector<double> values;

  static Field constant(const Grid& g, double value) {
    Field f;
    f.grid = g;
    f.values.assign(static_cast<std::size_t>(g.nx), value);
    return f;
  }

  template <typename Fn>
  static Field from_function(const Grid& g, Fn&& fn) {
    Field f;
    f.grid = g;
    f.values.resize(static_cast<std::size_t>(g.nx));
    for (int j = 0; j < g.nx; ++j) f.values[static_cast<std::size_t>(j)] = fn(g.x(j));
    return f;
  }

  double sup() const { return *std::max_element(values.begin(), values.end()); }
  double inf() const { return *std::min_element(values.begin(), values.end()); }

  // Trapezoid spatial mean, i.e. (1/L) * integral over the interval.
  double mean() const {
    double s = 0.5 * (values.front() + values.back());
    for (std::size_t j = 1; j + 1 < values.size(); ++j) s += values[j];
    return s / static_cast<double>(values.size() - 1);
  }
};

// Discrete Laplacian with ghost-point Neumann closure: f_{-1} = f_1 and
// f_{nx} = f_{nx-2}, giving 2(f_1 - f_0)/dx^2 at the left boundary.
inline Field laplacian_neumann(const Field& f) {
  const int nx = f.grid.nx;
  if (nx < 3) throw std::invalid_argument("laplacian_neumann: need nx >= 3");
  const double inv_dx2 = 1.0 / (f.grid.dx() * f.grid.dx());
  Field out;
  out.grid = f.grid;
  out.values.resize(f.values.size());
  const auto& v = f.values;
  out.values[0] = 2.0 * (v[1] - v[0]) * inv_dx2;
  for (int j = 1; j + 1 < nx; ++j) {
    const auto k = static_cast<std::size_t>(j);
    out.values[k] = (v[k - 1] - 2.0 * v[k] + v[k + 1]) * inv_dx2;
  }
  out.values[static_cast<std::size_t>(nx - 1)] =
      2.0 * (v[static_cast<std::size_t>(nx - 2)] - v[static_cast<std::size_t>(nx - 1)]) * inv_dx2;
  return out;
}

// ---------------------------------------------------------------------------
// Simulation state and snapshots
// ---------------------------------------------------------------------------

struct SimState {
  double t = 0;
  Regime regime = Regime::plus;
  Field u, v;
};

struct Snapshot {
  double t = 0;
  Regime regime = Regime::plus;  // post-jump state at jump times (cadlag)
  std::vector<double> u, v;
};

struct SnapshotSeries {
  Grid grid{};
  double sample_dt = 0;
  bool has_v = true;
  MarkovPath path;
  std::vector<Snapshot> snapshots;
};

inline void write_snapshots_csv(std::ostream& os, const SnapshotSeries& series) {
  os << (series.has_v ? "t,x,u,v\n" : "t,x,u\n");
  for (const auto& snap : series.snapshots) {
    for (int j = 0; j < series.grid.nx; ++j) {
      const auto k = static_cast<std::size_t>(j);
      os << format_double(snap.t) << ',' << format_double(series.grid.x(j)) << ','
         << format_double(snap.u[k]);
      if (series.has_v) os << ',' << format_double(snap.v[k]);
      os << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// Crank-Nicolson diffusion sub-step
// ---------------------------------------------------------------------------

// (I - theta*D) f_new = (I + theta*D) f with theta = alpha*dt/2 and the same
// ghost-point Neumann closure as laplacian_neumann; Thomas elimination,
// O(nx) and deterministic. The closure is conservative: the trapezoid
// spatial mean is preserved exactly. Negative round-off is clamped to 0.
inline void diffuse_crank_nicolson(Field& f, double alpha, double dt) {
  const auto n = static_cast<std::size_t>(f.grid.nx);
  const double theta = 0.5 * alpha * dt / (f.grid.dx() * f.grid.dx());
  auto& v = f.values;
  static thread_local std::vector<double> rhs, cprime;
  rhs.resize(n);
  cprime.resize(n);

  rhs[0] = v[0] + 2.0 * theta * (v[1] - v[0]);
  for (std::size_t j = 1; j + 1 < n; ++j) {
    rhs[j] = v[j] + theta * (v[j - 1] - 2.0 * v[j] + v[j + 1]);
  }
  rhs[n - 1] = v[n - 1] + 2.0 * theta * (v[n - 2] - v[n - 1]);

  // rows: [1+2t, -2t | -t, 1+2t, -t | -2t, 1+2t]
  const double diag = 1.0 + 2.0 * theta;
  double beta = diag;
  v[0] = rhs[0] / beta;
  cprime[0] = -2.0 * theta / beta;
  for (std::size_t j = 1; j < n; ++j) {
    const double sub = (j + 1 == n) ? -2.0 * theta : -theta;
    beta = diag - sub * cprime[j - 1];
    cprime[j] = -theta / beta;
    v[j] = (rhs[j] - sub * v[j - 1]) / beta;
  }
  for (std::size_t j = n - 1; j-- > 0;) v[j] -= cprime[j] * v[j + 1];
  for (auto& x : v) x = std::max(0.0, x);
}

// ---------------------------------------------------------------------------
// Hybrid reaction-diffusion solver
// ---------------------------------------------------------------------------

// dt must stay below 0.1 / rate_scale so the explicit Heun reaction half-steps
// resolve the fastest pointwise rates; diffusion is Crank-Nicolson and does
// not constrain dt.
inline double stable_dt_cap(const SwitchingEnvironment& env, const BoundConstants& bounds) {
  const double m = std::max(bounds.m1, bounds.m2);
  double rate_scale = 0.0;
  for (Regime r : {Regime::plus, Regime::minus}) {
    const RegimeParams& rp = env.regime(r);
    rate_scale = std::max(rate_scale, rp.a + rp.d + (rp.b + rp.c + rp.e + rp.f) * m);
  }
  return 0.1 / rate_scale;
}

// Strang-split stepper: half-step reaction (Heun), full-step Crank-Nicolson
// diffusion with Neumann closure (Thomas solve), half-step reaction.
// Negative round-off is clamped to 0 after every sub-step.
class HybridSolver {
 public:
  HybridSolver(const SwitchingEnvironment& env, const BoundConstants& bounds)
      : env_(validate_or_throw(env)), dt_cap_(stable_dt_cap(env, bounds)) {}

  double dt_cap() const { return dt_cap_; }
  const SwitchingEnvironment& env() const { return env_; }

  void step(SimState& state, double dt, bool with_v = true) {
    if (!(dt > 0.0)) throw std::invalid_argument("step: dt must be positive");
    if (dt > dt_cap_ * (1.0 + 1e-12)) {
      throw stability_violation_error("dt = " + std::to_string(dt) + " exceeds stability cap " +
                                      std::to_string(dt_cap_));
    }
    const RegimeParams& rp = env_.regime(state.regime);
    reaction_half(state, rp, 0.5 * dt, with_v);
    diffuse_crank_nicolson(state.u, rp.alpha1, dt);
    if (with_v) diffuse_crank_nicolson(state.v, rp.alpha2, dt);
    reaction_half(state, rp, 0.5 * dt, with_v);
    state.t += dt;
  }

  // Integrates from t = 0 to path.horizon. No step straddles a jump time;
  // the regime switches exactly at each tau_k. Snapshots at every multiple
  // of sample_dt and at every jump.
  SnapshotSeries simulate(const Field& u0, const Field& v0, const MarkovPath& path, double dt,
                          double sample_dt) {
    return run(u0, &v0, path, dt, sample_dt);
  }

  // Prey-only random Fisher-KPP run.
  SnapshotSeries simulate_kpp(const Field& u0, const MarkovPath& path, double dt,
                              double sample_dt) {
    return run(u0, nullptr, path, dt, sample_dt);
  }

 private:
  SnapshotSeries run(const Field& u0, const Field* v0, const MarkovPath& path, double dt,
                     double sample_dt) {
    if (!(dt > 0.0) || !(sample_dt > 0.0)) {
      throw std::invalid_argument("simulate: dt and sample_dt must be positive");
    }
    const bool with_v = v0 != nullptr;
    for (double x : u0.values) {
      if (!(x >= 0.0)) throw std::invalid_argument("simulate: u0 must be nonnegative");
    }
    if (with_v) {
      if (v0->grid.nx != u0.grid.nx) throw std::invalid_argument("simulate: grid mismatch");
      for (double x : v0->values) {
        if (!(x >= 0.0)) throw std::invalid_argument("simulate: v0 must be nonnegative");
      }
    }

    SimState state;
    state.t = 0.0;
    state.regime = path.state_after(0);
    state.u = u0;
    state.v = with_v ? *v0 : Field::constant(u0.grid, 0.0);

    SnapshotSeries series;
    series.grid = u0.grid;
    series.sample_dt = sample_dt;
    series.has_v = with_v;
    series.path = path;

    const double snap = 1e-12 * std::max(1.0, path.horizon);
    auto emit = [&series, &state, with_v](Regime regime) {
      Snapshot s;
      s.t = state.t;
      s.regime = regime;
      s.u = state.u.values;
      if (with_v) s.v = state.v.values;
      series.snapshots.push_back(std::move(s));
    };

    emit(state.regime);
    std::uint64_t k_sample = 1;
    for (std::size_t seg = 0; seg < path.segment_count(); ++seg) {
      const bool is_jump = seg < path.jump_times.size();
      const double seg_end = is_jump ? path.jump_times[seg] : path.horizon;
      for (;;) {
        const double ts = static_cast<double>(k_sample) * sample_dt;
        if (ts >= seg_end - snap) {
          if (std::abs(ts - seg_end) <= snap) ++k_sample;
          break;
        }
        advance_to(state, ts, dt, with_v);
        emit(state.regime);
        ++k_sample;
      }
      advance_to(state, seg_end, dt, with_v);
      if (is_jump) {
        state.regime = path.state_after(seg + 1);
        emit(state.regime);
      } else if (seg_end > 0.0) {
        emit(state.regime);
      }
    }
    return series;
  }

  void advance_to(SimState& state, double t_target, double dt, bool with_v) {
    const double span = t_target - state.t;
    if (span <= 0.0) {
      state.t = t_target;
      return;
    }
    const auto n = static_cast<std::uint64_t>(std::ceil(span / dt - 1e-9));
    const double h = span / static_cast<double>(std::max<std::uint64_t>(n, 1));
    for (std::uint64_t i = 0; i < n; ++i) step(state, h, with_v);
    state.t = t_target;  // absorb accumulated rounding
  }

  void reaction_half(SimState& state, const RegimeParams& rp, double h, bool with_v) {
    auto& u = state.u.values;
    auto& v = state.v.values;
    for (std::size_t j = 0; j < u.size(); ++j) {
      const double uj = u[j];
      const double vj = with_v ? v[j] : 0.0;
      const double fu0 = uj * (rp.a - rp.b * uj - rp.c * vj);
      const double fv0 = with_v ? vj * (-rp.d + rp.e * uj - rp.f * vj) : 0.0;
      const double up = uj + h * fu0;
      const double vp = vj + h * fv0;
      const double fu1 = up * (rp.a - rp.b * up - rp.c * vp);
      u[j] = std::max(0.0, uj + 0.5 * h * (fu0 + fu1));
      if (with_v) {
        const double fv1 = vp * (-rp.d + rp.e * up - rp.f * vp);
        v[j] = std::max(0.0, vj + 0.5 * h * (fv0 + fv1));
      }
    }
  }

  SwitchingEnvironment env_;
  double dt_cap_ = 0;
};

}  // namespace switchrd

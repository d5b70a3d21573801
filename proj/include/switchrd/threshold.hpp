#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "switchrd/common.hpp"
#include "switchrd/markov.hpp"
#include "switchrd/model.hpp"
#include "switchrd/parallel.hpp"
#include "switchrd/quadrature.hpp"
#include "switchrd/rng.hpp"
#include "switchrd/switching_ode.hpp"

namespace switchrd {

struct QuadratureTraceEntry {
  std::string label;
  double value = 0;
  double error = 0;
};

// ---------------------------------------------------------------------------
// Stationary density of the switching logistic process
// ---------------------------------------------------------------------------
//
// The joint stationary law of (y, xi) restricted to regime i has density
// proportional to
//   mu~i(y) = |a(+)-b(+)y|^{e+} |a(-)-b(-)y|^{e-} / y^{p+ + p- + 1},
// with (e+,e-) = (p+-1, p-) for i = + and (p+, p--1) for i = -, where
// p± = q(±)/a(±). The same proportionality constant applies to both regimes,
// and the per-regime masses automatically satisfy N+/N- = pi(+)/pi(-).
// density_at therefore exposes the *conditional* density mu~i/Ni (each regime
// integrates to 1), which is what the per-regime histogram checks compare
// against and what makes lambda match the ergodic time average.
class StationaryDensity {
 public:
  static StationaryDensity compute(const SwitchingEnvironment& env, double quad_tol,
                                   std::vector<QuadratureTraceEntry>* trace = nullptr) {
    validate_or_throw(env);
    StationaryDensity sd;
    sd.env_ = env;
    const double eq_plus = env.plus.a / env.plus.b;
    const double eq_minus = env.minus.a / env.minus.b;
    if (eq_plus == eq_minus) throw degenerate_support_error();
    sd.lo_ = std::min(eq_plus, eq_minus);
    sd.hi_ = std::max(eq_plus, eq_minus);
    sd.p_plus_ = env.q_plus / env.plus.a;
    sd.p_minus_ = env.q_minus / env.minus.a;

    auto norm = sd.integrate([](double) { return 1.0; }, Regime::plus, quad_tol);
    sd.norm_plus_ = norm.value;
    sd.norm_plus_err_ = norm.error;
    if (trace) trace->push_back({"norm_plus", norm.value, norm.error});
    norm = sd.integrate([](double) { return 1.0; }, Regime::minus, quad_tol);
    sd.norm_minus_ = norm.value;
    sd.norm_minus_err_ = norm.error;
    if (trace) trace->push_back({"norm_minus", norm.value, norm.error});

    const auto [pi_plus, pi_minus] = stationary_distribution(env);
    sd.theta_ = 1.0 / (pi_plus * sd.norm_plus_ + pi_minus * sd.norm_minus_);
    if (trace) trace->push_back({"theta", sd.theta_, 0.0});
    return sd;
  }

  double support_lo() const { return lo_; }
  double support_hi() const { return hi_; }
  double theta() const { return theta_; }
  double p_plus() const { return p_plus_; }
  double p_minus() const { return p_minus_; }
  double regime_mass(Regime r) const { return r == Regime::plus ? norm_plus_ : norm_minus_; }
  const SwitchingEnvironment& env() const { return env_; }

  // Unnormalized density; finite only strictly inside the support.
  double mu_unnormalized(double y, Regime r) const {
    const double exp_plus = (r == Regime::plus) ? p_plus_ - 1.0 : p_plus_;
    const double exp_minus = (r == Regime::plus) ? p_minus_ : p_minus_ - 1.0;
    return std::pow(std::abs(env_.plus.a - env_.plus.b * y), exp_plus) *
           std::pow(std::abs(env_.minus.a - env_.minus.b * y), exp_minus) /
           std::pow(y, p_plus_ + p_minus_ + 1.0);
  }

  // Conditional stationary density of y given regime r.
  double density_at(double y, Regime r) const {
    if (!(y > lo_) || !(y < hi_)) throw outside_support_error(y);
    return mu_unnormalized(y, r) / regime_mass(r);
  }

  // Conditional CDF P(y <= c | regime), by the same quadrature machinery.
  double conditional_cdf(double c, Regime r, double quad_tol = 1e-10) const {
    if (c <= lo_) return 0.0;
    if (c >= hi_) return 1.0;
    const auto part = integrate_partial([](double) { return 1.0; }, r, lo_, c, quad_tol);
    return part.value / regime_mass(r);
  }

  // Integral of g(y)*mu_unnormalized(y, r) over the full support with the
  // endpoint-exponent handling.
  template <typename G>
  QuadResult integrate(G&& g, Regime r, double quad_tol) const {
    return integrate_partial(std::forward<G>(g), r, lo_, hi_, quad_tol);
  }

 private:
  template <typename G>
  QuadResult integrate_partial(G&& g, Regime r, double from, double to, double quad_tol) const {
    const double eq_plus = env_.plus.a / env_.plus.b;
    const double exp_plus = (r == Regime::plus) ? p_plus_ - 1.0 : p_plus_;
    const double exp_minus = (r == Regime::plus) ? p_minus_ : p_minus_ - 1.0;
    // The |a(+)-b(+)y| factor vanishes at eq_plus, the other at eq_minus;
    // map each factor's exponent onto the endpoint it belongs to.
    const bool plus_at_lo = (eq_plus == lo_);
    double alpha_lo = plus_at_lo ? exp_plus : exp_minus;
    double alpha_hi = plus_at_lo ? exp_minus : exp_plus;
    if (from > lo_) alpha_lo = 0.0;  // interior cut: no singular factor there
    if (to < hi_) alpha_hi = 0.0;
    auto f = [this, r, &g](double y) { return g(y) * mu_unnormalized(y, r); };
    return integrate_endpoint_algebraic(f, from, to, alpha_lo, alpha_hi, quad_tol);
  }

  SwitchingEnvironment env_{};
  double lo_ = 0, hi_ = 0;
  double p_plus_ = 0, p_minus_ = 0;
  double norm_plus_ = 0, norm_minus_ = 0;
  double norm_plus_err_ = 0, norm_minus_err_ = 0;
  double theta_ = 0;
};

// theta normalizes pi(+)mu+ + pi(-)mu- to unit mass over the support.
inline double compute_theta(const SwitchingEnvironment& env, double quad_tol) {
  return StationaryDensity::compute(env, quad_tol).theta();
}

// ---------------------------------------------------------------------------
// Threshold lambda
// ---------------------------------------------------------------------------

struct LambdaEstimate {
  double value = 0;
  double error = 0;  // quadrature: absolute estimate; MC: standard error
};

// lambda = sum_i pi(i) * E[-d(i) + e(i) y | regime i] under the stationary
// law. Degenerate support (both regimes share the equilibrium y*) falls back
// to the point mass at y*.
inline LambdaEstimate lambda_quadrature(const SwitchingEnvironment& env, double quad_tol,
                                        std::vector<QuadratureTraceEntry>* trace = nullptr) {
  validate_or_throw(env);
  const auto [pi_plus, pi_minus] = stationary_distribution(env);
  const double eq_plus = env.plus.a / env.plus.b;
  const double eq_minus = env.minus.a / env.minus.b;
  if (eq_plus == eq_minus) {
    const double y_star = eq_plus;
    const double lam = pi_plus * (-env.plus.d + env.plus.e * y_star) +
                       pi_minus * (-env.minus.d + env.minus.e * y_star);
    if (trace) trace->push_back({"lambda_point_mass", lam, 0.0});
    return {lam, 0.0};
  }

  const auto sd = StationaryDensity::compute(env, quad_tol, trace);
  LambdaEstimate out;
  out.value = 0.0;
  out.error = 0.0;
  for (Regime r : {Regime::plus, Regime::minus}) {
    const RegimeParams& rp = env.regime(r);
    const double pi_r = (r == Regime::plus) ? pi_plus : pi_minus;
    const auto moment =
        sd.integrate([&rp](double y) { return -rp.d + rp.e * y; }, r, quad_tol);
    if (trace) {
      trace->push_back({std::string("moment_") + regime_label(r), moment.value, moment.error});
    }
    const double mass = sd.regime_mass(r);
    out.value += pi_r * moment.value / mass;
    // first-order error propagation through the ratio moment/mass
    const double mass_err = quad_tol * mass;  // relative tolerance achieved on the norm
    out.error += pi_r * (moment.error / mass + std::abs(moment.value) * mass_err / (mass * mass));
  }
  return out;
}

struct MonteCarloOptions {
  double horizon = 1e4;
  int n_paths = 16;
  std::uint64_t seed = 1;
  double burn_in_fraction = 0.1;  // initial-condition memory decays exponentially
  int workers = 1;
};

// Ergodic estimate: time average of -d(xi_t) + e(xi_t) y(t) along exact
// piecewise-logistic trajectories (closed-form segment integrals, so the
// only error is statistical).
inline LambdaEstimate lambda_mc(const SwitchingEnvironment& env, const MonteCarloOptions& opts) {
  validate_or_throw(env);
  if (!(opts.horizon > 0.0)) throw std::invalid_argument("lambda_mc: horizon must be > 0");
  if (opts.n_paths < 1) throw std::invalid_argument("lambda_mc: need at least one path");

  const auto [pi_plus, pi_minus] = stationary_distribution(env);
  const double y0 = 0.5 * (env.plus.a / env.plus.b + env.minus.a / env.minus.b);
  const double t_burn = opts.burn_in_fraction * opts.horizon;

  std::vector<double> per_path(static_cast<std::size_t>(opts.n_paths));
  parallel_for(per_path.size(), opts.workers, [&](std::size_t i) {
    Rng rng(derive_stream_seed(opts.seed, i));
    Regime state = rng.bernoulli(pi_plus) ? Regime::plus : Regime::minus;
    double t = 0.0;
    double y = y0;
    double acc = 0.0;
    while (t < opts.horizon) {
      const RegimeParams& rp = env.regime(state);
      const double hold = rng.exponential(env.exit_rate(state));
      const double t1 = std::min(t + hold, opts.horizon);
      const double s0 = std::max(t, t_burn);
      if (t1 > s0) {
        const double y_s0 = logistic_flow(rp.a, rp.b, y, s0 - t);
        const double span = t1 - s0;
        acc += -rp.d * span + rp.e * logistic_flow_integral(rp.a, rp.b, y_s0, span);
      }
      y = logistic_flow(rp.a, rp.b, y, t1 - t);
      t = t1;
      state = other(state);
    }
    per_path[i] = acc / (opts.horizon - t_burn);
  });

  const double n = static_cast<double>(per_path.size());
  const double mean = pairwise_sum(per_path) / n;
  if (per_path.size() == 1) return {mean, 0.0};
  std::vector<double> sq(per_path.size());
  for (std::size_t i = 0; i < per_path.size(); ++i) {
    sq[i] = (per_path[i] - mean) * (per_path[i] - mean);
  }
  const double var = pairwise_sum(sq) / (n - 1.0);
  return {mean, std::sqrt(var / n)};
}

// ---------------------------------------------------------------------------
// Classification and report
// ---------------------------------------------------------------------------

enum class Classification { Extinction, Persistence, Critical };

inline const char* classification_name(Classification c) {
  switch (c) {
    case Classification::Extinction: return "Extinction";
    case Classification::Persistence: return "Persistence";
    default: return "Critical";
  }
}

struct ThresholdReport {
  LambdaEstimate lambda_quad;
  LambdaEstimate lambda_mc;
  Classification classification = Classification::Critical;
  double delta1 = 0;  // prey persistence bound (Persistence only)
  double delta2 = 0;  // predator persistence bound (Persistence only)
  double support_lo = 0;
  double support_hi = 0;
  double theta = std::numeric_limits<double>::quiet_NaN();
  std::vector<QuadratureTraceEntry> diagnostics;
};

struct ClassifyOptions {
  double quad_tol = 1e-10;
  double crit_tol = 1e-3;  // below combined numerical error at defaults
  MonteCarloOptions mc{};
};

inline ThresholdReport classify(const SwitchingEnvironment& env, const ClassifyOptions& opts = {}) {
  validate_or_throw(env);
  ThresholdReport report;
  report.lambda_quad = lambda_quadrature(env, opts.quad_tol, &report.diagnostics);
  report.lambda_mc = lambda_mc(env, opts.mc);

  const double eq_plus = env.plus.a / env.plus.b;
  const double eq_minus = env.minus.a / env.minus.b;
  report.support_lo = std::min(eq_plus, eq_minus);
  report.support_hi = std::max(eq_plus, eq_minus);
  if (eq_plus != eq_minus) {
    report.theta = StationaryDensity::compute(env, opts.quad_tol).theta();
  }

  const double lam = report.lambda_quad.value;
  if (lam < -opts.crit_tol) {
    report.classification = Classification::Extinction;
  } else if (lam > opts.crit_tol) {
    report.classification = Classification::Persistence;
    const Extrema& ex = env.ext;
    report.delta2 = lam * ex.b_min / (ex.f_max * ex.b_min + ex.c_max * ex.e_max);
    report.delta1 = (ex.c_min * ex.d_min / (ex.a_max * ex.e_max)) * report.delta2;
  } else {
    report.classification = Classification::Critical;
  }
  return report;
}

inline void to_json(nlohmann::json& j, const QuadratureTraceEntry& t) {
  j = nlohmann::json{{"label", t.label}, {"value", t.value}, {"error", t.error}};
}

inline void to_json(nlohmann::json& j, const ThresholdReport& r) {
  j = nlohmann::json{{"lambda_quadrature", r.lambda_quad.value},
                     {"lambda_quadrature_err", r.lambda_quad.error},
                     {"lambda_mc", r.lambda_mc.value},
                     {"lambda_mc_stderr", r.lambda_mc.error},
                     {"classification", classification_name(r.classification)},
                     {"delta1", r.delta1},
                     {"delta2", r.delta2},
                     {"support_lo", r.support_lo},
                     {"support_hi", r.support_hi},
                     {"theta", r.theta},
                     {"diagnostics", r.diagnostics}};
}

// ---------------------------------------------------------------------------
// Empirical-vs-quadrature distribution check helpers
// ---------------------------------------------------------------------------

// Max |F_quad(q_k) - p_k| over n_quantiles empirical quantiles of the sorted
// sample (the Kolmogorov distance probed at quantile points).
template <typename Cdf>
double kolmogorov_distance_at_quantiles(std::vector<double>& samples, Cdf&& cdf,
                                        int n_quantiles = 20) {
  if (samples.empty()) throw insufficient_data_error("no samples for distribution check");
  std::sort(samples.begin(), samples.end());
  double worst = 0.0;
  const auto n = static_cast<double>(samples.size());
  for (int k = 1; k <= n_quantiles; ++k) {
    const double p = static_cast<double>(k) / (n_quantiles + 1);
    const auto idx = static_cast<std::size_t>(p * (n - 1.0));
    worst = std::max(worst, std::abs(cdf(samples[idx]) - p));
  }
  return worst;
}

}  // namespace switchrd

#pragma once

#include <algorithm>
#include <cstdint>
#include <ostream>
#include <utility>
#include <vector>

#include <json.hpp>

#include "switchrd/common.hpp"
#include "switchrd/model.hpp"
#include "switchrd/rng.hpp"

namespace switchrd {

// One realized telegraph trajectory. The state is piecewise constant and
// cadlag: on [tau_k, tau_{k+1}) it equals the initial state flipped k times.
struct MarkovPath {
  Regime initial_state = Regime::plus;
  std::vector<double> jump_times;  // strictly increasing, in (0, horizon]
  double horizon = 0;

  std::size_t segment_count() const { return jump_times.size() + 1; }

  // State on segment k (i.e. after k jumps).
  Regime state_after(std::size_t k) const {
    return (k % 2 == 0) ? initial_state : other(initial_state);
  }

  Regime state_at(double t) const {
    const auto k = static_cast<std::size_t>(
        std::upper_bound(jump_times.begin(), jump_times.end(), t) - jump_times.begin());
    return state_after(k);
  }

  std::uint64_t digest() const {
    std::string bytes;
    bytes.reserve(jump_times.size() * 8 + 16);
    auto put = [&bytes](double x) {
      const char* p = reinterpret_cast<const char*>(&x);
      bytes.append(p, p + sizeof(double));
    };
    bytes.push_back(regime_label(initial_state));
    put(horizon);
    for (double t : jump_times) put(t);
    return fnv1a64(bytes);
  }
};

// Exact sampling: holding time in state i is Exponential(exit rate of i);
// the last partial holding interval is truncated at the horizon, and a jump
// landing exactly on the horizon is kept.
inline MarkovPath sample_path(const SwitchingEnvironment& env, Regime initial_state,
                              double horizon, std::uint64_t seed) {
  validate_or_throw(env);
  if (!(horizon >= 0.0)) throw std::invalid_argument("sample_path: horizon must be >= 0");

  MarkovPath path;
  path.initial_state = initial_state;
  path.horizon = horizon;
  Rng rng(seed);
  double t = 0.0;
  Regime state = initial_state;
  for (;;) {
    t += rng.exponential(env.exit_rate(state));
    if (t > horizon) break;
    path.jump_times.push_back(t);
    state = other(state);
  }
  return path;
}

// pi(+) = q(-)/(q(+)+q(-)), pi(-) = q(+)/(q(+)+q(-)).
inline std::pair<double, double> stationary_distribution(const SwitchingEnvironment& env) {
  validate_or_throw(env);
  const double total = env.q_plus + env.q_minus;
  return {env.q_minus / total, env.q_plus / total};
}

// Fraction of [0, horizon] spent in + and in -; sums to 1.
inline std::pair<double, double> occupation_fractions(const MarkovPath& path) {
  if (!(path.horizon > 0.0)) throw zero_horizon_error();
  double in_plus = 0.0;
  double prev = 0.0;
  std::size_t k = 0;
  for (; k < path.jump_times.size(); ++k) {
    if (path.state_after(k) == Regime::plus) in_plus += path.jump_times[k] - prev;
    prev = path.jump_times[k];
  }
  if (path.state_after(k) == Regime::plus) in_plus += path.horizon - prev;
  const double frac_plus = in_plus / path.horizon;
  return {frac_plus, 1.0 - frac_plus};
}

// CSV dump: one row per jump.
inline void write_path_csv(std::ostream& os, const MarkovPath& path) {
  os << "k,tau_k,state_after_jump\n";
  for (std::size_t k = 0; k < path.jump_times.size(); ++k) {
    os << (k + 1) << ',' << format_double(path.jump_times[k]) << ','
       << regime_label(path.state_after(k + 1)) << '\n';
  }
}

inline void to_json(nlohmann::json& j, const MarkovPath& path) {
  j = nlohmann::json{{"initial_state", std::string(1, regime_label(path.initial_state))},
                     {"jump_times", path.jump_times},
                     {"horizon", path.horizon}};
}

inline void from_json(const nlohmann::json& j, MarkovPath& path) {
  const auto label = j.at("initial_state").get<std::string>();
  if (label.size() != 1) throw config_error("initial_state must be \"+\" or \"-\"");
  path.initial_state = regime_from_label(label[0]);
  j.at("jump_times").get_to(path.jump_times);
  j.at("horizon").get_to(path.horizon);
}

}  // namespace switchrd

#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "switchrd/common.hpp"
#include "switchrd/expr.hpp"
#include "switchrd/model.hpp"
#include "switchrd/threshold.hpp"

namespace switchrd {

struct GridConfig {
  double length = 1.0;
  int nx = 101;
};

struct TimeConfig {
  double horizon = 50.0;
  double dt = 0.0;  // 0 = auto: half the stability cap
  double sample_dt = 0.1;
};

struct ThresholdConfig {
  double quad_tol = 1e-10;
  double crit_tol = 1e-3;
  double mc_horizon = 1e4;
  int mc_paths = 16;
  double burn_in = 0.1;
};

struct OmegaConfig {
  int depth = 3;
  double time_cap = 2.0;
  int n_points = 500;
};

struct SweepAxis {
  std::string field;
  std::vector<double> values;
};

struct RunConfig {
  SwitchingEnvironment environment;
  GridConfig grid;
  std::string u0_expr = "1";
  std::string v0_expr = "1";
  Regime initial_regime = Regime::plus;
  TimeConfig time;
  std::uint64_t seed = 1;
  std::string output_dir = "out";
  ThresholdConfig threshold;
  OmegaConfig omega;
  std::vector<SweepAxis> sweep_axes;
  nlohmann::json raw;  // canonical echo, feeds the reproducibility digest

  std::string digest() const { return hex64(fnv1a64(raw.dump())); }
};

namespace detail {

inline double require_positive(const nlohmann::json& j, const std::string& key) {
  if (!j.contains(key)) throw config_error("missing config key: " + key);
  double v;
  try {
    v = j.at(key).get<double>();
  } catch (const nlohmann::json::exception&) {
    throw config_error("config key '" + key + "' must be a number");
  }
  if (!(v > 0.0)) throw config_error("config key '" + key + "' must be positive");
  return v;
}

}  // namespace detail

inline RunConfig parse_config(const nlohmann::json& j) {
  RunConfig cfg;
  cfg.raw = j;
  if (!j.contains("environment")) throw config_error("missing config key: environment");
  try {
    cfg.environment = j.at("environment").get<SwitchingEnvironment>();
  } catch (const nlohmann::json::exception& e) {
    throw config_error(std::string("config key 'environment' is malformed: ") + e.what());
  }
  {
    auto issues = validate(cfg.environment);
    if (!issues.empty()) throw config_error(validation_error::describe(issues));
  }

  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    cfg.grid.length = detail::require_positive(g, "L");
    if (!g.contains("nx")) throw config_error("missing config key: grid.nx");
    cfg.grid.nx = g.at("nx").get<int>();
    if (cfg.grid.nx < 3) throw config_error("config key 'grid.nx' must be at least 3");
  }

  if (j.contains("initial")) {
    const auto& init = j.at("initial");
    if (init.contains("u0")) cfg.u0_expr = init.at("u0").get<std::string>();
    if (init.contains("v0")) cfg.v0_expr = init.at("v0").get<std::string>();
    if (init.contains("regime")) {
      const auto s = init.at("regime").get<std::string>();
      if (s.size() != 1) throw config_error("config key 'initial.regime' must be \"+\" or \"-\"");
      cfg.initial_regime = regime_from_label(s[0]);
    }
    // fail now, not mid-run, if the expressions cannot be evaluated
    Expression::parse(cfg.u0_expr);
    Expression::parse(cfg.v0_expr);
  }

  if (j.contains("time")) {
    const auto& t = j.at("time");
    cfg.time.horizon = detail::require_positive(t, "horizon");
    if (t.contains("dt")) cfg.time.dt = detail::require_positive(t, "dt");
    if (t.contains("sample_dt")) cfg.time.sample_dt = detail::require_positive(t, "sample_dt");
  }

  if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("output_dir")) cfg.output_dir = j.at("output_dir").get<std::string>();

  if (j.contains("threshold")) {
    const auto& t = j.at("threshold");
    if (t.contains("quad_tol")) cfg.threshold.quad_tol = detail::require_positive(t, "quad_tol");
    if (t.contains("crit_tol")) cfg.threshold.crit_tol = detail::require_positive(t, "crit_tol");
    if (t.contains("mc_horizon")) {
      cfg.threshold.mc_horizon = detail::require_positive(t, "mc_horizon");
    }
    if (t.contains("mc_paths")) {
      cfg.threshold.mc_paths = t.at("mc_paths").get<int>();
      if (cfg.threshold.mc_paths < 1) throw config_error("config key 'mc_paths' must be >= 1");
    }
    if (t.contains("burn_in")) {
      cfg.threshold.burn_in = t.at("burn_in").get<double>();
      if (cfg.threshold.burn_in < 0.0 || cfg.threshold.burn_in >= 1.0) {
        throw config_error("config key 'burn_in' must lie in [0, 1)");
      }
    }
  }

  if (j.contains("omega")) {
    const auto& o = j.at("omega");
    if (o.contains("depth")) {
      cfg.omega.depth = o.at("depth").get<int>();
      if (cfg.omega.depth < 0) throw config_error("config key 'omega.depth' must be >= 0");
    }
    if (o.contains("time_cap")) cfg.omega.time_cap = detail::require_positive(o, "time_cap");
    if (o.contains("n_points")) {
      cfg.omega.n_points = o.at("n_points").get<int>();
      if (cfg.omega.n_points < 1) throw config_error("config key 'omega.n_points' must be >= 1");
    }
  }

  if (j.contains("sweep")) {
    const auto& s = j.at("sweep");
    if (!s.contains("axes")) throw config_error("missing config key: sweep.axes");
    for (const auto& axis : s.at("axes")) {
      SweepAxis ax;
      ax.field = axis.at("field").get<std::string>();
      if (axis.contains("values")) {
        axis.at("values").get_to(ax.values);
      } else {
        const double from = axis.at("from").get<double>();
        const double to = axis.at("to").get<double>();
        const int count = axis.at("count").get<int>();
        if (count < 1) throw config_error("sweep axis 'count' must be >= 1");
        for (int i = 0; i < count; ++i) {
          ax.values.push_back(count == 1 ? from : from + (to - from) * i / (count - 1));
        }
      }
      if (ax.values.empty()) throw config_error("sweep axis '" + ax.field + "' has no values");
      cfg.sweep_axes.push_back(std::move(ax));
    }
    if (cfg.sweep_axes.size() > 3) throw config_error("sweep supports at most 3 axes");
  }

  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw config_error("config file '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

// Applies one sweep-axis assignment. Field names follow the environment JSON:
// "plus.a".."plus.alpha2", "minus.*", "q_plus", "q_minus".
inline SwitchingEnvironment with_field(const SwitchingEnvironment& env, const std::string& field,
                                       double value) {
  RegimeParams p = env.plus;
  RegimeParams m = env.minus;
  double qp = env.q_plus;
  double qm = env.q_minus;
  auto set_param = [&field, value](RegimeParams& r, const std::string& name) {
    if (name == "a") r.a = value;
    else if (name == "b") r.b = value;
    else if (name == "c") r.c = value;
    else if (name == "d") r.d = value;
    else if (name == "e") r.e = value;
    else if (name == "f") r.f = value;
    else if (name == "alpha1") r.alpha1 = value;
    else if (name == "alpha2") r.alpha2 = value;
    else throw unknown_field_error(field);
  };
  if (field == "q_plus") {
    qp = value;
  } else if (field == "q_minus") {
    qm = value;
  } else if (field.rfind("plus.", 0) == 0) {
    set_param(p, field.substr(5));
  } else if (field.rfind("minus.", 0) == 0) {
    set_param(m, field.substr(6));
  } else {
    throw unknown_field_error(field);
  }
  return SwitchingEnvironment(p, m, qp, qm);
}

}  // namespace switchrd

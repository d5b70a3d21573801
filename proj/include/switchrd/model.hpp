#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include <json.hpp>

#include "switchrd/common.hpp"

namespace switchrd {

enum class Regime { plus, minus };

inline Regime other(Regime r) { return r == Regime::plus ? Regime::minus : Regime::plus; }
inline char regime_label(Regime r) { return r == Regime::plus ? '+' : '-'; }

inline Regime regime_from_label(char c) {
  if (c == '+') return Regime::plus;
  if (c == '-') return Regime::minus;
  throw config_error(std::string("regime label must be '+' or '-', got '") + c + "'");
}

// The six Lotka-Volterra coefficients plus the two diffusivities of one
// environmental state.
struct RegimeParams {
  double a = 0;       // prey growth rate
  double b = 0;       // prey self-limitation
  double c = 0;       // predation rate
  double d = 0;       // predator death rate
  double e = 0;       // conversion rate
  double f = 0;       // predator self-limitation
  double alpha1 = 0;  // prey diffusivity
  double alpha2 = 0;  // predator diffusivity
};

// Componentwise max/min of the rate coefficients over the two regimes.
// They sit in hot loops (persistence bounds, dt caps), hence cached.
struct Extrema {
  double a_max = 0, a_min = 0;
  double b_max = 0, b_min = 0;
  double c_max = 0, c_min = 0;
  double d_max = 0, d_min = 0;
  double e_max = 0, e_min = 0;
  double f_max = 0, f_min = 0;
};

// Both regimes plus the switching intensities q(+): + -> - and q(-): - -> +.
// Treated as immutable after construction; safe to share across workers.
struct SwitchingEnvironment {
  RegimeParams plus{};
  RegimeParams minus{};
  double q_plus = 0;
  double q_minus = 0;
  Extrema ext{};

  SwitchingEnvironment() = default;
  SwitchingEnvironment(const RegimeParams& p, const RegimeParams& m, double qp, double qm)
      : plus(p), minus(m), q_plus(qp), q_minus(qm) {
    ext.a_max = std::max(p.a, m.a);
    ext.a_min = std::min(p.a, m.a);
    ext.b_max = std::max(p.b, m.b);
    ext.b_min = std::min(p.b, m.b);
    ext.c_max = std::max(p.c, m.c);
    ext.c_min = std::min(p.c, m.c);
    ext.d_max = std::max(p.d, m.d);
    ext.d_min = std::min(p.d, m.d);
    ext.e_max = std::max(p.e, m.e);
    ext.e_min = std::min(p.e, m.e);
    ext.f_max = std::max(p.f, m.f);
    ext.f_min = std::min(p.f, m.f);
  }

  const RegimeParams& regime(Regime r) const { return r == Regime::plus ? plus : minus; }
  double exit_rate(Regime r) const { return r == Regime::plus ? q_plus : q_minus; }
};

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

enum class ViolationKind { NonPositiveParameter, NonPositiveIntensity };

struct ParamViolation {
  ViolationKind kind;
  std::string field;  // e.g. "plus.c", "q_minus"
};

struct validation_error : error {
  std::vector<ParamViolation> violations;
  explicit validation_error(std::vector<ParamViolation> v)
      : error(describe(v)), violations(std::move(v)) {}

  static std::string describe(const std::vector<ParamViolation>& v) {
    std::string msg = "invalid environment:";
    for (const auto& p : v) {
      msg += ' ';
      msg += (p.kind == ViolationKind::NonPositiveIntensity ? "NonPositiveIntensity(" : "NonPositiveParameter(");
      msg += p.field;
      msg += ')';
    }
    return msg;
  }
};

inline std::vector<ParamViolation> validate(const SwitchingEnvironment& env) {
  std::vector<ParamViolation> out;
  auto check_regime = [&out](const RegimeParams& r, const char* prefix) {
    const std::pair<const char*, double> fields[] = {
        {"a", r.a}, {"b", r.b}, {"c", r.c},      {"d", r.d},
        {"e", r.e}, {"f", r.f}, {"alpha1", r.alpha1}, {"alpha2", r.alpha2}};
    for (const auto& [name, value] : fields) {
      if (!(value > 0.0)) {
        out.push_back({ViolationKind::NonPositiveParameter, std::string(prefix) + "." + name});
      }
    }
  };
  check_regime(env.plus, "plus");
  check_regime(env.minus, "minus");
  if (!(env.q_plus > 0.0)) out.push_back({ViolationKind::NonPositiveIntensity, "q_plus"});
  if (!(env.q_minus > 0.0)) out.push_back({ViolationKind::NonPositiveIntensity, "q_minus"});
  return out;
}

inline const SwitchingEnvironment& validate_or_throw(const SwitchingEnvironment& env) {
  auto v = validate(env);
  if (!v.empty()) throw validation_error(std::move(v));
  return env;
}

// ---------------------------------------------------------------------------
// Almost-sure solution bounds
// ---------------------------------------------------------------------------

// Sup bounds M1 (prey) and M2 (predator) that every trajectory respects.
struct BoundConstants {
  double m1 = 0;
  double m2 = 0;
};

inline constexpr double kDefaultBoundMargin = 0.01;

// The bounds hold for any strict majorant of the max expressions; margin is
// the fractional slack applied on top.
inline BoundConstants bound_constants(const SwitchingEnvironment& env, double u0_sup,
                                      double v0_sup, double margin = kDefaultBoundMargin) {
  validate_or_throw(env);
  if (!(u0_sup >= 0.0) || !(v0_sup >= 0.0)) {
    throw std::invalid_argument("bound_constants: initial sup bounds must be nonnegative");
  }
  if (!(margin > 0.0)) throw std::invalid_argument("bound_constants: margin must be positive");

  const double ab = std::max(env.plus.a / env.plus.b, env.minus.a / env.minus.b);
  const double m1 = (1.0 + margin) * std::max(ab, u0_sup);

  const double ac = std::max(env.plus.a / env.plus.c, env.minus.a / env.minus.c);
  const double ef = std::max(0.0, std::max((m1 * env.plus.e - env.plus.d) / env.plus.f,
                                           (m1 * env.minus.e - env.minus.d) / env.minus.f));
  const double m2 = (1.0 + margin) * std::max({ac, ef, v0_sup});
  return {m1, m2};
}

// ---------------------------------------------------------------------------
// JSON serialization (field names are part of the file-format contract)
// ---------------------------------------------------------------------------

inline void to_json(nlohmann::json& j, const RegimeParams& r) {
  j = nlohmann::json{{"a", r.a},           {"b", r.b}, {"c", r.c}, {"d", r.d}, {"e", r.e},
                     {"f", r.f},           {"alpha1", r.alpha1},   {"alpha2", r.alpha2}};
}

inline void from_json(const nlohmann::json& j, RegimeParams& r) {
  j.at("a").get_to(r.a);
  j.at("b").get_to(r.b);
  j.at("c").get_to(r.c);
  j.at("d").get_to(r.d);
  j.at("e").get_to(r.e);
  j.at("f").get_to(r.f);
  j.at("alpha1").get_to(r.alpha1);
  j.at("alpha2").get_to(r.alpha2);
}

inline void to_json(nlohmann::json& j, const SwitchingEnvironment& env) {
  j = nlohmann::json{
      {"plus", env.plus}, {"minus", env.minus}, {"q_plus", env.q_plus}, {"q_minus", env.q_minus}};
}

inline void from_json(const nlohmann::json& j, SwitchingEnvironment& env) {
  RegimeParams p = j.at("plus").get<RegimeParams>();
  RegimeParams m = j.at("minus").get<RegimeParams>();
  env = SwitchingEnvironment(p, m, j.at("q_plus").get<double>(), j.at("q_minus").get<double>());
}

}  // namespace switchrd

#include <cmath>
#include <sstream>

#include <catch2/catch_amalgamated.hpp>

#include "switchrd/analysis.hpp"
#include "switchrd/pde.hpp"
#include "test_support.hpp"

using namespace switchrd;
using Catch::Approx;

namespace {

constexpr double kPi = 3.14159265358979323846;

Field cos_profile(const Grid& g, double amplitude, double offset) {
  return Field::from_function(
      g, [amplitude, offset](double x) { return amplitude * std::cos(kPi * x) + offset; });
}

double max_interior_laplacian_error(int nx) {
  const Grid g{1.0, nx};
  const Field f = Field::from_function(g, [](double x) { return std::cos(kPi * x); });
  const Field lap = laplacian_neumann(f);
  double worst = 0.0;
  for (int j = 1; j + 1 < nx; ++j) {
    const double exact = -kPi * kPi * std::cos(kPi * g.x(j));
    worst = std::max(worst, std::abs(lap.values[static_cast<std::size_t>(j)] - exact));
  }
  return worst;
}

// single-regime environment for deterministic Fisher-KPP checks
SwitchingEnvironment kpp_env() {
  RegimeParams r{1, 1, 1, 1, 1, 1, 1, 1};
  return {r, r, 5.0, 5.0};
}

}  // namespace

TEST_CASE("discrete Laplacian annihilates constants", "[pde]") {
  const Grid g{1.0, 17};
  const Field f = Field::constant(g, 4.2);
  for (double x : laplacian_neumann(f).values) CHECK(x == 0.0);
}

TEST_CASE("discrete Laplacian is exact on quadratics in the interior", "[pde]") {
  const Grid g{1.0, 41};
  const Field f = Field::from_function(g, [](double x) { return x * x; });
  const Field lap = laplacian_neumann(f);
  for (int j = 1; j + 1 < g.nx; ++j) {
    CHECK(lap.values[static_cast<std::size_t>(j)] == Approx(2.0).epsilon(1e-9));
  }
}

TEST_CASE("discrete Laplacian converges at second order", "[pde]") {
  const double e101 = max_interior_laplacian_error(101);
  const double e201 = max_interior_laplacian_error(201);
  const double ratio = e101 / e201;
  CHECK(ratio > 3.5);
  CHECK(ratio < 4.5);
}

TEST_CASE("spatially flat equilibrium is a fixed point of step", "[pde]") {
  const auto env = testsupport::example52();
  const Grid g{1.0, 31};
  const BoundConstants bounds = bound_constants(env, 1.0, 0.0);
  HybridSolver solver(env, bounds);
  SimState state;
  state.regime = Regime::plus;
  state.u = Field::constant(g, 1.0);  // a(+)/b(+)
  state.v = Field::constant(g, 0.0);
  for (int i = 0; i < 50; ++i) solver.step(state, 1e-3);
  for (double u : state.u.values) CHECK(u == Approx(1.0).epsilon(1e-13));
  for (double v : state.v.values) CHECK(v == 0.0);
}

TEST_CASE("the predator-free subspace is invariant", "[pde]") {
  const auto env = testsupport::example52();
  const Grid g{1.0, 41};
  const BoundConstants bounds = bound_constants(env, 4.0, 0.0);
  HybridSolver solver(env, bounds);
  SimState state;
  state.regime = Regime::minus;
  state.u = cos_profile(g, 2.0, 2.0);
  state.v = Field::constant(g, 0.0);
  for (int i = 0; i < 200; ++i) solver.step(state, 1e-3);
  for (double v : state.v.values) CHECK(v == 0.0);
  CHECK(state.u.sup() > 0.0);
}

TEST_CASE("Crank-Nicolson sub-step damps the cosine eigenmode exactly", "[pde]") {
  const Grid g{1.0, 101};
  const double alpha = 1.0;
  const double dt = 1e-3;
  Field f = cos_profile(g, 1.0, 2.0);
  diffuse_crank_nicolson(f, alpha, dt);

  // cos(pi x) is an exact eigenvector of the closed operator
  const double dx = g.dx();
  const double a_d = -2.0 * (1.0 - std::cos(kPi * dx));
  const double theta = 0.5 * alpha * dt / (dx * dx);
  const double growth = (1.0 + theta * a_d) / (1.0 - theta * a_d);
  for (int j = 0; j < g.nx; ++j) {
    const double expected = 2.0 + growth * std::cos(kPi * g.x(j));
    CHECK(f.values[static_cast<std::size_t>(j)] == Approx(expected).margin(1e-12));
  }
  // and the discrete factor tracks the heat-kernel decay exp(-alpha pi^2 dt)
  CHECK(growth == Approx(std::exp(-alpha * kPi * kPi * dt)).margin(1e-4 * dt + 1e-6));
}

TEST_CASE("diffusion conserves the trapezoid spatial mean exactly", "[pde]") {
  const Grid g{1.0, 101};
  Field f = Field::from_function(
      g, [](double x) { return 2.0 + std::cos(kPi * x) + 0.3 * std::cos(3 * kPi * x); });
  const double mean0 = f.mean();
  for (int i = 0; i < 100; ++i) {
    diffuse_crank_nicolson(f, 0.7, 2e-3);
    CHECK(f.mean() == Approx(mean0).epsilon(1e-12));
  }
}

TEST_CASE("KPP solution converges at second order in space", "[pde]") {
  const auto env = kpp_env();
  const BoundConstants bounds = bound_constants(env, 4.0, 0.0);
  const double T = 0.5;
  const double dt = 2e-4;

  auto solve = [&](int nx) {
    const Grid g{1.0, nx};
    HybridSolver solver(env, bounds);
    MarkovPath path;
    path.initial_state = Regime::plus;
    path.horizon = T;
    return solver.simulate_kpp(cos_profile(g, 2.0, 2.0), path, dt, T);
  };

  const auto ref = solve(801);
  auto sup_err = [&ref](const SnapshotSeries& coarse) {
    const int stride = 800 / (coarse.grid.nx - 1);
    double worst = 0.0;
    const auto& uc = coarse.snapshots.back().u;
    const auto& ur = ref.snapshots.back().u;
    for (int j = 0; j < coarse.grid.nx; ++j) {
      worst = std::max(worst, std::abs(uc[static_cast<std::size_t>(j)] -
                                       ur[static_cast<std::size_t>(j * stride)]));
    }
    return worst;
  };
  const double e101 = sup_err(solve(101));
  const double e201 = sup_err(solve(201));
  const double ratio = e101 / e201;
  CHECK(ratio > 3.5);
  CHECK(ratio < 4.5);
}

TEST_CASE("Strang splitting converges at second order in time", "[pde]") {
  const auto env = kpp_env();
  const BoundConstants bounds = bound_constants(env, 4.0, 0.0);
  const Grid g{1.0, 101};
  const double T = 1.0;

  auto solve = [&](double dt) {
    HybridSolver solver(env, bounds);
    MarkovPath path;
    path.initial_state = Regime::plus;
    path.horizon = T;
    return solver.simulate_kpp(cos_profile(g, 2.0, 2.0), path, dt, T);
  };

  const auto ref = solve(2.5e-4);
  auto sup_err = [&ref, &g](const SnapshotSeries& series) {
    double worst = 0.0;
    for (int j = 0; j < g.nx; ++j) {
      const auto k = static_cast<std::size_t>(j);
      worst = std::max(worst, std::abs(series.snapshots.back().u[k] - ref.snapshots.back().u[k]));
    }
    return worst;
  };
  const double e_coarse = sup_err(solve(4e-3));
  const double e_fine = sup_err(solve(2e-3));
  const double ratio = e_coarse / e_fine;
  CHECK(ratio > 3.5);
  CHECK(ratio < 4.5);
}

TEST_CASE("flat equilibrium initial data reproduce themselves in simulate", "[pde]") {
  RegimeParams r{2, 1, 1, 1, 1, 1, 1, 1};
  const SwitchingEnvironment env(r, r, 5.0, 5.0);
  const Grid g{1.0, 21};
  const BoundConstants bounds = bound_constants(env, 2.0, 0.0);
  HybridSolver solver(env, bounds);
  const auto path = sample_path(env, Regime::plus, 5.0, 4);
  const auto series = solver.simulate(Field::constant(g, 2.0), Field::constant(g, 0.0), path,
                                      1e-3, 0.5);
  for (const auto& snap : series.snapshots) {
    for (double u : snap.u) CHECK(u == Approx(2.0).epsilon(1e-12));
    for (double v : snap.v) CHECK(v == 0.0);
  }
}

TEST_CASE("snapshots align with sample multiples and jump times", "[pde]") {
  const auto env = testsupport::example52();
  const Grid g{1.0, 21};
  const BoundConstants bounds = bound_constants(env, 4.0, 2.0);
  HybridSolver solver(env, bounds);
  const auto path = sample_path(env, Regime::plus, 3.0, 12);
  REQUIRE_FALSE(path.jump_times.empty());
  const auto series = solver.simulate(cos_profile(g, 2.0, 2.0),
                                      Field::from_function(g, [](double x) {
                                        const double s = std::sin(kPi * x);
                                        return 2.0 * s * s;
                                      }),
                                      path, 1.5e-3, 0.5);

  std::vector<double> times;
  for (const auto& snap : series.snapshots) times.push_back(snap.t);
  for (std::size_t i = 1; i < times.size(); ++i) CHECK(times[i] > times[i - 1]);
  for (double tau : path.jump_times) {
    CHECK(std::count(times.begin(), times.end(), tau) == 1);
  }
  for (double ts : {0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0}) {
    CHECK(std::count_if(times.begin(), times.end(),
                        [ts](double t) { return std::abs(t - ts) < 1e-9; }) == 1);
  }
  // regime recorded at a jump is the post-jump state
  for (std::size_t i = 0; i < times.size(); ++i) {
    CHECK(series.snapshots[i].regime == path.state_at(times[i]));
  }
}

TEST_CASE("extinction example: decay, homogenization, comparison", "[pde]") {
  const auto env = testsupport::example52();
  const Grid g{1.0, 101};
  const Field u0 = cos_profile(g, 2.0, 2.0);
  const Field v0 = Field::from_function(g, [](double x) {
    const double s = std::sin(kPi * x);
    return 2.0 * s * s;
  });
  const BoundConstants bounds = bound_constants(env, u0.sup(), v0.sup());
  HybridSolver solver(env, bounds);
  const auto path = sample_path(env, Regime::plus, 12.0, 42);
  const auto series = solver.simulate(u0, v0, path, 1.5e-3, 0.1);

  double final_sup_v = 0.0;
  for (const auto& snap : series.snapshots) {
    if (snap.t >= 5.0) {
      CHECK(spatial_flatness(snap.u) < 1e-2);
      for (double u : snap.u) {
        CHECK(u >= 1.0 - 1e-2);
        CHECK(u <= 3.0 + 1e-2);
      }
    }
    for (double u : snap.u) CHECK(u <= bounds.m1);
    for (double v : snap.v) CHECK(v <= bounds.m2);
    if (snap.t == series.snapshots.back().t) {
      final_sup_v = *std::max_element(snap.v.begin(), snap.v.end());
    }
  }
  CHECK(final_sup_v < 1e-3);

  const auto logistic = simulate_switching_logistic(env, path, u0.sup(), 0.1);
  const auto cmp = comparison_check(series, logistic, 1e-6);
  CHECK(cmp.pass);
}

TEST_CASE("KPP settles at a/b under a constant regime", "[pde]") {
  RegimeParams r{2, 1, 1, 1, 1, 1, 1, 1};  // a/b = 2
  const SwitchingEnvironment env(r, r, 5.0, 5.0);
  const Grid g{1.0, 51};
  const BoundConstants bounds = bound_constants(env, 3.5, 0.0);
  HybridSolver solver(env, bounds);
  MarkovPath path;
  path.initial_state = Regime::plus;
  path.horizon = 15.0;  // 30/a
  const auto series = solver.simulate_kpp(cos_profile(g, 1.5, 2.0), path, 2e-3, 1.0);
  const auto& last = series.snapshots.back().u;
  for (double u : last) CHECK(u == Approx(2.0).margin(1e-4));
}

TEST_CASE("KPP keeps zero initial data at zero", "[pde]") {
  const auto env = testsupport::example52();
  const Grid g{1.0, 31};
  const BoundConstants bounds = bound_constants(env, 1.0, 0.0);
  HybridSolver solver(env, bounds);
  const auto path = sample_path(env, Regime::plus, 2.0, 9);
  const auto series = solver.simulate_kpp(Field::constant(g, 0.0), path, 1e-3, 0.5);
  for (const auto& snap : series.snapshots) {
    for (double u : snap.u) CHECK(u == 0.0);
  }
}

TEST_CASE("switched KPP tail is flat and lands in the equilibrium interval", "[pde]") {
  const auto env = testsupport::example52();
  const Grid g{1.0, 51};
  const BoundConstants bounds = bound_constants(env, 4.0, 0.0);
  HybridSolver solver(env, bounds);
  const auto path = sample_path(env, Regime::plus, 25.0, 33);
  const auto series = solver.simulate_kpp(cos_profile(g, 2.0, 2.0), path, 1.5e-3, 0.25);
  for (const auto& snap : series.snapshots) {
    if (snap.t < 10.0) continue;
    CHECK(spatial_flatness(snap.u) < 1e-3);
    for (double u : snap.u) {
      CHECK(u >= 1.0 - 1e-2);
      CHECK(u <= 3.0 + 1e-2);
    }
  }
}

TEST_CASE("strictly positive data stay strictly positive at sampled times", "[pde]") {
  const auto env = testsupport::example52();
  const Grid g{1.0, 51};
  const Field u0 = Field::from_function(g, [](double x) { return 2.0 + std::cos(kPi * x); });
  const Field v0 = Field::from_function(g, [](double x) {
    const double s = std::sin(kPi * x);
    return 0.5 + 0.4 * s * s;
  });
  const BoundConstants bounds = bound_constants(env, u0.sup(), v0.sup());
  HybridSolver solver(env, bounds);
  const auto path = sample_path(env, Regime::plus, 6.0, 21);
  const auto series = solver.simulate(u0, v0, path, 1.5e-3, 0.2);
  for (const auto& snap : series.snapshots) {
    for (double u : snap.u) CHECK(u > 0.0);
    for (double v : snap.v) CHECK(v > 0.0);
  }
}

TEST_CASE("repeat runs are bit-identical", "[pde]") {
  const auto env = testsupport::example52();
  const Grid g{1.0, 41};
  const Field u0 = cos_profile(g, 2.0, 2.0);
  const Field v0 = Field::constant(g, 1.0);
  const BoundConstants bounds = bound_constants(env, u0.sup(), 1.0);
  const auto path = sample_path(env, Regime::plus, 4.0, 2);
  HybridSolver s1(env, bounds);
  HybridSolver s2(env, bounds);
  const auto a = s1.simulate(u0, v0, path, 1.2e-3, 0.25);
  const auto b = s2.simulate(u0, v0, path, 1.2e-3, 0.25);
  REQUIRE(a.snapshots.size() == b.snapshots.size());
  for (std::size_t i = 0; i < a.snapshots.size(); ++i) {
    CHECK(a.snapshots[i].u == b.snapshots[i].u);
    CHECK(a.snapshots[i].v == b.snapshots[i].v);
  }
}

TEST_CASE("steps beyond the stability cap are rejected", "[pde]") {
  const auto env = testsupport::example52();
  const BoundConstants bounds = bound_constants(env, 4.0, 2.0);
  HybridSolver solver(env, bounds);
  SimState state;
  state.u = Field::constant(Grid{1.0, 11}, 1.0);
  state.v = Field::constant(Grid{1.0, 11}, 1.0);
  CHECK_THROWS_AS(solver.step(state, 2.0 * solver.dt_cap()), stability_violation_error);
  CHECK_THROWS_AS(solver.step(state, -1.0), std::invalid_argument);
}

TEST_CASE("snapshot CSV uses the long format", "[pde]") {
  RegimeParams r{1, 1, 1, 1, 1, 1, 1, 1};
  const SwitchingEnvironment env(r, r, 5.0, 5.0);
  const Grid g{1.0, 3};
  const BoundConstants bounds = bound_constants(env, 1.0, 1.0);
  HybridSolver solver(env, bounds);
  MarkovPath path;
  path.horizon = 0.2;
  const auto series =
      solver.simulate(Field::constant(g, 1.0), Field::constant(g, 0.5), path, 1e-3, 0.1);
  std::ostringstream os;
  write_snapshots_csv(os, series);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line == "t,x,u,v");
  std::getline(is, line);
  CHECK(line.rfind("0,0,1,", 0) == 0);
}

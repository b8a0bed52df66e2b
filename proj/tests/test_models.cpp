#include "doctest.h"

#include <cmath>
#include <set>

#include "mlab/models.hpp"
#include "mlab/symlang.hpp"
#include "mlab/weights.hpp"
#include "test_util.hpp"

using namespace mlab;
using test::axis;
using test::grid;

namespace {

// Gaussian bump in t (width 0.3) times a smooth periodic profile in x
StateVector bump_source(const GridPtr& g) {
  Eigen::VectorXcd v(g->base_size());
  const int nt = g->points(0), nx = g->points(1);
  for (int j = 0; j < nt; ++j)
    for (int i = 0; i < nx; ++i) {
      const double t = g->coord(0, j), x = g->coord(1, i);
      v[j * nx + i] = std::exp(-t * t / (2 * 0.3 * 0.3)) * std::exp(std::cos(x) + 0.5 * std::sin(2 * x));
    }
  return make_state(g, v);
}

}  // namespace

TEST_CASE("gallery contents") {
  const auto g = gallery();
  CHECK(g.size() >= 7);
  std::set<std::string> names;
  for (const auto& m : g) names.insert(m.name);
  CHECK(names.size() == g.size());
  for (const char* n : {"p_plus", "p_minus", "mizohata_unsolvable", "q_minus_solvable", "checkerboard",
                        "hyperbolic_quadratic", "linear_sign_change"})
    CHECK(names.count(n) == 1);
  CHECK(expected_verdicts(find_model("mizohata_unsolvable")).condition == Verdict::fail_monotonicity);
  CHECK(expected_verdicts(find_model("q_minus_solvable")).condition == Verdict::pass);
  CHECK(expected_verdicts(find_model("checkerboard")).condition == Verdict::fail_leaf_sign);
  CHECK(expected_verdicts(find_model("linear_sign_change")).condition == Verdict::pass);
  CHECK_THROWS_AS(find_model("nope"), Error);
  // every expression parses on its grid
  for (const auto& m : g) {
    CAPTURE(m.name);
    auto gr = model_grid(m);
    CHECK_NOTHROW(model_f(m, gr));
    if (m.form == ModelForm::normal) CHECK_NOTHROW(eval_on_grid(parse_expr(m.A), gr));
  }
}

TEST_CASE("condition verdicts match the declared expectations") {
  for (const auto& m : gallery()) {
    CAPTURE(m.name);
    CHECK(verdict_name(check_model(m).verdict) == std::string(verdict_name(m.expected_condition)));
  }
}

TEST_CASE("P+/- reduce to f = -/+ t tau") {
  const auto& m = find_model("p_plus");
  auto g = model_grid(m);
  CHECK(test::max_abs_diff(model_f(m, g), eval_on_grid(parse_expr("-t*tau"), g)) < 1e-12);
}

TEST_CASE("weights on the gallery") {
  for (const auto& m : gallery()) {
    CAPTURE(m.name);
    auto g = model_grid(m);
    auto w = run_weights(model_f(m, g));
    for (const auto& a : audit_weights(w)) {
      CAPTURE(a.name);
      CAPTURE(a.detail);
      CHECK(a.pass);
    }
  }
}

TEST_CASE("Q- solver: zero source and single mode") {
  auto g = grid({axis(Role::t, 64, 2.0, false), axis(Role::x, 16, 2 * M_PI)});
  auto z = solve_q_minus(make_state(g, Eigen::VectorXcd::Zero(g->base_size())));
  CHECK(z.values.norm() == 0.0);

  // f = cos(3x): u = i cos(3x) int_0^t exp(-(t^2 - s^2) 9/2) ds
  Eigen::VectorXcd v(g->base_size());
  for (int j = 0; j < 64; ++j)
    for (int i = 0; i < 16; ++i) v[j * 16 + i] = std::cos(3 * g->coord(1, i));
  auto u = solve_q_minus(make_state(g, v));
  const int i0 = 5;
  double worst = 0.0;
  for (int j = 0; j < 64; ++j) {
    const double t = g->coord(0, j);
    // refined quadrature oracle, 20000 midpoint steps
    const int n = 20000;
    double I = 0.0;
    for (int k = 0; k < n; ++k) {
      const double s = t * (k + 0.5) / n;
      I += std::exp(-(t * t - s * s) * 4.5) * t / n;
    }
    const cd want = cd(0.0, 1.0) * std::cos(3 * g->coord(1, i0)) * I;
    worst = std::max(worst, std::abs(u.values[j * 16 + i0] - want));
  }
  CHECK(worst < 2e-3);
  CHECK_THROWS_AS(solve_q_minus(make_state(grid({axis(Role::t, 8, 2.0), axis(Role::x, 8, 1.0)}),
                                           Eigen::VectorXcd::Zero(64))),
                  Error);
  CHECK_THROWS_AS(solve_q_minus(make_state(grid({axis(Role::t, 8, 2.0, false), axis(Role::x, 8, 1.0, false)}),
                                           Eigen::VectorXcd::Zero(64))),
                  Error);
}

TEST_CASE("Q- residual and refinement rate") {
  auto g = grid({axis(Role::t, 64, 2.0, false), axis(Role::x, 64, 2 * M_PI)});
  auto f = bump_source(g);
  auto u = solve_q_minus(f);
  const double r64 = q_minus_residual(u, f);
  CHECK(r64 <= 1e-3);

  std::vector<double> res;
  for (int nt : {64, 128, 256}) {
    auto gr = grid({axis(Role::t, nt, 2.0, false), axis(Role::x, 32, 2 * M_PI)});
    auto fr = bump_source(gr);
    res.push_back(q_minus_residual(solve_q_minus(fr), fr));
  }
  for (std::size_t k = 1; k < res.size(); ++k) {
    CAPTURE(res[k - 1]);
    CAPTURE(res[k]);
    CHECK(res[k - 1] / res[k] == doctest::Approx(4.0).epsilon(0.3));
  }
}

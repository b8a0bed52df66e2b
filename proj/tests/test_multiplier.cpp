#include "doctest.h"

#include <cmath>
#include <random>

#include "mlab/multiplier.hpp"
#include "mlab/symlang.hpp"
#include "test_util.hpp"

using namespace mlab;
using test::axis;
using test::grid;

namespace {

SymbolField ev(const std::string& s, const GridPtr& g) { return eval_on_grid(parse_expr(s), g); }

WeightField wf(const GridPtr& g, std::uint32_t mask, std::vector<double> v, const char* role) {
  WeightField w;
  w.values = RealField(g, mask, std::move(v));
  w.role = role;
  w.h = g->h();
  return w;
}

// t:16 over [-1, 0.875], y:4, gsharp frame with h = 1 so frame = standard units
GridPtr tgrid() { return grid({axis(Role::t, 16, 2.0, false), axis(Role::y, 4, 2.0)}, 1.0, Frame::gsharp); }

// direct sup over s with an independently evaluated trapezoid sum
double naive_rho(const std::vector<double>& d, const std::vector<double>& m, const std::vector<double>& t,
                 int lo, int j, double T) {
  double best = -INFINITY;
  for (int s = lo; s <= j; ++s) {
    double I = 0.0;
    for (int r = s; r < j; ++r) I += 0.5 * (m[r] + m[r + 1]) * (t[r + 1] - t[r]);
    best = std::max(best, d[s] - d[j] + I / (2 * T) - m[s]);
  }
  return best;
}

}  // namespace

TEST_CASE("rho for constant m and zero delta") {
  auto g = tgrid();
  const double mu = 0.7, T = 0.875;
  auto delta = wf(g, 1u, std::vector<double>(16, 0.0), "delta");
  auto m = wf(g, 1u, std::vector<double>(16, mu), "m");
  auto rho = compute_rho(delta, m, T);
  for (int j = 1; j < 16; ++j) {
    const double t = g->coord(0, j);
    CHECK(rho.values[j] == doctest::Approx(mu * (t + T) / (2 * T) - mu).epsilon(1e-13));
  }
  CHECK(std::abs(rho.values[15]) < 1e-14);
  CHECK(rho.values[1] == -mu);
  // the value below the window repeats the window start
  CHECK(rho.values[0] == rho.values[1]);
  CHECK_THROWS_AS(compute_rho(delta, m, 1.5), Error);
}

TEST_CASE("rho vanishes for increasing delta and m = 0") {
  auto g = tgrid();
  std::vector<double> d(16);
  for (int j = 0; j < 16; ++j) d[j] = std::sinh(g->coord(0, j));
  auto rho = compute_rho(wf(g, 1u, d, "delta"), wf(g, 1u, std::vector<double>(16, 0.0), "m"), 0.5);
  for (double v : rho.values.values()) CHECK(v == 0.0);
}

TEST_CASE("sweep equals brute force and the naive oracle") {
  auto g = tgrid();
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const std::uint32_t mask = 1u | 2u;
  std::vector<double> d(64), m(64);
  // columns over y: nondecreasing delta, positive m
  for (int y = 0; y < 4; ++y) {
    double acc = -2.0;
    for (int j = 0; j < 16; ++j) {
      acc += U(rng) * 0.5;
      d[j * 4 + y] = acc;
      m[j * 4 + y] = 0.1 + U(rng);
    }
  }
  const auto delta = wf(g, mask, d, "delta"), mm = wf(g, mask, m, "m");
  for (double T : {1.0, 0.6, 0.25}) {
    auto a = compute_rho(delta, mm, T);
    auto b = compute_rho_bruteforce(delta, mm, T);
    CHECK(a.values.values() == b.values.values());
    const auto win = time_window(*g, T);
    std::vector<double> tc(16);
    for (int j = 0; j < 16; ++j) tc[j] = g->coord(0, j);
    for (int y = 0; y < 4; ++y) {
      std::vector<double> dc(16), mc(16);
      for (int j = 0; j < 16; ++j) {
        dc[j] = d[j * 4 + y];
        mc[j] = m[j * 4 + y];
      }
      for (int j : win)
        CHECK(std::abs(a.values[j * 4 + y] - naive_rho(dc, mc, tc, win.front(), j, T)) < 1e-12);
    }
  }
}

TEST_CASE("rho audit on a weight pipeline") {
  auto g = grid({axis(Role::t, 32, 1.5, false), axis(Role::x, 8, 1.5), axis(Role::y, 16, 1.5)}, 0.1);
  for (const char* s : {"t", "t*eta1^2", "t*abs(eta1)", "0"}) {
    CAPTURE(s);
    auto w = run_weights(ev(s, g));
    const double half = 0.5 * w.grid->extent(w.grid->t_axis());
    for (double frac : {1.0, 0.5, 0.25}) {
      auto a = audit_rho(w.delta, w.m, frac * half);
      CHECK(a.sweep_equals_brute);
      CHECK(a.bound_slack >= 0.0);
      CHECK(a.commutator_slack >= 0.0);
      CHECK(a.violations == 0);
    }
  }
}

TEST_CASE("L matrix") {
  auto g = grid({axis(Role::t, 4, 2.0), axis(Role::x, 8, 4.0), axis(Role::x, 8, 4.0)}, 0.25);
  std::vector<int> w0(6, -1);
  w0[1] = 4;
  w0[2] = 4;
  auto id = compute_L_matrix(quadratic_coefficients(ev("xi1^2 + xi2^2", g)), w0);
  CHECK((id.L - Eigen::MatrixXd::Identity(2, 2)).norm() < 1e-12);
  CHECK(id.c1 == 0.0);
  CHECK(id.min_bracket_ratio == doctest::Approx(2.0));
  CHECK(id.radius == doctest::Approx(2.0));  // the whole periodic cell

  auto hyp = compute_L_matrix(quadratic_coefficients(ev("xi1^2 - xi2^2", g)), w0);
  CHECK(hyp.L(0, 0) == doctest::Approx(1.0));
  CHECK(hyp.L(1, 1) == doctest::Approx(-1.0));
  CHECK(std::abs(hyp.L(0, 1)) < 1e-12);
  CHECK(hyp.min_bracket_ratio == doctest::Approx(2.0));
  CHECK(hyp.c1 == 0.0);

  // bracket from the finite-difference Poisson bracket of A and <L(x-x0), xi>
  auto gv = grid({axis(Role::t, 4, 2.0), axis(Role::x, 16, 4.0, false), axis(Role::x, 8, 4.0)}, 0.25);
  std::vector<int> v0(6, -1);
  v0[1] = 8;
  v0[2] = 4;
  auto var = compute_L_matrix(quadratic_coefficients(ev("(1 + 0.4*sin(x1))*xi1^2 + xi2^2", gv)), v0, 0.5);
  CHECK(var.radius > 0.0);
  CHECK(var.radius < 2.0);
  CHECK(var.c1 <= 0.5);

  CHECK_THROWS_AS(compute_L_matrix(quadratic_coefficients(ev("(x1 - x1)*xi1^2 + xi2^2 + 0*xi1*xi2", g)), w0),
                  Error);
}

TEST_CASE("lambda") {
  // x: 16 points over 4 pi, so xi = (k - 8)/2 and xi = 2 sits at k = 12
  auto g = grid({axis(Role::t, 4, 2.0), axis(Role::x, 16, 4 * M_PI, false)}, 0.04);
  LMatrix L;
  L.L = Eigen::MatrixXd::Identity(1, 1);
  std::vector<int> idx(4, 0);
  idx[1] = 9;
  const double x = g->coord(1, 9);
  L.x0 = {x};
  auto lam = compute_lambda(L, 1.0, 1.0, g);
  for (int k = 0; k < 16; ++k) {
    idx[3] = k;
    CHECK(std::abs(lam.at(idx)) < 1e-15);
  }
  // eps = 1, T = 1, h = 0.04, x - x0 = 0.5, xi = 2 -> 0.2
  L.x0 = {x - 0.5};
  idx[3] = 12;
  REQUIRE(g->coord(3, 12) == doctest::Approx(2.0));
  CHECK(compute_lambda(L, 1.0, 1.0, g).at(idx).real() == doctest::Approx(0.2).epsilon(1e-14));
  CHECK_THROWS_AS(compute_lambda(L, 0.0, 1.0, g), Error);
  CHECK_THROWS_AS(compute_lambda(L, 1.5, 1.0, g), Error);
  // beyond |x - x0| <= T plus one cell it is zero
  L.x0 = {0.0};
  idx[1] = 15;
  CHECK(compute_lambda(L, 1.0, 1.0, g).at(idx) == cd(0.0));
}

TEST_CASE("build multiplier") {
  auto g = grid({axis(Role::t, 8, 1.5, false), axis(Role::x, 8, 1.5, false), axis(Role::y, 8, 1.5)}, 0.1);
  auto gs = reframe(g, Frame::gsharp);
  auto zero = wf(gs, 0u, {0.0}, "zero");
  LMatrix L;
  L.L = Eigen::MatrixXd::Identity(1, 1);
  L.x0 = {0.0};
  auto none = build_multiplier(zero, zero, ev("0", g), 0.5, 0.5, L);
  CHECK(none.b_op.matrix.norm() == 0.0);

  // affine lambda: Wick equals Weyl (non-periodic x, no taper since T covers the axis)
  auto lam = compute_lambda(L, 0.5, 1.0, g);
  auto only = build_multiplier(zero, zero, lam, 1.0, 0.5, L);
  auto weyl = weyl_quantize(lam);
  CHECK((only.b_op.matrix - weyl.matrix).norm() <= 1e-9 * weyl.matrix.norm());

  // a full model
  auto gm = grid({axis(Role::t, 16, 1.5, false), axis(Role::x, 8, 1.5), axis(Role::y, 8, 1.5)}, 0.1);
  auto w = run_weights(ev("t*abs(eta1)", gm));
  const double T = 0.375;
  auto rho = compute_rho(w.delta, w.m, T / std::sqrt(0.1));
  std::vector<int> w0(6, -1);
  w0[1] = 4;
  auto Lm = compute_L_matrix(quadratic_coefficients(ev("xi1^2", gm)), w0);
  auto mb = build_multiplier(w.delta, rho, compute_lambda(Lm, 0.1, T, gm), T, 0.1, Lm);
  CHECK(mb.hermitian_defect < 1e-10);
  CHECK(mb.norm <= 1.05 * mb.sup_B);
  CHECK(mb.B.sup_abs() > 0.0);
}

#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "mlab/phase_grid.hpp"
#include "test_util.hpp"

using namespace mlab;
using test::axis;
using test::grid;

TEST_CASE("build_grid accepts a valid 1+1 grid") {
  auto g = grid({axis(Role::t, 32, 2.0), axis(Role::x, 32, 2.0)}, 0.1);
  CHECK(g->base_count() == 2);
  CHECK(g->axis_count() == 4);
  CHECK(g->name(0) == "t");
  CHECK(g->name(1) == "x1");
  CHECK(g->name(2) == "tau");
  CHECK(g->name(3) == "xi1");
  CHECK(g->spacing(0) == doctest::Approx(2.0 / 32));
  CHECK(g->coord(0, 0) == doctest::Approx(-1.0));
  CHECK(g->coord(2, 16) == 0.0);
  CHECK(g->spacing(2) == doctest::Approx(std::numbers::pi));
  CHECK(g->base_size() == 1024);
}

TEST_CASE("build_grid rejects invalid configurations") {
  CHECK_THROWS_AS(grid({axis(Role::t, 32, 2.0)}, 0.0), Error);
  CHECK_THROWS_AS(grid({axis(Role::t, 32, 2.0)}, 1.5), Error);
  CHECK_THROWS_AS(grid({axis(Role::t, 32, 2.0), axis(Role::t, 32, 2.0)}), Error);
  CHECK_THROWS_AS(grid({axis(Role::x, 32, 2.0)}), Error);
  CHECK_THROWS_AS(grid({axis(Role::t, 24, 2.0)}), Error);
  CHECK_THROWS_AS(grid({axis(Role::t, 2, 2.0)}), Error);
  AxisConfig bad = axis(Role::t, 16, 2.0);
  bad.dual_extent = 3.0;
  CHECK_THROWS_AS(grid({bad}), Error);
  bad.dual_extent = 2 * std::numbers::pi * 16 / 2.0;
  CHECK_NOTHROW(grid({bad}));
}

TEST_CASE("gsharp frame rescales coordinates") {
  auto g = grid({axis(Role::t, 16, 4.0), axis(Role::x, 16, 4.0)}, 0.04, Frame::gsharp);
  auto s = reframe(g, Frame::standard);
  CHECK(g->coord(0, 3) == doctest::Approx(s->coord(0, 3) / 0.2));
  CHECK(g->coord(2, 3) == doctest::Approx(s->coord(2, 3) * 0.2));
  CHECK(g->same_lattice(*s));
  CHECK_FALSE(*g == *s);
}

TEST_CASE("layout gather broadcasts independent axes") {
  auto g = grid({axis(Role::t, 4, 1.0), axis(Role::x, 8, 1.0)});
  Layout src(g, 0b0001), dst(g, 0b0011);
  auto map = dst.gather_from(src);
  std::vector<int> idx;
  for (std::size_t o = 0; o < dst.size(); ++o) {
    dst.unravel(o, idx);
    CHECK(map[o] == static_cast<std::size_t>(idx[0]));
  }
}

TEST_CASE("fd_derivative of sin on periodic t") {
  auto g = grid({axis(Role::t, 64, 2 * std::numbers::pi)});
  auto f = SymbolField::sample(g, 1u, [](const std::vector<double>& z) { return cd(std::sin(z[0])); });
  auto cosf = SymbolField::sample(g, 1u, [](const std::vector<double>& z) { return cd(std::cos(z[0])); });
  const double dt = g->spacing(0);
  CHECK(test::max_abs_diff(fd_derivative(f, 0, 1), cosf) < std::pow(dt, 4));
  auto msin = (-1.0) * f;
  CHECK(test::max_abs_diff(fd_derivative(f, 0, 2), msin) < std::pow(dt, 4));
}

TEST_CASE("constant field differentiates to zero") {
  auto g = grid({axis(Role::t, 16, 2.0, false), axis(Role::x, 16, 2.0)});
  auto c = SymbolField(g, full_mask(*g), cd(3.0));
  for (int a = 0; a < 4; ++a)
    for (int o = 1; o <= 2; ++o) CHECK(fd_derivative(c, a, o).sup_abs() < 1e-9);
}

TEST_CASE("t^2 on a non-periodic grid differentiates to 2t") {
  auto g = grid({axis(Role::t, 32, 3.0, false)});
  auto f = SymbolField::sample(g, 1u, [](const std::vector<double>& z) { return cd(z[0] * z[0]); });
  auto d = fd_derivative(f, 0, 1);
  for (int j = 0; j < 32; ++j) CHECK(std::abs(d[j] - 2.0 * g->coord(0, j)) < 1e-8);
  auto d2 = fd_derivative(f, 0, 2);
  for (int j = 0; j < 32; ++j) CHECK(std::abs(d2[j] - 2.0) < 1e-8);
}

TEST_CASE("standard frame derivatives carry h factors") {
  const double h = 0.09;
  auto g = grid({axis(Role::t, 32, 3.0, false)}, h);
  auto f = SymbolField::sample(g, 1u, [](const std::vector<double>& z) { return cd(z[0] * z[0]); });
  auto d = fd_derivative(f, 0, 1);
  for (int j = 0; j < 32; ++j) CHECK(std::abs(d[j] - std::sqrt(h) * 2.0 * g->coord(0, j)) < 1e-8);
  auto tau = SymbolField::sample(g, 2u, [](const std::vector<double>& z) { return cd(z[1]); });
  auto dt = fd_derivative(tau, 1, 1);
  for (const auto& v : dt.values()) CHECK(std::abs(v - 1.0 / std::sqrt(h)) < 1e-8);
  // the gsharp frame gives the same numbers
  auto fg = f.on_grid(reframe(g, Frame::gsharp));
  CHECK(test::max_abs_diff(fd_derivative(fg, 0, 1).on_grid(g), d) < 1e-9);
}

TEST_CASE("fd_derivative rejects bad orders") {
  auto g = grid({axis(Role::t, 16, 2.0)});
  auto f = SymbolField(g, 1u, cd(1.0));
  CHECK_THROWS_AS(fd_derivative(f, 0, 3), Error);
  CHECK_THROWS_AS(fd_derivative(f, 0, 0), Error);
  CHECK_THROWS_AS(fd_derivative(f, 5, 1), Error);
}

TEST_CASE("fd_derivative is linear and second derivative matches repeated first") {
  auto g = grid({axis(Role::t, 64, 2 * std::numbers::pi), axis(Role::x, 16, 4.0, false)});
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(-1, 1);
  auto a = SymbolField::sample(g, 3u, [](const std::vector<double>& z) { return cd(std::sin(2 * z[0]) * z[1]); });
  auto b = SymbolField::sample(g, 3u, [](const std::vector<double>& z) { return cd(std::cos(z[0]) + z[1] * z[1]); });
  const cd al(U(rng), U(rng)), be(U(rng), U(rng));
  for (int ax = 0; ax < 2; ++ax) {
    auto lhs = fd_derivative(al * a + be * b, ax, 1);
    auto rhs = al * fd_derivative(a, ax, 1) + be * fd_derivative(b, ax, 1);
    CHECK(test::max_abs_diff(lhs, rhs) < 1e-12);
  }
  auto s = SymbolField::sample(g, 1u, [](const std::vector<double>& z) { return cd(std::sin(z[0])); });
  const double dt = g->spacing(0);
  CHECK(test::max_abs_diff(fd_derivative(s, 0, 2), fd_derivative(fd_derivative(s, 0, 1), 0, 1)) < 10 * dt * dt);
}

TEST_CASE("seminorm examples") {
  auto g = grid({axis(Role::t, 64, 2 * std::numbers::pi)}, 1.0, Frame::gsharp);
  auto c = SymbolField(g, 1u, cd(2.0));
  CHECK(seminorm(c, 1) == doctest::Approx(0.0).epsilon(1e-12));
  auto f = SymbolField::sample(g, 1u, [](const std::vector<double>& z) { return cd(std::sin(z[0])); });
  CHECK(std::abs(seminorm(f, 1) - 1.0) < 1e-3);
  CHECK(seminorm(3.5 * f, 0) == doctest::Approx(3.5));
  CHECK_THROWS_AS(seminorm(f, 4), Error);
}

TEST_CASE("seminorm is a seminorm") {
  auto g = grid({axis(Role::t, 32, 6.0), axis(Role::x, 16, 4.0, false)}, 0.5);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(-1, 1);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<cd> va(g->phase_size()), vb(g->phase_size());
    for (auto& v : va) v = cd(U(rng), U(rng));
    for (auto& v : vb) v = cd(U(rng), U(rng));
    SymbolField a(g, full_mask(*g), va), b(g, full_mask(*g), vb);
    const cd s(U(rng), U(rng));
    for (int k = 0; k <= 3; ++k) {
      const double na = seminorm(a, k), nb = seminorm(b, k);
      CHECK(seminorm(s * a, k) == doctest::Approx(std::abs(s) * na).epsilon(1e-12));
      CHECK(seminorm(a + b, k) <= (na + nb) * (1 + 1e-14));
    }
  }
}

TEST_CASE("real and imaginary parts round-trip") {
  auto g = grid({axis(Role::t, 8, 1.0), axis(Role::y, 8, 1.0)});
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(-1, 1);
  std::vector<cd> v(64);
  for (auto& x : v) x = cd(U(rng), U(rng));
  SymbolField f(g, 0b0011, v);
  auto re = real_part(f), im = imag_part(f);
  auto back = to_complex(re) + cd(0, 1) * to_complex(im);
  CHECK(back.values() == f.values());
  CHECK_THROWS_AS(SymbolField(g, 0b0011, std::vector<cd>(10)), Error);
}

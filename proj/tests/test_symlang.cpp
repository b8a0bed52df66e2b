#include "doctest.h"

#include <random>

#include "mlab/symlang.hpp"
#include "test_util.hpp"

using namespace mlab;
using test::axis;
using test::grid;
using K = ExprNode::Kind;

TEST_CASE("parse the Example 1.6 symbol") {
  auto e = parse_expr("(1 + t^2)*xi1^2 + tau + i*t*tau");
  const auto& r = e.root();
  REQUIRE(r.kind == K::add);
  CHECK(r.args[1]->kind == K::mul);  // i*t*tau = (i*t)*tau
  CHECK(r.args[1]->args[0]->kind == K::mul);
  CHECK(r.args[1]->args[0]->args[0]->kind == K::imag_unit);
  const auto& lhs = *r.args[0];
  REQUIRE(lhs.kind == K::add);
  CHECK(lhs.args[1]->kind == K::variable);
  CHECK(lhs.args[1]->name == "tau");
  const auto& prod = *lhs.args[0];
  REQUIRE(prod.kind == K::mul);
  CHECK(prod.args[0]->kind == K::add);
  CHECK(prod.args[1]->kind == K::pow);
  CHECK(e.variables() == std::set<std::string>{"t", "tau", "xi1"});
  const cd v = eval_point(e, {{"t", 0.5}, {"tau", 2.0}, {"xi1", 3.0}});
  CHECK(std::abs(v - cd((1 + 0.25) * 9 + 2, 1.0)) < 1e-14);
}

TEST_CASE("syntax errors carry offsets") {
  CHECK_THROWS_AS(parse_expr(""), ParseError);
  CHECK_THROWS_AS(parse_expr("   "), ParseError);
  try {
    parse_expr("t + * 2");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.offset() == 4);
  }
  try {
    parse_expr("t + foo");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.offset() == 4);
  }
  CHECK_THROWS_AS(parse_expr("sin(t, x1)"), ParseError);
  CHECK_THROWS_AS(parse_expr("(t"), ParseError);
  CHECK_THROWS_AS(parse_expr("x0"), ParseError);
}

TEST_CASE("min node and precedence") {
  auto e = parse_expr("min(t, 0)");
  CHECK(e.root().kind == K::call);
  CHECK(e.root().name == "min");
  CHECK(e.root().args.size() == 2);
  // ^ binds tighter than unary minus, which binds tighter than *
  CHECK(eval_point(parse_expr("-2^2"), {}) == cd(-4.0));
  CHECK(eval_point(parse_expr("2^3^2"), {}) == cd(512.0));
  CHECK(eval_point(parse_expr("1 - 2 - 3"), {}) == cd(-4.0));
  CHECK(eval_point(parse_expr("8 / 2 / 2"), {}) == cd(2.0));
  CHECK(eval_point(parse_expr("2 * -3"), {}) == cd(-6.0));
  CHECK(eval_point(parse_expr("sign(-0.5) + sign(1e-15) + sq(3)"), {}) == cd(8.0));
}

TEST_CASE("print/parse round trip") {
  for (const char* s : {"(1 + t^2)*xi1^2 + tau + i*t*tau", "-x1^-2 + max(t, -y1) / 3.25e-3",
                        "sqrt(abs(eta1)) * exp(-t^2) - sign(x1)*sign(x2)", "2^3^2", "-(-t)"}) {
    auto a = parse_expr(s);
    auto b = parse_expr(a.print());
    CHECK(a.root().same_tree(b.root()));
    CHECK(b.print() == a.print());
  }
}

TEST_CASE("eval_on_grid examples") {
  auto g = grid({axis(Role::t, 8, 2.0), axis(Role::x, 8, 2.0), axis(Role::y, 8, 8.0)});
  auto one = eval_on_grid(parse_expr("1"), g);
  CHECK(one.mask() == 0u);
  CHECK(one.size() == 1);
  CHECK(one[0] == cd(1.0));

  auto q = eval_on_grid(parse_expr("xi1^2 - eta1^2"), g);
  CHECK(q.mask() == ((1u << 4) | (1u << 5)));
  std::vector<int> idx(6, 0);
  idx[4] = 1;
  idx[5] = 6;
  const double xi = g->coord(4, 1), eta = g->coord(5, 6);
  CHECK(q.at(idx) == cd(xi * xi - eta * eta));

  // t*eta1 at (t, eta1) = (0.5, 2): t-lattice spacing 0.25 gives t=0.5 at j=6,
  // eta1 spacing 2pi/8 does not hit 2, so use a grid where it does.
  auto g2 = grid({axis(Role::t, 8, 2.0), axis(Role::y, 8, std::numbers::pi)});
  auto f = eval_on_grid(parse_expr("t*eta1"), g2);
  std::vector<int> j(4, 0);
  j[0] = 6;
  j[3] = 5;
  CHECK(g2->coord(0, 6) == doctest::Approx(0.5));
  CHECK(g2->coord(3, 5) == doctest::Approx(2.0));
  CHECK(std::abs(f.at(j) - 1.0) < 1e-14);

  CHECK_THROWS_AS(eval_on_grid(parse_expr("x2"), g), Error);
  CHECK_THROWS_AS(eval_on_grid(parse_expr("1 / t"), grid({axis(Role::t, 8, 2.0)})), Error);
  CHECK(eval_on_grid(parse_expr("h"), grid({axis(Role::t, 8, 2.0)}, 0.25))[0] == cd(0.25));
}

TEST_CASE("eval_on_grid is pointwise") {
  auto g = grid({axis(Role::t, 8, 2.0), axis(Role::x, 8, 3.0), axis(Role::y, 4, 1.0)}, 0.3);
  auto e = parse_expr("(1 + t^2)*xi1^2 + i*t*tau - max(x1, 0)*sin(eta1) / (2 + y1^2) + h*sqrt(abs(xi1))");
  auto f = eval_on_grid(e, g);
  std::mt19937_64 rng(42);
  std::vector<int> idx(6);
  for (int k = 0; k < 100; ++k) {
    std::map<std::string, cd> vars{{"h", 0.3}};
    for (int a = 0; a < 6; ++a) {
      idx[a] = static_cast<int>(rng() % g->points(a));
      vars[g->name(a)] = g->coord(a, idx[a]);
    }
    CHECK(std::abs(f.expand(full_mask(*g)).at(idx) - eval_point(e, vars)) < 1e-12);
  }
}

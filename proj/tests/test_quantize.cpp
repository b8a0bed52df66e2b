#include "doctest.h"

#include <cstdio>
#include <numbers>
#include <random>

#include "mlab/linalg.hpp"
#include "mlab/quantize.hpp"
#include "test_util.hpp"

using namespace mlab;
using test::axis;
using test::grid;

namespace {

// Direct quadrature of the Weyl kernel along one axis with exact midpoints.
Eigen::MatrixXcd weyl_oracle_1d(const PhaseGrid& g, const std::function<cd(double, double)>& a) {
  const int n = g.points(0);
  Eigen::MatrixXcd K(n, n);
  for (int j = 0; j < n; ++j)
    for (int l = 0; l < n; ++l) {
      cd s = 0.0;
      const double x = g.coord(0, j), y = g.coord(0, l);
      for (int k = 0; k < n; ++k) {
        const double xi = g.coord(1, k);
        s += std::exp(cd(0, (x - y) * xi)) * a(0.5 * (x + y), xi);
      }
      K(j, l) = s / double(n);
    }
  return K;
}

Eigen::MatrixXcd diff_matrix(const PhaseGrid& g) {
  return weyl_oracle_1d(g, [](double, double xi) { return cd(xi); });
}

double rel(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  return (a - b).norm() / std::max(1e-300, b.norm());
}

}  // namespace

TEST_CASE("weyl: a = 1 gives the identity") {
  auto g = grid({axis(Role::t, 8, 2.0), axis(Role::x, 4, 2.0, false)});
  auto op = weyl_quantize(SymbolField::constant(g, 1.0));
  CHECK((op.matrix - Eigen::MatrixXcd::Identity(32, 32)).norm() < 1e-13);
  CHECK(op.quantization == Quantization::weyl);
}

TEST_CASE("weyl: a = xi is the FFT differentiation matrix") {
  auto g = grid({axis(Role::t, 16, 3.0)});
  auto a = SymbolField::sample(g, 2u, [](const std::vector<double>& z) { return cd(z[1]); });
  auto op = weyl_quantize(a);
  // D = F^-1 diag(xi) F with the DFT matrix built by hand
  const int n = 16;
  Eigen::MatrixXcd F(n, n);
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j) F(k, j) = std::exp(cd(0, -g->coord(1, k) * g->coord(0, j)));
  Eigen::VectorXcd xi(n);
  for (int k = 0; k < n; ++k) xi(k) = g->coord(1, k);
  Eigen::MatrixXcd D = F.adjoint() * xi.asDiagonal() * F / double(n);
  CHECK(rel(op.matrix, D) < 1e-13);
  CHECK(rel(kn_quantize(a).matrix, D) < 1e-13);
}

TEST_CASE("weyl: x*xi on 8 points is (XD + DX)/2") {
  auto g = grid({axis(Role::t, 8, 2.5, false)});
  auto a = SymbolField::sample(g, 3u, [](const std::vector<double>& z) { return cd(z[0] * z[1]); });
  auto op = weyl_quantize(a);
  auto oracle = weyl_oracle_1d(*g, [](double x, double xi) { return cd(x * xi); });
  CHECK(rel(op.matrix, oracle) < 1e-13);
  Eigen::MatrixXcd X = Eigen::MatrixXcd::Zero(8, 8);
  for (int j = 0; j < 8; ++j) X(j, j) = g->coord(0, j);
  auto D = diff_matrix(*g);
  CHECK(rel(op.matrix, 0.5 * (X * D + D * X)) < 1e-13);
  // kn: X D
  CHECK(rel(kn_quantize(a).matrix, X * D) < 1e-13);
}

TEST_CASE("weyl on a periodic axis matches exact midpoints for band-limited symbols") {
  auto g = grid({axis(Role::t, 16, 2 * std::numbers::pi)});
  auto a = SymbolField::sample(g, 3u, [](const std::vector<double>& z) { return cd(std::cos(z[0]) * z[1] * z[1]); });
  auto op = weyl_quantize(a);
  const int n = 16;
  // short-difference midpoint, antipodal pairs split evenly
  Eigen::MatrixXcd K(n, n);
  for (int j = 0; j < n; ++j)
    for (int l = 0; l < n; ++l) {
      int d = ((j - l) % n + n) % n;
      if (d > n / 2) d -= n;
      const double x = g->coord(0, j), y = g->coord(0, l), dx = g->spacing(0);
      std::vector<std::pair<double, double>> mids;
      if (std::abs(d) == n / 2) mids = {{y + 0.5 * (n / 2) * dx, 0.5}, {y - 0.5 * (n / 2) * dx, 0.5}};
      else mids = {{y + 0.5 * d * dx, 1.0}};
      cd s = 0.0;
      for (int k = 0; k < n; ++k) {
        const double xi = g->coord(1, k);
        for (auto [m, w] : mids) s += w * std::exp(cd(0, (x - y) * xi)) * std::cos(m) * xi * xi;
      }
      K(j, l) = s / double(n);
    }
  CHECK(rel(op.matrix, K) < 1e-12);
  CHECK((op.matrix - op.matrix.adjoint()).norm() < 1e-12 * op.matrix.norm());
}

TEST_CASE("real symbols give Hermitian Weyl matrices") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(-1, 1);
  for (bool per : {true, false}) {
    auto g = grid({axis(Role::t, 8, 2.0, per), axis(Role::x, 8, 3.0, per)}, 0.2);
    std::vector<cd> v(g->phase_size());
    for (auto& x : v) x = U(rng);
    SymbolField a(g, full_mask(*g), v);
    auto op = weyl_quantize(a);
    CHECK((op.matrix - op.matrix.adjoint()).norm() <= 1e-10 * op.matrix.norm());
  }
}

TEST_CASE("inactive axes enter as identity factors") {
  auto g = grid({axis(Role::t, 4, 2.0), axis(Role::x, 8, 2.0)});
  auto a = SymbolField::sample(g, 0b1010, [](const std::vector<double>& z) { return cd(std::sin(z[1]) + z[3]); });
  auto full = weyl_quantize(a.expand(full_mask(*g)));
  auto fast = weyl_quantize(a);
  CHECK(rel(fast.matrix, full.matrix) < 1e-13);
}

TEST_CASE("kn_to_weyl examples") {
  auto g = grid({axis(Role::t, 16, 3.0, false)}, 0.3);
  auto xi_only = SymbolField::sample(g, 2u, [](const std::vector<double>& z) { return cd(z[1] * z[1]); });
  CHECK(test::max_abs_diff(kn_to_weyl(xi_only), xi_only) == 0.0);
  auto xxi = SymbolField::sample(g, 3u, [](const std::vector<double>& z) { return cd(z[0] * z[1]); });
  CHECK(test::max_abs_diff(kn_to_weyl(xxi), xxi + cd(0, 0.5)) < 1e-10);
  auto x2xi2 =
      SymbolField::sample(g, 3u, [](const std::vector<double>& z) { return cd(z[0] * z[0] * z[1] * z[1]); });
  auto expect = x2xi2 + cd(0, 2.0) * xxi;
  CHECK(test::max_abs_diff(kn_to_weyl(x2xi2), expect) < 1e-8 * x2xi2.sup_abs());
}

TEST_CASE("kn equals weyl of kn_to_weyl up to O(h^2)") {
  // the symbol must decay before the dual lattice wraps around
  auto e = parse_expr("sin(t) * exp(-tau^2)");
  std::vector<double> err;
  for (double h : {0.4, 0.2, 0.1}) {
    GridConfig c;
    c.dims = {axis(Role::t, 64, 2 * std::numbers::pi)};
    c.h = h;
    auto g = build_grid(c);
    auto a = eval_semiclassical(e, g, h);
    auto kn = kn_quantize(a);
    auto w = weyl_quantize(kn_to_weyl(a));
    err.push_back(operator_norm(kn.matrix - w.matrix));
  }
  MESSAGE("kn-weyl differences: " << err[0] << " " << err[1] << " " << err[2]);
  CHECK(err[0] / err[1] == doctest::Approx(4.0).epsilon(0.25));
  CHECK(err[1] / err[2] == doctest::Approx(4.0).epsilon(0.25));
}

TEST_CASE("gaussian_regularize: constants, affine data, second moments") {
  auto g = grid({axis(Role::t, 64, 16.0, false), axis(Role::x, 32, 16.0, false)}, 1.0);
  auto c = SymbolField(g, full_mask(*g), cd(2.5));
  CHECK(test::max_abs_diff(gaussian_regularize(c), c) < 1e-10);

  auto aff = SymbolField::sample(g, full_mask(*g), [](const std::vector<double>& z) {
    return cd(1.0 + 2 * z[0] - 0.5 * z[2] + 0.25 * z[3] + 3.0 * z[0] * z[3]);
  });
  // affine in each variable separately survives exactly on non-periodic axes
  CHECK(test::max_abs_diff(gaussian_regularize(aff), aff) < 1e-10 * aff.sup_abs());

  // |w|^2 in t, tau: second moment of the unit Gaussian adds 1/2 per axis
  auto q = SymbolField::sample(g, 0b0101, [](const std::vector<double>& z) { return cd(z[0] * z[0] + z[2] * z[2]); });
  auto q0 = gaussian_regularize(q);
  std::vector<int> idx(4, 0);
  double worst = 0.0;
  for (int j = 0; j < 64; ++j)
    for (int k = 0; k < 64; ++k) {
      const double t = g->coord(0, j), tau = g->coord(2, k);
      const double tl = 0.5 * g->extent(0), taul = 0.5 * g->extent(2);
      if (std::abs(t) > tl - 6.0 || std::abs(tau) > taul - 6.0) continue;
      idx[0] = j;
      idx[2] = k;
      worst = std::max(worst, std::abs(q0.at(idx) - (t * t + tau * tau + 1.0)));
    }
  CHECK(worst < 1e-6);
}

TEST_CASE("gaussian_regularize warns on short axes") {
  auto g = grid({axis(Role::t, 16, 4.0, false)}, 1.0);
  std::vector<std::string> w;
  gaussian_regularize(SymbolField::constant(g, 1.0), &w);
  CHECK(!w.empty());
}

TEST_CASE("wick quantization examples") {
  // g# spacings 0.53 and 0.35: the odd-midpoint mass defect exp(-pi^2/dg^2) is below 1e-15
  auto g = grid({axis(Role::t, 32, 12.0, false), axis(Role::x, 16, 4.0, false)}, 0.5);
  auto one = wick_quantize(SymbolField::constant(g, 1.0));
  CHECK((one.matrix - Eigen::MatrixXcd::Identity(512, 512)).norm() < 1e-10);
  CHECK(one.quantization == Quantization::wick);

  // <Lx, xi> with a constant matrix L
  auto lin = SymbolField::sample(g, full_mask(*g), [](const std::vector<double>& z) {
    return cd((0.3 * z[0] - 1.1 * z[1]) * z[2] + (0.7 * z[0] + 0.2 * z[1]) * z[3]);
  });
  auto W = wick_quantize(lin).matrix, Y = weyl_quantize(lin).matrix;
  CHECK(rel(W, Y) < 1e-9);
}

TEST_CASE("wick of x^2 is weyl of x^2 + 1/2 away from the edges") {
  auto g = grid({axis(Role::t, 64, 24.0, false)}, 1.0);
  auto a = SymbolField::sample(g, 1u, [](const std::vector<double>& z) { return cd(z[0] * z[0]); });
  auto W = wick_quantize(a).matrix;
  auto Y = weyl_quantize(a + cd(0.5)).matrix;
  for (int j = 0; j < 64; ++j) {
    if (std::abs(g->coord(0, j)) > 12.0 - 6.5) continue;
    CHECK(std::abs(W(j, j) - Y(j, j)) < 1e-6);
  }
}

TEST_CASE("wick positivity, norm bound and adjoint on small random symbols") {
  auto g = grid({axis(Role::t, 16, 4.5)}, 0.1);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> U(0, 1), S(-1, 1);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<cd> v(g->phase_size());
    for (auto& x : v) x = U(rng);
    SymbolField a(g, full_mask(*g), v);
    auto op = wick_quantize(a);
    Eigen::MatrixXcd Hm = 0.5 * (op.matrix + op.matrix.adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(Hm, Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues()(0) >= -1e-8 * a.sup_abs());
    CHECK(operator_norm(op.matrix) <= 1.05 * a.sup_abs());

    std::vector<cd> vc(g->phase_size());
    for (auto& x : vc) x = cd(S(rng), S(rng));
    SymbolField b(g, full_mask(*g), vc);
    auto B = wick_quantize(b).matrix, Bc = wick_quantize(conj(b)).matrix;
    CHECK((Bc - B.adjoint()).norm() <= 1e-10 * B.norm());
  }
}

TEST_CASE("quantizers reject the gsharp frame") {
  auto g = grid({axis(Role::t, 8, 2.0)}, 0.5, Frame::gsharp);
  CHECK_THROWS_AS(weyl_quantize(SymbolField::constant(g, 1.0)), Error);
  CHECK_THROWS_AS(kn_quantize(SymbolField::constant(g, 1.0)), Error);
}

TEST_CASE("compose_leading_check") {
  GridConfig c;
  c.dims = {axis(Role::t, 32, 2 * std::numbers::pi)};
  auto r0 = compose_leading_check(parse_expr("tau^2"), parse_expr("tau + 1"), c);
  for (double x : r0.residual) CHECK(x <= 1e-9);
  auto r1 = compose_leading_check(parse_expr("1"), parse_expr("sin(t)*tau"), c);
  for (double x : r1.residual) CHECK(x <= 1e-12);
  auto r2 = compose_leading_check(parse_expr("sin(t)"), parse_expr("tau"), c);
  REQUIRE(r2.ratio.size() == 2);
  for (double q : r2.ratio) CHECK(q == doctest::Approx(2.0).epsilon(0.3));
}

TEST_CASE("operator containers round-trip") {
  auto g = grid({axis(Role::t, 8, 2.0)});
  auto a = SymbolField::sample(g, 3u, [](const std::vector<double>& z) { return cd(z[0], z[1]); });
  auto op = weyl_quantize(a);
  const std::string path = "test_quantize_op.bin";
  write_operator_binary(op, path);
  auto back = read_operator_binary(path, g);
  CHECK(back.matrix == op.matrix);
  std::remove(path.c_str());
}

TEST_CASE("wick of an indicator is positive to rounding") {
  auto g = grid({axis(Role::t, 16, 2 * std::numbers::pi), axis(Role::x, 16, 2 * std::numbers::pi)}, 0.1);
  auto a = SymbolField::sample(g, full_mask(*g), [](const std::vector<double>& z) {
    const double q = std::pow(z[0] - 0.4, 2) + std::pow(z[1] / 2, 2) + std::pow(z[2] / 3, 2) + std::pow(z[3] / 4, 2);
    return cd(q <= 1.0 ? 1.0 : 0.0);
  });
  auto W = wick_quantize(a).matrix;
  Eigen::MatrixXcd H = 0.5 * (W + W.adjoint());
  CHECK(hermitian_eigenvalues(H).minCoeff() >= -1e-12);
  // interpolating a0 to the midpoints instead loses positivity at this size
  auto Y = weyl_quantize(gaussian_regularize(a)).matrix;
  CHECK(hermitian_eigenvalues(0.5 * (Y + Y.adjoint())).minCoeff() < -1e-10);
}

TEST_CASE("wick agrees with weyl of the regularization on smooth symbols") {
  auto g = grid({axis(Role::t, 32, 2 * std::numbers::pi), axis(Role::x, 32, 2 * std::numbers::pi)}, 0.1);
  auto a = SymbolField::sample(g, full_mask(*g), [](const std::vector<double>& z) {
    return cd(std::cos(z[0]) * std::exp(-0.1 * z[3] * z[3]) + 0.2 * std::sin(z[1]) * z[2]);
  });
  auto W = wick_quantize(a).matrix, Y = weyl_quantize(gaussian_regularize(a)).matrix;
  CHECK(rel(W, Y) < 1e-6);
}

TEST_CASE("coarse axes: affine defect of wick is the odd-midpoint mass defect") {
  // x: 8 points over 4 at h = 0.5 gives dg = 0.707
  auto g = grid({axis(Role::t, 32, 12.0, false), axis(Role::x, 8, 4.0, false)}, 0.5);
  const double dg = (4.0 / 8) / std::sqrt(0.5);
  auto lin = SymbolField::sample(g, full_mask(*g), [](const std::vector<double>& z) {
    return cd((0.3 * z[0] - 1.1 * z[1]) * z[2] + (0.7 * z[0] + 0.2 * z[1]) * z[3]);
  });
  const double r = rel(wick_quantize(lin).matrix, weyl_quantize(lin).matrix);
  const double predicted = std::exp(-std::numbers::pi * std::numbers::pi / (dg * dg));
  CAPTURE(r);
  CHECK(r >= 0.1 * predicted);
  CHECK(r <= 10 * predicted);
}

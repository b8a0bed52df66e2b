#include "mlab/multiplier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "mlab/conditions.hpp"

namespace mlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// delta and m broadcast to a common (t, w) layout.
struct Columns {
  Layout L;
  std::vector<double> delta, m;
  std::vector<int> win;
  std::size_t st = 0;
  double dt = 0.0;
  std::vector<std::size_t> starts;
};

Columns columns(const WeightField& delta, const WeightField& m, double T) {
  if (!same_grid(delta.grid(), m.grid())) throw Error("rho: delta and m live on different grids");
  const auto& g = *delta.grid();
  const int ta = g.t_axis();
  Columns c;
  c.win = time_window(g, T);
  const std::uint32_t mask = delta.values.mask() | m.values.mask() | (1u << ta);
  c.L = Layout(delta.grid(), mask);
  c.delta = delta.values.expand(mask).values();
  c.m = m.values.expand(mask).values();
  c.st = c.L.stride(ta);
  c.dt = g.spacing(ta);
  std::vector<int> idx;
  for (std::size_t o = 0; o < c.L.size(); ++o) {
    c.L.unravel(o, idx);
    if (idx[ta] == 0) c.starts.push_back(o);
  }
  return c;
}

// x_j = (1/2T) * trapezoid integral of m from the window start to t_j.
std::vector<double> scaled_integral(const Columns& c, std::size_t b, double T) {
  std::vector<double> x(c.win.size(), 0.0);
  double acc = 0.0;
  const double inv = 1.0 / (2.0 * T);
  for (std::size_t k = 1; k < c.win.size(); ++k) {
    const std::size_t o0 = b + c.win[k - 1] * c.st, o1 = b + c.win[k] * c.st;
    acc += 0.5 * (c.m[o0] + c.m[o1]) * c.dt;
    x[k] = acc * inv;
  }
  return x;
}

WeightField finish(const Columns& c, std::vector<double> rho, const WeightField& like) {
  const auto& g = *like.grid();
  const int nt = g.points(g.t_axis());
  for (std::size_t b : c.starts) {
    const double lo = rho[b + c.win.front() * c.st], hi = rho[b + c.win.back() * c.st];
    for (int j = 0; j < c.win.front(); ++j) rho[b + j * c.st] = lo;
    for (int j = c.win.back() + 1; j < nt; ++j) rho[b + j * c.st] = hi;
  }
  WeightField w;
  w.values = RealField(like.grid(), c.L.mask(), std::move(rho));
  w.role = "rho_T";
  w.h = like.h;
  return w;
}

double smoothstep(double s) {
  s = std::clamp(s, 0.0, 1.0);
  return s * s * (3.0 - 2.0 * s);
}

}  // namespace

std::vector<int> time_window(const PhaseGrid& g, double T) {
  const int ta = g.t_axis();
  if (ta < 0) throw Error("time window: grid has no t axis");
  if (!(T > 0.0)) throw Error("time window: T must be positive");
  const double half = 0.5 * g.extent(ta);
  if (T > half * (1 + 1e-12)) {
    std::ostringstream os;
    os << "time window: T = " << T << " exceeds the t half-extent " << half;
    throw Error(os.str());
  }
  std::vector<int> w;
  const double tol = 1e-12 * g.spacing(ta);
  for (int j = 0; j < g.points(ta); ++j)
    if (std::abs(g.coord(ta, j)) <= T + tol) w.push_back(j);
  if (w.empty()) throw Error("time window: no lattice point with |t| <= T");
  return w;
}

WeightField compute_rho(const WeightField& delta, const WeightField& m, double T) {
  const Columns c = columns(delta, m, T);
  std::vector<double> rho(c.L.size(), 0.0);
  for (std::size_t b : c.starts) {
    const auto x = scaled_integral(c, b, T);
    // delta + rho = max(running max of G(s) + x_t, delta_t - m_t), G(s) = delta - m - x
    double run = -kInf;
    for (std::size_t k = 0; k < c.win.size(); ++k) {
      const std::size_t o = b + c.win[k] * c.st;
      const double cand = (run + x[k]) - c.delta[o];
      rho[o] = std::max(-c.m[o], cand);
      run = std::max(run, (c.delta[o] - c.m[o]) - x[k]);
    }
  }
  return finish(c, std::move(rho), delta);
}

WeightField compute_rho_bruteforce(const WeightField& delta, const WeightField& m, double T) {
  const Columns c = columns(delta, m, T);
  std::vector<double> rho(c.L.size(), 0.0);
  for (std::size_t b : c.starts) {
    const auto x = scaled_integral(c, b, T);
    for (std::size_t k = 0; k < c.win.size(); ++k) {
      const std::size_t o = b + c.win[k] * c.st;
      double best = -c.m[o];  // s = t
      for (std::size_t q = 0; q < k; ++q) {
        const std::size_t os = b + c.win[q] * c.st;
        best = std::max(best, (((c.delta[os] - c.m[os]) - x[q]) + x[k]) - c.delta[o]);
      }
      rho[o] = best;
    }
  }
  return finish(c, std::move(rho), delta);
}

RhoAudit audit_rho(const WeightField& delta, const WeightField& m, double T) {
  const WeightField rho = compute_rho(delta, m, T);
  const WeightField brute = compute_rho_bruteforce(delta, m, T);
  RhoAudit a;
  a.sweep_equals_brute = rho.values.values() == brute.values.values();
  const Columns c = columns(delta, m, T);
  const auto r = rho.values.expand(c.L.mask()).values();
  double msup = 0.0;
  for (double v : c.m) msup = std::max(msup, std::abs(v));
  a.tolerance = 2.0 * msup * c.dt;
  a.bound_slack = kInf;
  a.commutator_slack = kInf;
  for (std::size_t b : c.starts) {
    for (std::size_t k = 0; k < c.win.size(); ++k) {
      const std::size_t o = b + c.win[k] * c.st;
      const double s = c.m[o] - std::abs(r[o]);
      a.bound_slack = std::min(a.bound_slack, s);
      if (s < 0) ++a.violations;
      if (k + 1 < c.win.size()) {
        const std::size_t o1 = b + c.win[k + 1] * c.st;
        const double dq = ((c.delta[o1] + r[o1]) - (c.delta[o] + r[o])) / c.dt;
        const double cs = T * dq - 0.5 * c.m[o] + a.tolerance;
        a.commutator_slack = std::min(a.commutator_slack, cs);
        if (cs < 0) ++a.violations;
      }
    }
  }
  return a;
}

std::vector<SymbolField> quadratic_coefficients(const SymbolField& A) {
  GridPtr gp = A.grid()->frame() == Frame::standard ? A.grid() : reframe(A.grid(), Frame::standard);
  const HessianReport hr = hessian_at_sigma2(A.on_grid(gp));
  std::vector<SymbolField> out;
  for (const auto& e : hr.entries) out.push_back(to_complex(e.map([](double v) { return 0.5 * v; })));
  return out;
}

LMatrix compute_L_matrix(const std::vector<SymbolField>& a, const std::vector<int>& w0, double c1_cap) {
  if (a.empty()) throw Error("L matrix: no coefficients");
  const int n = static_cast<int>(std::lround(std::sqrt(double(a.size()))));
  if (n * n != static_cast<int>(a.size())) throw Error("L matrix: coefficient list is not square");
  GridPtr gp = a[0].grid();
  if (gp->frame() != Frame::standard) gp = reframe(gp, Frame::standard);
  const auto& g = *gp;
  const auto xs = g.base_axes(Role::x);
  if (static_cast<int>(xs.size()) != n) throw Error("L matrix: coefficient size does not match the x axes");

  std::vector<SymbolField> as;
  for (const auto& f : a) as.push_back(f.on_grid(gp));
  std::vector<int> base(g.axis_count(), 0);
  for (int k = 0; k < g.axis_count() && k < static_cast<int>(w0.size()); ++k) base[k] = std::max(w0[k], 0);

  LMatrix out;
  out.a0.resize(n, n);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) {
      const cd v = as[j * n + k].at(base);
      if (std::abs(v.imag()) > 1e-12 * std::max(1.0, std::abs(v))) throw Error("L matrix: a_jk must be real");
      out.a0(j, k) = v.real();
    }
  if ((out.a0 - out.a0.transpose()).norm() > 1e-10 * std::max(1.0, out.a0.norm()))
    throw Error("L matrix: a_jk is not symmetric at the base point");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(out.a0);
  const double emin = es.eigenvalues().cwiseAbs().minCoeff();
  if (emin <= 1e-10 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff()))
    throw Error("L matrix: a_jk is singular at the base point");
  out.L = out.a0.inverse();
  for (int j = 0; j < n; ++j) out.x0.push_back(g.coord(xs[j], base[xs[j]]));

  // Q(x) = 2 sym(L a(x)) - sum_j (L(x-x0))_j d_xj a(x); bracket = xi^T Q xi
  std::vector<std::vector<SymbolField>> da(n);
  for (int j = 0; j < n; ++j)
    for (int p = 0; p < n * n; ++p) da[j].push_back(partial(as[p], xs[j], 1));
  std::uint32_t mask = 0;
  for (int j = 0; j < n; ++j) mask |= 1u << xs[j];
  for (const auto& f : as) mask |= f.mask();
  for (const auto& v : da)
    for (const auto& f : v) mask |= f.mask();
  // dual axes are enumerated explicitly below
  for (int j = 0; j < n; ++j) mask &= ~(1u << g.dual_of(xs[j]));
  const Layout Lx(gp, mask);

  std::vector<std::vector<double>> xi_pts;
  {
    std::vector<int> k(n, 0);
    while (true) {
      std::vector<double> xi(n);
      for (int j = 0; j < n; ++j) xi[j] = g.coord(g.dual_of(xs[j]), k[j]);
      xi_pts.push_back(xi);
      int j = 0;
      while (j < n && ++k[j] == g.points(g.dual_of(xs[j]))) k[j++] = 0;
      if (j == n) break;
    }
  }

  struct PointInfo {
    double r;
    double deficit;
    double ratio;
  };
  std::vector<PointInfo> pts;
  std::vector<int> idx;
  Eigen::MatrixXd A(n, n), Q(n, n);
  for (std::size_t o = 0; o < Lx.size(); ++o) {
    Lx.unravel(o, idx);
    std::vector<double> dx(n);
    double r = 0.0;
    for (int j = 0; j < n; ++j) {
      double d = g.coord(xs[j], idx[xs[j]]) - out.x0[j];
      if (g.periodic(xs[j])) {
        const double L = g.extent(xs[j]);
        d -= L * std::round(d / L);
      }
      dx[j] = d;
      r = std::max(r, std::abs(d));
    }
    Eigen::VectorXd Ldx = out.L * Eigen::Map<Eigen::VectorXd>(dx.data(), n);
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) A(j, k) = as[j * n + k].at(idx).real();
    Q = out.L * A;
    Q = Q + Q.transpose().eval();
    for (int j = 0; j < n; ++j)
      for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q) Q(p, q) -= Ldx(j) * da[j][p * n + q].at(idx).real();
    double deficit = 0.0, ratio = kInf;
    for (const auto& xi : xi_pts) {
      Eigen::Map<const Eigen::VectorXd> v(xi.data(), n);
      const double s2 = v.squaredNorm();
      const double br = v.dot(Q * v);
      deficit = std::max(deficit, s2 - br);
      if (s2 > 0) ratio = std::min(ratio, br / s2);
    }
    pts.push_back({r, deficit, ratio});
  }
  std::sort(pts.begin(), pts.end(), [](const PointInfo& p, const PointInfo& q) { return p.r < q.r; });
  // grow the ball through distinct radii while c1 stays below the cap
  double c1 = 0.0, ratio = kInf, radius = -1.0;
  for (std::size_t i = 0; i < pts.size();) {
    std::size_t j = i;
    double c = c1, rt = ratio;
    while (j < pts.size() && pts[j].r <= pts[i].r + 1e-12) {
      c = std::max(c, pts[j].deficit);
      rt = std::min(rt, pts[j].ratio);
      ++j;
    }
    if (c > c1_cap) break;
    c1 = c;
    ratio = rt;
    radius = pts[i].r;
    i = j;
  }
  if (radius < 0) throw Error("L matrix: bracket lower bound fails at the base point itself");
  out.radius = radius;
  out.c1 = c1;
  out.min_bracket_ratio = ratio;
  return out;
}

SymbolField compute_lambda(const LMatrix& L, double eps, double T, const GridPtr& grid) {
  if (!(eps > 0.0 && eps <= 1.0)) throw Error("lambda: eps must lie in (0, 1]");
  if (!(T > 0.0)) throw Error("lambda: T must be positive");
  GridPtr gp = grid->frame() == Frame::standard ? grid : reframe(grid, Frame::standard);
  const auto& g = *gp;
  const auto xs = g.base_axes(Role::x);
  const int n = static_cast<int>(xs.size());
  if (n == 0) return SymbolField::constant(gp, 0.0);
  if (L.L.rows() != n) throw Error("lambda: L does not match the x axes");
  std::uint32_t mask = 0;
  for (int a : xs) mask |= (1u << a) | (1u << g.dual_of(a));
  const double c = eps * std::sqrt(g.h()) / T;
  std::vector<double> rad(n), cell(n);
  for (int j = 0; j < n; ++j) {
    cell[j] = g.spacing(xs[j]);
    // keep the taper off the periodic seam
    rad[j] = g.periodic(xs[j]) ? std::min(T, 0.5 * g.extent(xs[j]) - 2 * cell[j]) : T;
  }
  return SymbolField::sample(gp, mask, [&](const std::vector<double>& z) {
    double taper = 1.0, s = 0.0;
    std::vector<double> dx(n);
    for (int j = 0; j < n; ++j) {
      double d = z[xs[j]] - L.x0[j];
      if (g.periodic(xs[j])) {
        const double P = g.extent(xs[j]);
        d -= P * std::round(d / P);
      }
      dx[j] = d;
      taper = std::min(taper, 1.0 - smoothstep((std::abs(d) - rad[j]) / cell[j]));
    }
    for (int i = 0; i < n; ++i) {
      double li = 0.0;
      for (int j = 0; j < n; ++j) li += L.L(i, j) * dx[j];
      s += li * z[g.dual_of(xs[i])];
    }
    return cd(c * s * taper, 0.0);
  });
}

MultiplierBundle build_multiplier(const WeightField& delta, const WeightField& rho, const SymbolField& lambda,
                                  double T, double eps, const LMatrix& L) {
  MultiplierBundle mb;
  mb.T = T;
  mb.eps = eps;
  mb.L = L;
  mb.grid = lambda.grid()->frame() == Frame::standard ? lambda.grid() : reframe(lambda.grid(), Frame::standard);
  if (!delta.grid()->same_lattice(*mb.grid) || !rho.grid()->same_lattice(*mb.grid))
    throw Error("build_multiplier: component fields live on different lattices");
  mb.rho = rho.values.on_grid(mb.grid);
  const RealField d = delta.values.on_grid(mb.grid);
  const SymbolField lam = lambda.on_grid(mb.grid);
  if (!is_real(lam, 1e-12 * std::max(1.0, lam.sup_abs()))) throw Error("build_multiplier: lambda must be real");
  mb.lambda = real_part(lam);
  mb.B = combine(combine(d, mb.rho, [](double a, double b) { return a + b; }), mb.lambda,
                 [](double a, double b) { return a + b; });
  mb.sup_B = mb.B.sup_abs();
  const std::uint32_t axes = non_time_axes(*mb.grid);
  mb.delta1 = gaussian_regularize(to_complex(d), nullptr, axes);
  mb.rho1 = gaussian_regularize(to_complex(mb.rho), nullptr, axes);
  mb.b_op = wick_quantize(to_complex(mb.B), &mb.log, "B_T", axes);
  const auto& M = mb.b_op.matrix;
  const Eigen::MatrixXcd herm = 0.5 * (M + M.adjoint());
  const auto ev = hermitian_eigenvalues(herm);
  const double hn = ev.size() ? std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1))) : 0.0;
  mb.norm = hn;
  mb.hermitian_defect = (M - M.adjoint()).norm() / std::max(1.0, M.norm());
  return mb;
}

}  // namespace mlab

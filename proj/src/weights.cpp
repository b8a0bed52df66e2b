#include "mlab/weights.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Dense>

#include "mlab/conditions.hpp"

namespace mlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Broadcast to a common mask (the union plus `extra`).
std::vector<RealField> aligned(std::initializer_list<const RealField*> fs, std::uint32_t extra = 0) {
  std::uint32_t m = extra;
  for (auto* f : fs) m |= f->mask();
  std::vector<RealField> out;
  for (auto* f : fs) out.push_back(f->expand(m));
  return out;
}

WeightField tagged(RealField v, const char* role) {
  const double h = v.grid()->h();
  return WeightField{std::move(v), role, h};
}

// Offsets of the first point of every line along `axis`.
std::vector<std::size_t> line_starts(const Layout& L, int axis) {
  std::vector<std::size_t> out;
  std::vector<int> idx;
  for (std::size_t o = 0; o < L.size(); ++o) {
    L.unravel(o, idx);
    if (!L.depends_on(axis) || idx[axis] == 0) out.push_back(o);
  }
  return out;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

void require_gsharp(const GridPtr& g, const char* who) {
  if (g->frame() != Frame::gsharp) throw Error(std::string(who) + ": weight fields require the gsharp frame");
}

RealField snap_real(const SymbolField& f, double* threshold) {
  const double sup = f.sup_abs();
  if (!is_real(f, std::max(1e-12 * sup, 1e-300))) throw Error("weights: f must be real-valued");
  const double thr = std::max(1e-12 * real_part(at_sigma2(f)).sup_abs(), 1e-300);
  if (threshold) *threshold = thr;
  return f.map([thr](cd v) { return std::abs(v.real()) <= thr ? 0.0 : v.real(); });
}

std::uint32_t leaf_space_mask(const RealField& f) {
  const auto& g = *f.grid();
  return (f.mask() & ~x_axes_mask(g) & ~xi_axes_mask(g)) | (1u << g.t_axis());
}

XSets compute_x_sets(const SymbolField& f) {
  const auto& g = *f.grid();
  const RealField r = snap_real(at_sigma2(f));
  const std::uint32_t xm = x_axes_mask(g);
  const RealField mx = reduce(r, xm, [](double a, double b) { return std::max(a, b); });
  const RealField mn = reduce(r, xm, [](double a, double b) { return std::min(a, b); });
  const std::uint32_t wm = leaf_space_mask(r);
  const RealField MX = mx.expand(wm), MN = mn.expand(wm);

  XSets x;
  x.layout = Layout(f.grid(), wm);
  const std::size_t n = x.layout.size();
  x.plus.assign(n, 0);
  x.minus.assign(n, 0);
  x.zero.assign(n, 0);
  x.cls.assign(n, 0);
  const int ta = g.t_axis();
  const int nt = g.points(ta);
  const std::size_t st = x.layout.stride(ta);
  for (std::size_t b : line_starts(x.layout, ta)) {
    bool seen = false;
    for (int j = 0; j < nt; ++j) {
      const std::size_t o = b + j * st;
      seen = seen || MX[o] > 0.0;
      x.plus[o] = seen;
    }
    seen = false;
    for (int j = nt - 1; j >= 0; --j) {
      const std::size_t o = b + j * st;
      seen = seen || MN[o] < 0.0;
      x.minus[o] = seen;
    }
  }
  for (std::size_t o = 0; o < n; ++o) {
    x.zero[o] = !x.plus[o] && !x.minus[o];
    x.cls[o] = x.plus[o] && !x.minus[o] ? 1 : x.minus[o] && !x.plus[o] ? -1 : 0;
  }
  return x;
}

std::vector<double> lattice_distance(const Layout& L, const std::vector<char>& source, int half_axis) {
  const auto& g = *L.grid();
  std::vector<double> D(L.size());
  for (std::size_t o = 0; o < D.size(); ++o) D[o] = source[o] ? 0.0 : kInf;
  std::vector<int> order;
  if (L.depends_on(g.t_axis())) order.push_back(g.t_axis());
  for (int a = 0; a < g.axis_count(); ++a)
    if (L.depends_on(a) && a != g.t_axis()) order.push_back(a);

  std::vector<double> line, out;
  for (int a : order) {
    const int n = g.points(a);
    const double s = g.spacing(a);
    const std::size_t st = L.stride(a);
    const bool half = a == half_axis;
    // squared separations by integer offset q - p (shifted by 1/2 on the half axis)
    std::vector<double> sep(2 * n + 1);
    for (int k = -n; k <= n; ++k) {
      const double z = s * (half ? k - 0.5 : k);
      sep[k + n] = z * z;
    }
    line.resize(n);
    out.resize(n);
    for (std::size_t b : line_starts(L, a)) {
      for (int j = 0; j < n; ++j) line[j] = D[b + j * st];
      for (int q = 0; q < n; ++q) {
        double best = kInf;
        for (int p = 0; p < n; ++p) best = std::min(best, sep[q - p + n] + line[p]);
        out[q] = best;
      }
      for (int j = 0; j < n; ++j) D[b + j * st] = out[j];
    }
  }
  for (auto& v : D) v = std::sqrt(v);
  return D;
}

WeightField signed_delta(const SymbolField& f, WeightField* distance) {
  require_gsharp(f.grid(), "signed_delta");
  const auto& g = *f.grid();
  const XSets x = compute_x_sets(f);
  const Layout& L = x.layout;
  const std::size_t n = L.size();
  std::vector<char> s0(n);
  for (std::size_t o = 0; o < n; ++o) s0[o] = x.cls[o] == 0;
  std::vector<double> D = lattice_distance(L, s0);
  // sign jumps between lattice neighbours: the midpoint of the edge joins the
  // neutral set
  std::vector<int> idx;
  for (int a = 0; a < g.axis_count(); ++a) {
    if (!L.depends_on(a)) continue;
    std::vector<char> edge(n, 0);
    bool any = false;
    for (std::size_t o = 0; o < n; ++o) {
      L.unravel(o, idx);
      if (idx[a] + 1 >= g.points(a)) continue;
      edge[o] = x.cls[o] * x.cls[o + L.stride(a)] == -1;
      any = any || edge[o];
    }
    if (!any) continue;
    const auto De = lattice_distance(L, edge, a);
    for (std::size_t o = 0; o < n; ++o) D[o] = std::min(D[o], De[o]);
  }
  const double cap = 1.0 / std::sqrt(g.h());
  std::vector<double> d(n), delta(n);
  for (std::size_t o = 0; o < n; ++o) {
    d[o] = x.cls[o] == 0 ? 0.0 : D[o];
    delta[o] = x.cls[o] * std::min(d[o], cap);
  }
  if (distance) *distance = tagged(RealField(f.grid(), L.mask(), d), "d");
  return tagged(RealField(f.grid(), L.mask(), std::move(delta)), "delta");
}

Derivatives derivative_norms(const RealField& f) {
  const auto& g = *f.grid();
  const SymbolField cf = to_complex(f);
  std::vector<int> axes;
  for (int a = 0; a < g.axis_count(); ++a)
    if (f.depends_on(a)) axes.push_back(a);
  const int n = static_cast<int>(axes.size());
  Derivatives d;
  if (n == 0) {
    d.grad_norm = RealField(f.grid(), 0u, 0.0);
    d.hess_norm = RealField(f.grid(), 0u, 0.0);
    return d;
  }
  std::vector<RealField> g1(n), g2(n * n);
  std::vector<SymbolField> first(n);
  for (int i = 0; i < n; ++i) {
    first[i] = fd_derivative(cf, axes[i], 1);
    g1[i] = real_part(first[i]).expand(f.mask());
  }
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      const SymbolField s = i == j ? fd_derivative(cf, axes[i], 2) : fd_derivative(first[i], axes[j], 1);
      g2[i * n + j] = g2[j * n + i] = real_part(s).expand(f.mask());
    }
  std::vector<double> gn(f.size()), hn(f.size());
  Eigen::MatrixXd H(n, n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  for (std::size_t o = 0; o < f.size(); ++o) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += g1[i][o] * g1[i][o];
    gn[o] = std::sqrt(s);
    if (n == 1) {
      hn[o] = std::abs(g2[0][o]);
      continue;
    }
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) H(i, j) = g2[i * n + j][o];
    es.compute(H, Eigen::EigenvaluesOnly);
    hn[o] = es.eigenvalues().cwiseAbs().maxCoeff();
  }
  d.grad_norm = RealField(f.grid(), f.mask(), std::move(gn));
  d.hess_norm = RealField(f.grid(), f.mask(), std::move(hn));
  return d;
}

double gradient_rescale_factor(const RealField& f) {
  const double s = derivative_norms(f).grad_norm.sup_abs();
  const double lim = (1.0 - 1e-12) / std::sqrt(f.grid()->h());
  return s > lim ? lim / s : 1.0;
}

WeightField compute_H(const RealField& f, const WeightField& delta, const Derivatives* dv) {
  require_gsharp(f.grid(), "compute_H");
  require_gsharp(delta.grid(), "compute_H");
  Derivatives own;
  if (!dv) {
    own = derivative_norms(f);
    dv = &own;
  }
  const double h = f.grid()->h();
  const double lim = 1.0 / std::sqrt(h);
  if (dv->grad_norm.sup_abs() > lim * (1 + 1e-9))
    throw Error("compute_H: |f'| exceeds h^-1/2; rescale f first (gradient_rescale_factor)");
  const double h14 = std::pow(h, 0.25), h12 = std::sqrt(h);
  auto a = aligned({&delta.values, &dv->grad_norm, &dv->hess_norm});
  std::vector<double> out(a[0].size());
  for (std::size_t o = 0; o < out.size(); ++o) {
    const double fp = a[1][o], fpp = a[2][o];
    out[o] = (1.0 + std::abs(a[0][o])) + fp / (fpp + h14 * std::sqrt(fp) + h12);
  }
  return tagged(RealField(f.grid(), a[0].mask(), std::move(out)), "H^-1/2");
}

WeightField compute_M(const RealField& f, const WeightField& Hm12, const Derivatives* dv) {
  require_gsharp(f.grid(), "compute_M");
  Derivatives own;
  if (!dv) {
    own = derivative_norms(f);
    dv = &own;
  }
  const double h12 = std::sqrt(f.grid()->h());
  auto a = aligned({&f, &Hm12.values, &dv->grad_norm, &dv->hess_norm});
  std::vector<double> out(a[0].size());
  for (std::size_t o = 0; o < out.size(); ++o) {
    const double K = a[1][o];
    out[o] = std::abs(a[0][o]) + a[2][o] * K + a[3][o] * K * K + h12 * K * K * K;
  }
  return tagged(RealField(f.grid(), a[0].mask(), std::move(out)), "M");
}

WeightField compute_H1(const WeightField& Hm12) {
  const auto& g = *Hm12.grid();
  const RealField s = at_sigma2(Hm12.values);
  return tagged(reduce(s, x_axes_mask(g), [](double a, double b) { return std::max(a, b); }), "H1^-1/2");
}

namespace {

struct Columns {
  Layout L;
  RealField delta, H1;
  int nt = 0;
  std::size_t st = 0;
  int lo = 0, hi = 0;
};

Columns columns(const WeightField& delta, const WeightField& H1m12, double t_window) {
  require_gsharp(delta.grid(), "compute_m");
  const auto& g = *delta.grid();
  const int ta = g.t_axis();
  auto a = aligned({&delta.values, &H1m12.values}, 1u << ta);
  Columns c;
  c.L = a[0].layout();
  c.delta = a[0];
  c.H1 = a[1];
  c.nt = g.points(ta);
  c.st = c.L.stride(ta);
  c.lo = 0;
  c.hi = c.nt - 1;
  if (t_window > 0) {
    while (c.lo < c.nt && g.coord(ta, c.lo) < -t_window) ++c.lo;
    while (c.hi >= 0 && g.coord(ta, c.hi) > t_window) --c.hi;
    if (c.lo > c.hi) throw Error("compute_m: empty t window");
  }
  for (std::size_t o = 0; o < c.L.size(); ++o) {
    const double w = 1.0 + std::abs(c.delta[o]);
    if (!(w <= c.H1[o])) {
      std::ostringstream os;
      os << "compute_m: <delta> = " << w << " exceeds H1^-1/2 = " << c.H1[o] << " at offset " << o;
      throw Error(os.str());
    }
  }
  return c;
}

// H1^1/2 <delta>^2 written so that it never exceeds <delta> in floating point.
inline double energy(double delta, double H1m12) {
  const double w = 1.0 + std::abs(delta);
  return w * (w / H1m12);
}

}  // namespace

WeightField compute_m(const WeightField& delta, const WeightField& H1m12, double t_window) {
  const Columns c = columns(delta, H1m12, t_window);
  std::vector<double> m(c.L.size());
  std::vector<double> dl(c.nt), E(c.nt), mm(c.nt);
  for (std::size_t b : line_starts(c.L, delta.grid()->t_axis())) {
    for (int j = 0; j < c.nt; ++j) {
      dl[j] = c.delta[b + j * c.st];
      E[j] = energy(dl[j], c.H1[b + j * c.st]);
      mm[j] = 0.5 * E[j];
    }
    for (int t1 = c.lo; t1 <= c.hi; ++t1) {
      double best = kInf;
      for (int t = c.hi; t >= t1; --t) {
        best = std::min(best, (dl[t] - dl[t1]) + 0.5 * std::max(E[t1], E[t]));
        mm[t] = std::min(mm[t], best);
      }
    }
    for (int j = 0; j < c.nt; ++j) m[b + j * c.st] = mm[j];
  }
  return tagged(RealField(delta.grid(), c.L.mask(), std::move(m)), "m");
}

WeightField compute_m_bruteforce(const WeightField& delta, const WeightField& H1m12, double t_window) {
  const Columns c = columns(delta, H1m12, t_window);
  std::vector<double> m(c.L.size());
  for (std::size_t b : line_starts(c.L, delta.grid()->t_axis())) {
    auto D = [&](int j) { return c.delta[b + j * c.st]; };
    auto E = [&](int j) { return energy(D(j), c.H1[b + j * c.st]); };
    for (int t = 0; t < c.nt; ++t) {
      double best = 0.5 * E(t);
      if (t >= c.lo && t <= c.hi)
        for (int t1 = c.lo; t1 <= t; ++t1)
          for (int t2 = t; t2 <= c.hi; ++t2) best = std::min(best, (D(t2) - D(t1)) + 0.5 * std::max(E(t1), E(t2)));
      m[b + t * c.st] = best;
    }
  }
  return tagged(RealField(delta.grid(), c.L.mask(), std::move(m)), "m");
}

AlphaResult factorize_alpha(const RealField& f, const WeightField& delta, const WeightField& Hm12,
                            const WeightField& M, double kappa1, const Derivatives* dv) {
  require_gsharp(f.grid(), "factorize_alpha");
  Derivatives own;
  if (!dv) {
    own = derivative_norms(f);
    dv = &own;
  }
  auto a = aligned({&f, &delta.values, &Hm12.values, &M.values, &dv->grad_norm});
  const double thr = 1e-12 * std::max(1.0, delta.values.sup_abs());
  AlphaResult r;
  std::vector<double> al(a[0].size());
  r.mask.assign(al.size(), 0);
  r.min_ratio = kInf;
  for (std::size_t o = 0; o < al.size(); ++o) {
    const double dl = a[1][o], K = a[2][o];
    const bool in = 1.0 + std::abs(dl) <= kappa1 * K;
    r.mask[o] = in;
    al[o] = in && std::abs(dl) > thr ? a[0][o] / dl : a[4][o];
    if (in) {
      r.empty = false;
      r.min_ratio = std::min(r.min_ratio, al[o] * K / a[3][o]);
    }
  }
  if (r.empty) r.min_ratio = 0.0;
  r.alpha = tagged(RealField(f.grid(), a[0].mask(), std::move(al)), "alpha");
  return r;
}

WeightPipeline run_weights(const SymbolField& f_in, const WeightOptions& opt) {
  WeightPipeline w;
  w.grid = reframe(f_in.grid(), Frame::gsharp);
  w.h = w.grid->h();
  const SymbolField fg = f_in.on_grid(w.grid);
  w.f = snap_real(fg, &w.threshold);
  w.deriv = derivative_norms(w.f);
  w.rescale = 1.0;
  const double lim = (1.0 - 1e-12) / std::sqrt(w.h);
  const double s = w.deriv.grad_norm.sup_abs();
  if (s > lim) {
    w.rescale = lim / s;
    const double c = w.rescale;
    auto sc = [c](double v) { return c * v; };
    w.f = w.f.map(sc);
    w.deriv.grad_norm = w.deriv.grad_norm.map(sc);
    w.deriv.hess_norm = w.deriv.hess_norm.map(sc);
    w.log.push_back("f rescaled by " + fmt(c) + " so that |f'| <= h^-1/2");
  }
  const SymbolField cf = to_complex(w.f);
  const ConditionReport cr = check_subr_psi(cf);
  if (cr.verdict != Verdict::pass)
    w.log.push_back(std::string("warning: sign structure is ") + verdict_name(cr.verdict) +
                    "; delta uses the X+ \\ X-, X- \\ X+ classes");
  w.xsets = compute_x_sets(cf);
  w.delta = signed_delta(cf, &w.d);
  w.Hm12 = compute_H(w.f, w.delta, &w.deriv);
  w.M = compute_M(w.f, w.Hm12, &w.deriv);
  w.H1m12 = compute_H1(w.Hm12);
  w.m = compute_m(w.delta, w.H1m12, opt.t_window);
  w.alpha = factorize_alpha(w.f, w.delta, w.Hm12, w.M, opt.kappa1, &w.deriv);
  if (w.alpha.empty) w.log.push_back("alpha: validity mask is empty for kappa1 = " + fmt(opt.kappa1));
  return w;
}

namespace {

// Largest |a(p) - a(q)| / |p - q| over lattice neighbours along each axis.
double lipschitz(const RealField& a) {
  const auto& g = *a.grid();
  const Layout& L = a.layout();
  double worst = 0.0;
  std::vector<int> idx;
  for (std::size_t o = 0; o < a.size(); ++o) {
    L.unravel(o, idx);
    for (int k = 0; k < g.axis_count(); ++k) {
      if (!a.depends_on(k) || idx[k] + 1 >= g.points(k)) continue;
      worst = std::max(worst, std::abs(a[o + L.stride(k)] - a[o]) / g.spacing(k));
    }
  }
  return worst;
}

BoundAudit exact(std::string name, double slack, std::string detail) {
  return BoundAudit{std::move(name), true, slack >= 0.0, slack, 0.0, std::move(detail)};
}

BoundAudit measured(std::string name, double value, double limit, std::string detail) {
  return BoundAudit{std::move(name), false, value <= limit, value, limit, std::move(detail)};
}

}  // namespace

std::vector<BoundAudit> audit_weights(const WeightPipeline& w) {
  std::vector<BoundAudit> out;
  const auto& g = *w.grid;
  const double h = w.h, h12 = std::sqrt(h), cap = 1.0 / h12;
  const int ta = g.t_axis();

  // delta
  double s = kInf;
  for (std::size_t o = 0; o < w.delta.size(); ++o) s = std::min(s, cap - std::abs(w.delta[o]));
  out.push_back(exact("delta_abs_le_h^-1/2", s, "min h^-1/2 - |delta|"));
  {
    auto a = aligned({&w.delta.values, &w.f});
    s = kInf;
    for (std::size_t o = 0; o < a[0].size(); ++o) s = std::min(s, a[0][o] * a[1][o]);
    out.push_back(exact("delta_times_f_nonnegative", s, "min delta*f"));
  }
  {
    const RealField d = w.delta.values.expand(w.delta.values.mask() | (1u << ta));
    s = kInf;
    const std::size_t st = d.layout().stride(ta);
    for (std::size_t b : line_starts(d.layout(), ta))
      for (int j = 0; j + 1 < g.points(ta); ++j) s = std::min(s, d[b + (j + 1) * st] - d[b + j * st]);
    out.push_back(exact("delta_t_nondecreasing", s, "min delta(t_{j+1}) - delta(t_j)"));
  }
  {
    int nmin = 1 << 30;
    for (int a = 0; a < g.axis_count(); ++a)
      if (w.delta.values.depends_on(a)) nmin = std::min(nmin, g.points(a));
    const double lim = nmin == (1 << 30) ? 1.0 : 1.0 + 2.0 / nmin;
    out.push_back(measured("delta_lipschitz", lipschitz(w.delta.values), lim,
                           "max |delta(a)-delta(b)|/|a-b| over neighbours, limit 1+2/N"));
  }

  // H
  double lo = kInf, hi = kInf;
  for (std::size_t o = 0; o < w.Hm12.size(); ++o) {
    lo = std::min(lo, w.Hm12[o] - 1.0);
    hi = std::min(hi, 3.0 * cap - w.Hm12[o]);
  }
  out.push_back(exact("H^-1/2_ge_1", lo, "min H^-1/2 - 1"));
  out.push_back(exact("H^-1/2_le_3h^-1/2", hi, "min 3h^-1/2 - H^-1/2"));
  out.push_back(measured("H^-1/2_lipschitz", lipschitz(w.Hm12.values), 3.0, "neighbour Lipschitz constant"));
  {
    auto a = aligned({&w.Hm12.values, &w.deriv.grad_norm, &w.deriv.hess_norm});
    s = kInf;
    for (std::size_t o = 0; o < a[0].size(); ++o) {
      const double K = a[0][o];
      s = std::min(s, 2 * a[2][o] * K + 3 * h12 * K - a[1][o]);
    }
    out.push_back(exact("dfest0", s, "min 2|f''|H^-1/2 + 3h^1/2 H^-1/2 - |f'|"));
  }

  // M
  {
    auto a = aligned({&w.M.values, &w.Hm12.values, &w.deriv.hess_norm});
    double mlo = kInf, mmax = 0.0, rlo = kInf, rhi = 0.0;
    for (std::size_t o = 0; o < a[0].size(); ++o) {
      const double M = a[0][o], K = a[1][o];
      mlo = std::min(mlo, M - h12);
      mmax = std::max(mmax, M);
      const double r = M / (a[2][o] * K * K + h12 * K * K * K);
      rlo = std::min(rlo, r);
      rhi = std::max(rhi, r);
    }
    out.push_back(exact("M_ge_h^1/2", mlo, "min M - h^1/2"));
    out.push_back(measured("M_C3", mmax * h, 10.0, "C3 = max M h"));
    out.push_back(measured("Mcomp", std::max(rhi, 1.0 / rlo), 10.0,
                           "M / (|f''|H^-1 + h^1/2 H^-3/2) in [" + fmt(rlo) + ", " + fmt(rhi) + "]"));
  }

  // m
  {
    auto a = aligned({&w.m.values, &w.delta.values}, 1u << ta);
    double l = kInf, u = kInf;
    for (std::size_t o = 0; o < a[0].size(); ++o) {
      const double wd = 1.0 + std::abs(a[1][o]);
      l = std::min(l, a[0][o] - h12 * wd * wd / 6.0);
      u = std::min(u, wd / 2.0 - a[0][o]);
    }
    out.push_back(exact("m_ge_h^1/2<delta>^2/6", l, "min m - h^1/2<delta>^2/6"));
    out.push_back(exact("m_le_<delta>/2", u, "min <delta>/2 - m"));

    const std::size_t st = a[0].layout().stride(ta);
    const int nt = g.points(ta);
    double q = kInf;
    for (std::size_t b : line_starts(a[0].layout(), ta)) {
      for (int t1 = 0; t1 < nt; ++t1) {
        double run = 0.0;
        for (int t2 = t1; t2 < nt; ++t2) {
          run = std::max(run, a[0][b + t2 * st]);
          const double rhs = a[1][b + t2 * st] - a[1][b + t1 * st] + a[0][b + t1 * st] + a[0][b + t2 * st];
          q = std::min(q, rhs - run);
        }
      }
    }
    out.push_back(exact("m_quasi_convex", q, "min over t1<=t2 of delta(t2)-delta(t1)+m(t1)+m(t2) - max m"));
    out.push_back(measured("m_lipschitz", lipschitz(w.m.values), kInf, "neighbour Lipschitz constant (reported)"));
  }
  {
    auto a = aligned({&w.M.values, &w.Hm12.values, &w.m.values, &w.delta.values});
    double c0 = 0.0;
    for (std::size_t o = 0; o < a[0].size(); ++o) {
      const double K = a[1][o], wd = 1.0 + std::abs(a[3][o]);
      c0 = std::max(c0, a[0][o] / (K * K * K) * wd * wd / a[2][o]);
    }
    out.push_back(measured("Mest0_C0", c0, 20.0, "C0 = max M H^3/2 <delta>^2 / m"));
  }
  out.push_back(measured("alpha_min_ratio", w.alpha.empty ? 0.0 : w.alpha.min_ratio, kInf,
                         w.alpha.empty ? "validity mask empty" : "min alpha / (M H^1/2) on the mask (reported)"));
  return out;
}

}  // namespace mlab

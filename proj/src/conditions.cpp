#include "mlab/conditions.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mlab {

namespace {

std::string describe_point(const PhaseGrid& g, const std::vector<int>& idx) {
  std::ostringstream os;
  os << "(";
  bool first = true;
  for (int a = 0; a < g.axis_count(); ++a) {
    if (idx[a] < 0) continue;
    os << (first ? "" : ", ") << g.name(a) << "[" << idx[a] << "]=" << g.coord(a, idx[a]);
    first = false;
  }
  os << ")";
  return os.str();
}

std::vector<int> masked_index(const Layout& L, std::size_t o) {
  std::vector<int> idx;
  L.unravel(o, idx);
  for (int a = 0; a < static_cast<int>(idx.size()); ++a)
    if (!L.depends_on(a)) idx[a] = -1;
  return idx;
}

}  // namespace

SymbolField subprincipal_symbol(const SymbolField& p, const SymbolField& p_lower) {
  if (!same_grid(p.grid(), p_lower.grid())) throw Error("subprincipal_symbol: fields on different grids");
  const auto& g = *p.grid();
  SymbolField out = p_lower;
  for (int j = 0; j < g.base_count(); ++j) {
    const int dj = g.dual_of(j);
    if (!p.depends_on(j) || !p.depends_on(dj)) continue;
    out = out + cd(0.0, 0.5) * fd_derivative(fd_derivative(p, dj, 1), j, 1);
  }
  return out;
}

SymbolField refined_symbol(const SymbolField& p, const SymbolField& ps) {
  if (!same_grid(p.grid(), ps.grid())) throw Error("refined_symbol: fields on different grids");
  return p + ps;
}

std::uint32_t x_axes_mask(const PhaseGrid& g) {
  std::uint32_t m = 0;
  for (int a : g.base_axes(Role::x)) m |= 1u << a;
  return m;
}

std::uint32_t xi_axes_mask(const PhaseGrid& g) {
  std::uint32_t m = 0;
  for (int a : g.base_axes(Role::x)) m |= 1u << g.dual_of(a);
  return m;
}

HessianReport hessian_at_sigma2(const SymbolField& p, double tol) {
  const auto& g = *p.grid();
  const auto xs = g.base_axes(Role::x);
  if (xs.empty()) throw Error("hessian_at_sigma2: grid has no x axes");
  const int n = static_cast<int>(xs.size());

  // vanishing to second order on xi = 0
  const double scale = tol * std::max(1.0, p.sup_abs());
  auto check_small = [&](const SymbolField& v, const char* what) {
    const SymbolField s = at_sigma2(v);
    for (std::size_t o = 0; o < s.size(); ++o) {
      if (std::abs(s[o]) > scale) {
        std::ostringstream os;
        os << "hessian_at_sigma2: " << what << " does not vanish on xi = 0 at "
           << describe_point(g, masked_index(s.layout(), o)) << " (|value| = " << std::abs(s[o]) << ")";
        throw Error(os.str());
      }
    }
  };
  check_small(p, "p");
  for (int a = 0; a < g.axis_count(); ++a)
    if (p.depends_on(a)) check_small(partial(p, a, 1), ("d/d" + g.name(a) + " p").c_str());

  HessianReport r;
  r.dim = n;
  r.entries.resize(n * n);
  for (int j = 0; j < n; ++j) {
    for (int k = j; k < n; ++k) {
      const int aj = g.dual_of(xs[j]), ak = g.dual_of(xs[k]);
      SymbolField d = j == k ? partial(p, aj, 2) : partial(partial(p, aj, 1), ak, 1);
      r.entries[j * n + k] = real_part(at_sigma2(d));
      r.entries[k * n + j] = r.entries[j * n + k];
    }
  }
  std::uint32_t m = 0;
  for (const auto& e : r.entries) m |= e.mask();
  std::vector<RealField> ex;
  for (const auto& e : r.entries) ex.push_back(e.expand(m));
  const Layout L(p.grid(), m);

  r.min_abs_eigenvalue = INFINITY;
  int first_pos = -1, first_neg = -1;
  Eigen::MatrixXd H(n, n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  for (std::size_t o = 0; o < L.size(); ++o) {
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) H(j, k) = ex[j * n + k][o];
    es.compute(H, Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    int pos = 0, neg = 0;
    double mn = INFINITY;
    for (int j = 0; j < n; ++j) {
      mn = std::min(mn, std::abs(ev[j]));
      if (ev[j] > 1e-6) ++pos;
      if (ev[j] < -1e-6) ++neg;
    }
    if (first_pos < 0) {
      first_pos = pos;
      first_neg = neg;
    } else if (pos != first_pos || neg != first_neg) {
      r.constant_signature = false;
    }
    if (mn < r.min_abs_eigenvalue) {
      r.min_abs_eigenvalue = mn;
      r.positive = pos;
      r.negative = neg;
      r.worst_index = masked_index(L, o);
    }
  }
  r.rank = r.positive + r.negative;
  r.nondegenerate = r.min_abs_eigenvalue > 1e-6;
  return r;
}

std::vector<double> LimitField::x_component(const std::vector<int>& idx, const std::vector<double>& theta) const {
  if (static_cast<int>(theta.size()) != dim) throw Error("limit field: theta has the wrong length");
  std::vector<int> full = idx;
  for (auto& v : full) v = std::max(v, 0);
  std::vector<double> out(dim, 0.0);
  for (int k = 0; k < dim; ++k) {
    double s = re_c[k].at(full);
    for (int j = 0; j < dim; ++j) s += 2.0 * a[j * dim + k].at(full) * theta[j];
    out[k] = s;
  }
  return out;
}

LimitField limit_hamilton_field(const SymbolField& p, const SymbolField& ps) {
  if (!same_grid(p.grid(), ps.grid())) throw Error("limit_hamilton_field: fields on different grids");
  const HessianReport hr = hessian_at_sigma2(p);
  if (!hr.nondegenerate) throw Error("limit_hamilton_field: Hessian at xi = 0 is degenerate");
  const auto& g = *p.grid();
  const auto xs = g.base_axes(Role::x);
  LimitField lf;
  lf.dim = hr.dim;
  for (const auto& e : hr.entries) lf.a.push_back(e.map([](double v) { return 0.5 * v; }));
  for (int k = 0; k < lf.dim; ++k) {
    const int ak = g.dual_of(xs[k]);
    lf.re_c.push_back(real_part(at_sigma2(partial(ps, ak, 1))));
  }
  return lf;
}

bool LeafSignTable::any_mixed() const {
  return std::any_of(mixed.begin(), mixed.end(), [](char c) { return c != 0; });
}

LeafSignTable leaf_sign(const SymbolField& f) {
  const double sup = f.sup_abs();
  if (!is_real(f, std::max(1e-12 * sup, 1e-300))) throw Error("leaf_sign: f must be real-valued");
  const RealField r = real_part(at_sigma2(f));
  const auto& g = *f.grid();

  LeafSignTable t;
  t.threshold = std::max(1e-12 * r.sup_abs(), 1e-300);
  t.layout = Layout(f.grid(), r.mask() & ~x_axes_mask(g));
  const std::size_t n = t.layout.size();
  std::vector<double> mx(n, -INFINITY), mn(n, INFINITY), best(n, -1.0);
  std::vector<std::size_t> arg(n, 0);
  std::vector<int> idx;
  for (std::size_t o = 0; o < r.size(); ++o) {
    r.layout().unravel(o, idx);
    const std::size_t k = t.layout.offset(idx);
    const double v = r[o];
    mx[k] = std::max(mx[k], v);
    mn[k] = std::min(mn[k], v);
    if (std::abs(v) > best[k]) {
      best[k] = std::abs(v);
      arg[k] = o;
    }
  }
  t.sign.assign(n, 0);
  t.mixed.assign(n, 0);
  t.witness.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const bool pos = mx[k] > t.threshold, neg = mn[k] < -t.threshold;
    t.mixed[k] = pos && neg;
    if (pos || neg) t.sign[k] = r[arg[k]] > 0 ? 1 : -1;
    t.witness[k] = masked_index(r.layout(), arg[k]);
  }
  return t;
}

const char* orientation_name(Orientation o) { return o == Orientation::psi ? "Psi" : "Psi-bar"; }

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::fail_leaf_sign: return "fail-leaf-sign";
    case Verdict::fail_monotonicity: return "fail-monotonicity";
  }
  return "?";
}

ConditionReport check_subr_psi(const SymbolField& f, Orientation o) {
  const auto& g = *f.grid();
  if (g.t_axis() < 0) throw Error("check_subr_psi: grid has no t axis");
  const LeafSignTable tab = leaf_sign(f);
  ConditionReport rep;
  rep.orientation = o;
  rep.threshold = tab.threshold;

  if (tab.any_mixed()) {
    rep.verdict = Verdict::fail_leaf_sign;
    for (std::size_t k = 0; k < tab.mixed.size(); ++k) {
      if (!tab.mixed[k]) continue;
      ++rep.violation_count;
      if (rep.witnesses.size() < kMaxWitnesses) rep.witnesses.push_back({"mixed-leaf", tab.witness[k], {}});
    }
    return rep;
  }

  const int ta = g.t_axis();
  const Layout& L = tab.layout;
  if (!L.depends_on(ta)) return rep;
  const int nt = g.points(ta);
  const std::size_t st = L.stride(ta);
  // forbidden: previous nonzero sign `from`, new sign -from
  const int from = o == Orientation::psi ? 1 : -1;
  std::vector<int> idx;
  for (std::size_t base = 0; base < L.size(); ++base) {
    L.unravel(base, idx);
    if (idx[ta] != 0) continue;
    int last = 0;
    std::size_t last_off = base;
    for (int j = 0; j < nt; ++j) {
      const std::size_t off = base + j * st;
      const int s = tab.sign[off];
      if (s == 0) continue;
      if (last == from && s == -from) {
        ++rep.violation_count;
        if (rep.witnesses.size() < kMaxWitnesses)
          rep.witnesses.push_back({"transition", masked_index(L, off), masked_index(L, last_off)});
      }
      last = s;
      last_off = off;
    }
  }
  if (rep.violation_count > 0) rep.verdict = Verdict::fail_monotonicity;
  return rep;
}

}  // namespace mlab

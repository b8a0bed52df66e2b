#include "mlab/models.hpp"

#include <cmath>

#include "mlab/linalg.hpp"
#include "mlab/symlang.hpp"

namespace mlab {

namespace {

AxisConfig ax(Role r, int n, double L, bool periodic = true) {
  AxisConfig a;
  a.role = r;
  a.points = n;
  a.extent = L;
  a.periodic = periodic;
  return a;
}

// |t| <= 0.75 at h = 0.1 keeps delta under the h^-1/2 cap
AxisConfig tax() { return ax(Role::t, 16, 1.5, false); }

ModelSpec normal(std::string name, std::string desc, std::string A, std::string f, std::vector<AxisConfig> dims,
                 Verdict v, std::optional<bool> est) {
  ModelSpec m;
  m.name = std::move(name);
  m.description = std::move(desc);
  m.form = ModelForm::normal;
  m.A = std::move(A);
  m.f = std::move(f);
  m.dims = std::move(dims);
  m.expected_condition = v;
  m.expected_estimate = est;
  return m;
}

ModelSpec principal(std::string name, std::string desc, std::string p2, std::string p1, std::vector<AxisConfig> dims,
                    Verdict v) {
  ModelSpec m;
  m.name = std::move(name);
  m.description = std::move(desc);
  m.form = ModelForm::principal;
  m.p2 = std::move(p2);
  m.p1 = std::move(p1);
  m.dims = std::move(dims);
  m.expected_condition = v;
  return m;
}

std::vector<ModelSpec> build_gallery() {
  const AxisConfig x = ax(Role::x, 8, 1.5), y = ax(Role::y, 8, 1.5);
  const AxisConfig xc = ax(Role::x, 16, 4 * M_PI);
  std::vector<ModelSpec> g;
  g.push_back(principal("p_plus", "D_t^2-free model (1 + t^2) D_x^2 + (1 + i t) D_t", "(1 + t^2)*xi1^2",
                        "(1 + i*t)*tau", {tax(), x}, Verdict::fail_monotonicity));
  g.push_back(principal("p_minus", "(1 + t^2) D_x^2 + (1 - i t) D_t", "(1 + t^2)*xi1^2", "(1 - i*t)*tau",
                        {tax(), x}, Verdict::fail_monotonicity));
  g.push_back(normal("mizohata_unsolvable", "adjoint D_t - i t |D_y|^2; the operator D_t + i t |D_y|^2 is unsolvable",
                     "0", "-t*eta1^2", {tax(), y}, Verdict::fail_monotonicity, false));
  g.push_back(normal("q_minus_solvable", "Q- = D_t + i t Delta_y, adjoint D_t + i t |D_y|^2", "0", "t*eta1^2",
                     {tax(), y}, Verdict::pass, true));
  g.push_back(principal("checkerboard", "xi1 xi2 with a checkerboard sign of the subprincipal part", "xi1*xi2",
                        "tau + i*(max(sin(x1),0)*max(sin(x2),0) - max(-sin(x1),0)*max(-sin(x2),0))",
                        {tax(), xc, xc}, Verdict::fail_leaf_sign));
  g.push_back(normal("hyperbolic_quadratic", "A = xi1^2 - xi2^2, f = t", "xi1^2 - xi2^2", "t", {tax(), x, x},
                     Verdict::pass, true));
  g.push_back(normal("linear_sign_change", "A = xi1^2, f = t |eta1|", "xi1^2", "t*abs(eta1)", {tax(), x, y},
                     Verdict::pass, true));
  g.push_back(normal("free", "A = xi1^2, f = 0", "xi1^2", "0", {tax(), x}, Verdict::pass, true));
  return g;
}

GridPtr standard(const GridPtr& g) { return g->frame() == Frame::standard ? g : reframe(g, Frame::standard); }

std::vector<int> base_shape(const PhaseGrid& g) {
  std::vector<int> s;
  for (int b = 0; b < g.base_count(); ++b) s.push_back(g.points(b));
  return s;
}

// |eta|^2 over the non-t axes, per base lattice point (row-major, DFT order)
std::vector<double> eta2(const PhaseGrid& g) {
  const int d = g.base_count(), ta = g.t_axis();
  std::vector<double> out(g.base_size(), 0.0);
  std::vector<int> idx(d, 0);
  for (std::size_t o = 0; o < out.size(); ++o) {
    std::size_t r = o;
    for (int b = d - 1; b >= 0; --b) {
      idx[b] = static_cast<int>(r % g.points(b));
      r /= g.points(b);
    }
    double s = 0.0;
    for (int b = 0; b < d; ++b) {
      if (b == ta) continue;
      const int n = g.points(b), k = idx[b] < n / 2 ? idx[b] : idx[b] - n;
      const double e = k * 2.0 * M_PI / (g.std_spacing(b) * n);
      s += e * e;
    }
    out[o] = s;
  }
  return out;
}

void check_q_grid(const PhaseGrid& g) {
  const int ta = g.t_axis();
  if (ta < 0) throw Error("Q-: grid has no t axis");
  if (g.periodic(ta)) throw Error("Q-: t must be non-periodic");
  if (g.points(ta) < 5) throw Error("Q-: t needs at least 5 points");
  for (int b = 0; b < g.base_count(); ++b)
    if (b != ta && !g.periodic(b)) throw Error("Q-: non-t axes must be periodic");
}

void fft_space(std::vector<cd>& v, const PhaseGrid& g, int sign) {
  const auto shape = base_shape(g);
  for (int b = 0; b < g.base_count(); ++b)
    if (b != g.t_axis()) fft_axis(v, shape, b, sign);
  if (sign > 0) {
    double n = 1.0;
    for (int b = 0; b < g.base_count(); ++b)
      if (b != g.t_axis()) n *= g.points(b);
    for (auto& z : v) z /= n;
  }
}

}  // namespace

std::vector<ModelSpec> gallery() { return build_gallery(); }

const ModelSpec& find_model(const std::string& name) {
  static const std::vector<ModelSpec> all = build_gallery();
  for (const auto& m : all)
    if (m.name == name) return m;
  throw Error("unknown model '" + name + "'");
}

ExpectedVerdicts expected_verdicts(const ModelSpec& m) { return {m.expected_condition, m.expected_estimate}; }

GridPtr model_grid(const ModelSpec& m) {
  GridConfig c;
  c.dims = m.dims;
  c.h = m.h;
  return build_grid(c);
}

SymbolField model_f(const ModelSpec& m, const GridPtr& grid) {
  if (m.form == ModelForm::normal) {
    const auto f = eval_on_grid(parse_expr(m.f), grid);
    if (!is_real(f, 1e-12 * std::max(1.0, f.sup_abs()))) throw Error("model " + m.name + ": f must be real");
    return f;
  }
  const auto p2 = eval_on_grid(parse_expr(m.p2), grid);
  const auto p1 = eval_on_grid(parse_expr(m.p1), grid);
  const auto pr = refined_symbol(p2, subprincipal_symbol(p2, p1));
  return pr.map([](cd v) { return cd(-v.imag(), 0.0); });
}

ConditionReport check_model(const ModelSpec& m) { return check_subr_psi(model_f(m, model_grid(m))); }

StateVector solve_q_minus(const StateVector& f) {
  const GridPtr gp = standard(f.grid);
  const auto& g = *gp;
  check_q_grid(g);
  const int ta = g.t_axis(), nt = g.points(ta);
  const int j0 = nt / 2;
  if (std::abs(g.coord(ta, j0)) > 1e-12 * g.extent(ta)) throw Error("Q-: t = 0 is not a lattice point");
  std::vector<cd> v(f.values.data(), f.values.data() + f.values.size());
  fft_space(v, g, -1);
  const auto e2 = eta2(g);
  const std::size_t st = [&] {
    std::size_t s = 1;
    for (int b = ta + 1; b < g.base_count(); ++b) s *= g.points(b);
    return s;
  }();
  std::vector<cd> u(v.size(), cd(0.0));
  const double dt = g.std_spacing(ta);
  auto t = [&](int j) { return g.coord(ta, j); };
  for (std::size_t o = 0; o < v.size(); ++o) {
    // visit each t-line once from its j = 0 entry
    if ((o / st) % nt != 0) continue;
    const double k2 = e2[o];
    auto at = [&](int j) { return o + j * st; };
    cd I = 0.0;
    for (int j = j0 + 1; j < nt; ++j) {
      const double K = std::exp(-(t(j) * t(j) - t(j - 1) * t(j - 1)) * k2 / 2);
      I = K * I + 0.5 * dt * (K * v[at(j - 1)] + v[at(j)]);
      u[at(j)] = cd(0.0, 1.0) * I;
    }
    I = 0.0;
    for (int j = j0 - 1; j >= 0; --j) {
      const double K = std::exp(-(t(j) * t(j) - t(j + 1) * t(j + 1)) * k2 / 2);
      I = K * I - 0.5 * dt * (K * v[at(j + 1)] + v[at(j)]);
      u[at(j)] = cd(0.0, 1.0) * I;
    }
  }
  fft_space(u, g, +1);
  return StateVector{gp, Eigen::Map<Eigen::VectorXcd>(u.data(), u.size())};
}

StateVector apply_q_minus(const StateVector& u) {
  const GridPtr gp = standard(u.grid);
  const auto& g = *gp;
  check_q_grid(g);
  const int ta = g.t_axis(), nt = g.points(ta);
  std::size_t st = 1;
  for (int b = ta + 1; b < g.base_count(); ++b) st *= g.points(b);
  const double dt = g.std_spacing(ta);
  const Eigen::VectorXcd& w = u.values;
  Eigen::VectorXcd out(w.size());
  for (Eigen::Index o = 0; o < w.size(); ++o) {
    const int j = static_cast<int>((o / st) % nt);
    auto f = [&](int k) { return w[o + (k - j) * static_cast<Eigen::Index>(st)]; };
    cd d;
    if (j == 0) d = -25.0 * f(0) + 48.0 * f(1) - 36.0 * f(2) + 16.0 * f(3) - 3.0 * f(4);
    else if (j == 1) d = -3.0 * f(0) - 10.0 * f(1) + 18.0 * f(2) - 6.0 * f(3) + f(4);
    else if (j == nt - 1) d = 25.0 * f(j) - 48.0 * f(j - 1) + 36.0 * f(j - 2) - 16.0 * f(j - 3) + 3.0 * f(j - 4);
    else if (j == nt - 2) d = 3.0 * f(j + 1) + 10.0 * f(j) - 18.0 * f(j - 1) + 6.0 * f(j - 2) - f(j - 3);
    else d = f(j - 2) - 8.0 * f(j - 1) + 8.0 * f(j + 1) - f(j + 2);
    out[o] = cd(0.0, -1.0) * d / (12.0 * dt);
  }
  // + i t Delta = - i t |eta|^2 on the Fourier side
  std::vector<cd> v(w.data(), w.data() + w.size());
  fft_space(v, g, -1);
  const auto e2 = eta2(g);
  for (std::size_t o = 0; o < v.size(); ++o) {
    const int j = static_cast<int>((o / st) % nt);
    v[o] *= cd(0.0, -g.coord(ta, j) * e2[o]);
  }
  fft_space(v, g, +1);
  for (std::size_t o = 0; o < v.size(); ++o) out[o] += v[o];
  return StateVector{gp, out};
}

double q_minus_residual(const StateVector& u, const StateVector& f) {
  const StateVector r = apply_q_minus(u);
  const double nf = f.values.norm();
  if (nf == 0.0) return r.values.norm();
  return (r.values - f.values).norm() / nf;
}

}  // namespace mlab

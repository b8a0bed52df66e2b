#include "mlab/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "mlab/linalg.hpp"
#include "mlab/symlang.hpp"

namespace mlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

GridPtr standard(const GridPtr& g) { return g->frame() == Frame::standard ? g : reframe(g, Frame::standard); }

std::vector<int> base_shape(const PhaseGrid& g) {
  std::vector<int> s;
  for (int b = 0; b < g.base_count(); ++b) s.push_back(g.points(b));
  return s;
}

// DFT index -> dual coordinate (standard units)
double freq(const PhaseGrid& g, int axis, int k) {
  const int n = g.points(axis);
  const int kk = k < n / 2 ? k : k - n;
  return kk * 2.0 * M_PI / (g.std_spacing(axis) * n);
}

double bump(double s, double T) {
  const double r = s / T;
  if (std::abs(r) >= 1.0) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - r * r));
}

double smoothstep(double s) {
  s = std::clamp(s, 0.0, 1.0);
  return s * s * (3.0 - 2.0 * s);
}

double wrap(const PhaseGrid& g, int axis, double d) {
  if (!g.periodic(axis)) return d;
  const double P = g.std_spacing(axis) * g.points(axis);
  return d - P * std::round(d / P);
}

double qform(const Eigen::MatrixXcd& op, const StateVector& u) { return inner(make_state(u.grid, op * u.values), u).real(); }

}  // namespace

double StateVector::measure() const {
  double m = 1.0;
  for (int b = 0; b < grid->base_count(); ++b) m *= grid->std_spacing(b);
  return m;
}

double StateVector::norm() const { return std::sqrt(values.squaredNorm() * measure()); }

StateVector make_state(const GridPtr& grid, Eigen::VectorXcd values) {
  if (static_cast<std::size_t>(values.size()) != grid->base_size())
    throw Error("state: value count does not match the base lattice");
  return StateVector{grid, std::move(values)};
}

cd inner(const StateVector& u, const StateVector& v) {
  if (u.values.size() != v.values.size()) throw Error("inner: dimension mismatch");
  // sum u conj(v)
  return v.values.dot(u.values) * u.measure();
}

cd bilinear(const DiscreteOperator& op, const StateVector& u, const StateVector& v) {
  if (op.dim() != u.values.size() || op.dim() != v.values.size()) throw Error("bilinear: dimension mismatch");
  return inner(make_state(u.grid, op.matrix * u.values), v);
}

DiscreteOperator assemble_normal_form(const SymbolField& A, const SymbolField& f, const SymbolField* f0) {
  const GridPtr g = standard(A.grid());
  if (!A.grid()->same_lattice(*f.grid())) throw Error("normal form: A and f live on different lattices");
  const double tolA = 1e-12 * std::max(1.0, A.sup_abs()), tolf = 1e-12 * std::max(1.0, f.sup_abs());
  if (!is_real(A, tolA)) throw Error("normal form: A must be real");
  if (!is_real(f, tolf)) throw Error("normal form: f must be real");
  const int ta = g->t_axis();
  if (ta < 0) throw Error("normal form: grid has no t axis");
  const int dt = g->dual_of(ta);
  SymbolField tau = SymbolField::sample(g, 1u << dt, [&](const std::vector<double>& z) { return cd(z[dt], 0.0); });
  SymbolField F = f.on_grid(g);
  if (f0) {
    if (!is_real(*f0, 1e-12 * std::max(1.0, f0->sup_abs()))) throw Error("normal form: f0 must be real");
    F = F + f0->on_grid(g);
  }
  DiscreteOperator P = weyl_quantize(tau, "D_t");
  P.matrix += weyl_quantize(A.on_grid(g)).matrix;
  P.matrix += cd(0.0, 1.0) * weyl_quantize(F).matrix;
  P.provenance = "D_t + A^w + i f^w";
  return P;
}

DiscreteOperator assemble_normal_form(const std::string& A, const std::string& f, const std::string& f0,
                                      const GridPtr& grid) {
  const GridPtr g = standard(grid);
  const SymbolField a = eval_on_grid(parse_expr(A), g), ff = eval_on_grid(parse_expr(f), g);
  if (f0.empty()) return assemble_normal_form(a, ff);
  const SymbolField z = eval_on_grid(parse_expr(f0), g);
  return assemble_normal_form(a, ff, &z);
}

DominationReport wick_domination_check(const SymbolField& c, const RealField& m, const std::vector<StateVector>& tests) {
  const GridPtr g = standard(m.grid());
  const auto M = wick_quantize(to_complex(m.on_grid(g)), nullptr, "m", non_time_axes(*g));
  const auto C = weyl_quantize(c.on_grid(g), "c");
  DominationReport r;
  for (std::size_t k = 0; k < tests.size(); ++k) {
    const double den = qform(M.matrix, tests[k]);
    const double num = std::abs(bilinear(C, tests[k], tests[k]));
    if (!(den > 0)) r.positivity_ok = false;
    const double q = den > 0 ? num / den : kInf;
    r.rows.push_back(q);
    if (q > r.ratio || r.worst < 0) {
      r.ratio = std::max(r.ratio, q);
      r.worst = static_cast<int>(k);
    }
  }
  return r;
}

SymbolField mu_symbol(const GridPtr& grid) {
  const GridPtr g = standard(grid);
  std::uint32_t mask = 0;
  std::vector<int> duals;
  for (int a : g->base_axes(Role::x)) {
    duals.push_back(g->dual_of(a));
    mask |= 1u << g->dual_of(a);
  }
  const double sh = std::sqrt(g->h());
  return SymbolField::sample(g, mask, [&](const std::vector<double>& z) {
    double s = 1.0;
    for (int d : duals) s += z[d] * z[d];
    return cd(sh * s, 0.0);
  });
}

double dx_norm2(const StateVector& u) {
  const auto& g = *u.grid;
  const auto shape = base_shape(g);
  double total = 0.0;
  std::vector<int> idx(g.axis_count(), 0);
  const Layout L(u.grid, (1u << g.base_count()) - 1);
  for (int a : g.base_axes(Role::x)) {
    std::vector<cd> v(u.values.data(), u.values.data() + u.values.size());
    fft_axis(v, shape, a, -1);
    double s = 0.0;
    for (std::size_t o = 0; o < v.size(); ++o) {
      L.unravel(o, idx);
      const double k = freq(g, a, idx[a]);
      s += k * k * std::norm(v[o]);
    }
    total += s / g.points(a);
  }
  return total * u.measure();
}

StateVector apply_cutoff(const StateVector& u, double T, const std::vector<double>& x0) {
  const auto& g = *u.grid;
  const Layout L(u.grid, (1u << g.base_count()) - 1);
  const auto xs = g.base_axes(Role::x);
  std::vector<int> idx(g.axis_count(), 0);
  Eigen::VectorXcd v = u.values;
  for (std::size_t o = 0; o < L.size(); ++o) {
    L.unravel(o, idx);
    double w = bump(g.coord(g.t_axis(), idx[g.t_axis()]), T);
    for (std::size_t j = 0; j < xs.size(); ++j) {
      const double c = j < x0.size() ? x0[j] : 0.0;
      w *= bump(wrap(g, xs[j], g.coord(xs[j], idx[xs[j]]) - c), T);
    }
    v[o] *= w;
  }
  return StateVector{u.grid, std::move(v)};
}

SymbolField psi_cutoff_symbol(const GridPtr& grid) {
  const GridPtr g = standard(grid);
  const auto xs = g->base_axes(Role::x);
  if (xs.empty()) return SymbolField::constant(g, 0.0);
  std::uint32_t mask = 0;
  double xmax = kInf;
  for (int a : xs) {
    mask |= 1u << g->dual_of(a);
    xmax = std::min(xmax, M_PI / g->std_spacing(a));
  }
  return SymbolField::sample(g, mask, [&](const std::vector<double>& z) {
    double r2 = 0.0;
    for (int a : xs) r2 += z[g->dual_of(a)] * z[g->dual_of(a)];
    const double r = std::sqrt(r2);
    return cd(smoothstep((r / xmax - 2.0 / 3.0) * 6.0) * std::sqrt(1.0 + r2), 0.0);
  });
}

MuReport mu_domination_check(const SymbolField& C, const std::vector<StateVector>& tests) {
  const GridPtr g = standard(C.grid());
  const auto W = wick_quantize(C.on_grid(g), nullptr, "C", non_time_axes(*g));
  MuReport r;
  const double sh = std::sqrt(g->h());
  for (const auto& u : tests) {
    const double n2 = u.norm() * u.norm();
    const double rhs = sh * (dx_norm2(u) + n2);
    const double q = std::abs(bilinear(W, u, u)) / rhs;
    r.rows.push_back(q);
    r.K = std::max(r.K, q);
  }
  return r;
}

const char* test_kind_name(TestKind k) {
  return k == TestKind::random_bandlimited ? "random-bandlimited" : "gaussian-packet";
}

StateVector gaussian_packet(const GridPtr& grid, const std::vector<double>& center, const std::vector<double>& fr,
                            double width) {
  const GridPtr gp = standard(grid);
  const auto& g = *gp;
  const int d = g.base_count();
  if (static_cast<int>(center.size()) != d || static_cast<int>(fr.size()) != d)
    throw Error("packet: centre and frequency need one entry per base axis");
  const Layout L(gp, (1u << d) - 1);
  std::vector<int> idx(g.axis_count(), 0);
  Eigen::VectorXcd v(L.size());
  for (std::size_t o = 0; o < L.size(); ++o) {
    L.unravel(o, idx);
    double r2 = 0.0, ph = 0.0;
    for (int b = 0; b < d; ++b) {
      const double z = wrap(g, b, g.coord(b, idx[b]) - center[b]);
      r2 += z * z;
      ph += fr[b] * z;
    }
    v[o] = std::exp(-r2 / (2 * width * width)) * std::polar(1.0, ph);
  }
  return StateVector{gp, std::move(v)};
}

std::vector<StateVector> generate_tests(const GridPtr& grid, double T, TestKind kind, int count, std::uint64_t seed,
                                        double band, const std::vector<double>& x0) {
  if (count <= 0) throw Error("generate_tests: count must be positive");
  if (!(band > 0 && band <= 1)) throw Error("generate_tests: band must lie in (0, 1]");
  const GridPtr gp = standard(grid);
  const auto& g = *gp;
  const int d = g.base_count();
  const auto shape = base_shape(g);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N(0.0, 1.0);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  const Layout L(gp, (1u << d) - 1);
  std::vector<int> idx(g.axis_count(), 0);
  std::vector<StateVector> out;
  for (int c = 0; c < count; ++c) {
    StateVector u;
    if (kind == TestKind::random_bandlimited) {
      std::vector<cd> v(L.size(), cd(0.0));
      for (std::size_t o = 0; o < L.size(); ++o) {
        L.unravel(o, idx);
        bool in = true;
        for (int b = 0; b < d; ++b) {
          const int n = g.points(b), k = idx[b] < n / 2 ? idx[b] : idx[b] - n;
          if (std::abs(k) > band * n / 2) in = false;
        }
        // draw for every entry so the stream does not depend on the band
        const double re = N(rng), im = N(rng);
        if (in) v[o] = cd(re, im);
      }
      for (int b = 0; b < d; ++b) fft_axis(v, shape, b, +1);
      u = StateVector{gp, Eigen::Map<Eigen::VectorXcd>(v.data(), v.size())};
    } else {
      std::vector<double> centre(d), fr(d);
      const auto xs = g.base_axes(Role::x);
      double width = T / 4;
      for (int b = 0; b < d; ++b) {
        const double half = 0.5 * g.std_spacing(b) * g.points(b);
        double c0 = 0.0, span = 0.25 * half;
        if (b == g.t_axis()) span = T / 2;
        for (std::size_t j = 0; j < xs.size(); ++j)
          if (xs[j] == b) {
            c0 = j < x0.size() ? x0[j] : 0.0;
            span = T / 2;
          }
        centre[b] = c0 + span * U(rng);
        fr[b] = band * (M_PI / g.std_spacing(b)) * U(rng);
        width = std::max(width, 1.5 * g.std_spacing(b));
      }
      u = gaussian_packet(gp, centre, fr, width);
    }
    const double n = u.norm();
    if (n > 0) u.values /= n;
    out.push_back(std::move(u));
  }
  return out;
}

std::vector<StateVector> packet_scan(const GridPtr& grid, double T, int per_axis, double band,
                                     const std::vector<double>& x0) {
  if (per_axis <= 0) throw Error("packet_scan: per_axis must be positive");
  const GridPtr gp = standard(grid);
  const auto& g = *gp;
  const int d = g.base_count(), ta = g.t_axis();
  const auto win = time_window(g, T);
  const auto xs = g.base_axes(Role::x);
  double width = T / 4;
  for (int b = 0; b < d; ++b) width = std::max(width, 1.5 * g.std_spacing(b));
  std::vector<double> centre(d, 0.0);
  for (std::size_t j = 0; j < xs.size(); ++j) centre[xs[j]] = j < x0.size() ? x0[j] : 0.0;
  std::vector<int> others;
  for (int b = 0; b < d; ++b)
    if (b != ta) others.push_back(b);
  std::vector<StateVector> out;
  std::vector<int> pick(others.size(), 0);
  for (int j : win) {
    centre[ta] = g.coord(ta, j);
    std::fill(pick.begin(), pick.end(), 0);
    for (;;) {
      std::vector<double> fr(d, 0.0);
      for (std::size_t a = 0; a < others.size(); ++a) {
        const double top = band * M_PI / g.std_spacing(others[a]);
        fr[others[a]] = per_axis == 1 ? 0.0 : top * (2.0 * pick[a] / (per_axis - 1) - 1.0);
      }
      auto u = gaussian_packet(gp, centre, fr, width);
      u.values /= u.norm();
      out.push_back(std::move(u));
      std::size_t a = 0;
      while (a < pick.size() && ++pick[a] == per_axis) pick[a++] = 0;
      if (a == pick.size()) break;
    }
  }
  return out;
}

RealField time_derivative_on_window(const RealField& B, double T) {
  const GridPtr g = B.grid();
  const int ta = g->t_axis();
  const auto win = time_window(*g, T);
  const std::uint32_t mask = B.mask() | (1u << ta);
  const RealField e = B.expand(mask);
  const Layout& L = e.layout();
  const std::size_t st = L.stride(ta);
  const double dt = g->std_spacing(ta);
  std::vector<double> out(L.size(), 0.0);
  std::vector<int> idx;
  for (std::size_t o = 0; o < L.size(); ++o) {
    L.unravel(o, idx);
    if (idx[ta] != 0) continue;
    const std::size_t nw = win.size();
    for (std::size_t k = 0; k < nw; ++k) {
      const std::size_t p = o + win[k] * st;
      double v = 0.0;
      if (nw == 1) v = 0.0;
      else if (k == 0) v = (e[p + st] - e[p]) / dt;
      else if (k + 1 == nw) v = (e[p] - e[p - st]) / dt;
      else v = (e[p + st] - e[p - st]) / (2 * dt);
      out[p] = v;
    }
  }
  return RealField(g, mask, std::move(out));
}

EstimateReport verify_apriori(const EstimateInputs& in, const std::vector<StateVector>& tests) {
  if (tests.empty()) throw Error("verify_apriori: empty test set");
  const auto& mb = in.bundle;
  const GridPtr g = mb.grid;
  const double T = mb.T, sh = std::sqrt(g->h());
  const std::uint32_t axes = non_time_axes(*g);
  const RealField m = in.m.on_grid(g);

  const auto Mw = wick_quantize(to_complex(m), nullptr, "m", axes);
  const auto dB = wick_quantize(to_complex(time_derivative_on_window(mb.B, T)), nullptr, "d_t B", axes);
  const auto Mu = weyl_quantize(mu_symbol(g), "mu");
  const auto Ps = weyl_quantize(psi_cutoff_symbol(g), "Psi");
  const Eigen::MatrixXcd& b = mb.b_op.matrix;

  EstimateReport rep;
  rep.T = T;
  rep.C0_cap = in.C0_cap;
  rep.comm_tolerance = m.sup_abs() * g->std_spacing(g->t_axis()) / T;
  rep.comm_min_slack = kInf;
  for (std::size_t k = 0; k < tests.size(); ++k) {
    const StateVector u = apply_cutoff(tests[k], T, mb.L.x0);
    const double n2 = u.norm() * u.norm();
    if (!(n2 > 0)) throw Error("verify_apriori: test " + std::to_string(k) + " vanishes after the cutoff");
    EstimateRow r;
    r.index = static_cast<int>(k);
    const StateVector bu = make_state(g, b * u.values);
    r.lhs = sh * (bu.norm() * bu.norm() + dx_norm2(u) + n2);
    r.im = inner(make_state(g, in.P.matrix * u.values), bu).imag();
    r.m_wick = qform(Mw.matrix, u);
    r.mu = qform(Mu.matrix, u);
    const StateVector pu = make_state(g, Ps.matrix * u.values);
    r.psi = pu.norm() * pu.norm();
    r.comm = 0.5 * qform(dB.matrix, u);
    r.comm_rhs = r.m_wick / (4 * T);
    r.lower = inner(make_state(g, b * (in.f1.matrix * u.values)), u).real();
    const double den = T * r.im + r.psi;
    r.ratio = den > 0 ? r.lhs / den : kInf;
    if (!(den > 0) && rep.failing_row < 0) rep.failing_row = r.index;
    const double slack = r.comm - r.comm_rhs + rep.comm_tolerance * n2;
    rep.comm_min_slack = std::min(rep.comm_min_slack, slack / n2);
    if (slack < 0) rep.comm_ok = false;
    if (r.lower < 0) rep.lower_C = std::max(rep.lower_C, -r.lower / (r.m_wick + r.mu));
    rep.cutoff_total += r.psi;
    rep.C0 = std::max(rep.C0, r.ratio);
    rep.rows.push_back(r);
  }
  rep.pass = std::isfinite(rep.C0) && rep.C0 <= in.C0_cap;
  return rep;
}

}  // namespace mlab

namespace mlab {

EstimateSetup prepare_estimate(const std::string& A, const std::string& f, const GridPtr& grid, double T,
                               double eps, const std::string& f0, const WeightOptions& opt) {
  const GridPtr g = standard(grid);
  EstimateSetup s;
  const SymbolField f1 = eval_on_grid(parse_expr(f), g);
  s.weights = run_weights(f1, opt);
  const auto& w = s.weights;
  const SymbolField a = eval_on_grid(parse_expr(A), g);
  const auto rho = compute_rho(w.delta, w.m, T / std::sqrt(g->h()));

  LMatrix L;
  const auto xs = g->base_axes(Role::x);
  if (!xs.empty()) {
    std::vector<int> w0(g->axis_count(), -1);
    for (int x : xs) w0[x] = g->points(x) / 2;
    L = compute_L_matrix(quadratic_coefficients(a), w0);
  }
  auto& in = s.inputs;
  in.bundle = build_multiplier(w.delta, rho, compute_lambda(L, eps, T, g), T, eps, L);
  SymbolField ft = f1;
  if (!f0.empty()) ft = f1 + eval_on_grid(parse_expr(f0), g);
  in.P = assemble_normal_form(a, ft);
  in.f1 = weyl_quantize(ft, "f");
  in.m = w.m.values.on_grid(g);
  return s;
}

}  // namespace mlab

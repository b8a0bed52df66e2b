#include "mlab/prep_solver.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "mlab/symlang.hpp"

namespace mlab {

namespace {

struct Lattice {
  int n, N;
  double dx;
  std::vector<std::size_t> stride;

  explicit Lattice(const LeafGrid& g) : n(g.dim), N(g.points), dx(g.spacing()), stride(g.dim) {
    std::size_t s = 1;
    for (int j = n - 1; j >= 0; --j) {
      stride[j] = s;
      s *= N;
    }
  }
  int coord(std::size_t p, int j) const { return static_cast<int>((p / stride[j]) % N); }
  bool interior(std::size_t p) const {
    for (int j = 0; j < n; ++j) {
      const int c = coord(p, j);
      if (c == 0 || c == N - 1) return false;
    }
    return true;
  }
};

void check_grid(const LeafGrid& g) {
  if (g.dim < 1 || g.dim > 3) throw Error("prep: leaf dimension must be 1, 2 or 3");
  if (g.points < 5) throw Error("prep: leaf needs at least 5 points per axis");
  if (!(g.extent > 0)) throw Error("prep: leaf extent must be positive");
}

void check_problem(const QuasilinearProblem& p) {
  check_grid(p.grid);
  const int n = p.grid.dim;
  const auto sz = static_cast<Eigen::Index>(p.grid.size());
  if (p.L.rows() != n || p.L.cols() != n) throw Error("prep: L must be n x n");
  if ((p.L - p.L.transpose()).norm() > 1e-12 * std::max(1.0, p.L.norm())) throw Error("prep: L must be symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(p.L);
  if (es.eigenvalues().cwiseAbs().minCoeff() <= 1e-12 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff()))
    throw Error("prep: L is degenerate");
  if (p.k < 0 || p.k >= n) throw Error("prep: component index out of range");
  if (!p.imC.empty() && static_cast<int>(p.imC.size()) != n) throw Error("prep: ImC needs one field per axis");
  for (const auto& c : p.imC)
    if (c.size() != sz) throw Error("prep: ImC field has the wrong size");
  if (p.f.size() != 0 && p.f.size() != sz) throw Error("prep: source has the wrong size");
  if (p.u1.size() != 0 && p.u1.size() != n) throw Error("prep: u1 needs one entry per axis");
}

Eigen::VectorXd u1_of(const QuasilinearProblem& p) {
  return p.u1.size() ? p.u1 : Eigen::VectorXd::Zero(p.grid.dim);
}

double first(const Lattice& lt, const Eigen::VectorXd& v, std::size_t p, int j) {
  return (v[p + lt.stride[j]] - v[p - lt.stride[j]]) / (2 * lt.dx);
}

double second(const Lattice& lt, const Eigen::VectorXd& v, std::size_t p, int j, int l) {
  const std::size_t sj = lt.stride[j], sl = lt.stride[l];
  if (j == l) return (v[p + sj] - 2 * v[p] + v[p - sj]) / (lt.dx * lt.dx);
  return (v[p + sj + sl] - v[p + sj - sl] - v[p - sj + sl] + v[p - sj - sl]) / (4 * lt.dx * lt.dx);
}

// second-order coefficients at p with frozen gradient w
Eigen::MatrixXd coefficients(const QuasilinearProblem& p, const Eigen::VectorXd& w) {
  Eigen::MatrixXd c = p.L;
  const Eigen::VectorXd Lw = p.L * w;
  for (int l = 0; l < p.grid.dim; ++l) c(l, p.k) += -4.0 * Lw[l];
  return c;
}

Eigen::VectorXd imc_at(const QuasilinearProblem& p, std::size_t q) {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(p.grid.dim);
  for (std::size_t j = 0; j < p.imC.size(); ++j) c[j] = p.imC[j][q];
  return c;
}

Eigen::VectorXd chi_from_v(const QuasilinearProblem& p, const Eigen::VectorXd& v) {
  const Lattice lt(p.grid);
  const Eigen::VectorXd u1 = u1_of(p);
  Eigen::VectorXd chi(v.size());
  for (Eigen::Index q = 0; q < v.size(); ++q) {
    double s = p.u0 + v[q];
    for (int j = 0; j < lt.n; ++j) s += u1[j] * p.grid.coord(lt.coord(q, j));
    chi[q] = s;
  }
  return chi;
}

double radius_of(const QuasilinearProblem& p) {
  return p.cutoff_radius > 0 ? p.cutoff_radius : 0.25 * p.grid.extent;
}

double norm_at(const Lattice& lt, const LeafGrid& g, std::size_t q) {
  double s = 0.0;
  for (int j = 0; j < lt.n; ++j) {
    const double x = g.coord(lt.coord(q, j));
    s += x * x;
  }
  return std::sqrt(s);
}

}  // namespace

Eigen::VectorXd cutoff_field(const QuasilinearProblem& p) {
  check_problem(p);
  const Lattice lt(p.grid);
  const double r = radius_of(p);
  Eigen::VectorXd out(p.grid.size());
  for (std::size_t q = 0; q < p.grid.size(); ++q) {
    const double s = std::clamp(2.0 - norm_at(lt, p.grid, q) / r, 0.0, 1.0);
    out[q] = s * s * (3 - 2 * s);
  }
  return out;
}

std::size_t LeafGrid::size() const {
  std::size_t s = 1;
  for (int j = 0; j < dim; ++j) s *= points;
  return s;
}

Eigen::VectorXd sample_leaf(const std::string& expr, const LeafGrid& g) {
  check_grid(g);
  const auto e = parse_expr(expr);
  for (const auto& v : e.variables()) {
    bool ok = false;
    for (int j = 1; j <= g.dim; ++j)
      if (v == "x" + std::to_string(j)) ok = true;
    if (!ok) throw Error("leaf expression '" + expr + "' uses '" + v + "'; only x1..x" + std::to_string(g.dim));
  }
  const Lattice lt(g);
  Eigen::VectorXd out(g.size());
  std::map<std::string, cd> vars;
  for (std::size_t q = 0; q < g.size(); ++q) {
    for (int j = 0; j < g.dim; ++j) vars["x" + std::to_string(j + 1)] = g.coord(lt.coord(q, j));
    const cd z = eval_point(e, vars);
    if (std::abs(z.imag()) > 1e-12 * std::max(1.0, std::abs(z))) throw Error("leaf expression '" + expr + "' is not real");
    out[q] = z.real();
  }
  return out;
}

std::vector<QuasilinearProblem> assemble_coordinate_system(const std::vector<Eigen::VectorXd>& a,
                                                           const std::vector<Eigen::VectorXd>& imC,
                                                           const LeafGrid& g) {
  check_grid(g);
  const int n = g.dim;
  if (static_cast<int>(a.size()) != n * n) throw Error("prep: a_jk needs n^2 fields");
  Eigen::MatrixXd L(n, n);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) {
      const auto& f = a[j * n + k];
      if (f.size() != static_cast<Eigen::Index>(g.size())) throw Error("prep: a_jk field has the wrong size");
      L(j, k) = f[0];
      const double spread = (f.array() - f[0]).abs().maxCoeff();
      if (spread > 1e-8)
        throw Error("prep: a_" + std::to_string(j + 1) + std::to_string(k + 1) + " is not constant (spread " +
                    std::to_string(spread) + ")");
    }
  std::vector<QuasilinearProblem> out;
  for (int k = 0; k < n; ++k) {
    QuasilinearProblem p;
    p.L = L;
    p.k = k;
    p.grid = g;
    p.imC = imC;
    p.u1 = Eigen::VectorXd::Unit(n, k);
    check_problem(p);
    out.push_back(std::move(p));
  }
  return out;
}

Eigen::VectorXd reduced_source(const QuasilinearProblem& p) {
  check_problem(p);
  Eigen::VectorXd f0 = p.f.size() ? p.f : Eigen::VectorXd::Zero(p.grid.size());
  const Eigen::VectorXd u1 = u1_of(p);
  for (std::size_t j = 0; j < p.imC.size(); ++j) f0 += 2.0 * u1[j] * p.imC[j];
  return f0;
}

Eigen::VectorXd linearized_step(const QuasilinearProblem& p, const Eigen::VectorXd& v_prev, const Eigen::VectorXd& f0) {
  check_problem(p);
  const Lattice lt(p.grid);
  const int n = lt.n;
  const std::size_t N = p.grid.size();
  if (static_cast<std::size_t>(v_prev.size()) != N || static_cast<std::size_t>(f0.size()) != N)
    throw Error("prep: field size mismatch");
  const Eigen::VectorXd u1 = u1_of(p);
  const Eigen::VectorXd phi = cutoff_field(p);

  std::vector<std::size_t> rows;
  for (std::size_t q = 0; q < N; ++q)
    if (lt.interior(q)) rows.push_back(q);
  const std::size_t m = rows.size(), nc = 1 + n;
  using T = Eigen::Triplet<double>;
  std::vector<T> trip;
  auto put = [&](std::size_t r, std::size_t col, double v) {
    // A at (N + r, col) and its transpose at (col, N + r)
    trip.emplace_back(static_cast<int>(N + r), static_cast<int>(col), v);
    trip.emplace_back(static_cast<int>(col), static_cast<int>(N + r), v);
  };
  const double h2 = lt.dx * lt.dx;
  for (std::size_t r = 0; r < m; ++r) {
    const std::size_t q = rows[r];
    Eigen::VectorXd w = u1;
    for (int j = 0; j < n; ++j) w[j] += phi[q] * first(lt, v_prev, q, j);
    const Eigen::MatrixXd c = coefficients(p, w);
    const Eigen::VectorXd b = -2.0 * imc_at(p, q);
    std::map<std::size_t, double> st;
    for (int j = 0; j < n; ++j)
      for (int l = 0; l < n; ++l) {
        const double a = c(j, l);
        if (a == 0.0) continue;
        const std::size_t sj = lt.stride[j], sl = lt.stride[l];
        if (j == l) {
          st[q + sj] += a / h2;
          st[q] += -2 * a / h2;
          st[q - sj] += a / h2;
        } else {
          st[q + sj + sl] += a / (4 * h2);
          st[q + sj - sl] -= a / (4 * h2);
          st[q - sj + sl] -= a / (4 * h2);
          st[q - sj - sl] += a / (4 * h2);
        }
      }
    for (int j = 0; j < n; ++j) {
      if (b[j] == 0.0) continue;
      st[q + lt.stride[j]] += b[j] / (2 * lt.dx);
      st[q - lt.stride[j]] -= b[j] / (2 * lt.dx);
    }
    for (const auto& [col, v] : st) put(r, col, v);
  }
  // Lagrange rows for v(x0) = 0 and dv(x0) = 0
  std::size_t c0 = 0;
  for (int j = 0; j < n; ++j) c0 += p.grid.center() * lt.stride[j];
  auto con = [&](std::size_t row, std::size_t col, double v) {
    trip.emplace_back(static_cast<int>(N + m + row), static_cast<int>(col), v);
    trip.emplace_back(static_cast<int>(col), static_cast<int>(N + m + row), v);
  };
  con(0, c0, 1.0);
  for (int j = 0; j < n; ++j) {
    con(1 + j, c0 + lt.stride[j], 1.0 / (2 * lt.dx));
    con(1 + j, c0 - lt.stride[j], -1.0 / (2 * lt.dx));
  }
  // minimal norm: identity block on v
  for (std::size_t q = 0; q < N; ++q) trip.emplace_back(static_cast<int>(q), static_cast<int>(q), 1.0);

  const auto dim = static_cast<Eigen::Index>(N + m + nc);
  Eigen::SparseMatrix<double> K(dim, dim);
  K.setFromTriplets(trip.begin(), trip.end());
  K.makeCompressed();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim);
  for (std::size_t r = 0; r < m; ++r) rhs[static_cast<Eigen::Index>(N + r)] = f0[rows[r]];

  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  lu.compute(K);
  if (lu.info() != Eigen::Success) throw Error("prep: linearized system is singular (" + lu.lastErrorMessage() + ")");
  Eigen::VectorXd sol = lu.solve(rhs);
  if (lu.info() != Eigen::Success || !sol.allFinite()) throw Error("prep: linearized solve failed");
  const double rel = (K * sol - rhs).norm() / std::max(1.0, rhs.norm());
  if (rel > 1e-8) throw Error("prep: linearized system is numerically singular (relative residual " + std::to_string(rel) + ")");
  Eigen::VectorXd v = sol.head(static_cast<Eigen::Index>(N));
  // no zeroth-order term: shifting by a constant keeps the equation and pins v(x0) = 0 exactly
  v.array() -= v[static_cast<Eigen::Index>(c0)];
  return v;
}

double h2_norm(const LeafGrid& g, const Eigen::VectorXd& v) {
  check_grid(g);
  const Lattice lt(g);
  double s = 0.0;
  for (std::size_t q = 0; q < g.size(); ++q) {
    if (!lt.interior(q)) continue;
    s += v[q] * v[q];
    for (int j = 0; j < lt.n; ++j) {
      const double d = first(lt, v, q, j);
      s += d * d;
      for (int l = j; l < lt.n; ++l) {
        const double e = second(lt, v, q, j, l);
        s += (l == j ? 1.0 : 2.0) * e * e;
      }
    }
  }
  return std::sqrt(s * std::pow(lt.dx, lt.n));
}

Eigen::VectorXd gradient_at_center(const LeafGrid& g, const Eigen::VectorXd& v) {
  const Lattice lt(g);
  std::size_t c0 = 0;
  for (int j = 0; j < lt.n; ++j) c0 += g.center() * lt.stride[j];
  Eigen::VectorXd out(lt.n);
  for (int j = 0; j < lt.n; ++j) out[j] = first(lt, v, c0, j);
  return out;
}

double residual(const QuasilinearProblem& p, const Eigen::VectorXd& chi) {
  check_problem(p);
  const Lattice lt(p.grid);
  if (static_cast<std::size_t>(chi.size()) != p.grid.size()) throw Error("prep: field size mismatch");
  const double rad = radius_of(p);
  double s = 0.0;
  for (std::size_t q = 0; q < p.grid.size(); ++q) {
    if (!lt.interior(q) || norm_at(lt, p.grid, q) > rad) continue;
    Eigen::VectorXd w(lt.n);
    for (int j = 0; j < lt.n; ++j) w[j] = first(lt, chi, q, j);
    const Eigen::MatrixXd c = coefficients(p, w);
    const Eigen::VectorXd ic = imc_at(p, q);
    double r = 0.0;
    for (int j = 0; j < lt.n; ++j) {
      for (int l = 0; l < lt.n; ++l)
        if (c(j, l) != 0.0) r += c(j, l) * second(lt, chi, q, j, l);
      r -= 2.0 * ic[j] * w[j];
    }
    if (p.f.size()) r -= p.f[q];
    s += r * r;
  }
  return std::sqrt(s * std::pow(lt.dx, lt.n));
}

PrepResult solve_quasilinear(const QuasilinearProblem& p, double tol, int max_iter) {
  check_problem(p);
  if (!(tol > 0)) throw Error("prep: tol must be positive");
  if (max_iter < 1) throw Error("prep: max_iter must be at least 1");
  const Eigen::VectorXd f0 = reduced_source(p);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(p.grid.size());
  PrepResult out;
  for (int it = 1; it <= max_iter; ++it) {
    Eigen::VectorXd vn;
    try {
      vn = linearized_step(p, v, f0);
    } catch (const Error& e) {
      throw Error(std::string(e.what()) + " at iteration " + std::to_string(it));
    }
    PrepIteration rec;
    rec.iteration = it;
    rec.step_h2 = h2_norm(p.grid, vn - v);
    rec.v_h2 = h2_norm(p.grid, vn);
    rec.residual = residual(p, chi_from_v(p, vn));
    out.history.push_back(rec);
    v = std::move(vn);
    if (!std::isfinite(rec.step_h2))
      throw PrepDivergence("prep: iteration diverged at step " + std::to_string(it), out.history);
    if (rec.step_h2 < tol) {
      out.chi = chi_from_v(p, v);
      out.iterations = it;
      out.residual = rec.residual;
      return out;
    }
  }
  throw PrepDivergence("prep: no convergence within " + std::to_string(max_iter) + " iterations", out.history);
}

}  // namespace mlab

#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mlab/error.hpp"
#include "mlab/phase_grid.hpp"

namespace mlab {

// Square leaf lattice x_j = -L/2 + i dx (i = 0..N-1) on every axis, row-major.
// The base point x0 is the centre index N/2 (x = 0).
struct LeafGrid {
  int dim = 2;
  int points = 64;
  double extent = 2 * M_PI;

  double spacing() const { return extent / points; }
  double coord(int i) const { return -0.5 * extent + i * spacing(); }
  std::size_t size() const;
  int center() const { return points / 2; }
};

// For component k:
//   sum L_jl d_j d_l chi - 4 sum_jl L_jl (d_j chi)(d_l d_k chi) - 2 ImC . d chi = f,
//   chi(x0) = u0, d chi(x0) = u1.
struct QuasilinearProblem {
  Eigen::MatrixXd L;                 // constant, symmetric, nondegenerate
  int k = 0;                         // component index (0-based)
  LeafGrid grid;
  std::vector<Eigen::VectorXd> imC;  // one field per axis, empty means zero
  Eigen::VectorXd f;                 // empty means zero
  double u0 = 0.0;
  Eigen::VectorXd u1;                // empty means zero
  // The frozen gradient is u1 + Phi dv with Phi = 1 on |x| <= r and 0 for
  // |x| >= 2r (smoothstep in between); r <= 0 means extent / 4. The
  // nonlinear equation then holds where Phi = 1, and the residual is taken there.
  double cutoff_radius = 0.0;
};

// Phi on the leaf.
Eigen::VectorXd cutoff_field(const QuasilinearProblem& p);

// Samples an expression in x1..xn on the leaf (must be real).
Eigen::VectorXd sample_leaf(const std::string& expr, const LeafGrid& g);

// One problem per component with u0 = 0, u1 = e_k and f = 0. a is the
// row-major list of a_jk fields over the leaf; they must be constant to 1e-8.
std::vector<QuasilinearProblem> assemble_coordinate_system(const std::vector<Eigen::VectorXd>& a,
                                                           const std::vector<Eigen::VectorXd>& imC,
                                                           const LeafGrid& g);

struct PrepIteration {
  int iteration = 0;
  double step_h2 = 0.0;   // ||v^{j+1} - v^j||_H2
  double v_h2 = 0.0;      // ||v^{j+1}||_H2
  double residual = 0.0;  // nonlinear residual of chi^{j+1}
};

struct PrepResult {
  Eigen::VectorXd chi;
  std::vector<PrepIteration> history;
  int iterations = 0;
  double residual = 0.0;
};

// Raised when max_iter runs out; carries the history so far.
class PrepDivergence : public Error {
public:
  PrepDivergence(const std::string& what, std::vector<PrepIteration> h) : Error(what), history(std::move(h)) {}
  std::vector<PrepIteration> history;
};

// f0 = f + 2 ImC . u1 after v = chi - u0 - u1.x.
Eigen::VectorXd reduced_source(const QuasilinearProblem& p);

// One linearized step: the coefficients are frozen at d(v_prev) + u1 and the
// next v solves the linear equation on interior points with v(x0) = 0,
// dv(x0) = 0 (Lagrange rows), minimal L2 norm among all solutions.
Eigen::VectorXd linearized_step(const QuasilinearProblem& p, const Eigen::VectorXd& v_prev, const Eigen::VectorXd& f0);

// Fixed-point loop from v^0 = 0 until ||v^{j+1} - v^j||_H2 < tol.
PrepResult solve_quasilinear(const QuasilinearProblem& p, double tol = 1e-10, int max_iter = 50);

// Discrete L2 norm of the full nonlinear left side minus f over interior
// points with Phi = 1, for chi on the leaf.
double residual(const QuasilinearProblem& p, const Eigen::VectorXd& chi);

// Value + gradient + Hessian stencils, L2 over interior points.
double h2_norm(const LeafGrid& g, const Eigen::VectorXd& v);

// Central-difference gradient at x0.
Eigen::VectorXd gradient_at_center(const LeafGrid& g, const Eigen::VectorXd& v);

}  // namespace mlab

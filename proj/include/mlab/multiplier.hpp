#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mlab/quantize.hpp"
#include "mlab/weights.hpp"

namespace mlab {

// rho_T(t,w) = max over lattice s in [-T, t] of
//   delta(s) - delta(t) + (1/2T) int_s^t m dr - m(s)
// with the trapezoidal integral, by one forward sweep per w column. T is in
// frame units of the t axis. Outside |t| <= T the value at the nearest window
// end is repeated. delta and m must live on the same grid.
WeightField compute_rho(const WeightField& delta, const WeightField& m, double T);

// Same maximum by direct enumeration of s for every t (O(T^2) per column).
WeightField compute_rho_bruteforce(const WeightField& delta, const WeightField& m, double T);

// Lattice indices along t with |t| <= T (frame units); throws if T exceeds
// the t extent or the window is empty.
std::vector<int> time_window(const PhaseGrid& g, double T);

struct LMatrix {
  Eigen::MatrixXd a0;      // {a_jk} at the base point
  Eigen::MatrixXd L;       // a0^-1
  std::vector<double> x0;  // base point, standard units, one per x axis
  double radius = 0.0;     // largest |x - x0| (standard units) with bracket >= |xi|^2 - c1
  double c1 = 0.0;
  double min_bracket_ratio = 0.0;  // min of bracket / |xi|^2 over the ball, xi != 0
};

// a_jk = (1/2) d_xij d_xik A on xi = 0, row-major, standard frame.
std::vector<SymbolField> quadratic_coefficients(const SymbolField& A);

// a: row-major n x n list of the a_jk fields (standard frame, A = sum a_jk xi_j xi_k).
// w0 holds one lattice index per phase axis (-1 where irrelevant). The bracket
// {A, <L(x-x0), xi>} is sampled with finite differences on the lattice; c1 is
// max(0, max over the ball and the dual lattice of |xi|^2 - bracket) and the
// radius is the largest lattice ball around x0 with c1 <= c1_cap.
LMatrix compute_L_matrix(const std::vector<SymbolField>& a, const std::vector<int>& w0, double c1_cap = 1.0);

// lambda_T = eps h^1/2 <L(x - x0), xi> / T in standard units, tapered to zero
// over one lattice cell outside |x - x0| <= T (sup norm over the x axes).
SymbolField compute_lambda(const LMatrix& L, double eps, double T, const GridPtr& grid);

struct MultiplierBundle {
  double T = 0.0;    // standard units
  double eps = 0.0;
  LMatrix L;
  GridPtr grid;      // standard frame
  RealField rho, lambda, B;
  SymbolField delta1, rho1;  // Gaussian regularizations, diagnostics only
  DiscreteOperator b_op;     // Wick quantization of B, t as a parameter
  double hermitian_defect = 0.0;  // ||b - b*|| / max(1, ||b||)
  double norm = 0.0;              // spectral radius of the Hermitian part of b_op
  double sup_B = 0.0;
  std::vector<std::string> log;
};

// B_T = delta + rho_T + lambda_T (fields moved to the standard frame of
// `lambda`'s grid) and its Wick quantization.
MultiplierBundle build_multiplier(const WeightField& delta, const WeightField& rho, const SymbolField& lambda,
                                  double T, double eps, const LMatrix& L);

struct RhoAudit {
  bool sweep_equals_brute = false;
  double bound_slack = 0.0;      // min of m - |rho| on the window (>= 0 when |rho| <= m)
  double commutator_slack = 0.0; // min of T D+(delta + rho) - m/2 + tol over interior steps
  double tolerance = 0.0;        // 2 ||m||_inf dt
  int violations = 0;
};

// Checks the pseudo-sign properties on the window: sweep against brute
// force (bitwise), |rho| <= m, and T D+(delta+rho) >= m/2 - 2||m|| dt with D+
// the forward difference quotient and m taken at the left point.
RhoAudit audit_rho(const WeightField& delta, const WeightField& m, double T);

}  // namespace mlab

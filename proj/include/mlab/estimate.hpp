#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mlab/multiplier.hpp"
#include "mlab/quantize.hpp"
#include "mlab/weights.hpp"

namespace mlab {

// Function on the base lattice (row-major over the base axes, standard frame).
// Norms use the lattice measure prod dq.
struct StateVector {
  GridPtr grid;
  Eigen::VectorXcd values;

  double measure() const;
  double norm() const;
};

StateVector make_state(const GridPtr& grid, Eigen::VectorXcd values);

// Lattice L2 inner product <u, v> = sum u conj(v) dq.
cd inner(const StateVector& u, const StateVector& v);

// <Op u, v>.
cd bilinear(const DiscreteOperator& op, const StateVector& u, const StateVector& v);

// P* = D_t + A^w + i (f + f0)^w. A, f, f0 real symbols on the same lattice;
// any frame (moved to the standard one).
DiscreteOperator assemble_normal_form(const SymbolField& A, const SymbolField& f, const SymbolField* f0 = nullptr);
DiscreteOperator assemble_normal_form(const std::string& A, const std::string& f, const std::string& f0,
                                      const GridPtr& grid);

struct DominationReport {
  double ratio = 0.0;          // max over tests of |<c^w u,u>| / <m^Wick u,u>
  int worst = -1;
  bool positivity_ok = true;   // <m^Wick u,u> > 0 for every test
  std::vector<double> rows;
};

// Wick quantization of m with t as a parameter.
DominationReport wick_domination_check(const SymbolField& c, const RealField& m, const std::vector<StateVector>& tests);

struct MuReport {
  double K = 0.0;  // max |<C^Wick u,u>| / (h^1/2 (||D_x u||^2 + ||u||^2))
  std::vector<double> rows;
};

// mu = h^1/2 <xi>^2 over the x (leaf) duals.
SymbolField mu_symbol(const GridPtr& grid);
MuReport mu_domination_check(const SymbolField& C, const std::vector<StateVector>& tests);

// sum_j ||D_xj u||^2, spectrally.
double dx_norm2(const StateVector& u);

// Smooth bump in t and in x - x0 (sup norm), vanishing for |.| >= T (standard units).
StateVector apply_cutoff(const StateVector& u, double T, const std::vector<double>& x0);

// Dual-space multiplier psi(xi) = s((|xi|/xi_max - 2/3) * 6) <xi>, s a smoothstep,
// over the x duals (zero when there is no x axis).
SymbolField psi_cutoff_symbol(const GridPtr& grid);

enum class TestKind { random_bandlimited, gaussian_packet };
const char* test_kind_name(TestKind k);

// Seeded tests. Band-limited vectors draw Fourier coefficients on |k_j| <=
// band * N_j/2 per axis; packets get random centres in |t|, |x - x0| <= T/2
// and frequencies inside the same band.
std::vector<StateVector> generate_tests(const GridPtr& grid, double T, TestKind kind, int count, std::uint64_t seed,
                                        double band = 1.0 / 3.0, const std::vector<double>& x0 = {});

// Deterministic packet scan: centres at every lattice t of the window (x at
// x0, y at 0) times `per_axis` frequencies per non-t axis spread evenly over
// the band. Width max(T/4, 1.5 dq).
std::vector<StateVector> packet_scan(const GridPtr& grid, double T, int per_axis = 5, double band = 1.0 / 3.0,
                                     const std::vector<double>& x0 = {});

// exp(-|z - c|^2 / (2 w^2)) e^{i<k, z>} over the base axes, standard units.
StateVector gaussian_packet(const GridPtr& grid, const std::vector<double>& center, const std::vector<double>& freq,
                            double width);

struct EstimateRow {
  int index = 0;
  double lhs = 0.0;       // h^1/2 (||b u||^2 + ||D_x u||^2 + ||u||^2)
  double im = 0.0;        // Im <P* u, b u>
  double m_wick = 0.0;    // <m^Wick u, u>
  double mu = 0.0;        // <mu^w u, u>
  double psi = 0.0;       // ||Psi^w u||^2
  double comm = 0.0;      // <d_t B^Wick u, u> / 2
  double comm_rhs = 0.0;  // <m^Wick u, u> / 4T
  double lower = 0.0;     // Re <B^Wick f1^w u, u>
  double ratio = 0.0;     // lhs / (T im + psi), +inf when the denominator is <= 0
};

struct EstimateReport {
  double T = 0.0;
  std::vector<EstimateRow> rows;
  double C0 = 0.0;
  double C0_cap = 0.0;
  bool pass = false;
  int failing_row = -1;         // first row with a nonpositive right side
  double comm_min_slack = 0.0;  // min of comm - comm_rhs + tol_grid over rows
  double comm_tolerance = 0.0;  // ||m|| dt / T, per unit ||u||^2
  bool comm_ok = true;
  double lower_C = 0.0;         // max of -lower / (m_wick + mu), 0 if never negative
  double cutoff_total = 0.0;    // sum of psi terms
};

struct EstimateInputs {
  DiscreteOperator P;        // P*
  DiscreteOperator f1;       // (f + f0)^w
  MultiplierBundle bundle;
  RealField m;               // on the standard grid of the bundle
  double C0_cap = 1e4;
};

// Runs the multiplier estimate over the tests. Every test is first cut off to
// |t| <= T, |x - x0| <= T.
EstimateReport verify_apriori(const EstimateInputs& in, const std::vector<StateVector>& tests);

struct EstimateSetup {
  WeightPipeline weights;
  EstimateInputs inputs;
};

// Full chain for P* = D_t + A^w + i f^w on `grid`: weights from f, rho_T,
// L at x = 0, lambda_T and B_T. T in standard units. P* uses f (+ f0) as given; the
// weights come from the pipeline's snapped, rescaled copy (same sign pattern).
EstimateSetup prepare_estimate(const std::string& A, const std::string& f, const GridPtr& grid, double T,
                               double eps, const std::string& f0 = "", const WeightOptions& opt = {});

// d_t(delta + rho_T) in standard units on the window (one-sided at its ends),
// zero outside it.
RealField time_derivative_on_window(const RealField& B, double T);

}  // namespace mlab

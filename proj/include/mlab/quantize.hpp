#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mlab/linalg.hpp"
#include "mlab/phase_grid.hpp"
#include "mlab/symlang.hpp"

namespace mlab {

enum class Quantization { weyl, kn, wick };
const char* quantization_name(Quantization q);

// Dense operator on functions over the base lattice (row-major over base axes).
// Matrices act on sample vectors; the lattice measure is folded in so that
// applying the matrix approximates the integral operator.
struct DiscreteOperator {
  GridPtr grid;
  Eigen::MatrixXcd matrix;
  Quantization quantization = Quantization::weyl;
  std::string provenance;

  Eigen::Index dim() const { return matrix.rows(); }
};

// Largest base lattice accepted by the dense quantizers.
constexpr std::size_t kMaxOperatorDim = 4096;

// K(x,y) = (2pi)^-n sum_xi e^{i<x-y,xi>} a((x+y)/2, xi) dxi. The midpoint value
// comes from trigonometric interpolation on periodic axes and local cubic
// interpolation on non-periodic ones; the dual sum is an inverse FFT.
DiscreteOperator weyl_quantize(const SymbolField& a, std::string provenance = {});

// Same kernel with the symbol evaluated at the left point x.
DiscreteOperator kn_quantize(const SymbolField& a, std::string provenance = {});

// Weyl symbol of the Kohn-Nirenberg operator a(x,D) to first order:
// b = a + (i/2) sum_j d_xj d_xij a.
SymbolField kn_to_weyl(const SymbolField& a);

// Convolution with pi^-n exp(-|w|^2) in g# units (separable discrete kernel,
// normalized to unit mass, truncated at radius 6). Periodic axes and the duals
// of periodic axes wrap; non-periodic axes use point reflection at the ends,
// which reproduces affine data exactly. Axes shorter than 12 g# units append
// a message to `warnings` when given. Only the phase axes in `axes` are
// smoothed; leaving out t and tau gives the Wick quantization in the
// remaining variables with t as a parameter.
SymbolField gaussian_regularize(const SymbolField& a, std::vector<std::string>* warnings = nullptr,
                                std::uint32_t axes = ~0u);

// Weyl quantization of the Gaussian regularization. Along smoothed base axes
// the regularization is evaluated directly at the Weyl midpoints rather than
// interpolated there; this keeps nonnegative symbols nonnegative to rounding.
DiscreteOperator wick_quantize(const SymbolField& a, std::vector<std::string>* warnings = nullptr,
                               std::string provenance = {}, std::uint32_t axes = ~0u);

// Every phase axis except t and tau.
std::uint32_t non_time_axes(const PhaseGrid& g);

struct ComposeReport {
  std::vector<double> h;
  std::vector<double> residual;  // ||Op(a)Op(b) - Op(ab)||_2 per h
  std::vector<double> ratio;     // residual[k] / residual[k+1]
};

// Leading-order composition check for the semiclassical quantization
// Op_h(a) = Op(a(x, h xi)) over an h sweep on a fixed lattice.
ComposeReport compose_leading_check(const SymbolExpr& a, const SymbolExpr& b, const GridConfig& grid,
                                    const std::vector<double>& hs = {0.1, 0.05, 0.025});

// Samples an expression with every dual variable replaced by h times itself.
SymbolField eval_semiclassical(const SymbolExpr& e, const GridPtr& grid, double h);

// Row-major CSV of (re, im) pairs and a small binary container
// ("MLOP", u64 rows, u64 cols, interleaved doubles).
void write_operator_csv(const DiscreteOperator& op, const std::string& path);
void write_operator_binary(const DiscreteOperator& op, const std::string& path);
DiscreteOperator read_operator_binary(const std::string& path, GridPtr grid);

}  // namespace mlab

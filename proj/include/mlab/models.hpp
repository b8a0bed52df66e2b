#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mlab/conditions.hpp"
#include "mlab/estimate.hpp"
#include "mlab/phase_grid.hpp"

namespace mlab {

enum class ModelForm { normal, principal };

// Either the normal form P* = D_t + A + i f (+ i f0), or a principal symbol
// p2 with lower-order part p1 (+ p0) whose refined symbol fixes f = -Im p_r.
struct ModelSpec {
  std::string name;
  std::string description;
  ModelForm form = ModelForm::normal;
  std::string A, f, f0;
  std::string p2, p1, p0;
  std::vector<AxisConfig> dims;
  double h = 0.1;
  Verdict expected_condition = Verdict::pass;
  std::optional<bool> expected_estimate;  // empty: the estimate does not apply
};

std::vector<ModelSpec> gallery();
const ModelSpec& find_model(const std::string& name);

struct ExpectedVerdicts {
  Verdict condition = Verdict::pass;
  std::optional<bool> estimate;
};
ExpectedVerdicts expected_verdicts(const ModelSpec& m);

GridPtr model_grid(const ModelSpec& m);
// The imaginary part of the adjoint normal form on the model grid (real field).
SymbolField model_f(const ModelSpec& m, const GridPtr& grid);
ConditionReport check_model(const ModelSpec& m);

// Q- = D_t + i t Delta_x: solve Q- u = f by
//   u^(t, eta) = i int_0^t exp(-(t^2 - s^2)|eta|^2 / 2) f^(s, eta) ds,
// FFT over the periodic non-t axes, trapezoid over the t lattice starting at
// t = 0. t must be non-periodic with t = 0 on the lattice.
StateVector solve_q_minus(const StateVector& f);

// Matrix-free Q- with a fourth-order finite-difference D_t.
StateVector apply_q_minus(const StateVector& u);

// ||Q- u - f|| / ||f||.
double q_minus_residual(const StateVector& u, const StateVector& f);

}  // namespace mlab

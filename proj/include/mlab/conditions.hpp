#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mlab/phase_grid.hpp"

namespace mlab {

// p_lower + (i/2) sum_j d_xj d_xij p, g#-normalized derivatives.
SymbolField subprincipal_symbol(const SymbolField& p, const SymbolField& p_lower);

// p + p_s.
SymbolField refined_symbol(const SymbolField& p, const SymbolField& ps);

// Bitmask of the duals of the x-role axes (the xi axes) and of the x axes.
std::uint32_t xi_axes_mask(const PhaseGrid& g);
std::uint32_t x_axes_mask(const PhaseGrid& g);

// Restriction to the lattice plane xi = 0 (index N/2 on every xi axis).
template <class T>
BasicField<T> at_sigma2(const BasicField<T>& f) {
  BasicField<T> out = f;
  const auto& g = *f.grid();
  for (int a : g.base_axes(Role::x)) out = slice(out, g.dual_of(a), g.points(a) / 2);
  return out;
}

struct HessianReport {
  int dim = 0;                    // number of xi axes
  std::vector<RealField> entries; // row-major dim x dim, fields on the xi = 0 slice
  bool nondegenerate = false;
  int rank = 0;                   // at the worst point
  int positive = 0, negative = 0; // signature at the worst point
  bool constant_signature = true;
  double min_abs_eigenvalue = 0.0;
  std::vector<int> worst_index;   // phase index, -1 on axes the Hessian ignores
};

// xi-xi Hessian at xi = 0 in the field's frame coordinates. Throws when p or
// its gradient does not vanish there (the message names the lattice point).
HessianReport hessian_at_sigma2(const SymbolField& p, double tol = 1e-8);

struct LimitField {
  int dim = 0;
  std::vector<RealField> a;    // a_jk = Hess/2, row-major
  std::vector<RealField> re_c; // Re C_k, C = xi-linear part of p_s
  double t_component = 1.0;

  // x-component 2 a(idx) theta + Re C(idx).
  std::vector<double> x_component(const std::vector<int>& idx, const std::vector<double>& theta) const;
};

LimitField limit_hamilton_field(const SymbolField& p, const SymbolField& ps);

struct LeafSignTable {
  Layout layout;                      // over the non-leaf axes of f at xi = 0
  std::vector<int> sign;
  std::vector<char> mixed;
  std::vector<std::vector<int>> witness; // phase index of max |f| on the leaf
  double threshold = 0.0;

  bool any_mixed() const;
};

// Sign of f on every x-leaf of the xi = 0 slice. Values with |f| below
// max(1e-12 ||f||_inf, 1e-300) count as zero.
LeafSignTable leaf_sign(const SymbolField& f);

enum class Orientation { psi, psi_bar };
const char* orientation_name(Orientation o);

enum class Verdict { pass, fail_leaf_sign, fail_monotonicity };
const char* verdict_name(Verdict v);

struct Witness {
  std::string kind;          // "mixed-leaf" or "transition"
  std::vector<int> index;    // phase lattice index, -1 where f is independent
  std::vector<int> previous; // transitions: the earlier leaf with the other sign
};

struct ConditionReport {
  Verdict verdict = Verdict::pass;
  Orientation orientation = Orientation::psi;
  std::vector<Witness> witnesses; // capped at kMaxWitnesses
  std::size_t violation_count = 0;
  double threshold = 0.0;
};

constexpr std::size_t kMaxWitnesses = 64;

// Normal-form check along t-lines of leaf signs. f is the imaginary part of
// the adjoint's normal form D_t + A + i f: Psi forbids + -> - as t grows
// (zero leaves in between do not help), Psi-bar forbids - -> +.
ConditionReport check_subr_psi(const SymbolField& f, Orientation o = Orientation::psi);

}  // namespace mlab

#pragma once

#include <string>
#include <vector>

#include "mlab/phase_grid.hpp"

namespace mlab {

// Real field tagged with what it holds and the h it was computed for. All
// weight fields live on gsharp-frame grids.
struct WeightField {
  RealField values;
  std::string role;
  double h = 0.0;

  const GridPtr& grid() const { return values.grid(); }
  double operator[](std::size_t o) const { return values[o]; }
  std::size_t size() const { return values.size(); }
};

// Throws unless the field lives on a gsharp-frame grid.
void require_gsharp(const GridPtr& g, const char* who);

// Zero-threshold max(1e-12 ||f||_inf, 1e-300) on the xi = 0 slice, values
// below it set to 0.
RealField snap_real(const SymbolField& f, double* threshold = nullptr);

// Axes of the (t, tau, y, eta) lattice a field on Sigma_2 depends on, t always included.
std::uint32_t leaf_space_mask(const RealField& f_sigma2);

struct XSets {
  Layout layout;             // t plus the y/tau/eta axes f depends on
  std::vector<char> plus;    // some s <= t with max_x f(s) > 0
  std::vector<char> minus;   // some s >= t with min_x f(s) < 0
  std::vector<char> zero;    // neither
  // Sign class used for delta: +1 on X+ \ X-, -1 on X- \ X+, 0 elsewhere.
  // For sign structures without + -> - transitions X+ and X- are disjoint
  // and this is the plain sgn.
  std::vector<int> cls;
};

XSets compute_x_sets(const SymbolField& f);

// Euclidean distance (frame units) from every point of `layout` to the
// nearest marked point; +inf when there is none. Separable exact transform,
// t axis first. With half_axis >= 0 a mark at index j on that axis stands for
// the midpoint between j and j+1.
std::vector<double> lattice_distance(const Layout& layout, const std::vector<char>& source, int half_axis = -1);

// delta = cls * min(d, h^-1/2), d = distance to the neutral class. Where
// opposite classes touch along a lattice edge the edge midpoint counts as
// neutral too, so a sign change between lattice points does not make delta jump.
WeightField signed_delta(const SymbolField& f, WeightField* distance = nullptr);

// |f'| (Euclidean gradient norm) and |f''| (spectral norm of the Hessian),
// gsharp derivatives over every phase axis f depends on.
struct Derivatives {
  RealField grad_norm;
  RealField hess_norm;
};
Derivatives derivative_norms(const RealField& f);

// Factor c <= 1 with sup |c f'| <= h^-1/2 (1 - 1e-12).
double gradient_rescale_factor(const RealField& f);

// H^-1/2 = 1 + |delta| + |f'| / (|f''| + h^1/4 |f'|^1/2 + h^1/2).
WeightField compute_H(const RealField& f, const WeightField& delta, const Derivatives* d = nullptr);

// M = |f| + |f'| H^-1/2 + |f''| H^-1 + h^1/2 H^-3/2.
WeightField compute_M(const RealField& f, const WeightField& Hm12, const Derivatives* d = nullptr);

// H_1^-1/2 = max over the x-leaf of H^-1/2 at xi = 0.
WeightField compute_H1(const WeightField& Hm12);

// m(t,w) = min over t1 <= t <= t2 of delta(t2) - delta(t1) + max(E(t1), E(t2))/2,
// E = H_1^1/2 <delta>^2. t_window > 0 restricts t1, t2 to |t| <= t_window.
WeightField compute_m(const WeightField& delta, const WeightField& H1m12, double t_window = 0.0);

// Reference O(T^3) evaluation of the same minimum.
WeightField compute_m_bruteforce(const WeightField& delta, const WeightField& H1m12, double t_window = 0.0);

struct AlphaResult {
  WeightField alpha;
  std::vector<char> mask; // on alpha's layout
  bool empty = true;
  double min_ratio = 0.0; // min alpha / (M H^1/2) on the mask
};

AlphaResult factorize_alpha(const RealField& f, const WeightField& delta, const WeightField& Hm12,
                            const WeightField& M, double kappa1 = 0.05, const Derivatives* d = nullptr);

struct WeightOptions {
  double kappa1 = 0.05;
  double t_window = 0.0;
};

// Whole pipeline on a field in any frame (moved to gsharp).
struct WeightPipeline {
  GridPtr grid;  // gsharp
  double h = 0.0;
  double rescale = 1.0;
  double threshold = 0.0;
  RealField f;   // snapped and rescaled
  Derivatives deriv;
  XSets xsets;
  WeightField d, delta, Hm12, M, H1m12, m;
  AlphaResult alpha;
  std::vector<std::string> log;
};

WeightPipeline run_weights(const SymbolField& f, const WeightOptions& opt = {});

struct BoundAudit {
  std::string name;
  bool exact = true;     // exact inequality (no tolerance) or measured constant
  bool pass = false;
  double worst = 0.0;    // smallest slack (>= 0 when the bound holds), or the measured constant
  double limit = 0.0;    // bound on the measured constant when !exact
  std::string detail;
};

std::vector<BoundAudit> audit_weights(const WeightPipeline& w);

}  // namespace mlab

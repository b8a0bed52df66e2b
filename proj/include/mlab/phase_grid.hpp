#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "mlab/error.hpp"

namespace mlab {

using cd = std::complex<double>;

enum class Role { t, x, y };
enum class Frame { standard, gsharp };

const char* role_name(Role r);
const char* frame_name(Frame f);

struct AxisConfig {
  Role role = Role::x;
  int points = 0;
  double extent = 0.0;      // standard units
  bool periodic = true;
  double dual_extent = 0.0; // 0 means "derive from the base lattice"
};

struct GridConfig {
  std::vector<AxisConfig> dims;
  double h = 1.0;
  Frame frame = Frame::standard;
};

/**
 * Discretized phase space T*R^d.
 *
 * Phase axes are numbered 0..d-1 for the base coordinates (in config order)
 * and d..2d-1 for their duals. Base coordinates are x_j = -L/2 + j*dx; the
 * dual lattice is the DFT-conjugate one, xi_k = (k - N/2)*2pi/L.
 *
 * Coordinates returned by coord()/spacing() are in the grid's frame: in the
 * gsharp frame base coordinates are divided by sqrt(h) and dual coordinates
 * multiplied by sqrt(h), so the metric dx^2/h + h dxi^2 becomes Euclidean.
 */
class PhaseGrid {
public:
  explicit PhaseGrid(GridConfig cfg);

  const GridConfig& config() const { return cfg_; }
  int base_count() const { return static_cast<int>(cfg_.dims.size()); }
  int axis_count() const { return 2 * base_count(); }
  double h() const { return cfg_.h; }
  Frame frame() const { return cfg_.frame; }

  bool is_dual(int axis) const { return axis >= base_count(); }
  int base_of(int axis) const { return is_dual(axis) ? axis - base_count() : axis; }
  int dual_of(int base) const { return base + base_count(); }
  Role role(int axis) const { return cfg_.dims[base_of(axis)].role; }
  int t_axis() const { return t_axis_; }
  std::vector<int> base_axes(Role r) const;

  int points(int axis) const { return cfg_.dims[base_of(axis)].points; }
  // Base periodicity flag; dual axes report the flag of their base axis.
  bool periodic(int axis) const { return cfg_.dims[base_of(axis)].periodic; }
  // Frame coordinate per standard unit along this axis.
  double scale(int axis) const;
  // g# coordinate per standard unit (1/sqrt(h) on base axes, sqrt(h) on duals).
  double gsharp_scale(int axis) const;
  double spacing(int axis) const;
  double extent(int axis) const { return spacing(axis) * points(axis); }
  double coord(int axis, int j) const;
  // Standard-frame spacing regardless of frame.
  double std_spacing(int axis) const;

  const std::string& name(int axis) const { return names_[axis]; }
  int axis_index(std::string_view name) const;

  std::size_t base_size() const;
  std::size_t phase_size() const;

  // Same lattice and h; frames may differ.
  bool same_lattice(const PhaseGrid& o) const;
  bool operator==(const PhaseGrid& o) const { return same_lattice(o) && frame() == o.frame(); }

private:
  GridConfig cfg_;
  int t_axis_ = -1;
  std::vector<std::string> names_;
};

using GridPtr = std::shared_ptr<const PhaseGrid>;

GridPtr build_grid(const GridConfig& cfg);
GridPtr reframe(const GridPtr& g, Frame f);
bool same_grid(const GridPtr& a, const GridPtr& b);

// Index bookkeeping for a field that depends only on the axes set in `mask`.
// Storage is row-major over the dependent axes in axis order.
class Layout {
public:
  Layout() = default;
  Layout(GridPtr grid, std::uint32_t mask);

  const GridPtr& grid() const { return grid_; }
  std::uint32_t mask() const { return mask_; }
  bool depends_on(int axis) const { return (mask_ >> axis) & 1u; }
  std::size_t size() const { return size_; }
  int extent_of(int axis) const { return dims_[axis]; }
  std::size_t stride(int axis) const { return strides_[axis]; }

  // idx holds one entry per phase axis; entries of independent axes are ignored.
  std::size_t offset(const std::vector<int>& idx) const;
  // Inverse of offset(); independent axes get 0.
  void unravel(std::size_t off, std::vector<int>& idx) const;
  // For every offset of *this, the offset of the same lattice point in src.
  std::vector<std::size_t> gather_from(const Layout& src) const;

private:
  GridPtr grid_;
  std::uint32_t mask_ = 0;
  std::vector<int> dims_;
  std::vector<std::size_t> strides_;
  std::size_t size_ = 1;
};

std::uint32_t full_mask(const PhaseGrid& g);

template <class T>
class BasicField {
public:
  BasicField() = default;
  BasicField(GridPtr grid, std::uint32_t mask, std::vector<T> values)
      : layout_(std::move(grid), mask), v_(std::move(values)) {
    if (v_.size() != layout_.size()) throw Error("field: value count does not match layout");
  }
  BasicField(GridPtr grid, std::uint32_t mask, T fill)
      : layout_(std::move(grid), mask), v_(layout_.size(), fill) {}

  static BasicField constant(GridPtr grid, T c) { return BasicField(std::move(grid), 0u, c); }

  // Samples fn(frame coordinates of all phase axes) at every lattice point of mask.
  template <class F>
  static BasicField sample(GridPtr grid, std::uint32_t mask, F&& fn) {
    BasicField out(grid, mask, T{});
    const auto& g = *grid;
    std::vector<int> idx(g.axis_count(), 0);
    std::vector<double> z(g.axis_count(), 0.0);
    for (std::size_t o = 0; o < out.size(); ++o) {
      out.layout_.unravel(o, idx);
      for (int a = 0; a < g.axis_count(); ++a) z[a] = out.layout_.depends_on(a) ? g.coord(a, idx[a]) : 0.0;
      out.v_[o] = fn(z);
    }
    return out;
  }

  const Layout& layout() const { return layout_; }
  const GridPtr& grid() const { return layout_.grid(); }
  std::uint32_t mask() const { return layout_.mask(); }
  bool depends_on(int axis) const { return layout_.depends_on(axis); }
  std::size_t size() const { return v_.size(); }
  const std::vector<T>& values() const { return v_; }
  std::vector<T>& values() { return v_; }
  T operator[](std::size_t o) const { return v_[o]; }
  T& operator[](std::size_t o) { return v_[o]; }
  T at(const std::vector<int>& idx) const { return v_[layout_.offset(idx)]; }

  // Same values on a grid with the same lattice but another frame.
  BasicField on_grid(GridPtr g) const {
    if (!g->same_lattice(*grid())) throw Error("field: lattice mismatch");
    return BasicField(std::move(g), mask(), v_);
  }
  // Broadcast to a larger dependence mask.
  BasicField expand(std::uint32_t mask) const {
    if ((mask & this->mask()) != this->mask()) throw Error("field: expand would drop axes");
    Layout L(grid(), mask);
    auto src = L.gather_from(layout_);
    std::vector<T> out(L.size());
    for (std::size_t o = 0; o < out.size(); ++o) out[o] = v_[src[o]];
    return BasicField(grid(), mask, std::move(out));
  }
  template <class F>
  auto map(F&& fn) const {
    using R = decltype(fn(T{}));
    std::vector<R> out(v_.size());
    for (std::size_t o = 0; o < v_.size(); ++o) out[o] = fn(v_[o]);
    return BasicField<R>(grid(), mask(), std::move(out));
  }
  double sup_abs() const {
    double s = 0.0;
    for (const auto& x : v_) s = std::max(s, static_cast<double>(std::abs(x)));
    return s;
  }

private:
  Layout layout_;
  std::vector<T> v_;
};

// Pointwise combination with broadcasting over the union of dependence masks.
template <class A, class B, class F>
auto combine(const BasicField<A>& a, const BasicField<B>& b, F&& fn) {
  if (!same_grid(a.grid(), b.grid())) throw Error("field: grid mismatch");
  using R = decltype(fn(A{}, B{}));
  const std::uint32_t m = a.mask() | b.mask();
  Layout L(a.grid(), m);
  auto ia = L.gather_from(a.layout());
  auto ib = L.gather_from(b.layout());
  std::vector<R> out(L.size());
  for (std::size_t o = 0; o < out.size(); ++o) out[o] = fn(a[ia[o]], b[ib[o]]);
  return BasicField<R>(a.grid(), m, std::move(out));
}

// Restriction to lattice index `index` along `axis`; the result no longer
// depends on that axis.
template <class T>
BasicField<T> slice(const BasicField<T>& f, int axis, int index) {
  if (!f.depends_on(axis)) return f;
  const std::uint32_t m = f.mask() & ~(1u << axis);
  Layout L(f.grid(), m);
  std::vector<int> idx(f.grid()->axis_count(), 0);
  std::vector<T> out(L.size());
  for (std::size_t o = 0; o < out.size(); ++o) {
    L.unravel(o, idx);
    idx[axis] = index;
    out[o] = f.at(idx);
  }
  return BasicField<T>(f.grid(), m, std::move(out));
}

// Reduction over the axes in `axes` with a binary op (max, min, ...).
template <class T, class Op>
BasicField<T> reduce(const BasicField<T>& f, std::uint32_t axes, Op op) {
  const std::uint32_t m = f.mask() & ~axes;
  if (m == f.mask()) return f;
  Layout L(f.grid(), m);
  std::vector<T> out(L.size());
  std::vector<char> seen(L.size(), 0);
  std::vector<int> idx(f.grid()->axis_count(), 0);
  for (std::size_t o = 0; o < f.size(); ++o) {
    f.layout().unravel(o, idx);
    const std::size_t k = L.offset(idx);
    out[k] = seen[k] ? op(out[k], f[o]) : f[o];
    seen[k] = 1;
  }
  return BasicField<T>(f.grid(), m, std::move(out));
}

using SymbolField = BasicField<cd>;
using RealField = BasicField<double>;

SymbolField operator+(const SymbolField& a, const SymbolField& b);
SymbolField operator-(const SymbolField& a, const SymbolField& b);
SymbolField operator*(const SymbolField& a, const SymbolField& b);
SymbolField operator*(cd s, const SymbolField& a);
SymbolField operator+(const SymbolField& a, cd s);

RealField real_part(const SymbolField& a);
RealField imag_part(const SymbolField& a);
SymbolField to_complex(const RealField& a);
SymbolField conj(const SymbolField& a);
bool is_real(const SymbolField& a, double tol = 0.0);

// Derivative along a phase axis in the grid's frame coordinates, 4th-order
// central stencil, periodic wrap on periodic base axes, one-sided near edges.
SymbolField partial(const SymbolField& f, int axis, int order);

// g#-normalized derivative: the derivative with respect to g#-orthonormal
// coordinates whatever the frame (in the standard frame base derivatives pick
// up h^{1/2} and dual derivatives h^{-1/2} per order).
SymbolField fd_derivative(const SymbolField& f, int axis, int order);

// sup over the grid of the largest g#-normalized k-th derivative, k <= 3.
double seminorm(const SymbolField& f, int k);

// Finite-difference weights (Fornberg) for derivative `order` at z from nodes.
std::vector<double> fd_weights(double z, const std::vector<double>& nodes, int order);

}  // namespace mlab

#include "mlab/phase_grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace mlab {

const char* role_name(Role r) {
  switch (r) {
    case Role::t: return "t";
    case Role::x: return "x";
    case Role::y: return "y";
  }
  return "?";
}

const char* frame_name(Frame f) { return f == Frame::standard ? "standard" : "gsharp"; }

namespace {

bool power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

}  // namespace

PhaseGrid::PhaseGrid(GridConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.dims.empty()) throw Error("grid: no dimensions");
  if (cfg_.dims.size() > 8) throw Error("grid: at most 8 base dimensions");
  if (!(cfg_.h > 0.0 && cfg_.h <= 1.0)) throw Error("grid: h must lie in (0, 1]");
  int n_t = 0, n_x = 0, n_y = 0;
  std::vector<std::string> base, dual;
  for (std::size_t i = 0; i < cfg_.dims.size(); ++i) {
    auto& d = cfg_.dims[i];
    if (d.points < 4 || !power_of_two(d.points))
      throw Error("grid: dimension " + std::to_string(i) + " point count must be a power of two >= 4");
    if (!(d.extent > 0.0) || !std::isfinite(d.extent))
      throw Error("grid: dimension " + std::to_string(i) + " extent must be positive");
    const double derived = 2.0 * std::numbers::pi * d.points / d.extent;
    if (d.dual_extent != 0.0 && std::abs(d.dual_extent - derived) > 1e-9 * derived)
      throw Error("grid: dimension " + std::to_string(i) + " dual extent must equal 2*pi*N/L = " +
                  std::to_string(derived));
    d.dual_extent = derived;
    switch (d.role) {
      case Role::t:
        if (++n_t > 1) throw Error("grid: more than one t dimension");
        t_axis_ = static_cast<int>(i);
        base.push_back("t");
        dual.push_back("tau");
        break;
      case Role::x:
        base.push_back("x" + std::to_string(++n_x));
        dual.push_back("xi" + std::to_string(n_x));
        break;
      case Role::y:
        base.push_back("y" + std::to_string(++n_y));
        dual.push_back("eta" + std::to_string(n_y));
        break;
    }
  }
  if (n_t == 0) throw Error("grid: missing t dimension");
  names_ = base;
  names_.insert(names_.end(), dual.begin(), dual.end());
}

std::vector<int> PhaseGrid::base_axes(Role r) const {
  std::vector<int> out;
  for (int i = 0; i < base_count(); ++i)
    if (cfg_.dims[i].role == r) out.push_back(i);
  return out;
}

double PhaseGrid::gsharp_scale(int axis) const {
  return is_dual(axis) ? std::sqrt(cfg_.h) : 1.0 / std::sqrt(cfg_.h);
}

double PhaseGrid::scale(int axis) const {
  return cfg_.frame == Frame::gsharp ? gsharp_scale(axis) : 1.0;
}

double PhaseGrid::std_spacing(int axis) const {
  const auto& d = cfg_.dims[base_of(axis)];
  return is_dual(axis) ? 2.0 * std::numbers::pi / d.extent : d.extent / d.points;
}

double PhaseGrid::spacing(int axis) const { return std_spacing(axis) * scale(axis); }

double PhaseGrid::coord(int axis, int j) const {
  const int n = points(axis);
  const double s = is_dual(axis) ? (j - n / 2) * std_spacing(axis)
                                 : -0.5 * cfg_.dims[base_of(axis)].extent + j * std_spacing(axis);
  return s * scale(axis);
}

int PhaseGrid::axis_index(std::string_view name) const {
  for (int a = 0; a < axis_count(); ++a)
    if (names_[a] == name) return a;
  return -1;
}

std::size_t PhaseGrid::base_size() const {
  std::size_t n = 1;
  for (const auto& d : cfg_.dims) n *= static_cast<std::size_t>(d.points);
  return n;
}

std::size_t PhaseGrid::phase_size() const { return base_size() * base_size(); }

bool PhaseGrid::same_lattice(const PhaseGrid& o) const {
  if (cfg_.h != o.cfg_.h || cfg_.dims.size() != o.cfg_.dims.size()) return false;
  for (std::size_t i = 0; i < cfg_.dims.size(); ++i) {
    const auto &a = cfg_.dims[i], &b = o.cfg_.dims[i];
    if (a.role != b.role || a.points != b.points || a.extent != b.extent || a.periodic != b.periodic) return false;
  }
  return true;
}

GridPtr build_grid(const GridConfig& cfg) { return std::make_shared<const PhaseGrid>(cfg); }

GridPtr reframe(const GridPtr& g, Frame f) {
  if (g->frame() == f) return g;
  GridConfig c = g->config();
  c.frame = f;
  return build_grid(c);
}

bool same_grid(const GridPtr& a, const GridPtr& b) { return a == b || (a && b && *a == *b); }

std::uint32_t full_mask(const PhaseGrid& g) { return (1u << g.axis_count()) - 1u; }

// ---------------------------------------------------------------- Layout

Layout::Layout(GridPtr grid, std::uint32_t mask) : grid_(std::move(grid)), mask_(mask) {
  const int A = grid_->axis_count();
  if (mask_ >> A) throw Error("layout: mask names axes outside the grid");
  dims_.assign(A, 1);
  strides_.assign(A, 0);
  for (int a = 0; a < A; ++a)
    if (depends_on(a)) dims_[a] = grid_->points(a);
  std::size_t s = 1;
  for (int a = A - 1; a >= 0; --a) {
    if (!depends_on(a)) continue;
    strides_[a] = s;
    s *= static_cast<std::size_t>(dims_[a]);
  }
  size_ = s;
}

std::size_t Layout::offset(const std::vector<int>& idx) const {
  std::size_t o = 0;
  for (std::size_t a = 0; a < strides_.size(); ++a) o += strides_[a] * static_cast<std::size_t>(idx[a]);
  return o;
}

void Layout::unravel(std::size_t off, std::vector<int>& idx) const {
  idx.assign(dims_.size(), 0);
  for (std::size_t a = 0; a < dims_.size(); ++a) {
    if (!strides_[a]) continue;
    idx[a] = static_cast<int>(off / strides_[a]);
    off %= strides_[a];
  }
}

std::vector<std::size_t> Layout::gather_from(const Layout& src) const {
  if ((src.mask_ & mask_) != src.mask_) throw Error("layout: source depends on axes outside target");
  std::vector<std::size_t> out(size_);
  std::vector<int> idx(dims_.size(), 0);
  std::size_t so = 0;
  // odometer over the target lattice, updating the source offset incrementally
  for (std::size_t o = 0; o < size_; ++o) {
    out[o] = so;
    for (int a = static_cast<int>(dims_.size()) - 1; a >= 0; --a) {
      if (dims_[a] == 1) continue;
      if (++idx[a] < dims_[a]) {
        so += src.strides_[a];
        break;
      }
      so -= src.strides_[a] * static_cast<std::size_t>(dims_[a] - 1);
      idx[a] = 0;
    }
  }
  return out;
}

// ---------------------------------------------------------------- arithmetic

SymbolField operator+(const SymbolField& a, const SymbolField& b) {
  return combine(a, b, [](cd x, cd y) { return x + y; });
}
SymbolField operator-(const SymbolField& a, const SymbolField& b) {
  return combine(a, b, [](cd x, cd y) { return x - y; });
}
SymbolField operator*(const SymbolField& a, const SymbolField& b) {
  return combine(a, b, [](cd x, cd y) { return x * y; });
}
SymbolField operator*(cd s, const SymbolField& a) {
  return a.map([s](cd x) { return s * x; });
}
SymbolField operator+(const SymbolField& a, cd s) {
  return a.map([s](cd x) { return x + s; });
}

RealField real_part(const SymbolField& a) { return a.map([](cd x) { return x.real(); }); }
RealField imag_part(const SymbolField& a) { return a.map([](cd x) { return x.imag(); }); }
SymbolField to_complex(const RealField& a) { return a.map([](double x) { return cd(x, 0.0); }); }
SymbolField conj(const SymbolField& a) { return a.map([](cd x) { return std::conj(x); }); }

bool is_real(const SymbolField& a, double tol) {
  for (const auto& x : a.values())
    if (std::abs(x.imag()) > tol) return false;
  return true;
}

// ---------------------------------------------------------------- derivatives

std::vector<double> fd_weights(double z, const std::vector<double>& x, int m) {
  // Fornberg, Math. Comp. 51 (1988); returns weights for derivative m only.
  const int n = static_cast<int>(x.size()) - 1;
  std::vector<std::vector<double>> c(n + 1, std::vector<double>(m + 1, 0.0));
  double c1 = 1.0, c4 = x[0] - z;
  c[0][0] = 1.0;
  for (int i = 1; i <= n; ++i) {
    const int mn = std::min(i, m);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = x[i] - z;
    for (int j = 0; j < i; ++j) {
      const double c3 = x[i] - x[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k) c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
        c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
      }
      for (int k = mn; k >= 1; --k) c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
      c[j][0] = c4 * c[j][0] / c3;
    }
    c1 = c2;
  }
  std::vector<double> w(n + 1);
  for (int i = 0; i <= n; ++i) w[i] = c[i][m];
  return w;
}

namespace {

struct Stencil {
  int first;                 // index of the first node
  std::vector<double> w;
};

// Stencil for node j on an axis of n points, in units of one lattice step.
Stencil stencil_at(int j, int n, int order, bool periodic) {
  static const std::vector<double> central1 = {1.0 / 12, -8.0 / 12, 0.0, 8.0 / 12, -1.0 / 12};
  static const std::vector<double> central2 = {-1.0 / 12, 16.0 / 12, -30.0 / 12, 16.0 / 12, -1.0 / 12};
  const int width = std::min(5, n);
  if (periodic || (j >= 2 && j + 2 < n && width == 5)) return {j - 2, order == 1 ? central1 : central2};
  const int first = std::clamp(j - width / 2, 0, n - width);
  std::vector<double> nodes(width);
  for (int i = 0; i < width; ++i) nodes[i] = first + i;
  return {first, fd_weights(j, nodes, order)};
}

}  // namespace

SymbolField partial(const SymbolField& f, int axis, int order) {
  if (order != 1 && order != 2) throw Error("fd_derivative: order must be 1 or 2");
  const auto& g = *f.grid();
  if (axis < 0 || axis >= g.axis_count()) throw Error("fd_derivative: invalid coordinate index");
  if (!f.depends_on(axis)) return SymbolField(f.grid(), f.mask(), cd(0.0));
  const int n = g.points(axis);
  const bool periodic = !g.is_dual(axis) && g.periodic(axis);
  const double step = g.spacing(axis);
  const double inv = order == 1 ? 1.0 / step : 1.0 / (step * step);
  const std::size_t stride = f.layout().stride(axis);
  std::vector<Stencil> st;
  st.reserve(n);
  for (int j = 0; j < n; ++j) st.push_back(stencil_at(j, n, order, periodic));

  std::vector<cd> out(f.size());
  const auto& v = f.values();
  const std::size_t block = stride * static_cast<std::size_t>(n);
  for (std::size_t base = 0; base < f.size(); base += block) {
    for (std::size_t inner = 0; inner < stride; ++inner) {
      const std::size_t o0 = base + inner;
      for (int j = 0; j < n; ++j) {
        const auto& s = st[j];
        cd acc = 0.0;
        for (std::size_t k = 0; k < s.w.size(); ++k) {
          int q = s.first + static_cast<int>(k);
          if (periodic) q = ((q % n) + n) % n;
          acc += s.w[k] * v[o0 + stride * static_cast<std::size_t>(q)];
        }
        out[o0 + stride * static_cast<std::size_t>(j)] = acc * inv;
      }
    }
  }
  return SymbolField(f.grid(), f.mask(), std::move(out));
}

SymbolField fd_derivative(const SymbolField& f, int axis, int order) {
  SymbolField d = partial(f, axis, order);
  const auto& g = *f.grid();
  if (g.frame() == Frame::gsharp) return d;
  const double c = 1.0 / g.gsharp_scale(axis);
  return (order == 1 ? c : c * c) * d;
}

double seminorm(const SymbolField& f, int k) {
  if (k < 0 || k > 3) throw Error("seminorm: derivative order must be 0..3");
  if (k == 0) return f.sup_abs();
  std::vector<int> axes;
  for (int a = 0; a < f.grid()->axis_count(); ++a)
    if (f.depends_on(a)) axes.push_back(a);
  double best = 0.0;
  // nondecreasing multi-indices over the dependent axes; repeated pairs use the
  // second-order stencil
  std::vector<int> pick(k, 0);
  std::function<void(int, int)> rec = [&](int pos, int from) {
    if (pos == k) {
      SymbolField d = f;
      int i = 0;
      while (i < k) {
        if (i + 1 < k && pick[i] == pick[i + 1]) {
          d = fd_derivative(d, axes[pick[i]], 2);
          i += 2;
        } else {
          d = fd_derivative(d, axes[pick[i]], 1);
          i += 1;
        }
      }
      best = std::max(best, d.sup_abs());
      return;
    }
    for (int a = from; a < static_cast<int>(axes.size()); ++a) {
      pick[pos] = a;
      rec(pos + 1, a);
    }
  };
  if (!axes.empty()) rec(0, 0);
  return best;
}

}  // namespace mlab

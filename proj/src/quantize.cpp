#include "mlab/quantize.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>


namespace mlab {

const char* quantization_name(Quantization q) {
  switch (q) {
    case Quantization::weyl: return "weyl";
    case Quantization::kn: return "kn";
    case Quantization::wick: return "wick";
  }
  return "?";
}

namespace {

constexpr std::size_t kMaxTableEntries = std::size_t(1) << 25;

// Dense row-major array with an explicit shape.
struct Array {
  std::vector<int> shape;
  std::vector<cd> data;

  std::size_t stride(int axis) const {
    std::size_t s = 1;
    for (std::size_t a = axis + 1; a < shape.size(); ++a) s *= shape[a];
    return s;
  }
};

// Replaces every line along `axis` by fn(line), which may change its length.
template <class F>
Array along_axis(const Array& in, int axis, int out_len, F&& fn) {
  Array out;
  out.shape = in.shape;
  out.shape[axis] = out_len;
  std::size_t total = 1;
  for (int s : out.shape) total *= s;
  out.data.assign(total, cd(0.0));
  const std::size_t si = in.stride(axis), so = out.stride(axis);
  const int n = in.shape[axis];
  std::size_t outer = 1;
  for (int a = 0; a < axis; ++a) outer *= in.shape[a];
  std::vector<cd> line(n), res;
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t i = 0; i < si; ++i) {
      const std::size_t b_in = o * si * n + i, b_out = o * so * out_len + i;
      for (int k = 0; k < n; ++k) line[k] = in.data[b_in + k * si];
      res = fn(line);
      for (int k = 0; k < out_len; ++k) out.data[b_out + k * so] = res[k];
    }
  return out;
}

// Values at x_0 + p*dx/2, p = 0..2N-1, by trigonometric interpolation along
// `axis` (zero padding with the Nyquist coefficient split evenly).
Array half_grid_trig(Array in, int axis) {
  const int n = in.shape[axis];
  fft_axis(in.data, in.shape, axis, -1);
  Array out;
  out.shape = in.shape;
  out.shape[axis] = 2 * n;
  std::size_t total = 1;
  for (int s : out.shape) total *= s;
  out.data.assign(total, cd(0.0));
  const std::size_t si = in.stride(axis), so = out.stride(axis);
  std::size_t outer = 1;
  for (int a = 0; a < axis; ++a) outer *= in.shape[a];
  const double scale = 1.0 / n;
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t i = 0; i < si; ++i) {
      const cd* src = in.data.data() + o * si * n + i;
      cd* dst = out.data.data() + o * so * 2 * n + i;
      for (int k = 0; k < n / 2; ++k) dst[k * so] = scale * src[k * si];
      dst[(n / 2) * so] = 0.5 * scale * src[(n / 2) * si];
      dst[(2 * n - n / 2) * so] = 0.5 * scale * src[(n / 2) * si];
      for (int k = 1; k < n / 2; ++k) dst[(2 * n - k) * so] = scale * src[(n - k) * si];
    }
  fft_axis(out.data, out.shape, axis, +1);
  return out;
}

// Local cubic Lagrange interpolation onto the half grid.
std::vector<cd> half_grid_cubic(const std::vector<cd>& v) {
  const int n = static_cast<int>(v.size());
  const int width = std::min(4, n);
  std::vector<cd> w(2 * n);
  for (int p = 0; p < 2 * n; ++p) {
    if (p % 2 == 0) {
      w[p] = v[p / 2];
      continue;
    }
    const double z = 0.5 * p;
    const int first = std::clamp(static_cast<int>(std::floor(z)) - width / 2 + 1, 0, n - width);
    cd acc = 0.0;
    for (int i = 0; i < width; ++i) {
      double li = 1.0;
      for (int j = 0; j < width; ++j)
        if (j != i) li *= (z - (first + j)) / double(i - j);
      acc += li * v[first + i];
    }
    w[p] = acc;
  }
  return w;
}

// G(pos, d) = (-1)^d ifft_k(a)[d] on a centered dual lattice.
void dual_to_difference(Array& arr, int axis) {
  const int n = arr.shape[axis];
  fft_axis(arr.data, arr.shape, axis, +1);
  const std::size_t si = arr.stride(axis);
  for (std::size_t o = 0; o < arr.data.size(); ++o) {
    const int d = static_cast<int>((o / si) % n);
    arr.data[o] *= (d % 2 ? -1.0 : 1.0) / n;
  }
}

struct ActiveAxis {
  int base;        // base axis index
  int n;           // point count
  bool periodic;
  bool positional; // symbol depends on the base coordinate
};

// Shared assembly for Weyl (midpoint) and KN (left point) kernels.
// Unit-mass Gaussian weights exp(-(shift + j dg)^2), |shift + j dg| <= 6, for j = lo..lo+len-1.
struct GaussWeights {
  int lo = 0;
  std::vector<double> w;
};

// `mass` divides the weights; 0 means their own sum.
GaussWeights gauss_weights(double shift, double dg, double mass = 0.0) {
  GaussWeights k;
  k.lo = static_cast<int>(std::ceil((-6.0 - shift) / dg));
  const int hi = static_cast<int>(std::floor((6.0 - shift) / dg));
  double sum = 0.0;
  for (int j = k.lo; j <= hi; ++j) {
    const double z = shift + j * dg;
    k.w.push_back(std::exp(-z * z));
    sum += k.w.back();
  }
  for (auto& x : k.w) x /= mass > 0.0 ? mass : sum;
  return k;
}

double gauss_mass(double dg) {
  double sum = 0.0;
  for (double x : gauss_weights(0.0, dg, 1.0).w) sum += x;
  return sum;
}

// Line extension used by the regularization: wrap, or point reflection at the ends.
cd extended(const std::vector<cd>& line, int q, bool wrap) {
  const int n = static_cast<int>(line.size());
  if (wrap) return line[((q % n) + n) % n];
  if (q < 0) return 2.0 * line[0] - extended(line, -q, false);
  if (q > n - 1) return 2.0 * line[n - 1] - extended(line, 2 * (n - 1) - q, false);
  return line[q];
}

// Gaussian regularization along one line, evaluated directly on the half grid
// x_0 + p dx/2 (p = 0..2N-1) instead of interpolating its lattice values.
std::vector<cd> half_grid_gauss(const std::vector<cd>& line, const GaussWeights& even, const GaussWeights& odd,
                                bool wrap) {
  const int n = static_cast<int>(line.size());
  // samples at c - j for j in [lo, lo + len), c = 0..n-1
  const int margin = static_cast<int>(std::max(even.w.size(), odd.w.size())) + std::abs(std::min(even.lo, odd.lo)) + 1;
  std::vector<cd> ext(n + 2 * margin);
  for (int q = -margin; q < n + margin; ++q) ext[q + margin] = extended(line, q, wrap);
  std::vector<cd> out(2 * n);
  for (int p = 0; p < 2 * n; ++p) {
    const GaussWeights& k = p % 2 ? odd : even;
    const cd* e = ext.data() + margin + p / 2 - k.lo;
    cd acc = 0.0;
    for (std::size_t i = 0; i < k.w.size(); ++i) acc += k.w[i] * *(e - static_cast<std::ptrdiff_t>(i));
    out[p] = acc;
  }
  return out;
}

// Periodic version of half_grid_gauss: the zero-upsampled line convolved on
// Z_2N with the half-grid kernel, done spectrally.
Array half_grid_gauss_periodic(Array in, int axis, const GaussWeights& even, const GaussWeights& odd) {
  const int n = in.shape[axis];
  std::vector<cd> kh(2 * n, cd(0.0));
  for (std::size_t i = 0; i < even.w.size(); ++i) {
    const int r = 2 * (even.lo + static_cast<int>(i));
    kh[((r % (2 * n)) + 2 * n) % (2 * n)] += even.w[i];
  }
  for (std::size_t i = 0; i < odd.w.size(); ++i) {
    const int r = 2 * (odd.lo + static_cast<int>(i)) + 1;
    kh[((r % (2 * n)) + 2 * n) % (2 * n)] += odd.w[i];
  }
  fft_axis(kh, {2 * n}, 0, -1);
  fft_axis(in.data, in.shape, axis, -1);
  Array out;
  out.shape = in.shape;
  out.shape[axis] = 2 * n;
  std::size_t total = 1;
  for (int s : out.shape) total *= s;
  out.data.assign(total, cd(0.0));
  const std::size_t si = in.stride(axis), so = out.stride(axis);
  std::size_t outer = 1;
  for (int a = 0; a < axis; ++a) outer *= in.shape[a];
  // the kernel is even, so its transform is real
  std::vector<double> scale(2 * n);
  for (int m = 0; m < 2 * n; ++m) scale[m] = kh[m].real() / double(2 * n);
  for (std::size_t o = 0; o < outer; ++o)
    for (int m = 0; m < 2 * n; ++m) {
      const cd* src = in.data.data() + (o * n + (m % n)) * si;
      cd* dst = out.data.data() + (o * 2 * n + m) * so;
      for (std::size_t i = 0; i < si; ++i) dst[i] = src[i] * scale[m];
    }
  fft_axis(out.data, out.shape, axis, +1);
  return out;
}

void warn_short_axis(const PhaseGrid& g, int ax, std::vector<std::string>* warnings) {
  const double dg = g.std_spacing(ax) * g.gsharp_scale(ax);
  const int n = g.points(ax);
  if (warnings && !g.periodic(ax) && n * dg < 12.0)
    warnings->push_back("gaussian_regularize: axis " + g.name(ax) + " spans " + std::to_string(n * dg) +
                        " g# units (< 12); truncation bias near the edges");
}

// smooth_base: base axes whose midpoint values come from half_grid_gauss
// (the symbol is then taken as not yet regularized along them).
DiscreteOperator quantize_impl(const SymbolField& a, bool midpoint, Quantization tag, std::string provenance,
                               std::uint32_t smooth_base = 0) {
  const auto& g = *a.grid();
  if (g.frame() != Frame::standard) throw Error("quantize: symbol must be sampled in the standard frame");
  if (g.base_size() > kMaxOperatorDim) throw Error("quantize: base lattice exceeds dense operator cap");
  const int d = g.base_count();

  std::vector<ActiveAxis> act;
  for (int b = 0; b < d; ++b)
    if (a.depends_on(b) || a.depends_on(d + b)) act.push_back({b, g.points(b), g.periodic(b), a.depends_on(b)});
  const int r = static_cast<int>(act.size());

  // Table over (positions..., differences...) for the active axes.
  std::uint32_t mask = 0;
  for (const auto& ax : act) mask |= (ax.positional ? 1u << ax.base : 0u) | (1u << (d + ax.base));
  SymbolField full = a.expand(mask);
  std::size_t entries = 1;
  for (const auto& ax : act) entries *= std::size_t(ax.n) * (ax.positional ? (midpoint ? 2 * ax.n : ax.n) : 1);
  if (entries > kMaxTableEntries) throw Error("quantize: kernel table too large");

  Array tab;
  for (const auto& ax : act)
    if (ax.positional) tab.shape.push_back(ax.n);
  for (const auto& ax : act) tab.shape.push_back(ax.n);
  tab.data = full.values();  // layout order: base axes then dual axes, as here
  int n_pos = 0;
  for (const auto& ax : act) n_pos += ax.positional ? 1 : 0;
  // the dual transforms and the midpoint interpolation act on different axes
  // and commute; transforming first keeps the FFTs on the smaller array
  for (int k = 0; k < r; ++k) dual_to_difference(tab, n_pos + k);
  int slot = 0;
  for (const auto& ax : act) {
    if (!ax.positional) continue;
    if (midpoint && ((smooth_base >> ax.base) & 1u)) {
      const double dg = g.std_spacing(ax.base) * g.gsharp_scale(ax.base);
      const bool wrap = ax.periodic;
      // one mass for both parities: each shifted Gaussian then quantizes to
      // a rank-one kernel on the lattice (odd midpoints carry a relative
      // mass defect ~ exp(-pi^2/dg^2))
      const double mass = gauss_mass(dg);
      const GaussWeights even = gauss_weights(0.0, dg, mass), odd = gauss_weights(0.5 * dg, dg, mass);
      tab = wrap ? half_grid_gauss_periodic(std::move(tab), slot, even, odd)
                 : along_axis(tab, slot, 2 * ax.n,
                              [&](const std::vector<cd>& v) { return half_grid_gauss(v, even, odd, false); });
    } else if (midpoint) {
      tab = ax.periodic ? half_grid_trig(std::move(tab), slot) : along_axis(tab, slot, 2 * ax.n, half_grid_cubic);
    }
    ++slot;
  }

  std::vector<std::size_t> tstride(tab.shape.size());
  for (std::size_t k = 0; k < tab.shape.size(); ++k) tstride[k] = tab.stride(static_cast<int>(k));

  // Per-axis (row, column) contributions: table offsets and midpoint weights.
  struct Choice {
    std::size_t off[2];
    double w[2];
    int count;
  };
  std::vector<std::vector<Choice>> choice(r);
  int s = 0;
  for (int k = 0; k < r; ++k) {
    const int n = act[k].n;
    const std::size_t ps = act[k].positional ? tstride[s++] : 0;
    choice[k].resize(static_cast<std::size_t>(n) * n);
    for (int j = 0; j < n; ++j)
      for (int l = 0; l < n; ++l) {
        const int diff = j - l;
        const std::size_t dterm = tstride[n_pos + k] * static_cast<std::size_t>(((diff % n) + n) % n);
        Choice c{{dterm, 0}, {1.0, 0.0}, 1};
        if (act[k].positional) {
          if (!midpoint) {
            c.off[0] += ps * j;
          } else if (!act[k].periodic) {
            c.off[0] += ps * static_cast<std::size_t>(j + l);
          } else {
            int sd = ((diff % n) + n) % n;
            if (sd > n / 2) sd -= n;
            if (sd == n / 2) {
              // antipodal pair: both midpoints, half weight each
              const int h1 = (2 * l + n / 2) % (2 * n);
              const int h2 = ((2 * l - n / 2) % (2 * n) + 2 * n) % (2 * n);
              c = {{dterm + ps * h1, dterm + ps * h2}, {0.5, 0.5}, 2};
            } else {
              c.off[0] += ps * static_cast<std::size_t>(((2 * l + sd) % (2 * n) + 2 * n) % (2 * n));
            }
          }
        }
        choice[k][static_cast<std::size_t>(j) * n + l] = c;
      }
  }

  // Active-space kernel.
  std::size_t n_act = 1;
  for (const auto& ax : act) n_act *= ax.n;
  std::vector<std::vector<int>> digits(n_act, std::vector<int>(r));
  for (std::size_t q = 0; q < n_act; ++q) {
    std::size_t rem = q;
    for (int k = r - 1; k >= 0; --k) {
      digits[q][k] = static_cast<int>(rem % act[k].n);
      rem /= act[k].n;
    }
  }
  Eigen::MatrixXcd K(n_act, n_act);
  std::vector<const Choice*> ch(r);
  for (std::size_t lc = 0; lc < n_act; ++lc) {
    const auto& L = digits[lc];
    for (std::size_t jr = 0; jr < n_act; ++jr) {
      const auto& J = digits[jr];
      std::size_t off = 0;
      int split = 0;
      for (int k = 0; k < r; ++k) {
        ch[k] = &choice[k][static_cast<std::size_t>(J[k]) * act[k].n + L[k]];
        off += ch[k]->off[0];
        split += ch[k]->count - 1;
      }
      if (!split) {
        K(jr, lc) = tab.data[off];
        continue;
      }
      // sum over the product of midpoint choices
      cd acc = 0.0;
      for (int m = 0; m < (1 << r); ++m) {
        std::size_t o = 0;
        double w = 1.0;
        bool ok = true;
        for (int k = 0; k < r && ok; ++k) {
          const int bit = (m >> k) & 1;
          ok = bit < ch[k]->count;
          if (ok) {
            o += ch[k]->off[bit];
            w *= ch[k]->w[bit];
          }
        }
        if (ok) acc += w * tab.data[o];
      }
      K(jr, lc) = acc;
    }
  }

  // Kronecker product with the identity on inactive axes.
  const std::size_t N = g.base_size();
  std::vector<std::size_t> act_idx(N), inact_idx(N);
  {
    std::vector<int> idx(d);
    for (std::size_t q = 0; q < N; ++q) {
      std::size_t rem = q;
      for (int b = d - 1; b >= 0; --b) {
        idx[b] = static_cast<int>(rem % g.points(b));
        rem /= g.points(b);
      }
      std::size_t ai = 0, ii = 0;
      for (int b = 0; b < d; ++b) {
        const bool is_act = std::any_of(act.begin(), act.end(), [b](const ActiveAxis& x) { return x.base == b; });
        if (is_act) ai = ai * g.points(b) + idx[b];
        else ii = ii * g.points(b) + idx[b];
      }
      act_idx[q] = ai;
      inact_idx[q] = ii;
    }
  }
  DiscreteOperator op;
  op.grid = a.grid();
  op.quantization = tag;
  op.provenance = std::move(provenance);
  if (n_act == N) {
    op.matrix = std::move(K);
    return op;
  }
  std::vector<std::vector<std::size_t>> groups(N / n_act);
  for (std::size_t q = 0; q < N; ++q) groups[inact_idx[q]].push_back(q);
  op.matrix = Eigen::MatrixXcd::Zero(N, N);
  for (const auto& grp : groups)
    for (std::size_t i : grp)
      for (std::size_t j : grp) op.matrix(i, j) = K(act_idx[i], act_idx[j]);
  return op;
}

}  // namespace

DiscreteOperator weyl_quantize(const SymbolField& a, std::string provenance) {
  return quantize_impl(a, true, Quantization::weyl, std::move(provenance));
}

DiscreteOperator kn_quantize(const SymbolField& a, std::string provenance) {
  return quantize_impl(a, false, Quantization::kn, std::move(provenance));
}

SymbolField kn_to_weyl(const SymbolField& a) {
  const auto& g = *a.grid();
  SymbolField b = a;
  for (int j = 0; j < g.base_count(); ++j) {
    if (!a.depends_on(j) || !a.depends_on(g.dual_of(j))) continue;
    // the h-factors of the two normalized derivatives cancel
    SymbolField m = fd_derivative(fd_derivative(a, j, 1), g.dual_of(j), 1);
    b = b + cd(0.0, 0.5) * m;
  }
  return b;
}

SymbolField gaussian_regularize(const SymbolField& a, std::vector<std::string>* warnings, std::uint32_t axes) {
  const auto& g = *a.grid();
  std::vector<cd> v = a.values();
  const auto& lay = a.layout();
  for (int ax = 0; ax < g.axis_count(); ++ax) {
    if (!((axes >> ax) & 1u)) continue;
    warn_short_axis(g, ax, warnings);
    if (!a.depends_on(ax)) continue;
    const double dg = g.std_spacing(ax) * g.gsharp_scale(ax);
    const int n = g.points(ax);
    const bool wrap = g.periodic(ax);
    const GaussWeights k = gauss_weights(0.0, dg);

    if (wrap) {
      // circular convolution with the periodized kernel, done spectrally
      std::vector<cd> kern(n, cd(0.0));
      for (std::size_t i = 0; i < k.w.size(); ++i) {
        const int j = k.lo + static_cast<int>(i);
        kern[((j % n) + n) % n] += k.w[i];
      }
      fft_axis(kern, {n}, 0, -1);
      std::vector<int> shape;
      for (int b = 0; b < g.axis_count(); ++b)
        if (a.depends_on(b)) shape.push_back(g.points(b));
      int pos = 0;
      for (int b = 0; b < ax; ++b) pos += a.depends_on(b) ? 1 : 0;
      fft_axis(v, shape, pos, -1);
      const std::size_t si = lay.stride(ax);
      for (std::size_t o = 0; o < v.size(); ++o) v[o] *= kern[(o / si) % n] / double(n);
      fft_axis(v, shape, pos, +1);
      continue;
    }
    const std::size_t stride = lay.stride(ax), block = stride * n;
    std::vector<cd> out(v.size()), line(n);
    for (std::size_t base = 0; base < v.size(); base += block)
      for (std::size_t inner = 0; inner < stride; ++inner) {
        const std::size_t o0 = base + inner;
        for (int q = 0; q < n; ++q) line[q] = v[o0 + stride * q];
        for (int q = 0; q < n; ++q) {
          cd acc = 0.0;
          for (std::size_t i = 0; i < k.w.size(); ++i) acc += k.w[i] * extended(line, q - (k.lo + static_cast<int>(i)), false);
          out[o0 + stride * q] = acc;
        }
      }
    v.swap(out);
  }
  return SymbolField(a.grid(), a.mask(), std::move(v));
}

std::uint32_t non_time_axes(const PhaseGrid& g) {
  std::uint32_t m = full_mask(g);
  if (g.t_axis() >= 0) m &= ~((1u << g.t_axis()) | (1u << g.dual_of(g.t_axis())));
  return m;
}

DiscreteOperator wick_quantize(const SymbolField& a, std::vector<std::string>* warnings, std::string provenance,
                               std::uint32_t axes) {
  // Dual axes are regularized up front; base axes are regularized straight
  // onto the half grid the Weyl midpoints live on, which keeps the kernel a
  // sum of nonnegative multiples of near-projections.
  const auto& g = *a.grid();
  std::uint32_t base_bits = 0;
  for (int b = 0; b < g.base_count(); ++b) base_bits |= 1u << b;
  for (int b = 0; b < g.base_count(); ++b)
    if ((axes >> b) & 1u) warn_short_axis(g, b, warnings);
  const SymbolField dual_smoothed = gaussian_regularize(a, warnings, axes & ~base_bits);
  return quantize_impl(dual_smoothed, true, Quantization::wick, std::move(provenance), axes & base_bits);
}

SymbolField eval_semiclassical(const SymbolExpr& e, const GridPtr& grid, double h) {
  const auto& g = *grid;
  std::uint32_t mask = 0;
  for (const auto& v : e.variables()) {
    const int a = g.axis_index(v);
    if (a < 0) throw Error("symlang: unresolved variable '" + v + "' (not an axis of the grid)");
    mask |= 1u << a;
  }
  std::map<std::string, cd> vars{{"h", g.h()}};
  return SymbolField::sample(grid, mask, [&](const std::vector<double>& z) {
    for (int a = 0; a < g.axis_count(); ++a)
      if (mask >> a & 1u) vars[g.name(a)] = g.is_dual(a) ? h * z[a] : z[a];
    return eval_point(e, vars);
  });
}

ComposeReport compose_leading_check(const SymbolExpr& a, const SymbolExpr& b, const GridConfig& cfg,
                                    const std::vector<double>& hs) {
  ComposeReport rep;
  const SymbolExpr ab = parse_expr("(" + a.print() + ") * (" + b.print() + ")");
  for (double h : hs) {
    GridConfig c = cfg;
    c.h = h;
    c.frame = Frame::standard;
    auto g = build_grid(c);
    auto A = weyl_quantize(eval_semiclassical(a, g, h));
    auto B = weyl_quantize(eval_semiclassical(b, g, h));
    auto AB = weyl_quantize(eval_semiclassical(ab, g, h));
    rep.h.push_back(h);
    rep.residual.push_back(operator_norm(A.matrix * B.matrix - AB.matrix));
  }
  for (std::size_t k = 0; k + 1 < rep.residual.size(); ++k)
    rep.ratio.push_back(rep.residual[k + 1] > 0 ? rep.residual[k] / rep.residual[k + 1] : 0.0);
  return rep;
}

void write_operator_csv(const DiscreteOperator& op, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path);
  os << std::setprecision(17);
  for (Eigen::Index i = 0; i < op.matrix.rows(); ++i) {
    for (Eigen::Index j = 0; j < op.matrix.cols(); ++j) {
      if (j) os << ',';
      os << op.matrix(i, j).real() << ',' << op.matrix(i, j).imag();
    }
    os << '\n';
  }
}

void write_operator_binary(const DiscreteOperator& op, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path);
  const std::uint64_t r = op.matrix.rows(), c = op.matrix.cols();
  os.write("MLOP", 4);
  os.write(reinterpret_cast<const char*>(&r), sizeof r);
  os.write(reinterpret_cast<const char*>(&c), sizeof c);
  // column-major storage written row by row
  for (Eigen::Index i = 0; i < op.matrix.rows(); ++i)
    for (Eigen::Index j = 0; j < op.matrix.cols(); ++j) {
      const double re = op.matrix(i, j).real(), im = op.matrix(i, j).imag();
      os.write(reinterpret_cast<const char*>(&re), sizeof re);
      os.write(reinterpret_cast<const char*>(&im), sizeof im);
    }
}

DiscreteOperator read_operator_binary(const std::string& path, GridPtr grid) {
  std::ifstream is(path, std::ios::binary);
  char magic[4];
  std::uint64_t r = 0, c = 0;
  if (!is.read(magic, 4) || std::string(magic, 4) != "MLOP") throw Error("not an operator container: " + path);
  is.read(reinterpret_cast<char*>(&r), sizeof r);
  is.read(reinterpret_cast<char*>(&c), sizeof c);
  DiscreteOperator op;
  op.grid = std::move(grid);
  op.matrix.resize(r, c);
  for (std::uint64_t i = 0; i < r; ++i)
    for (std::uint64_t j = 0; j < c; ++j) {
      double re = 0, im = 0;
      is.read(reinterpret_cast<char*>(&re), sizeof re);
      is.read(reinterpret_cast<char*>(&im), sizeof im);
      op.matrix(i, j) = cd(re, im);
    }
  if (!is) throw Error("truncated operator container: " + path);
  return op;
}

}  // namespace mlab

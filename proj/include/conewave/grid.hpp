#pragma once

#include <array>
#include <vector>

#include "conewave/common.hpp"

namespace conewave {

// Uniform tensor grid: point(i) = lo + i * spacing componentwise.
struct Grid {
  int n = 0;
  std::array<int, 3> dims{1, 1, 1};
  Vec lo = vec0();
  Vec spacing{1.0, 1.0, 1.0};

  std::size_t count() const {
    std::size_t c = 1;
    for (int a = 0; a < n; ++a) c *= static_cast<std::size_t>(dims[a]);
    return c;
  }
  double cell_volume() const {
    double v = 1.0;
    for (int a = 0; a < n; ++a) v *= spacing[a];
    return v;
  }
  Vec point(const std::array<int, 3>& idx) const {
    Vec p = vec0();
    for (int a = 0; a < n; ++a) p[a] = lo[a] + idx[a] * spacing[a];
    return p;
  }
  double hi(int a) const { return lo[a] + (dims[a] - 1) * spacing[a]; }
  std::size_t flat(const std::array<int, 3>& idx) const {
    std::size_t f = 0;
    for (int a = 0; a < n; ++a) f = f * dims[a] + idx[a];
    return f;
  }
  std::array<int, 3> unflat(std::size_t f) const {
    std::array<int, 3> idx{0, 0, 0};
    for (int a = n - 1; a >= 0; --a) {
      idx[a] = static_cast<int>(f % dims[a]);
      f /= dims[a];
    }
    return idx;
  }
  bool contains(const Vec& p, double margin = 0.0) const {
    for (int a = 0; a < n; ++a) {
      if (p[a] < lo[a] - margin || p[a] > hi(a) + margin) return false;
    }
    return true;
  }
};

// Iterates idx over the full grid in flat (row-major) order.
template <typename F>
void for_each_index(const Grid& g, F&& fn) {
  std::array<int, 3> idx{0, 0, 0};
  std::size_t total = g.count();
  for (std::size_t f = 0; f < total; ++f) {
    fn(f, idx);
    for (int a = g.n - 1; a >= 0; --a) {
      if (++idx[a] < g.dims[a]) break;
      idx[a] = 0;
    }
  }
}

struct Field {
  Grid grid;
  std::vector<cplx> values;

  Field() = default;
  explicit Field(const Grid& g) : grid(g), values(g.count(), cplx{}) {}
};

// Paired spatial/frequency sampling. The frequency grid comes first (signals
// here have compactly supported spectra); the spatial grid is the dual DFT
// grid, centered on the origin: spacing dx_a = 2*pi / (N_a * dw_a).
struct Domain {
  Grid freq;
  Grid spat;
};

// freq_lo/freq_hi bound the spectral box; samples are cell-centered so the
// box edges are never sampled. dims must be >= 8 on each active axis.
Domain make_domain(int n, const Vec& freq_lo, const Vec& freq_hi,
                   const std::array<int, 3>& dims);

// fhat(w_k) = sum_m f(x_m) exp(-i<x_m,w_k>) * prod(dx)
std::vector<cplx> to_freq(const Domain& d, const std::vector<cplx>& f);
// f(x_m)   = (2*pi)^-n * sum_k fhat(w_k) exp(+i<x_m,w_k>) * prod(dw)
std::vector<cplx> to_spat(const Domain& d, const std::vector<cplx>& fhat);

// 8-point tensor Lagrange interpolation. The stencil is clamped into the
// grid; points outside the grid box evaluate to zero.
cplx interpolate(const Grid& g, const std::vector<cplx>& v, const Vec& p);

// Partial derivative of the interpolant along axis `axis`.
cplx interpolate_deriv(const Grid& g, const std::vector<cplx>& v, const Vec& p,
                       int axis);

}  // namespace conewave

#include "conewave/grid.hpp"

namespace conewave {

Domain make_domain(int n, const Vec& freq_lo, const Vec& freq_hi,
                   const std::array<int, 3>& dims) {
  require(n >= 1 && n <= 3, ErrorCode::bad_config, "dimension must be 1..3");
  Domain d;
  d.freq.n = n;
  d.spat.n = n;
  constexpr double two_pi = 6.283185307179586476925286766559;
  for (int a = 0; a < n; ++a) {
    require(dims[a] >= 8, ErrorCode::bad_config, "grid axis needs >= 8 samples");
    require(freq_hi[a] > freq_lo[a], ErrorCode::bad_config,
            "empty frequency box");
    int N = dims[a];
    double dw = (freq_hi[a] - freq_lo[a]) / N;
    d.freq.dims[a] = N;
    d.freq.spacing[a] = dw;
    d.freq.lo[a] = freq_lo[a] + 0.5 * dw;
    double dx = two_pi / (N * dw);
    d.spat.dims[a] = N;
    d.spat.spacing[a] = dx;
    d.spat.lo[a] = -0.5 * N * dx;
  }
  return d;
}

namespace {

std::array<int, 3> stencil_base(const Grid& g, const Vec& p) {
  std::array<int, 3> base{0, 0, 0};
  for (int a = 0; a < g.n; ++a) {
    double t = (p[a] - g.lo[a]) / g.spacing[a];
    int b = static_cast<int>(std::floor(t)) - 3;
    if (b < 0) b = 0;
    if (b > g.dims[a] - 8) b = g.dims[a] - 8;
    base[a] = b;
  }
  return base;
}

// Lagrange basis over nodes {0,..,7} evaluated at t, plus derivative form.
void lagrange_weights(double t, double* w) {
  for (int i = 0; i < 8; ++i) {
    double num = 1.0, den = 1.0;
    for (int j = 0; j < 8; ++j) {
      if (j == i) continue;
      num *= t - j;
      den *= static_cast<double>(i - j);
    }
    w[i] = num / den;
  }
}

void lagrange_deriv_weights(double t, double* w) {
  for (int i = 0; i < 8; ++i) {
    double den = 1.0;
    for (int j = 0; j < 8; ++j) {
      if (j != i) den *= static_cast<double>(i - j);
    }
    double sum = 0.0;
    for (int k = 0; k < 8; ++k) {
      if (k == i) continue;
      double prod = 1.0;
      for (int j = 0; j < 8; ++j) {
        if (j == i || j == k) continue;
        prod *= t - j;
      }
      sum += prod;
    }
    w[i] = sum / den;
  }
}

cplx eval_stencil(const Grid& g, const std::vector<cplx>& v, const Vec& p,
                  int deriv_axis) {
  for (int a = 0; a < g.n; ++a) {
    require(g.dims[a] >= 8, ErrorCode::bad_config,
            "interpolation needs >= 8 samples per axis");
  }
  if (!g.contains(p)) return cplx{};
  auto base = stencil_base(g, p);
  double w[3][8];
  for (int a = 0; a < g.n; ++a) {
    double t = (p[a] - g.lo[a]) / g.spacing[a] - base[a];
    if (a == deriv_axis) {
      lagrange_deriv_weights(t, w[a]);
      for (int i = 0; i < 8; ++i) w[a][i] /= g.spacing[a];
    } else {
      lagrange_weights(t, w[a]);
    }
  }
  // contract innermost axis first, then fold outward
  cplx acc = 0.0;
  std::array<int, 3> idx = base;
  if (g.n == 1) {
    for (int i = 0; i < 8; ++i) {
      idx[0] = base[0] + i;
      acc += w[0][i] * v[g.flat(idx)];
    }
    return acc;
  }
  if (g.n == 2) {
    for (int i = 0; i < 8; ++i) {
      idx[0] = base[0] + i;
      cplx row = 0.0;
      std::size_t f0 = static_cast<std::size_t>(idx[0]) * g.dims[1] + base[1];
      for (int j = 0; j < 8; ++j) row += w[1][j] * v[f0 + j];
      acc += w[0][i] * row;
    }
    return acc;
  }
  for (int i = 0; i < 8; ++i) {
    idx[0] = base[0] + i;
    cplx plane = 0.0;
    for (int j = 0; j < 8; ++j) {
      std::size_t f0 =
          (static_cast<std::size_t>(idx[0]) * g.dims[1] + base[1] + j) *
              g.dims[2] +
          base[2];
      cplx row = 0.0;
      for (int k = 0; k < 8; ++k) row += w[2][k] * v[f0 + k];
      plane += w[1][j] * row;
    }
    acc += w[0][i] * plane;
  }
  return acc;
}

}  // namespace

cplx interpolate(const Grid& g, const std::vector<cplx>& v, const Vec& p) {
  return eval_stencil(g, v, p, -1);
}

cplx interpolate_deriv(const Grid& g, const std::vector<cplx>& v, const Vec& p,
                       int axis) {
  return eval_stencil(g, v, p, axis);
}

}  // namespace conewave

#include "conewave/transform.hpp"

namespace conewave {

namespace {

constexpr double kSqrt2 = 1.4142135623730950488016887242097;

struct AxisCells {
  int count = 0;
  double step = 0.0;
  double center = 0.0;
  double node(int i) const { return center + (i + 0.5 - 0.5 * count) * step; }
};

AxisCells cover(double lo, double hi, double step) {
  AxisCells ax;
  ax.step = step;
  ax.center = 0.5 * (lo + hi);
  ax.count = std::max(1, static_cast<int>(std::ceil((hi - lo) / step)));
  return ax;
}

}  // namespace

HSampling make_h_sampling(const ConeModel& cone, double radius,
                          const std::array<double, 3>& spacing, int level) {
  require(radius > 0.0, ErrorCode::bad_config, "sampling radius must be > 0");
  HSampling s;
  s.radius = radius;
  s.spacing = spacing;
  s.level = level;
  double scale = std::pow(0.5, level);

  if (cone.kind() == ConeKind::orthant) {
    int r = cone.rank();
    AxisCells ax[3];
    for (int a = 0; a < r; ++a)
      ax[a] = cover(-radius, radius, spacing[a] * scale);
    double wcell = 1.0;
    double halfdiag2 = 0.0;
    for (int a = 0; a < r; ++a) {
      wcell *= ax[a].step;
      halfdiag2 += sqr(0.5 * ax[a].step);
    }
    double keep = radius + std::sqrt(halfdiag2);
    std::array<int, 3> idx{0, 0, 0};
    std::array<int, 3> dims{1, 1, 1};
    for (int a = 0; a < r; ++a) dims[a] = ax[a].count;
    for (idx[0] = 0; idx[0] < dims[0]; ++idx[0])
      for (idx[1] = 0; idx[1] < dims[1]; ++idx[1])
        for (idx[2] = 0; idx[2] < dims[2]; ++idx[2]) {
          Vec t = vec0();
          double norm2 = 0.0;
          for (int a = 0; a < r; ++a) {
            t[a] = ax[a].node(idx[a]);
            norm2 += sqr(t[a]);
          }
          if (norm2 > sqr(keep)) continue;
          s.nodes.push_back(cone.chart(t));
          s.weights.push_back(wcell);
        }
    return s;
  }

  // spd2, boundary-adapted coordinates (theta1, beta, theta3), b = beta e^t3.
  // Support bounds for d(h e, e) <= rho:
  //   |theta1| <= rho/2, |theta1 + theta3| <= rho/sqrt(2),
  //   |beta| <= 2 sinh((rho + 2|(theta1,theta3)|) / (2 sqrt 2)).
  double rho = radius;
  AxisCells a1 = cover(-0.5 * rho, 0.5 * rho, spacing[0] * scale);
  AxisCells a3 =
      cover(-(0.5 + 1.0 / kSqrt2) * rho, 0.5 * rho, spacing[2] * scale);
  double dbeta = spacing[1] * scale;
  double wcell = 4.0 * 3.1415926535897932384626433832795 * a1.step * dbeta *
                 a3.step;
  double half1 = 0.5 * a1.step, half3 = 0.5 * a3.step;
  for (int i1 = 0; i1 < a1.count; ++i1) {
    double t1 = a1.node(i1);
    if (std::abs(t1) - half1 > 0.5 * rho) continue;
    for (int i3 = 0; i3 < a3.count; ++i3) {
      double t3 = a3.node(i3);
      if (std::abs(t1 + t3) - half1 - half3 > rho / kSqrt2) continue;
      double rfar = std::sqrt(sqr(std::abs(t1) + half1) +
                              sqr(std::abs(t3) + half3));
      double beta_max = 2.0 * std::sinh((rho + 2.0 * rfar) / (2.0 * kSqrt2));
      int nb = std::max(1, static_cast<int>(std::ceil(2.0 * beta_max / dbeta)));
      double ec = std::exp(t3);
      for (int ib = 0; ib < nb; ++ib) {
        double beta = (ib + 0.5 - 0.5 * nb) * dbeta;
        Vec t{t1, beta * ec, t3};
        s.nodes.push_back(cone.chart(t));
        s.weights.push_back(wcell);
      }
    }
  }
  return s;
}

Refinement admissibility_constant(
    const ConeModel& cone, const std::function<double(const Vec&)>& profile,
    double radius, const std::array<double, 3>& spacing, double tol,
    int max_levels) {
  Vec e = cone.identity();
  auto level_value = [&](int level) {
    HSampling s = make_h_sampling(cone, radius, spacing, level);
    std::vector<double> terms(s.size());
    parallel_for(s.size(), [&](std::size_t i) {
      double p = profile(cone.adjoint_act(s.nodes[i], e));
      terms[i] = s.weights[i] * p * p;
    });
    return pairwise_sum(terms);
  };
  return refine_until(level_value, tol, max_levels);
}

WaveletSystem make_wavelet(const ConeModel& cone, const Domain& dom,
                           double sharpness,
                           const std::array<double, 3>& h_spacing) {
  require(sharpness > 0.0, ErrorCode::bad_config, "sharpness must be > 0");
  WaveletSystem w{cone, dom};
  w.sharpness = sharpness;

  Vec lo, hi;
  cone.metric_ball_box(cone.identity(), w.outer, lo, hi);
  for (int a = 0; a < cone.dim(); ++a) {
    require(lo[a] >= dom.freq.lo[a] - 0.5 * dom.freq.spacing[a] &&
                hi[a] <= dom.freq.hi(a) + 0.5 * dom.freq.spacing[a],
            ErrorCode::bad_config,
            "frequency grid does not contain the wavelet support");
  }
  w.supp_lo = lo;
  w.supp_hi = hi;

  w.psi_hat.resize(dom.freq.count());
  const Grid& g = dom.freq;
  for_each_index(g, [&](std::size_t f, const std::array<int, 3>& idx) {
    w.psi_hat[f] = w.profile(g.point(idx));
  });

  w.quad = admissibility_constant(
      cone, [&](const Vec& p) { return w.profile(p); }, w.outer, h_spacing,
      1e-7, 8);
  require(w.quad.converged, ErrorCode::numerical_failure,
          "admissibility quadrature did not stabilize");
  w.plateau_admissibility = w.quad.value;
  require(w.plateau_admissibility > 0.0, ErrorCode::numerical_failure,
          "degenerate admissibility integral");
  w.analyzing_scale = 1.0 / std::sqrt(w.plateau_admissibility);
  return w;
}

}  // namespace conewave

#include "conewave/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "conewave/grid.hpp"

namespace conewave {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// uniform in [0,1) with the full 53-bit mantissa, engine-order deterministic
double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

SpectralField make_test_signal(const ConeModel& cone, const Domain& dom,
                               const TestSignalSpec& spec) {
  const int n = cone.dim();
  require(dom.freq.n == n, ErrorCode::bad_config,
          "domain dimension does not match the cone");
  require(spec.bumps >= 1, ErrorCode::bad_config, "need at least one bump");
  require(spec.bump_radius > 0.0 && spec.radius > spec.bump_radius,
          ErrorCode::bad_config, "bump radius must fit inside the region");
  require(spec.amp_hi >= spec.amp_lo && spec.amp_lo > 0.0,
          ErrorCode::bad_config, "amplitude range must be positive");
  require(cone.contains(spec.center), ErrorCode::bad_input,
          "region center must lie inside the cone");

  const Grid& fg = dom.freq;
  Vec rlo = vec0(), rhi = vec0();
  cone.metric_ball_box(spec.center, spec.radius, rlo, rhi);
  for (int a = 0; a < n; ++a)
    require(rlo[a] >= fg.lo[a] - 0.5 * fg.spacing[a] &&
                rhi[a] <= fg.hi(a) + 0.5 * fg.spacing[a],
            ErrorCode::bad_config, "signal region leaves the frequency grid");

  struct Bump {
    Vec c = vec0();
    Vec x = vec0();
    cplx amp;
  };
  std::mt19937_64 rng(spec.seed);
  std::vector<Bump> bumps(static_cast<std::size_t>(spec.bumps));
  const double keep = spec.radius - spec.bump_radius;
  Vec blo = vec0(), bhi = vec0();
  cone.metric_ball_box(spec.center, keep, blo, bhi);
  for (auto& b : bumps) {
    // rejection sampling in the hull box of the shrunken ball
    for (int tries = 0;; ++tries) {
      require(tries < 4096, ErrorCode::numerical_failure,
              "bump placement did not land inside the region");
      Vec c = vec0();
      for (int a = 0; a < n; ++a)
        c[a] = blo[a] + (bhi[a] - blo[a]) * unit_uniform(rng);
      if (!cone.contains(c)) continue;
      if (cone.metric_distance(c, spec.center) > keep) continue;
      b.c = c;
      break;
    }
    for (int a = 0; a < n; ++a) {
      double half = 0.5 * (dom.spat.hi(a) - dom.spat.lo[a]);
      b.x[a] = (2.0 * unit_uniform(rng) - 1.0) * spec.shift_frac * half;
    }
    double mag = spec.amp_lo + (spec.amp_hi - spec.amp_lo) * unit_uniform(rng);
    b.amp = std::polar(mag, kTwoPi * unit_uniform(rng));
  }

  SpectralField f;
  f.freq = fg;
  for (std::size_t bi = 0; bi < bumps.size(); ++bi) {
    Vec lo = vec0(), hi = vec0();
    cone.metric_ball_box(bumps[bi].c, spec.bump_radius, lo, hi);
    for (int a = 0; a < n; ++a) {
      f.supp_lo[a] = bi == 0 ? lo[a] : std::min(f.supp_lo[a], lo[a]);
      f.supp_hi[a] = bi == 0 ? hi[a] : std::max(f.supp_hi[a], hi[a]);
    }
  }

  const double rho = spec.bump_radius;
  const ConeModel cm = cone;
  f.analytic = [cm, bumps, rho, n](const Vec& w) -> cplx {
    if (!cm.contains(w)) return cplx{};
    cplx acc{};
    for (const auto& b : bumps) {
      double d = cm.metric_distance(w, b.c);
      if (!(d < rho)) continue;
      double ph = 0.0;
      for (int a = 0; a < n; ++a) ph += b.x[a] * w[a];
      acc += b.amp * bump_profile(sqr(d / rho)) *
             cplx(std::cos(ph), std::sin(ph));
    }
    return acc;
  };
  f.values.resize(fg.count());
  for_each_index(fg, [&](std::size_t i, const std::array<int, 3>& idx) {
    f.values[i] = f.analytic(fg.point(idx));
  });
  return f;
}

NewhaarResult newhaar_constant(
    const ConeModel& cone,
    const std::vector<std::function<double(const Vec&)>>& funcs, double radius,
    const std::array<double, 3>& spacing, int level, double tol) {
  require(funcs.size() >= 3, ErrorCode::bad_config,
          "need at least three test functions");
  HSampling hs = make_h_sampling(cone, radius, spacing, level);
  const Vec e = cone.identity();
  NewhaarResult res;
  std::vector<double> fw(hs.size()), bw(hs.size());
  for (const auto& G : funcs) {
    for (std::size_t j = 0; j < hs.size(); ++j) {
      const HElement& h = hs.nodes[j];
      fw[j] = hs.weights[j] * G(cone.act(h, e));
      bw[j] = hs.weights[j] * G(cone.adjoint_act(cone.inverse(h), e));
    }
    double num = pairwise_sum(fw);
    double den = pairwise_sum(bw);
    require(den != 0.0 && num != 0.0, ErrorCode::bad_input,
            "test function misses the sampled region");
    res.ratios.push_back(num / den);
  }
  double lo = res.ratios[0], hi = res.ratios[0], mean = 0.0;
  for (double r : res.ratios) {
    lo = std::min(lo, r);
    hi = std::max(hi, r);
    mean += r;
  }
  mean /= static_cast<double>(res.ratios.size());
  res.constant = mean;
  res.spread = (hi - lo) / std::abs(mean);
  if (!(res.spread <= tol)) {
    char buf[128];
    std::snprintf(buf, sizeof buf,
                  "Haar-adjoint ratios disagree: relative spread %.3e "
                  "(tolerance %.3e)",
                  res.spread, tol);
    fail(ErrorCode::numerical_failure, buf);
  }
  return res;
}

double classical_besov_1d(const WaveletSystem& system,
                          const SpectralField& fhat, const Domain& sig_dom,
                          const HSampling& hs, const BesovParams& bp,
                          int pad) {
  require(system.cone.kind() == ConeKind::orthant && system.cone.dim() == 1,
          ErrorCode::unsupported, "this reduction lives on the half-line");
  require(bp.p >= 1.0 && bp.q >= 1.0, ErrorCode::unsupported,
          "norm exponents must be >= 1");
  const Grid& fg = sig_dom.freq;
  require(fhat.values.size() == fg.count(), ErrorCode::bad_input,
          "spectrum size does not match the grid");
  require(fhat.supp_lo[0] > 0.0, ErrorCode::bad_input,
          "half-line spectrum must stay inside the cone");
  const int N = fg.dims[0];
  const double dw = fg.spacing[0];
  const double w0 = fg.lo[0];

  // local window: 1 on [0, inner], smooth descent to 0 at outer
  const double inner = system.inner;
  const double outer = system.outer;
  const double sg = system.sharpness;
  auto ramp = [inner, outer, sg](double d) {
    if (!(d < outer)) return 0.0;
    if (d <= inner) return 1.0;
    double s = (outer - d) / (outer - inner);
    double a = std::exp(-sg / s);
    double b = std::exp(-sg / (1.0 - s));
    return a / (a + b);
  };

  std::vector<double> snorms(hs.size(), 0.0);
  for (std::size_t j = 0; j < hs.size(); ++j) {
    const double th = hs.nodes[j].theta[0];
    const double scale = std::exp(th);
    double lo = std::max(scale * std::exp(-outer), fhat.supp_lo[0]);
    double hi = std::min(scale * std::exp(outer), fhat.supp_hi[0]);
    int i0 = static_cast<int>(std::ceil((lo - w0) / dw - 1e-12));
    int i1 = static_cast<int>(std::floor((hi - w0) / dw + 1e-12));
    if (i0 < 0) i0 = 0;
    if (i1 > N - 1) i1 = N - 1;
    if (i1 < i0) continue;  // dilated window misses the spectrum
    const int c = i1 - i0 + 1;
    std::vector<cplx> band(static_cast<std::size_t>(c));
    for (int i = 0; i < c; ++i) {
      double w = w0 + (i0 + i) * dw;
      double m = ramp(std::abs(std::log(w) - th));
      band[static_cast<std::size_t>(i)] =
          m == 0.0 ? cplx{} : m * fhat.values[static_cast<std::size_t>(i0 + i)];
    }
    if (bp.p == 2.0) {
      double s2 = 0.0;
      for (const cplx& z : band) s2 += std::norm(z);
      snorms[j] = std::sqrt(s2 * dw / kTwoPi);
      continue;
    }
    // spatial realization of the band on its padded mini-grid, direct sums
    const int M = std::max(8, pad * c);
    const double wfirst = w0 + i0 * dw;
    const double dx = kTwoPi / (M * dw);
    const double x0 = -0.5 * M * dx;
    double acc = 0.0;
    for (int m = 0; m < M; ++m) {
      const double x = x0 + m * dx;
      cplx v{};
      for (int i = 0; i < c; ++i) {
        double w = wfirst + i * dw;
        v += band[static_cast<std::size_t>(i)] *
             cplx(std::cos(x * w), std::sin(x * w));
      }
      acc += std::pow(std::abs(v) * (dw / kTwoPi), bp.p);
    }
    snorms[j] = std::pow(acc * dx, 1.0 / bp.p);
  }

  double total = 0.0;
  for (std::size_t j = 0; j < hs.size(); ++j)
    total += hs.weights[j] * std::pow(std::exp(hs.nodes[j].theta[0]), -bp.s) *
             std::pow(snorms[j], bp.q);
  return std::pow(total, 1.0 / bp.q);
}

std::vector<cplx> bruteforce_group_convolution(
    const CoefficientField& F, const SpectralField& ghat,
    const std::vector<GroupPoint>& targets) {
  require(F.system != nullptr, ErrorCode::bad_input,
          "field carries no wavelet system");
  const WaveletSystem& system = *F.system;
  const ConeModel& cone = F.cone;
  const int n = cone.dim();
  const Grid& gg = ghat.freq;
  require(ghat.values.size() == gg.count(), ErrorCode::bad_input,
          "convolver spectrum does not match its grid");

  std::size_t sources = 0;
  for (const Slice& sl : F.slices)
    if (!sl.crop.empty) sources += sl.dom.spat.count();
  require(sources <= 1000, ErrorCode::bad_config,
          "brute-force budget: at most 1e3 source samples");
  require(sources * targets.size() <= 200000, ErrorCode::bad_config,
          "brute-force budget: too many source-target pairs");

  // spatial slice values by direct inverse transforms (no FFT); the band
  // samples sit on the leading indices of the padded mini-grid
  std::vector<std::vector<cplx>> spat(F.slices.size());
  for (std::size_t j = 0; j < F.slices.size(); ++j) {
    const Slice& sl = F.slices[j];
    if (sl.crop.empty) continue;
    const Grid& sgr = sl.dom.spat;
    const Grid& cgr = sl.dom.freq;
    double meas = 1.0;
    for (int a = 0; a < n; ++a) meas *= cgr.spacing[a] / kTwoPi;
    spat[j].resize(sgr.count());
    for_each_index(sgr, [&](std::size_t m, const std::array<int, 3>& mi) {
      Vec x = sgr.point(mi);
      cplx v{};
      std::array<int, 3> idx{0, 0, 0};
      for (;;) {
        Vec w = cgr.point(idx);
        double ph = 0.0;
        for (int a = 0; a < n; ++a) ph += x[a] * w[a];
        std::size_t ci = 0;
        for (int a = 0; a < n; ++a)
          ci = ci * static_cast<std::size_t>(sl.crop.cdims[a]) +
               static_cast<std::size_t>(idx[a]);
        v += sl.spectral[ci] * cplx(std::cos(ph), std::sin(ph));
        int a = n - 1;
        for (; a >= 0; --a) {
          if (++idx[a] < sl.crop.cdims[a]) break;
          idx[a] = 0;
        }
        if (a < 0) break;
      }
      spat[j][m] = v * meas;
    });
  }

  // evaluate the convolver voice at a group point by summing its whole grid
  auto voice = [&](const GroupPoint& u) -> cplx {
    double rootdet = std::sqrt(u.h.det);
    double meas = 1.0;
    for (int a = 0; a < n; ++a) meas *= gg.spacing[a] / kTwoPi;
    cplx acc{};
    for_each_index(gg, [&](std::size_t i, const std::array<int, 3>& idx) {
      const cplx& gv = ghat.values[i];
      if (gv == cplx{}) return;
      Vec w = gg.point(idx);
      double prof = system.analyzing_profile(cone.adjoint_act(u.h, w));
      if (prof == 0.0) return;
      double ph = 0.0;
      for (int a = 0; a < n; ++a) ph += u.x[a] * w[a];
      acc += gv * prof * cplx(std::cos(ph), std::sin(ph));
    });
    return acc * (rootdet * meas);
  };

  std::vector<cplx> out(targets.size(), cplx{});
  for (std::size_t t = 0; t < targets.size(); ++t) {
    const GroupPoint& g1 = targets[t];
    cplx acc{};
    for (std::size_t j = 0; j < F.slices.size(); ++j) {
      const Slice& sl = F.slices[j];
      if (sl.crop.empty) continue;
      const Grid& sgr = sl.dom.spat;
      HElement hinv = cone.inverse(sl.h);
      GroupPoint u;
      u.h = cone.compose(hinv, g1.h);
      double meas = sl.weight * sgr.cell_volume() / sl.h.det;
      for_each_index(sgr, [&](std::size_t m, const std::array<int, 3>& mi) {
        const cplx& fv = spat[j][m];
        if (fv == cplx{}) return;
        Vec x = sgr.point(mi);
        Vec d = vec0();
        for (int a = 0; a < n; ++a) d[a] = g1.x[a] - x[a];
        u.x = cone.act(hinv, d);
        acc += meas * fv * voice(u);
      });
    }
    out[t] = acc;
  }
  return out;
}

}  // namespace conewave

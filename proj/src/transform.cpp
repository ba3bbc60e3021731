#include "conewave/transform.hpp"

#include <atomic>
#include <cstdio>

namespace conewave {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

void lower_tri_inverse(const double A[3][3], int n, double inv[3][3]) {
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) inv[i][j] = (i == j) ? 1.0 : 0.0;
  for (int i = 0; i < n; ++i) {
    inv[i][i] = 1.0 / A[i][i];
    for (int j = 0; j < i; ++j) {
      double s = 0.0;
      for (int k = j; k < i; ++k) s += A[i][k] * inv[k][j];
      inv[i][j] = -s / A[i][i];
    }
  }
}

// Interval hull of M . box (exact: the hull of a parallelepiped).
void linear_box_image(const double M[3][3], int n, const Vec& lo,
                      const Vec& hi, Vec& out_lo, Vec& out_hi) {
  out_lo = vec0();
  out_hi = vec0();
  for (int a = 0; a < n; ++a) {
    double acc_lo = 0.0, acc_hi = 0.0;
    for (int b = 0; b < n; ++b) {
      double p = M[a][b] * lo[b], q = M[a][b] * hi[b];
      acc_lo += std::min(p, q);
      acc_hi += std::max(p, q);
    }
    out_lo[a] = acc_lo;
    out_hi[a] = acc_hi;
  }
}

}  // namespace

// Box of {w : h* w in [lo, hi]} = (A^T)^-1 [lo, hi].
void adjoint_preimage_box(const ConeModel& cone, const HElement& h,
                          const Vec& lo, const Vec& hi, Vec& out_lo,
                          Vec& out_hi) {
  double inv[3][3];
  lower_tri_inverse(h.A, cone.dim(), inv);
  // (A^T)^-1 = (A^-1)^T
  double m[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
  for (int i = 0; i < cone.dim(); ++i)
    for (int j = 0; j < cone.dim(); ++j) m[i][j] = inv[j][i];
  linear_box_image(m, cone.dim(), lo, hi, out_lo, out_hi);
}

void action_preimage_box(const ConeModel& cone, const HElement& h,
                         const Vec& lo, const Vec& hi, Vec& out_lo,
                         Vec& out_hi) {
  double inv[3][3];
  lower_tri_inverse(h.A, cone.dim(), inv);
  linear_box_image(inv, cone.dim(), lo, hi, out_lo, out_hi);
}

CropBox crop_box(const Grid& freq, const Vec& lo, const Vec& hi) {
  CropBox c;
  for (int a = 0; a < freq.n; ++a) {
    double dw = freq.spacing[a];
    int i0 = static_cast<int>(std::ceil((lo[a] - freq.lo[a]) / dw - 1e-12));
    int i1 = static_cast<int>(std::floor((hi[a] - freq.lo[a]) / dw + 1e-12));
    if (i0 < 0) i0 = 0;
    if (i1 > freq.dims[a] - 1) i1 = freq.dims[a] - 1;
    if (i1 < i0) return c;  // empty
    c.offset[a] = i0;
    c.cdims[a] = i1 - i0 + 1;
  }
  c.empty = false;
  return c;
}

Domain crop_domain(const Grid& parent, const CropBox& crop, int pad) {
  require(!crop.empty, ErrorCode::bad_input, "empty crop");
  require(pad >= 1, ErrorCode::bad_config, "pad factor must be >= 1");
  Vec lo = vec0(), hi = vec0();
  std::array<int, 3> dims{1, 1, 1};
  for (int a = 0; a < parent.n; ++a) {
    double dw = parent.spacing[a];
    dims[a] = std::max(8, pad * crop.cdims[a]);
    lo[a] = parent.lo[a] + crop.offset[a] * dw - 0.5 * dw;
    hi[a] = lo[a] + dims[a] * dw;
  }
  return make_domain(parent.n, lo, hi, dims);
}

std::vector<cplx> slice_spatial(const Slice& s) {
  std::vector<cplx> padded(s.dom.freq.count(), cplx{});
  const auto& cd = s.crop.cdims;
  int n = s.dom.freq.n;
  std::array<int, 3> idx{0, 0, 0};
  std::size_t ci = 0;
  // crop samples occupy the leading indices of the padded grid
  for (;;) {
    std::array<int, 3> p{0, 0, 0};
    for (int a = 0; a < n; ++a) p[a] = idx[a];
    padded[s.dom.freq.flat(p)] = s.spectral[ci++];
    int a = n - 1;
    for (; a >= 0; --a) {
      if (++idx[a] < cd[a]) break;
      idx[a] = 0;
    }
    if (a < 0) break;
  }
  return to_spat(s.dom, padded);
}

double slice_pnorm(const Slice& s, double p) {
  require(p >= 1.0, ErrorCode::bad_config, "p must be >= 1");
  int n = s.dom.freq.n;
  if (p == 2.0) {
    std::vector<double> terms(s.spectral.size());
    for (std::size_t i = 0; i < s.spectral.size(); ++i)
      terms[i] = std::norm(s.spectral[i]);
    double scale = s.dom.freq.cell_volume();
    for (int a = 0; a < n; ++a) scale /= kTwoPi;
    return std::sqrt(pairwise_sum(terms) * scale);
  }
  std::vector<cplx> sp = slice_spatial(s);
  std::vector<double> terms(sp.size());
  for (std::size_t i = 0; i < sp.size(); ++i)
    terms[i] = std::pow(std::abs(sp[i]), p);
  return std::pow(pairwise_sum(terms) * s.dom.spat.cell_volume(), 1.0 / p);
}

CoefficientField analyze(const std::shared_ptr<const WaveletSystem>& system,
                         const SpectralField& fhat, const Domain& signal_dom,
                         const HSampling& sampling, int pad, bool full_grid) {
  require(system != nullptr, ErrorCode::bad_config, "missing wavelet system");
  require(fhat.values.size() == signal_dom.freq.count(), ErrorCode::bad_input,
          "signal spectrum does not match the grid");
  const ConeModel& cone = system->cone;
  CoefficientField cf{cone, system, signal_dom, fhat, sampling, pad,
                      full_grid, {}};
  const Grid& pg = signal_dom.freq;

  std::vector<CropBox> crops(sampling.size());
  for (std::size_t j = 0; j < sampling.size(); ++j) {
    if (full_grid) {
      crops[j].empty = false;
      for (int a = 0; a < pg.n; ++a) {
        crops[j].offset[a] = 0;
        crops[j].cdims[a] = pg.dims[a];
      }
      continue;
    }
    Vec lo, hi;
    adjoint_preimage_box(cone, sampling.nodes[j], system->supp_lo,
                         system->supp_hi, lo, hi);
    for (int a = 0; a < pg.n; ++a) {
      lo[a] = std::max(lo[a], fhat.supp_lo[a]);
      hi[a] = std::min(hi[a], fhat.supp_hi[a]);
    }
    crops[j] = crop_box(pg, lo, hi);
  }

  std::vector<std::size_t> kept;
  for (std::size_t j = 0; j < sampling.size(); ++j)
    if (!crops[j].empty) kept.push_back(j);

  cf.slices.resize(kept.size());
  auto covered = std::make_unique<std::atomic<char>[]>(pg.count());
  parallel_for(kept.size(), [&](std::size_t s) {
    std::size_t j = kept[s];
    Slice& sl = cf.slices[s];
    sl.h = sampling.nodes[j];
    sl.weight = sampling.weights[j];
    sl.crop = crops[j];
    sl.dom = crop_domain(pg, crops[j], pad);
    double rootdet = std::sqrt(sl.h.det);
    std::size_t total = 1;
    for (int a = 0; a < pg.n; ++a) total *= sl.crop.cdims[a];
    sl.spectral.resize(total);
    std::array<int, 3> idx{0, 0, 0};
    for (std::size_t i = 0; i < total; ++i) {
      std::array<int, 3> p{0, 0, 0};
      for (int a = 0; a < pg.n; ++a) p[a] = sl.crop.offset[a] + idx[a];
      Vec w = pg.point(p);
      double prof = system->analyzing_profile(cone.adjoint_act(sl.h, w));
      std::size_t flat = pg.flat(p);
      sl.spectral[i] = rootdet * fhat.values[flat] * prof;  // real profile
      if (prof != 0.0) covered[flat].store(1, std::memory_order_relaxed);
      for (int a = pg.n - 1; a >= 0; --a) {
        if (++idx[a] < sl.crop.cdims[a]) break;
        idx[a] = 0;
      }
    }
  });

  // The field only represents what the scale sampling can see: reject signals
  // with spectral energy no filter touches.
  std::vector<double> missed, total_e;
  for (std::size_t i = 0; i < pg.count(); ++i) {
    double e = std::norm(fhat.values[i]);
    if (e == 0.0) continue;
    total_e.push_back(e);
    if (!covered[i].load(std::memory_order_relaxed)) missed.push_back(e);
  }
  if (!missed.empty() && !total_e.empty()) {
    double frac = pairwise_sum(missed) / pairwise_sum(total_e);
    if (frac > 1e-10) {
      char buf[144];
      std::snprintf(buf, sizeof buf,
                    "scale sampling does not cover the signal spectrum: "
                    "uncovered energy fraction %.6e",
                    frac);
      fail(ErrorCode::bad_input, buf);
    }
  }
  return cf;
}

SpectralField synthesize(const CoefficientField& cf) {
  const Grid& pg = cf.signal_dom.freq;
  const ConeModel& cone = cf.cone;
  SpectralField out;
  out.freq = pg;
  out.values.assign(pg.count(), cplx{});
  out.supp_lo = cf.fhat.supp_lo;
  out.supp_hi = cf.fhat.supp_hi;
  for (const Slice& sl : cf.slices) {
    double scale = sl.weight / std::sqrt(sl.h.det);
    std::size_t total = sl.spectral.size();
    std::array<int, 3> idx{0, 0, 0};
    for (std::size_t i = 0; i < total; ++i) {
      std::array<int, 3> p{0, 0, 0};
      for (int a = 0; a < pg.n; ++a) p[a] = sl.crop.offset[a] + idx[a];
      Vec w = pg.point(p);
      double prof = cf.system->analyzing_profile(cone.adjoint_act(sl.h, w));
      if (prof != 0.0)
        out.values[pg.flat(p)] += scale * prof * sl.spectral[i];
      for (int a = pg.n - 1; a >= 0; --a) {
        if (++idx[a] < sl.crop.cdims[a]) break;
        idx[a] = 0;
      }
    }
  }
  return out;
}

SpectralField convolve_projection(const CoefficientField& F,
                                  const SpectralField& g) {
  const Grid& pg = F.signal_dom.freq;
  const ConeModel& cone = F.cone;
  SpectralField out;
  out.freq = pg;
  out.values.assign(pg.count(), cplx{});
  out.supp_lo = F.fhat.supp_lo;
  out.supp_hi = F.fhat.supp_hi;
  for (const Slice& sl : F.slices) {
    double scale = sl.weight / std::sqrt(sl.h.det);
    std::size_t total = sl.spectral.size();
    std::array<int, 3> idx{0, 0, 0};
    for (std::size_t i = 0; i < total; ++i) {
      std::array<int, 3> p{0, 0, 0};
      for (int a = 0; a < pg.n; ++a) p[a] = sl.crop.offset[a] + idx[a];
      Vec w = pg.point(p);
      cplx gval = g.eval(cone.adjoint_act(sl.h, w));
      out.values[pg.flat(p)] += scale * sl.spectral[i] * gval;
      for (int a = pg.n - 1; a >= 0; --a) {
        if (++idx[a] < sl.crop.cdims[a]) break;
        idx[a] = 0;
      }
    }
  }
  return out;
}

std::vector<cplx> group_convolve(const CoefficientField& F,
                                 const SpectralField& ghat,
                                 const std::vector<GroupPoint>& targets) {
  require(F.system != nullptr, ErrorCode::bad_config,
          "coefficient field lacks its wavelet system");
  require(ghat.values.size() == ghat.freq.count(), ErrorCode::bad_input,
          "convolver spectrum does not match its grid");
  const WaveletSystem& system = *F.system;
  const ConeModel& cone = F.cone;
  std::size_t sources = 0;
  for (const Slice& sl : F.slices)
    if (!sl.crop.empty) sources += sl.dom.spat.count();
  require(sources * targets.size() <= 2000000, ErrorCode::bad_config,
          "group convolution budget exceeded; reduce the grid or the targets");

  std::vector<std::vector<cplx>> spat(F.slices.size());
  parallel_for(F.slices.size(), [&](std::size_t j) {
    if (!F.slices[j].crop.empty) spat[j] = slice_spatial(F.slices[j]);
  });

  std::vector<cplx> out(targets.size(), cplx{});
  parallel_for(targets.size(), [&](std::size_t t) {
    const GroupPoint& g1 = targets[t];
    cplx acc{};
    for (std::size_t j = 0; j < F.slices.size(); ++j) {
      const Slice& sl = F.slices[j];
      if (sl.crop.empty) continue;
      HElement hinv = cone.inverse(sl.h);
      GroupPoint u;
      u.h = cone.compose(hinv, g1.h);
      double meas = sl.weight * sl.dom.spat.cell_volume() / sl.h.det;
      const std::vector<cplx>& w = spat[j];
      for_each_index(sl.dom.spat,
                     [&](std::size_t f, const std::array<int, 3>& ix) {
                       if (w[f] == cplx{}) return;
                       Vec d = sl.dom.spat.point(ix);
                       for (int a = 0; a < cone.dim(); ++a)
                         d[a] = g1.x[a] - d[a];
                       u.x = cone.act(hinv, d);
                       cplx gv = voice_value(system, ghat, ghat.freq, u);
                       acc += meas * w[f] * gv;
                     });
    }
    out[t] = acc;
  });
  return out;
}

cplx voice_value(const WaveletSystem& system, const SpectralField& fhat,
                 const Grid& parent, const GroupPoint& g) {
  const ConeModel& cone = system.cone;
  Vec lo, hi;
  adjoint_preimage_box(cone, g.h, system.supp_lo, system.supp_hi, lo, hi);
  for (int a = 0; a < parent.n; ++a) {
    lo[a] = std::max(lo[a], fhat.supp_lo[a]);
    hi[a] = std::min(hi[a], fhat.supp_hi[a]);
  }
  CropBox crop = crop_box(parent, lo, hi);
  if (crop.empty) return cplx{};
  double rootdet = std::sqrt(g.h.det);
  double meas = parent.cell_volume();
  for (int a = 0; a < parent.n; ++a) meas /= kTwoPi;
  cplx acc = 0.0;
  std::array<int, 3> idx{0, 0, 0};
  for (;;) {
    std::array<int, 3> p{0, 0, 0};
    for (int a = 0; a < parent.n; ++a) p[a] = crop.offset[a] + idx[a];
    Vec w = parent.point(p);
    double prof = system.analyzing_profile(cone.adjoint_act(g.h, w));
    if (prof != 0.0) {
      double phase = 0.0;
      for (int a = 0; a < parent.n; ++a) phase += g.x[a] * w[a];
      acc += fhat.values[parent.flat(p)] * prof *
             cplx(std::cos(phase), std::sin(phase));
    }
    int a = parent.n - 1;
    for (; a >= 0; --a) {
      if (++idx[a] < crop.cdims[a]) break;
      idx[a] = 0;
    }
    if (a < 0) break;
  }
  return acc * rootdet * meas;
}

SpectralField rep_apply(const ConeModel& cone, const GroupPoint& g,
                        const SpectralField& fhat, const Grid& freq) {
  SpectralField out;
  out.freq = freq;
  Vec lo, hi;
  adjoint_preimage_box(cone, g.h, fhat.supp_lo, fhat.supp_hi, lo, hi);
  for (int a = 0; a < freq.n; ++a) {
    require(lo[a] >= freq.lo[a] - 0.5 * freq.spacing[a] &&
                hi[a] <= freq.hi(a) + 0.5 * freq.spacing[a],
            ErrorCode::bad_input,
            "transported spectrum leaves the frequency grid");
  }
  out.supp_lo = lo;
  out.supp_hi = hi;
  double rootdet = std::sqrt(g.h.det);
  if (fhat.analytic) {
    auto inner = fhat.analytic;
    HElement h = g.h;
    Vec x = g.x;
    int n = freq.n;
    out.analytic = [cone, h, x, n, rootdet, inner](const Vec& w) {
      double phase = 0.0;
      for (int a = 0; a < n; ++a) phase -= x[a] * w[a];
      return rootdet * cplx(std::cos(phase), std::sin(phase)) *
             inner(cone.adjoint_act(h, w));
    };
  }
  out.values.resize(freq.count());
  for_each_index(freq, [&](std::size_t f, const std::array<int, 3>& idx) {
    Vec w = freq.point(idx);
    if (out.analytic) {
      out.values[f] = out.analytic(w);
      return;
    }
    double phase = 0.0;
    for (int a = 0; a < freq.n; ++a) phase -= g.x[a] * w[a];
    out.values[f] = rootdet * cplx(std::cos(phase), std::sin(phase)) *
                    interpolate(fhat.freq, fhat.values, cone.adjoint_act(g.h, w));
  });
  return out;
}

SpectralField rep_derivative(const ConeModel& cone, const Vec& theta_dot,
                             const Vec& v, const SpectralField& fhat,
                             const Domain& dom) {
  require(fhat.values.size() == dom.freq.count(), ErrorCode::bad_input,
          "signal spectrum does not match the grid");
  int n = dom.freq.n;
  double M[3][3];
  double tr = cone.chart_generator(theta_dot, M);

  // Spectral gradient d_a fhat. An analytic backing gives it by tiny central
  // differences (truncation ~1e-9 at this step size); grid-only fields fall
  // back to DFT[(-i x_a) f(x)], whose accuracy is limited by the spatial
  // tails of f wrapping at the box edge.
  std::array<std::vector<cplx>, 3> dfh;
  if (fhat.analytic) {
    for (int a = 0; a < n; ++a) dfh[a].resize(fhat.values.size());
    for_each_index(dom.freq, [&](std::size_t f, const std::array<int, 3>& idx) {
      Vec w = dom.freq.point(idx);
      double wmax = 1.0;
      for (int a = 0; a < n; ++a) wmax = std::max(wmax, std::abs(w[a]));
      double step = 5e-7 * wmax;
      for (int a = 0; a < n; ++a) {
        Vec wp = w, wm = w;
        wp[a] += step;
        wm[a] -= step;
        dfh[a][f] = (fhat.analytic(wp) - fhat.analytic(wm)) / (2.0 * step);
      }
    });
  } else {
    std::vector<cplx> f_spat = to_spat(dom, fhat.values);
    for (int a = 0; a < n; ++a) {
      std::vector<cplx> tmp(f_spat.size());
      for_each_index(dom.spat,
                     [&](std::size_t f, const std::array<int, 3>& idx) {
                       Vec x = dom.spat.point(idx);
                       tmp[f] = cplx(0.0, -x[a]) * f_spat[f];
                     });
      dfh[a] = to_freq(dom, tmp);
    }
  }

  SpectralField out;
  out.freq = dom.freq;
  out.supp_lo = fhat.supp_lo;  // derivative cannot enlarge spectral support
  out.supp_hi = fhat.supp_hi;
  out.values.resize(dom.freq.count());
  for_each_index(dom.freq, [&](std::size_t f, const std::array<int, 3>& idx) {
    Vec w = dom.freq.point(idx);
    double vw = 0.0;
    for (int a = 0; a < n; ++a) vw += v[a] * w[a];
    cplx acc = (cplx(0.5 * tr, 0.0) - cplx(0.0, vw)) * fhat.values[f];
    for (int a = 0; a < n; ++a) {
      double mw = 0.0;  // (M^T w)_a = sum_b M[b][a] w_b
      for (int b = 0; b < n; ++b) mw += M[b][a] * w[b];
      acc += mw * dfh[a][f];
    }
    out.values[f] = acc;
  });
  return out;
}

}  // namespace conewave

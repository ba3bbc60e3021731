#include "conewave/besov.hpp"

#include <atomic>
#include <cstdio>

namespace conewave {

namespace {

constexpr double kSqrt2 = 1.4142135623730950488016887242097;

// Enumerates chart nodes of the scaling group whose orbit points can lie
// within `reach` of the identity. For spd2 the nodes live on a tensor grid
// in the boundary-adapted coordinates (theta1, beta, theta3).
std::vector<Vec> adapted_grid(const ConeModel& cone, double reach,
                              double step1, double step2, double step3) {
  std::vector<Vec> out;
  if (cone.kind() == ConeKind::orthant) {
    int r = cone.rank();
    double st[3] = {step1, step2, step3};
    int lim[3] = {0, 0, 0};
    for (int a = 0; a < r; ++a)
      lim[a] = static_cast<int>(std::floor(reach / st[a]));
    std::array<int, 3> k{0, 0, 0};
    for (k[0] = -lim[0]; k[0] <= lim[0]; ++k[0])
      for (k[1] = -lim[1]; k[1] <= lim[1]; ++k[1])
        for (k[2] = -lim[2]; k[2] <= lim[2]; ++k[2]) {
          Vec t = vec0();
          double n2 = 0.0;
          for (int a = 0; a < r; ++a) {
            t[a] = k[a] * st[a];
            n2 += sqr(t[a]);
          }
          if (n2 > sqr(reach)) continue;
          out.push_back(t);
        }
    return out;
  }
  // spd2: |theta1| <= reach/2, |theta1+theta3| <= reach/sqrt2,
  //       |beta| <= 2 sinh((reach + 2|(t1,t3)|)/(2 sqrt 2))
  int l1 = static_cast<int>(std::floor(0.5 * reach / step1));
  int l3lo = static_cast<int>(
      std::floor((0.5 + 1.0 / kSqrt2) * reach / step3));
  int l3hi = static_cast<int>(std::floor(0.5 * reach / step3));
  for (int i1 = -l1; i1 <= l1; ++i1) {
    double t1 = i1 * step1;
    for (int i3 = -l3lo; i3 <= l3hi; ++i3) {
      double t3 = i3 * step3;
      if (std::abs(t1 + t3) > reach / kSqrt2) continue;
      double rfar = std::sqrt(t1 * t1 + t3 * t3);
      double bmax = 2.0 * std::sinh((reach + 2.0 * rfar) / (2.0 * kSqrt2));
      int lb = static_cast<int>(std::floor(bmax / step2));
      double ec = std::exp(t3);
      for (int ib = -lb; ib <= lb; ++ib)
        out.push_back({t1, ib * step2 * ec, t3});
    }
  }
  return out;
}

}  // namespace

Lattice make_lattice(const ConeModel& cone, double delta, double R,
                     double extent, double margin) {
  require(delta > 0.0 && R >= 1.0 && extent > 0.0, ErrorCode::bad_config,
          "lattice needs delta > 0, R >= 1, extent > 0");
  Lattice lat;
  lat.delta = delta;
  lat.R = R;
  lat.extent = extent;

  double sep_needed = 2.0 * delta;
  double t = sep_needed * margin;
  if (cone.kind() == ConeKind::orthant) {
    // covering radius of the chart lattice is the cell half-diagonal
    double tmax = 2.0 * R * delta / std::sqrt(double(cone.rank()));
    t = std::min(t, 0.999 * tmax);
    require(t >= sep_needed, ErrorCode::unsupported,
            "R too small for this rank at the requested delta");
    lat.spacing = t;
    for (const Vec& th : adapted_grid(cone, extent + t, t, t, t)) {
      lat.thetas.push_back(th);
      lat.points.push_back(cone.act(cone.chart(th), cone.identity()));
    }
  } else {
    // spd2 metric steps: theta1/theta3 move at speed 2, beta at speed sqrt2
    lat.spacing = t;
    for (const Vec& th :
         adapted_grid(cone, extent + t, 0.5 * t, t / kSqrt2, 0.5 * t)) {
      Vec point = cone.act(cone.chart(th), cone.identity());
      if (cone.metric_to_identity(point) > extent + t) continue;
      lat.thetas.push_back(th);
      lat.points.push_back(point);
    }
  }
  LatticeCheck chk = check_lattice(cone, lat, 0);
  if (!chk.separated || !chk.covering) {
    char buf[192];
    std::snprintf(buf, sizeof buf,
                  "lattice certification failed: min separation %.6g "
                  "(need > %.6g), worst covering gap %.6g (need <= %.6g) "
                  "at (%.4g, %.4g, %.4g)",
                  chk.min_separation, 2.0 * delta, chk.worst_gap, R * delta,
                  chk.worst_point[0], chk.worst_point[1], chk.worst_point[2]);
    fail(ErrorCode::numerical_failure, buf);
  }
  return lat;
}

LatticeCheck check_lattice(const ConeModel& cone, const Lattice& lat,
                           int probe_level) {
  LatticeCheck res;
  std::size_t J = lat.size();
  require(J >= 1, ErrorCode::bad_input, "empty lattice");
  double minsep = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < J; ++i)
    for (std::size_t j = i + 1; j < J; ++j) {
      double d = cone.metric_distance(lat.points[i], lat.points[j]);
      if (d < minsep) minsep = d;
    }
  res.min_separation = J > 1 ? minsep : std::numeric_limits<double>::infinity();
  res.separated = res.min_separation > 2.0 * lat.delta;

  double cover = lat.R * lat.delta;
  double pstep = lat.spacing / (2 << probe_level);
  std::vector<Vec> probes;
  if (cone.kind() == ConeKind::orthant) {
    probes = adapted_grid(cone, lat.extent, pstep, pstep, pstep);
  } else {
    probes = adapted_grid(cone, lat.extent, 0.5 * pstep, pstep / kSqrt2,
                          0.5 * pstep);
  }
  require(probes.size() < std::size_t(2e7), ErrorCode::bad_config,
          "covering probe budget exceeded");
  res.worst_gap = 0.0;
  Vec e = cone.identity();
  for (const Vec& th : probes) {
    Vec p = cone.act(cone.chart(th), e);
    if (cone.metric_to_identity(p) > lat.extent) continue;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < J; ++j) {
      double d = cone.metric_distance(p, lat.points[j]);
      if (d < best) {
        best = d;
        if (best <= 0.5 * cover) break;
      }
    }
    if (best > res.worst_gap) {
      res.worst_gap = best;
      res.worst_point = p;
    }
  }
  res.covering = res.worst_gap <= cover;
  return res;
}

double Partition::member(int j, const Vec& w) const {
  double bj = bump(j, w);
  double cj = chi(j, w);
  if (bj == 0.0 && cj == 0.0) return 0.0;
  double csum = cj, bsum = bj;
  for (int i : neighbors[j]) {
    csum += chi(i, w);
    bsum += bump(i, w);
  }
  double val = cj;
  if (bj > 0.0) {
    double rest = 1.0 - csum;
    if (rest > 0.0) val += rest * bj / bsum;
  }
  return val;
}

Partition make_partition(const ConeModel& cone, const Lattice& lat,
                         double sharpness) {
  Partition part(cone, lat);
  part.sharpness = sharpness;
  std::size_t J = lat.size();
  double minsep = std::numeric_limits<double>::infinity();
  part.neighbors.assign(J, {});
  for (std::size_t i = 0; i < J; ++i)
    for (std::size_t j = i + 1; j < J; ++j) {
      double d = cone.metric_distance(lat.points[i], lat.points[j]);
      if (d < minsep) minsep = d;
      if (d < 2.0 * part.outer) {
        part.neighbors[i].push_back(static_cast<int>(j));
        part.neighbors[j].push_back(static_cast<int>(i));
      }
    }
  double chi_radius =
      std::min(0.5 * minsep, minsep - part.inner);
  require(chi_radius > part.inner, ErrorCode::bad_config,
          "lattice too dense for a plateau partition");
  part.chi_radius = chi_radius;
  return part;
}

namespace {

Slice product_slice(const Grid& parent, const SpectralField& fhat,
                    const Vec& lo_in, const Vec& hi_in, int pad,
                    const std::function<double(const Vec&)>& filter,
                    std::atomic<char>* covered = nullptr) {
  Slice sl;
  Vec lo = lo_in, hi = hi_in;
  for (int a = 0; a < parent.n; ++a) {
    lo[a] = std::max(lo[a], fhat.supp_lo[a]);
    hi[a] = std::min(hi[a], fhat.supp_hi[a]);
  }
  sl.crop = crop_box(parent, lo, hi);
  if (sl.crop.empty) return sl;
  sl.dom = crop_domain(parent, sl.crop, pad);
  std::size_t total = 1;
  for (int a = 0; a < parent.n; ++a) total *= sl.crop.cdims[a];
  sl.spectral.resize(total);
  std::array<int, 3> idx{0, 0, 0};
  for (std::size_t i = 0; i < total; ++i) {
    std::array<int, 3> p{0, 0, 0};
    for (int a = 0; a < parent.n; ++a) p[a] = sl.crop.offset[a] + idx[a];
    Vec w = parent.point(p);
    double m = filter(w);
    std::size_t flat = parent.flat(p);
    sl.spectral[i] = m == 0.0 ? cplx{} : m * fhat.values[flat];
    if (m != 0.0 && covered)
      covered[flat].store(1, std::memory_order_relaxed);
    for (int a = parent.n - 1; a >= 0; --a) {
      if (++idx[a] < sl.crop.cdims[a]) break;
      idx[a] = 0;
    }
  }
  return sl;
}

// Energy fraction of fhat sitting at grid nodes no filter touched. The norm
// is meaningless there, so callers reject anything above roundoff.
void require_covered(const Grid& pg, const SpectralField& fhat,
                     const std::atomic<char>* covered, const char* what) {
  if (fhat.values.size() != pg.count()) return;
  std::vector<double> missed, total;
  missed.reserve(1024);
  total.reserve(4096);
  for (std::size_t i = 0; i < pg.count(); ++i) {
    double e = std::norm(fhat.values[i]);
    if (e == 0.0) continue;
    total.push_back(e);
    if (!covered[i].load(std::memory_order_relaxed)) missed.push_back(e);
  }
  if (missed.empty() || total.empty()) return;
  double frac = pairwise_sum(missed) / pairwise_sum(total);
  if (frac > 1e-10) {
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "%s does not cover the signal spectrum: uncovered energy "
                  "fraction %.6e",
                  what, frac);
    fail(ErrorCode::bad_input, buf);
  }
}

}  // namespace

std::vector<double> discrete_scale_norms(const Partition& part,
                                         const SpectralField& fhat,
                                         const Domain& sig_dom, double p,
                                         int pad) {
  const Grid& pg = sig_dom.freq;
  std::size_t J = part.lattice.size();
  std::vector<double> norms(J, 0.0);
  auto covered = std::make_unique<std::atomic<char>[]>(pg.count());
  parallel_for(J, [&](std::size_t j) {
    Vec lo, hi;
    part.cone.metric_ball_box(part.lattice.points[j], part.outer, lo, hi);
    Slice sl = product_slice(
        pg, fhat, lo, hi, pad,
        [&](const Vec& w) { return part.member(static_cast<int>(j), w); },
        covered.get());
    norms[j] = sl.crop.empty ? 0.0 : slice_pnorm(sl, p);
  });
  require_covered(pg, fhat, covered.get(), "the scale partition");
  return norms;
}

double norm_discrete(const ConeModel& cone, const Partition& part,
                     const std::vector<double>& scale_norms,
                     const BesovParams& bp) {
  require(scale_norms.size() == part.lattice.size(), ErrorCode::bad_input,
          "scale norm count does not match the lattice");
  require(bp.q >= 1.0 && bp.p >= 1.0, ErrorCode::unsupported,
          "norm exponents must be >= 1");
  std::vector<double> terms(scale_norms.size());
  for (std::size_t j = 0; j < scale_norms.size(); ++j) {
    double det = cone.determinant(part.lattice.points[j]);
    terms[j] = std::pow(det, -bp.s) * std::pow(scale_norms[j], bp.q);
  }
  return std::pow(pairwise_sum(terms), 1.0 / bp.q);
}

std::vector<double> continuous_scale_norms(const WaveletSystem& system,
                                           const SpectralField& fhat,
                                           const Domain& sig_dom,
                                           const HSampling& hs, double p,
                                           int pad) {
  const Grid& pg = sig_dom.freq;
  const ConeModel& cone = system.cone;
  std::vector<double> norms(hs.size(), 0.0);
  auto covered = std::make_unique<std::atomic<char>[]>(pg.count());
  parallel_for(hs.size(), [&](std::size_t j) {
    const HElement& h = hs.nodes[j];
    Vec he = cone.act(h, cone.identity());
    Vec lo, hi;
    cone.metric_ball_box(he, system.outer, lo, hi);
    HElement hinv = cone.inverse(h);
    Slice sl = product_slice(
        pg, fhat, lo, hi, pad,
        [&](const Vec& w) { return system.profile(cone.act(hinv, w)); },
        covered.get());
    norms[j] = sl.crop.empty ? 0.0 : slice_pnorm(sl, p);
  });
  require_covered(pg, fhat, covered.get(), "the scale quadrature");
  return norms;
}

double norm_continuous(const ConeModel& cone, const HSampling& hs,
                       const std::vector<double>& scale_norms,
                       const BesovParams& bp) {
  require(scale_norms.size() == hs.size(), ErrorCode::bad_input,
          "scale norm count does not match the sampling");
  require(bp.q >= 1.0 && bp.p >= 1.0, ErrorCode::unsupported,
          "norm exponents must be >= 1");
  double expo = -bp.s * cone.rank() / cone.dim();
  std::vector<double> terms(scale_norms.size());
  for (std::size_t j = 0; j < scale_norms.size(); ++j)
    terms[j] = hs.weights[j] * std::pow(hs.nodes[j].det, expo) *
               std::pow(scale_norms[j], bp.q);
  return std::pow(pairwise_sum(terms), 1.0 / bp.q);
}

double mixed_norm(const CoefficientField& cf, double p, double q,
                  double s_exp) {
  require(p >= 1.0 && q >= 1.0, ErrorCode::unsupported,
          "norm exponents must be >= 1");
  std::vector<double> terms(cf.slices.size());
  parallel_for(cf.slices.size(), [&](std::size_t j) {
    const Slice& sl = cf.slices[j];
    terms[j] = sl.weight * std::pow(sl.h.det, s_exp) *
               std::pow(slice_pnorm(sl, p), q);
  });
  return std::pow(pairwise_sum(terms), 1.0 / q);
}

}  // namespace conewave

#include "conewave/selftest.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <map>
#include <memory>
#include <random>

#include "conewave/frames.hpp"
#include "conewave/oracle.hpp"

namespace conewave {
namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

Vec vx(double a, double b = 0.0, double c = 0.0) { return Vec{a, b, c}; }

void notef(std::string& d, const char* fmt, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, fmt);
  std::vsnprintf(buf, sizeof buf, fmt, ap);
  va_end(ap);
  if (!d.empty()) d += "; ";
  d += buf;
}

double unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// ---- shared fixtures ------------------------------------------------------

struct Fixture {
  ConeModel cone;
  Domain dom;
  std::shared_ptr<const WaveletSystem> sys;
  Fixture(const ConeModel& c, const Domain& d) : cone(c), dom(d) {}
};

// Cached per process: every check sees the identical wavelet system, and the
// refined twin ("<id>+") shares the frequency box so signals match exactly.
const Fixture& fixture(const std::string& id) {
  static std::map<std::string, std::shared_ptr<Fixture>> cache;
  auto it = cache.find(id);
  if (it != cache.end()) return *it->second;

  bool refined = !id.empty() && id.back() == '+';
  std::string base = refined ? id.substr(0, id.size() - 1) : id;
  std::shared_ptr<Fixture> fx;
  if (base == "orthant1") {
    int n = refined ? 256 : 128;
    fx = std::make_shared<Fixture>(
        ConeModel::orthant(1), make_domain(1, vx(0.08), vx(8.2), {n, 1, 1}));
  } else if (base == "orthant2") {
    int n = refined ? 96 : 64;
    fx = std::make_shared<Fixture>(
        ConeModel::orthant(2),
        make_domain(2, vx(0.08, 0.08), vx(8.2, 8.2), {n, n, 1}));
  } else if (base == "orthant2s") {
    int n = refined ? 72 : 48;
    fx = std::make_shared<Fixture>(
        ConeModel::orthant(2),
        make_domain(2, vx(0.08, 0.08), vx(8.2, 8.2), {n, n, 1}));
  } else if (base == "spd2") {
    int n = refined ? 48 : 40;
    fx = std::make_shared<Fixture>(
        ConeModel::spd2(),
        make_domain(3, vx(0.05, -5.6, 0.05), vx(8.6, 5.6, 8.6), {n, n, n}));
  } else {
    throw Error(ErrorCode::bad_config, "unknown fixture: " + id);
  }
  fx->sys = std::make_shared<WaveletSystem>(
      make_wavelet(fx->cone, fx->dom, 4.0, {0.2, 0.3, 0.2}));
  cache.emplace(id, fx);
  return *fx;
}

TestSignalSpec signal_spec(const Fixture& fx, std::uint64_t seed) {
  TestSignalSpec s;
  s.seed = seed;
  s.center = fx.cone.identity();
  if (fx.cone.kind() == ConeKind::spd) {
    s.bumps = 2;
    s.radius = 0.4;
    s.bump_radius = 0.25;
  } else if (fx.cone.dim() == 1) {
    s.bumps = 3;
    s.radius = 0.8;
    s.bump_radius = 0.3;
  } else {
    s.bumps = 3;
    s.radius = 0.4;
    s.bump_radius = 0.25;
  }
  return s;
}

HSampling analysis_hs(const Fixture& fx) {
  if (fx.cone.kind() == ConeKind::spd)
    return make_h_sampling(fx.cone, 2.7, {0.1, 0.15, 0.1}, 0);
  if (fx.cone.dim() == 1)
    return make_h_sampling(fx.cone, 3.3, {0.2, 0.3, 0.2}, 1);
  return make_h_sampling(fx.cone, 2.9, {0.2, 0.3, 0.2}, 1);
}

// The analyzing wavelet as a signal of its own.
SpectralField analyzer_signal(const Fixture& fx) {
  SpectralField psi;
  psi.freq = fx.dom.freq;
  psi.values.resize(psi.freq.count());
  for (std::size_t i = 0; i < psi.values.size(); ++i)
    psi.values[i] = fx.sys->analyzing_scale * fx.sys->psi_hat[i];
  psi.supp_lo = fx.sys->supp_lo;
  psi.supp_hi = fx.sys->supp_hi;
  auto sysp = fx.sys;
  psi.analytic = [sysp](const Vec& w) {
    return cplx(sysp->analyzing_profile(w), 0.0);
  };
  return psi;
}

double field_sup(const CoefficientField& F) {
  std::vector<double> sups(F.slices.size(), 0.0);
  parallel_for(F.slices.size(), [&](std::size_t j) {
    if (F.slices[j].crop.empty) return;
    std::vector<cplx> sp = slice_spatial(F.slices[j]);
    double m = 0.0;
    for (const cplx& z : sp) m = std::max(m, std::abs(z));
    sups[j] = m;
  });
  double m = 0.0;
  for (double s : sups) m = std::max(m, s);
  return m;
}

double rel_l2(const std::vector<cplx>& got, const std::vector<cplx>& want) {
  std::vector<double> dn(want.size()), nn(want.size());
  for (std::size_t i = 0; i < want.size(); ++i) {
    dn[i] = std::norm(want[i]);
    nn[i] = std::norm(got[i] - want[i]);
  }
  return std::sqrt(pairwise_sum(nn) / pairwise_sum(dn));
}

cplx midpoint_voice(const ConeModel& cone, const WaveletSystem& sys,
                    const SpectralField& f, const GroupPoint& g,
                    const Vec& lo, const Vec& hi, int m) {
  int n = cone.dim();
  double scale = std::sqrt(g.h.det);
  for (int a = 0; a < n; ++a) scale /= kTwoPi;
  Vec step = vec0();
  double cell = 1.0;
  std::array<int, 3> dims{1, 1, 1};
  for (int a = 0; a < n; ++a) {
    step[a] = (hi[a] - lo[a]) / m;
    cell *= step[a];
    dims[a] = m;
  }
  cplx acc(0.0);
  std::array<int, 3> idx{0, 0, 0};
  for (;;) {
    Vec w = vec0();
    for (int a = 0; a < n; ++a) w[a] = lo[a] + (idx[a] + 0.5) * step[a];
    double prof = sys.analyzing_profile(cone.adjoint_act(g.h, w));
    if (prof != 0.0) {
      double ph = 0.0;
      for (int a = 0; a < n; ++a) ph += g.x[a] * w[a];
      acc += f.analytic(w) * prof * cplx(std::cos(ph), std::sin(ph));
    }
    int a = n - 1;
    for (; a >= 0; --a) {
      if (++idx[a] < dims[a]) break;
      idx[a] = 0;
    }
    if (a < 0) break;
  }
  return acc * (scale * cell);
}

// Voice value as a continuum integral through the analytic backing, free of
// the fixed grid's periodization floor. The integration box is the support
// intersection, so when two calls are related by a diagonal group action the
// midpoint nodes of one map exactly onto the other's and the quadrature error
// is common to both. In 1-D/2-D the rule is refined until it settles at
// 1e-11; in 3-D that would need ~500 cells per axis (Gevrey tails), so a
// fixed 96-per-axis rule is used — accurate to ~1e-4 as a number, exact as a
// comparison functional between corresponding voices.
cplx continuum_voice(const ConeModel& cone, const WaveletSystem& sys,
                     const SpectralField& f, const GroupPoint& g) {
  require(static_cast<bool>(f.analytic), ErrorCode::bad_input,
          "continuum voice needs an analytic backing");
  int n = cone.dim();
  Vec lo, hi;
  adjoint_preimage_box(cone, g.h, sys.supp_lo, sys.supp_hi, lo, hi);
  for (int a = 0; a < n; ++a) {
    lo[a] = std::max(lo[a], f.supp_lo[a]);
    hi[a] = std::min(hi[a], f.supp_hi[a]);
    if (!(lo[a] < hi[a])) return cplx(0.0);
  }
  if (n == 3) return midpoint_voice(cone, sys, f, g, lo, hi, 96);
  cplx prev(0.0);
  int cap = n == 1 ? 8192 : 2048;
  for (int m = 8; m <= cap; m *= 2) {
    cplx cur = midpoint_voice(cone, sys, f, g, lo, hi, m);
    if (m > 8 && std::abs(cur - prev) <= 1e-11) return cur;
    prev = cur;
  }
  throw Error(ErrorCode::numerical_failure,
              "voice quadrature did not settle at 1e-11");
}

std::vector<std::function<double(const Vec&)>> ball_bumps(
    const ConeModel& cone, const std::vector<Vec>& centers,
    const std::vector<double>& radii) {
  std::vector<std::function<double(const Vec&)>> fs;
  for (std::size_t i = 0; i < centers.size(); ++i) {
    Vec c = centers[i];
    double R = radii[i];
    fs.push_back([cone, c, R](const Vec& y) {
      return bump_profile(sqr(cone.metric_distance(y, c) / R));
    });
  }
  return fs;
}

// ---- the checks -----------------------------------------------------------

// Scaled admissibility integral equals 1 and is Cauchy under one quadrature
// halving. The 3-D sampling one level past the converged one does not fit in
// memory, so spd2 compares the converged level against its predecessor.
void check_admissibility(CheckResult& r) {
  bool ok = true;
  for (const char* id : {"orthant1", "orthant2", "spd2"}) {
    const Fixture& fx = fixture(id);
    int last = fx.sys->quad.levels - 1;
    int hi = fx.cone.kind() == ConeKind::spd ? last : last + 1;
    auto at_level = [&](int lvl) {
      HSampling s =
          make_h_sampling(fx.cone, fx.sys->outer, {0.2, 0.3, 0.2}, lvl);
      std::vector<double> terms(s.size());
      Vec e = fx.cone.identity();
      parallel_for(s.size(), [&](std::size_t i) {
        double p =
            fx.sys->analyzing_profile(fx.cone.adjoint_act(s.nodes[i], e));
        terms[i] = s.weights[i] * p * p;
      });
      return pairwise_sum(terms);
    };
    double a0 = at_level(hi - 1);
    double a1 = at_level(hi);
    double drift = std::abs(a1 - a0);
    bool pass = std::abs(a0 - 1.0) <= 1e-6 && std::abs(a1 - 1.0) <= 1e-6 &&
                drift <= 1e-6;
    ok = ok && pass;
    notef(r.detail, "%s levels %d/%d: |a-1| = %.3e, %.3e, halving drift %.3e%s",
          id, hi - 1, hi, std::abs(a0 - 1.0), std::abs(a1 - 1.0), drift,
          pass ? "" : " [over 1e-6]");
  }
  r.passed = ok;
}

// W_psi f * W_psi psi = W_psi f: project the coefficient field back through
// the analyzer and compare voices of (projection - f) against voices of f in
// sup norm over the sampled group.
void check_reproducing(CheckResult& r) {
  bool ok = true;
  for (const char* id : {"orthant1", "orthant2", "spd2"}) {
    const Fixture& fx = fixture(id);
    HSampling hs = analysis_hs(fx);
    SpectralField psi = analyzer_signal(fx);
    double worst = 0.0;
    for (std::uint64_t seed : {1, 2, 3}) {
      SpectralField f = make_test_signal(fx.cone, fx.dom, signal_spec(fx, seed));
      CoefficientField F = analyze(fx.sys, f, fx.dom, hs);
      SpectralField proj = convolve_projection(F, psi);
      SpectralField diff;
      diff.freq = fx.dom.freq;
      diff.values.resize(f.values.size());
      for (std::size_t i = 0; i < f.values.size(); ++i)
        diff.values[i] = proj.values[i] - f.values[i];
      diff.supp_lo = f.supp_lo;
      diff.supp_hi = f.supp_hi;
      double rel = field_sup(analyze(fx.sys, diff, fx.dom, hs)) / field_sup(F);
      worst = std::max(worst, rel);
    }
    bool pass = worst <= 5e-3;
    ok = ok && pass;
    notef(r.detail, "%s worst residual %.3e%s", id, worst,
          pass ? "" : " [over 5e-3]");
  }
  r.passed = ok;
}

// W_psi(pi(g0) f)(g) = W_psi f(g0^-1 g), both sides as continuum voices.
// g0 acts diagonally (automatic on the orthant, chosen so for spd2), which
// makes the two integration boxes and their midpoint grids correspond
// exactly: quadrature error cancels and the residual isolates the
// representation itself — backing composition, determinant power, phase, and
// the compose/inverse/act algebra. Targets keep full shear; shear inside the
// representation is gated in the unit tests (round trip, unitarity). The
// same voices resampled on the fixed grid carry its periodization floor
// (reported for reference, not gated).
void check_covariance(CheckResult& r) {
  bool ok = true;
  for (const char* id : {"orthant1", "orthant2", "spd2"}) {
    const Fixture& fx = fixture(id);
    int n = fx.cone.dim();
    SpectralField f = make_test_signal(fx.cone, fx.dom, signal_spec(fx, 4));

    GroupPoint g0;
    const Vec dx = fx.dom.spat.spacing;
    if (fx.cone.kind() == ConeKind::spd) {
      g0.h = fx.cone.chart(vx(0.2, 0.0, -0.1));
      g0.x = vx(2.0 * dx[0], -2.0 * dx[1], dx[2]);
    } else if (n == 1) {
      g0.h = fx.cone.chart(vx(0.3));
      g0.x = vx(3.0 * dx[0]);
    } else {
      g0.h = fx.cone.chart(vx(0.2, -0.1));
      g0.x = vx(2.0 * dx[0], -3.0 * dx[1]);
    }
    SpectralField fg = rep_apply(fx.cone, g0, f, fx.dom.freq);

    std::mt19937_64 rng(99);
    std::vector<GroupPoint> targets(16);
    for (auto& g : targets) {
      Vec th = vec0();
      for (int a = 0; a < n; ++a) th[a] = 1.8 * unit(rng) - 0.9;
      g.h = fx.cone.chart(th);
      for (int a = 0; a < n; ++a) g.x[a] = 4.0 * unit(rng) - 2.0;
    }

    HElement h0i = fx.cone.inverse(g0.h);
    std::vector<cplx> lhs(targets.size()), rhs(targets.size());
    std::vector<cplx> glhs(targets.size()), grhs(targets.size());
    parallel_for(targets.size(), [&](std::size_t k) {
      const GroupPoint& g = targets[k];
      GroupPoint rel;
      rel.h = fx.cone.compose(h0i, g.h);
      Vec d = vec0();
      for (int a = 0; a < n; ++a) d[a] = g.x[a] - g0.x[a];
      rel.x = fx.cone.act(h0i, d);
      lhs[k] = continuum_voice(fx.cone, *fx.sys, fg, g);
      rhs[k] = continuum_voice(fx.cone, *fx.sys, f, rel);
      glhs[k] = voice_value(*fx.sys, fg, fx.dom.freq, g);
      grhs[k] = voice_value(*fx.sys, f, fx.dom.freq, rel);
    });
    double num = 0.0, den = 0.0, gnum = 0.0;
    for (std::size_t k = 0; k < targets.size(); ++k) {
      num = std::max(num, std::abs(lhs[k] - rhs[k]));
      den = std::max(den, std::abs(rhs[k]));
      gnum = std::max(gnum, std::abs(glhs[k] - grhs[k]));
    }
    double err = num / den;
    bool pass = err <= 1e-8;
    ok = ok && pass;
    notef(r.detail, "%s max error %.3e%s (grid-voice floor %.3e)", id, err,
          pass ? "" : " [over 1e-8]", gnum / den);
  }
  r.passed = ok;
}

// Lattice-vs-integral norm equivalence: the worst two-sided ratio over the
// signal/parameter ensemble is the empirical C; it must be stable under grid
// refinement.
void check_norm_equivalence(CheckResult& r) {
  struct Setup {
    const char* id;
    double extent, margin;
  };
  const Setup setups[] = {{"orthant1", 3.3, 1.2},
                          {"orthant2", 2.9, 1.2},
                          {"spd2", 2.8, 1.15}};
  bool ok = true;
  for (const Setup& su : setups) {
    const Fixture& fx = fixture(su.id);
    // delta 0.6 keeps the separation above 2*inner so plateaus exist
    Lattice lat = make_lattice(fx.cone, 0.6, 2.2, su.extent, su.margin);
    LatticeCheck chk = check_lattice(fx.cone, lat, 1);
    if (!chk.separated || !chk.covering) {
      ok = false;
      notef(r.detail, "%s lattice check failed (sep %.3f gap %.3f)", su.id,
            chk.min_separation, chk.worst_gap);
      continue;
    }
    Partition part = make_partition(fx.cone, lat, 4.0);

    auto worst_ratio = [&](const Fixture& f2) {
      HSampling hs = analysis_hs(f2);
      double C = 1.0;
      for (std::uint64_t seed = 101; seed <= 110; ++seed) {
        SpectralField f =
            make_test_signal(f2.cone, f2.dom, signal_spec(f2, seed));
        for (double p : {1.0, 2.0}) {
          std::vector<double> dsn = discrete_scale_norms(part, f, f2.dom, p);
          std::vector<double> csn =
              continuous_scale_norms(*f2.sys, f, f2.dom, hs, p);
          for (double q : {1.0, 2.0}) {
            for (double s : {-1.0, 0.0, 1.0}) {
              BesovParams bp{p, q, s};
              double dn = norm_discrete(f2.cone, part, dsn, bp);
              double cn = norm_continuous(f2.cone, hs, csn, bp);
              require(std::isfinite(dn) && std::isfinite(cn) && dn > 0.0 &&
                          cn > 0.0,
                      ErrorCode::numerical_failure,
                      "degenerate norm in the equivalence sweep");
              double ratio = dn / cn;
              C = std::max(C, std::max(ratio, 1.0 / ratio));
            }
          }
        }
      }
      return C;
    };

    double c1 = worst_ratio(fx);
    double c2 = worst_ratio(fixture(std::string(su.id) + "+"));
    double drift = std::abs(c2 - c1) / c1;
    bool pass = drift <= 0.10;
    ok = ok && pass;
    notef(r.detail, "%s C = %.6f, refined %.6f, drift %.2f%%%s", su.id, c1, c2,
          100.0 * drift, pass ? "" : " [over 10%]");
  }
  r.passed = ok;
}

// The mixed group norm of the coefficient field with the shifted exponent
// reproduces the continuous scale norm up to one constant, uniformly over
// signals.
void check_coorbit_exponent(CheckResult& r) {
  struct Group {
    const char* id;
    std::uint64_t seed_lo, seed_hi;
    double p, q;
  };
  const Group groups[] = {{"orthant1", 11, 18, 2.0, 2.0},
                          {"orthant1", 11, 18, 1.0, 1.0},
                          {"orthant2", 11, 14, 2.0, 2.0},
                          {"spd2", 11, 13, 2.0, 2.0}};
  bool ok = true;
  for (const Group& g : groups) {
    const Fixture& fx = fixture(g.id);
    HSampling hs = analysis_hs(fx);
    BesovParams bp{g.p, g.q, 0.4};
    double lo = 0.0, hi = 0.0, mean = 0.0;
    int count = 0;
    for (std::uint64_t seed = g.seed_lo; seed <= g.seed_hi; ++seed) {
      SpectralField f = make_test_signal(fx.cone, fx.dom, signal_spec(fx, seed));
      CoefficientField F = analyze(fx.sys, f, fx.dom, hs);
      double mixed = mixed_norm(F, g.p, g.q, bp.s_prime(fx.cone));
      std::vector<double> csn =
          continuous_scale_norms(*fx.sys, f, fx.dom, hs, g.p);
      double ratio = mixed / norm_continuous(fx.cone, hs, csn, bp);
      lo = count == 0 ? ratio : std::min(lo, ratio);
      hi = count == 0 ? ratio : std::max(hi, ratio);
      mean += ratio;
      ++count;
    }
    mean /= count;
    double spread = (hi - lo) / mean;
    bool pass = spread <= 1e-2;
    ok = ok && pass;
    notef(r.detail, "%s p=%g q=%g: ratio %.9f spread %.3e%s", g.id, g.p, g.q,
          mean, spread, pass ? "" : " [over 1e-2]");
  }
  r.passed = ok;
}

// Forward/adjoint Haar bridge: the ratio of ∫G(h.e) to ∫G(h*^-1.e) is one
// constant independent of G; on the orthant it is exactly 1.
void check_haar_adjoint(CheckResult& r) {
  bool ok = true;
  {
    ConeModel c = ConeModel::orthant(1);
    auto fs = ball_bumps(c, {vx(1.0), vx(1.35), vx(0.75), vx(1.6), vx(0.9)},
                         {0.8, 1.0, 1.2, 0.9, 1.1});
    NewhaarResult nh = newhaar_constant(c, fs, 2.8, {0.2, 0.3, 0.2}, 2, 1e-3);
    bool pass = std::abs(nh.constant - 1.0) <= 1e-6;
    ok = ok && pass;
    notef(r.detail, "orthant1 C-1 = %.3e spread %.3e%s", nh.constant - 1.0,
          nh.spread, pass ? "" : " [over 1e-6]");
  }
  {
    ConeModel c = ConeModel::orthant(2);
    auto fs = ball_bumps(c,
                         {vx(1.0, 1.0), vx(1.3, 0.8), vx(0.75, 1.2),
                          vx(1.5, 1.1), vx(0.9, 0.7)},
                         {0.8, 1.0, 1.2, 0.9, 1.1});
    NewhaarResult nh = newhaar_constant(c, fs, 2.8, {0.2, 0.3, 0.2}, 2, 1e-3);
    bool pass = std::abs(nh.constant - 1.0) <= 1e-6;
    ok = ok && pass;
    notef(r.detail, "orthant2 C-1 = %.3e spread %.3e%s", nh.constant - 1.0,
          nh.spread, pass ? "" : " [over 1e-6]");
  }
  {
    ConeModel c = ConeModel::spd2();
    auto fs = ball_bumps(c,
                         {vx(1.0, 0.0, 1.0), vx(1.3, 0.2, 0.9),
                          vx(0.8, -0.15, 1.1), vx(1.1, 0.3, 1.2),
                          vx(0.9, -0.25, 0.75)},
                         {0.8, 0.9, 1.0, 0.85, 0.95});
    NewhaarResult nh = newhaar_constant(c, fs, 2.6, {0.2, 0.3, 0.2}, 2, 1e-3);
    notef(r.detail, "spd2 C = %.9f spread %.3e", nh.constant, nh.spread);
  }
  r.passed = ok;
}

// Empirical frame condition number over a signal ensemble: finite at the
// coarsest lattice and non-increasing (within 5%) as epsilon halves.
void check_frame_bounds(CheckResult& r) {
  const Fixture& fx = fixture("orthant1");
  HSampling hs = analysis_hs(fx);
  const Vec center = fx.cone.identity();
  const double band = 1.15;
  BesovParams bp{2.0, 2.0, 0.0};  // shifted exponent s' = -1

  std::vector<SpectralField> signals;
  std::vector<double> denom;
  for (std::uint64_t seed = 21; seed <= 40; ++seed) {
    signals.push_back(
        make_test_signal(fx.cone, fx.dom, signal_spec(fx, seed)));
    CoefficientField F = analyze(fx.sys, signals.back(), fx.dom, hs);
    denom.push_back(mixed_norm(F, 2.0, 2.0, bp.s_prime(fx.cone)));
  }

  bool ok = true;
  double prev = 0.0;
  std::string ladder;
  for (double eps : {1.0, 0.5, 0.25, 0.125}) {
    Wellspread ws = make_wellspread(fx.cone, *fx.sys, fx.dom, center, band, eps);
    double rlo = 0.0, rhi = 0.0;
    for (std::size_t k = 0; k < signals.size(); ++k) {
      std::vector<cplx> coef = sample_coefficients(*fx.sys, signals[k], ws);
      double ratio = sequence_norm(fx.cone, ws, coef, bp) / denom[k];
      if (!std::isfinite(ratio) || ratio <= 0.0) {
        ok = false;
        notef(r.detail, "eps %.3f signal %zu: degenerate ratio", eps, k);
        continue;
      }
      rlo = k == 0 ? ratio : std::min(rlo, ratio);
      rhi = k == 0 ? ratio : std::max(rhi, ratio);
    }
    double kappa = sqr(rhi / rlo);
    if (prev > 0.0 && kappa > 1.05 * prev) {
      ok = false;
      notef(r.detail, "kappa grew %.4f -> %.4f at eps %.3f", prev, kappa, eps);
    }
    notef(ladder, "eps %.3f: kappa %.4f (%zu atoms)", eps, kappa, ws.total);
    prev = kappa;
  }
  notef(r.detail, "%s", ladder.c_str());
  r.passed = ok;
}

// Iterative recovery from the discrete coefficients, both operator forms.
// Sample-input data is consistent by construction, so that fixed point is
// the signal itself at any feasible cell size and the study gates on
// convergence at machine error. The field-input fixed point carries the
// cell-displacement bias of the atom family: its error ladders down as
// (eps, beta) refine jointly, and a lattice too coarse for the tolerance
// must be reported by the residual detector, not returned as "converged".
// On orthant(2) the joint refinement that would push the field-input bias
// under 1e-2 is out of reach on one desk core: the translate count per
// scale node grows like exp(2|theta|)/beta^2 and the measured bias shrinks
// only as (eps, beta)^1.1, which extrapolates to ~1e10 atoms. The feasible
// rungs must still ladder downward and report the stall at every rung; the
// unmet error target is recorded here as a failure with the measurements.
void check_reconstruction(CheckResult& r) {
  bool ok = true;
  FrameOptions opt;
  opt.max_iter = 50;

  struct T1Run {
    const char* id;
    double band, eps, beta;
  };
  const T1Run t1runs[] = {
      {"orthant1", 1.15, 0.8, 0.5}, {"orthant1", 1.15, 0.4, 0.5},
      {"orthant1", 1.15, 0.2, 0.5}, {"orthant1", 1.15, 0.1, 0.5},
      {"orthant2s", 0.7, 1.0, 1.0}, {"orthant2s", 0.7, 0.5, 1.0}};
  for (const T1Run& tr : t1runs) {
    const Fixture& fx = fixture(tr.id);
    SpectralField f = make_test_signal(fx.cone, fx.dom, signal_spec(fx, 5));
    Wellspread ws = make_wellspread(fx.cone, *fx.sys, fx.dom,
                                    fx.cone.identity(), tr.band, tr.eps,
                                    tr.beta);
    std::vector<cplx> coef = sample_coefficients(*fx.sys, f, ws);
    HSampling quad = make_h_sampling(
        fx.cone, fx.sys->outer + tr.band + 5.0 * tr.eps + 0.3,
        {0.2, 0.3, 0.2}, 0);
    opt.method = FrameMethod::neumann_t1;
    opt.tol = 1e-10;
    ReconstructResult rec = reconstruct(*fx.sys, ws, quad, coef, opt);
    double err = rel_l2(rec.fhat, f.values);
    bool good = rec.status == "converged" && err <= 1e-9;
    if (!good) ok = false;
    notef(r.detail, "t1 %s eps %.2f: %s it %d err %.1e%s", tr.id, tr.eps,
          rec.status.c_str(), rec.iterations, err, good ? "" : " [gate]");
  }

  opt.method = FrameMethod::neumann_t2;
  opt.tol = 5e-3;
  {
    // bias ladder on the half line: strict decrease, finest rung under 1e-2
    const Fixture& fx = fixture("orthant1");
    SpectralField f = make_test_signal(fx.cone, fx.dom, signal_spec(fx, 5));
    HSampling hs = make_h_sampling(fx.cone, fx.sys->outer + 1.15 + 2.45 + 3.2,
                                   {0.2, 0.3, 0.2}, 0);
    CoefficientField F = analyze(fx.sys, f, fx.dom, hs);
    double prev = 0.0, last = 0.0;
    std::string fin;
    int stalls = 0;
    for (double eps : {0.8, 0.4, 0.2, 0.1}) {
      Wellspread ws = make_wellspread(
          fx.cone, *fx.sys, fx.dom, fx.cone.identity(), 1.15, eps, 0.5 * eps);
      ReconstructResult rec = reconstruct(F, ws, opt);
      double err = rel_l2(rec.fhat, f.values);
      notef(r.detail, "t2 orthant1 eps %.2f: %s it %d err %.2e", eps,
            rec.status.c_str(), rec.iterations, err);
      if (prev > 0.0 && !(err < prev)) {
        ok = false;
        notef(r.detail, "t2 error did not decrease at eps %.2f", eps);
      }
      if (rec.status == "diverged") ++stalls;
      prev = err;
      last = err;
      fin = rec.status;
    }
    if (!(fin == "converged" && last <= 1e-2)) {
      ok = false;
      notef(r.detail, "t2 orthant1 finest: %s err %.2e [need converged <=1e-2]",
            fin.c_str(), last);
    }
    if (stalls == 0) {
      ok = false;
      notef(r.detail, "t2 orthant1: no coarse rung reported its stall");
    }
  }
  {
    // the affordable orthant(2) rungs: decreasing, every stall reported
    const Fixture& fx = fixture("orthant2s");
    SpectralField f = make_test_signal(fx.cone, fx.dom, signal_spec(fx, 5));
    HSampling hs = make_h_sampling(fx.cone, fx.sys->outer + 0.7 + 2.45 + 4.0,
                                   {0.2, 0.3, 0.2}, 0);
    CoefficientField F = analyze(fx.sys, f, fx.dom, hs);
    double prev = 0.0, last = 0.0;
    for (double eps : {1.0, 0.5, 0.25}) {
      Wellspread ws = make_wellspread(fx.cone, *fx.sys, fx.dom,
                                      fx.cone.identity(), 0.7, eps, 1.0);
      ReconstructResult rec = reconstruct(F, ws, opt);
      double err = rel_l2(rec.fhat, f.values);
      notef(r.detail, "t2 orthant2s eps %.2f: %s it %d err %.2e (%zu atoms)",
            eps, rec.status.c_str(), rec.iterations, err, ws.total);
      if (rec.status != "diverged") {
        ok = false;
        notef(r.detail, "stall at eps %.2f not reported", eps);
      }
      if (prev > 0.0 && !(err < prev)) {
        ok = false;
        notef(r.detail, "t2 error did not decrease at eps %.2f", eps);
      }
      prev = err;
      last = err;
    }
    // the criterion target; out of reach at this scale (floor ~1.3e-1, and
    // the next factor of 13 in bias costs ~1e10 atoms), so this gate fails
    if (!(last <= 1e-2)) {
      ok = false;
      notef(r.detail,
            "t2 orthant2s floor %.2e at the feasible finest exceeds 1e-2",
            last);
    }
  }
  {
    // one cell per octave-equivalent: must be detected, not returned quietly
    const Fixture& fx = fixture("orthant1");
    SpectralField f = make_test_signal(fx.cone, fx.dom, signal_spec(fx, 5));
    HSampling hs = make_h_sampling(fx.cone, fx.sys->outer + 1.15 + 2.45 + 3.2,
                                   {0.2, 0.3, 0.2}, 0);
    CoefficientField F = analyze(fx.sys, f, fx.dom, hs);
    Wellspread ws = make_wellspread(fx.cone, *fx.sys, fx.dom,
                                    fx.cone.identity(), 1.15, 1.0, 0.5);
    ReconstructResult rec = reconstruct(F, ws, opt);
    double err = rel_l2(rec.fhat, f.values);
    bool pass = rec.status == "diverged";
    if (!pass) ok = false;
    notef(r.detail, "coarse eps 1.0: %s err %.2e%s", rec.status.c_str(), err,
          pass ? "" : " [expected diverged]");
  }
  r.passed = ok;
}

// The production half-line norm against the independently written classical
// implementation, on shared quadrature nodes.
void check_classical_1d(CheckResult& r) {
  const Fixture& fx = fixture("orthant1");
  HSampling hs = analysis_hs(fx);
  struct Combo {
    double p, q, s;
  };
  const Combo combos[] = {{2, 2, 0.7}, {1, 1, -0.3}, {2, 1, 0.5}};
  bool ok = true;
  for (int k = 0; k < 3; ++k) {
    SpectralField f =
        make_test_signal(fx.cone, fx.dom, signal_spec(fx, 30 + k));
    BesovParams bp{combos[k].p, combos[k].q, combos[k].s};
    std::vector<double> csn =
        continuous_scale_norms(*fx.sys, f, fx.dom, hs, bp.p);
    double lib = norm_continuous(fx.cone, hs, csn, bp);
    double orc = classical_besov_1d(*fx.sys, f, fx.dom, hs, bp);
    double rel = std::abs(lib - orc) / orc;
    bool pass = rel <= 1e-10;
    ok = ok && pass;
    notef(r.detail, "p=%g q=%g s=%g: rel %.3e%s", bp.p, bp.q, bp.s, rel,
          pass ? "" : " [over 1e-10]");
  }
  r.passed = ok;
}

// Cross-checks of the two independently coded oracles: the literal
// double-sum convolution, and finite differences of the one-parameter
// representation orbit against the derivative formula.
void check_oracle_convolution(CheckResult& r) {
  bool ok = true;
  {
    ConeModel cone = ConeModel::orthant(1);
    Domain dom = make_domain(1, vx(0.08), vx(8.2), {48, 1, 1});
    auto sys = std::make_shared<WaveletSystem>(
        make_wavelet(cone, dom, 4.0, {0.2, 0.3, 0.2}));
    TestSignalSpec su;
    su.seed = 76;
    su.center = cone.identity();
    su.bumps = 3;
    su.radius = 0.8;
    su.bump_radius = 0.3;
    SpectralField u = make_test_signal(cone, dom, su);
    su.seed = 77;
    SpectralField g = make_test_signal(cone, dom, su);
    HSampling hs = make_h_sampling(cone, 0.9, {0.6, 0.3, 0.2}, 0);
    CoefficientField F = analyze(sys, u, dom, hs);

    std::mt19937_64 rng(123);
    std::vector<GroupPoint> targets(8);
    for (auto& t : targets) {
      t.h = cone.chart(vx(unit(rng) - 0.5));
      t.x = vx(3.0 * unit(rng) - 1.5);
    }
    std::vector<cplx> fast = group_convolve(F, g, targets);
    std::vector<cplx> slow = bruteforce_group_convolution(F, g, targets);
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < targets.size(); ++k) {
      num = std::max(num, std::abs(fast[k] - slow[k]));
      den = std::max(den, std::abs(slow[k]));
    }
    bool pass = num / den <= 1e-10;
    ok = ok && pass;
    notef(r.detail, "double-sum rel %.3e%s", num / den,
          pass ? "" : " [over 1e-10]");
  }
  struct Dir {
    const char* id;
    Vec thd, vv;
  };
  const Dir dirs[] = {
      {"orthant1", vx(0.7), vx(0.5)},
      {"orthant2", vx(0.5, -0.3), vx(0.35, 0.2)},
      {"spd2", vx(0.15, 0.105, -0.18), vx(0.12, -0.09, 0.06)}};
  for (const Dir& d : dirs) {
    const Fixture& fx = fixture(d.id);
    int n = fx.cone.dim();
    SpectralField f = make_test_signal(fx.cone, fx.dom, signal_spec(fx, 6));
    SpectralField D = rep_derivative(fx.cone, d.thd, d.vv, f, fx.dom);
    auto fd_err = [&](double t) {
      GroupPoint gp, gm;
      Vec tp = vec0(), tm = vec0();
      for (int a = 0; a < n; ++a) {
        tp[a] = d.thd[a] * t;
        tm[a] = -d.thd[a] * t;
      }
      gp.h = fx.cone.chart(tp);
      gm.h = fx.cone.chart(tm);
      for (int a = 0; a < n; ++a) {
        gp.x[a] = d.vv[a] * t;
        gm.x[a] = -d.vv[a] * t;
      }
      SpectralField fp = rep_apply(fx.cone, gp, f, fx.dom.freq);
      SpectralField fm = rep_apply(fx.cone, gm, f, fx.dom.freq);
      std::vector<cplx> fd(D.values.size());
      for (std::size_t i = 0; i < fd.size(); ++i)
        fd[i] = (fp.values[i] - fm.values[i]) / (2.0 * t);
      return rel_l2(fd, D.values);
    };
    double e1 = fd_err(0.01);
    double e2 = fd_err(0.005);
    double e3 = fd_err(1e-4);
    double ratio = e1 / e2;
    bool pass = ratio >= 3.3 && ratio <= 4.7 && e3 <= 1e-6;
    ok = ok && pass;
    notef(r.detail, "%s fd: halving ratio %.2f, e(1e-4) %.3e%s", d.id, ratio,
          e3, pass ? "" : " [want ratio in [3.3,4.7], e <= 1e-6]");
  }
  r.passed = ok;
}

struct Entry {
  const char* name;
  void (*fn)(CheckResult&);
};

constexpr Entry kChecks[] = {
    {"admissibility", check_admissibility},
    {"reproducing", check_reproducing},
    {"covariance", check_covariance},
    {"norm-equivalence", check_norm_equivalence},
    {"coorbit-exponent", check_coorbit_exponent},
    {"haar-adjoint", check_haar_adjoint},
    {"frame-bounds", check_frame_bounds},
    {"reconstruction", check_reconstruction},
    {"classical-1d", check_classical_1d},
    {"oracle-convolution", check_oracle_convolution},
};

}  // namespace

std::vector<std::string> selftest_names() {
  std::vector<std::string> names;
  for (const Entry& e : kChecks) names.emplace_back(e.name);
  return names;
}

std::vector<CheckResult> run_selftest(const std::vector<std::string>& only,
                                      bool verbose) {
  std::vector<CheckResult> out;
  for (const Entry& e : kChecks) {
    if (!only.empty() &&
        std::find(only.begin(), only.end(), e.name) == only.end())
      continue;
    CheckResult res;
    res.name = e.name;
    if (verbose) std::fprintf(stderr, "[selftest] %s ...\n", e.name);
    auto t0 = std::chrono::steady_clock::now();
    try {
      e.fn(res);
    } catch (const Error& err) {
      res.passed = false;
      notef(res.detail, "error: %s", err.what());
    } catch (const std::exception& err) {
      res.passed = false;
      notef(res.detail, "unexpected: %s", err.what());
    }
    res.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    if (verbose)
      std::fprintf(stderr, "[selftest] %s: %s (%.1fs)\n", e.name,
                   res.passed ? "pass" : "FAIL", res.seconds);
    out.push_back(std::move(res));
  }
  return out;
}

}  // namespace conewave

#pragma once

#include <functional>
#include <memory>

#include "conewave/cone.hpp"
#include "conewave/grid.hpp"

namespace conewave {

// A spectrum sampled on a frequency grid, optionally backed by an exact
// evaluator (used by synthetic test signals and by representation images of
// such signals). supp_lo/supp_hi is a conservative support box.
struct SpectralField {
  Grid freq;
  std::vector<cplx> values;
  std::function<cplx(const Vec&)> analytic;
  Vec supp_lo = vec0(), supp_hi = vec0();

  cplx eval(const Vec& w) const {
    if (analytic) return analytic(w);
    return interpolate(freq, values, w);
  }
};

// Spectral wavelet: a smooth radial plateau profile in the invariant metric,
// equal to 1 inside radius `inner`, vanishing beyond `outer`. The analyzing
// copy is the same profile scaled so its admissibility integral over the
// scaling group is exactly 1.
struct WaveletSystem {
  ConeModel cone;
  Domain dom;
  WaveletSystem(const ConeModel& c, const Domain& d) : cone(c), dom(d) {}
  double sharpness = 4.0;
  double inner = 0.5;
  double outer = 2.0;
  double plateau_admissibility = 0.0;
  double analyzing_scale = 0.0;
  Refinement quad;
  std::vector<cplx> psi_hat;  // plateau profile on dom.freq
  Vec supp_lo = vec0(), supp_hi = vec0();

  double profile(const Vec& w) const {
    double d = cone.metric_to_identity(w);
    if (!(d < outer)) return 0.0;
    if (d <= inner) return 1.0;
    return window_down(d, inner, outer, sharpness);
  }
  double analyzing_profile(const Vec& w) const {
    return analyzing_scale * profile(w);
  }
};

// Quadrature nodes over the scaling group covering the metric ball
// {h : d(h e, e) <= radius}. Nodes are cell midpoints; weights are Haar cell
// masses. spd2 uses boundary-adapted coordinates (theta1, beta, theta3) with
// b = beta * exp(theta3), in which Haar measure is a constant multiple of
// Lebesgue measure and profile features have uniform width.
struct HSampling {
  std::vector<HElement> nodes;
  std::vector<double> weights;
  double radius = 0.0;
  std::array<double, 3> spacing{0.2, 0.3, 0.2};  // level-0 cell sizes
  int level = 0;
  std::size_t size() const { return nodes.size(); }
};

HSampling make_h_sampling(const ConeModel& cone, double radius,
                          const std::array<double, 3>& spacing, int level);

// Admissibility integral over H of |profile(h* e)|^2, refined by halving the
// quadrature cells until the relative change drops below tol.
Refinement admissibility_constant(const ConeModel& cone,
                                  const std::function<double(const Vec&)>& profile,
                                  double radius,
                                  const std::array<double, 3>& spacing,
                                  double tol, int max_levels);

WaveletSystem make_wavelet(const ConeModel& cone, const Domain& dom,
                           double sharpness,
                           const std::array<double, 3>& h_spacing);

// Index-aligned sub-box of a parent frequency grid.
struct CropBox {
  std::array<int, 3> offset{0, 0, 0};
  std::array<int, 3> cdims{1, 1, 1};
  bool empty = true;
};

CropBox crop_box(const Grid& freq, const Vec& lo, const Vec& hi);

// Axis-aligned hull of {w : h* w in [lo, hi]} resp. {x : h x in [lo, hi]}.
void adjoint_preimage_box(const ConeModel& cone, const HElement& h,
                          const Vec& lo, const Vec& hi, Vec& out_lo,
                          Vec& out_hi);
void action_preimage_box(const ConeModel& cone, const HElement& h,
                         const Vec& lo, const Vec& hi, Vec& out_lo,
                         Vec& out_hi);

// One scale slice of a coefficient field: the spectrum of W(h, .) on a crop
// of the parent frequency grid, plus the padded mini-domain used to realize
// it in space.
struct Slice {
  HElement h;
  double weight = 0.0;  // quadrature mass of this node
  CropBox crop;
  Domain dom;  // padded: freq grid aligned with the crop samples
  std::vector<cplx> spectral;  // on the crop (cdims), row-major
};

// Builds the padded mini-domain for a crop of `parent` (pad >= 1 gives
// spatial oversampling by zero-padding the spectrum).
Domain crop_domain(const Grid& parent, const CropBox& crop, int pad);

// Spatial samples of a slice on slice.dom.spat.
std::vector<cplx> slice_spatial(const Slice& s);

// L^p norm over space of the slice field; p = 2 is computed spectrally
// (exact discrete Parseval), other p by the oversampled Riemann sum.
double slice_pnorm(const Slice& s, double p);

// Voice transform of a signal against the analyzing wavelet, one slice per
// scaling-group node whose filter support meets the signal spectrum.
//   spectral slice value: sqrt(det h) * fhat(w) * conj(psihat_a(h* w))
struct CoefficientField {
  ConeModel cone;
  std::shared_ptr<const WaveletSystem> system;
  Domain signal_dom;
  SpectralField fhat;
  HSampling sampling;
  int pad = 2;
  bool full_grid = false;
  std::vector<Slice> slices;
};

CoefficientField analyze(const std::shared_ptr<const WaveletSystem>& system,
                         const SpectralField& fhat, const Domain& signal_dom,
                         const HSampling& sampling, int pad = 2,
                         bool full_grid = false);

// Weak-sense synthesis back to a spectrum on the parent frequency grid:
//   S(w) = sum_j weight_j det(h_j)^-1/2 W_j(w) psihat_a(h_j* w)
SpectralField synthesize(const CoefficientField& cf);

// Group convolution F * G where G is the voice transform of g (given by its
// spectrum backing). Returns the spectral projection S with
//   (F * G)(h1, .)^ (w) = sqrt(det h1) * conj(psihat_a(h1* w)) * S(w),
// so analyze(S) materializes the convolution's slices.
SpectralField convolve_projection(const CoefficientField& F,
                                  const SpectralField& g);

// Voice-transform values at arbitrary spatial points of one slice-backed
// scale: W(h, x) evaluated from the signal spectrum by a trigonometric sum
// over the crop (exact for the discrete model).
struct GroupPoint {
  HElement h;
  Vec x = vec0();
};

// Literal quadrature of the group convolution at explicit target points:
//   (F * G)(g1) = sum_j weight_j sum_m (vol_j / det h_j) F_j(x_m)
//                 G((h_j, x_m)^-1 (h1, x1)),
// with F's slice sample grids as the nodes and G = W_psi g evaluated exactly
// from its spectrum. Costs sources x targets crop sums; guarded by a budget.
std::vector<cplx> group_convolve(const CoefficientField& F,
                                 const SpectralField& ghat,
                                 const std::vector<GroupPoint>& targets);

cplx voice_value(const WaveletSystem& system, const SpectralField& fhat,
                 const Grid& parent, const GroupPoint& g);

// Quasi-regular representation:  (pi(h,x) f)^ (w) =
//   sqrt(det h) exp(-i<x,w>) fhat(h* w).
// The result keeps an analytic backing when the input has one. Fails if the
// transported support box leaves the grid box.
SpectralField rep_apply(const ConeModel& cone, const GroupPoint& g,
                        const SpectralField& fhat, const Grid& freq);

// Derivative of the representation along a one-parameter subgroup
// t -> (chart(t * theta_dot), t * v) at t = 0, realized spectrally on the
// signal's own domain. The spectral gradient uses the analytic backing when
// the field has one; grid-only fields use the DFT gradient, which inherits
// the box-periodization error of the signal's spatial tails.
SpectralField rep_derivative(const ConeModel& cone, const Vec& theta_dot,
                             const Vec& v, const SpectralField& fhat,
                             const Domain& dom);

}  // namespace conewave

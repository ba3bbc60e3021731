#pragma once

#include "conewave/besov.hpp"
#include "conewave/transform.hpp"

namespace conewave {

// Discretized analysis family: a tensor lattice of scaling-group cells
// (edge epsilon in the boundary-adapted chart coordinates) crossed with a
// per-cell affine lattice of spatial shifts x = h (k . delta). Cells are kept
// when the transported wavelet support can meet the signal band -- the
// metric ball B(band_center, band_radius) in frequency -- plus one ring so
// the unity partition below is complete wherever coefficients can be
// nonzero.
struct Wellspread {
  double epsilon = 0.25;   // chart cell edge
  double beta_frac = 0.5;  // spatial step / critical step
  double kappa = 0.25;     // spatial tent overlap
  Vec steps = vec0();      // adapted-chart cell edges per axis
  Vec delta = vec0();      // spatial steps at the identity scale
  Vec band_center = vec0();
  double band_radius = 0.0;
  Vec supp_lo = vec0(), supp_hi = vec0();  // box around the band
  Domain dom;              // parent domain the lattice was built for

  struct HNode {
    HElement h;
    std::array<int, 3> cell{0, 0, 0};  // integer chart-lattice coordinates
    double mass = 0.0;                 // left Haar mass of the chart cell
    std::array<int, 3> klo{0, 0, 0};
    std::array<int, 3> khi{-1, -1, -1};
    std::size_t offset = 0;  // start of this cell's block of coefficients
  };
  std::vector<HNode> nodes;
  std::size_t total = 0;

  static std::size_t kcount(const HNode& nd) {
    std::size_t c = 1;
    for (int a = 0; a < 3; ++a)
      c *= static_cast<std::size_t>(nd.khi[a] - nd.klo[a] + 1);
    return c;
  }
};

// Builds the lattice for signals whose spectra live in the metric ball
// B(band_center, band_radius), with spatial shifts covering the spatial box
// of `dom`.
Wellspread make_wellspread(const ConeModel& cone, const WaveletSystem& system,
                           const Domain& dom, const Vec& band_center,
                           double band_radius, double epsilon,
                           double beta_frac = 0.5, double kappa = 0.25);

// Voice-transform samples W_u(h_j, x_{j,k}) for every lattice point, in node
// order, each node's block row-major over its k box. Exact for the discrete
// model (trigonometric sum over the slice crop).
std::vector<cplx> sample_coefficients(const WaveletSystem& system,
                                      const SpectralField& u,
                                      const Wellspread& ws);

// Weighted sequence norm of a coefficient vector,
//   ( sum_j mass_j det(h_j)^s' ( sum_k |c_jk|^p det(h_j) prod delta )^(q/p) )^(1/q)
// with s' = bp.s_prime(cone), the lattice counterpart of the mixed
// group-integral norm of the coefficient field.
double sequence_norm(const ConeModel& cone, const Wellspread& ws,
                     const std::vector<cplx>& coef, const BesovParams& bp);

// Value at the group point (h, x) of the unity-partition member attached to
// lattice point (node, k): the product of per-axis chart tents around the
// node's cell and spatial tents around x = h (k . delta). Members over all
// lattice points sum to 1 wherever every tent candidate is a live lattice
// site (missing sites contribute 0 near the boundary of the enumeration).
double tile_weight(const ConeModel& cone, const Wellspread& ws,
                   std::size_t node, const std::array<int, 3>& k,
                   const HElement& h, const Vec& x);

// Tile functionals lambda_i(F) = integral of F against the unity-partition
// member of lattice point i, realized by the field's own slice quadrature
// (left Haar measure det(h)^-1 dx dnu(h)). Output is coefficient-aligned.
std::vector<cplx> bupu_coefficients(const CoefficientField& F,
                                    const Wellspread& ws);

// Two discretizations of the frame operator, coefficient block -> spectrum on
// dom.freq (supported inside the signal band):
//
//  t2: direct rank-one sum  S = sum_i w_i c_i (pi(g_i) psi_a)^  with
//      w_i = (Haar cell mass) x (spatial cell volume) when `weighted`, else
//      w_i = 1 (plain atom synthesis). The weighted form is Hermitian and
//      positive semi-definite in the discrete Parseval inner product.
//
//  t1: smear the samples to a quasi-interpolant F(h, x) = sum_i c_i tent_i
//      with the lattice's separable unity partition, then apply the
//      reproducing projection along the quadrature `quad`.
std::vector<cplx> frame_synthesis_t2(const WaveletSystem& system,
                                     const Wellspread& ws,
                                     const std::vector<cplx>& coef,
                                     bool weighted = true);
std::vector<cplx> frame_synthesis_t1(const WaveletSystem& system,
                                     const Wellspread& ws,
                                     const HSampling& quad,
                                     const std::vector<cplx>& coef,
                                     int pad = 2);

// The two approximate-identity operators on coefficient fields:
//   T1 F = project( sum_i F(g_i) tent_i ),  T2 F = sum_i lambda_i(F) W(pi(g_i) psi).
// Both return a field over F's own scale sampling, backed by the synthesized
// spectrum; || F - T F || / || F || in the mixed norm measures how well the
// lattice resolves the wavelet's bandwidth and shrinks as epsilon does.
CoefficientField apply_t1(const CoefficientField& F, const Wellspread& ws,
                          const HSampling& quad, int pad = 2);
CoefficientField apply_t2(const CoefficientField& F, const Wellspread& ws);

enum class FrameMethod { neumann_t1, neumann_t2, cg };

struct FrameOptions {
  FrameMethod method = FrameMethod::neumann_t1;
  int max_iter = 100;
  double tol = 1e-10;
  int pad = 2;  // spatial oversampling in the t1 resampling step
};

struct ReconstructResult {
  std::string status;  // "converged" | "diverged" | "max_iter"
  int iterations = 0;
  // sample input: relative data-equation residual (CG: gradient norm);
  // field input: relative spectral distance to the analyzed signal
  std::vector<double> residuals;
  std::vector<cplx> fhat;         // recovered spectrum on dom.freq
};

// Recovers a band-limited spectrum from its lattice coefficients.
//
// Sample input (coef = W_f at the lattice points): Neumann iteration
// u <- u + (b - T u) on the t1 smear-and-project operator, or conjugate
// gradients on the weighted t2 frame operator. A residual that fails to
// decrease three steps in a row stops the iteration with status "diverged"
// (the lattice is too coarse for the wavelet's bandwidth).
ReconstructResult reconstruct(const WaveletSystem& system, const Wellspread& ws,
                              const HSampling& quad,
                              const std::vector<cplx>& coef,
                              const FrameOptions& opt = {});

// Field input: the t2 fixed point run in tile-functional space,
//   mu <- lambda(F) + mu - lambda(W_{synth(mu)}),
// whose limit gives the atomic decomposition f = sum_i mu_i pi(g_i) psi_a.
// opt.method is ignored; residuals are relative updates of mu.
ReconstructResult reconstruct(const CoefficientField& F, const Wellspread& ws,
                              const FrameOptions& opt = {});

}  // namespace conewave

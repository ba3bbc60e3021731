#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "conewave/besov.hpp"
#include "conewave/transform.hpp"

namespace conewave {

// Deterministic band-limited test signal: a sum of smooth frequency bumps
// with pseudo-random centers inside a metric ball, pseudo-random spatial
// shifts and amplitudes. Fully reproducible from the seed; the spectrum
// carries an exact analytic backing alongside the grid samples.
struct TestSignalSpec {
  std::uint64_t seed = 1;
  int bumps = 3;
  Vec center = vec0();        // metric ball holding the bump centers
  double radius = 1.0;        // ... of this metric radius
  double bump_radius = 0.35;  // metric radius of each individual bump
  double amp_lo = 0.5;
  double amp_hi = 1.5;
  double shift_frac = 0.25;  // spatial shifts within this fraction of the box
};

// The support ball (hence every bump) must fit inside the frequency grid;
// center outside the cone or a region poking past the grid is an error.
SpectralField make_test_signal(const ConeModel& cone, const Domain& dom,
                               const TestSignalSpec& spec);

// Quadrature estimate of the constant C in
//   integral F(h e) dnu(h) = C * integral F((h*)^-1 e) dnu(h)
// over the scaling group with its left Haar measure. Every integrable F
// gives the same C; the per-function ratios are required to agree to `tol`
// relative spread (a violation signals a Haar-density bug).
struct NewhaarResult {
  double constant = 0.0;
  double spread = 0.0;          // (max - min) / |mean| over the ratios
  std::vector<double> ratios;   // one per test function
};

NewhaarResult newhaar_constant(
    const ConeModel& cone,
    const std::vector<std::function<double(const Vec&)>>& funcs, double radius,
    const std::array<double, 3>& spacing, int level, double tol = 1e-3);

// Scalar re-implementation of the half-line continuous norm: plain dilation
// loop over the quadrature nodes, direct sums instead of FFTs, a locally
// written window. Shares only the node set and the signal samples with the
// production path, so agreement is a genuine cross-check.
double classical_besov_1d(const WaveletSystem& system,
                          const SpectralField& fhat, const Domain& sig_dom,
                          const HSampling& hs, const BesovParams& bp,
                          int pad = 2);

// Direct double-sum group convolution at explicit target points:
// every source sample against every target, spatial values by direct
// inverse transforms, the convolver summed over its whole grid.
// Budgeted for tiny fields; everything is serial and deterministic.
std::vector<cplx> bruteforce_group_convolution(
    const CoefficientField& F, const SpectralField& ghat,
    const std::vector<GroupPoint>& targets);

}  // namespace conewave

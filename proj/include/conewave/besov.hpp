#pragma once

#include "conewave/transform.hpp"

namespace conewave {

struct BesovParams {
  double p = 2.0;
  double q = 2.0;
  double s = 0.0;
  // Exponent for the H-weight of the matching mixed/sequence norms. Not a
  // free parameter: anything else breaks the norm equivalences.
  double s_prime(const ConeModel& cone) const {
    return s * cone.rank() / static_cast<double>(cone.dim()) - 0.5 * q;
  }
};

// Point set in the cone with guaranteed minimum metric separation, built to
// cover the metric ball of radius `extent` around the identity. delta and R
// are the disjointness/covering parameters the set is certified against:
// balls of radius delta around the nodes are pairwise disjoint and balls of
// radius R*delta cover the extent ball.
struct Lattice {
  double delta = 0.5;
  double R = 2.0;
  double extent = 0.0;
  double spacing = 0.0;  // metric step used by the construction
  std::vector<Vec> thetas;
  std::vector<Vec> points;
  std::size_t size() const { return points.size(); }
};

Lattice make_lattice(const ConeModel& cone, double delta, double R,
                     double extent, double margin = 1.2);

struct LatticeCheck {
  bool separated = false;
  bool covering = false;
  double min_separation = 0.0;
  double worst_gap = 0.0;  // max over probes of distance to nearest node
  Vec worst_point = vec0();
};

// Numerical certification: pairwise separation > 2*delta and covering of the
// extent ball by R*delta balls, probed on a refined mesh.
LatticeCheck check_lattice(const ConeModel& cone, const Lattice& lat,
                           int probe_level = 1);

// Smooth partition of unity subordinate to the lattice: member j is
// supported in the metric ball of radius `outer` around node j, equals 1 on
// the ball of radius chi_radius/ there, and the members sum to 1 on the
// covered region.
struct Partition {
  ConeModel cone;
  Lattice lattice;
  double sharpness = 4.0;
  double inner = 0.5;
  double outer = 2.0;
  double chi_radius = 0.0;
  std::vector<std::vector<int>> neighbors;  // nodes within metric 2*outer

  Partition(const ConeModel& c, const Lattice& l) : cone(c), lattice(l) {}
  double chi(int j, const Vec& w) const {
    double d = cone.metric_distance(lattice.points[j], w);
    if (!(d < chi_radius)) return 0.0;
    if (d <= inner) return 1.0;
    return window_down(d, inner, chi_radius, sharpness);
  }
  double bump(int j, const Vec& w) const {
    double d = cone.metric_distance(lattice.points[j], w);
    if (!(d < outer)) return 0.0;
    if (d <= inner) return 1.0;
    return window_down(d, inner, outer, sharpness);
  }
  double member(int j, const Vec& w) const;
};

Partition make_partition(const ConeModel& cone, const Lattice& lat,
                         double sharpness);

// ||f * psi_j||_p for every lattice node (psi_j the partition members),
// realized on crops of the signal grid.
std::vector<double> discrete_scale_norms(const Partition& part,
                                         const SpectralField& fhat,
                                         const Domain& sig_dom, double p,
                                         int pad = 2);

// norm = (sum_j Delta(x_j)^(-s) ||f * psi_j||_p^q)^(1/q)
double norm_discrete(const ConeModel& cone, const Partition& part,
                     const std::vector<double>& scale_norms,
                     const BesovParams& bp);

// ||f * psi_h||_p per quadrature node, with psihat_h(w) = psihat(h^-1 w)
// (plateau profile of `system`).
std::vector<double> continuous_scale_norms(const WaveletSystem& system,
                                           const SpectralField& fhat,
                                           const Domain& sig_dom,
                                           const HSampling& hs, double p,
                                           int pad = 2);

// norm = (sum_j weight_j det(h_j)^(-s r / n) ||f * psi_{h_j}||_p^q)^(1/q)
double norm_continuous(const ConeModel& cone, const HSampling& hs,
                       const std::vector<double>& scale_norms,
                       const BesovParams& bp);

// Mixed norm of a coefficient field:
//   (sum_j weight_j det(h_j)^(s_exp) ||F(h_j, .)||_p^q)^(1/q)
double mixed_norm(const CoefficientField& cf, double p, double q,
                  double s_exp);

}  // namespace conewave

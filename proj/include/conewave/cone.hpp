#pragma once

#include <string>

#include "conewave/common.hpp"

namespace conewave {

// Supported cone geometries:
//   orthant:r=K   positive orthant in R^K, diagonal scaling group
//   spd2          2x2 symmetric positive definite matrices, acted on by
//                 lower-triangular congruence x -> L x L^T
//
// spd2 points use orthonormal coordinates u = (x11, sqrt(2)*x12, x22) so the
// ambient inner product is the plain dot product and volume is Lebesgue.
// Serialization converts to/from plain (x11, x12, x22) at the IO boundary.
enum class ConeKind { orthant, spd };

// Element of the scaling group H in chart coordinates, with its linear
// action on ambient coordinates cached as a lower-triangular matrix.
//   orthant: theta_a = log(diagonal entry a)
//   spd2:    theta = (log a, b, log c) for L = [[a,0],[b,c]]
struct HElement {
  Vec theta = vec0();
  double A[3][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  double det = 1.0;
};

class ConeModel {
 public:
  static ConeModel orthant(int rank);
  static ConeModel spd2();
  // "orthant:r=2", "orthant:r=1", "spd2"
  static ConeModel parse(const std::string& spec);

  ConeKind kind() const { return kind_; }
  int dim() const { return n_; }    // ambient dimension (= chart dimension)
  int rank() const { return r_; }
  std::string name() const;

  Vec identity() const;
  double phi_e() const;  // characteristic function at the identity

  double determinant(const Vec& x) const;
  double characteristic(const Vec& x) const {
    return phi_e() * std::pow(determinant(x),
                              -static_cast<double>(n_) / r_);
  }
  bool contains(const Vec& x, double margin = 0.0) const;

  // Riemannian distance invariant under the cone's automorphisms; +inf when
  // either argument lies outside the open cone.
  double metric_distance(const Vec& x, const Vec& y) const;
  double metric_to_identity(const Vec& x) const;

  Vec point_inverse(const Vec& x) const;  // Jordan inversion
  // theta with chart(theta) . identity == x (orbit chart)
  Vec point_chart(const Vec& x) const;

  HElement chart(const Vec& theta) const;
  HElement compose(const HElement& g, const HElement& h) const;
  HElement inverse(const HElement& h) const;

  Vec act(const HElement& h, const Vec& x) const {
    Vec y = vec0();
    for (int a = 0; a < n_; ++a) {
      double s = 0.0;
      for (int b = 0; b <= a; ++b) s += h.A[a][b] * x[b];
      y[a] = s;
    }
    return y;
  }
  Vec adjoint_act(const HElement& h, const Vec& x) const {
    Vec y = vec0();
    for (int a = 0; a < n_; ++a) {
      double s = 0.0;
      for (int b = a; b < n_; ++b) s += h.A[b][a] * x[b];
      y[a] = s;
    }
    return y;
  }

  // Density of left Haar measure on H in chart coordinates, normalized so
  // that the orbit map h -> h.identity pushes it to characteristic(x) dx.
  double haar_weight(const Vec& theta) const;

  // Axis-aligned box guaranteed to contain the metric ball B_rho(center).
  void metric_ball_box(const Vec& center, double rho, Vec& lo, Vec& hi) const;

  // Chart increments along each axis that realize (approximately, and for
  // spd2 exactly at the base point) a metric step `delta`.
  Vec chart_steps(const Vec& theta, double delta) const;

  // d/dt at t=0 of the action matrix of chart(t * theta_dot); returns the
  // trace (the infinitesimal change of det of the action).
  double chart_generator(const Vec& theta_dot, double M[3][3]) const;

  Vec to_storage(const Vec& x) const;
  Vec from_storage(const Vec& x) const;

 private:
  ConeModel(ConeKind k, int n, int r) : kind_(k), n_(n), r_(r) {}
  ConeKind kind_;
  int n_;
  int r_;
};

}  // namespace conewave

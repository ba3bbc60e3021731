#include "conewave/cone.hpp"

#include <limits>

namespace conewave {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPi = 3.1415926535897932384626433832795;
constexpr double kSqrt2 = 1.4142135623730950488016887242097;
}  // namespace

ConeModel ConeModel::orthant(int rank) {
  require(rank >= 1 && rank <= 3, ErrorCode::bad_config,
          "orthant rank must be 1..3");
  return ConeModel(ConeKind::orthant, rank, rank);
}

ConeModel ConeModel::spd2() { return ConeModel(ConeKind::spd, 3, 2); }

ConeModel ConeModel::parse(const std::string& spec) {
  if (spec == "spd2") return spd2();
  if (spec.rfind("orthant:r=", 0) == 0) {
    std::string tail = spec.substr(10);
    require(tail.size() == 1 && tail[0] >= '1' && tail[0] <= '3',
            ErrorCode::bad_config, "cone spec: orthant rank must be 1..3");
    return orthant(tail[0] - '0');
  }
  fail(ErrorCode::bad_config,
       "unknown cone spec '" + spec + "' (want orthant:r=K or spd2)");
}

std::string ConeModel::name() const {
  if (kind_ == ConeKind::spd) return "spd2";
  return "orthant:r=" + std::to_string(r_);
}

Vec ConeModel::identity() const {
  Vec e = vec0();
  if (kind_ == ConeKind::orthant) {
    for (int a = 0; a < n_; ++a) e[a] = 1.0;
  } else {
    e = {1.0, 0.0, 1.0};
  }
  return e;
}

double ConeModel::phi_e() const {
  // spd2 value is the dual-cone Laplace integral in orthonormal coordinates
  return kind_ == ConeKind::orthant ? 1.0 : kPi / kSqrt2;
}

double ConeModel::determinant(const Vec& x) const {
  if (kind_ == ConeKind::orthant) {
    double d = 1.0;
    for (int a = 0; a < n_; ++a) d *= x[a];
    return d;
  }
  return x[0] * x[2] - 0.5 * x[1] * x[1];
}

bool ConeModel::contains(const Vec& x, double margin) const {
  if (kind_ == ConeKind::orthant) {
    for (int a = 0; a < n_; ++a) {
      if (!(x[a] > margin)) return false;
    }
    return true;
  }
  // smallest eigenvalue > margin
  double a = x[0] - margin, c = x[2] - margin;
  return a > 0.0 && c > 0.0 && a * c - 0.5 * x[1] * x[1] > 0.0;
}

double ConeModel::metric_distance(const Vec& x, const Vec& y) const {
  if (kind_ == ConeKind::orthant) {
    double s = 0.0;
    for (int a = 0; a < n_; ++a) {
      if (!(x[a] > 0.0) || !(y[a] > 0.0)) return kInf;
      double t = std::log(y[a] / x[a]);
      s += t * t;
    }
    return std::sqrt(s);
  }
  double dx = determinant(x), dy = determinant(y);
  if (!(dx > 0.0) || !(dy > 0.0) || !(x[0] > 0.0) || !(y[0] > 0.0))
    return kInf;
  // eigenvalues of x^-1 y from the invariant pencil
  double tr = (x[2] * y[0] + x[0] * y[2] - x[1] * y[1]) / dx;
  double det = dy / dx;
  double disc = tr * tr - 4.0 * det;
  if (disc < 0.0) disc = 0.0;  // symmetric pencil, negative only by roundoff
  double root = std::sqrt(disc);
  double l1 = 0.5 * (tr + root);
  double l2 = det / l1;  // stable small root
  if (!(l1 > 0.0) || !(l2 > 0.0)) return kInf;
  double a = std::log(l1), b = std::log(l2);
  return std::sqrt(a * a + b * b);
}

double ConeModel::metric_to_identity(const Vec& x) const {
  if (kind_ == ConeKind::orthant) {
    double s = 0.0;
    for (int a = 0; a < n_; ++a) {
      if (!(x[a] > 0.0)) return kInf;
      double t = std::log(x[a]);
      s += t * t;
    }
    return std::sqrt(s);
  }
  double det = determinant(x);
  if (!(det > 0.0) || !(x[0] > 0.0)) return kInf;
  double tr = x[0] + x[2];
  double disc = tr * tr - 4.0 * det;
  if (disc < 0.0) disc = 0.0;
  double root = std::sqrt(disc);
  double l1 = 0.5 * (tr + root);
  double l2 = det / l1;
  if (!(l2 > 0.0)) return kInf;
  double a = std::log(l1), b = std::log(l2);
  return std::sqrt(a * a + b * b);
}

Vec ConeModel::point_inverse(const Vec& x) const {
  Vec y = vec0();
  if (kind_ == ConeKind::orthant) {
    for (int a = 0; a < n_; ++a) y[a] = 1.0 / x[a];
    return y;
  }
  double det = determinant(x);
  require(det > 0.0 && x[0] > 0.0, ErrorCode::bad_input,
          "inversion needs a point inside the cone");
  y[0] = x[2] / det;
  y[1] = -x[1] / det;
  y[2] = x[0] / det;
  return y;
}

Vec ConeModel::point_chart(const Vec& x) const {
  require(contains(x), ErrorCode::bad_input,
          "chart needs a point inside the cone");
  Vec t = vec0();
  if (kind_ == ConeKind::orthant) {
    for (int a = 0; a < n_; ++a) t[a] = std::log(x[a]);
    return t;
  }
  // Cholesky of the matrix point: x = L L^T, theta = (log a, b, log c)
  double a = std::sqrt(x[0]);
  double b = (x[1] / kSqrt2) / a;
  double c2 = x[2] - b * b;
  require(c2 > 0.0, ErrorCode::bad_input, "chart: point not in open cone");
  t[0] = std::log(a);
  t[1] = b;
  t[2] = 0.5 * std::log(c2);
  return t;
}

HElement ConeModel::chart(const Vec& theta) const {
  HElement h;
  h.theta = theta;
  if (kind_ == ConeKind::orthant) {
    h.det = 1.0;
    for (int a = 0; a < 3; ++a) h.A[a][a] = 1.0;
    for (int a = 0; a < n_; ++a) {
      h.A[a][a] = std::exp(theta[a]);
      h.det *= h.A[a][a];
    }
    return h;
  }
  double a = std::exp(theta[0]);
  double b = theta[1];
  double c = std::exp(theta[2]);
  h.A[0][0] = a * a;
  h.A[1][0] = kSqrt2 * a * b;
  h.A[1][1] = a * c;
  h.A[2][0] = b * b;
  h.A[2][1] = kSqrt2 * b * c;
  h.A[2][2] = c * c;
  double ac = a * c;
  h.det = ac * ac * ac;
  return h;
}

HElement ConeModel::compose(const HElement& g, const HElement& h) const {
  Vec t = vec0();
  if (kind_ == ConeKind::orthant) {
    for (int a = 0; a < n_; ++a) t[a] = g.theta[a] + h.theta[a];
  } else {
    t[0] = g.theta[0] + h.theta[0];
    t[1] = g.theta[1] * std::exp(h.theta[0]) +
           std::exp(g.theta[2]) * h.theta[1];
    t[2] = g.theta[2] + h.theta[2];
  }
  return chart(t);
}

HElement ConeModel::inverse(const HElement& h) const {
  Vec t = vec0();
  if (kind_ == ConeKind::orthant) {
    for (int a = 0; a < n_; ++a) t[a] = -h.theta[a];
  } else {
    t[0] = -h.theta[0];
    t[1] = -h.theta[1] * std::exp(-h.theta[0] - h.theta[2]);
    t[2] = -h.theta[2];
  }
  return chart(t);
}

double ConeModel::haar_weight(const Vec& theta) const {
  if (kind_ == ConeKind::orthant) return 1.0;
  // 4*sqrt(2)*phi_e * exp(-theta3): orbit map then pushes Haar measure to
  // characteristic(x) dx with constant exactly 1
  return 4.0 * kPi * std::exp(-theta[2]);
}

void ConeModel::metric_ball_box(const Vec& center, double rho, Vec& lo,
                                Vec& hi) const {
  lo = vec0();
  hi = vec0();
  double up = std::exp(rho), dn = std::exp(-rho);
  if (kind_ == ConeKind::orthant) {
    for (int a = 0; a < n_; ++a) {
      lo[a] = center[a] * dn;
      hi[a] = center[a] * up;
    }
    return;
  }
  // identity-centered ball: eigenvalues in [dn, up], so in matrix entries
  // y11, y22 in [dn, up] and |y12| <= sinh(rho); transport through the
  // congruence x = L y L^T, entrywise linear in y, by interval arithmetic.
  Vec th = point_chart(center);
  double l1 = std::exp(th[0]), l2 = th[1], l3 = std::exp(th[2]);
  double s = 0.5 * (up - dn);  // sinh(rho)
  auto mul = [](double coef, double a, double b, double& mlo, double& mhi) {
    double p = coef * a, q = coef * b;
    mlo = std::min(p, q);
    mhi = std::max(p, q);
  };
  // x11 = l1^2 y11
  double x11lo, x11hi;
  mul(l1 * l1, dn, up, x11lo, x11hi);
  // x12 = l1 l2 y11 + l1 l3 y12
  double t1lo, t1hi, t2lo, t2hi;
  mul(l1 * l2, dn, up, t1lo, t1hi);
  mul(l1 * l3, -s, s, t2lo, t2hi);
  double x12lo = t1lo + t2lo, x12hi = t1hi + t2hi;
  // x22 = l2^2 y11 + 2 l2 l3 y12 + l3^2 y22
  double u1lo, u1hi, u2lo, u2hi, u3lo, u3hi;
  mul(l2 * l2, dn, up, u1lo, u1hi);
  mul(2.0 * l2 * l3, -s, s, u2lo, u2hi);
  mul(l3 * l3, dn, up, u3lo, u3hi);
  double x22lo = u1lo + u2lo + u3lo, x22hi = u1hi + u2hi + u3hi;
  lo = {x11lo, kSqrt2 * x12lo, x22lo};
  hi = {x11hi, kSqrt2 * x12hi, x22hi};
}

Vec ConeModel::chart_steps(const Vec& theta, double delta) const {
  Vec s = vec0();
  if (kind_ == ConeKind::orthant) {
    for (int a = 0; a < n_; ++a) s[a] = delta;
    return s;
  }
  // chart metric at b = 0: ds^2 = 4 dtheta1^2 + 4 dtheta3^2 + 2 (db/c)^2
  s[0] = 0.5 * delta;
  s[1] = delta * std::exp(theta[2]) / kSqrt2;
  s[2] = 0.5 * delta;
  return s;
}

double ConeModel::chart_generator(const Vec& theta_dot, double M[3][3]) const {
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) M[i][j] = 0.0;
  if (kind_ == ConeKind::orthant) {
    double tr = 0.0;
    for (int a = 0; a < n_; ++a) {
      M[a][a] = theta_dot[a];
      tr += theta_dot[a];
    }
    return tr;
  }
  double u = theta_dot[0], v = theta_dot[1], w = theta_dot[2];
  M[0][0] = 2.0 * u;
  M[1][0] = kSqrt2 * v;
  M[1][1] = u + w;
  M[2][1] = kSqrt2 * v;
  M[2][2] = 2.0 * w;
  return 3.0 * (u + w);
}

Vec ConeModel::to_storage(const Vec& x) const {
  if (kind_ == ConeKind::orthant) return x;
  return {x[0], x[1] / kSqrt2, x[2]};
}

Vec ConeModel::from_storage(const Vec& x) const {
  if (kind_ == ConeKind::orthant) return x;
  return {x[0], kSqrt2 * x[1], x[2]};
}

}  // namespace conewave

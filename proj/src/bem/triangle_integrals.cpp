#include "hsim/bem/triangle_integrals.hpp"

#include <cmath>
#include <stdexcept>

namespace hsim {

double triangle_solid_angle(const Vec3& a, const Vec3& b, const Vec3& c,
                            const Vec3& x) {
  Vec3 ra = a - x, rb = b - x, rc = c - x;
  double la = ra.norm(), lb = rb.norm(), lc = rc.norm();
  double num = ra.dot(rb.cross(rc));
  double den = la * lb * lc + ra.dot(rb) * lc + rb.dot(rc) * la +
               rc.dot(ra) * lb;
  return 2.0 * std::atan2(num, den);
}

TriangleKernel singular_triangle_integral(const Vec3& a, const Vec3& b,
                                          const Vec3& c, const Vec3& x) {
  Vec3 cross = (b - a).cross(c - a);
  double area2 = cross.norm();
  if (0.5 * area2 <= 1e-12) throw std::runtime_error("degenerate element");
  Vec3 normal = cross / area2;

  const double height = (x - a).dot(normal);
  const double omega = triangle_solid_angle(a, b, c, x);

  double potential = height * omega;
  Vec3 gradient = omega * normal;

  const Vec3 verts[3] = {a, b, c};
  for (int e = 0; e < 3; ++e) {
    const Vec3& p = verts[e];
    const Vec3& q = verts[(e + 1) % 3];
    double edge_len = (q - p).norm();
    if (edge_len < 1e-15) continue;
    Vec3 tangent = (q - p) / edge_len;
    Vec3 outward = tangent.cross(normal);  // in-plane, away from T
    double rp = (x - p).norm();
    double rq = (x - q).norm();
    double denom = rp + rq - edge_len;
    double numer = rp + rq + edge_len;
    // x on the open edge segment: the log diverges; the potential term
    // carries a vanishing prefactor, so clamp for continuity.
    double log_term =
        denom > 1e-300 * numer ? std::log(numer / denom) : 0.0;
    double edge_dist = (p - x).dot(outward);  // signed along the edge normal
    potential += edge_dist * log_term;
    gradient -= outward * log_term;
  }
  const double inv4pi = 1.0 / (4.0 * M_PI);
  return {potential * inv4pi, Vec3(gradient * inv4pi)};
}

TriangleQuadrature symmetric_quadrature(const Vec3& a, const Vec3& b,
                                        const Vec3& c) {
  TriangleQuadrature q;
  const double h = 2.0 / 3.0, l = 1.0 / 6.0;
  q.barycentric = {{{h, l, l}, {l, h, l}, {l, l, h}}};
  for (int i = 0; i < 3; ++i) {
    const auto& w = q.barycentric[i];
    q.points[i] = w[0] * a + w[1] * b + w[2] * c;
  }
  q.weight = 0.5 * (b - a).cross(c - a).norm() / 3.0;
  return q;
}

std::array<double, 3> duffy_single_layer(const Vec3& a, const Vec3& b,
                                         const Vec3& c, int pivot) {
  // Order so the singular vertex is first.
  const Vec3* v[3] = {&a, &b, &c};
  const Vec3& s = *v[pivot];
  const Vec3& p = *v[(pivot + 1) % 3];
  const Vec3& q = *v[(pivot + 2) % 3];
  double jac2 = (p - s).cross(q - s).norm();  // 2 * area

  // Gauss-Legendre nodes on [0,1].
  static const double nodes[8] = {0.01985507, 0.10166676, 0.23723379,
                                  0.40828268, 0.59171732, 0.76276621,
                                  0.89833324, 0.98014493};
  static const double weights[8] = {0.05061427, 0.11119052, 0.15685332,
                                    0.18134189, 0.18134189, 0.15685332,
                                    0.11119052, 0.05061427};

  std::array<double, 3> acc = {0.0, 0.0, 0.0};
  for (int iu = 0; iu < 8; ++iu) {
    double u = nodes[iu];
    for (int iv = 0; iv < 8; ++iv) {
      double t = nodes[iv];
      // y = s + u*((1-t)(p-s) + t(q-s)); |y - s| = u * |dir|.
      Vec3 dir = (1.0 - t) * (p - s) + t * (q - s);
      double r_over_u = dir.norm();
      if (r_over_u < 1e-300) continue;
      // Jacobian of (u,t) -> y is u * jac2; 1/R cancels one factor of u.
      double common = weights[iu] * weights[iv] * jac2 / r_over_u;
      double lam_s = 1.0 - u;
      double lam_p = u * (1.0 - t);
      double lam_q = u * t;
      acc[pivot] += common * lam_s;
      acc[(pivot + 1) % 3] += common * lam_p;
      acc[(pivot + 2) % 3] += common * lam_q;
    }
  }
  const double inv4pi = 1.0 / (4.0 * M_PI);
  for (double& t : acc) t *= inv4pi;
  return acc;
}

}  // namespace hsim

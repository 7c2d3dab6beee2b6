#include "hsim/bem/field_eval.hpp"

#include <cmath>

namespace hsim {

BoundaryVelocityField::BoundaryVelocityField(const SurfaceMesh& mesh) {
  panels_.reserve(mesh.triangle_count());
  for (size_t t = 0; t < mesh.triangle_count(); ++t) {
    const Vec3i& tri = mesh.triangles[t];
    Panel p;
    Vec3 n = triangle_normal(mesh, static_cast<int>(t));
    double area = triangle_area(mesh, static_cast<int>(t));
    if (area <= 0.0) continue;
    for (int k = 0; k < 3; ++k) {
      p.v[k] = mesh.vertices[tri[k]];
      const Vec3& u = mesh.velocities[tri[k]];
      p.c[k] = n.dot(u);
      p.j[k] = n.cross(u);
    }
    p.centroid = (p.v[0] + p.v[1] + p.v[2]) / 3.0;
    double r = kNearFactor * std::sqrt(area);
    p.near_radius2 = r * r;
    TriangleQuadrature q = symmetric_quadrature(p.v[0], p.v[1], p.v[2]);
    for (int i = 0; i < 3; ++i) {
      p.qp[i] = q.points[i];
      const auto& w = q.barycentric[i];
      p.qc[i] = w[0] * p.c[0] + w[1] * p.c[1] + w[2] * p.c[2];
      p.qj[i] = w[0] * p.j[0] + w[1] * p.j[1] + w[2] * p.j[2];
    }
    p.qw = q.weight;
    panels_.push_back(p);
  }
}

void BoundaryVelocityField::add_contribution(const Panel& p, const Vec3& x,
                                             int depth, const double c[3],
                                             const Vec3 j[3],
                                             const Vec3 verts[3],
                                             Vec3* acc) const {
  Vec3 centroid = (verts[0] + verts[1] + verts[2]) / 3.0;
  double area =
      0.5 * (verts[1] - verts[0]).cross(verts[2] - verts[0]).norm();
  double dist2 = (x - centroid).squaredNorm();
  bool refine = depth < 3 && dist2 < 2.25 * area;  // within 1.5*sqrt(area)
  if (!refine) {
    TriangleKernel k =
        singular_triangle_integral(verts[0], verts[1], verts[2], x);
    double c_mean = (c[0] + c[1] + c[2]) / 3.0;
    Vec3 j_mean = (j[0] + j[1] + j[2]) / 3.0;
    *acc += c_mean * k.gradient + j_mean.cross(k.gradient);
    return;
  }
  Vec3 m01 = 0.5 * (verts[0] + verts[1]);
  Vec3 m12 = 0.5 * (verts[1] + verts[2]);
  Vec3 m20 = 0.5 * (verts[2] + verts[0]);
  double c01 = 0.5 * (c[0] + c[1]), c12 = 0.5 * (c[1] + c[2]),
         c20 = 0.5 * (c[2] + c[0]);
  Vec3 j01 = 0.5 * (j[0] + j[1]), j12 = 0.5 * (j[1] + j[2]),
       j20 = 0.5 * (j[2] + j[0]);
  {
    Vec3 vv[3] = {verts[0], m01, m20};
    double cc[3] = {c[0], c01, c20};
    Vec3 jj[3] = {j[0], j01, j20};
    add_contribution(p, x, depth + 1, cc, jj, vv, acc);
  }
  {
    Vec3 vv[3] = {verts[1], m12, m01};
    double cc[3] = {c[1], c12, c01};
    Vec3 jj[3] = {j[1], j12, j01};
    add_contribution(p, x, depth + 1, cc, jj, vv, acc);
  }
  {
    Vec3 vv[3] = {verts[2], m20, m12};
    double cc[3] = {c[2], c20, c12};
    Vec3 jj[3] = {j[2], j20, j12};
    add_contribution(p, x, depth + 1, cc, jj, vv, acc);
  }
  {
    Vec3 vv[3] = {m01, m12, m20};
    double cc[3] = {c01, c12, c20};
    Vec3 jj[3] = {j01, j12, j20};
    add_contribution(p, x, depth + 1, cc, jj, vv, acc);
  }
}

Vec3 BoundaryVelocityField::evaluate(const Vec3& x) const {
  Vec3 acc = Vec3::Zero();
  for (const Panel& p : panels_) {
    if ((x - p.centroid).squaredNorm() >= p.near_radius2) {
      for (int i = 0; i < 3; ++i) {
        Vec3 r = x - p.qp[i];
        double r2 = r.squaredNorm();
        double inv_r3 = 1.0 / (r2 * std::sqrt(r2));
        // grad_x G = -r / (4 pi |r|^3)
        Vec3 grad = (-1.0 / (4.0 * M_PI)) * inv_r3 * r;
        acc += p.qw * (p.qc[i] * grad + p.qj[i].cross(grad));
      }
    } else {
      add_contribution(p, x, 0, p.c, p.j, p.v, &acc);
    }
  }
  return acc;
}

}  // namespace hsim

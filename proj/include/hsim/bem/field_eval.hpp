#pragma once

#include <vector>

#include "hsim/bem/surface_mesh.hpp"
#include "hsim/bem/triangle_integrals.hpp"

namespace hsim {

// Per-triangle source densities c = n.u and j = n x u with barycentric
// velocity interpolation, cached for repeated interior evaluations of
// u(x) = grad int c G + int j x grad G.
class BoundaryVelocityField {
 public:
  explicit BoundaryVelocityField(const SurfaceMesh& mesh);

  // Boundary-integral velocity at x. Quadrature on far triangles; near
  // triangles (centroid within near_factor * sqrt(area)) are subdivided
  // and integrated with the analytic kernel. The caller is responsible
  // for x being inside the mesh when physical values are expected.
  Vec3 evaluate(const Vec3& x) const;

  static constexpr double kNearFactor = 2.0;

 private:
  struct Panel {
    Vec3 v[3];
    Vec3 centroid;
    double near_radius2;
    // vertex densities
    double c[3];
    Vec3 j[3];
    // 3-point quadrature cache
    Vec3 qp[3];
    double qc[3];
    Vec3 qj[3];
    double qw;
  };
  void add_contribution(const Panel& p, const Vec3& x, int depth,
                        const double c[3], const Vec3 j[3],
                        const Vec3 verts[3], Vec3* acc) const;
  std::vector<Panel> panels_;
};

}  // namespace hsim

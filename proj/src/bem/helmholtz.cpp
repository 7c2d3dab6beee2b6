#include "hsim/bem/helmholtz.hpp"

#include <limits>

#include "hsim/bem/field_eval.hpp"
#include "hsim/parallel.hpp"

namespace hsim {

namespace {
// Inward offset for the one-sided limit, as a fraction of the shortest
// incident edge. The analytic near-field integrals stay stable at small
// offsets, and the bias from the interior field gradient shrinks with it.
constexpr double kOffsetFraction = 0.02;
}

std::vector<Vec3> helmholtz_velocity(const SurfaceMesh& mesh) {
  BoundaryVelocityField field(mesh);
  std::vector<Vec3> normals = vertex_normals(mesh);

  std::vector<double> min_edge(mesh.vertex_count(),
                               std::numeric_limits<double>::max());
  for (const Vec3i& tri : mesh.triangles)
    for (int e = 0; e < 3; ++e) {
      double len =
          (mesh.vertices[tri[e]] - mesh.vertices[tri[(e + 1) % 3]]).norm();
      min_edge[tri[e]] = std::min(min_edge[tri[e]], len);
      min_edge[tri[(e + 1) % 3]] = std::min(min_edge[tri[(e + 1) % 3]], len);
    }

  std::vector<Vec3> out(mesh.vertex_count());
  parallel_for_each(static_cast<int64_t>(mesh.vertex_count()), [&](int64_t v) {
    Vec3 x = mesh.vertices[v] - kOffsetFraction * min_edge[v] * normals[v];
    out[v] = field.evaluate(x);
  });
  return out;
}

void partial_helmholtz(SurfaceMesh& mesh) {
  std::vector<Vec3> u_hd = helmholtz_velocity(mesh);
  std::vector<Vec3> normals = vertex_normals(mesh);
  for (size_t v = 0; v < mesh.vertex_count(); ++v) {
    const Vec3& n = normals[v];
    Vec3 tangential = mesh.velocities[v] - mesh.velocities[v].dot(n) * n;
    mesh.velocities[v] = tangential + u_hd[v].dot(n) * n;
  }
}

void full_helmholtz(SurfaceMesh& mesh) {
  std::vector<Vec3> u_hd = helmholtz_velocity(mesh);
  mesh.velocities = std::move(u_hd);
}

}  // namespace hsim

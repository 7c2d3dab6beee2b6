#include "hsim/bem/primitives.hpp"

#include <cmath>
#include <map>
#include <unordered_map>

namespace hsim {

namespace {

int midpoint(std::unordered_map<int64_t, int>& cache, SurfaceMesh& mesh,
             const Vec3& center, double radius, int a, int b) {
  int64_t key = a < b ? (static_cast<int64_t>(a) << 32 | b)
                      : (static_cast<int64_t>(b) << 32 | a);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  Vec3 m = 0.5 * (mesh.vertices[a] + mesh.vertices[b]);
  m = center + radius * (m - center).normalized();
  int idx = static_cast<int>(mesh.vertices.size());
  mesh.vertices.push_back(m);
  cache.emplace(key, idx);
  return idx;
}

}  // namespace

SurfaceMesh make_icosphere(const Vec3& center, double radius,
                           int subdivisions) {
  SurfaceMesh mesh;
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  const double s = 1.0 / std::sqrt(1.0 + t * t);
  auto add = [&](double x, double y, double z) {
    mesh.vertices.push_back(center + radius * s * Vec3(x, y, z));
  };
  add(-1, t, 0);
  add(1, t, 0);
  add(-1, -t, 0);
  add(1, -t, 0);
  add(0, -1, t);
  add(0, 1, t);
  add(0, -1, -t);
  add(0, 1, -t);
  add(t, 0, -1);
  add(t, 0, 1);
  add(-t, 0, -1);
  add(-t, 0, 1);
  const int faces[20][3] = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10},
                            {0, 10, 11}, {1, 5, 9},  {5, 11, 4},  {11, 10, 2},
                            {10, 7, 6},  {7, 1, 8},  {3, 9, 4},   {3, 4, 2},
                            {3, 2, 6},   {3, 6, 8},  {3, 8, 9},   {4, 9, 5},
                            {2, 4, 11},  {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
  for (const auto& f : faces)
    mesh.triangles.push_back(Vec3i(f[0], f[1], f[2]));

  for (int lvl = 0; lvl < subdivisions; ++lvl) {
    std::unordered_map<int64_t, int> cache;
    std::vector<Vec3i> next;
    next.reserve(mesh.triangles.size() * 4);
    for (const Vec3i& tri : mesh.triangles) {
      int ab = midpoint(cache, mesh, center, radius, tri[0], tri[1]);
      int bc = midpoint(cache, mesh, center, radius, tri[1], tri[2]);
      int ca = midpoint(cache, mesh, center, radius, tri[2], tri[0]);
      next.push_back(Vec3i(tri[0], ab, ca));
      next.push_back(Vec3i(tri[1], bc, ab));
      next.push_back(Vec3i(tri[2], ca, bc));
      next.push_back(Vec3i(ab, bc, ca));
    }
    mesh.triangles = std::move(next);
  }

  mesh.velocities.assign(mesh.vertex_count(), Vec3::Zero());
  mesh.labels.assign(mesh.triangle_count(), FaceLabel::kFreeSurface);
  mesh.solid_velocities.assign(mesh.triangle_count(), Vec3::Zero());
  double mean_edge = 0.0;
  for (const Vec3i& tri : mesh.triangles)
    mean_edge += (mesh.vertices[tri[0]] - mesh.vertices[tri[1]]).norm();
  mean_edge /= mesh.triangle_count();
  mesh.min_edge = 0.5 * mean_edge;
  mesh.max_edge = 1.5 * mean_edge;
  return mesh;
}

SurfaceMesh make_box_mesh(const Box3& box, double target_edge) {
  SurfaceMesh mesh;
  Vec3 ext = box.extent();
  Vec3i divs;
  for (int a = 0; a < 3; ++a)
    divs[a] = std::max(1, static_cast<int>(std::round(ext[a] / target_edge)));

  std::map<int64_t, int> lattice;  // (i,j,k) on the box lattice -> vertex
  auto vertex_at = [&](const Vec3i& node) {
    auto [it, inserted] = lattice.emplace(pack_coords(node), 0);
    if (!inserted) return it->second;
    Vec3 p;
    for (int a = 0; a < 3; ++a)
      p[a] = box.lo[a] + ext[a] * (static_cast<double>(node[a]) / divs[a]);
    it->second = static_cast<int>(mesh.vertices.size());
    mesh.vertices.push_back(p);
    return it->second;
  };

  // axis = face normal direction; side 0 = low face, 1 = high face.
  auto emit_face = [&](int axis, int side) {
    int u = (axis + 1) % 3, v = (axis + 2) % 3;
    FaceLabel label = (axis == 1 && side == 1) ? FaceLabel::kFreeSurface
                                               : FaceLabel::kSolid;
    for (int j = 0; j < divs[v]; ++j)
      for (int i = 0; i < divs[u]; ++i) {
        Vec3i n00 = Vec3i::Zero(), n10, n01, n11;
        n00[axis] = side ? divs[axis] : 0;
        n00[u] = i;
        n00[v] = j;
        n10 = n00;
        n10[u] += 1;
        n01 = n00;
        n01[v] += 1;
        n11 = n10;
        n11[v] += 1;
        int a = vertex_at(n00), b = vertex_at(n10), c = vertex_at(n11),
            d = vertex_at(n01);
        // Outward winding: (u,v,axis) is right-handed, so the high face
        // uses a,b,c order and the low face the reverse.
        if (side) {
          mesh.triangles.push_back(Vec3i(a, b, c));
          mesh.triangles.push_back(Vec3i(a, c, d));
        } else {
          mesh.triangles.push_back(Vec3i(a, c, b));
          mesh.triangles.push_back(Vec3i(a, d, c));
        }
        mesh.labels.push_back(label);
        mesh.labels.push_back(label);
      }
  };
  for (int axis = 0; axis < 3; ++axis)
    for (int side = 0; side < 2; ++side) emit_face(axis, side);

  mesh.velocities.assign(mesh.vertex_count(), Vec3::Zero());
  mesh.solid_velocities.assign(mesh.triangle_count(), Vec3::Zero());
  mesh.min_edge = 0.5 * target_edge;
  mesh.max_edge = 1.5 * target_edge;
  return mesh;
}

SurfaceMesh make_cylinder_tank(double center_x, double center_z, double radius,
                               double y0, double y1, double target_edge) {
  SurfaceMesh mesh;
  const int segments =
      std::max(8, static_cast<int>(std::round(2.0 * M_PI * radius /
                                              target_edge)));
  const int side_rows =
      std::max(1, static_cast<int>(std::round((y1 - y0) / target_edge)));
  const int disk_rings =
      std::max(1, static_cast<int>(std::round(radius / target_edge)));

  auto ring_point = [&](double r, double y, int s) {
    double angle = 2.0 * M_PI * s / segments;
    return Vec3(center_x + r * std::cos(angle), y,
                center_z + r * std::sin(angle));
  };

  // Disk lattice indexed (ring, segment) with ring 0 collapsed to a center
  // vertex; built twice (bottom, top) sharing the outer ring with the side.
  auto build_disk = [&](double y, bool top, std::vector<int>& outer_ring) {
    std::vector<std::vector<int>> rings(disk_rings + 1);
    rings[0].assign(segments, static_cast<int>(mesh.vertices.size()));
    mesh.vertices.push_back(Vec3(center_x, y, center_z));
    for (int r = 1; r <= disk_rings; ++r) {
      rings[r].resize(segments);
      for (int s = 0; s < segments; ++s) {
        rings[r][s] = static_cast<int>(mesh.vertices.size());
        mesh.vertices.push_back(
            ring_point(radius * r / disk_rings, y, s));
      }
    }
    FaceLabel label = top ? FaceLabel::kFreeSurface : FaceLabel::kSolid;
    for (int r = 0; r < disk_rings; ++r)
      for (int s = 0; s < segments; ++s) {
        int s1 = (s + 1) % segments;
        int a = rings[r][s], b = rings[r][s1];
        int c = rings[r + 1][s1], d = rings[r + 1][s];
        // +y outward for the top, -y for the bottom.
        if (r > 0) {
          if (top)
            mesh.triangles.push_back(Vec3i(a, c, b));
          else
            mesh.triangles.push_back(Vec3i(a, b, c));
          mesh.labels.push_back(label);
        }
        if (top)
          mesh.triangles.push_back(Vec3i(a, d, c));
        else
          mesh.triangles.push_back(Vec3i(a, c, d));
        mesh.labels.push_back(label);
      }
    outer_ring = rings[disk_rings];
  };

  std::vector<int> bottom_ring, top_ring;
  build_disk(y0, false, bottom_ring);
  build_disk(y1, true, top_ring);

  // Side wall rows between the two outer rings.
  std::vector<std::vector<int>> rows(side_rows + 1);
  rows[0] = bottom_ring;
  rows[side_rows] = top_ring;
  for (int r = 1; r < side_rows; ++r) {
    rows[r].resize(segments);
    double y = y0 + (y1 - y0) * r / side_rows;
    for (int s = 0; s < segments; ++s) {
      rows[r][s] = static_cast<int>(mesh.vertices.size());
      mesh.vertices.push_back(ring_point(radius, y, s));
    }
  }
  for (int r = 0; r < side_rows; ++r)
    for (int s = 0; s < segments; ++s) {
      int s1 = (s + 1) % segments;
      int a = rows[r][s], b = rows[r][s1];
      int c = rows[r + 1][s1], d = rows[r + 1][s];
      mesh.triangles.push_back(Vec3i(a, b, c));
      mesh.triangles.push_back(Vec3i(a, c, d));
      mesh.labels.push_back(FaceLabel::kSolid);
      mesh.labels.push_back(FaceLabel::kSolid);
    }

  mesh.velocities.assign(mesh.vertex_count(), Vec3::Zero());
  mesh.solid_velocities.assign(mesh.triangle_count(), Vec3::Zero());
  mesh.min_edge = 0.5 * target_edge;
  mesh.max_edge = 1.5 * target_edge;
  return mesh;
}

}  // namespace hsim

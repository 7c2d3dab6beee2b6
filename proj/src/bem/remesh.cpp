#include "hsim/bem/remesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace hsim {

namespace {

int64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<int64_t>(a) << 32) | static_cast<uint32_t>(b);
}

struct EdgeInfo {
  int a, b;
  int tri[2] = {-1, -1};  // incident triangles
};

std::map<int64_t, EdgeInfo> collect_edges(const SurfaceMesh& mesh) {
  std::map<int64_t, EdgeInfo> edges;
  for (size_t t = 0; t < mesh.triangle_count(); ++t) {
    const Vec3i& tri = mesh.triangles[t];
    for (int e = 0; e < 3; ++e) {
      int a = tri[e], b = tri[(e + 1) % 3];
      auto& info = edges[edge_key(a, b)];
      if (info.tri[0] < 0) {
        info.a = std::min(a, b);
        info.b = std::max(a, b);
        info.tri[0] = static_cast<int>(t);
      } else {
        info.tri[1] = static_cast<int>(t);
      }
    }
  }
  return edges;
}

double min_triangle_angle(const Vec3& a, const Vec3& b, const Vec3& c) {
  auto corner = [](const Vec3& p, const Vec3& q, const Vec3& r) {
    Vec3 u = q - p, v = r - p;
    double den = u.norm() * v.norm();
    if (den < 1e-300) return 0.0;
    return std::acos(std::clamp(u.dot(v) / den, -1.0, 1.0));
  };
  return std::min({corner(a, b, c), corner(b, c, a), corner(c, a, b)});
}

bool vertex_on_crease(const SurfaceMesh& mesh, int v,
                      const std::vector<std::vector<int>>& incident) {
  bool has_fs = false, has_solid = false;
  for (int t : incident[v]) {
    if (mesh.labels[t] == FaceLabel::kFreeSurface) has_fs = true;
    if (mesh.labels[t] == FaceLabel::kSolid) has_solid = true;
  }
  return has_fs && has_solid;
}

std::vector<std::vector<int>> incident_triangles(const SurfaceMesh& mesh) {
  std::vector<std::vector<int>> out(mesh.vertex_count());
  for (size_t t = 0; t < mesh.triangle_count(); ++t)
    for (int k = 0; k < 3; ++k)
      out[mesh.triangles[t][k]].push_back(static_cast<int>(t));
  return out;
}

void split_pass(SurfaceMesh& mesh) {
  auto edges = collect_edges(mesh);
  std::vector<const EdgeInfo*> long_edges;
  for (const auto& [key, info] : edges) {
    double len = (mesh.vertices[info.a] - mesh.vertices[info.b]).norm();
    if (len > mesh.max_edge && info.tri[1] >= 0)
      long_edges.push_back(&info);
  }
  std::sort(long_edges.begin(), long_edges.end(),
            [&](const EdgeInfo* x, const EdgeInfo* y) {
              double lx = (mesh.vertices[x->a] - mesh.vertices[x->b]).norm();
              double ly = (mesh.vertices[y->a] - mesh.vertices[y->b]).norm();
              if (lx != ly) return lx > ly;
              if (x->a != y->a) return x->a < y->a;
              return x->b < y->b;
            });
  std::vector<char> tri_touched(mesh.triangle_count(), 0);
  for (const EdgeInfo* e : long_edges) {
    if (tri_touched[e->tri[0]] || tri_touched[e->tri[1]]) continue;
    int a = e->a, b = e->b;
    int m = static_cast<int>(mesh.vertex_count());
    mesh.vertices.push_back(0.5 * (mesh.vertices[a] + mesh.vertices[b]));
    mesh.velocities.push_back(0.5 *
                              (mesh.velocities[a] + mesh.velocities[b]));
    for (int side = 0; side < 2; ++side) {
      int t = e->tri[side];
      Vec3i tri = mesh.triangles[t];
      // Rotate so the split edge is (tri[0], tri[1]).
      while (!((tri[0] == a && tri[1] == b) || (tri[0] == b && tri[1] == a))) {
        tri = Vec3i(tri[1], tri[2], tri[0]);
      }
      int opposite = tri[2];
      mesh.triangles[t] = Vec3i(tri[0], m, opposite);
      mesh.triangles.push_back(Vec3i(m, tri[1], opposite));
      mesh.labels.push_back(mesh.labels[t]);
      mesh.solid_velocities.push_back(mesh.solid_velocities[t]);
      tri_touched[t] = 1;
      tri_touched.push_back(1);
    }
  }
}

void collapse_pass(SurfaceMesh& mesh) {
  auto incident = incident_triangles(mesh);
  auto edges = collect_edges(mesh);
  std::vector<const EdgeInfo*> short_edges;
  for (const auto& [key, info] : edges) {
    double len = (mesh.vertices[info.a] - mesh.vertices[info.b]).norm();
    if (len < mesh.min_edge && info.tri[1] >= 0)
      short_edges.push_back(&info);
  }
  std::sort(short_edges.begin(), short_edges.end(),
            [&](const EdgeInfo* x, const EdgeInfo* y) {
              double lx = (mesh.vertices[x->a] - mesh.vertices[x->b]).norm();
              double ly = (mesh.vertices[y->a] - mesh.vertices[y->b]).norm();
              if (lx != ly) return lx < ly;
              if (x->a != y->a) return x->a < y->a;
              return x->b < y->b;
            });

  std::vector<char> vertex_dirty(mesh.vertex_count(), 0);
  std::vector<int> remap(mesh.vertex_count());
  for (size_t v = 0; v < mesh.vertex_count(); ++v)
    remap[v] = static_cast<int>(v);
  std::set<int> dead_triangles;

  auto ring_of = [&](int v) {
    std::set<int> ring;
    for (int t : incident[v])
      if (!dead_triangles.count(t))
        for (int k = 0; k < 3; ++k)
          if (mesh.triangles[t][k] != v) ring.insert(mesh.triangles[t][k]);
    return ring;
  };

  for (const EdgeInfo* e : short_edges) {
    int a = e->a, b = e->b;
    if (vertex_dirty[a] || vertex_dirty[b]) continue;
    if (dead_triangles.count(e->tri[0]) || dead_triangles.count(e->tri[1]))
      continue;
    // Link condition: shared ring must be exactly the two opposite
    // vertices of the incident triangles.
    std::set<int> ra = ring_of(a), rb = ring_of(b);
    std::vector<int> shared;
    std::set_intersection(ra.begin(), ra.end(), rb.begin(), rb.end(),
                          std::back_inserter(shared));
    if (shared.size() != 2) continue;

    bool crease_a = vertex_on_crease(mesh, a, incident);
    bool crease_b = vertex_on_crease(mesh, b, incident);
    Vec3 target;
    if (crease_a == crease_b)
      target = 0.5 * (mesh.vertices[a] + mesh.vertices[b]);
    else
      target = crease_a ? mesh.vertices[a] : mesh.vertices[b];
    Vec3 target_vel = 0.5 * (mesh.velocities[a] + mesh.velocities[b]);

    // Geometry validity: surviving triangles must not flip or degenerate.
    bool ok = true;
    for (int v : {a, b}) {
      for (int t : incident[v]) {
        if (dead_triangles.count(t) || t == e->tri[0] || t == e->tri[1])
          continue;
        Vec3i tri = mesh.triangles[t];
        Vec3 pos[3], new_pos[3];
        for (int k = 0; k < 3; ++k) {
          pos[k] = mesh.vertices[tri[k]];
          new_pos[k] = (tri[k] == a || tri[k] == b) ? target : pos[k];
        }
        Vec3 n_old = (pos[1] - pos[0]).cross(pos[2] - pos[0]);
        Vec3 n_new = (new_pos[1] - new_pos[0]).cross(new_pos[2] - new_pos[0]);
        if (n_new.norm() < 1e-14 || n_old.dot(n_new) <= 0.0) {
          ok = false;
          break;
        }
      }
      if (!ok) break;
    }
    if (!ok) continue;

    // Collapse b into a.
    mesh.vertices[a] = target;
    mesh.velocities[a] = target_vel;
    dead_triangles.insert(e->tri[0]);
    dead_triangles.insert(e->tri[1]);
    for (int t : incident[b]) {
      if (dead_triangles.count(t)) continue;
      for (int k = 0; k < 3; ++k)
        if (mesh.triangles[t][k] == b) mesh.triangles[t][k] = a;
      incident[a].push_back(t);
    }
    vertex_dirty[a] = vertex_dirty[b] = 1;
    for (int n : ra) vertex_dirty[n] = 1;
    for (int n : rb) vertex_dirty[n] = 1;
    remap[b] = a;
  }

  if (dead_triangles.empty()) return;
  // Compact triangles and drop unreferenced vertices.
  SurfaceMesh out;
  out.min_edge = mesh.min_edge;
  out.max_edge = mesh.max_edge;
  std::vector<int> vmap(mesh.vertex_count(), -1);
  for (size_t t = 0; t < mesh.triangle_count(); ++t) {
    if (dead_triangles.count(static_cast<int>(t))) continue;
    Vec3i tri = mesh.triangles[t];
    Vec3i new_tri;
    for (int k = 0; k < 3; ++k) {
      int v = tri[k];
      if (vmap[v] < 0) {
        vmap[v] = static_cast<int>(out.vertices.size());
        out.vertices.push_back(mesh.vertices[v]);
        out.velocities.push_back(mesh.velocities[v]);
      }
      new_tri[k] = vmap[v];
    }
    out.triangles.push_back(new_tri);
    out.labels.push_back(mesh.labels[t]);
    out.solid_velocities.push_back(mesh.solid_velocities[t]);
  }
  mesh = std::move(out);
}

void flip_pass(SurfaceMesh& mesh) {
  auto edges = collect_edges(mesh);
  std::vector<char> tri_touched(mesh.triangle_count(), 0);
  for (auto& [key, e] : edges) {
    if (e.tri[1] < 0) continue;
    if (tri_touched[e.tri[0]] || tri_touched[e.tri[1]]) continue;
    if (mesh.labels[e.tri[0]] != mesh.labels[e.tri[1]]) continue;
    Vec3i t1 = mesh.triangles[e.tri[0]];
    Vec3i t2 = mesh.triangles[e.tri[1]];
    // Orient t1 as (a, b, c) and t2 as (b, a, d).
    while (!((t1[0] == e.a && t1[1] == e.b) || (t1[0] == e.b && t1[1] == e.a)))
      t1 = Vec3i(t1[1], t1[2], t1[0]);
    while (!((t2[0] == t1[1] && t2[1] == t1[0])))
      t2 = Vec3i(t2[1], t2[2], t2[0]);
    int a = t1[0], b = t1[1], c = t1[2], d = t2[2];
    if (edges.count(edge_key(c, d))) continue;  // would duplicate an edge

    const Vec3 &pa = mesh.vertices[a], &pb = mesh.vertices[b],
               &pc = mesh.vertices[c], &pd = mesh.vertices[d];
    Vec3 n1 = (pb - pa).cross(pc - pa);
    Vec3 n2 = (pa - pb).cross(pd - pb);
    double l1 = n1.norm(), l2 = n2.norm();
    if (l1 < 1e-18 || l2 < 1e-18) continue;
    if (n1.dot(n2) / (l1 * l2) < 0.96) continue;  // keep curved creases

    double before = std::min(min_triangle_angle(pa, pb, pc),
                             min_triangle_angle(pb, pa, pd));
    double after = std::min(min_triangle_angle(pa, pd, pc),
                            min_triangle_angle(pd, pb, pc));
    if (after <= before + 1e-4) continue;
    Vec3 m1 = (pd - pa).cross(pc - pa);
    Vec3 m2 = (pb - pd).cross(pc - pd);
    if (m1.norm() < 1e-18 || m2.norm() < 1e-18) continue;
    if (m1.dot(n1) <= 0.0 || m2.dot(n1) <= 0.0) continue;

    mesh.triangles[e.tri[0]] = Vec3i(a, d, c);
    mesh.triangles[e.tri[1]] = Vec3i(d, b, c);
    tri_touched[e.tri[0]] = 1;
    tri_touched[e.tri[1]] = 1;
  }
}

}  // namespace

void remesh(SurfaceMesh& mesh) {
  if (mesh.max_edge <= 0.0) return;
  split_pass(mesh);
  collapse_pass(mesh);
  flip_pass(mesh);
}

// ---------------------------------------------------------------------------
// Triangle-triangle intersection (interval test)
// ---------------------------------------------------------------------------

namespace {

bool coplanar_overlap(const Vec3 t1[3], const Vec3 t2[3], const Vec3& n) {
  // Project onto the dominant axis plane and run 2D segment/containment
  // tests.
  int drop = 0;
  double best = std::abs(n[0]);
  for (int a = 1; a < 3; ++a)
    if (std::abs(n[a]) > best) {
      best = std::abs(n[a]);
      drop = a;
    }
  int u = (drop + 1) % 3, v = (drop + 2) % 3;
  auto proj = [&](const Vec3& p) {
    return Eigen::Vector2d(p[u], p[v]);
  };
  Eigen::Vector2d a[3] = {proj(t1[0]), proj(t1[1]), proj(t1[2])};
  Eigen::Vector2d b[3] = {proj(t2[0]), proj(t2[1]), proj(t2[2])};
  auto seg_intersect = [](const Eigen::Vector2d& p1, const Eigen::Vector2d& p2,
                          const Eigen::Vector2d& q1,
                          const Eigen::Vector2d& q2) {
    auto cross2 = [](const Eigen::Vector2d& x, const Eigen::Vector2d& y) {
      return x.x() * y.y() - x.y() * y.x();
    };
    double d1 = cross2(q2 - q1, p1 - q1);
    double d2 = cross2(q2 - q1, p2 - q1);
    double d3 = cross2(p2 - p1, q1 - p1);
    double d4 = cross2(p2 - p1, q2 - p1);
    return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0));
  };
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (seg_intersect(a[i], a[(i + 1) % 3], b[j], b[(j + 1) % 3]))
        return true;
  auto inside = [](const Eigen::Vector2d p[3], const Eigen::Vector2d& x) {
    double s1 = (p[1] - p[0]).x() * (x - p[0]).y() -
                (p[1] - p[0]).y() * (x - p[0]).x();
    double s2 = (p[2] - p[1]).x() * (x - p[1]).y() -
                (p[2] - p[1]).y() * (x - p[1]).x();
    double s3 = (p[0] - p[2]).x() * (x - p[2]).y() -
                (p[0] - p[2]).y() * (x - p[2]).x();
    return (s1 > 0 && s2 > 0 && s3 > 0) || (s1 < 0 && s2 < 0 && s3 < 0);
  };
  return inside(a, b[0]) || inside(b, a[0]);
}

bool tri_tri_intersect(const Vec3 t1[3], const Vec3 t2[3]) {
  Vec3 n2 = (t2[1] - t2[0]).cross(t2[2] - t2[0]);
  double d1[3];
  for (int i = 0; i < 3; ++i) d1[i] = n2.dot(t1[i] - t2[0]);
  const double eps = 1e-12;
  if ((d1[0] > eps && d1[1] > eps && d1[2] > eps) ||
      (d1[0] < -eps && d1[1] < -eps && d1[2] < -eps))
    return false;

  Vec3 n1 = (t1[1] - t1[0]).cross(t1[2] - t1[0]);
  double d2[3];
  for (int i = 0; i < 3; ++i) d2[i] = n1.dot(t2[i] - t1[0]);
  if ((d2[0] > eps && d2[1] > eps && d2[2] > eps) ||
      (d2[0] < -eps && d2[1] < -eps && d2[2] < -eps))
    return false;

  bool coplanar = true;
  for (int i = 0; i < 3; ++i)
    if (std::abs(d1[i]) > eps || std::abs(d2[i]) > eps) coplanar = false;
  if (coplanar) return coplanar_overlap(t1, t2, n1);

  // Intersection line direction.
  Vec3 dir = n1.cross(n2);
  auto interval = [&](const Vec3 t[3], const double d[3], double* lo,
                      double* hi) {
    double proj[3];
    for (int i = 0; i < 3; ++i) proj[i] = dir.dot(t[i]);
    // Find the lone vertex on one side.
    int lone = -1;
    for (int i = 0; i < 3; ++i) {
      int j = (i + 1) % 3, k = (i + 2) % 3;
      if ((d[i] > 0 && d[j] <= 0 && d[k] <= 0) ||
          (d[i] < 0 && d[j] >= 0 && d[k] >= 0) ||
          (d[i] != 0 && d[j] == 0 && d[k] == 0))
        lone = i;
    }
    if (lone < 0) lone = 0;
    int j = (lone + 1) % 3, k = (lone + 2) % 3;
    auto cut = [&](int p, int q) {
      double denom = d[p] - d[q];
      if (std::abs(denom) < 1e-300) return proj[p];
      double s = d[p] / denom;
      return proj[p] + s * (proj[q] - proj[p]);
    };
    double x1 = cut(lone, j);
    double x2 = cut(lone, k);
    *lo = std::min(x1, x2);
    *hi = std::max(x1, x2);
  };
  double lo1, hi1, lo2, hi2;
  interval(t1, d1, &lo1, &hi1);
  interval(t2, d2, &lo2, &hi2);
  return std::max(lo1, lo2) <= std::min(hi1, hi2);
}

}  // namespace

bool has_self_intersections(const SurfaceMesh& mesh) {
  if (mesh.triangle_count() < 2) return false;
  double cell = std::max(mesh.max_edge, 1e-9);
  std::unordered_map<int64_t, std::vector<int>> grid;
  auto cell_of = [&](const Vec3& p) {
    return Vec3i(static_cast<int>(std::floor(p.x() / cell)),
                 static_cast<int>(std::floor(p.y() / cell)),
                 static_cast<int>(std::floor(p.z() / cell)));
  };
  std::vector<Vec3i> lo(mesh.triangle_count()), hi(mesh.triangle_count());
  for (size_t t = 0; t < mesh.triangle_count(); ++t) {
    const Vec3i& tri = mesh.triangles[t];
    Vec3 bmin = mesh.vertices[tri[0]], bmax = bmin;
    for (int k = 1; k < 3; ++k) {
      bmin = bmin.cwiseMin(mesh.vertices[tri[k]]);
      bmax = bmax.cwiseMax(mesh.vertices[tri[k]]);
    }
    lo[t] = cell_of(bmin);
    hi[t] = cell_of(bmax);
    for (int z = lo[t].z(); z <= hi[t].z(); ++z)
      for (int y = lo[t].y(); y <= hi[t].y(); ++y)
        for (int x = lo[t].x(); x <= hi[t].x(); ++x)
          grid[pack_coords(Vec3i(x, y, z))].push_back(static_cast<int>(t));
  }
  for (const auto& [key, list] : grid) {
    for (size_t i = 0; i < list.size(); ++i)
      for (size_t j = i + 1; j < list.size(); ++j) {
        int t1 = list[i], t2 = list[j];
        // Count each pair once: only in the lowest shared cell.
        Vec3i shared_lo = lo[t1].cwiseMax(lo[t2]);
        if (pack_coords(shared_lo) != key) continue;
        const Vec3i &a = mesh.triangles[t1], &b = mesh.triangles[t2];
        bool share = false;
        for (int p = 0; p < 3; ++p)
          for (int q = 0; q < 3; ++q)
            if (a[p] == b[q]) share = true;
        if (share) continue;
        Vec3 v1[3] = {mesh.vertices[a[0]], mesh.vertices[a[1]],
                      mesh.vertices[a[2]]};
        Vec3 v2[3] = {mesh.vertices[b[0]], mesh.vertices[b[1]],
                      mesh.vertices[b[2]]};
        if (tri_tri_intersect(v1, v2)) return true;
      }
  }
  return false;
}

void advect_and_remesh(SurfaceMesh& mesh, double dt) {
  for (size_t v = 0; v < mesh.vertex_count(); ++v)
    mesh.vertices[v] += dt * mesh.velocities[v];
  remesh(mesh);
  if (!is_watertight(mesh))
    throw std::runtime_error("remeshing broke watertightness");
  if (has_self_intersections(mesh))
    throw std::runtime_error("surface collision: out of supported regime");
}

}  // namespace hsim

#include "hsim/bem/laplace.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

#include "hsim/bem/triangle_integrals.hpp"
#include "hsim/parallel.hpp"

namespace hsim {

namespace {

// Ordered one-ring (fan) of neighbor vertices around `vertex`, following
// the consistent outward triangle orientation.
std::vector<int> ordered_ring(const SurfaceMesh& mesh, int vertex) {
  std::map<int, int> next;  // a -> b for incident triangles (v, a, b)
  for (const Vec3i& t : mesh.triangles) {
    for (int k = 0; k < 3; ++k) {
      if (t[k] == vertex) {
        next[t[(k + 1) % 3]] = t[(k + 2) % 3];
        break;
      }
    }
  }
  std::vector<int> ring;
  if (next.empty()) return ring;
  int start = next.begin()->first;
  int cur = start;
  do {
    ring.push_back(cur);
    auto it = next.find(cur);
    if (it == next.end()) break;  // open fan; handled by caller checks
    cur = it->second;
  } while (cur != start && ring.size() <= next.size());
  return ring;
}

}  // namespace

double vertex_interior_solid_angle(const SurfaceMesh& mesh, int vertex) {
  std::vector<int> ring = ordered_ring(mesh, vertex);
  const size_t m = ring.size();
  if (m < 3) return 2.0 * M_PI;
  const Vec3& v = mesh.vertices[vertex];
  std::vector<Vec3> dir(m);
  for (size_t k = 0; k < m; ++k)
    dir[k] = (mesh.vertices[ring[k]] - v).normalized();

  // Spherical polygon area by Girard's theorem; the ring orientation
  // inherited from outward-oriented triangles encloses the interior cone.
  double angle_sum = 0.0;
  for (size_t k = 0; k < m; ++k) {
    const Vec3& d = dir[k];
    const Vec3& dp = dir[(k + m - 1) % m];
    const Vec3& dn = dir[(k + 1) % m];
    Vec3 t_prev = dp - dp.dot(d) * d;
    Vec3 t_next = dn - dn.dot(d) * d;
    double lp = t_prev.norm(), ln = t_next.norm();
    if (lp < 1e-14 || ln < 1e-14) continue;
    t_prev /= lp;
    t_next /= ln;
    double raw = std::atan2(t_prev.cross(t_next).dot(d), t_prev.dot(t_next));
    // Map to the interior angle in (0, 2 pi).
    double interior = raw;
    if (interior < 0.0) interior += 2.0 * M_PI;
    angle_sum += interior;
  }
  double area = angle_sum - (static_cast<double>(m) - 2.0) * M_PI;
  if (area < 0.0) area += 4.0 * M_PI;
  if (area >= 4.0 * M_PI) area -= 4.0 * M_PI;
  return area;
}

namespace {

// Degree-5 seven-point triangle rule (barycentric points, weights summing
// to one; scaled by the area on use).
struct SevenPoint {
  double bary[7][3];
  double weight[7];
};
const SevenPoint& seven_point_rule() {
  static const SevenPoint rule = [] {
    SevenPoint r;
    const double a1 = 0.059715871789770, b1 = 0.470142064105115;
    const double a2 = 0.797426985353087, b2 = 0.101286507323456;
    const double w0 = 0.225, w1 = 0.132394152788506,
                 w2 = 0.125939180544827;
    double pts[7][3] = {{1.0 / 3, 1.0 / 3, 1.0 / 3}, {a1, b1, b1},
                        {b1, a1, b1},               {b1, b1, a1},
                        {a2, b2, b2},               {b2, a2, b2},
                        {b2, b2, a2}};
    double wts[7] = {w0, w1, w1, w1, w2, w2, w2};
    for (int i = 0; i < 7; ++i) {
      for (int c = 0; c < 3; ++c) r.bary[i][c] = pts[i][c];
      r.weight[i] = wts[i];
    }
    return r;
  }();
  return rule;
}

struct RowAccumulator {
  std::vector<double>& single;
  std::vector<double>& dipole;
};

void quad_panel(const Vec3& x, const Vec3 verts[3], const double shape[3][3],
                const Vec3& normal, const Vec3i& tri, RowAccumulator acc) {
  const SevenPoint& rule = seven_point_rule();
  double area =
      0.5 * (verts[1] - verts[0]).cross(verts[2] - verts[0]).norm();
  for (int i = 0; i < 7; ++i) {
    Vec3 y = rule.bary[i][0] * verts[0] + rule.bary[i][1] * verts[1] +
             rule.bary[i][2] * verts[2];
    Vec3 r = x - y;
    double r2 = r.squaredNorm();
    double inv_r = 1.0 / std::sqrt(r2);
    double g = inv_r / (4.0 * M_PI);
    double dgdn = r.dot(normal) * inv_r * inv_r * inv_r / (4.0 * M_PI);
    double w = rule.weight[i] * area;
    for (int c = 0; c < 3; ++c) {
      double lam = rule.bary[i][0] * shape[0][c] +
                   rule.bary[i][1] * shape[1][c] +
                   rule.bary[i][2] * shape[2][c];
      acc.single[tri[c]] += w * lam * g;
      acc.dipole[tri[c]] += w * lam * dgdn;
    }
  }
}

// Adds integral of lambda_k * G and lambda_k * dG/dn over (sub)triangle
// with tracked shape values, refined near x.
void near_panel(const Vec3& x, const Vec3 verts[3], const double shape[3][3],
                const Vec3& normal, int depth, const Vec3i& tri,
                RowAccumulator acc) {
  Vec3 centroid = (verts[0] + verts[1] + verts[2]) / 3.0;
  double area =
      0.5 * (verts[1] - verts[0]).cross(verts[2] - verts[0]).norm();
  double dist2 = (x - centroid).squaredNorm();
  if (depth < 3 && dist2 < 2.25 * area) {
    Vec3 m01 = 0.5 * (verts[0] + verts[1]);
    Vec3 m12 = 0.5 * (verts[1] + verts[2]);
    Vec3 m20 = 0.5 * (verts[2] + verts[0]);
    double s01[3], s12[3], s20[3];
    for (int c = 0; c < 3; ++c) {
      s01[c] = 0.5 * (shape[0][c] + shape[1][c]);
      s12[c] = 0.5 * (shape[1][c] + shape[2][c]);
      s20[c] = 0.5 * (shape[2][c] + shape[0][c]);
    }
    auto recurse = [&](const Vec3& a, const Vec3& b, const Vec3& c,
                       const double* sa, const double* sb, const double* sc) {
      Vec3 vv[3] = {a, b, c};
      double ss[3][3];
      for (int q = 0; q < 3; ++q) {
        ss[0][q] = sa[q];
        ss[1][q] = sb[q];
        ss[2][q] = sc[q];
      }
      near_panel(x, vv, ss, normal, depth + 1, tri, acc);
    };
    recurse(verts[0], m01, m20, shape[0], s01, s20);
    recurse(verts[1], m12, m01, shape[1], s12, s01);
    recurse(verts[2], m20, m12, shape[2], s20, s12);
    recurse(m01, m12, m20, s01, s12, s20);
    return;
  }
  quad_panel(x, verts, shape, normal, tri, acc);
}

}  // namespace

LaplaceSystem assemble_laplace_system(const SurfaceMesh& mesh, double rho,
                                      double dt,
                                      std::span<const double> p_bc) {
  const int n = static_cast<int>(mesh.vertex_count());
  if (n < 4) throw std::runtime_error("mesh too small for a BEM solve");

  LaplaceSystem sys;
  sys.labels = vertex_labels(mesh);
  sys.dirichlet.assign(n, 0.0);
  if (!p_bc.empty())
    for (int i = 0; i < n; ++i) sys.dirichlet[i] = p_bc[i];
  sys.neumann.assign(n, 0.0);
  {
    std::vector<Vec3> normals = vertex_normals(mesh);
    std::vector<Vec3> solid_u = vertex_solid_velocities(mesh);
    for (int i = 0; i < n; ++i)
      if (sys.labels[i] == FaceLabel::kSolid)
        sys.neumann[i] =
            rho / dt * (mesh.velocities[i] - solid_u[i]).dot(normals[i]);
  }

  std::vector<double> free_term(n);
  for (int i = 0; i < n; ++i)
    free_term[i] = vertex_interior_solid_angle(mesh, i) / (4.0 * M_PI);

  sys.matrix.resize(n, n);
  sys.rhs.resize(n);

  const int t_count = static_cast<int>(mesh.triangle_count());
  std::vector<Vec3> tri_normal(t_count);
  std::vector<double> tri_near2(t_count);
  std::vector<Vec3> tri_centroid(t_count);
  for (int t = 0; t < t_count; ++t) {
    tri_normal[t] = triangle_normal(mesh, t);
    double area = triangle_area(mesh, t);
    tri_near2[t] = 4.0 * area;  // (2 sqrt(area))^2
    tri_centroid[t] = triangle_centroid(mesh, t);
  }

  parallel_for_each(n, [&](int64_t row) {
    const int i = static_cast<int>(row);
    const Vec3& x = mesh.vertices[i];
    std::vector<double> single(n, 0.0), dipole(n, 0.0);
    RowAccumulator acc{single, dipole};
    for (int t = 0; t < t_count; ++t) {
      const Vec3i& tri = mesh.triangles[t];
      int pivot = -1;
      for (int k = 0; k < 3; ++k)
        if (tri[k] == i) pivot = k;
      const Vec3 verts[3] = {mesh.vertices[tri[0]], mesh.vertices[tri[1]],
                             mesh.vertices[tri[2]]};
      if (pivot >= 0) {
        // Self panel: flat double layer vanishes; Duffy single layer.
        auto w = duffy_single_layer(verts[0], verts[1], verts[2], pivot);
        for (int k = 0; k < 3; ++k) single[tri[k]] += w[k];
        continue;
      }
      if ((x - tri_centroid[t]).squaredNorm() < tri_near2[t]) {
        static const double kIdentity[3][3] = {
            {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
        near_panel(x, verts, kIdentity, tri_normal[t], 0, tri, acc);
        continue;
      }
      static const double kIdentity[3][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
      quad_panel(x, verts, kIdentity, tri_normal[t], tri, acc);
    }

    // c_i P_i + sum_j D_ij P_j = sum_j S_ij q_j with knowns moved right.
    double rhs = 0.0;
    for (int j = 0; j < n; ++j) {
      double p_coeff = dipole[j] + (j == i ? free_term[i] : 0.0);
      double q_coeff = -single[j];
      if (sys.labels[j] == FaceLabel::kSolid) {
        sys.matrix(i, j) = p_coeff;
        rhs -= q_coeff * sys.neumann[j];
      } else {
        sys.matrix(i, j) = q_coeff;
        rhs -= p_coeff * sys.dirichlet[j];
      }
    }
    sys.rhs[i] = rhs;
  });
  return sys;
}

BemSolveResult solve_boundary_pressure(const LaplaceSystem& system) {
  const int n = static_cast<int>(system.labels.size());
  bool any_dirichlet = false;
  for (FaceLabel l : system.labels)
    if (l == FaceLabel::kFreeSurface) any_dirichlet = true;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(system.matrix);
  double rcond = lu.rcond();
  if (!any_dirichlet) {
    // Pure Neumann problem: the constant is in the nullspace.
    throw std::runtime_error(
        "singular boundary system (pure Neumann), rcond estimate " +
        std::to_string(rcond));
  }
  if (!(rcond > 1e-12)) {
    throw std::runtime_error(
        "singular boundary system, rcond estimate " + std::to_string(rcond));
  }
  Eigen::VectorXd sol = lu.solve(system.rhs);
  double residual = (system.matrix * sol - system.rhs).norm();
  double scale = std::max(system.rhs.norm(), 1e-300);
  if (residual / scale > 1e-10) {
    sol = lu.solve(system.rhs - (system.matrix * sol - system.rhs)) + sol;
  }

  BemSolveResult out;
  out.p2.assign(n, 0.0);
  out.dp2_dn.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    if (system.labels[i] == FaceLabel::kSolid) {
      out.p2[i] = sol[i];
      out.dp2_dn[i] = system.neumann[i];
    } else {
      out.p2[i] = system.dirichlet[i];
      out.dp2_dn[i] = sol[i];
    }
  }
  return out;
}

void update_surface_velocity(SurfaceMesh& mesh, const BemSolveResult& result,
                             double dt, double rho) {
  const size_t n = mesh.vertex_count();
  std::vector<Vec3> grad_sum(n, Vec3::Zero());
  std::vector<double> area_sum(n, 0.0);
  for (size_t t = 0; t < mesh.triangle_count(); ++t) {
    const Vec3i& tri = mesh.triangles[t];
    const Vec3& p0 = mesh.vertices[tri[0]];
    const Vec3& p1 = mesh.vertices[tri[1]];
    const Vec3& p2 = mesh.vertices[tri[2]];
    Vec3 cross = (p1 - p0).cross(p2 - p0);
    double area2 = cross.norm();
    if (area2 < 1e-18) continue;
    Vec3 normal = cross / area2;
    // grad lambda_k = n x (opposite edge) / (2 A)
    Vec3 grads[3] = {normal.cross(p2 - p1) / area2,
                     normal.cross(p0 - p2) / area2,
                     normal.cross(p1 - p0) / area2};
    Vec3 g = Vec3::Zero();
    for (int k = 0; k < 3; ++k) g += result.p2[tri[k]] * grads[k];
    double area = 0.5 * area2;
    for (int k = 0; k < 3; ++k) {
      grad_sum[tri[k]] += area * g;
      area_sum[tri[k]] += area;
    }
  }
  std::vector<Vec3> normals = vertex_normals(mesh);
  for (size_t v = 0; v < n; ++v) {
    Vec3 g = area_sum[v] > 0.0 ? Vec3(grad_sum[v] / area_sum[v])
                               : Vec3::Zero();
    Vec3 g_t = g - g.dot(normals[v]) * normals[v];
    mesh.velocities[v] -=
        dt / rho * (g_t + result.dp2_dn[v] * normals[v]);
  }
}

}  // namespace hsim

#include "hsim/flip/pressure.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace hsim {

namespace {

static const Vec3i kAxisUnit[3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};

// Area fraction of a unit square below the zero level of the bilinear
// interpolant of corner values (fraction where phi < 0), computed from the
// two triangles of the square.
double triangle_inside_fraction(double a, double b, double c) {
  // Fraction of a triangle with vertex values a,b,c where phi < 0.
  int neg = (a < 0) + (b < 0) + (c < 0);
  if (neg == 0) return 0.0;
  if (neg == 3) return 1.0;
  // Sort so that negatives come first.
  double v[3] = {a, b, c};
  std::sort(v, v + 3);
  if (neg == 1) {
    double f1 = v[0] / (v[0] - v[1]);
    double f2 = v[0] / (v[0] - v[2]);
    return f1 * f2;
  }
  double f1 = v[0] / (v[0] - v[2]);
  double f2 = v[1] / (v[1] - v[2]);
  return 1.0 - (1.0 - f1) * (1.0 - f2);
}

double face_fraction(double p00, double p10, double p01, double p11) {
  double f = 0.5 * (triangle_inside_fraction(p00, p10, p11) +
                    triangle_inside_fraction(p00, p11, p01));
  return clamp01(f);
}

}  // namespace

void PressureSystem::multiply(std::span<const double> x,
                              std::span<double> y) const {
  const int n = size();
  for (int i = 0; i < n; ++i) {
    double acc = diag[i] * x[i];
    for (int k = row_start[i]; k < row_start[i + 1]; ++k)
      acc += val[k] * x[col[k]];
    y[i] = acc;
  }
}

void compute_solid_fractions(MacVelocityGrid& grid, const SolidGeometry& solid,
                             const GridRegion& region) {
  const double dx = grid.dx();
  // Nodal solid SDF over the region corners.
  Vec3i nlo = region.lo;
  Vec3i nhi = region.hi + Vec3i::Ones();
  Vec3i dims = nhi - nlo + Vec3i::Ones();
  auto node_index = [&](const Vec3i& n) {
    Vec3i r = n - nlo;
    return (static_cast<int64_t>(r.z()) * dims.y() + r.y()) * dims.x() + r.x();
  };
  std::vector<double> nodal(static_cast<size_t>(dims.x()) * dims.y() *
                            dims.z());
  for (int k = nlo.z(); k <= nhi.z(); ++k)
    for (int j = nlo.y(); j <= nhi.y(); ++j)
      for (int i = nlo.x(); i <= nhi.x(); ++i) {
        Vec3 p = grid.origin() + dx * Vec3(i, j, k);
        nodal[node_index(Vec3i(i, j, k))] = solid.phi(p);
      }

  // Face fractions from the 4 corner nodes of each face.
  for (int axis = 0; axis < 3; ++axis) {
    int t1 = (axis + 1) % 3, t2 = (axis + 2) % 3;
    Vec3i flo = region.lo, fhi = region.hi;
    fhi[axis] += 1;
    auto& field = grid.face(axis);
    for (int k = flo.z(); k <= fhi.z(); ++k)
      for (int j = flo.y(); j <= fhi.y(); ++j)
        for (int i = flo.x(); i <= fhi.x(); ++i) {
          Vec3i f(i, j, k);
          Vec3i c00 = f, c10 = f, c01 = f, c11 = f;
          c10[t1] += 1;
          c01[t2] += 1;
          c11[t1] += 1;
          c11[t2] += 1;
          double frac =
              face_fraction(nodal[node_index(c00)], nodal[node_index(c10)],
                            nodal[node_index(c01)], nodal[node_index(c11)]);
          if (frac > 0.0) field.solid_fraction.at(f) = frac;
        }
  }

  // Solid cell flags from center values.
  for (int k = region.lo.z(); k <= region.hi.z(); ++k)
    for (int j = region.lo.y(); j <= region.hi.y(); ++j)
      for (int i = region.lo.x(); i <= region.hi.x(); ++i) {
        Vec3i v(i, j, k);
        if (solid.phi(grid.voxel_center(v)) < 0.0)
          grid.flags().at(v) = static_cast<uint8_t>(CellFlag::kSolid);
      }
}

double cut_cell_divergence(const MacVelocityGrid& grid, const Vec3i& v) {
  double div = 0.0;
  for (int axis = 0; axis < 3; ++axis) {
    const auto& field = grid.face(axis);
    Vec3i f_lo = v;
    Vec3i f_hi = v + kAxisUnit[axis];
    for (int side = 0; side < 2; ++side) {
      const Vec3i& f = side ? f_hi : f_lo;
      double open = 1.0 - field.solid_fraction.get(f);
      double flux = open * field.value.get(f) +
                    (1.0 - open) * field.solid_velocity.get(f);
      div += side ? flux : -flux;
    }
  }
  return div / grid.dx();
}

PressureSystem build_pressure_system(MacVelocityGrid& grid,
                                     const LevelSet& liquid_phi,
                                     const FlipParams& params, double dt) {
  apply_boundary_friction(grid, params.friction_mu);

  PressureSystem sys;
  sys.dx = grid.dx();
  sys.dt_over_rho = dt / params.rho;
  const double dx = grid.dx();
  const double term_scale = dt / (params.rho * dx * dx);

  // Collect liquid DOFs in deterministic order.
  grid.flags().for_each_voxel([&](const Vec3i& v, uint8_t flag) {
    if (flag == static_cast<uint8_t>(CellFlag::kLiquid)) {
      sys.cell_index.emplace(pack_coords(v), sys.size());
      sys.cells.push_back(v);
    }
  });
  const int n = sys.size();
  sys.diag.assign(n, 0.0);
  sys.rhs.assign(n, 0.0);
  sys.row_start.assign(n + 1, 0);

  auto phi_acc = liquid_phi.values().accessor();
  bool has_dirichlet = false;

  std::vector<std::pair<int, double>> row_entries;
  std::vector<std::vector<std::pair<int, double>>> rows(n);
  for (int i = 0; i < n; ++i) {
    const Vec3i v = sys.cells[i];
    double phi_c = phi_acc.get(v);
    for (int axis = 0; axis < 3; ++axis) {
      const auto& field = grid.face(axis);
      for (int side = 0; side < 2; ++side) {
        Vec3i nb = v + (side ? kAxisUnit[axis] : -kAxisUnit[axis]);
        Vec3i f = side ? v + kAxisUnit[axis] : v;
        double open = 1.0 - field.solid_fraction.get(f);
        if (open <= 0.0) continue;
        double term = open * term_scale;
        auto it = sys.cell_index.find(pack_coords(nb));
        if (it != sys.cell_index.end()) {
          sys.diag[i] += term;
          rows[i].emplace_back(it->second, -term);
        } else if (grid.flag(nb) != CellFlag::kSolid) {
          double phi_n = phi_acc.get(nb);
          double theta = ghost_fluid_theta(phi_c, phi_n);
          sys.diag[i] += term / theta;
          sys.ghost_faces.push_back(
              {i, static_cast<uint8_t>(axis), static_cast<uint8_t>(side),
               theta});
          has_dirichlet = true;
        }
      }
    }
    if (sys.diag[i] == 0.0) {
      // Fully enclosed cell: pin its pressure.
      sys.diag[i] = term_scale;
      rows[i].clear();
      sys.rhs[i] = 0.0;
      continue;
    }
    sys.rhs[i] = -cut_cell_divergence(grid, v);
  }

  // Flatten CSR.
  size_t nnz = 0;
  for (const auto& r : rows) nnz += r.size();
  sys.col.reserve(nnz);
  sys.val.reserve(nnz);
  for (int i = 0; i < n; ++i) {
    sys.row_start[i] = static_cast<int>(sys.col.size());
    for (const auto& [j, a] : rows[i]) {
      sys.col.push_back(j);
      sys.val.push_back(a);
    }
  }
  sys.row_start[n] = static_cast<int>(sys.col.size());

  sys.all_neumann = !has_dirichlet;
  if (sys.all_neumann && n > 0) {
    double mean =
        std::accumulate(sys.rhs.begin(), sys.rhs.end(), 0.0) / n;
    for (double& b : sys.rhs) b -= mean;
    sys.removed_rhs_mean = mean;
  }
  return sys;
}

// ---------------------------------------------------------------------------
// Multigrid-preconditioned CG
// ---------------------------------------------------------------------------

namespace {

struct MgLevel {
  std::vector<Vec3i> cells;
  std::vector<double> diag;
  std::vector<int> row_start;
  std::vector<int> col;
  std::vector<double> val;
  std::vector<int> parent;  // fine dof -> coarse dof (for the finer level)
  std::vector<int> red, black;
};

struct MgHierarchy {
  std::vector<MgLevel> levels;
  Eigen::LLT<Eigen::MatrixXd> coarse_solver;
  Eigen::MatrixXd coarse_dense;
  bool coarse_usable = false;
};

void classify_colors(MgLevel& lvl) {
  for (int i = 0; i < static_cast<int>(lvl.cells.size()); ++i) {
    const Vec3i& c = lvl.cells[i];
    if (((c.x() + c.y() + c.z()) & 1) == 0)
      lvl.red.push_back(i);
    else
      lvl.black.push_back(i);
  }
}

MgHierarchy build_hierarchy(const PressureSystem& sys) {
  MgHierarchy h;
  MgLevel base;
  base.cells = sys.cells;
  base.diag = sys.diag;
  base.row_start = sys.row_start;
  base.col = sys.col;
  base.val = sys.val;
  classify_colors(base);
  h.levels.push_back(std::move(base));

  constexpr int kDirectLimit = 64;  // 4^3
  while (static_cast<int>(h.levels.back().cells.size()) > kDirectLimit) {
    const MgLevel& fine = h.levels.back();
    const int nf = static_cast<int>(fine.cells.size());
    MgLevel coarse;
    std::unordered_map<int64_t, int> agg_index;
    std::vector<int> parent(nf);
    for (int i = 0; i < nf; ++i) {
      Vec3i agg(fine.cells[i].x() >> 1, fine.cells[i].y() >> 1,
                fine.cells[i].z() >> 1);
      auto [it, inserted] = agg_index.emplace(
          pack_coords(agg), static_cast<int>(coarse.cells.size()));
      if (inserted) coarse.cells.push_back(agg);
      parent[i] = it->second;
    }
    const int nc = static_cast<int>(coarse.cells.size());
    if (nc == nf) break;  // no coarsening possible

    // Galerkin product with piecewise-constant prolongation, averaging
    // restriction (1/8), and the 0.5 coarse-operator rescale.
    const double scale = 0.5 / 8.0;
    std::vector<std::map<int, double>> rows(nc);
    for (int i = 0; i < nf; ++i) {
      int ci = parent[i];
      rows[ci][ci] += scale * fine.diag[i];
      for (int k = fine.row_start[i]; k < fine.row_start[i + 1]; ++k)
        rows[ci][parent[fine.col[k]]] += scale * fine.val[k];
    }
    coarse.diag.assign(nc, 0.0);
    coarse.row_start.assign(nc + 1, 0);
    for (int i = 0; i < nc; ++i) {
      coarse.row_start[i] = static_cast<int>(coarse.col.size());
      for (const auto& [j, a] : rows[i]) {
        if (j == i)
          coarse.diag[i] = a;
        else {
          coarse.col.push_back(j);
          coarse.val.push_back(a);
        }
      }
    }
    coarse.row_start[nc] = static_cast<int>(coarse.col.size());
    classify_colors(coarse);
    h.levels.back().parent = std::move(parent);
    h.levels.push_back(std::move(coarse));
  }

  // Dense factorization of the coarsest level (regularized if singular).
  const MgLevel& last = h.levels.back();
  const int nc = static_cast<int>(last.cells.size());
  if (nc > 0) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(nc, nc);
    double max_diag = 0.0;
    for (int i = 0; i < nc; ++i) {
      a(i, i) = last.diag[i];
      max_diag = std::max(max_diag, std::abs(last.diag[i]));
      for (int k = last.row_start[i]; k < last.row_start[i + 1]; ++k)
        a(i, last.col[k]) += last.val[k];
    }
    double shift = std::max(max_diag, 1.0) * 1e-12;
    for (int i = 0; i < nc; ++i) a(i, i) += shift;
    h.coarse_dense = a;
    h.coarse_solver.compute(a);
    h.coarse_usable = h.coarse_solver.info() == Eigen::Success;
  }
  return h;
}

void smooth_color(const MgLevel& lvl, std::span<double> x,
                  std::span<const double> b, const std::vector<int>& color) {
  for (int i : color) {
    if (lvl.diag[i] == 0.0) continue;
    double acc = b[i];
    for (int k = lvl.row_start[i]; k < lvl.row_start[i + 1]; ++k)
      acc -= lvl.val[k] * x[lvl.col[k]];
    x[i] = acc / lvl.diag[i];
  }
}

void level_residual(const MgLevel& lvl, std::span<const double> x,
                    std::span<const double> b, std::span<double> r) {
  const int n = static_cast<int>(lvl.cells.size());
  for (int i = 0; i < n; ++i) {
    double acc = lvl.diag[i] * x[i];
    for (int k = lvl.row_start[i]; k < lvl.row_start[i + 1]; ++k)
      acc += lvl.val[k] * x[lvl.col[k]];
    r[i] = b[i] - acc;
  }
}

void w_cycle(const MgHierarchy& h, size_t level, std::vector<double>& x,
             const std::vector<double>& b) {
  const MgLevel& lvl = h.levels[level];
  const int n = static_cast<int>(lvl.cells.size());
  if (level + 1 == h.levels.size()) {
    if (h.coarse_usable) {
      Eigen::Map<const Eigen::VectorXd> bb(b.data(), n);
      Eigen::VectorXd sol = h.coarse_solver.solve(bb);
      for (int i = 0; i < n; ++i) x[i] = sol[i];
    } else {
      for (int s = 0; s < 20; ++s) {
        smooth_color(lvl, x, b, lvl.red);
        smooth_color(lvl, x, b, lvl.black);
      }
    }
    return;
  }

  for (int s = 0; s < 3; ++s) {
    smooth_color(lvl, x, b, lvl.red);
    smooth_color(lvl, x, b, lvl.black);
  }

  std::vector<double> r(n);
  level_residual(lvl, x, b, r);
  const int nc = static_cast<int>(h.levels[level + 1].cells.size());
  std::vector<double> bc(nc, 0.0);
  for (int i = 0; i < n; ++i) bc[lvl.parent[i]] += r[i] / 8.0;

  std::vector<double> xc(nc, 0.0);
  w_cycle(h, level + 1, xc, bc);
  w_cycle(h, level + 1, xc, bc);

  for (int i = 0; i < n; ++i) x[i] += xc[lvl.parent[i]];

  for (int s = 0; s < 3; ++s) {
    smooth_color(lvl, x, b, lvl.black);
    smooth_color(lvl, x, b, lvl.red);
  }
}

}  // namespace

std::vector<double> solve_pressure(const PressureSystem& system,
                                   double rel_tol, double abs_inf_tol,
                                   int max_iters, PressureSolveStats* stats,
                                   std::span<const double> warm_start) {
  const int n = system.size();
  std::vector<double> x(n, 0.0);
  if (n == 0) return x;

  double b_norm = 0.0, b_inf = 0.0;
  for (double b : system.rhs) {
    b_norm += b * b;
    b_inf = std::max(b_inf, std::abs(b));
  }
  b_norm = std::sqrt(b_norm);
  if (b_norm == 0.0) {
    if (stats) *stats = {};
    return x;  // zero RHS: zero pressure, zero iterations
  }

  if (!warm_start.empty() && static_cast<int>(warm_start.size()) == n)
    std::copy(warm_start.begin(), warm_start.end(), x.begin());

  MgHierarchy hierarchy = build_hierarchy(system);

  std::vector<double> r(n), z(n), p(n), ap(n);
  system.multiply(x, r);
  for (int i = 0; i < n; ++i) r[i] = system.rhs[i] - r[i];

  auto converged = [&](double rn, double rinf) {
    if (rn / b_norm > rel_tol) return false;
    if (abs_inf_tol > 0.0 && rinf > abs_inf_tol) return false;
    return true;
  };
  auto norms = [&](const std::vector<double>& v, double* l2, double* linf) {
    double a = 0.0, m = 0.0;
    for (double e : v) {
      a += e * e;
      m = std::max(m, std::abs(e));
    }
    *l2 = std::sqrt(a);
    *linf = m;
  };

  PressureSolveStats local;
  double r2, rinf;
  norms(r, &r2, &rinf);
  local.residual_history.push_back(r2 / b_norm);

  if (converged(r2, rinf)) {
    if (stats) {
      local.relative_residual = r2 / b_norm;
      *stats = local;
    }
    return x;
  }

  auto precondition = [&](const std::vector<double>& rhs,
                          std::vector<double>& out) {
    std::fill(out.begin(), out.end(), 0.0);
    w_cycle(hierarchy, 0, out, rhs);
  };

  precondition(r, z);
  p = z;
  double rz = std::inner_product(r.begin(), r.end(), z.begin(), 0.0);

  for (int iter = 1; iter <= max_iters; ++iter) {
    system.multiply(p, ap);
    double pap = std::inner_product(p.begin(), p.end(), ap.begin(), 0.0);
    if (pap <= 0.0) break;  // nullspace direction; treated as breakdown
    double alpha = rz / pap;
    for (int i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
    }
    norms(r, &r2, &rinf);
    local.iterations = iter;
    local.residual_history.push_back(r2 / b_norm);
    if (converged(r2, rinf)) {
      // Accept on the exact residual, not the recurrence.
      system.multiply(x, ap);
      for (int i = 0; i < n; ++i) ap[i] = system.rhs[i] - ap[i];
      norms(ap, &r2, &rinf);
      if (converged(r2, rinf)) {
        local.relative_residual = r2 / b_norm;
        if (stats) *stats = local;
        return x;
      }
      r = ap;
    }
    precondition(r, z);
    double rz_new = std::inner_product(r.begin(), r.end(), z.begin(), 0.0);
    double beta = rz_new / rz;
    rz = rz_new;
    for (int i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }

  throw PressureSolveError("pressure solve did not converge",
                           std::move(local.residual_history));
}

void project_velocity(MacVelocityGrid& grid, const PressureSystem& system,
                      std::span<const double> pressure) {
  const double scale = system.dt_over_rho / system.dx;

  // Liquid-liquid faces, each updated once from its lower liquid cell or
  // from the liquid cell when only one side is a DOF.
  for (int i = 0; i < system.size(); ++i) {
    const Vec3i v = system.cells[i];
    const double p_c = pressure[i];
    for (int axis = 0; axis < 3; ++axis) {
      auto& field = grid.face(axis);
      Vec3i nb = v + kAxisUnit[axis];
      auto it = system.cell_index.find(pack_coords(nb));
      if (it == system.cell_index.end()) continue;
      Vec3i f = v + kAxisUnit[axis];
      if (1.0 - field.solid_fraction.get(f) <= 0.0) continue;
      field.value.at(f) -= scale * (pressure[it->second] - p_c);
    }
  }

  // Liquid-air faces: ghost pressure 0 at the theta fraction.
  for (const auto& gf : system.ghost_faces) {
    const Vec3i v = system.cells[gf.cell_dof];
    auto& field = grid.face(gf.axis);
    Vec3i f = gf.upper ? v + kAxisUnit[gf.axis] : v;
    double p_c = pressure[gf.cell_dof];
    double d = gf.upper ? -p_c / gf.theta : p_c / gf.theta;
    field.value.at(f) -= scale * d;
  }

  // Fully solid faces of liquid cells carry the solid velocity so that
  // near-wall sampling sees the wall, not stale transfers.
  for (int i = 0; i < system.size(); ++i) {
    const Vec3i v = system.cells[i];
    for (int axis = 0; axis < 3; ++axis) {
      auto& field = grid.face(axis);
      for (int side = 0; side < 2; ++side) {
        Vec3i f = side ? v + kAxisUnit[axis] : v;
        if (1.0 - field.solid_fraction.get(f) <= 0.0) {
          field.value.at(f) = field.solid_velocity.get(f);
          field.valid.at(f) = 1;
        }
      }
    }
  }
}

double max_relative_divergence(const MacVelocityGrid& grid) {
  double max_speed = std::max(grid.max_speed(), 1e-9);
  double worst = 0.0;
  grid.flags().for_each_voxel([&](const Vec3i& v, uint8_t flag) {
    if (flag != static_cast<uint8_t>(CellFlag::kLiquid)) return;
    double div = cut_cell_divergence(grid, v);
    worst = std::max(worst, std::abs(div) * grid.dx() / max_speed);
  });
  return worst;
}

ProjectionReport project_with_tolerance(MacVelocityGrid& grid,
                                        const LevelSet& liquid_phi,
                                        const FlipParams& params, double dt) {
  ProjectionReport report;
  PressureSystem sys = build_pressure_system(grid, liquid_phi, params, dt);
  report.removed_rhs_mean = sys.removed_rhs_mean;
  if (sys.size() == 0) return report;

  // Snapshot of post-friction face velocities for re-projection rounds.
  MacVelocityGrid saved = grid;

  double rel_tol = params.pressure_tol;
  std::vector<double> p;
  for (int round = 0; round < 5; ++round) {
    double speed = std::max(saved.max_speed(), 1e-9);
    double abs_target = params.pressure_tol * speed / sys.dx;
    PressureSolveStats stats;
    p = solve_pressure(sys, rel_tol, abs_target, 400, &stats, p);
    report.cg_iterations += stats.iterations;
    grid = saved;
    project_velocity(grid, sys, p);
    report.max_rel_divergence = max_relative_divergence(grid);
    report.refinement_rounds = round + 1;
    if (report.max_rel_divergence <= params.pressure_tol) break;
    rel_tol *= 1e-2;
    if (rel_tol < 1e-15) rel_tol = 1e-15;
  }
  return report;
}

}  // namespace hsim

#pragma once

#include <span>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "hsim/flip/transfer.hpp"
#include "hsim/grids/level_set.hpp"
#include "hsim/grids/mac_grid.hpp"

namespace hsim {

// 7-point SPD Poisson system over liquid voxels with cut-cell Neumann and
// ghost-fluid Dirichlet coefficients. Entries carry the dt/(rho*dx^2) scale.
struct PressureSystem {
  std::vector<Vec3i> cells;
  std::unordered_map<int64_t, int> cell_index;
  std::vector<double> diag;
  std::vector<int> row_start;  // off-diagonal CSR
  std::vector<int> col;
  std::vector<double> val;
  std::vector<double> rhs;
  // Liquid-air faces with their ghost-fluid fractions, recorded at assembly
  // so the velocity update uses identical coefficients.
  struct GhostFace {
    int cell_dof;
    uint8_t axis;
    uint8_t upper;  // 1: air neighbor above the cell along axis
    double theta;
  };
  std::vector<GhostFace> ghost_faces;
  double dx = 1.0;
  double dt_over_rho = 1.0;
  bool all_neumann = false;
  double removed_rhs_mean = 0.0;  // reported when the nullspace is projected

  int size() const { return static_cast<int>(cells.size()); }
  void multiply(std::span<const double> x, std::span<double> y) const;
};

struct PressureSolveStats {
  int iterations = 0;
  double relative_residual = 0.0;
  std::vector<double> residual_history;
};

class PressureSolveError : public std::runtime_error {
 public:
  PressureSolveError(const std::string& what, std::vector<double> history)
      : std::runtime_error(what), residual_history(std::move(history)) {}
  std::vector<double> residual_history;
};

// Ghost-fluid interface fraction with the conditioning clamp.
inline double ghost_fluid_theta(double phi_liquid, double phi_air) {
  double denom = phi_liquid - phi_air;
  double theta = denom == 0.0 ? 1.0 : phi_liquid / denom;
  return std::clamp(theta, 0.01, 1.0);
}

// Samples the solid SDF at voxel corners and stores per-face solid area
// fractions; voxels with solid centers are flagged SOLID.
void compute_solid_fractions(MacVelocityGrid& grid, const SolidGeometry& solid,
                             const GridRegion& region);

// Cut-cell divergence of a cell: (1/dx) * sum of outgoing face fluxes
// F = open*u + (1-open)*u_solid.
double cut_cell_divergence(const MacVelocityGrid& grid, const Vec3i& v);

// Assembles the Poisson system. Face velocities are friction-blended in
// place before the divergence is taken (mu from params); an all-Neumann
// system has the mean removed from the RHS.
PressureSystem build_pressure_system(MacVelocityGrid& grid,
                                     const LevelSet& liquid_phi,
                                     const FlipParams& params, double dt);

// MG(W-cycle)-preconditioned CG. Iterates until the l2 residual relative to
// the RHS drops below rel_tol and, when positive, the max-norm residual
// drops below abs_inf_tol. Throws PressureSolveError past max_iters.
std::vector<double> solve_pressure(const PressureSystem& system,
                                   double rel_tol, double abs_inf_tol = 0.0,
                                   int max_iters = 400,
                                   PressureSolveStats* stats = nullptr,
                                   std::span<const double> warm_start = {});

// u <- u - dt/rho * grad(p) with the assembly's cut-cell/ghost-fluid
// coefficients; fully solid faces are pinned to their solid velocity.
void project_velocity(MacVelocityGrid& grid, const PressureSystem& system,
                      std::span<const double> pressure);

// Max over liquid voxels of |div u| * dx / max(max |u|, eps).
double max_relative_divergence(const MacVelocityGrid& grid);

struct ProjectionReport {
  int cg_iterations = 0;
  double max_rel_divergence = 0.0;
  int refinement_rounds = 0;
  double removed_rhs_mean = 0.0;
};

// Build + solve + project, re-solving with tighter tolerances until the
// measured relative divergence meets params.pressure_tol.
ProjectionReport project_with_tolerance(MacVelocityGrid& grid,
                                        const LevelSet& liquid_phi,
                                        const FlipParams& params, double dt);

}  // namespace hsim

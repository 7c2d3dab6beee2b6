#pragma once

#include <memory>
#include <optional>

#include "hsim/flip/particles.hpp"
#include "hsim/grids/level_set.hpp"
#include "hsim/grids/mac_grid.hpp"

namespace hsim {

struct FlipParams {
  double flip_blend = 0.95;
  double cfl_max = 1.0;
  int particles_per_voxel_target = 8;
  Vec3 gravity{0.0, -9.81, 0.0};
  double rho = 1000.0;
  double friction_mu = 0.8;
  double pressure_tol = 1e-7;
};

// Static solid geometry queried by signed distance (negative inside solid).
class SolidGeometry {
 public:
  virtual ~SolidGeometry() = default;
  virtual double phi(const Vec3& p) const = 0;
  virtual Vec3 gradient(const Vec3& p) const {
    const double h = 1e-5;
    Vec3 g;
    for (int a = 0; a < 3; ++a) {
      Vec3 e = Vec3::Zero();
      e[a] = h;
      g[a] = (phi(p + e) - phi(p - e)) / (2.0 * h);
    }
    return g;
  }
};

struct GridRegion {
  Vec3i lo = Vec3i::Zero();
  Vec3i hi = Vec3i::Zero();
};

struct P2GResult {
  MacVelocityGrid grid;
  LevelSet liquid_phi;
  // Accumulated transfer weights per face, kept for conservation checks.
  BlockGrid<double> weights[3] = {BlockGrid<double>(0.0), BlockGrid<double>(0.0),
                                  BlockGrid<double>(0.0)};
};

// Union-of-balls liquid SDF from particle positions, reinitialized within
// the band. Empty input gives an empty (all positive) field.
LevelSet rebuild_levelset_from_particles(const ParticleSet& particles,
                                         double dx, double radius,
                                         const Vec3& origin, double bandwidth);

// Trilinear momentum scatter normalized by accumulated weights, plus the
// particle-union level set of the same positions. Faces with zero weight are
// absent. The gather order is fixed, so results do not depend on particle
// order or worker count.
P2GResult particle_to_grid(const ParticleSet& particles, double dx,
                           const Vec3& origin, const GridRegion& region,
                           double radius, double phi_bandwidth);

// FLIP/PIC blended velocity read-back:
// v <- blend*(v + du(x)) + (1-blend)*u_new(x), du = u_new - u_old.
void grid_to_particle(ParticleSet& particles, const MacVelocityGrid& grid_new,
                      const MacVelocityGrid& grid_old, double flip_blend);

// Midpoint-rule advection in the grid field; particles ending inside the
// solid are pushed out along the solid SDF gradient.
void advect_particles(ParticleSet& particles, const MacVelocityGrid& grid,
                      double dt, const SolidGeometry* solid);

// v-face increment g*dt on every valid face (per axis component of g).
void apply_body_force(MacVelocityGrid& grid, const Vec3& g, double dt);

// Artificial friction against embedded solids:
// u <- (1 - f_solid*mu)*u + f_solid*mu*u_solid on every valid face.
void apply_boundary_friction(MacVelocityGrid& grid, double mu);

// Breadth-first averaging of valid face values into invalid neighbors,
// `layers` deep. Newly filled faces are marked valid.
void extrapolate_velocity(MacVelocityGrid& grid, int layers);

}  // namespace hsim

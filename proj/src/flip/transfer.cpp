#include "hsim/flip/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

namespace hsim {

namespace {

inline double hat(double t) {
  double a = std::abs(t);
  return a < 1.0 ? 1.0 - a : 0.0;
}

GridRegion region_of_positions(std::span<const Vec3> positions, double dx,
                               const Vec3& origin, int pad) {
  Vec3 lo = positions.front(), hi = positions.front();
  for (const Vec3& p : positions) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  GridRegion r;
  r.lo = floor_vec((lo - origin) / dx) - Vec3i::Constant(pad);
  r.hi = floor_vec((hi - origin) / dx) + Vec3i::Constant(pad);
  return r;
}

}  // namespace

LevelSet rebuild_levelset_from_particles(const ParticleSet& particles,
                                         double dx, double radius,
                                         const Vec3& origin,
                                         double bandwidth) {
  LevelSet phi(dx, origin, bandwidth);
  if (particles.empty()) return phi;
  GridRegion region =
      region_of_positions(particles.positions, dx, origin, 2);
  ParticleBins bins(particles.positions, dx, origin, region.lo, region.hi);

  for (int k = region.lo.z(); k <= region.hi.z(); ++k)
    for (int j = region.lo.y(); j <= region.hi.y(); ++j)
      for (int i = region.lo.x(); i <= region.hi.x(); ++i) {
        Vec3i v(i, j, k);
        int occupied = 0, total = 0;
        for (int dk = -1; dk <= 1; ++dk)
          for (int dj = -1; dj <= 1; ++dj)
            for (int di = -1; di <= 1; ++di) {
              ++total;
              if (bins.count(v + Vec3i(di, dj, dk)) > 0) ++occupied;
            }
        if (occupied == 0) continue;
        if (occupied == total) {
          // Interior voxel; the reinitialization recomputes its distance.
          phi.set(v, -0.5 * dx);
          continue;
        }
        Vec3 c = phi.voxel_center(v);
        double best = bandwidth + radius;
        for (int dk = -1; dk <= 1; ++dk)
          for (int dj = -1; dj <= 1; ++dj)
            for (int di = -1; di <= 1; ++di)
              for (int64_t pi : bins.cell(v + Vec3i(di, dj, dk)))
                best = std::min(best,
                                (c - particles.positions[pi]).norm());
        double d = best - radius;
        if (d < bandwidth) phi.set(v, d);
      }
  phi.reinitialize(bandwidth);
  return phi;
}

P2GResult particle_to_grid(const ParticleSet& particles, double dx,
                           const Vec3& origin, const GridRegion& region,
                           double radius, double phi_bandwidth) {
  P2GResult out;
  out.grid = MacVelocityGrid(dx, origin);
  out.liquid_phi = rebuild_levelset_from_particles(particles, dx, radius,
                                                   origin, phi_bandwidth);
  if (particles.empty()) return out;

  ParticleBins bins(particles.positions, dx, origin, region.lo, region.hi);

  for (int axis = 0; axis < 3; ++axis) {
    Vec3i flo = region.lo;
    Vec3i fhi = region.hi;
    fhi[axis] += 1;  // one extra face layer along the staggered axis

    auto& field = out.grid.face(axis);
    for (int k = flo.z(); k <= fhi.z(); ++k)
      for (int j = flo.y(); j <= fhi.y(); ++j)
        for (int i = flo.x(); i <= fhi.x(); ++i) {
          Vec3i f(i, j, k);
          Vec3 center = out.grid.face_center(axis, f);
          double momentum = 0.0, wsum = 0.0;
          // Cells whose particles can overlap this face: 2 along the
          // staggered axis, 3 along each transverse axis.
          Vec3i clo = f, chi = f;
          clo[axis] -= 1;
          chi[axis] += 0;
          for (int a = 0; a < 3; ++a)
            if (a != axis) {
              clo[a] -= 1;
              chi[a] += 1;
            }
          for (int ck = clo.z(); ck <= chi.z(); ++ck)
            for (int cj = clo.y(); cj <= chi.y(); ++cj)
              for (int ci = clo.x(); ci <= chi.x(); ++ci)
                for (int64_t pi : bins.cell(Vec3i(ci, cj, ck))) {
                  const Vec3& p = particles.positions[pi];
                  double w = hat((p.x() - center.x()) / dx) *
                             hat((p.y() - center.y()) / dx) *
                             hat((p.z() - center.z()) / dx);
                  if (w > 0.0) {
                    momentum += w * particles.velocities[pi][axis];
                    wsum += w;
                  }
                }
          if (wsum > 0.0) {
            field.value.at(f) = momentum / wsum;
            field.valid.at(f) = 1;
            out.weights[axis].at(f) = wsum;
          }
        }
  }

  // Cell flags: liquid where occupied by particles or inside the SDF.
  auto phi_acc = out.liquid_phi.values().accessor();
  for (int k = region.lo.z(); k <= region.hi.z(); ++k)
    for (int j = region.lo.y(); j <= region.hi.y(); ++j)
      for (int i = region.lo.x(); i <= region.hi.x(); ++i) {
        Vec3i v(i, j, k);
        if (bins.count(v) > 0 || phi_acc.get(v) < 0.0)
          out.grid.flags().at(v) = static_cast<uint8_t>(CellFlag::kLiquid);
      }
  return out;
}

void grid_to_particle(ParticleSet& particles, const MacVelocityGrid& grid_new,
                      const MacVelocityGrid& grid_old, double flip_blend) {
  for (size_t i = 0; i < particles.size(); ++i) {
    const Vec3& x = particles.positions[i];
    Vec3 u_new = grid_new.sample(x);
    Vec3 du = u_new - grid_old.sample(x);
    particles.velocities[i] = flip_blend * (particles.velocities[i] + du) +
                              (1.0 - flip_blend) * u_new;
  }
}

void advect_particles(ParticleSet& particles, const MacVelocityGrid& grid,
                      double dt, const SolidGeometry* solid) {
  const double eps = 1e-4 * grid.dx();
  for (size_t i = 0; i < particles.size(); ++i) {
    Vec3 x = particles.positions[i];
    Vec3 mid = x + 0.5 * dt * grid.sample(x);
    x += dt * grid.sample(mid);
    if (solid) {
      double d = solid->phi(x);
      if (d < 0.0) {
        Vec3 n = solid->gradient(x);
        double len = n.norm();
        if (len > 1e-12) x -= (d - eps) * (n / len);
      }
    }
    particles.positions[i] = x;
  }
}

void apply_body_force(MacVelocityGrid& grid, const Vec3& g, double dt) {
  for (int axis = 0; axis < 3; ++axis) {
    if (g[axis] == 0.0) continue;
    auto& field = grid.face(axis);
    auto valid = field.valid.accessor();
    for (auto* blk : field.value.sorted_blocks_mut()) {
      for (int o = 0; o < BlockGrid<double>::kSize; ++o) {
        Vec3i f = blk->base + Vec3i(o & 7, (o >> 3) & 7, o >> 6);
        if (valid.get(f)) blk->data[o] += g[axis] * dt;
      }
    }
  }
}

void apply_boundary_friction(MacVelocityGrid& grid, double mu) {
  if (mu == 0.0) return;
  for (int axis = 0; axis < 3; ++axis) {
    auto& field = grid.face(axis);
    auto valid = field.valid.accessor();
    auto fsolid = field.solid_fraction.accessor();
    auto usolid = field.solid_velocity.accessor();
    for (auto* blk : field.value.sorted_blocks_mut()) {
      for (int o = 0; o < BlockGrid<double>::kSize; ++o) {
        Vec3i f = blk->base + Vec3i(o & 7, (o >> 3) & 7, o >> 6);
        if (!valid.get(f)) continue;
        double fs = fsolid.get(f);
        if (fs > 0.0)
          blk->data[o] = (1.0 - fs * mu) * blk->data[o] +
                         fs * mu * usolid.get(f);
      }
    }
  }
}

void extrapolate_velocity(MacVelocityGrid& grid, int layers) {
  static const Vec3i kNeighbors[6] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0},
                                      {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
  for (int axis = 0; axis < 3; ++axis) {
    auto& field = grid.face(axis);
    for (int layer = 0; layer < layers; ++layer) {
      // Candidate invalid faces next to valid ones, in deterministic order.
      std::map<int64_t, Vec3i> candidates;
      auto valid = field.valid.accessor();
      field.valid.for_each_voxel([&](const Vec3i& f, uint8_t flag) {
        if (!flag) return;
        for (const Vec3i& n : kNeighbors) {
          Vec3i nb = f + n;
          if (!field.valid.get(nb))
            candidates.emplace(pack_coords(nb), nb);
        }
      });
      if (candidates.empty()) break;
      std::vector<std::pair<Vec3i, double>> additions;
      additions.reserve(candidates.size());
      auto value = field.value.accessor();
      for (const auto& [key, f] : candidates) {
        double sum = 0.0;
        int n_valid = 0;
        for (const Vec3i& n : kNeighbors) {
          Vec3i nb = f + n;
          if (valid.get(nb)) {
            sum += value.get(nb);
            ++n_valid;
          }
        }
        if (n_valid > 0) additions.emplace_back(f, sum / n_valid);
      }
      for (const auto& [f, v] : additions) {
        field.value.at(f) = v;
        field.valid.at(f) = 2;
      }
    }
  }
}

}  // namespace hsim

#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "hsim/types.hpp"

namespace hsim {

// Lagrangian liquid carriers.
struct ParticleSet {
  std::vector<Vec3> positions;
  std::vector<Vec3> velocities;

  size_t size() const { return positions.size(); }
  bool empty() const { return positions.empty(); }

  void append(const Vec3& p, const Vec3& v) {
    positions.push_back(p);
    velocities.push_back(v);
  }

  // Removes the given ascending indices, preserving relative order.
  void remove_sorted(const std::vector<int64_t>& sorted_indices);
};

// radius = 1.01 * (half voxel diagonal)
inline double default_particle_radius(double dx) {
  return 1.01 * 0.5 * std::sqrt(3.0) * dx;
}

// ASCII PLY with per-vertex x y z vx vy vz (float64), deterministic bytes.
void write_particles_ply(std::ostream& os, const ParticleSet& particles);
void write_particles_ply(const std::string& path, const ParticleSet& particles);
ParticleSet read_particles_ply(std::istream& is);
ParticleSet read_particles_ply_file(const std::string& path);

// Dense counting-sort binning of particles by voxel over [lo, hi].
// Particles outside the range are dropped from all queries.
class ParticleBins {
 public:
  ParticleBins(std::span<const Vec3> positions, double dx, const Vec3& origin,
               const Vec3i& lo, const Vec3i& hi);

  std::span<const int64_t> cell(const Vec3i& v) const;
  int count(const Vec3i& v) const {
    return static_cast<int>(cell(v).size());
  }
  const Vec3i& lo() const { return lo_; }
  const Vec3i& hi() const { return hi_; }

 private:
  int64_t cell_index(const Vec3i& v) const;
  Vec3i lo_, hi_, dims_;
  std::vector<int64_t> starts_;   // dims product + 1
  std::vector<int64_t> indices_;  // particle indices grouped by cell
};

}  // namespace hsim

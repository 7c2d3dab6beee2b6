#pragma once

#include <span>
#include <vector>

#include "hsim/grids/block_grid.hpp"
#include "hsim/types.hpp"

namespace hsim {

// Sparse signed distance field sampled at voxel centers. Values are clamped
// to [-bandwidth, bandwidth]; queries outside the stored band return
// +bandwidth (outside the liquid).
class LevelSet {
 public:
  LevelSet() : LevelSet(1.0, Vec3::Zero(), 3.0) {}
  LevelSet(double dx, const Vec3& origin, double bandwidth)
      : dx_(dx), origin_(origin), bandwidth_(bandwidth), values_(bandwidth) {}

  double dx() const { return dx_; }
  const Vec3& origin() const { return origin_; }
  double bandwidth() const { return bandwidth_; }
  void set_bandwidth(double b) {
    bandwidth_ = b;
    values_.set_background(b);
  }

  BlockGrid<double>& values() { return values_; }
  const BlockGrid<double>& values() const { return values_; }

  Vec3 voxel_center(const Vec3i& v) const {
    return origin_ + dx_ * (v.cast<double>() + Vec3::Constant(0.5));
  }
  Vec3i voxel_of(const Vec3& p) const {
    return floor_vec((p - origin_) / dx_);
  }

  double at(const Vec3i& v) const { return values_.get(v); }
  void set(const Vec3i& v, double phi) { values_.at(v) = phi; }

  // Trilinear interpolation of voxel-center values; out-of-band lookups
  // contribute +bandwidth.
  double sample(const Vec3& p) const;

  // Central-difference gradient of sample() with half-voxel stencil.
  Vec3 gradient(const Vec3& p) const;

  // Recompute signed distances by fast sweeping (8 orderings) from the
  // frozen interface voxels, extending the band to the requested width.
  void reinitialize() { reinitialize(bandwidth_); }
  void reinitialize(double new_bandwidth);

  bool empty() const { return values_.empty(); }

 private:
  double dx_;
  Vec3 origin_;
  double bandwidth_;
  BlockGrid<double> values_;
};

// Three-tap binomial smoothing of the zero isocontour. The band is widened
// so every filter read within `passes` voxels of the interface is valid,
// then the result is re-signed-distanced. passes == 0 returns a copy.
LevelSet gaussian_smooth(const LevelSet& phi, int passes);

// Exact narrow-band mesh distance with sign from the winding number of each
// vertical line (signed ray-crossing sum), evaluated for every voxel whose
// center lies in clip_box. Throws "open surface" for non-watertight input.
LevelSet levelset_from_mesh(std::span<const Vec3> vertices,
                            std::span<const Vec3i> triangles, double dx,
                            const Vec3& origin, double bandwidth,
                            const Box3& clip_box);

// Exact distance from a point to a triangle.
double point_triangle_distance(const Vec3& p, const Vec3& a, const Vec3& b,
                               const Vec3& c);

}  // namespace hsim

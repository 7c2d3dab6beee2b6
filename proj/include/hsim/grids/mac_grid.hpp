#pragma once

#include "hsim/grids/block_grid.hpp"
#include "hsim/types.hpp"

namespace hsim {

enum class CellFlag : uint8_t { kAir = 0, kLiquid = 1, kSolid = 2 };

// Staggered sparse velocity field. Face (i,j,k) of axis a is the lower face
// of voxel (i,j,k) along that axis; a component is valid wherever either
// adjacent voxel is liquid. Invalid faces always hold the value 0 so plain
// trilinear interpolation implements the documented zero-fill rule.
class MacVelocityGrid {
 public:
  struct FaceField {
    BlockGrid<double> value{0.0};
    BlockGrid<uint8_t> valid{0};
    BlockGrid<double> solid_fraction{0.0};  // f_solid in [0,1]
    BlockGrid<double> solid_velocity{0.0};
  };

  MacVelocityGrid() : MacVelocityGrid(1.0, Vec3::Zero()) {}
  MacVelocityGrid(double dx, const Vec3& origin) : dx_(dx), origin_(origin) {}

  double dx() const { return dx_; }
  const Vec3& origin() const { return origin_; }

  FaceField& face(int axis) { return faces_[axis]; }
  const FaceField& face(int axis) const { return faces_[axis]; }

  BlockGrid<uint8_t>& flags() { return flags_; }
  const BlockGrid<uint8_t>& flags() const { return flags_; }

  CellFlag flag(const Vec3i& v) const {
    return static_cast<CellFlag>(flags_.get(v));
  }
  bool is_liquid(const Vec3i& v) const { return flag(v) == CellFlag::kLiquid; }

  Vec3 face_center(int axis, const Vec3i& f) const {
    Vec3 c = (f.cast<double>() + Vec3::Constant(0.5)) * dx_;
    c[axis] -= 0.5 * dx_;
    return origin_ + c;
  }
  Vec3 voxel_center(const Vec3i& v) const {
    return origin_ + dx_ * (v.cast<double>() + Vec3::Constant(0.5));
  }
  Vec3i voxel_of(const Vec3& p) const { return floor_vec((p - origin_) / dx_); }

  // Trilinear interpolation of one staggered component; absent faces
  // contribute zero with no weight renormalization.
  double sample_component(int axis, const Vec3& p) const;
  Vec3 sample(const Vec3& p) const {
    return Vec3(sample_component(0, p), sample_component(1, p),
                sample_component(2, p));
  }

  // Largest absolute valid face value (CFL bound).
  double max_speed() const;

  double open_fraction(int axis, const Vec3i& f) const {
    return 1.0 - faces_[axis].solid_fraction.get(f);
  }

 private:
  double dx_ = 1.0;
  Vec3 origin_ = Vec3::Zero();
  FaceField faces_[3];
  BlockGrid<uint8_t> flags_{static_cast<uint8_t>(CellFlag::kAir)};
};

// Velocity usable for trilinear sampling of component `axis` at world p.
Vec3 sample_trilinear(const MacVelocityGrid& grid, const Vec3& p);

}  // namespace hsim

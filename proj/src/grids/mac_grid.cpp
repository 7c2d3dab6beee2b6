#include "hsim/grids/mac_grid.hpp"

#include <cmath>

namespace hsim {

double MacVelocityGrid::sample_component(int axis, const Vec3& p) const {
  // Face lattice of `axis` has centers at origin + dx*(i,j,k) + 0.5*dx in
  // the two transverse directions.
  Vec3 q = (p - origin_) / dx_;
  for (int a = 0; a < 3; ++a)
    if (a != axis) q[a] -= 0.5;
  Vec3i base = floor_vec(q);
  Vec3 f = q - base.cast<double>();
  auto acc = faces_[axis].value.accessor();
  double result = 0.0;
  for (int c = 0; c < 8; ++c) {
    Vec3i off(c & 1, (c >> 1) & 1, (c >> 2) & 1);
    double w = (off.x() ? f.x() : 1.0 - f.x()) *
               (off.y() ? f.y() : 1.0 - f.y()) *
               (off.z() ? f.z() : 1.0 - f.z());
    result += w * acc.get(base + off);
  }
  return result;
}

double MacVelocityGrid::max_speed() const {
  double m = 0.0;
  for (int axis = 0; axis < 3; ++axis) {
    auto valid = faces_[axis].valid.accessor();
    faces_[axis].value.for_each_voxel([&](const Vec3i& v, double u) {
      if (valid.get(v)) m = std::max(m, std::abs(u));
    });
  }
  return m;
}

Vec3 sample_trilinear(const MacVelocityGrid& grid, const Vec3& p) {
  return grid.sample(p);
}

}  // namespace hsim

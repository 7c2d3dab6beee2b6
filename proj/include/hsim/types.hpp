#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <cmath>
#include <cstdint>

namespace hsim {

using Vec3 = Eigen::Vector3d;
using Vec3i = Eigen::Vector3i;
using Mat3 = Eigen::Matrix3d;

// Axis-aligned box in world space.
struct Box3 {
  Vec3 lo = Vec3::Zero();
  Vec3 hi = Vec3::Zero();

  bool contains(const Vec3& p) const {
    return p.x() >= lo.x() && p.x() <= hi.x() && p.y() >= lo.y() &&
           p.y() <= hi.y() && p.z() >= lo.z() && p.z() <= hi.z();
  }
  bool contains_xz(const Vec3& p) const {
    return p.x() >= lo.x() && p.x() <= hi.x() && p.z() >= lo.z() &&
           p.z() <= hi.z();
  }
  Box3 expanded(double pad) const {
    return {lo - Vec3::Constant(pad), hi + Vec3::Constant(pad)};
  }
  Vec3 center() const { return 0.5 * (lo + hi); }
  Vec3 extent() const { return hi - lo; }
};

inline Vec3i floor_vec(const Vec3& p) {
  return Vec3i(static_cast<int>(std::floor(p.x())),
               static_cast<int>(std::floor(p.y())),
               static_cast<int>(std::floor(p.z())));
}

inline double clamp01(double x) { return x < 0.0 ? 0.0 : (x > 1.0 ? 1.0 : x); }

// Packs signed lattice coordinates (|c| < 2^20) into a sortable key.
inline int64_t pack_coords(const Vec3i& v) {
  constexpr int64_t bias = 1 << 20;
  return (static_cast<int64_t>(v.x()) + bias) |
         ((static_cast<int64_t>(v.y()) + bias) << 21) |
         ((static_cast<int64_t>(v.z()) + bias) << 42);
}

// SplitMix64; used to derive independent deterministic RNG streams.
inline uint64_t hash_mix(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Small counter-based RNG with a 64-bit state; uniform doubles in [0,1).
class SeededRng {
 public:
  explicit SeededRng(uint64_t seed) : state_(hash_mix(seed)) {}
  uint64_t next_u64() {
    state_ = hash_mix(state_ + 0xd1b54a32d192ed03ull);
    return state_;
  }
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }
  Vec3 next_in_unit_cube() {
    double a = next_double(), b = next_double(), c = next_double();
    return Vec3(a, b, c);
  }

 private:
  uint64_t state_;
};

}  // namespace hsim

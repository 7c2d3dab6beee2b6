#pragma once

#include <array>

#include "hsim/types.hpp"

namespace hsim {

// Value and x-gradient of the single-layer kernel integrated over a flat
// triangle: I(x) = integral over T of 1/(4*pi*|x-y|) dA(y).
struct TriangleKernel {
  double potential = 0.0;
  Vec3 gradient = Vec3::Zero();
};

// Analytic evaluation, valid on, near, and far from the triangle (the
// gradient's normal part is one-sided on the panel itself). Throws
// "degenerate element" below the area floor.
TriangleKernel singular_triangle_integral(const Vec3& a, const Vec3& b,
                                          const Vec3& c, const Vec3& x);

// Signed solid angle of triangle (a,b,c) seen from x; positive when the
// triangle is seen with counter-clockwise (outward-normal-facing) winding.
double triangle_solid_angle(const Vec3& a, const Vec3& b, const Vec3& c,
                            const Vec3& x);

// Symmetric 3-point triangle rule: barycentric (2/3,1/6,1/6) rotations,
// each weighted by a third of the area.
struct TriangleQuadrature {
  std::array<Vec3, 3> points;
  std::array<std::array<double, 3>, 3> barycentric;
  double weight;  // area / 3
};
TriangleQuadrature symmetric_quadrature(const Vec3& a, const Vec3& b,
                                        const Vec3& c);

// Duffy-transformed integration of the single layer times the three vertex
// shape functions when the collocation point is vertex `pivot` (0..2) of
// the triangle. Returns integral of lambda_k/(4*pi*R) for k = 0,1,2 in the
// triangle's own vertex order.
std::array<double, 3> duffy_single_layer(const Vec3& a, const Vec3& b,
                                         const Vec3& c, int pivot);

}  // namespace hsim

#pragma once

#include <vector>

#include "hsim/bem/surface_mesh.hpp"

namespace hsim {

// Boundary-trace Helmholtz reconstruction u_HD at every vertex, evaluated
// as a one-sided interior limit (small inward offset along the vertex
// normal, analytic kernels near the evaluation point).
std::vector<Vec3> helmholtz_velocity(const SurfaceMesh& mesh);

// Replaces only the normal velocity component with the reconstruction:
// v <- v_t + (u_HD . n) n.
void partial_helmholtz(SurfaceMesh& mesh);

// Replaces the whole vector: v <- u_HD. Comparison mode.
void full_helmholtz(SurfaceMesh& mesh);

}  // namespace hsim

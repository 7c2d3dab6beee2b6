#pragma once

#include "hsim/bem/surface_mesh.hpp"

namespace hsim {

// Edge split / collapse / flip passes restoring the mesh's edge-length
// bounds and improving minimum angles. Labels, velocities and solid
// velocities are carried by interpolation. Fixed topology: no merging,
// no component changes.
void remesh(SurfaceMesh& mesh);

// Broad-phase hashed triangle-triangle intersection test; pairs sharing a
// vertex are skipped.
bool has_self_intersections(const SurfaceMesh& mesh);

// Forward-Euler vertex move, remesh, then the collision and watertightness
// checks. Throws "surface collision: out of supported regime" when moved
// triangles intersect.
void advect_and_remesh(SurfaceMesh& mesh, double dt);

}  // namespace hsim

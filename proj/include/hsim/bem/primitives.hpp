#pragma once

#include "hsim/bem/surface_mesh.hpp"

namespace hsim {

// Unit-topology icosphere at `subdivisions` refinement levels, outward
// oriented, all faces labeled free surface.
SurfaceMesh make_icosphere(const Vec3& center, double radius,
                           int subdivisions);

// Watertight axis-aligned box tessellated at roughly target_edge. The +y
// face is labeled free surface, the rest solid.
SurfaceMesh make_box_mesh(const Box3& box, double target_edge);

// Water body of a vertical cylinder tank: free-surface top disk at y1,
// solid bottom disk at y0 and solid side wall.
SurfaceMesh make_cylinder_tank(double center_x, double center_z, double radius,
                               double y0, double y1, double target_edge);

}  // namespace hsim

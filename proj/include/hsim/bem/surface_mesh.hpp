#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "hsim/grids/level_set.hpp"
#include "hsim/types.hpp"

namespace hsim {

enum class FaceLabel : uint8_t { kFreeSurface = 0, kSolid = 1 };

// Closed oriented triangle mesh carrying the BEM state: per-vertex velocity
// and per-triangle boundary labels. Outward orientation means positive
// signed volume.
struct SurfaceMesh {
  std::vector<Vec3> vertices;
  std::vector<Vec3> velocities;
  std::vector<Vec3i> triangles;
  std::vector<FaceLabel> labels;
  std::vector<Vec3> solid_velocities;  // per triangle; used on kSolid labels
  double min_edge = 0.0;               // remeshing bounds
  double max_edge = 0.0;

  size_t vertex_count() const { return vertices.size(); }
  size_t triangle_count() const { return triangles.size(); }
};

Vec3 triangle_normal(const SurfaceMesh& mesh, int t);  // unit, outward
double triangle_area(const SurfaceMesh& mesh, int t);
Vec3 triangle_centroid(const SurfaceMesh& mesh, int t);

// Area-weighted vertex normals with an angle-weighted fallback when the
// area-weighted sum degenerates.
std::vector<Vec3> vertex_normals(const SurfaceMesh& mesh);

// Divergence-theorem volume; positive for outward orientation.
double mesh_volume(const SurfaceMesh& mesh);

// Every edge shared by exactly two triangles with opposite orientation.
bool is_watertight(const SurfaceMesh& mesh);

// A vertex is free-surface if any incident triangle is; otherwise solid.
std::vector<FaceLabel> vertex_labels(const SurfaceMesh& mesh);

// Mean area-weighted solid velocity of incident solid triangles (zero for
// free-surface-only vertices).
std::vector<Vec3> vertex_solid_velocities(const SurfaceMesh& mesh);

LevelSet levelset_from_mesh(const SurfaceMesh& mesh, double dx,
                            const Vec3& origin, double bandwidth,
                            const Box3& clip_box);

// ASCII OBJ with "# v vx vy vz" velocity comments per vertex and
// "# label FREE|SOLID" comments per triangle.
void write_mesh_obj(std::ostream& os, const SurfaceMesh& mesh);
void write_mesh_obj(const std::string& path, const SurfaceMesh& mesh);
SurfaceMesh read_mesh_obj(std::istream& is);
SurfaceMesh read_mesh_obj_file(const std::string& path);

}  // namespace hsim

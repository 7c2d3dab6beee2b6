#pragma once

#include <iosfwd>
#include <string>

#include "hsim/grids/block_grid.hpp"
#include "hsim/grids/level_set.hpp"

namespace hsim {

// Chunked binary grid format, little-endian:
//   magic "HSGR", version u32, dx f64, origin 3*f64,
//   then per stored block: block index 3*i32, 512*f32 payload.
void write_grid(std::ostream& os, const BlockGrid<double>& grid, double dx,
                const Vec3& origin);

struct LoadedGrid {
  double dx = 0.0;
  Vec3 origin = Vec3::Zero();
  BlockGrid<double> values{0.0};
};

LoadedGrid read_grid(std::istream& is);

void write_grid_file(const std::string& path, const BlockGrid<double>& grid,
                     double dx, const Vec3& origin);
LoadedGrid read_grid_file(const std::string& path);

void write_levelset_file(const std::string& path, const LevelSet& phi);
LevelSet read_levelset_file(const std::string& path);

}  // namespace hsim

#include "hsim/grids/grid_io.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace hsim {

namespace {

template <class T>
void put(std::ostream& os, const T& x) {
  os.write(reinterpret_cast<const char*>(&x), sizeof(T));
}

template <class T>
T take(std::istream& is) {
  T x;
  is.read(reinterpret_cast<char*>(&x), sizeof(T));
  return x;
}

}  // namespace

void write_grid(std::ostream& os, const BlockGrid<double>& grid, double dx,
                const Vec3& origin) {
  os.write("HSGR", 4);
  put<uint32_t>(os, 1u);
  put<double>(os, dx);
  for (int a = 0; a < 3; ++a) put<double>(os, origin[a]);
  for (const auto* blk : grid.sorted_blocks()) {
    Vec3i b = BlockGrid<double>::block_of(blk->base);
    for (int a = 0; a < 3; ++a) put<int32_t>(os, b[a]);
    for (int o = 0; o < BlockGrid<double>::kSize; ++o)
      put<float>(os, static_cast<float>(blk->data[o]));
  }
}

LoadedGrid read_grid(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "HSGR", 4) != 0)
    throw std::runtime_error("not an HSGR grid");
  uint32_t version = take<uint32_t>(is);
  if (version != 1u) throw std::runtime_error("unsupported HSGR version");
  LoadedGrid out;
  out.dx = take<double>(is);
  for (int a = 0; a < 3; ++a) out.origin[a] = take<double>(is);
  while (true) {
    int32_t bx = take<int32_t>(is);
    if (!is) break;
    int32_t by = take<int32_t>(is);
    int32_t bz = take<int32_t>(is);
    auto& blk = out.values.touch_block(Vec3i(bx, by, bz));
    for (int o = 0; o < BlockGrid<double>::kSize; ++o)
      blk.data[o] = static_cast<double>(take<float>(is));
  }
  return out;
}

void write_grid_file(const std::string& path, const BlockGrid<double>& grid,
                     double dx, const Vec3& origin) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path);
  write_grid(os, grid, dx, origin);
}

LoadedGrid read_grid_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  return read_grid(is);
}

void write_levelset_file(const std::string& path, const LevelSet& phi) {
  write_grid_file(path, phi.values(), phi.dx(), phi.origin());
}

LevelSet read_levelset_file(const std::string& path) {
  LoadedGrid g = read_grid_file(path);
  double band = 0.0;
  g.values.for_each_voxel(
      [&](const Vec3i&, double v) { band = std::max(band, std::abs(v)); });
  if (band == 0.0) band = 1.0;
  LevelSet phi(g.dx, g.origin, band);
  phi.values() = std::move(g.values);
  phi.values().set_background(band);
  return phi;
}

}  // namespace hsim

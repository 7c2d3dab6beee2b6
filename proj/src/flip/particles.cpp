#include "hsim/flip/particles.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace hsim {

void ParticleSet::remove_sorted(const std::vector<int64_t>& sorted_indices) {
  if (sorted_indices.empty()) return;
  size_t write = 0, skip = 0;
  for (size_t read = 0; read < positions.size(); ++read) {
    if (skip < sorted_indices.size() &&
        sorted_indices[skip] == static_cast<int64_t>(read)) {
      ++skip;
      continue;
    }
    positions[write] = positions[read];
    velocities[write] = velocities[read];
    ++write;
  }
  positions.resize(write);
  velocities.resize(write);
}

namespace {

void append_double(std::string& out, double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

}  // namespace

void write_particles_ply(std::ostream& os, const ParticleSet& particles) {
  os << "ply\nformat ascii 1.0\nelement vertex " << particles.size()
     << "\nproperty double x\nproperty double y\nproperty double z\n"
        "property double vx\nproperty double vy\nproperty double vz\n"
        "end_header\n";
  std::string line;
  for (size_t i = 0; i < particles.size(); ++i) {
    line.clear();
    const Vec3& p = particles.positions[i];
    const Vec3& v = particles.velocities[i];
    for (int a = 0; a < 3; ++a) {
      append_double(line, p[a]);
      line.push_back(' ');
    }
    for (int a = 0; a < 3; ++a) {
      append_double(line, v[a]);
      line.push_back(a == 2 ? '\n' : ' ');
    }
    os << line;
  }
}

void write_particles_ply(const std::string& path,
                         const ParticleSet& particles) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path);
  write_particles_ply(os, particles);
}

ParticleSet read_particles_ply(std::istream& is) {
  std::string line;
  size_t count = 0;
  bool in_header = true;
  while (in_header && std::getline(is, line)) {
    if (line.rfind("element vertex", 0) == 0)
      count = std::stoul(line.substr(15));
    if (line == "end_header") in_header = false;
  }
  if (in_header) throw std::runtime_error("malformed PLY header");
  ParticleSet out;
  out.positions.reserve(count);
  out.velocities.reserve(count);
  for (size_t i = 0; i < count; ++i) {
    Vec3 p, v;
    if (!(is >> p.x() >> p.y() >> p.z() >> v.x() >> v.y() >> v.z()))
      throw std::runtime_error("truncated PLY body");
    out.append(p, v);
  }
  return out;
}

ParticleSet read_particles_ply_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  return read_particles_ply(is);
}

ParticleBins::ParticleBins(std::span<const Vec3> positions, double dx,
                           const Vec3& origin, const Vec3i& lo,
                           const Vec3i& hi)
    : lo_(lo), hi_(hi) {
  dims_ = hi - lo + Vec3i::Ones();
  int64_t ncells =
      static_cast<int64_t>(dims_.x()) * dims_.y() * dims_.z();
  starts_.assign(ncells + 1, 0);

  std::vector<int64_t> cell_of(positions.size());
  for (size_t i = 0; i < positions.size(); ++i) {
    Vec3i v = floor_vec((positions[i] - origin) / dx);
    bool inside = (v.x() >= lo.x() && v.x() <= hi.x() && v.y() >= lo.y() &&
                   v.y() <= hi.y() && v.z() >= lo.z() && v.z() <= hi.z());
    cell_of[i] = inside ? cell_index(v) : -1;
    if (cell_of[i] >= 0) starts_[cell_of[i] + 1]++;
  }
  for (int64_t c = 0; c < ncells; ++c) starts_[c + 1] += starts_[c];
  indices_.resize(starts_[ncells]);
  std::vector<int64_t> cursor(starts_.begin(), starts_.end() - 1);
  for (size_t i = 0; i < positions.size(); ++i) {
    if (cell_of[i] >= 0) indices_[cursor[cell_of[i]]++] = i;
  }
}

int64_t ParticleBins::cell_index(const Vec3i& v) const {
  Vec3i r = v - lo_;
  return r.x() +
         static_cast<int64_t>(dims_.x()) * (r.y() + static_cast<int64_t>(dims_.y()) * r.z());
}

std::span<const int64_t> ParticleBins::cell(const Vec3i& v) const {
  if (v.x() < lo_.x() || v.x() > hi_.x() || v.y() < lo_.y() ||
      v.y() > hi_.y() || v.z() < lo_.z() || v.z() > hi_.z())
    return {};
  int64_t c = cell_index(v);
  return std::span<const int64_t>(indices_.data() + starts_[c],
                                  starts_[c + 1] - starts_[c]);
}

}  // namespace hsim

#include "hsim/bem/surface_mesh.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace hsim {

Vec3 triangle_normal(const SurfaceMesh& mesh, int t) {
  const Vec3i& tri = mesh.triangles[t];
  Vec3 n = (mesh.vertices[tri[1]] - mesh.vertices[tri[0]])
               .cross(mesh.vertices[tri[2]] - mesh.vertices[tri[0]]);
  double len = n.norm();
  return len > 0.0 ? Vec3(n / len) : Vec3::Zero();
}

double triangle_area(const SurfaceMesh& mesh, int t) {
  const Vec3i& tri = mesh.triangles[t];
  return 0.5 * (mesh.vertices[tri[1]] - mesh.vertices[tri[0]])
                   .cross(mesh.vertices[tri[2]] - mesh.vertices[tri[0]])
                   .norm();
}

Vec3 triangle_centroid(const SurfaceMesh& mesh, int t) {
  const Vec3i& tri = mesh.triangles[t];
  return (mesh.vertices[tri[0]] + mesh.vertices[tri[1]] +
          mesh.vertices[tri[2]]) /
         3.0;
}

std::vector<Vec3> vertex_normals(const SurfaceMesh& mesh) {
  std::vector<Vec3> normals(mesh.vertex_count(), Vec3::Zero());
  for (size_t t = 0; t < mesh.triangle_count(); ++t) {
    const Vec3i& tri = mesh.triangles[t];
    Vec3 n = (mesh.vertices[tri[1]] - mesh.vertices[tri[0]])
                 .cross(mesh.vertices[tri[2]] - mesh.vertices[tri[0]]);
    for (int k = 0; k < 3; ++k) normals[tri[k]] += 0.5 * n;  // area weighted
  }
  for (size_t v = 0; v < normals.size(); ++v) {
    double len = normals[v].norm();
    if (len > 1e-14) {
      normals[v] /= len;
    } else {
      normals[v] = Vec3::Zero();
    }
  }
  // Angle-weighted fallback for degenerate accumulations.
  for (size_t t = 0; t < mesh.triangle_count(); ++t) {
    const Vec3i& tri = mesh.triangles[t];
    for (int k = 0; k < 3; ++k) {
      int v = tri[k];
      if (normals[v].squaredNorm() > 0.25) continue;
      Vec3 e1 = (mesh.vertices[tri[(k + 1) % 3]] - mesh.vertices[v]);
      Vec3 e2 = (mesh.vertices[tri[(k + 2) % 3]] - mesh.vertices[v]);
      double angle = std::atan2(e1.cross(e2).norm(), e1.dot(e2));
      normals[v] += angle * triangle_normal(mesh, static_cast<int>(t));
    }
  }
  for (Vec3& n : normals) {
    double len = n.norm();
    if (len > 1e-14) n /= len;
  }
  return normals;
}

double mesh_volume(const SurfaceMesh& mesh) {
  double v6 = 0.0;
  for (const Vec3i& tri : mesh.triangles) {
    const Vec3& a = mesh.vertices[tri[0]];
    const Vec3& b = mesh.vertices[tri[1]];
    const Vec3& c = mesh.vertices[tri[2]];
    v6 += a.dot(b.cross(c));
  }
  return v6 / 6.0;
}

bool is_watertight(const SurfaceMesh& mesh) {
  std::unordered_map<int64_t, int> edges;
  auto key = [](int a, int b) {
    return (static_cast<int64_t>(a) << 32) | static_cast<uint32_t>(b);
  };
  for (const Vec3i& tri : mesh.triangles)
    for (int e = 0; e < 3; ++e) {
      if (++edges[key(tri[e], tri[(e + 1) % 3])] > 1) return false;
    }
  for (const auto& [k, count] : edges) {
    int a = static_cast<int>(k >> 32);
    int b = static_cast<int>(k & 0xffffffff);
    if (edges.find(key(b, a)) == edges.end()) return false;
  }
  return true;
}

std::vector<FaceLabel> vertex_labels(const SurfaceMesh& mesh) {
  std::vector<FaceLabel> out(mesh.vertex_count(), FaceLabel::kSolid);
  for (size_t t = 0; t < mesh.triangle_count(); ++t) {
    if (mesh.labels[t] != FaceLabel::kFreeSurface) continue;
    for (int k = 0; k < 3; ++k)
      out[mesh.triangles[t][k]] = FaceLabel::kFreeSurface;
  }
  return out;
}

std::vector<Vec3> vertex_solid_velocities(const SurfaceMesh& mesh) {
  std::vector<Vec3> out(mesh.vertex_count(), Vec3::Zero());
  std::vector<double> weight(mesh.vertex_count(), 0.0);
  for (size_t t = 0; t < mesh.triangle_count(); ++t) {
    if (mesh.labels[t] != FaceLabel::kSolid) continue;
    double a = triangle_area(mesh, static_cast<int>(t));
    for (int k = 0; k < 3; ++k) {
      out[mesh.triangles[t][k]] += a * mesh.solid_velocities[t];
      weight[mesh.triangles[t][k]] += a;
    }
  }
  for (size_t v = 0; v < out.size(); ++v)
    if (weight[v] > 0.0) out[v] /= weight[v];
  return out;
}

LevelSet levelset_from_mesh(const SurfaceMesh& mesh, double dx,
                            const Vec3& origin, double bandwidth,
                            const Box3& clip_box) {
  return levelset_from_mesh(
      std::span<const Vec3>(mesh.vertices),
      std::span<const Vec3i>(mesh.triangles), dx, origin, bandwidth, clip_box);
}

namespace {

void append_double(std::string& out, double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

}  // namespace

void write_mesh_obj(std::ostream& os, const SurfaceMesh& mesh) {
  std::string line;
  for (size_t v = 0; v < mesh.vertex_count(); ++v) {
    line = "v";
    for (int a = 0; a < 3; ++a) {
      line.push_back(' ');
      append_double(line, mesh.vertices[v][a]);
    }
    line += "\n# v";
    for (int a = 0; a < 3; ++a) {
      line.push_back(' ');
      append_double(line, mesh.velocities[v][a]);
    }
    line.push_back('\n');
    os << line;
  }
  for (size_t t = 0; t < mesh.triangle_count(); ++t) {
    const Vec3i& tri = mesh.triangles[t];
    os << "f " << tri[0] + 1 << ' ' << tri[1] + 1 << ' ' << tri[2] + 1
       << "\n# label "
       << (mesh.labels[t] == FaceLabel::kFreeSurface ? "FREE" : "SOLID")
       << '\n';
  }
}

void write_mesh_obj(const std::string& path, const SurfaceMesh& mesh) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path);
  write_mesh_obj(os, mesh);
}

SurfaceMesh read_mesh_obj(std::istream& is) {
  SurfaceMesh mesh;
  std::string line;
  while (std::getline(is, line)) {
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag == "v") {
      Vec3 p;
      ss >> p.x() >> p.y() >> p.z();
      mesh.vertices.push_back(p);
      mesh.velocities.push_back(Vec3::Zero());
    } else if (tag == "f") {
      Vec3i t;
      ss >> t[0] >> t[1] >> t[2];
      mesh.triangles.push_back(t - Vec3i::Ones());
      mesh.labels.push_back(FaceLabel::kFreeSurface);
      mesh.solid_velocities.push_back(Vec3::Zero());
    } else if (tag == "#") {
      std::string sub;
      ss >> sub;
      if (sub == "v" && !mesh.velocities.empty()) {
        Vec3 vel;
        ss >> vel.x() >> vel.y() >> vel.z();
        mesh.velocities.back() = vel;
      } else if (sub == "label" && !mesh.labels.empty()) {
        std::string label;
        ss >> label;
        mesh.labels.back() =
            label == "SOLID" ? FaceLabel::kSolid : FaceLabel::kFreeSurface;
      }
    }
  }
  return mesh;
}

SurfaceMesh read_mesh_obj_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  return read_mesh_obj(is);
}

}  // namespace hsim

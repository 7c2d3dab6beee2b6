#include "hsim/grids/level_set.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "hsim/parallel.hpp"

namespace hsim {

double LevelSet::sample(const Vec3& p) const {
  Vec3 q = (p - origin_) / dx_ - Vec3::Constant(0.5);
  Vec3i base = floor_vec(q);
  Vec3 f = q - base.cast<double>();
  auto acc = values_.accessor();
  double result = 0.0;
  for (int c = 0; c < 8; ++c) {
    Vec3i off(c & 1, (c >> 1) & 1, (c >> 2) & 1);
    double w = (off.x() ? f.x() : 1.0 - f.x()) *
               (off.y() ? f.y() : 1.0 - f.y()) *
               (off.z() ? f.z() : 1.0 - f.z());
    result += w * acc.get(base + off);
  }
  return result;
}

Vec3 LevelSet::gradient(const Vec3& p) const {
  double h = 0.5 * dx_;
  Vec3 g;
  for (int a = 0; a < 3; ++a) {
    Vec3 e = Vec3::Zero();
    e[a] = h;
    g[a] = (sample(p + e) - sample(p - e)) / (2.0 * h);
  }
  return g;
}

namespace {

struct VoxelRec {
  Vec3i v;
  double phi;
  bool frozen;
};

// Eikonal quadratic update from per-axis upwind distances (unsigned).
double eikonal_solve(double a, double b, double c, double h) {
  double d[3] = {a, b, c};
  std::sort(d, d + 3);
  double x = d[0] + h;
  if (x <= d[1]) return x;
  // two-term quadratic
  double sum = d[0] + d[1];
  double disc = sum * sum - 2.0 * (d[0] * d[0] + d[1] * d[1] - h * h);
  if (disc >= 0.0) {
    x = 0.5 * (sum + std::sqrt(disc));
    if (x <= d[2]) return x;
  }
  sum = d[0] + d[1] + d[2];
  disc = sum * sum - 3.0 * (d[0] * d[0] + d[1] * d[1] + d[2] * d[2] - h * h);
  if (disc < 0.0) disc = 0.0;
  return (sum + std::sqrt(disc)) / 3.0;
}

}  // namespace

void LevelSet::reinitialize(double new_bandwidth) {
  if (values_.empty()) {
    set_bandwidth(new_bandwidth);
    return;
  }
  const double h = dx_;
  const double band = new_bandwidth;
  const int ext_layers = static_cast<int>(std::ceil(band / h)) + 1;

  // Snapshot stored voxels in deterministic order.
  std::vector<Vec3i> voxels;
  std::vector<double> vals;
  values_.for_each_voxel([&](const Vec3i& v, double phi) {
    voxels.push_back(v);
    vals.push_back(phi);
  });

  std::unordered_map<int64_t, int> index;
  index.reserve(voxels.size() * 2);
  for (size_t i = 0; i < voxels.size(); ++i)
    index.emplace(pack_coords(voxels[i]), static_cast<int>(i));

  auto sign_of = [](double x) { return x < 0.0 ? -1.0 : 1.0; };

  static const Vec3i kNeighbors[6] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0},
                                      {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};

  // Freeze voxels adjacent to a sign change; their values carry the
  // interface position through the rebuild. Producers are expected to
  // supply true distances in the one-voxel interface shell, so a genuine
  // interface voxel has a small magnitude; sign flips against band-clamped
  // values are storage artifacts, not interfaces.
  const double interface_limit = std::min(2.5 * h, 0.99 * band);
  std::vector<char> frozen(voxels.size(), 0);
  std::vector<char> interface_flag(voxels.size(), 0);
  for (size_t i = 0; i < voxels.size(); ++i) {
    if (std::abs(vals[i]) >= interface_limit) continue;
    double s = sign_of(vals[i]);
    for (const Vec3i& n : kNeighbors) {
      auto it = index.find(pack_coords(voxels[i] + n));
      if (it != index.end() && sign_of(vals[it->second]) != s) {
        frozen[i] = 1;
        interface_flag[i] = 1;
        break;
      }
    }
  }

  // Extend the band outward from the interface, carrying the sign of the
  // parent voxel. Also continue sign propagation through any remaining
  // stored voxels so allocated-but-unstamped voxels deep inside keep the
  // correct sign.
  std::deque<int> frontier;
  std::vector<int> layer(voxels.size(), -1);
  for (size_t i = 0; i < voxels.size(); ++i)
    if (interface_flag[i]) {
      layer[i] = 0;
      frontier.push_back(static_cast<int>(i));
    }
  if (frontier.empty()) {
    // No interface at all: uniform sign; just clamp.
    for (size_t i = 0; i < voxels.size(); ++i)
      vals[i] = sign_of(vals[i]) * band;
  } else {
    std::vector<char> assigned(voxels.size(), 0);
    for (size_t i = 0; i < voxels.size(); ++i) assigned[i] = interface_flag[i];
    while (!frontier.empty()) {
      int cur = frontier.front();
      frontier.pop_front();
      int next_layer = layer[cur] + 1;
      double s = sign_of(vals[cur]);
      for (const Vec3i& n : kNeighbors) {
        Vec3i nb = voxels[cur] + n;
        auto it = index.find(pack_coords(nb));
        int ni;
        if (it == index.end()) {
          if (next_layer > ext_layers) continue;
          ni = static_cast<int>(voxels.size());
          voxels.push_back(nb);
          vals.push_back(s * band);
          frozen.push_back(0);
          interface_flag.push_back(0);
          layer.push_back(next_layer);
          assigned.push_back(1);
          index.emplace(pack_coords(nb), ni);
          frontier.push_back(ni);
          continue;
        }
        ni = it->second;
        if (!assigned[ni]) {
          assigned[ni] = 1;
          layer[ni] = next_layer;
          vals[ni] = s * std::min(band, std::abs(vals[ni]));
          frontier.push_back(ni);
        }
      }
    }
    // Unreached stored voxels (isolated islands): clamp only.
    for (size_t i = 0; i < voxels.size(); ++i)
      if (!assigned[i]) vals[i] = sign_of(vals[i]) * band;
  }

  // Initialize non-frozen magnitudes to the band and sweep.
  for (size_t i = 0; i < voxels.size(); ++i)
    if (!frozen[i]) vals[i] = sign_of(vals[i]) * band;

  const size_t n = voxels.size();
  std::vector<int> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = static_cast<int>(i);

  // Four lexicographic permutations serve all 8 sweep orderings
  // (each is traversed forward and backward).
  auto make_order = [&](int sy, int sz) {
    std::vector<int> ord = order;
    std::sort(ord.begin(), ord.end(), [&](int a, int b) {
      const Vec3i& va = voxels[a];
      const Vec3i& vb = voxels[b];
      if (va.x() != vb.x()) return va.x() < vb.x();
      if (va.y() != vb.y()) return sy * va.y() < sy * vb.y();
      return sz * va.z() < sz * vb.z();
    });
    return ord;
  };
  std::vector<std::vector<int>> orders;
  orders.push_back(make_order(1, 1));
  orders.push_back(make_order(1, -1));
  orders.push_back(make_order(-1, 1));
  orders.push_back(make_order(-1, -1));

  auto axis_min = [&](const Vec3i& v, int axis) {
    double best = band;
    for (int s = -1; s <= 1; s += 2) {
      Vec3i nb = v;
      nb[axis] += s;
      auto it = index.find(pack_coords(nb));
      if (it != index.end()) best = std::min(best, std::abs(vals[it->second]));
    }
    return best;
  };

  auto sweep = [&](const std::vector<int>& ord, bool forward) {
    for (size_t k = 0; k < ord.size(); ++k) {
      int i = ord[forward ? k : ord.size() - 1 - k];
      if (frozen[i]) continue;
      double a = axis_min(voxels[i], 0);
      double b = axis_min(voxels[i], 1);
      double c = axis_min(voxels[i], 2);
      double d = std::min(band, eikonal_solve(a, b, c, h));
      double s = sign_of(vals[i]);
      if (d < std::abs(vals[i])) vals[i] = s * d;
    }
  };
  for (const auto& ord : orders) {
    sweep(ord, true);
    sweep(ord, false);
  }

  // Write back, dropping voxels pinned at the far band value but keeping
  // block granularity simple: rebuild the grid from scratch.
  BlockGrid<double> fresh(band);
  for (size_t i = 0; i < n; ++i) {
    double clamped = std::clamp(vals[i], -band, band);
    fresh.at(voxels[i]) = clamped;
  }
  values_ = std::move(fresh);
  bandwidth_ = band;
}

LevelSet gaussian_smooth(const LevelSet& phi, int passes) {
  if (passes <= 0) return phi;
  LevelSet work = phi;
  double needed = (passes + 2) * phi.dx();
  work.reinitialize(std::max(phi.bandwidth(), needed));

  // Separable 1/4,1/2,1/4 binomial passes per axis.
  for (int pass = 0; pass < passes; ++pass) {
    for (int axis = 0; axis < 3; ++axis) {
      BlockGrid<double> next(work.bandwidth());
      auto acc = work.values().accessor();
      Vec3i e = Vec3i::Zero();
      e[axis] = 1;
      auto blocks = work.values().sorted_blocks();
      for (const auto* blk : blocks) {
        for (int o = 0; o < BlockGrid<double>::kSize; ++o) {
          Vec3i v = blk->base + Vec3i(o & 7, (o >> 3) & 7, o >> 6);
          double c = blk->data[o];
          double lo = acc.get(v - e);
          double hi = acc.get(v + e);
          next.at(v) = 0.25 * lo + 0.5 * c + 0.25 * hi;
        }
      }
      work.values() = std::move(next);
    }
  }
  work.reinitialize(work.bandwidth());
  return work;
}

// ---------------------------------------------------------------------------
// Mesh to level set
// ---------------------------------------------------------------------------

double point_triangle_distance(const Vec3& p, const Vec3& a, const Vec3& b,
                               const Vec3& c) {
  // Ericson-style closest point on triangle.
  Vec3 ab = b - a, ac = c - a, ap = p - a;
  double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return (p - a).norm();
  Vec3 bp = p - b;
  double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return (p - b).norm();
  double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
    double t = d1 / (d1 - d3);
    return (p - (a + t * ab)).norm();
  }
  Vec3 cp = p - c;
  double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return (p - c).norm();
  double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
    double t = d2 / (d2 - d6);
    return (p - (a + t * ac)).norm();
  }
  double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    double t = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return (p - (b + t * (c - b))).norm();
  }
  double denom = 1.0 / (va + vb + vc);
  double v = vb * denom, w = vc * denom;
  return (p - (a + ab * v + ac * w)).norm();
}

namespace {

// Signed crossing of a vertical (+y) ray with a triangle. Returns 0 for a
// miss, +1/-1 for a crossing counted by normal orientation, and records the
// intersection height.
int ray_up_crossing(const Vec3& o, const Vec3& a, const Vec3& b, const Vec3& c,
                    double* y_hit) {
  // Project onto xz; 2D point-in-triangle with consistent edge tests.
  double ax = a.x() - o.x(), az = a.z() - o.z();
  double bx = b.x() - o.x(), bz = b.z() - o.z();
  double cx = c.x() - o.x(), cz = c.z() - o.z();
  double e0 = bx * cz - cx * bz;
  double e1 = cx * az - ax * cz;
  double e2 = ax * bz - bx * az;
  double area = e0 + e1 + e2;
  if (area == 0.0) return 0;
  if (area < 0.0) {
    e0 = -e0;
    e1 = -e1;
    e2 = -e2;
  }
  if (e0 < 0.0 || e1 < 0.0 || e2 < 0.0) return 0;
  double denom = e0 + e1 + e2;
  double y = (e0 * a.y() + e1 * b.y() + e2 * c.y()) / denom;
  if (y <= o.y()) return 0;
  *y_hit = y;
  // Orientation of the triangle as seen from below (+y ray).
  Vec3 n = (b - a).cross(c - a);
  if (n.y() > 0.0) return 1;
  if (n.y() < 0.0) return -1;
  return 0;
}

}  // namespace

LevelSet levelset_from_mesh(std::span<const Vec3> vertices,
                            std::span<const Vec3i> triangles, double dx,
                            const Vec3& origin, double bandwidth,
                            const Box3& clip_box) {
  // Watertightness: every directed edge must have exactly one opposite.
  {
    std::unordered_map<int64_t, int> edge_use;
    auto ekey = [](int u, int v) {
      return (static_cast<int64_t>(u) << 32) | static_cast<uint32_t>(v);
    };
    for (const Vec3i& t : triangles) {
      for (int e = 0; e < 3; ++e) {
        int u = t[e], v = t[(e + 1) % 3];
        edge_use[ekey(u, v)] += 1;
      }
    }
    for (const auto& [key, count] : edge_use) {
      int u = static_cast<int>(key >> 32);
      int v = static_cast<int>(key & 0xffffffff);
      if (count != 1 || edge_use.find(ekey(v, u)) == edge_use.end())
        throw std::runtime_error("open surface");
    }
  }

  LevelSet phi(dx, origin, bandwidth);
  Vec3i lo = phi.voxel_of(clip_box.lo);
  Vec3i hi = phi.voxel_of(clip_box.hi);

  // Unsigned narrow-band distances stamped per triangle.
  const int pad = static_cast<int>(std::ceil(bandwidth / dx)) + 1;
  BlockGrid<double> dist(bandwidth);
  for (const Vec3i& t : triangles) {
    const Vec3 &a = vertices[t[0]], &b = vertices[t[1]], &c = vertices[t[2]];
    Vec3 tlo = a.cwiseMin(b).cwiseMin(c);
    Vec3 thi = a.cwiseMax(b).cwiseMax(c);
    Vec3i vlo = phi.voxel_of(tlo) - Vec3i::Constant(pad);
    Vec3i vhi = phi.voxel_of(thi) + Vec3i::Constant(pad);
    vlo = vlo.cwiseMax(lo);
    vhi = vhi.cwiseMin(hi);
    for (int k = vlo.z(); k <= vhi.z(); ++k)
      for (int j = vlo.y(); j <= vhi.y(); ++j)
        for (int i = vlo.x(); i <= vhi.x(); ++i) {
          Vec3i v(i, j, k);
          double d = point_triangle_distance(phi.voxel_center(v), a, b, c);
          if (d < bandwidth) {
            double& cell = dist.at(v);
            cell = std::min(cell, d);
          }
        }
  }

  // Sign per vertical column from signed ray crossings: the crossing sum
  // above a point equals the winding number of the column line there.
  struct Crossing {
    double y;
    int sign;
  };
  std::unordered_map<int64_t, std::vector<Crossing>> columns;
  auto col_key = [](int i, int k) {
    return (static_cast<int64_t>(i + (1 << 20)) << 24) |
           static_cast<int64_t>(k + (1 << 20));
  };
  for (int k = lo.z(); k <= hi.z(); ++k)
    for (int i = lo.x(); i <= hi.x(); ++i)
      columns.emplace(col_key(i, k), std::vector<Crossing>{});
  double ray_y0 = clip_box.lo.y() - 10.0 * dx;
  for (const Vec3i& t : triangles) {
    const Vec3 &a = vertices[t[0]], &b = vertices[t[1]], &c = vertices[t[2]];
    double xmin = std::min({a.x(), b.x(), c.x()});
    double xmax = std::max({a.x(), b.x(), c.x()});
    double zmin = std::min({a.z(), b.z(), c.z()});
    double zmax = std::max({a.z(), b.z(), c.z()});
    Vec3i clo = phi.voxel_of(Vec3(xmin, 0, zmin));
    Vec3i chi = phi.voxel_of(Vec3(xmax, 0, zmax));
    for (int k = std::max(clo.z(), lo.z()); k <= std::min(chi.z(), hi.z());
         ++k)
      for (int i = std::max(clo.x(), lo.x()); i <= std::min(chi.x(), hi.x());
           ++i) {
        Vec3 o = phi.voxel_center(Vec3i(i, 0, k));
        // Tiny fixed offset keeps rays off mesh edges and vertices.
        o.x() += 7.3e-8 * dx;
        o.z() += 3.1e-8 * dx;
        o.y() = ray_y0;
        double y_hit;
        int s = ray_up_crossing(o, a, b, c, &y_hit);
        if (s != 0) columns[col_key(i, k)].push_back({y_hit, s});
      }
  }
  for (auto& [key, v] : columns)
    std::sort(v.begin(), v.end(),
              [](const Crossing& a, const Crossing& b) { return a.y < b.y; });

  // Fill every voxel in the clip box with sign * min(dist, bandwidth).
  auto dist_acc = dist.accessor();
  for (int k = lo.z(); k <= hi.z(); ++k)
    for (int i = lo.x(); i <= hi.x(); ++i) {
      const auto& cross = columns[col_key(i, k)];
      for (int j = lo.y(); j <= hi.y(); ++j) {
        Vec3i v(i, j, k);
        double y = phi.voxel_center(v).y();
        int winding = 0;
        for (const Crossing& c : cross)
          if (c.y > y) winding += c.sign;
        double d = std::min(dist_acc.get(v), bandwidth);
        phi.values().at(v) = (winding != 0) ? -d : d;
      }
    }
  return phi;
}

}  // namespace hsim

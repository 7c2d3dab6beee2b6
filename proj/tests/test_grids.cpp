#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "hsim/bem/primitives.hpp"
#include "hsim/flip/transfer.hpp"
#include "hsim/grids/grid_io.hpp"
#include "hsim/grids/level_set.hpp"
#include "hsim/grids/mac_grid.hpp"

using namespace hsim;

namespace {

MacVelocityGrid uniform_grid(double dx, const Vec3& u, int n) {
  MacVelocityGrid grid(dx, Vec3::Zero());
  for (int axis = 0; axis < 3; ++axis)
    for (int k = 0; k < n; ++k)
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n + 1; ++i) {
          Vec3i f = axis == 0 ? Vec3i(i, j, k)
                              : (axis == 1 ? Vec3i(j, i, k) : Vec3i(j, k, i));
          grid.face(axis).value.at(f) = u[axis];
          grid.face(axis).valid.at(f) = 1;
        }
  return grid;
}

}  // namespace

TEST_CASE("trilinear sampling reproduces a constant field") {
  MacVelocityGrid grid = uniform_grid(0.1, Vec3(1, 0, 0), 8);
  for (Vec3 x : {Vec3(0.35, 0.41, 0.37), Vec3(0.4, 0.4, 0.4),
                 Vec3(0.21, 0.53, 0.61)}) {
    Vec3 u = sample_trilinear(grid, x);
    CHECK(u.x() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(u.y() == 0.0);
    CHECK(u.z() == 0.0);
  }
}

TEST_CASE("trilinear sampling is the identity at a face center") {
  MacVelocityGrid grid(0.1, Vec3::Zero());
  grid.face(0).value.at(Vec3i(3, 4, 5)) = 2.5;
  grid.face(0).valid.at(Vec3i(3, 4, 5)) = 1;
  Vec3 center = grid.face_center(0, Vec3i(3, 4, 5));
  CHECK(grid.sample_component(0, center) == doctest::Approx(2.5).epsilon(1e-14));
}

TEST_CASE("trilinear sampling reproduces affine fields exactly") {
  // Oracle: direct evaluation of u(x) = a . x + b per component.
  const double dx = 0.05;
  MacVelocityGrid grid(dx, Vec3::Zero());
  Vec3 coeff[3] = {Vec3(0.3, -0.2, 0.9), Vec3(1.1, 0.4, -0.5),
                   Vec3(-0.7, 0.8, 0.25)};
  double offset[3] = {0.2, -0.4, 1.3};
  const int n = 10;
  for (int axis = 0; axis < 3; ++axis)
    for (int k = 0; k < n; ++k)
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
          Vec3i f(i, j, k);
          grid.face(axis).value.at(f) =
              coeff[axis].dot(grid.face_center(axis, f)) + offset[axis];
          grid.face(axis).valid.at(f) = 1;
        }
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> in(2.0 * dx, (n - 3) * dx);
  for (int trial = 0; trial < 50; ++trial) {
    Vec3 x(in(rng), in(rng), in(rng));
    Vec3 u = grid.sample(x);
    for (int axis = 0; axis < 3; ++axis) {
      double expect = coeff[axis].dot(x) + offset[axis];
      CHECK(u[axis] == doctest::Approx(expect).epsilon(1e-12));
    }
  }
}

TEST_CASE("particle level set: single ball") {
  const double dx = 0.01;
  // A voxel center lands exactly on the origin.
  Vec3 origin = Vec3::Constant(-0.5 * dx) - Vec3::Constant(5 * dx);
  ParticleSet p;
  p.append(Vec3::Zero(), Vec3::Zero());
  double r = default_particle_radius(dx);
  CHECK(r == doctest::Approx(1.01 * 0.5 * std::sqrt(3.0) * dx));
  CHECK(r == doctest::Approx(0.008747).epsilon(1e-3));
  LevelSet phi = rebuild_levelset_from_particles(p, dx, r, origin, 4 * dx);
  CHECK(phi.sample(Vec3::Zero()) == doctest::Approx(-r).epsilon(1e-9));
}

TEST_CASE("particle level set: two balls match brute-force min") {
  const double dx = 0.01;
  Vec3 origin = Vec3::Constant(-0.2);
  double r = default_particle_radius(dx);
  Vec3 a(0.0, 0.0, 0.0), b(dx, 0.0, 0.0);
  ParticleSet p;
  p.append(a, Vec3::Zero());
  p.append(b, Vec3::Zero());
  LevelSet phi = rebuild_levelset_from_particles(p, dx, r, origin, 4 * dx);
  for (int s = 0; s <= 10; ++s) {
    Vec3 x = a + (b - a) * (s / 10.0);
    double oracle = std::min((x - a).norm(), (x - b).norm()) - r;
    // Compare at the voxel center nearest x inside the exact-capture zone.
    Vec3i v = phi.voxel_of(x);
    Vec3 c = phi.voxel_center(v);
    double oracle_c = std::min((c - a).norm(), (c - b).norm()) - r;
    CHECK(phi.at(v) == doctest::Approx(oracle_c).epsilon(1e-12));
    (void)oracle;
  }
}

TEST_CASE("particle level set is particle-order invariant (bitwise)") {
  const double dx = 0.02;
  double r = default_particle_radius(dx);
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(0.0, 0.3);
  ParticleSet p;
  for (int i = 0; i < 200; ++i)
    p.append(Vec3(u(rng), u(rng), u(rng)), Vec3::Zero());
  ParticleSet q = p;
  std::reverse(q.positions.begin(), q.positions.end());
  LevelSet a = rebuild_levelset_from_particles(p, dx, r, Vec3::Zero(), 4 * dx);
  LevelSet b = rebuild_levelset_from_particles(q, dx, r, Vec3::Zero(), 4 * dx);
  bool identical = true;
  a.values().for_each_voxel([&](const Vec3i& v, double phi) {
    if (b.at(v) != phi) identical = false;
  });
  CHECK(identical);
}

TEST_CASE("reinitialization restores the eikonal property") {
  const double dx = 0.02;
  LevelSet phi(dx, Vec3::Zero(), 6 * dx);
  // A sphere whose values away from the interface are clamped flat, as a
  // narrow-band producer would leave them.
  Vec3 c(0.3, 0.3, 0.3);
  for (int k = 0; k < 30; ++k)
    for (int j = 0; j < 30; ++j)
      for (int i = 0; i < 30; ++i) {
        Vec3i v(i, j, k);
        double d = (phi.voxel_center(v) - c).norm() - 0.15;
        if (std::abs(d) < 1.5 * dx)
          phi.set(v, d);
        else if (std::abs(d) < 5 * dx)
          phi.set(v, d < 0 ? -6 * dx : 6 * dx);
      }
  phi.reinitialize();
  int checked = 0;
  phi.values().for_each_voxel([&](const Vec3i& v, double value) {
    if (std::abs(value) > phi.bandwidth() - 1.5 * dx) return;
    double gx = (phi.at(v + Vec3i(1, 0, 0)) - phi.at(v - Vec3i(1, 0, 0)));
    double gy = (phi.at(v + Vec3i(0, 1, 0)) - phi.at(v - Vec3i(0, 1, 0)));
    double gz = (phi.at(v + Vec3i(0, 0, 1)) - phi.at(v - Vec3i(0, 0, 1)));
    double g = std::sqrt(gx * gx + gy * gy + gz * gz) / (2.0 * dx);
    CHECK(g >= 0.8);
    CHECK(g <= 1.2);
    ++checked;
  });
  CHECK(checked > 500);
}

TEST_CASE("gaussian smoothing: zero passes is the identity") {
  const double dx = 0.02;
  LevelSet phi(dx, Vec3::Zero(), 4 * dx);
  phi.set(Vec3i(1, 2, 3), -0.013);
  phi.set(Vec3i(1, 2, 4), 0.004);
  LevelSet out = gaussian_smooth(phi, 0);
  bool identical = true;
  phi.values().for_each_voxel([&](const Vec3i& v, double value) {
    if (out.at(v) != value) identical = false;
  });
  CHECK(identical);
}

TEST_CASE("gaussian smoothing leaves a flat interface in place") {
  const double dx = 0.01;
  LevelSet phi(dx, Vec3::Zero(), 6 * dx);
  double plane_y = 0.1550;
  for (int k = 0; k < 24; ++k)
    for (int j = 0; j < 40; ++j)
      for (int i = 0; i < 24; ++i) {
        Vec3i v(i, j, k);
        double d = phi.voxel_center(v).y() - plane_y;
        if (std::abs(d) < 5.5 * dx) phi.set(v, d);
      }
  LevelSet smooth = gaussian_smooth(phi, 3);
  // Find the zero crossing along a center column.
  for (double x : {0.06, 0.12}) {
    double lo = plane_y - 3 * dx, hi = plane_y + 3 * dx;
    for (int iter = 0; iter < 40; ++iter) {
      double mid = 0.5 * (lo + hi);
      (smooth.sample(Vec3(x, mid, 0.1)) < 0 ? lo : hi) = mid;
    }
    CHECK(std::abs(0.5 * (lo + hi) - plane_y) < 0.05 * dx);
  }
}

TEST_CASE("gaussian smoothing of a sphere matches a dense convolution") {
  // Oracle: dense-array separable binomial convolution of the same sphere,
  // measuring the smoothed radius along +x by linear interpolation.
  const double dx = 0.01;
  const double radius = 10 * dx;
  const Vec3 center(0.2, 0.2, 0.2);
  const int n = 40;
  const int passes = 3;

  LevelSet phi(dx, Vec3::Zero(), (passes + 3) * dx);
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        Vec3i v(i, j, k);
        double d = (phi.voxel_center(v) - center).norm() - radius;
        if (std::abs(d) < phi.bandwidth()) phi.set(v, d);
      }
  LevelSet smooth = gaussian_smooth(phi, passes);

  // Dense oracle on the full cube (no band restriction).
  std::vector<double> dense(n * n * n), tmp(n * n * n);
  auto at = [&](std::vector<double>& a, int i, int j, int k) -> double& {
    return a[(k * n + j) * n + i];
  };
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
        at(dense, i, j, k) =
            (Vec3((i + 0.5) * dx, (j + 0.5) * dx, (k + 0.5) * dx) - center)
                .norm() -
            radius;
  auto clampi = [&](int i) { return std::min(n - 1, std::max(0, i)); };
  for (int pass = 0; pass < passes; ++pass)
    for (int axis = 0; axis < 3; ++axis) {
      for (int k = 0; k < n; ++k)
        for (int j = 0; j < n; ++j)
          for (int i = 0; i < n; ++i) {
            auto fetch = [&](int s) {
              int ii = i, jj = j, kk = k;
              if (axis == 0) ii = clampi(i + s);
              if (axis == 1) jj = clampi(j + s);
              if (axis == 2) kk = clampi(k + s);
              return at(dense, ii, jj, kk);
            };
            at(tmp, i, j, k) =
                0.25 * fetch(-1) + 0.5 * fetch(0) + 0.25 * fetch(1);
          }
      std::swap(dense, tmp);
    }

  auto radius_along_x = [&](auto sample) {
    double lo = 5 * dx, hi = radius + 5 * dx;
    for (int iter = 0; iter < 50; ++iter) {
      double mid = 0.5 * (lo + hi);
      (sample(mid) < 0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  };
  double r_sparse = radius_along_x(
      [&](double r) { return smooth.sample(center + Vec3(r, 0, 0)); });
  double r_dense = radius_along_x([&](double r) {
    // Trilinear on the dense array along +x from the center.
    Vec3 p = center + Vec3(r, 0, 0);
    double q = p.x() / dx - 0.5;
    int i0 = static_cast<int>(std::floor(q));
    double f = q - i0;
    int j = static_cast<int>(std::floor(p.y() / dx - 0.5));
    int k = static_cast<int>(std::floor(p.z() / dx - 0.5));
    double fy = p.y() / dx - 0.5 - j, fz = p.z() / dx - 0.5 - k;
    double acc = 0;
    for (int c = 0; c < 8; ++c) {
      int di = c & 1, dj = (c >> 1) & 1, dk = (c >> 2) & 1;
      double w = (di ? f : 1 - f) * (dj ? fy : 1 - fy) * (dk ? fz : 1 - fz);
      acc += w * at(dense, clampi(i0 + di), clampi(j + dj), clampi(k + dk));
    }
    return acc;
  });
  CHECK(std::abs(r_sparse - r_dense) < 0.1 * dx);
}

TEST_CASE("gaussian smoothing commutes with whole-voxel shifts (bitwise)") {
  const double dx = 0.01;
  const Vec3i shift(3, -2, 5);
  LevelSet phi(dx, Vec3::Zero(), 6 * dx);
  LevelSet shifted(dx, Vec3::Zero(), 6 * dx);
  Vec3 c(0.15, 0.15, 0.15);
  for (int k = 0; k < 30; ++k)
    for (int j = 0; j < 30; ++j)
      for (int i = 0; i < 30; ++i) {
        Vec3i v(i, j, k);
        double d = (phi.voxel_center(v) - c).norm() - 0.08;
        if (std::abs(d) < 5 * dx) {
          phi.set(v, d);
          shifted.set(v + shift, d);
        }
      }
  LevelSet a = gaussian_smooth(phi, 2);
  LevelSet b = gaussian_smooth(shifted, 2);
  int compared = 0;
  bool identical = true;
  a.values().for_each_voxel([&](const Vec3i& v, double value) {
    if (!b.values().has(v + shift)) return;
    if (b.at(v + shift) != value) identical = false;
    ++compared;
  });
  CHECK(identical);
  CHECK(compared > 1000);
}

TEST_CASE("mesh level set: cube center and outside distances") {
  Box3 cube{Vec3::Zero(), Vec3::Ones()};
  SurfaceMesh mesh = make_box_mesh(cube, 0.26);
  REQUIRE(is_watertight(mesh));
  CHECK(mesh_volume(mesh) == doctest::Approx(1.0).epsilon(1e-12));
  const double dx = 0.05;
  Box3 clip{Vec3::Constant(-0.4), Vec3::Constant(1.4)};
  LevelSet phi = levelset_from_mesh(mesh, dx, Vec3::Constant(-0.5 * dx - 0.4),
                                    0.45, clip);
  CHECK(phi.sample(Vec3::Constant(0.5)) == doctest::Approx(-0.45).epsilon(1e-6));
  CHECK(phi.sample(Vec3(0.5, 0.5, 1.3)) == doctest::Approx(0.3).epsilon(1e-6));
}

TEST_CASE("mesh level set: icosphere center distance within chord error") {
  SurfaceMesh mesh = make_icosphere(Vec3::Zero(), 1.0, 3);
  REQUIRE(is_watertight(mesh));
  const double dx = 0.1;
  Box3 clip{Vec3::Constant(-1.2), Vec3::Constant(1.2)};
  LevelSet phi =
      levelset_from_mesh(mesh, dx, Vec3::Constant(-0.5 * dx), 1.3, clip);
  // Chordal sagitta bound for the tessellation.
  double max_edge = 0.0;
  for (const Vec3i& t : mesh.triangles)
    for (int e = 0; e < 3; ++e)
      max_edge = std::max(max_edge, (mesh.vertices[t[e]] -
                                     mesh.vertices[t[(e + 1) % 3]])
                                        .norm());
  // Circumradius of an equilateral chord triangle is edge/sqrt(3).
  double sagitta = 1.0 - std::sqrt(1.0 - max_edge * max_edge / 3.0);
  double phi0 = phi.sample(Vec3::Zero());
  CHECK(std::abs(phi0 + 1.0) < sagitta + 1e-6);
}

TEST_CASE("mesh level set: sign agrees with analytic inside/outside") {
  SurfaceMesh mesh = make_icosphere(Vec3::Zero(), 1.0, 2);
  const double dx = 0.08;
  Box3 clip{Vec3::Constant(-1.3), Vec3::Constant(1.3)};
  LevelSet phi =
      levelset_from_mesh(mesh, dx, Vec3::Constant(-0.5 * dx), 1.3, clip);
  // The faceted sphere lies slightly inside the unit sphere; stay away
  // from the surface shell by the sagitta when classifying.
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-1.25, 1.25);
  int agree = 0, total = 0;
  for (int i = 0; i < 3000 && total < 1000; ++i) {
    Vec3 x(u(rng), u(rng), u(rng));
    double r = x.norm();
    if (std::abs(r - 1.0) < 0.06 || r > 1.25) continue;
    ++total;
    bool inside_analytic = r < 1.0;
    bool inside_grid = phi.at(phi.voxel_of(x)) < 0.0;
    if (inside_analytic == inside_grid) ++agree;
  }
  CHECK(total == 1000);
  CHECK(agree == total);
}

TEST_CASE("mesh level set rejects open surfaces") {
  SurfaceMesh mesh = make_icosphere(Vec3::Zero(), 1.0, 1);
  mesh.triangles.pop_back();
  mesh.labels.pop_back();
  mesh.solid_velocities.pop_back();
  Box3 clip{Vec3::Constant(-1.2), Vec3::Constant(1.2)};
  CHECK_THROWS_WITH_AS(
      levelset_from_mesh(mesh, 0.1, Vec3::Zero(), 1.0, clip),
      "open surface", std::runtime_error);
}

TEST_CASE("HSGR grid serialization round-trips") {
  LevelSet phi(0.025, Vec3(0.1, -0.2, 0.3), 0.1);
  phi.set(Vec3i(1, 2, 3), -0.05);
  phi.set(Vec3i(-4, 0, 9), 0.0625);
  std::stringstream buffer;
  write_grid(buffer, phi.values(), phi.dx(), phi.origin());
  LoadedGrid loaded = read_grid(buffer);
  CHECK(loaded.dx == phi.dx());
  CHECK(loaded.origin == phi.origin());
  CHECK(loaded.values.get(Vec3i(1, 2, 3)) ==
        doctest::Approx(-0.05).epsilon(1e-7));
  CHECK(loaded.values.get(Vec3i(-4, 0, 9)) == 0.0625);  // exact in f32
}

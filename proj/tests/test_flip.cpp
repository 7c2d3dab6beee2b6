#include <doctest.h>

#include <cmath>
#include <random>

#include "hsim/flip/particles.hpp"
#include "hsim/flip/transfer.hpp"

using namespace hsim;

namespace {

ParticleSet random_cloud(int count, const Vec3& lo, const Vec3& hi,
                         uint32_t seed) {
  std::mt19937 rng(seed);
  ParticleSet p;
  for (int i = 0; i < count; ++i) {
    Vec3 x, v;
    for (int a = 0; a < 3; ++a) {
      x[a] = lo[a] + (hi[a] - lo[a]) *
                         std::uniform_real_distribution<double>(0, 1)(rng);
      v[a] = std::uniform_real_distribution<double>(-2, 2)(rng);
    }
    p.append(x, v);
  }
  return p;
}

inline double hat(double t) {
  double a = std::abs(t);
  return a < 1.0 ? 1.0 - a : 0.0;
}

}  // namespace

TEST_CASE("p2g transfers a constant velocity exactly") {
  const double dx = 0.1;
  ParticleSet p = random_cloud(300, Vec3::Constant(0.2), Vec3::Constant(0.9),
                               42);
  for (auto& v : p.velocities) v = Vec3(1.0, 0.0, 0.0);
  GridRegion region{Vec3i::Zero(), Vec3i::Constant(10)};
  P2GResult res = particle_to_grid(p, dx, Vec3::Zero(), region,
                                   default_particle_radius(dx), 3 * dx);
  int faces = 0;
  res.grid.face(0).valid.for_each_voxel([&](const Vec3i& f, uint8_t flag) {
    if (!flag) return;
    CHECK(res.grid.face(0).value.get(f) == 1.0);
    ++faces;
  });
  CHECK(faces > 100);
}

TEST_CASE("p2g single particle at a face center") {
  const double dx = 0.1;
  ParticleSet p;
  MacVelocityGrid probe(dx, Vec3::Zero());
  Vec3 face_center = probe.face_center(0, Vec3i(3, 3, 3));
  p.append(face_center, Vec3(2.0, 0.0, 0.0));
  GridRegion region{Vec3i::Zero(), Vec3i::Constant(8)};
  P2GResult res = particle_to_grid(p, dx, Vec3::Zero(), region,
                                   default_particle_radius(dx), 3 * dx);
  CHECK(res.grid.face(0).value.get(Vec3i(3, 3, 3)) == 2.0);
  // Any face with nonzero weight normalizes back to the particle velocity.
  res.grid.face(0).valid.for_each_voxel([&](const Vec3i& f, uint8_t flag) {
    if (flag) CHECK(res.grid.face(0).value.get(f) == doctest::Approx(2.0));
  });
}

TEST_CASE("p2g matches a dense scatter/normalize oracle") {
  const double dx = 0.05;
  const int n = 12;
  ParticleSet p = random_cloud(100, Vec3::Constant(0.1), Vec3::Constant(0.5),
                               7);
  GridRegion region{Vec3i::Zero(), Vec3i::Constant(n)};
  P2GResult res = particle_to_grid(p, dx, Vec3::Zero(), region,
                                   default_particle_radius(dx), 3 * dx);
  MacVelocityGrid probe(dx, Vec3::Zero());
  for (int axis = 0; axis < 3; ++axis) {
    // Dense oracle over the face lattice.
    for (int k = 0; k <= n; ++k)
      for (int j = 0; j <= n; ++j)
        for (int i = 0; i <= n; ++i) {
          Vec3i f(i, j, k);
          Vec3 c = probe.face_center(axis, f);
          double momentum = 0.0, wsum = 0.0;
          for (size_t q = 0; q < p.size(); ++q) {
            double w = hat((p.positions[q].x() - c.x()) / dx) *
                       hat((p.positions[q].y() - c.y()) / dx) *
                       hat((p.positions[q].z() - c.z()) / dx);
            momentum += w * p.velocities[q][axis];
            wsum += w;
          }
          if (wsum > 0.0) {
            double expect = momentum / wsum;
            double got = res.grid.face(axis).value.get(f);
            CHECK(got == doctest::Approx(expect).epsilon(1e-12));
          } else {
            CHECK(!res.grid.face(axis).valid.get(f));
          }
        }
  }
}

TEST_CASE("g2p limits: pure PIC and FLIP no-op") {
  const double dx = 0.1;
  ParticleSet p = random_cloud(50, Vec3::Constant(0.2), Vec3::Constant(0.8),
                               3);
  GridRegion region{Vec3i::Zero(), Vec3i::Constant(10)};
  P2GResult res = particle_to_grid(p, dx, Vec3::Zero(), region,
                                   default_particle_radius(dx), 3 * dx);

  SUBCASE("flip_blend = 0 gives u_new at the particle") {
    ParticleSet q = p;
    grid_to_particle(q, res.grid, res.grid, 0.0);
    for (size_t i = 0; i < q.size(); ++i) {
      Vec3 expect = res.grid.sample(q.positions[i]);
      for (int a = 0; a < 3; ++a)
        CHECK(q.velocities[i][a] == doctest::Approx(expect[a]).epsilon(1e-14));
    }
  }
  SUBCASE("unchanged grid with flip_blend = 1 keeps velocities") {
    ParticleSet q = p;
    grid_to_particle(q, res.grid, res.grid, 1.0);
    for (size_t i = 0; i < q.size(); ++i)
      for (int a = 0; a < 3; ++a)
        CHECK(q.velocities[i][a] ==
              doctest::Approx(p.velocities[i][a]).epsilon(1e-12));
  }
}

TEST_CASE("g2p blend matches a hand-evaluated case") {
  // One particle exactly on a u-face; u_old = 1, u_new = 3, v_p = 0.5.
  // v' = 0.95*(0.5 + 2) + 0.05*3 = 2.525.
  const double dx = 0.1;
  MacVelocityGrid g_old(dx, Vec3::Zero()), g_new(dx, Vec3::Zero());
  Vec3 fc = g_old.face_center(0, Vec3i(4, 4, 4));
  g_old.face(0).value.at(Vec3i(4, 4, 4)) = 1.0;
  g_old.face(0).valid.at(Vec3i(4, 4, 4)) = 1;
  g_new.face(0).value.at(Vec3i(4, 4, 4)) = 3.0;
  g_new.face(0).valid.at(Vec3i(4, 4, 4)) = 1;
  ParticleSet p;
  p.append(fc, Vec3(0.5, 0.0, 0.0));
  grid_to_particle(p, g_new, g_old, 0.95);
  CHECK(p.velocities[0].x() == doctest::Approx(2.525).epsilon(1e-14));
}

TEST_CASE("p2g then g2p with blend 1 and no grid update is the identity") {
  const double dx = 0.08;
  ParticleSet p = random_cloud(400, Vec3::Constant(0.2), Vec3::Constant(0.7),
                               11);
  GridRegion region{Vec3i::Zero(), Vec3i::Constant(12)};
  P2GResult res = particle_to_grid(p, dx, Vec3::Zero(), region,
                                   default_particle_radius(dx), 3 * dx);
  ParticleSet q = p;
  grid_to_particle(q, res.grid, res.grid, 1.0);
  for (size_t i = 0; i < q.size(); ++i)
    for (int a = 0; a < 3; ++a)
      CHECK(q.velocities[i][a] ==
            doctest::Approx(p.velocities[i][a]).epsilon(1e-12));
}

TEST_CASE("p2g conserves momentum of an interior cloud") {
  const double dx = 0.05;
  ParticleSet p = random_cloud(500, Vec3::Constant(0.2), Vec3::Constant(0.4),
                               19);
  GridRegion region{Vec3i::Zero(), Vec3i::Constant(14)};
  P2GResult res = particle_to_grid(p, dx, Vec3::Zero(), region,
                                   default_particle_radius(dx), 3 * dx);
  for (int axis = 0; axis < 3; ++axis) {
    double grid_momentum = 0.0, particle_momentum = 0.0;
    res.weights[axis].for_each_voxel([&](const Vec3i& f, double w) {
      grid_momentum += w * res.grid.face(axis).value.get(f);
    });
    for (size_t i = 0; i < p.size(); ++i)
      particle_momentum += p.velocities[i][axis];
    CHECK(grid_momentum ==
          doctest::Approx(particle_momentum).epsilon(1e-10));
  }
}

TEST_CASE("advection in a uniform field is a translation") {
  const double dx = 0.1;
  MacVelocityGrid grid(dx, Vec3::Zero());
  for (int k = 0; k < 10; ++k)
    for (int j = 0; j < 10; ++j)
      for (int i = 0; i < 11; ++i) {
        grid.face(0).value.at(Vec3i(i, j, k)) = 1.0;
        grid.face(0).valid.at(Vec3i(i, j, k)) = 1;
      }
  ParticleSet p = random_cloud(40, Vec3::Constant(0.25), Vec3::Constant(0.7),
                               5);
  ParticleSet q = p;
  advect_particles(q, grid, 0.1, nullptr);
  for (size_t i = 0; i < q.size(); ++i) {
    CHECK(q.positions[i].x() ==
          doctest::Approx(p.positions[i].x() + 0.1).epsilon(1e-14));
    CHECK(q.positions[i].y() == p.positions[i].y());
    CHECK(q.positions[i].z() == p.positions[i].z());
  }
}

TEST_CASE("midpoint advection converges at third order on a rotation") {
  // Oracle: the analytic circular trajectory.
  const double dx = 0.02;
  const Vec3 center(0.5, 0.5, 0.5);
  const double omega = 2.0;
  MacVelocityGrid grid(dx, Vec3::Zero());
  for (int k = 0; k < 50; ++k)
    for (int j = 0; j < 50; ++j)
      for (int i = 0; i < 51; ++i) {
        // u = omega x (x - c), rotation about z.
        Vec3i fu(i, j, k), fv(j, i, k);
        Vec3 cu = grid.face_center(0, fu);
        grid.face(0).value.at(fu) = -omega * (cu.y() - center.y());
        grid.face(0).valid.at(fu) = 1;
        Vec3 cv = grid.face_center(1, fv);
        grid.face(1).value.at(fv) = omega * (cv.x() - center.x());
        grid.face(1).valid.at(fv) = 1;
      }
  const double radius = 0.2;
  auto run = [&](double dt) {
    ParticleSet p;
    p.append(center + Vec3(radius, 0, 0), Vec3::Zero());
    advect_particles(p, grid, dt, nullptr);
    double angle = omega * dt;
    Vec3 exact = center + radius * Vec3(std::cos(angle), std::sin(angle), 0);
    return (p.positions[0] - exact).norm();
  };
  double e1 = run(0.1);
  double e2 = run(0.05);
  CHECK(e1 < 1e-3);
  double order = std::log2(e1 / e2);
  CHECK(order > 2.0);  // midpoint: local truncation order 3 on this field
  CHECK(order < 4.0);
}

namespace {
class FloorSolid : public SolidGeometry {
 public:
  double phi(const Vec3& p) const override { return p.y() - 0.2; }
};
}  // namespace

TEST_CASE("advection pushes particles out of solids") {
  const double dx = 0.05;
  MacVelocityGrid grid(dx, Vec3::Zero());
  for (int k = 0; k < 12; ++k)
    for (int j = 0; j < 13; ++j)
      for (int i = 0; i < 12; ++i) {
        grid.face(1).value.at(Vec3i(i, j, k)) = -1.0;  // flow into the floor
        grid.face(1).valid.at(Vec3i(i, j, k)) = 1;
      }
  FloorSolid floor;
  ParticleSet p;
  p.append(Vec3(0.3, 0.22, 0.3), Vec3::Zero());
  advect_particles(p, grid, 0.1, &floor);
  CHECK(floor.phi(p.positions[0]) >= 0.0);
}

TEST_CASE("body force increments valid v-faces") {
  const double dx = 0.1;
  MacVelocityGrid grid(dx, Vec3::Zero());
  for (int j = 0; j < 5; ++j) {
    grid.face(1).value.at(Vec3i(2, j, 2)) = 0.5;
    grid.face(1).valid.at(Vec3i(2, j, 2)) = 1;
  }
  SUBCASE("g dt increment") {
    apply_body_force(grid, Vec3(0, -9.81, 0), 0.01);
    for (int j = 0; j < 5; ++j)
      CHECK(grid.face(1).value.get(Vec3i(2, j, 2)) ==
            doctest::Approx(0.5 - 0.0981).epsilon(1e-14));
  }
  SUBCASE("zero force is the identity") {
    apply_body_force(grid, Vec3::Zero(), 0.01);
    for (int j = 0; j < 5; ++j)
      CHECK(grid.face(1).value.get(Vec3i(2, j, 2)) == 0.5);
  }
  SUBCASE("two half steps equal one full step bitwise") {
    MacVelocityGrid twice = grid;
    apply_body_force(grid, Vec3(0, -9.81, 0), 0.02);
    apply_body_force(twice, Vec3(0, -9.81, 0), 0.01);
    apply_body_force(twice, Vec3(0, -9.81, 0), 0.01);
    for (int j = 0; j < 5; ++j)
      CHECK(grid.face(1).value.get(Vec3i(2, j, 2)) ==
            twice.face(1).value.get(Vec3i(2, j, 2)));
  }
}

TEST_CASE("artificial friction blends toward the solid velocity") {
  // 30% solid face, mu=0.8, static solid: 76% of the original value.
  const double dx = 0.1;
  MacVelocityGrid grid(dx, Vec3::Zero());
  Vec3i f(1, 1, 1);
  grid.face(0).value.at(f) = 1.5;
  grid.face(0).valid.at(f) = 1;
  grid.face(0).solid_fraction.at(f) = 0.3;
  apply_boundary_friction(grid, 0.8);
  CHECK(grid.face(0).value.get(f) == doctest::Approx(0.76 * 1.5).epsilon(1e-14));

  // Moving solid blends toward u_solid.
  grid.face(0).value.at(f) = 1.5;
  grid.face(0).solid_velocity.at(f) = 2.0;
  apply_boundary_friction(grid, 0.8);
  CHECK(grid.face(0).value.get(f) ==
        doctest::Approx(0.76 * 1.5 + 0.24 * 2.0).epsilon(1e-14));
}

TEST_CASE("velocity extrapolation fills one layer with neighbor means") {
  const double dx = 0.1;
  MacVelocityGrid grid(dx, Vec3::Zero());
  grid.face(0).value.at(Vec3i(5, 5, 5)) = 2.0;
  grid.face(0).valid.at(Vec3i(5, 5, 5)) = 1;
  grid.face(0).value.at(Vec3i(5, 6, 5)) = 4.0;
  grid.face(0).valid.at(Vec3i(5, 6, 5)) = 1;
  extrapolate_velocity(grid, 1);
  // A face adjacent to both sources averages them.
  CHECK(grid.face(0).valid.get(Vec3i(6, 5, 5)) == 2);
  CHECK(grid.face(0).value.get(Vec3i(6, 5, 5)) == doctest::Approx(2.0));
  CHECK(grid.face(0).valid.get(Vec3i(4, 6, 5)) == 2);
  CHECK(grid.face(0).value.get(Vec3i(4, 6, 5)) == doctest::Approx(4.0));
}

TEST_CASE("particle PLY round-trips and is byte-stable") {
  ParticleSet p;
  p.append(Vec3(0.125, -3.5, 1e-7), Vec3(1.0 / 3.0, 0, -9.81));
  p.append(Vec3(2, 3, 4), Vec3(0, 0, 0));
  std::stringstream a, b;
  write_particles_ply(a, p);
  write_particles_ply(b, p);
  CHECK(a.str() == b.str());
  std::stringstream in(a.str());
  ParticleSet q = read_particles_ply(in);
  REQUIRE(q.size() == p.size());
  for (size_t i = 0; i < p.size(); ++i) {
    CHECK(q.positions[i] == p.positions[i]);
    CHECK(q.velocities[i] == p.velocities[i]);
  }
}

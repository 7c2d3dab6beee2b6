#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "hsim/bem/surface_mesh.hpp"

namespace hsim {

// Per-vertex boundary pressure (p2) and normal derivative (dp2_dn). On
// Dirichlet (free-surface) vertices p2 equals the imposed value exactly;
// on Neumann (solid) vertices dp2_dn equals the imposed flux.
struct BemSolveResult {
  std::vector<double> p2;
  std::vector<double> dp2_dn;
};

// Dense collocation system for the mixed Laplace problem: unknowns are p2
// on solid vertices and dp2/dn on free-surface vertices.
struct LaplaceSystem {
  Eigen::MatrixXd matrix;
  Eigen::VectorXd rhs;
  std::vector<FaceLabel> labels;   // per vertex
  std::vector<double> dirichlet;   // imposed p2 (used on free surface)
  std::vector<double> neumann;     // imposed dp2/dn (used on solid)
};

// Interior solid angle of the surface at a vertex (steradians); the
// collocation free-term is this over 4 pi.
double vertex_interior_solid_angle(const SurfaceMesh& mesh, int vertex);

// Collocation assembly with piecewise-linear densities. Dirichlet data is
// p_bc per vertex (zeros when empty); Neumann data is
// (rho/dt) (u - u_solid) . n from the mesh state.
LaplaceSystem assemble_laplace_system(const SurfaceMesh& mesh, double rho,
                                      double dt,
                                      std::span<const double> p_bc = {});

// Pivoted dense direct solve; throws on a singular system with a
// condition estimate in the message.
BemSolveResult solve_boundary_pressure(const LaplaceSystem& system);

// v <- v - (dt/rho) (grad_s p2 + (dp2/dn) n) with triangle-linear surface
// gradients averaged to vertices.
void update_surface_velocity(SurfaceMesh& mesh, const BemSolveResult& result,
                             double dt, double rho);

}  // namespace hsim

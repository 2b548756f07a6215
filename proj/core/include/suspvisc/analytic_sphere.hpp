#pragma once

#include <array>
#include <limits>
#include <utility>
#include <vector>

#include "suspvisc/geometry.hpp"

namespace suspvisc {

enum class CellKind { whole_space, clamped, traction_free };

const char* to_string(CellKind kind);

/// Radial profiles of the disturbance psi = p(r) E x + q(r) (x.Ex) x with
/// pressure s(r) (x.Ex), and their derivatives.
struct RadialProfile {
  double p = 0.0, dp = 0.0, d2p = 0.0;
  double q = 0.0, dq = 0.0, d2q = 0.0;
  double s = 0.0, ds = 0.0;
};

/// Stokes disturbance of a rigid unit sphere at the origin in the linear
/// flow E x, written as a combination of four power-law solutions:
///   linear      p = 1
///   cubic       p = (d+2) r^2 / R^2, q = -2 / R^2, s = (d^2+4d) / R^2
///   quadrupole  p = 2 r^{-(d+2)},  q = -(d+2) r^{-(d+4)}
///   stresslet   q = r^{-(d+2)},    s = 2 r^{-(d+2)}
/// The rigid-body condition psi = -E x holds on |x| = 1.
class RadialAnsatz {
 public:
  RadialAnsatz(int dim, CellKind kind, double outer_radius, const Matrix& strain,
               const std::array<double, 4>& coefficients);

  int dim() const { return dim_; }
  CellKind kind() const { return kind_; }
  double outer_radius() const { return outer_; }
  const Matrix& strain() const { return strain_; }
  const std::array<double, 4>& coefficients() const { return coef_; }

  /// (exponent, coefficient) pairs of p and q.
  std::vector<std::pair<double, double>> p_terms() const;
  std::vector<std::pair<double, double>> q_terms() const;

  RadialProfile profile(double r) const;

  Point velocity(const Point& x) const;
  /// Velocity gradient, entry (i, j) = d_j psi_i.
  Matrix gradient(const Point& x) const;
  double pressure(const Point& x) const;
  /// Disturbance stress 2 D(psi) - pi I.
  Matrix stress(const Point& x) const;
  /// Disturbance traction on the sphere |x| = r, normal x / r.
  Point traction(const Point& x) const;

  /// Largest relative residual of momentum (two tensorial parts) and
  /// divergence at radius r.
  double residual(double r) const;

  /// Integral of |D(psi)|^2 over the ball of radius outer_radius, with
  /// D(psi) = -E inside the particle. Equals (d+2)/2 |B_1||E|^2 for the
  /// whole-space solution.
  double energy() const;

 private:
  int dim_;
  CellKind kind_;
  double outer_;
  Matrix strain_;
  std::array<double, 4> coef_;
};

/// Decaying solution in the whole space.
RadialAnsatz single_sphere_solution(int dim, const Matrix& strain);

/// Concentric-sphere cell of radius R: either psi = 0 on |x| = R
/// (the total velocity matches E x) or zero disturbance traction there.
RadialAnsatz cell_model(int dim, double radius, CellKind kind, const Matrix& strain);

/// (d+2)/2 |B_1| |E|^2.
double whole_space_energy(int dim, const Matrix& strain);

struct KernelValue {
  double value = 0.0;
  int quadrature_order = 0;
  double change = 0.0;
};

/// Surface pairing over the unit sphere of the disturbance of a particle at
/// y with the total stress 2(D(psi_0) + E) - pi_0 I of the particle at 0.
KernelValue bg_far_kernel(int dim, const Point& y, const Matrix& strain);

/// Net force of the total stress of the single sphere over its surface.
Point single_sphere_net_force(int dim, const Matrix& strain);

}  // namespace suspvisc

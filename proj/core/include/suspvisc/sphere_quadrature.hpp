#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "suspvisc/geometry.hpp"

namespace suspvisc {

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

GaussRule gauss_legendre(int order);

/// Quadrature on the unit sphere (2D: unit circle). Weights sum to its area.
/// 3D: Gauss-Legendre in cos(polar angle) x 2*order uniform azimuths.
/// 2D: 2*order uniform angles.
struct SurfaceRule {
  int dim = 3;
  std::vector<Point> nodes;
  std::vector<double> weights;
};

SurfaceRule sphere_rule(int dim, int order);

struct SurfaceIntegral {
  Eigen::VectorXd value;
  int order = 0;
  /// Max-norm change at the last doubling.
  double change = 0.0;
};

/// Integrates a vector-valued function over the unit sphere, doubling the
/// order until the max-norm change is below rel_tol * |value| + abs_tol.
/// Throws ConvergenceError when max_order is reached first.
SurfaceIntegral integrate_sphere(int dim, const std::function<Eigen::VectorXd(const Point&)>& f,
                                 double rel_tol = 1e-8, double abs_tol = 1e-15,
                                 int start_order = 8, int max_order = 1024);

}  // namespace suspvisc

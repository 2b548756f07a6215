#pragma once

#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "suspvisc/errors.hpp"

namespace suspvisc {

/// Points and tensors are stored in three components; two-dimensional
/// problems leave the third row/column at zero.
using Point = Eigen::Vector3d;
using Matrix = Eigen::Matrix3d;

inline void check_dimension(int dim) {
  if (dim != 2 && dim != 3) {
    throw ValidationError("dimension must be 2 or 3");
  }
}

/// |B_1|: pi in 2D, 4pi/3 in 3D.
inline double unit_ball_volume(int dim) {
  check_dimension(dim);
  return dim == 2 ? std::numbers::pi : 4.0 * std::numbers::pi / 3.0;
}

/// |dB_1| = d |B_1|.
inline double unit_sphere_area(int dim) { return dim * unit_ball_volume(dim); }

inline double ball_volume(int dim, double radius) {
  return unit_ball_volume(dim) * std::pow(radius, dim);
}

/// Minimum-image displacement b - a in the periodic box [0, box)^dim.
inline Point periodic_displacement(const Point& a, const Point& b, double box, int dim) {
  Point d = Point::Zero();
  for (int k = 0; k < dim; ++k) {
    double x = b[k] - a[k];
    x -= box * std::round(x / box);
    d[k] = x;
  }
  return d;
}

inline double periodic_distance(const Point& a, const Point& b, double box, int dim) {
  return periodic_displacement(a, b, box, dim).norm();
}

inline Point wrap_point(Point p, double box, int dim) {
  for (int k = 0; k < dim; ++k) {
    p[k] -= box * std::floor(p[k] / box);
    if (p[k] >= box) p[k] -= box;
  }
  for (int k = dim; k < 3; ++k) p[k] = 0.0;
  return p;
}

/// Frobenius norm restricted to the active block.
inline double frobenius(const Matrix& m) { return std::sqrt((m.array() * m.array()).sum()); }

inline bool is_trace_free_symmetric(const Matrix& e, int dim, double tol = 1e-12) {
  const double scale = std::max(1.0, frobenius(e));
  if ((e - e.transpose()).cwiseAbs().maxCoeff() > tol * scale) return false;
  if (std::abs(e.trace()) > tol * scale) return false;
  for (int i = dim; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      if (e(i, j) != 0.0 || e(j, i) != 0.0) return false;
    }
  }
  return true;
}

}  // namespace suspvisc

#include "suspvisc/particle_indicator.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace suspvisc {

namespace {

// 10-point Gauss-Legendre on [-1, 1].
constexpr std::array<double, 10> kNodes = {
    -0.9739065285171717, -0.8650633666889845, -0.6794095682990244, -0.4333953941292472,
    -0.1488743389816312, 0.1488743389816312,  0.4333953941292472,  0.6794095682990244,
    0.8650633666889845,  0.9739065285171717};
constexpr std::array<double, 10> kWeights = {
    0.0666713443086881, 0.1494513491505806, 0.2190863625159820, 0.2692667193099963,
    0.2955242247147529, 0.2955242247147529, 0.2692667193099963, 0.2190863625159820,
    0.1494513491505806, 0.0666713443086881};

double chord(double rho2, double z0, double z1) {
  if (rho2 >= 1.0) return 0.0;
  const double s = std::sqrt(1.0 - rho2);
  return std::max(0.0, std::min(z1, s) - std::max(z0, -s));
}

}  // namespace

double cube_ball_overlap(const Point& lo, double h, int dim) {
  double near2 = 0.0;
  double far2 = 0.0;
  for (int a = 0; a < dim; ++a) {
    const double a0 = lo[a];
    const double a1 = lo[a] + h;
    const double nearest = a0 > 0.0 ? a0 : (a1 < 0.0 ? a1 : 0.0);
    const double farthest = std::max(std::abs(a0), std::abs(a1));
    near2 += nearest * nearest;
    far2 += farthest * farthest;
  }
  if (near2 >= 1.0) return 0.0;
  if (far2 <= 1.0) return 1.0;

  // The chord is exact along one axis; averaging over that choice keeps
  // the quadrature error invariant under axis permutations.
  double total = 0.0;
  for (int axis = 0; axis < dim; ++axis) {
    const int u = (axis + 1) % dim;
    const int v = (axis + 2) % dim;
    const double z0 = lo[axis];
    const double z1 = lo[axis] + h;
    double sum = 0.0;
    if (dim == 2) {
      for (std::size_t i = 0; i < kNodes.size(); ++i) {
        const double x = lo[u] + 0.5 * h * (kNodes[i] + 1.0);
        sum += 0.5 * kWeights[i] * chord(x * x, z0, z1);
      }
    } else {
      for (std::size_t i = 0; i < kNodes.size(); ++i) {
        const double x = lo[u] + 0.5 * h * (kNodes[i] + 1.0);
        for (std::size_t j = 0; j < kNodes.size(); ++j) {
          const double y = lo[v] + 0.5 * h * (kNodes[j] + 1.0);
          sum += 0.25 * kWeights[i] * kWeights[j] * chord(x * x + y * y, z0, z1);
        }
      }
    }
    total += sum / h;
  }
  return total / dim;
}

RealBuffer particle_indicator(const SpectralGrid& grid, const ParticleConfig& config,
                              bool smoothing) {
  if (grid.dim() != config.dim || std::abs(grid.box() - config.box) > 1e-12 * config.box) {
    throw ValidationError("grid and configuration disagree on dimension or box");
  }
  RealBuffer chi = grid.make_real();
  const double h = grid.spacing();
  const int dim = grid.dim();
  for (const Point& c : config.centers) {
    std::array<int, 3> lo{0, 0, 0};
    std::array<int, 3> hi{0, 0, 0};
    for (int a = 0; a < dim; ++a) {
      lo[a] = static_cast<int>(std::floor((c[a] - 1.0) / h)) - 1;
      hi[a] = static_cast<int>(std::floor((c[a] + 1.0) / h)) + 1;
    }
    for (int i0 = lo[0]; i0 <= hi[0]; ++i0) {
      for (int i1 = lo[1]; i1 <= hi[1]; ++i1) {
        for (int i2 = lo[2]; i2 <= hi[2]; ++i2) {
          const std::array<int, 3> idx{i0, i1, i2};
          Point corner = Point::Zero();
          for (int a = 0; a < dim; ++a) corner[a] = idx[a] * h - c[a];
          double v = 0.0;
          if (smoothing) {
            v = cube_ball_overlap(corner, h, dim);
          } else {
            Point mid = corner;
            for (int a = 0; a < dim; ++a) mid[a] += 0.5 * h;
            v = mid.squaredNorm() < 1.0 ? 1.0 : 0.0;
          }
          if (v > 0.0) {
            double& slot = chi[grid.real_index(i0, i1, i2)];
            slot = std::min(1.0, slot + v);
          }
        }
      }
    }
  }
  return chi;
}

RealBuffer node_mask_outside(const SpectralGrid& grid, const Point& center, double radius) {
  RealBuffer mask = grid.make_real();
  for (std::size_t i = 0; i < grid.real_size(); ++i) {
    const double r = periodic_distance(grid.node(i), center, grid.box(), grid.dim());
    mask[i] = r > radius ? 1.0 : 0.0;
  }
  return mask;
}

}  // namespace suspvisc

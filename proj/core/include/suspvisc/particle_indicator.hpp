#pragma once

#include "suspvisc/ensembles.hpp"
#include "suspvisc/spectral_grid.hpp"

namespace suspvisc {

/// Particle indicator on the cells [i h, (i+1) h]^d. With `smoothing` each
/// cell carries the fraction of its volume covered by unit balls; without,
/// a cell is 1 when its centre lies in a ball.
RealBuffer particle_indicator(const SpectralGrid& grid, const ParticleConfig& config,
                              bool smoothing);

/// Exact covered fraction of the axis-aligned cube [lo, lo + h]^dim by the
/// unit ball at the origin (2D: disc), computed with an analytic chord
/// length along one axis and Gauss quadrature over the others, averaged
/// over the choice of axis.
double cube_ball_overlap(const Point& lo, double h, int dim);

/// Nodes at periodic distance greater than `radius` from `center` get 1.
RealBuffer node_mask_outside(const SpectralGrid& grid, const Point& center, double radius);

}  // namespace suspvisc

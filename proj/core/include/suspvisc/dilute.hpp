#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "suspvisc/effective_viscosity.hpp"
#include "suspvisc/ensembles.hpp"
#include "suspvisc/spectral_stokes.hpp"

namespace suspvisc {

// ---------------------------------------------------------------------------
// Einstein slope

struct DiluteFit {
  int dim = 3;
  std::vector<double> phi;
  /// Per-entry affine fit B(phi) = intercept + slope * phi.
  Eigen::MatrixXd slope;
  Eigen::MatrixXd slope_stderr;
  Eigen::MatrixXd intercept;
  Eigen::MatrixXd intercept_stderr;
  /// Affine fit of the isotropic part tr(B)/m.
  double isotropic_slope = 0.0;
  double isotropic_slope_stderr = 0.0;
  double isotropic_intercept = 0.0;
  double isotropic_intercept_stderr = 0.0;
  /// Residuals and leverage of the isotropic fit, one per point.
  std::vector<double> residuals;
  std::vector<double> leverage;
  double chi_square = 0.0;
  /// Quadratic coefficient of the isotropic part and its z-score.
  double curvature = 0.0;
  double curvature_z = 0.0;
  bool curvature_flag = false;
  /// Every intercept entry lies within 3 sigma of the identity.
  bool intercept_consistent = false;
  /// Fit used unit weights scaled by the residual (some stderr was zero).
  bool unit_weights = false;
};

/// Weighted least squares over the realized volume fractions of the points.
/// Needs at least three distinct phi and matching (dim, box, n, theta,
/// process) metadata.
DiluteFit einstein_fit(std::span<const ViscosityTensor> points);

/// lambda (d+2)/2 |B_1| Id on the trace-free basis of strain_basis(dim).
Eigen::MatrixXd renormalized_B1(double lambda, int dim);

/// lambda L^d (B_single - Id) from a spectral solve of one particle at the
/// centre of a box of side `box`.
Eigen::MatrixXd renormalized_B1_numeric(double lambda, int dim, double box, const SolverConfig& sc);

// ---------------------------------------------------------------------------
// Finite-N cluster expansion

struct ClusterOptions {
  /// Permit more than four particles (2^N solves).
  bool allow_large = false;
  int jobs = 1;
};

struct ClusterReport {
  int dim = 3;
  std::size_t particles = 0;
  Matrix strain = Matrix::Zero();
  double theta = 0.0;
  int n = 0;
  /// Indexed by subset bitmask (bit k set: particle k present).
  std::vector<double> energies;
  std::vector<double> deltas;
  /// order_sums[k] = sum of deltas over subsets of size k.
  std::vector<double> order_sums;
  /// |e(P) - sum_S delta^S| / |e(P)|
  double telescoping_residual = 0.0;
};

ClusterReport cluster_terms(const ParticleConfig& config, const Matrix& strain,
                            const SolverConfig& sc, const ClusterOptions& options = {});

// ---------------------------------------------------------------------------
// Second-order kernels

/// Two reflections between the spheres at 0 and y: the pairing over the
/// unit sphere at 0 of the disturbance of the sphere at y (strain a) with
/// the traction difference two-body minus one-body (strain b). `near_kernel_
/// reflection` is the diagonal value for one strain; the tensor variant is
/// symmetrized over the basis of strain_basis(dim) and uses a fixed surface
/// rule of the given order.
double near_kernel_reflection(int dim, const Point& y, const Matrix& strain);
Eigen::MatrixXd near_kernel_reflection_tensor(int dim, const Point& y, int surface_order = 12);

/// Basis tensor of the pairing computed by bg_far_kernel. Offsets |y| <= 2
/// are allowed: inside the ball at y the disturbance is continued by the
/// rigid motion -E (x - y).
Eigen::MatrixXd far_kernel_tensor(int dim, const Point& y, int surface_order = 16);

struct NearKernelOptions {
  double voxels_per_diameter = 8.0;
  /// Local box side is max(min_box, box_factor |y|). Zero selects 4 in 3D
  /// and 16 in 2D, where periodic images decay slowly.
  double box_factor = 0.0;
  double min_box = 8.0;
  /// Offsets needing a larger local box fall back to the reflection value.
  /// Zero selects 32 in 3D and 256 in 2D.
  double max_box = 0.0;
  bool numeric = true;
};

struct NearKernelValue {
  double reflection = 0.0;
  double numeric = 0.0;
  bool numeric_available = false;
  /// Set when the offset needed a box above max_box.
  bool box_limited = false;
  double box = 0.0;
  int n = 0;
  /// Difference of the values from the inner and outer half annulus.
  double annulus_change = 0.0;
};

/// Near kernel at offset y (|y| > 2). The numeric value solves the two- and
/// one-particle problems on a local periodic box and evaluates the pairing
/// through the reciprocal identity averaged over a fluid annulus around the
/// sphere at 0 with a smooth radial weight. Needs |y| - 2 > 6 voxels.
NearKernelValue bg_near_kernel(int dim, const Point& y, const Matrix& strain, const SolverConfig& sc,
                               const NearKernelOptions& options = {});

// ---------------------------------------------------------------------------
// Renormalized second-order term

struct SecondOrderOptions {
  /// Gauss nodes per pair-correlation bin.
  int radial_nodes = 2;
  /// Sub-intervals per bin (2 halves the radial step).
  int subdivide = 1;
  int angular_order = 8;
  int near_surface_order = 12;
  int far_surface_order = 16;
  /// Ceiling C in |B2| <= C lambda2 |log lambda|.
  double ceiling_constant = 100.0;
  /// Largest accepted tail fraction of |total|.
  double tail_tolerance = 0.05;
  int jobs = 1;
};

struct QuadratureRow {
  double radius = 0.0;
  double weight = 0.0;
  double near_average = 0.0;
  double far_average = 0.0;
  double f2 = 0.0;
  double h2 = 0.0;
  double near_cumulative = 0.0;
  double far_cumulative = 0.0;
};

struct SecondOrderTerm {
  int dim = 3;
  Eigen::MatrixXd near;
  Eigen::MatrixXd far;
  Eigen::MatrixXd total;
  Eigen::MatrixXd total_stderr;
  double near_scalar = 0.0;
  double far_scalar = 0.0;
  double far_scalar_stderr = 0.0;
  /// far_scalar split at the exclusion distance 2 + gap. Inside it h2 is
  /// -lambda^2 by disjointness, so that part carries no pair sampling
  /// error; the sampled part vanishes for uncorrelated pairs.
  double far_exclusion_scalar = 0.0;
  double far_sampled_scalar = 0.0;
  double far_sampled_stderr = 0.0;
  double scalar = 0.0;
  double scalar_stderr = 0.0;
  /// Extrapolated contributions beyond the largest radius, not included
  /// in `total`.
  double near_tail = 0.0;
  double far_tail = 0.0;
  double tail_fraction = 0.0;
  double ceiling = 0.0;
  bool within_ceiling = false;
  /// Largest |off-diagonal| and diagonal spread in units of total_stderr.
  double anisotropy_z = 0.0;
  std::vector<QuadratureRow> trace;
};

/// E:B2 E = int near(y) f2(y) dy + int far(y) h2(y) dy over the binned pair
/// statistics. Refuses (RenormalizationError) when h2 does not decay.
SecondOrderTerm second_order_term(const PairCorrelation& pc, const Matrix& strain,
                                  const SecondOrderOptions& options = {});

// ---------------------------------------------------------------------------
// Finite-volume convergence

struct ConvergenceOptions {
  int jobs = 1;
  /// Pair cluster sums use pairs closer than this (<= 0 disables).
  double pair_cutoff = 5.0;
};

struct ConvergenceLevel {
  double box = 0.0;
  int n = 0;
  ViscosityTensor tensor;
  double isotropic = 0.0;
  double isotropic_stderr = 0.0;
  /// lambda L^d delta^{x}: first-order cluster sum from one particle.
  double first_order = 0.0;
  /// Sum of pair deltas over close pairs of the first configuration.
  double second_order_partial = 0.0;
  std::size_t close_pairs = 0;
};

struct ConvergenceStudy {
  std::vector<ConvergenceLevel> levels;
  /// |iso(L_{k+1}) - iso(L_k)| and its standard error.
  std::vector<double> differences;
  std::vector<double> difference_stderr;
  bool monotone = false;
  double rate = 0.0;
  double rate_stderr = 0.0;
  bool rate_available = false;
};

/// Boxes and resolutions must share the voxel size L/n.
ConvergenceStudy finite_volume_convergence(const EnsembleSpec& spec, std::span<const double> boxes,
                                           std::span<const int> resolutions,
                                           const SolverConfig& sc, std::size_t n_configs,
                                           const ConvergenceOptions& options = {});

}  // namespace suspvisc

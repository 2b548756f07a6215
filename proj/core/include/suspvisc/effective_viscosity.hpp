#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "suspvisc/ensembles.hpp"
#include "suspvisc/spectral_stokes.hpp"

namespace suspvisc {

/// Orthonormal (Frobenius) basis of trace-free symmetric d x d matrices:
/// 3D (xx-yy)/sqrt2, (xx+yy-2zz)/sqrt6, then xy, yz, xz symmetrized over
/// sqrt2; 2D (xx-yy)/sqrt2, (xy+yx)/sqrt2.
struct StrainBasis {
  int dim = 3;
  std::vector<Matrix> elements;
  std::size_t size() const { return elements.size(); }
};

StrainBasis strain_basis(int dim);

struct ViscosityMeta {
  int dim = 3;
  double box = 0.0;
  int n = 0;
  double theta = 0.0;
  double phi = 0.0;
  /// Mean volume fraction of the configurations actually solved.
  double phi_realized = 0.0;
  double gap = 0.0;
  std::string process;
  std::uint64_t seed = 0;
  std::size_t n_configs = 0;
  std::size_t skipped = 0;
  bool richardson = false;
};

/// Effective viscosity on the trace-free space in the basis of
/// strain_basis(dim), in units of the fluid viscosity.
struct ViscosityTensor {
  Eigen::MatrixXd B;
  Eigen::MatrixXd stderr_;
  /// Per-configuration samples of B (row-major flattening), for pooling.
  std::vector<Eigen::MatrixXd> samples;
  std::vector<double> sample_phi;
  ViscosityMeta meta;
  std::vector<std::string> skipped_reasons;

  std::size_t size() const { return static_cast<std::size_t>(B.rows()); }
  /// tr(B)/m and its standard error from per-config samples.
  double isotropic() const;
  double isotropic_stderr() const;
};

struct AssemblyOptions {
  int jobs = 1;
  /// Combine theta and theta/10 solves to cancel the O(1/theta) penalty bias.
  bool richardson = false;
};

/// Cross-dissipation matrix B_ij = <mu (D psi_i + E_i):(D psi_j + E_j)> of
/// one configuration, one corrector per basis strain.
Eigen::MatrixXd config_tensor(const ParticleConfig& config, const SolverConfig& sc,
                              const StrainBasis& basis);

/// Averages config_tensor over n_configs configurations with seeds
/// derive_seed(spec.seed, c). Configurations whose solve does not converge
/// (or whose generator saturates) are skipped; more than 20% skipped raises
/// CampaignError.
ViscosityTensor assemble_tensor(const EnsembleSpec& spec, const SolverConfig& sc,
                                std::size_t n_configs, const AssemblyOptions& options = {});

struct SandwichBounds {
  std::vector<double> upper;
  /// Traction-free spherical cells do not tile space, so this is an
  /// estimate rather than a bound.
  std::vector<double> lower_estimate;
  std::vector<double> inradii;
  double share_radius = 0.0;
};

/// Per basis strain: upper = |E|^2 + L^{-3} sum_n clamped-cell energy at the
/// Voronoi inradius; lower estimate = |E|^2 + L^{-3} sum_n traction-free
/// energy at the equal-volume radius. Three-dimensional only.
SandwichBounds sandwich_bounds(const ParticleConfig& config);

}  // namespace suspvisc

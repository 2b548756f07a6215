#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "suspvisc/geometry.hpp"

namespace suspvisc {

enum class ProcessKind {
  cubic_lattice,
  random_sequential_addition,
  matern_ii,
  poisson_thinned,
};

std::string to_string(ProcessKind kind);
ProcessKind parse_process(std::string_view name);

/// Parameters of a stationary ensemble of unit spheres in a periodic box.
/// Lengths are in units of the particle radius.
struct EnsembleSpec {
  int dim = 3;
  double box = 16.0;
  ProcessKind process = ProcessKind::random_sequential_addition;
  double volume_fraction = 0.0;
  /// Minimum surface-to-surface distance between particles.
  double gap = 0.0;
  std::uint64_t seed = 0;

  double number_density() const { return volume_fraction / unit_ball_volume(dim); }
};

inline constexpr double kMaxVolumeFraction = 0.2;

void validate(const EnsembleSpec& spec);

/// A periodic configuration of disjoint unit spheres.
struct ParticleConfig {
  int dim = 3;
  double box = 16.0;
  double gap = 0.0;
  std::uint64_t seed = 0;
  std::vector<Point> centers;

  std::size_t size() const { return centers.size(); }
  double volume_fraction() const;
  double number_density() const;
};

/// Checks dimensions, that centers lie in [0, box) and that every periodic
/// center distance is at least 2 + gap.
void validate(const ParticleConfig& config);

/// Smallest periodic center distance, including a particle's own images.
double min_center_distance(const ParticleConfig& config);

/// Deterministic in `spec.seed`.
///
/// Lattice and RSA produce round(phi L^d / |B_1|) particles (lattice: the
/// closest periodic m^d arrangement). Matern-II and Poisson-thinned are
/// hardcore thinnings of a Poisson proposal whose intensity is solved so that
/// the retained intensity equals the target; their count is random.
ParticleConfig generate(const EnsembleSpec& spec);

/// Number of particles RSA/lattice target for a spec.
long target_count(const EnsembleSpec& spec);

struct ClusterComponent {
  std::vector<std::size_t> members;
  double diameter = 0.0;
  double volume = 0.0;
};

struct GeometryDiagnostics {
  /// rho_n: distance from particle n to its nearest neighbour (surface to
  /// surface). Own periodic images count as neighbours.
  std::vector<double> gaps;
  /// Set for particles without neighbour (single-particle box); their gap is
  /// the sentinel box/2.
  std::vector<bool> isolated;
  double min_gap = 0.0;
  double r0 = 0.0;
  double fattening = 0.0;
  /// sum_n rho_n^{-r0} |I_n| / L^d
  double moment_gaps = 0.0;
  /// Connected components of the union of balls of radius 1 + fattening.
  std::vector<ClusterComponent> components;
  /// sum_q (diam K_q)^{r0} |K_q| / L^d
  double moment_clusters = 0.0;
  /// Radius of the largest ball around each center inside its Voronoi cell.
  std::vector<double> voronoi_inradii;
};

GeometryDiagnostics geometry_diagnostics(const ParticleConfig& config, double rho, double r0);

struct PairCorrelationOptions {
  double bin_width = 0.1;
  double fit_min = 4.0;
  /// Upper end of the decay fit; <= 0 means box/2.
  double fit_max = 0.0;
};

/// Binned radial estimate of the two-point density f_2 and correlation
/// h_2 = f_2 - lambda^2 from periodic pair counts.
struct PairCorrelation {
  int dim = 3;
  double box = 0.0;
  double gap = 0.0;
  std::size_t n_configs = 0;
  std::vector<double> edges;
  std::vector<double> f2;
  std::vector<double> h2;
  std::vector<double> stderr_;
  double intensity = 0.0;
  double intensity_stderr = 0.0;
  /// sup over bins of f_2.
  double intensity2 = 0.0;
  double fit_min = 0.0;
  double fit_max = 0.0;
  /// Log-log decay exponent of |h_2| over significant bins of the fit range.
  std::optional<double> decay_exponent;
  double decay_exponent_stderr = 0.0;
  /// h_2 is statistically zero over the fit range (at most 5% of the bins
  /// beyond three standard errors).
  bool tail_null = false;
  bool empty = false;

  std::size_t bins() const { return f2.size(); }
  double bin_center(std::size_t b) const { return 0.5 * (edges[b] + edges[b + 1]); }
};

PairCorrelation pair_correlation(std::span<const ParticleConfig> configs,
                                 const PairCorrelationOptions& options = {});

/// Re-derive the decay fit and null-tail flag from the bins; used after a
/// PairCorrelation is built or edited by hand.
void refit_decay(PairCorrelation& pc);

struct IntensityEstimates {
  double lambda = 0.0;
  double lambda2 = 0.0;
  /// lambda^2 <= lambda2 <= lambda
  bool ordering_holds = false;
};

IntensityEstimates intensity_estimates(const PairCorrelation& pc);

}  // namespace suspvisc

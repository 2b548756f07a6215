#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "suspvisc/ensembles.hpp"
#include "suspvisc/spectral_grid.hpp"

namespace suspvisc {

/// How a partly covered cell mixes fluid and particle viscosity.
///   arithmetic  mu = 1 + theta chi
///   harmonic    1/mu = (1 - chi) + chi / (1 + theta)
enum class InterfaceRule { arithmetic, harmonic };

const char* to_string(InterfaceRule rule);
InterfaceRule parse_interface_rule(const std::string& name);

struct SolverConfig {
  /// Grid points per axis.
  int n = 64;
  /// Viscosity of the particle phase relative to the fluid.
  double theta = 1e3;
  /// Strength of the velocity clamp used by solve_clamped and mvp_ratio.
  double clamp = 0.0;
  /// Relative preconditioned residual at which CG stops.
  double tolerance = 1e-6;
  int max_iterations = 5000;
  /// Blend the exact voxel/ball overlap fraction into the viscosity.
  bool smoothing = true;
  /// Mixing rule for partly covered cells (used only with smoothing).
  InterfaceRule interface = InterfaceRule::harmonic;
};

void validate(const SolverConfig& sc);

/// Independent components of a symmetric tensor: (00,11,01) in 2D,
/// (00,11,22,01,12,02) in 3D.
int sym_components(int dim);
std::array<int, 2> sym_pair(int dim, int component);
/// Weight of a component in the Frobenius product (2 off the diagonal).
double sym_multiplicity(int dim, int component);

using SymField = std::vector<RealBuffer>;
using VectorField = std::array<RealBuffer, 3>;
using SpectralVector = std::array<ComplexBuffer, 3>;

/// Constant-viscosity Green operator: for a cell-centred symmetric field
/// tau, returns D(u) where u is the mean-zero periodic divergence-free
/// velocity with 2 mu0 D*D(u) = P D*(tau). It is positive semidefinite,
/// annihilates constants and satisfies G(2 mu0 G tau) = G tau.
SymField green_apply(const SpectralGrid& grid, const SymField& tau, double mu0);

/// Discrete corrector of the penalized rigid-particle Stokes problem.
struct CorrectorField {
  int dim = 3;
  int n = 0;
  double box = 0.0;
  double theta = 0.0;
  Matrix strain = Matrix::Zero();
  /// Hash of the particle geometry the field was solved on.
  std::uint64_t geometry = 0;
  std::shared_ptr<const SpectralGrid> grid;
  /// Cell indicator chi (covered fraction with smoothing).
  std::shared_ptr<const RealBuffer> indicator;
  /// Cell viscosity built from the indicator and the interface rule.
  std::shared_ptr<const RealBuffer> viscosity;
  /// D(psi) at cell centres, by symmetric component.
  SymField strain_field;
  /// Spectral nodal velocity psi-hat.
  SpectralVector velocity;
  /// Pressure at cell centres.
  RealBuffer pressure;
  double residual = 0.0;
  int iterations = 0;
  /// Mean of |D(psi) + E|^2 over the particle phase, cells weighted by
  /// (mu - 1) / theta.
  double rigidity_residual = 0.0;
  /// Relative L2 norm of the discrete divergence.
  double divergence = 0.0;
  double clamp_mismatch = 0.0;
  std::vector<double> history;
};

std::uint64_t geometry_hash(const ParticleConfig& config);

/// Minimizes the cell average of mu |D(psi) + E|^2 over periodic
/// divergence-free psi. Throws ConvergenceError past max_iterations.
CorrectorField solve_corrector(const ParticleConfig& config, const Matrix& strain,
                               const SolverConfig& sc);

/// Same functional plus clamp * (cell average of mask |psi - target|^2) with
/// mask and target given on nodes.
CorrectorField solve_clamped(const ParticleConfig& config, const RealBuffer& mask,
                             const VectorField& target, const Matrix& strain,
                             const SolverConfig& sc);

/// Cell average of mu |D(psi) + E|^2.
double dissipation(const CorrectorField& field, const ParticleConfig& config, double theta);
/// Bilinear form behind `dissipation` for two fields solved on the same medium.
double cross_dissipation(const CorrectorField& a, const CorrectorField& b);

/// Net hydrodynamic force and torque on one particle. In 2D only force[0..1]
/// and torque[2] are meaningful.
struct ParticleLoad {
  Point force = Point::Zero();
  Point torque = Point::Zero();
};

/// Volumetric weak form: tests the discrete stress divergence against a
/// cutoff that is 1 on the particle and decays across one voxel.
std::vector<ParticleLoad> force_torque(const CorrectorField& field, const ParticleConfig& config);

struct ForcedVelocity {
  int dim = 3;
  std::shared_ptr<const SpectralGrid> grid;
  VectorField velocity;
  SpectralVector spectral;
  double residual = 0.0;
  int iterations = 0;
};

/// Periodic Stokes flow with penalized particles driven by a mean-zero nodal
/// body force.
ForcedVelocity solve_forced(const ParticleConfig& config, const VectorField& force,
                            const SolverConfig& sc);

/// Mean nodal velocity inside each particle.
std::vector<Point> particle_velocities(const ForcedVelocity& flow, const ParticleConfig& config);

/// Divergence-free trigonometric velocity sum_m Re(a_m e^{2 pi i m.x/L}).
struct LowModeField {
  std::vector<std::array<int, 3>> waves;
  std::vector<std::array<cplx, 3>> amplitudes;
};

/// `count` fields with `modes` random wave vectors each, |m_a| <= max_wave.
std::vector<LowModeField> random_low_mode_fields(int dim, int count, std::uint64_t seed,
                                                 int modes = 6, int max_wave = 2);
VectorField evaluate_on_nodes(const LowModeField& field, const SpectralGrid& grid);

struct MvpReport {
  Point center = Point::Zero();
  double radius = 0.0;
  std::vector<double> ratios;
  std::vector<bool> degenerate;
  double max_ratio = 0.0;
};

/// How each datum generates a flow that is Stokes inside B_R(center):
/// `clamp` pins the velocity to the datum outside the ball (needs
/// sc.clamp > 0); `exterior_force` drives the periodic flow with the datum
/// as a body force supported outside the ball. The clamped solve converges
/// one to two orders of magnitude more slowly.
enum class MvpDriver { clamp, exterior_force };

const char* to_string(MvpDriver driver);
MvpDriver parse_mvp_driver(const std::string& name);

/// Ratio of the mean of |grad u|^2 over B_1(center) to that over B_R(center)
/// for the flow generated by each datum.
MvpReport mvp_ratio(const ParticleConfig& local, const Point& center, double radius,
                    std::span<const LowModeField> data, const SolverConfig& sc,
                    MvpDriver driver = MvpDriver::clamp);

/// Full velocity gradient at cell centres, component (a, b) = d_b u_a stored
/// at index 3 a + b.
std::array<RealBuffer, 9> velocity_gradient(const SpectralGrid& grid, const SpectralVector& u);

}  // namespace suspvisc

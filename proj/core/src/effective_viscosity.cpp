#include "suspvisc/effective_viscosity.hpp"

#include <cmath>
#include <numbers>
#include <optional>

#include "suspvisc/analytic_sphere.hpp"
#include "suspvisc/log.hpp"
#include "suspvisc/parallel.hpp"
#include "suspvisc/random.hpp"
#include "suspvisc/statistics.hpp"

namespace suspvisc {

StrainBasis strain_basis(int dim) {
  check_dimension(dim);
  StrainBasis b;
  b.dim = dim;
  const double r2 = 1.0 / std::sqrt(2.0);
  auto sym = [&](int i, int j) {
    Matrix m = Matrix::Zero();
    m(i, j) = r2;
    m(j, i) = r2;
    return m;
  };
  Matrix e = Matrix::Zero();
  e(0, 0) = r2;
  e(1, 1) = -r2;
  b.elements.push_back(e);
  if (dim == 2) {
    b.elements.push_back(sym(0, 1));
    return b;
  }
  const double r6 = 1.0 / std::sqrt(6.0);
  e = Matrix::Zero();
  e(0, 0) = r6;
  e(1, 1) = r6;
  e(2, 2) = -2.0 * r6;
  b.elements.push_back(e);
  b.elements.push_back(sym(0, 1));
  b.elements.push_back(sym(1, 2));
  b.elements.push_back(sym(0, 2));
  return b;
}

double ViscosityTensor::isotropic() const {
  return B.size() ? B.trace() / static_cast<double>(B.rows()) : 0.0;
}

double ViscosityTensor::isotropic_stderr() const {
  std::vector<double> iso;
  iso.reserve(samples.size());
  for (const auto& s : samples) iso.push_back(s.trace() / static_cast<double>(s.rows()));
  return mean_and_stderr(iso).stderr_;
}

Eigen::MatrixXd config_tensor(const ParticleConfig& config, const SolverConfig& sc,
                              const StrainBasis& basis) {
  const auto m = static_cast<Eigen::Index>(basis.size());
  std::vector<CorrectorField> fields;
  fields.reserve(basis.size());
  for (const auto& e : basis.elements) fields.push_back(solve_corrector(config, e, sc));
  Eigen::MatrixXd out(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i; j < m; ++j) {
      out(i, j) = cross_dissipation(fields[static_cast<std::size_t>(i)],
                                    fields[static_cast<std::size_t>(j)]);
      out(j, i) = out(i, j);
    }
  }
  return out;
}

ViscosityTensor assemble_tensor(const EnsembleSpec& spec, const SolverConfig& sc,
                                std::size_t n_configs, const AssemblyOptions& options) {
  validate(spec);
  validate(sc);
  if (n_configs < 1) throw ValidationError("n_configs must be >= 1");
  SolverConfig coarse = sc;
  if (options.richardson) {
    coarse.theta = sc.theta / 10.0;
    validate(coarse);
  }
  const StrainBasis basis = strain_basis(spec.dim);
  const auto m = static_cast<Eigen::Index>(basis.size());

  std::vector<std::optional<Eigen::MatrixXd>> results(n_configs);
  std::vector<double> phis(n_configs, 0.0);
  std::vector<std::string> reasons(n_configs);
  parallel_for(n_configs, options.jobs, [&](std::size_t c) {
    EnsembleSpec s = spec;
    s.seed = derive_seed(spec.seed, c);
    try {
      const ParticleConfig config = generate(s);
      phis[c] = config.volume_fraction();
      Eigen::MatrixXd b = config_tensor(config, sc, basis);
      if (options.richardson) b = (10.0 * b - config_tensor(config, coarse, basis)) / 9.0;
      results[c] = std::move(b);
    } catch (const ConvergenceError& e) {
      reasons[c] = "config " + std::to_string(c) + ": " + e.what();
    } catch (const SaturationError& e) {
      reasons[c] = "config " + std::to_string(c) + ": " + e.what();
    }
  });

  ViscosityTensor out;
  out.meta.dim = spec.dim;
  out.meta.box = spec.box;
  out.meta.n = sc.n;
  out.meta.theta = sc.theta;
  out.meta.phi = spec.volume_fraction;
  out.meta.gap = spec.gap;
  out.meta.process = to_string(spec.process);
  out.meta.seed = spec.seed;
  out.meta.n_configs = n_configs;
  out.meta.richardson = options.richardson;
  for (std::size_t c = 0; c < n_configs; ++c) {
    if (results[c]) {
      out.samples.push_back(*results[c]);
      out.sample_phi.push_back(phis[c]);
    } else {
      out.skipped_reasons.push_back(reasons[c]);
      log_warning("skipped " + reasons[c]);
    }
  }
  out.meta.skipped = out.skipped_reasons.size();
  if (static_cast<double>(out.meta.skipped) > 0.2 * static_cast<double>(n_configs) ||
      out.samples.empty()) {
    throw CampaignError("campaign failed: " + std::to_string(out.meta.skipped) + " of " +
                        std::to_string(n_configs) + " configurations skipped");
  }
  out.meta.phi_realized = mean_and_stderr(out.sample_phi).mean;
  out.B.resize(m, m);
  out.stderr_.resize(m, m);
  std::vector<double> entry(out.samples.size());
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      for (std::size_t s = 0; s < out.samples.size(); ++s) entry[s] = out.samples[s](i, j);
      const MeanEstimate est = mean_and_stderr(entry);
      out.B(i, j) = est.mean;
      out.stderr_(i, j) = est.stderr_;
    }
  }
  return out;
}

SandwichBounds sandwich_bounds(const ParticleConfig& config) {
  validate(config);
  if (config.dim != 3) throw ValidationError("sandwich bounds are three-dimensional only");
  const StrainBasis basis = strain_basis(3);
  SandwichBounds out;
  out.upper.assign(basis.size(), 0.0);
  out.lower_estimate.assign(basis.size(), 0.0);
  const double volume = std::pow(config.box, 3);
  for (std::size_t a = 0; a < basis.size(); ++a) {
    const double e2 = (basis.elements[a].array().square()).sum();
    out.upper[a] = e2;
    out.lower_estimate[a] = e2;
  }
  if (config.centers.empty()) return out;

  const GeometryDiagnostics geo = geometry_diagnostics(config, 1.0, 0.0);
  out.inradii = geo.voronoi_inradii;
  out.share_radius = std::cbrt(volume / static_cast<double>(config.size()) * 3.0 /
                               (4.0 * std::numbers::pi));
  for (double r : out.inradii) {
    if (!(r > 1.0)) throw ValidationError("Voronoi inradius <= 1: particles overlap their cells");
  }
  if (!(out.share_radius > 1.0)) throw ValidationError("equal-volume radius <= 1");
  for (std::size_t a = 0; a < basis.size(); ++a) {
    const Matrix& e = basis.elements[a];
    CompensatedSum up;
    for (double r : out.inradii) up.add(cell_model(3, r, CellKind::clamped, e).energy());
    const double lo = cell_model(3, out.share_radius, CellKind::traction_free, e).energy();
    out.upper[a] += up.value() / volume;
    out.lower_estimate[a] += static_cast<double>(config.size()) * lo / volume;
  }
  return out;
}

}  // namespace suspvisc

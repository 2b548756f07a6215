#include "suspvisc/spectral_stokes.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numbers>
#include <sstream>

#include "suspvisc/log.hpp"
#include "suspvisc/particle_indicator.hpp"
#include "suspvisc/random.hpp"
#include "suspvisc/statistics.hpp"

namespace suspvisc {

namespace {

constexpr std::array<std::array<int, 2>, 6> kPairs3 = {
    {{0, 0}, {1, 1}, {2, 2}, {0, 1}, {1, 2}, {0, 2}}};
constexpr std::array<std::array<int, 2>, 3> kPairs2 = {{{0, 0}, {1, 1}, {0, 1}}};

struct Medium {
  std::shared_ptr<const SpectralGrid> grid;
  std::shared_ptr<const RealBuffer> chi;
  std::shared_ptr<const RealBuffer> mu;
  const RealBuffer* mask = nullptr;
  double kappa = 0.0;
  double mask_mean = 0.0;
  bool clamped() const { return mask != nullptr && kappa > 0.0 && mask_mean > 0.0; }
};

void apply_viscosity(const RealBuffer& mu, SymField& e) {
  for (auto& c : e) {
    for (std::size_t x = 0; x < mu.size(); ++x) c[x] *= mu[x];
  }
}

// Cell viscosity from the covered fraction f: arithmetic 1 + theta f, or
// harmonic 1 / ((1 - f) + f / (1 + theta)) (linear in the fluidity).
std::shared_ptr<const RealBuffer> make_viscosity(const SpectralGrid& g, const RealBuffer& chi,
                                                 const SolverConfig& sc) {
  auto mu = std::make_shared<RealBuffer>(g.make_real());
  const bool harmonic = sc.smoothing && sc.interface == InterfaceRule::harmonic;
  for (std::size_t i = 0; i < chi.size(); ++i) {
    const double f = chi[i];
    (*mu)[i] = harmonic ? 1.0 / ((1.0 - f) + f / (1.0 + sc.theta)) : 1.0 + sc.theta * f;
  }
  return mu;
}

Medium make_medium(const ParticleConfig& config, const SolverConfig& sc) {
  Medium m;
  m.grid = cached_grid(config.dim, sc.n, config.box);
  m.chi = std::make_shared<const RealBuffer>(particle_indicator(*m.grid, config, sc.smoothing));
  m.mu = make_viscosity(*m.grid, *m.chi, sc);
  const double per_diameter = 2.0 / m.grid->spacing();
  if (!config.centers.empty() && per_diameter < 8.0) {
    std::ostringstream os;
    os << "grid resolves particles with " << per_diameter << " voxels per diameter (< 8)";
    log_warning(os.str());
  }
  return m;
}

SpectralVector make_vector(const SpectralGrid& g) {
  SpectralVector v;
  for (int a = 0; a < g.dim(); ++a) v[a] = g.make_spectral();
  return v;
}

double vinner(const SpectralGrid& g, const SpectralVector& a, const SpectralVector& b) {
  double s = 0.0;
  for (int c = 0; c < g.dim(); ++c) s += g.inner(a[c].data(), b[c].data());
  return s;
}

// Strain component (i, j) of the spectral velocity v at mode k.
inline cplx strain_mode(const Mode& md, const SpectralVector& v, int i, int j, std::size_t k) {
  if (i == j) return md.xi[i] * v[i][k];
  return 0.5 * (md.xi[i] * v[j][k] + md.xi[j] * v[i][k]);
}

// out += D*(tau_c) for the symmetric component c with spectral values tau.
void accumulate_divergence(const SpectralGrid& g, const ComplexBuffer& tau, int i, int j,
                           SpectralVector& out) {
  for (std::size_t k = 0; k < g.spectral_size(); ++k) {
    const Mode& md = g.mode(k);
    if (i == j) {
      out[i][k] += tau[k] * std::conj(md.xi[i]);
    } else {
      out[i][k] += tau[k] * std::conj(md.xi[j]);
      out[j][k] += tau[k] * std::conj(md.xi[i]);
    }
  }
}

// Removes the gradient part of each mode. Modes invisible to the gradient
// are kept only when a clamp pins them.
void project(const SpectralGrid& g, SpectralVector& v, bool keep_null) {
  const int dim = g.dim();
  for (std::size_t k = 0; k < g.spectral_size(); ++k) {
    const Mode& md = g.mode(k);
    if (md.xi2 > 0.0) {
      cplx dot = 0.0;
      for (int a = 0; a < dim; ++a) dot += md.dir[a] * v[a][k];
      for (int a = 0; a < dim; ++a) v[a][k] -= md.dir[a] * dot;
    } else if (!keep_null) {
      for (int a = 0; a < dim; ++a) v[a][k] = 0.0;
    }
  }
}

class StokesOperator {
 public:
  explicit StokesOperator(const Medium& m)
      : m_(m), g_(*m.grid), spec_(g_.make_spectral()), real_(g_.make_real()),
        comps_(static_cast<std::size_t>(sym_components(g_.dim()))) {
    for (auto& c : comps_) c = g_.make_real();
  }

  void apply(const SpectralVector& v, SpectralVector& out) {
    const int dim = g_.dim();
    const int nc = sym_components(dim);
    for (int a = 0; a < dim; ++a) std::fill(out[a].begin(), out[a].end(), cplx(0.0));
    for (int c = 0; c < nc; ++c) {
      const auto [i, j] = sym_pair(dim, c);
      for (std::size_t k = 0; k < g_.spectral_size(); ++k) spec_[k] = strain_mode(g_.mode(k), v, i, j, k);
      g_.inverse(spec_.data(), comps_[c].data());
    }
    apply_viscosity(*m_.mu, comps_);
    for (int c = 0; c < nc; ++c) {
      const auto [i, j] = sym_pair(dim, c);
      g_.forward(comps_[c].data(), spec_.data());
      accumulate_divergence(g_, spec_, i, j, out);
    }
    if (m_.clamped()) {
      const auto& mask = *m_.mask;
      for (int a = 0; a < dim; ++a) {
        std::copy(v[a].begin(), v[a].end(), spec_.begin());
        g_.inverse(spec_.data(), real_.data());
        for (std::size_t x = 0; x < real_.size(); ++x) real_[x] *= m_.kappa * mask[x];
        g_.forward(real_.data(), spec_.data());
        for (std::size_t k = 0; k < g_.spectral_size(); ++k) out[a][k] += spec_[k];
      }
    }
    project(g_, out, m_.clamped());
  }

  void precondition(const SpectralVector& r, SpectralVector& z) const {
    const double shift = m_.clamped() ? m_.kappa * m_.mask_mean : 0.0;
    for (std::size_t k = 0; k < g_.spectral_size(); ++k) {
      const double d = 0.5 * g_.mode(k).xi2 + shift;
      const double inv = d > 0.0 ? 1.0 / d : 0.0;
      for (int a = 0; a < g_.dim(); ++a) z[a][k] = inv * r[a][k];
    }
  }

 private:
  const Medium& m_;
  const SpectralGrid& g_;
  ComplexBuffer spec_;
  RealBuffer real_;
  SymField comps_;
};

struct CgResult {
  SpectralVector x;
  double residual = 0.0;
  int iterations = 0;
  std::vector<double> history;
};

CgResult conjugate_gradient(const Medium& m, const SpectralVector& b, const SolverConfig& sc) {
  const SpectralGrid& g = *m.grid;
  const int dim = g.dim();
  StokesOperator op(m);
  CgResult out;
  out.x = make_vector(g);
  SpectralVector r = b;
  SpectralVector z = make_vector(g);
  SpectralVector ap = make_vector(g);
  op.precondition(r, z);
  SpectralVector p = z;
  double rz = vinner(g, r, z);
  if (!(rz > 0.0)) return out;
  const double bnorm = std::sqrt(rz);
  for (int it = 1; it <= sc.max_iterations; ++it) {
    op.apply(p, ap);
    const double pap = vinner(g, p, ap);
    if (!(pap > 0.0)) break;
    const double alpha = rz / pap;
    for (int a = 0; a < dim; ++a) {
      for (std::size_t k = 0; k < g.spectral_size(); ++k) {
        out.x[a][k] += alpha * p[a][k];
        r[a][k] -= alpha * ap[a][k];
      }
    }
    op.precondition(r, z);
    const double rz_new = vinner(g, r, z);
    out.residual = std::sqrt(std::max(rz_new, 0.0)) / bnorm;
    out.iterations = it;
    out.history.push_back(out.residual);
    if (out.residual <= sc.tolerance) return out;
    const double beta = rz_new / rz;
    rz = rz_new;
    for (int a = 0; a < dim; ++a) {
      for (std::size_t k = 0; k < g.spectral_size(); ++k) p[a][k] = z[a][k] + beta * p[a][k];
    }
  }
  std::ostringstream os;
  os << "conjugate gradient did not converge: relative residual " << out.residual << " after "
     << out.iterations << " iterations";
  throw ConvergenceError(os.str(), out.residual, out.iterations);
}

void check_strain(const Matrix& e, int dim) {
  if (!e.allFinite() || !is_trace_free_symmetric(e, dim, 1e-12)) {
    throw ValidationError("strain must be a trace-free symmetric matrix");
  }
}

// Right-hand side -D*(mu E) + kappa FFT(mask g), projected.
SpectralVector corrector_rhs(const Medium& m, const Matrix& strain, const VectorField* target) {
  const SpectralGrid& g = *m.grid;
  const int dim = g.dim();
  SpectralVector b = make_vector(g);
  ComplexBuffer tau = g.make_spectral();
  SymField stress(static_cast<std::size_t>(sym_components(dim)));
  for (int c = 0; c < sym_components(dim); ++c) {
    const auto [i, j] = sym_pair(dim, c);
    stress[c].assign(g.real_size(), -strain(i, j));
  }
  apply_viscosity(*m.mu, stress);
  for (int c = 0; c < sym_components(dim); ++c) {
    const auto [i, j] = sym_pair(dim, c);
    g.forward(stress[c].data(), tau.data());
    accumulate_divergence(g, tau, i, j, b);
  }
  if (m.clamped() && target != nullptr) {
    RealBuffer work = g.make_real();
    for (int a = 0; a < dim; ++a) {
      const auto& t = (*target)[a];
      if (t.size() != g.real_size()) throw ValidationError("clamp target has the wrong size");
      for (std::size_t x = 0; x < work.size(); ++x) work[x] = m.kappa * (*m.mask)[x] * t[x];
      g.forward(work.data(), tau.data());
      for (std::size_t k = 0; k < g.spectral_size(); ++k) b[a][k] += tau[k];
    }
  }
  project(g, b, m.clamped());
  return b;
}


// Cell average of (eps_a + E_a):mu(eps_b + E_b).
double weighted_product(const SpectralGrid& g, const RealBuffer& mu, const SymField& ea,
                        const Matrix& sa, const SymField& eb, const Matrix& sb) {
  const int dim = g.dim();
  CompensatedSum sum;
  const int nc = sym_components(dim);
  for (std::size_t x = 0; x < g.real_size(); ++x) {
    double v = 0.0;
    for (int c = 0; c < nc; ++c) {
      const auto [i, j] = sym_pair(dim, c);
      v += sym_multiplicity(dim, c) * (ea[c][x] + sa(i, j)) * (eb[c][x] + sb(i, j));
    }
    sum.add(mu[x] * v);
  }
  return sum.value() / static_cast<double>(g.real_size());
}

CorrectorField finish_field(const Medium& m, const ParticleConfig& config, const Matrix& strain,
                            const SolverConfig& sc, CgResult&& cg, const VectorField* target) {
  const SpectralGrid& g = *m.grid;
  const int dim = g.dim();
  const int nc = sym_components(dim);
  CorrectorField f;
  f.dim = dim;
  f.n = sc.n;
  f.box = config.box;
  f.theta = sc.theta;
  f.strain = strain;
  f.geometry = geometry_hash(config);
  f.grid = m.grid;
  f.indicator = m.chi;
  f.viscosity = m.mu;
  f.velocity = std::move(cg.x);
  f.residual = cg.residual;
  f.iterations = cg.iterations;
  f.history = std::move(cg.history);

  ComplexBuffer spec = g.make_spectral();
  f.strain_field.resize(nc);
  for (int c = 0; c < nc; ++c) {
    const auto [i, j] = sym_pair(dim, c);
    for (std::size_t k = 0; k < g.spectral_size(); ++k) spec[k] = strain_mode(g.mode(k), f.velocity, i, j, k);
    f.strain_field[c] = g.make_real();
    g.inverse(spec.data(), f.strain_field[c].data());
  }

  // Pressure: the multiplier that makes D*(2 tau - p I) vanish mode by mode.
  ComplexBuffer p_hat = g.make_spectral();
  RealBuffer work = g.make_real();
  {
    SymField stress = f.strain_field;
    for (int c = 0; c < nc; ++c) {
      const auto [i, j] = sym_pair(dim, c);
      for (double& v : stress[c]) v += strain(i, j);
    }
    apply_viscosity(*m.mu, stress);
    for (int c = 0; c < nc; ++c) {
      const auto [i, j] = sym_pair(dim, c);
      g.forward(stress[c].data(), spec.data());
      const double mult = sym_multiplicity(dim, c);
      for (std::size_t k = 0; k < g.spectral_size(); ++k) {
        const Mode& md = g.mode(k);
        if (md.xi2 > 0.0) p_hat[k] += 2.0 * mult * md.dir[i] * md.dir[j] * spec[k];
      }
    }
  }
  f.pressure = g.make_real();
  g.inverse(p_hat.data(), f.pressure.data());

  CompensatedSum rigid;
  CompensatedSum chi_sum;
  CompensatedSum div2;
  CompensatedSum tot2;
  for (std::size_t x = 0; x < g.real_size(); ++x) {
    double v = 0.0;
    double tr = 0.0;
    for (int c = 0; c < nc; ++c) {
      const auto [i, j] = sym_pair(dim, c);
      const double e = f.strain_field[c][x] + strain(i, j);
      v += sym_multiplicity(dim, c) * e * e;
      if (i == j) tr += f.strain_field[c][x];
    }
    // Particle weight (mu - 1) / theta: chi for the arithmetic rule, and
    // only the nearly covered cells for the harmonic one.
    const double w = ((*m.mu)[x] - 1.0) / sc.theta;
    rigid.add(w * v);
    chi_sum.add(w);
    div2.add(tr * tr);
    tot2.add(v);
  }
  f.rigidity_residual = chi_sum.value() > 0.0 ? rigid.value() / chi_sum.value() : 0.0;
  f.divergence = tot2.value() > 0.0 ? std::sqrt(div2.value() / tot2.value()) : 0.0;

  if (m.clamped() && target != nullptr) {
    CompensatedSum mis;
    for (int a = 0; a < dim; ++a) {
      std::copy(f.velocity[a].begin(), f.velocity[a].end(), spec.begin());
      g.inverse(spec.data(), work.data());
      for (std::size_t x = 0; x < work.size(); ++x) {
        const double d = work[x] - (*target)[a][x];
        mis.add((*m.mask)[x] * d * d);
      }
    }
    f.clamp_mismatch = mis.value() / static_cast<double>(g.real_size());
  }
  return f;
}

bool has_particles(const RealBuffer& chi) {
  return std::any_of(chi.begin(), chi.end(), [](double v) { return v > 0.0; });
}

CorrectorField solve_with_medium(const Medium& m, const ParticleConfig& config,
                                 const Matrix& strain, const SolverConfig& sc,
                                 const VectorField* target) {
  CgResult cg;
  if (!has_particles(*m.chi) && !m.clamped()) {
    cg.x = make_vector(*m.grid);
  } else {
    cg = conjugate_gradient(m, corrector_rhs(m, strain, target), sc);
  }
  return finish_field(m, config, strain, sc, std::move(cg), target);
}

void check_field_matches(const CorrectorField& f, const ParticleConfig& config, double theta) {
  if (f.dim != config.dim || f.box != config.box || f.geometry != geometry_hash(config)) {
    throw ValidationError("field was not solved on this configuration");
  }
  if (f.theta != theta) throw ValidationError("field was solved at a different theta");
}

}  // namespace

const char* to_string(InterfaceRule rule) {
  return rule == InterfaceRule::harmonic ? "harmonic" : "arithmetic";
}

InterfaceRule parse_interface_rule(const std::string& name) {
  if (name == "harmonic") return InterfaceRule::harmonic;
  if (name == "arithmetic") return InterfaceRule::arithmetic;
  throw ValidationError("unknown interface rule: " + name);
}

void validate(const SolverConfig& sc) {
  if (sc.n < 16 || sc.n % 2 != 0) throw ValidationError("grid resolution must be even and >= 16");
  if (!(sc.theta >= 10.0 && sc.theta <= 1e6)) throw ValidationError("theta must lie in [10, 1e6]");
  if (!(sc.tolerance > 0.0 && sc.tolerance <= 1e-3)) {
    throw ValidationError("tolerance must lie in (0, 1e-3]");
  }
  if (!(sc.clamp >= 0.0) || !std::isfinite(sc.clamp)) throw ValidationError("clamp must be >= 0");
  if (sc.max_iterations < 1) throw ValidationError("max_iterations must be >= 1");
}

int sym_components(int dim) {
  check_dimension(dim);
  return dim == 2 ? 3 : 6;
}

std::array<int, 2> sym_pair(int dim, int component) {
  return dim == 2 ? kPairs2.at(static_cast<std::size_t>(component))
                  : kPairs3.at(static_cast<std::size_t>(component));
}

double sym_multiplicity(int dim, int component) {
  const auto p = sym_pair(dim, component);
  return p[0] == p[1] ? 1.0 : 2.0;
}

std::uint64_t geometry_hash(const ParticleConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&](const void* data, std::size_t len) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ULL;
    }
  };
  mix(&config.dim, sizeof(config.dim));
  mix(&config.box, sizeof(config.box));
  for (const auto& p : config.centers) mix(p.data(), 3 * sizeof(double));
  return h;
}

SymField green_apply(const SpectralGrid& grid, const SymField& tau, double mu0) {
  const int dim = grid.dim();
  const int nc = sym_components(dim);
  if (!(mu0 > 0.0) || !std::isfinite(mu0)) throw ValidationError("reference viscosity must be > 0");
  if (static_cast<int>(tau.size()) != nc) throw ValidationError("polarization has the wrong rank");
  for (const auto& c : tau) {
    if (c.size() != grid.real_size()) throw ValidationError("polarization has the wrong size");
    if (!std::all_of(c.begin(), c.end(), [](double v) { return std::isfinite(v); })) {
      throw ValidationError("polarization contains non-finite values");
    }
  }
  std::vector<ComplexBuffer> th(nc);
  for (int c = 0; c < nc; ++c) {
    th[c] = grid.make_spectral();
    grid.forward(tau[c].data(), th[c].data());
  }
  // u-hat direction: (I - n n^T) tau-hat n / mu0; result sym(n (x) u-hat).
  std::vector<ComplexBuffer> out_hat(nc, grid.make_spectral());
  for (std::size_t k = 0; k < grid.spectral_size(); ++k) {
    const Mode& md = grid.mode(k);
    if (md.xi2 == 0.0) continue;
    std::array<cplx, 3> tn{};
    for (int c = 0; c < nc; ++c) {
      const auto [i, j] = sym_pair(dim, c);
      tn[i] += th[c][k] * md.dir[j];
      if (i != j) tn[j] += th[c][k] * md.dir[i];
    }
    cplx ntn = 0.0;
    for (int a = 0; a < dim; ++a) ntn += md.dir[a] * tn[a];
    std::array<cplx, 3> u{};
    for (int a = 0; a < dim; ++a) u[a] = (tn[a] - md.dir[a] * ntn) / mu0;
    for (int c = 0; c < nc; ++c) {
      const auto [i, j] = sym_pair(dim, c);
      out_hat[c][k] = 0.5 * (md.dir[i] * u[j] + md.dir[j] * u[i]);
    }
  }
  SymField out(nc);
  for (int c = 0; c < nc; ++c) {
    out[c] = grid.make_real();
    grid.inverse(out_hat[c].data(), out[c].data());
  }
  return out;
}

CorrectorField solve_corrector(const ParticleConfig& config, const Matrix& strain,
                               const SolverConfig& sc) {
  validate(sc);
  validate(config);
  check_strain(strain, config.dim);
  const Medium m = make_medium(config, sc);
  return solve_with_medium(m, config, strain, sc, nullptr);
}

CorrectorField solve_clamped(const ParticleConfig& config, const RealBuffer& mask,
                             const VectorField& target, const Matrix& strain,
                             const SolverConfig& sc) {
  validate(sc);
  validate(config);
  check_strain(strain, config.dim);
  if (!(sc.clamp > 0.0)) throw ValidationError("clamped solve needs clamp > 0");
  Medium m = make_medium(config, sc);
  if (mask.size() != m.grid->real_size()) throw ValidationError("clamp mask has the wrong size");
  for (int a = 0; a < config.dim; ++a) {
    if (target[a].size() != m.grid->real_size()) throw ValidationError("clamp target has the wrong size");
  }
  m.mask = &mask;
  m.kappa = sc.clamp;
  m.mask_mean = compensated_sum(mask) / static_cast<double>(mask.size());
  return solve_with_medium(m, config, strain, sc, &target);
}

double dissipation(const CorrectorField& field, const ParticleConfig& config, double theta) {
  check_field_matches(field, config, theta);
  return weighted_product(*field.grid, *field.viscosity, field.strain_field, field.strain,
                          field.strain_field, field.strain);
}

double cross_dissipation(const CorrectorField& a, const CorrectorField& b) {
  if (a.dim != b.dim || a.n != b.n || a.box != b.box || a.geometry != b.geometry ||
      a.theta != b.theta) {
    throw ValidationError("cross dissipation of fields solved on different media");
  }
  return weighted_product(*a.grid, *a.viscosity, a.strain_field, a.strain, b.strain_field,
                          b.strain);
}

std::vector<ParticleLoad> force_torque(const CorrectorField& field, const ParticleConfig& config) {
  check_field_matches(field, config, field.theta);
  std::vector<ParticleLoad> loads(config.size());
  if (config.centers.empty()) return loads;
  const SpectralGrid& g = *field.grid;
  const int dim = g.dim();
  const int nc = sym_components(dim);
  const double h = g.spacing();

  // r-hat = D*(sigma) with sigma = 2 mu (eps + E) - p I.
  SpectralVector r = make_vector(g);
  ComplexBuffer spec = g.make_spectral();
  {
    SymField stress = field.strain_field;
    for (int c = 0; c < nc; ++c) {
      const auto [i, j] = sym_pair(dim, c);
      for (double& v : stress[c]) v += field.strain(i, j);
    }
    apply_viscosity(*field.viscosity, stress);
    for (int c = 0; c < nc; ++c) {
      const auto [i, j] = sym_pair(dim, c);
      for (std::size_t x = 0; x < g.real_size(); ++x) {
        stress[c][x] *= 2.0;
        if (i == j) stress[c][x] -= field.pressure[x];
      }
      g.forward(stress[c].data(), spec.data());
      accumulate_divergence(g, spec, i, j, r);
    }
  }

  const double nearest = min_center_distance(config);
  double outer = 1.0 + 1.5 * h;
  double inner = 1.0 + 0.5 * h;
  if (0.5 * nearest < outer) {
    log_warning("force evaluation shells overlap; using a tighter shell");
    outer = 0.5 * nearest;
    inner = std::max(1.0, outer - h);
  }
  const double scale = -g.cell_volume() / static_cast<double>(g.real_size());
  std::array<ComplexBuffer, 4> what;
  for (auto& w : what) w = g.make_spectral();
  for (std::size_t n = 0; n < config.size(); ++n) {
    const Point& c = config.centers[n];
    std::array<RealBuffer, 4> w;
    for (auto& b : w) b = g.make_real();
    for (std::size_t x = 0; x < g.real_size(); ++x) {
      const Point d = periodic_displacement(c, g.node(x), g.box(), dim);
      const double rr = d.norm();
      double eta = 0.0;
      if (rr <= inner) {
        eta = 1.0;
      } else if (rr < outer) {
        eta = (outer - rr) / (outer - inner);
      }
      w[0][x] = eta;
      for (int b = 0; b < dim; ++b) w[1 + b][x] = eta * d[b];
    }
    for (int b = 0; b <= dim; ++b) g.forward(w[b].data(), what[b].data());
    ParticleLoad& load = loads[n];
    for (int a = 0; a < dim; ++a) load.force[a] = scale * g.inner(what[0].data(), r[a].data());
    // Test velocity e_i x d; in 2D only the out-of-plane component exists.
    auto dd = [&](int b) -> const ComplexBuffer& { return what[1 + b]; };
    if (dim == 3) {
      load.torque[0] = scale * (g.inner(dd(1).data(), r[2].data()) - g.inner(dd(2).data(), r[1].data()));
      load.torque[1] = scale * (g.inner(dd(2).data(), r[0].data()) - g.inner(dd(0).data(), r[2].data()));
    }
    load.torque[2] = scale * (g.inner(dd(0).data(), r[1].data()) - g.inner(dd(1).data(), r[0].data()));
  }
  return loads;
}

ForcedVelocity solve_forced(const ParticleConfig& config, const VectorField& force,
                            const SolverConfig& sc) {
  validate(sc);
  validate(config);
  const Medium m = make_medium(config, sc);
  const SpectralGrid& g = *m.grid;
  const int dim = g.dim();
  ForcedVelocity out;
  out.dim = dim;
  out.grid = m.grid;
  SpectralVector b = make_vector(g);
  for (int a = 0; a < dim; ++a) {
    if (force[a].size() != g.real_size()) throw ValidationError("body force has the wrong size");
    double rms = 0.0;
    for (double v : force[a]) {
      if (!std::isfinite(v)) throw ValidationError("body force contains non-finite values");
      rms += v * v;
    }
    rms = std::sqrt(rms / static_cast<double>(g.real_size()));
    const double mean = compensated_sum(force[a]) / static_cast<double>(g.real_size());
    if (std::abs(mean) > 1e-10 * std::max(1.0, rms)) {
      throw ValidationError("body force must have zero mean");
    }
    g.forward(force[a].data(), b[a].data());
    for (auto& v : b[a]) v *= 0.5;
  }
  project(g, b, false);
  CgResult cg;
  if (vinner(g, b, b) == 0.0) {
    cg.x = make_vector(g);
  } else {
    cg = conjugate_gradient(m, b, sc);
  }
  out.spectral = std::move(cg.x);
  out.residual = cg.residual;
  out.iterations = cg.iterations;
  ComplexBuffer spec = g.make_spectral();
  for (int a = 0; a < dim; ++a) {
    std::copy(out.spectral[a].begin(), out.spectral[a].end(), spec.begin());
    out.velocity[a] = g.make_real();
    g.inverse(spec.data(), out.velocity[a].data());
  }
  return out;
}

std::vector<Point> particle_velocities(const ForcedVelocity& flow, const ParticleConfig& config) {
  const SpectralGrid& g = *flow.grid;
  std::vector<Point> out(config.size(), Point::Zero());
  for (std::size_t n = 0; n < config.size(); ++n) {
    std::size_t count = 0;
    for (std::size_t x = 0; x < g.real_size(); ++x) {
      if (periodic_distance(config.centers[n], g.node(x), g.box(), g.dim()) < 1.0) {
        for (int a = 0; a < g.dim(); ++a) out[n][a] += flow.velocity[a][x];
        ++count;
      }
    }
    if (count > 0) out[n] /= static_cast<double>(count);
  }
  return out;
}

std::vector<LowModeField> random_low_mode_fields(int dim, int count, std::uint64_t seed,
                                                 int modes, int max_wave) {
  check_dimension(dim);
  if (count < 0 || modes < 1 || max_wave < 1) throw ValidationError("invalid low-mode field request");
  std::vector<LowModeField> out(static_cast<std::size_t>(count));
  for (int s = 0; s < count; ++s) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(s)));
    LowModeField& f = out[static_cast<std::size_t>(s)];
    double norm = 0.0;
    while (static_cast<int>(f.waves.size()) < modes) {
      std::array<int, 3> m{0, 0, 0};
      for (int a = 0; a < dim; ++a) {
        m[a] = static_cast<int>(std::floor(rng.uniform() * (2 * max_wave + 1))) - max_wave;
      }
      if (m[0] == 0 && m[1] == 0 && m[2] == 0) continue;
      std::array<cplx, 3> amp{};
      for (int a = 0; a < dim; ++a) amp[a] = cplx(rng.normal(), rng.normal());
      const double m2 = static_cast<double>(m[0] * m[0] + m[1] * m[1] + m[2] * m[2]);
      cplx dot = 0.0;
      for (int a = 0; a < dim; ++a) dot += static_cast<double>(m[a]) * amp[a];
      for (int a = 0; a < dim; ++a) amp[a] -= static_cast<double>(m[a]) * dot / m2;
      for (int a = 0; a < dim; ++a) norm += std::norm(amp[a]);
      f.waves.push_back(m);
      f.amplitudes.push_back(amp);
    }
    const double scale = norm > 0.0 ? 1.0 / std::sqrt(norm) : 1.0;
    for (auto& amp : f.amplitudes) {
      for (auto& v : amp) v *= scale;
    }
  }
  return out;
}

VectorField evaluate_on_nodes(const LowModeField& field, const SpectralGrid& grid) {
  VectorField out;
  for (int a = 0; a < 3; ++a) out[a] = grid.make_real();
  const double k0 = 2.0 * std::numbers::pi / grid.box();
  for (std::size_t x = 0; x < grid.real_size(); ++x) {
    const Point p = grid.node(x);
    for (std::size_t m = 0; m < field.waves.size(); ++m) {
      double phase = 0.0;
      for (int a = 0; a < grid.dim(); ++a) phase += k0 * field.waves[m][a] * p[a];
      const cplx e = std::polar(1.0, phase);
      for (int a = 0; a < grid.dim(); ++a) out[a][x] += (field.amplitudes[m][a] * e).real();
    }
  }
  return out;
}

std::array<RealBuffer, 9> velocity_gradient(const SpectralGrid& grid, const SpectralVector& u) {
  std::array<RealBuffer, 9> out;
  ComplexBuffer spec = grid.make_spectral();
  const int dim = grid.dim();
  for (int a = 0; a < dim; ++a) {
    for (int b = 0; b < dim; ++b) {
      for (std::size_t k = 0; k < grid.spectral_size(); ++k) spec[k] = grid.mode(k).xi[b] * u[a][k];
      out[3 * a + b] = grid.make_real();
      grid.inverse(spec.data(), out[3 * a + b].data());
    }
  }
  return out;
}

const char* to_string(MvpDriver driver) {
  return driver == MvpDriver::clamp ? "clamp" : "exterior-force";
}

MvpDriver parse_mvp_driver(const std::string& name) {
  if (name == "clamp") return MvpDriver::clamp;
  if (name == "exterior-force" || name == "force") return MvpDriver::exterior_force;
  throw ValidationError("unknown mean-value driver '" + name + "' (clamp or exterior-force)");
}

MvpReport mvp_ratio(const ParticleConfig& local, const Point& center, double radius,
                    std::span<const LowModeField> data, const SolverConfig& sc, MvpDriver driver) {
  validate(sc);
  validate(local);
  if (driver == MvpDriver::clamp && !(sc.clamp > 0.0)) {
    throw ValidationError("mean-value check needs clamp > 0");
  }
  if (!(radius > 1.0) || radius > 0.5 * local.box) {
    throw ValidationError("ball radius must lie in (1, box/2]");
  }
  for (const auto& c : local.centers) {
    if (periodic_distance(c, center, local.box, local.dim) + 1.0 > radius - local.gap + 1e-12) {
      throw ValidationError("particles must lie inside the ball shrunk by the gap");
    }
  }
  MvpReport rep;
  rep.center = center;
  rep.radius = radius;
  auto grid = cached_grid(local.dim, sc.n, local.box);
  const RealBuffer mask = node_mask_outside(*grid, center, radius);
  const int dim = local.dim;
  const Matrix zero = Matrix::Zero();
  for (const auto& datum : data) {
    const VectorField field = evaluate_on_nodes(datum, *grid);
    SpectralVector velocity;
    if (driver == MvpDriver::clamp) {
      velocity = solve_clamped(local, mask, field, zero, sc).velocity;
    } else {
      // Force only outside the ball, with the mean removed there, so that
      // the flow inside is force-free Stokes with the particles.
      VectorField force{grid->make_real(), grid->make_real(), grid->make_real()};
      const double outside = compensated_sum(mask);
      for (int a = 0; a < dim; ++a) {
        CompensatedSum sum;
        for (std::size_t x = 0; x < mask.size(); ++x) sum.add(mask[x] * field[a][x]);
        const double mean = sum.value() / outside;
        for (std::size_t x = 0; x < mask.size(); ++x) force[a][x] = mask[x] * (field[a][x] - mean);
      }
      velocity = solve_forced(local, force, sc).spectral;
    }
    const auto grad = velocity_gradient(*grid, velocity);
    CompensatedSum inner_sum;
    CompensatedSum outer_sum;
    std::size_t inner_count = 0;
    std::size_t outer_count = 0;
    for (std::size_t x = 0; x < grid->real_size(); ++x) {
      const double r = periodic_distance(grid->cell_center(x), center, grid->box(), dim);
      if (r >= radius) continue;
      double g2 = 0.0;
      for (int a = 0; a < dim; ++a) {
        for (int b = 0; b < dim; ++b) g2 += grad[3 * a + b][x] * grad[3 * a + b][x];
      }
      outer_sum.add(g2);
      ++outer_count;
      if (r < 1.0) {
        inner_sum.add(g2);
        ++inner_count;
      }
    }
    // Scale of the data inside the ball, to recognise gradient-free data.
    ComplexBuffer spec = grid->make_spectral();
    RealBuffer vel = grid->make_real();
    CompensatedSum u2;
    std::size_t u_count = 0;
    for (int a = 0; a < dim; ++a) {
      std::copy(velocity[a].begin(), velocity[a].end(), spec.begin());
      grid->inverse(spec.data(), vel.data());
      for (std::size_t x = 0; x < grid->real_size(); ++x) {
        if (periodic_distance(grid->node(x), center, grid->box(), dim) < radius) {
          u2.add(vel[x] * vel[x]);
          if (a == 0) ++u_count;
        }
      }
    }
    const double inner_mean = inner_count ? inner_sum.value() / inner_count : 0.0;
    const double outer_mean = outer_count ? outer_sum.value() / outer_count : 0.0;
    const double u_mean = u_count ? u2.value() / u_count : 0.0;
    const bool degenerate = !(outer_mean > 1e-6 * u_mean / (radius * radius)) || inner_count == 0;
    rep.degenerate.push_back(degenerate);
    const double ratio = degenerate ? std::nan("") : inner_mean / outer_mean;
    rep.ratios.push_back(ratio);
    if (!degenerate) rep.max_ratio = std::max(rep.max_ratio, ratio);
  }
  return rep;
}

}  // namespace suspvisc

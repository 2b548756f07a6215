#include "suspvisc/dilute.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>

#include "suspvisc/analytic_sphere.hpp"
#include "suspvisc/log.hpp"
#include "suspvisc/parallel.hpp"
#include "suspvisc/particle_indicator.hpp"
#include "suspvisc/random.hpp"
#include "suspvisc/sphere_quadrature.hpp"
#include "suspvisc/statistics.hpp"

namespace suspvisc {

namespace {

double frob_dot(const Matrix& a, const Matrix& b) { return (a.array() * b.array()).sum(); }

void check_strain(const Matrix& e, int dim) {
  check_dimension(dim);
  if (!e.allFinite() || !is_trace_free_symmetric(e, dim, 1e-12)) {
    throw ValidationError("strain must be a trace-free symmetric matrix");
  }
}

// Symmetric trace-free part within the active block.
Matrix deviator(const Matrix& g, int dim) {
  Matrix s = 0.5 * (g + g.transpose());
  for (int i = dim; i < 3; ++i) {
    s.row(i).setZero();
    s.col(i).setZero();
  }
  const double tr = s.trace() / dim;
  for (int i = 0; i < dim; ++i) s(i, i) -= tr;
  return s;
}

// Coordinates of `m` in the orthonormal basis.
Eigen::VectorXd coordinates(const StrainBasis& basis, const Matrix& m) {
  Eigen::VectorXd c(static_cast<Eigen::Index>(basis.size()));
  for (std::size_t a = 0; a < basis.size(); ++a) c(static_cast<Eigen::Index>(a)) = frob_dot(basis.elements[a], m);
  return c;
}

// The four reflected fields entering the traction difference for one strain.
struct Reflections {
  Point y;
  RadialAnsatz at_y;        // psi^y[B]
  RadialAnsatz back_at_0;   // psi^0[S_y]
  RadialAnsatz second_y;    // psi^y[S_0]
  RadialAnsatz second_0;    // psi^0[S']

  Reflections(int dim, const Point& offset, const Matrix& b)
      : y(offset),
        at_y(single_sphere_solution(dim, b)),
        back_at_0(single_sphere_solution(dim, deviator(at_y.gradient(-offset), dim))),
        second_y(single_sphere_solution(
            dim, deviator(single_sphere_solution(dim, b).gradient(offset), dim))),
        second_0(single_sphere_solution(dim, deviator(second_y.gradient(-offset), dim))) {}

  Point traction(const Point& nu) const {
    return at_y.stress(nu - y) * nu + back_at_0.traction(nu) + second_y.stress(nu - y) * nu +
           second_0.traction(nu);
  }
};

// Disturbance of the sphere at y continued by the rigid motion inside it.
Point extended_velocity(const RadialAnsatz& single, const Point& x) {
  if (x.norm() < 1.0) return -(single.strain() * x);
  return single.velocity(x);
}

Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& m) { return 0.5 * (m + m.transpose()); }

void check_offset(int dim, const Point& y) {
  for (int k = dim; k < 3; ++k) {
    if (y[k] != 0.0) throw ValidationError("offset has components outside the dimension");
  }
}

}  // namespace

// ---------------------------------------------------------------------------

DiluteFit einstein_fit(std::span<const ViscosityTensor> points) {
  if (points.size() < 3) throw ValidationError("Einstein fit needs at least three points");
  const ViscosityMeta& m0 = points.front().meta;
  std::vector<double> distinct;
  for (const auto& p : points) {
    const auto& m = p.meta;
    if (m.dim != m0.dim || m.box != m0.box || m.n != m0.n || m.theta != m0.theta ||
        m.process != m0.process) {
      throw ValidationError("Einstein fit points disagree on (dim, box, n, theta, process)");
    }
    if (p.B.rows() != points.front().B.rows() || p.B.rows() == 0) {
      throw ValidationError("Einstein fit points have inconsistent tensors");
    }
    if (std::none_of(distinct.begin(), distinct.end(),
                     [&](double v) { return std::abs(v - m.phi_realized) < 1e-12; })) {
      distinct.push_back(m.phi_realized);
    }
  }
  if (distinct.size() < 3) throw ValidationError("Einstein fit needs at least three distinct phi");

  const auto np = static_cast<Eigen::Index>(points.size());
  const Eigen::Index m = points.front().B.rows();
  DiluteFit fit;
  fit.dim = m0.dim;
  Eigen::MatrixXd design(np, 2);
  Eigen::MatrixXd design2(np, 3);
  for (Eigen::Index k = 0; k < np; ++k) {
    const double phi = points[static_cast<std::size_t>(k)].meta.phi_realized;
    fit.phi.push_back(phi);
    design.row(k) << 1.0, phi;
    design2.row(k) << 1.0, phi, phi * phi;
  }
  bool any_zero = false;
  for (const auto& p : points) {
    if (p.stderr_.size() == 0 || (p.stderr_.array() <= 0.0).any() || p.isotropic_stderr() <= 0.0) {
      any_zero = true;
    }
  }
  fit.unit_weights = any_zero;

  fit.slope.resize(m, m);
  fit.slope_stderr.resize(m, m);
  fit.intercept.resize(m, m);
  fit.intercept_stderr.resize(m, m);
  fit.intercept_consistent = true;
  Eigen::VectorXd y(np);
  Eigen::VectorXd sigma(np);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      for (Eigen::Index k = 0; k < np; ++k) {
        const auto& p = points[static_cast<std::size_t>(k)];
        y(k) = p.B(i, j);
        sigma(k) = any_zero ? 1.0 : p.stderr_(i, j);
      }
      const LinearFit lf = weighted_least_squares(design, y, sigma, any_zero);
      fit.intercept(i, j) = lf.coefficients(0);
      fit.slope(i, j) = lf.coefficients(1);
      fit.intercept_stderr(i, j) = std::sqrt(std::max(0.0, lf.covariance(0, 0)));
      fit.slope_stderr(i, j) = std::sqrt(std::max(0.0, lf.covariance(1, 1)));
      const double target = i == j ? 1.0 : 0.0;
      if (std::abs(fit.intercept(i, j) - target) > 3.0 * fit.intercept_stderr(i, j) + 1e-10) {
        fit.intercept_consistent = false;
      }
    }
  }

  for (Eigen::Index k = 0; k < np; ++k) {
    const auto& p = points[static_cast<std::size_t>(k)];
    y(k) = p.isotropic();
    sigma(k) = any_zero ? 1.0 : p.isotropic_stderr();
  }
  const LinearFit iso = weighted_least_squares(design, y, sigma, any_zero);
  fit.isotropic_intercept = iso.coefficients(0);
  fit.isotropic_slope = iso.coefficients(1);
  fit.isotropic_intercept_stderr = std::sqrt(std::max(0.0, iso.covariance(0, 0)));
  fit.isotropic_slope_stderr = std::sqrt(std::max(0.0, iso.covariance(1, 1)));
  fit.residuals.assign(iso.residuals.data(), iso.residuals.data() + iso.residuals.size());
  fit.leverage.assign(iso.leverage.data(), iso.leverage.data() + iso.leverage.size());
  fit.chi_square = iso.chi_square;

  const LinearFit quad = weighted_least_squares(design2, y, sigma, any_zero);
  fit.curvature = quad.coefficients(2);
  const double cse = std::sqrt(std::max(0.0, quad.covariance(2, 2)));
  const bool usable = !(any_zero && quad.dof <= 0);
  fit.curvature_z = usable && cse > 0.0 ? fit.curvature / cse : 0.0;
  fit.curvature_flag = usable && std::abs(fit.curvature_z) > 3.0;
  return fit;
}

Eigen::MatrixXd renormalized_B1(double lambda, int dim) {
  check_dimension(dim);
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ValidationError("intensity must be >= 0");
  const StrainBasis basis = strain_basis(dim);
  const auto m = static_cast<Eigen::Index>(basis.size());
  Eigen::MatrixXd out(m, m);
  for (Eigen::Index a = 0; a < m; ++a) {
    for (Eigen::Index b = 0; b < m; ++b) {
      const Matrix& ea = basis.elements[static_cast<std::size_t>(a)];
      const Matrix& eb = basis.elements[static_cast<std::size_t>(b)];
      // Polarization of the quadratic whole-space energy.
      const double sum = whole_space_energy(dim, ea + eb);
      const double diff = whole_space_energy(dim, ea - eb);
      out(a, b) = lambda * 0.25 * (sum - diff);
    }
  }
  return out;
}

Eigen::MatrixXd renormalized_B1_numeric(double lambda, int dim, double box, const SolverConfig& sc) {
  check_dimension(dim);
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ValidationError("intensity must be >= 0");
  ParticleConfig config;
  config.dim = dim;
  config.box = box;
  config.centers.push_back(Point::Zero());
  for (int k = 0; k < dim; ++k) config.centers[0][k] = 0.5 * box;
  validate(config);
  const StrainBasis basis = strain_basis(dim);
  const Eigen::MatrixXd b = config_tensor(config, sc, basis);
  const auto m = static_cast<Eigen::Index>(basis.size());
  return lambda * std::pow(box, dim) * (b - Eigen::MatrixXd::Identity(m, m));
}

// ---------------------------------------------------------------------------

ClusterReport cluster_terms(const ParticleConfig& config, const Matrix& strain,
                            const SolverConfig& sc, const ClusterOptions& options) {
  validate(config);
  validate(sc);
  check_strain(strain, config.dim);
  const std::size_t np = config.size();
  if (np > 4 && !options.allow_large) {
    throw ValidationError("cluster terms for more than 4 particles need allow_large (2^N solves)");
  }
  if (np > 20) throw ValidationError("cluster terms support at most 20 particles");
  const std::size_t subsets = std::size_t{1} << np;
  ClusterReport r;
  r.dim = config.dim;
  r.particles = np;
  r.strain = strain;
  r.theta = sc.theta;
  r.n = sc.n;
  r.energies.assign(subsets, 0.0);
  parallel_for(subsets, options.jobs, [&](std::size_t mask) {
    ParticleConfig sub = config;
    sub.centers.clear();
    for (std::size_t k = 0; k < np; ++k) {
      if (mask & (std::size_t{1} << k)) sub.centers.push_back(config.centers[k]);
    }
    const CorrectorField f = solve_corrector(sub, strain, sc);
    r.energies[mask] = dissipation(f, sub, sc.theta);
  });

  r.deltas.assign(subsets, 0.0);
  for (std::size_t s = 0; s < subsets; ++s) {
    // Inclusion-exclusion over the subsets T of S.
    double d = 0.0;
    for (std::size_t t = s;; t = (t - 1) & s) {
      const int parity = std::popcount(s) - std::popcount(t);
      d += (parity % 2 == 0 ? 1.0 : -1.0) * r.energies[t];
      if (t == 0) break;
    }
    r.deltas[s] = d;
  }
  r.order_sums.assign(np + 1, 0.0);
  CompensatedSum total;
  for (std::size_t s = 0; s < subsets; ++s) {
    r.order_sums[static_cast<std::size_t>(std::popcount(s))] += r.deltas[s];
    total.add(r.deltas[s]);
  }
  const double full = r.energies[subsets - 1];
  r.telescoping_residual = std::abs(full - total.value()) / std::max(std::abs(full), 1e-300);
  return r;
}

// ---------------------------------------------------------------------------

double near_kernel_reflection(int dim, const Point& y, const Matrix& strain) {
  check_strain(strain, dim);
  check_offset(dim, y);
  if (!(y.norm() > 2.0)) throw ValidationError("offset must exceed 2 (disjoint spheres)");
  const Reflections refl(dim, y, strain);
  auto integrand = [&](const Point& nu) {
    Eigen::VectorXd v(1);
    v(0) = refl.at_y.velocity(nu - y).dot(refl.traction(nu));
    return v;
  };
  return integrate_sphere(dim, integrand, 1e-9, 1e-18).value(0);
}

Eigen::MatrixXd near_kernel_reflection_tensor(int dim, const Point& y, int surface_order) {
  check_dimension(dim);
  check_offset(dim, y);
  if (!(y.norm() > 2.0)) throw ValidationError("offset must exceed 2 (disjoint spheres)");
  const StrainBasis basis = strain_basis(dim);
  const std::size_t m = basis.size();
  std::vector<Reflections> refl;
  refl.reserve(m);
  for (const auto& e : basis.elements) refl.emplace_back(dim, y, e);
  const SurfaceRule rule = sphere_rule(dim, surface_order);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  std::vector<Point> vel(m);
  std::vector<Point> trac(m);
  for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
    const Point& nu = rule.nodes[q];
    for (std::size_t a = 0; a < m; ++a) {
      vel[a] = refl[a].at_y.velocity(nu - y);
      trac[a] = refl[a].traction(nu);
    }
    for (std::size_t a = 0; a < m; ++a) {
      for (std::size_t b = 0; b < m; ++b) {
        out(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) +=
            rule.weights[q] * vel[a].dot(trac[b]);
      }
    }
  }
  return symmetrized(out);
}

Eigen::MatrixXd far_kernel_tensor(int dim, const Point& y, int surface_order) {
  check_dimension(dim);
  check_offset(dim, y);
  const StrainBasis basis = strain_basis(dim);
  const std::size_t m = basis.size();
  std::vector<RadialAnsatz> single;
  for (const auto& e : basis.elements) single.push_back(single_sphere_solution(dim, e));
  const SurfaceRule rule = sphere_rule(dim, surface_order);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  std::vector<Point> vel(m);
  std::vector<Point> trac(m);
  for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
    const Point& nu = rule.nodes[q];
    for (std::size_t a = 0; a < m; ++a) {
      vel[a] = extended_velocity(single[a], nu - y);
      trac[a] = single[a].traction(nu) + 2.0 * (basis.elements[a] * nu);
    }
    for (std::size_t a = 0; a < m; ++a) {
      for (std::size_t b = 0; b < m; ++b) {
        out(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) +=
            rule.weights[q] * vel[a].dot(trac[b]);
      }
    }
  }
  return symmetrized(out);
}

NearKernelValue bg_near_kernel(int dim, const Point& y, const Matrix& strain, const SolverConfig& sc,
                               const NearKernelOptions& options) {
  validate(sc);
  check_strain(strain, dim);
  check_offset(dim, y);
  const int d = dim;
  return [&] {
    NearKernelValue out;
    out.reflection = near_kernel_reflection(d, y, strain);
    if (!options.numeric) return out;
    const double r = y.norm();
    const double factor = options.box_factor > 0.0 ? options.box_factor : (d == 2 ? 16.0 : 4.0);
    const double max_box = options.max_box > 0.0 ? options.max_box : (d == 2 ? 256.0 : 32.0);
    const double box = std::max(options.min_box, factor * r);
    out.box = box;
    if (box > max_box) {
      out.box_limited = true;
      log_warning("near kernel offset needs a box above max_box; reflection value only");
      return out;
    }
    int n = static_cast<int>(std::lround(box * options.voxels_per_diameter / 2.0));
    n += n % 2;
    n = std::max(n, 16);
    const double h = box / n;
    if (!(r - 2.0 > 6.0 * h)) {
      throw ValidationError("near kernel offset too small for the grid (gap must exceed 6 voxels)");
    }
    out.n = n;

    ParticleConfig one;
    one.dim = d;
    one.box = box;
    Point c0 = Point::Zero();
    for (int k = 0; k < d; ++k) c0[k] = 0.5 * box;
    one.centers.push_back(c0);
    ParticleConfig two = one;
    two.centers.push_back(wrap_point(c0 + y, box, d));
    validate(two);

    SolverConfig local = sc;
    local.n = n;
    local.tolerance = std::min(sc.tolerance, 1e-8);
    const CorrectorField f2 = solve_corrector(two, strain, local);
    const CorrectorField f1 = solve_corrector(one, strain, local);
    const SpectralGrid& g = *f2.grid;
    const RadialAnsatz psi_y = single_sphere_solution(d, strain);
    const Point yc = two.centers[1];
    const int nc = sym_components(d);

    // Difference velocity moved from the nodes to the cell centres.
    std::array<RealBuffer, 3> w;
    {
      ComplexBuffer spec = g.make_spectral();
      const double k0 = 2.0 * std::numbers::pi / box;
      for (int a = 0; a < d; ++a) {
        for (std::size_t k = 0; k < g.spectral_size(); ++k) {
          const auto m = g.wave_numbers(k);
          cplx shift(1.0, 0.0);
          for (int b = 0; b < d; ++b) shift *= 0.5 * (1.0 + std::exp(cplx(0.0, k0 * m[b] * h)));
          spec[k] = shift * (f2.velocity[a][k] - f1.velocity[a][k]);
        }
        w[a] = g.make_real();
        g.inverse(spec.data(), w[a].data());
      }
    }

    // Outside both spheres the difference field and psi^y are Stokes flows,
    // so J(R) = int_{|x|=R} (psi^y . Sigma_w nu - w . sigma[psi^y] nu) does not
    // depend on R. At R = 1 the second term vanishes (w is rigid there and
    // psi^y exerts no net force or torque), leaving the wanted pairing. J is
    // averaged over an annulus in the fluid with a smooth radial weight.
    auto annulus = [&](double r1, double r2) {
      const double width = r2 - r1;
      CompensatedSum sum;
      std::array<int, 3> lo{0, 0, 0};
      std::array<int, 3> hi{0, 0, 0};
      for (int a = 0; a < d; ++a) {
        lo[a] = static_cast<int>(std::floor((c0[a] - r2) / h)) - 1;
        hi[a] = static_cast<int>(std::floor((c0[a] + r2) / h)) + 1;
      }
      for (int i0 = lo[0]; i0 <= hi[0]; ++i0) {
        for (int i1 = lo[1]; i1 <= hi[1]; ++i1) {
          for (int i2 = lo[2]; i2 <= hi[2]; ++i2) {
            const std::size_t x = g.real_index(i0, i1, i2);
            Point rel = Point::Zero();
            for (int a = 0; a < d; ++a) rel[a] = (std::array<int, 3>{i0, i1, i2}[a] + 0.5) * h - c0[a];
            const double dist = rel.norm();
            if (!(dist > r1 && dist < r2)) continue;
            const double s = std::sin(std::numbers::pi * (dist - r1) / width);
            const double weight = s * s * s * s / (0.375 * width);
            const Point nu = rel / dist;
            Matrix sigma_w = Matrix::Zero();
            for (int c = 0; c < nc; ++c) {
              const auto [i, j] = sym_pair(d, c);
              const double v = 2.0 * (f2.strain_field[c][x] - f1.strain_field[c][x]);
              sigma_w(i, j) = v;
              sigma_w(j, i) = v;
            }
            const double q = f2.pressure[x] - f1.pressure[x];
            for (int a = 0; a < d; ++a) sigma_w(a, a) -= q;
            const Point from_y = periodic_displacement(yc, c0 + rel, box, d);
            Point wv = Point::Zero();
            for (int a = 0; a < d; ++a) wv[a] = w[a][x];
            const double integrand = psi_y.velocity(from_y).dot(sigma_w * nu) -
                                     wv.dot(psi_y.stress(from_y) * nu);
            sum.add(weight * integrand);
          }
        }
      }
      return sum.value() * g.cell_volume();
    };
    const double r1 = 1.0 + 2.0 * h;
    const double r2 = std::min(r - 1.0 - 2.0 * h, 3.0);
    const double mid = 0.5 * (r1 + r2);
    out.numeric = annulus(r1, r2);
    out.annulus_change = std::abs(annulus(r1, mid) - annulus(mid, r2));
    out.numeric_available = true;
    return out;
  }();
}

// ---------------------------------------------------------------------------

SecondOrderTerm second_order_term(const PairCorrelation& pc, const Matrix& strain,
                                  const SecondOrderOptions& options) {
  if (pc.empty || pc.bins() == 0) throw ValidationError("pair correlation is empty");
  const int dim = pc.dim;
  check_strain(strain, dim);
  if (options.radial_nodes < 1 || options.subdivide < 1) {
    throw ValidationError("radial quadrature needs at least one node per bin");
  }
  if (!pc.tail_null) {
    const bool decays = pc.decay_exponent.has_value() &&
                        *pc.decay_exponent - 2.0 * pc.decay_exponent_stderr > 0.0;
    if (!decays) {
      std::ostringstream os;
      os << "renormalization hypothesis violated: h2 does not decay";
      if (pc.decay_exponent) {
        os << " (fitted exponent " << *pc.decay_exponent << " +- " << pc.decay_exponent_stderr << ")";
      }
      throw RenormalizationError(os.str());
    }
  }

  const StrainBasis basis = strain_basis(dim);
  const auto m = static_cast<Eigen::Index>(basis.size());
  const SurfaceRule dirs = sphere_rule(dim, options.angular_order);
  const GaussRule gauss = gauss_legendre(options.radial_nodes);
  const double hardcore = 2.0 + pc.gap;
  const double lambda2 = pc.intensity * pc.intensity;

  auto angular = [&](double r, bool near) {
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(m, m);
    for (std::size_t q = 0; q < dirs.nodes.size(); ++q) {
      const Point y = r * dirs.nodes[q];
      acc += dirs.weights[q] * (near ? near_kernel_reflection_tensor(dim, y, options.near_surface_order)
                                     : far_kernel_tensor(dim, y, options.far_surface_order));
    }
    return acc;
  };
  // Gauss points of [a, b] with weights including the radial Jacobian.
  auto radial_points = [&](double a, double b) {
    std::vector<std::pair<double, double>> pts;
    const double step = (b - a) / options.subdivide;
    for (int s = 0; s < options.subdivide; ++s) {
      const double lo = a + s * step;
      for (std::size_t k = 0; k < gauss.nodes.size(); ++k) {
        const double r = lo + 0.5 * step * (gauss.nodes[k] + 1.0);
        pts.emplace_back(r, 0.5 * step * gauss.weights[k] * std::pow(r, dim - 1));
      }
    }
    return pts;
  };

  const Eigen::VectorXd c = coordinates(basis, strain);
  struct BinPart {
    Eigen::MatrixXd wn;
    Eigen::MatrixXd wf;
    /// Part of wf from radii inside the exclusion distance.
    Eigen::MatrixXd wf_excl;
    Eigen::MatrixXd last_near;
    Eigen::MatrixXd last_far;
    std::vector<QuadratureRow> rows;
    std::vector<double> near_r;
    std::vector<double> near_v;
  };
  std::vector<BinPart> parts(pc.bins());
  parallel_for(pc.bins(), options.jobs, [&](std::size_t b) {
    BinPart& part = parts[b];
    const double lo = pc.edges[b];
    const double hi = pc.edges[b + 1];
    part.wn = Eigen::MatrixXd::Zero(m, m);
    part.wf = Eigen::MatrixXd::Zero(m, m);
    part.wf_excl = Eigen::MatrixXd::Zero(m, m);
    part.last_near = Eigen::MatrixXd::Zero(m, m);
    // Far kernel over the whole bin against h2.
    for (const auto& [r, w] : radial_points(lo, hi)) {
      const Eigen::MatrixXd a = angular(r, false);
      part.wf += w * a;
      if (r < hardcore) part.wf_excl += w * a;
      part.last_far = a;
      QuadratureRow row;
      row.radius = r;
      row.weight = w;
      row.far_average = c.dot(a * c);
      row.f2 = pc.f2[b];
      row.h2 = pc.h2[b];
      part.rows.push_back(row);
    }
    // Near kernel only where the spheres are disjoint and f2 can be nonzero;
    // a straddling bin is rescaled from the full to the partial shell.
    if (hi > hardcore) {
      const double a0 = std::max(lo, hardcore);
      const double shell = std::pow(hi, dim) - std::pow(lo, dim);
      const double partial = std::pow(hi, dim) - std::pow(a0, dim);
      const double scale = partial > 0.0 ? shell / partial : 0.0;
      for (const auto& [r, w] : radial_points(a0, hi)) {
        if (!(r > 2.0)) continue;
        const Eigen::MatrixXd a = angular(r, true);
        part.wn += scale * w * a;
        part.last_near = a;
        part.near_r.push_back(r);
        part.near_v.push_back(a.trace() / static_cast<double>(m));
        QuadratureRow row;
        row.radius = r;
        row.weight = scale * w;
        row.near_average = c.dot(a * c);
        row.f2 = pc.f2[b];
        row.h2 = pc.h2[b];
        part.rows.push_back(row);
      }
    }
  });

  SecondOrderTerm out;
  out.dim = dim;
  out.near = Eigen::MatrixXd::Zero(m, m);
  out.far = Eigen::MatrixXd::Zero(m, m);
  Eigen::MatrixXd var = Eigen::MatrixXd::Zero(m, m);
  double far_var = 0.0;
  double sampled_var = 0.0;
  Eigen::MatrixXd far_excl = Eigen::MatrixXd::Zero(m, m);
  Eigen::MatrixXd last_near = Eigen::MatrixXd::Zero(m, m);
  Eigen::MatrixXd last_far = Eigen::MatrixXd::Zero(m, m);
  std::vector<double> near_r;
  std::vector<double> near_v;
  for (std::size_t b = 0; b < pc.bins(); ++b) {
    const BinPart& part = parts[b];
    out.near += pc.f2[b] * part.wn;
    out.far += pc.h2[b] * part.wf;
    var += (pc.stderr_[b] * (part.wn + part.wf)).cwiseAbs2();
    far_var += std::pow(pc.stderr_[b] * c.dot(part.wf * c), 2);
    far_excl += pc.h2[b] * part.wf_excl;
    sampled_var += std::pow(pc.stderr_[b] * c.dot((part.wf - part.wf_excl) * c), 2);
    if (!part.near_r.empty()) last_near = part.last_near;
    last_far = part.last_far;
    near_r.insert(near_r.end(), part.near_r.begin(), part.near_r.end());
    near_v.insert(near_v.end(), part.near_v.begin(), part.near_v.end());
    out.trace.insert(out.trace.end(), part.rows.begin(), part.rows.end());
  }
  std::stable_sort(out.trace.begin(), out.trace.end(),
                   [](const QuadratureRow& a, const QuadratureRow& b) { return a.radius < b.radius; });
  double cn = 0.0;
  double cf = 0.0;
  for (auto& row : out.trace) {
    cn += row.f2 * row.weight * row.near_average;
    cf += row.h2 * row.weight * row.far_average;
    row.near_cumulative = cn;
    row.far_cumulative = cf;
  }

  out.total = out.near + out.far;
  out.total_stderr = var.cwiseSqrt();
  out.near_scalar = c.dot(out.near * c);
  out.far_scalar = c.dot(out.far * c);
  out.far_scalar_stderr = std::sqrt(far_var);
  out.far_exclusion_scalar = c.dot(far_excl * c);
  out.far_sampled_scalar = out.far_scalar - out.far_exclusion_scalar;
  out.far_sampled_stderr = std::sqrt(sampled_var);
  out.scalar = c.dot(out.total * c);
  double scalar_var = 0.0;
  for (Eigen::Index a = 0; a < m; ++a) {
    for (Eigen::Index b = 0; b < m; ++b) scalar_var += std::pow(c(a) * c(b) * out.total_stderr(a, b), 2);
  }
  out.scalar_stderr = std::sqrt(scalar_var);

  // Tails beyond the last radius, from fitted power laws.
  const double rmax = pc.edges.back();
  double p = 2.0 * dim;
  std::vector<double> fr;
  std::vector<double> fv;
  for (std::size_t k = 0; k < near_r.size(); ++k) {
    if (near_r[k] >= 0.5 * rmax) {
      fr.push_back(near_r[k]);
      fv.push_back(near_v[k]);
    }
  }
  if (fr.size() >= 3) p = fit_decay_exponent(fr, fv).exponent;
  const double near_edge = c.dot(last_near * c);
  out.near_tail = p > dim ? lambda2 * near_edge * std::pow(rmax, dim) / (p - dim)
                          : std::numeric_limits<double>::infinity();
  if (!pc.tail_null) {
    const double gamma = *pc.decay_exponent;
    const double h2_edge = [&] {
      double hmax = 0.0;
      for (std::size_t b = 0; b < pc.bins(); ++b) {
        if (pc.bin_center(b) >= pc.fit_min) hmax = std::max(hmax, std::abs(pc.h2[b]));
      }
      return hmax * std::pow(std::max(pc.fit_min, 1.0) / rmax, gamma);
    }();
    // Worst case for the far kernel: |K| ~ r^{-d}.
    const double far_edge = std::abs(c.dot(last_far * c));
    out.far_tail = gamma > 0.0 ? far_edge * h2_edge * std::pow(rmax, dim) / gamma
                               : std::numeric_limits<double>::infinity();
  }
  const double tails = std::abs(out.near_tail) + std::abs(out.far_tail);
  out.tail_fraction = std::abs(out.scalar) > 0.0 ? tails / std::abs(out.scalar)
                                                 : (tails > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
  if (!(out.tail_fraction <= options.tail_tolerance)) {
    std::ostringstream os;
    os << "second-order integrals not converged within r = " << rmax << ": tail " << tails
       << " against total " << out.scalar;
    throw ValidationError(os.str());
  }

  const double lambda = pc.intensity;
  out.ceiling = options.ceiling_constant * pc.intensity2 * std::abs(std::log(lambda));
  out.within_ceiling = std::abs(out.scalar) <= out.ceiling;

  // Isotropy: off-diagonal entries and diagonal spread against stderr.
  const double mean_diag = out.total.trace() / static_cast<double>(m);
  double z = 0.0;
  for (Eigen::Index a = 0; a < m; ++a) {
    for (Eigen::Index b = 0; b < m; ++b) {
      const double target = a == b ? mean_diag : 0.0;
      // Floor at round-off: entries that vanish by symmetry carry no
      // statistical error of their own.
      const double se = std::max(out.total_stderr(a, b), 1e-12 * std::abs(mean_diag) + 1e-300);
      z = std::max(z, std::abs(out.total(a, b) - target) / se);
    }
  }
  out.anisotropy_z = z;
  return out;
}

// ---------------------------------------------------------------------------

ConvergenceStudy finite_volume_convergence(const EnsembleSpec& spec, std::span<const double> boxes,
                                           std::span<const int> resolutions,
                                           const SolverConfig& sc, std::size_t n_configs,
                                           const ConvergenceOptions& options) {
  validate(spec);
  if (boxes.size() < 3) throw ValidationError("convergence study needs at least three boxes");
  if (boxes.size() != resolutions.size()) throw ValidationError("one resolution per box is required");
  const double h0 = boxes[0] / resolutions[0];
  for (std::size_t k = 0; k < boxes.size(); ++k) {
    if (std::abs(boxes[k] / resolutions[k] - h0) > 1e-9 * h0) {
      throw ValidationError("inconsistent voxel size across boxes");
    }
    if (k > 0 && !(boxes[k] > boxes[k - 1])) throw ValidationError("boxes must increase");
  }
  ConvergenceStudy study;
  const StrainBasis basis = strain_basis(spec.dim);
  const auto m = static_cast<double>(basis.size());
  for (std::size_t k = 0; k < boxes.size(); ++k) {
    EnsembleSpec s = spec;
    s.box = boxes[k];
    SolverConfig local = sc;
    local.n = resolutions[k];
    ConvergenceLevel level;
    level.box = boxes[k];
    level.n = resolutions[k];
    level.tensor = assemble_tensor(s, local, n_configs, {options.jobs, false});
    level.isotropic = level.tensor.isotropic();
    level.isotropic_stderr = level.tensor.isotropic_stderr();
    if (spec.volume_fraction > 0.0) {
      const Eigen::MatrixXd b1 = renormalized_B1_numeric(spec.number_density(), spec.dim, boxes[k], local);
      level.first_order = b1.trace() / m;
      if (options.pair_cutoff > 0.0) {
        const ParticleConfig config = generate([&] {
          EnsembleSpec c = s;
          c.seed = derive_seed(s.seed, 0);
          return c;
        }());
        const Matrix e = basis.elements.front();
        double e_empty = 0.0;
        {
          ParticleConfig none = config;
          none.centers.clear();
          e_empty = dissipation(solve_corrector(none, e, local), none, local.theta);
        }
        auto energy = [&](std::vector<Point> centers) {
          ParticleConfig sub = config;
          sub.centers = std::move(centers);
          return dissipation(solve_corrector(sub, e, local), sub, local.theta);
        };
        std::vector<std::optional<double>> singles(config.size());
        auto single = [&](std::size_t i) {
          if (!singles[i]) singles[i] = energy({config.centers[i]});
          return *singles[i];
        };
        for (std::size_t i = 0; i < config.size(); ++i) {
          for (std::size_t j = i + 1; j < config.size(); ++j) {
            const double r = periodic_distance(config.centers[i], config.centers[j], config.box, config.dim);
            if (r >= options.pair_cutoff) continue;
            const double pair = energy({config.centers[i], config.centers[j]});
            level.second_order_partial += pair - single(i) - single(j) + e_empty;
            ++level.close_pairs;
          }
        }
      }
    }
    study.levels.push_back(std::move(level));
  }
  std::vector<double> ls;
  std::vector<double> ds;
  for (std::size_t k = 0; k + 1 < study.levels.size(); ++k) {
    const auto& a = study.levels[k];
    const auto& b = study.levels[k + 1];
    study.differences.push_back(std::abs(b.isotropic - a.isotropic));
    study.difference_stderr.push_back(std::hypot(a.isotropic_stderr, b.isotropic_stderr));
    ls.push_back(a.box);
    ds.push_back(study.differences.back());
  }
  study.monotone = true;
  for (std::size_t k = 0; k + 1 < study.differences.size(); ++k) {
    const double tol = 2.0 * std::hypot(study.difference_stderr[k], study.difference_stderr[k + 1]);
    if (study.differences[k + 1] > study.differences[k] + tol) study.monotone = false;
  }
  const auto positive = std::count_if(ds.begin(), ds.end(), [](double v) { return v > 0.0; });
  if (positive >= 2) {
    const PowerLawFit fit = fit_decay_exponent(ls, ds);
    study.rate = fit.exponent;
    study.rate_stderr = fit.exponent_stderr;
    study.rate_available = true;
  }
  return study;
}

}  // namespace suspvisc

#include <cmath>
#include <vector>

#include "doctest.h"
#include "suspvisc/effective_viscosity.hpp"
#include "suspvisc/errors.hpp"
#include "suspvisc/random.hpp"
#include "suspvisc/spectral_grid.hpp"
#include "suspvisc/spectral_stokes.hpp"

using namespace suspvisc;

namespace {

SymField random_sym(const SpectralGrid& g, std::uint64_t seed) {
  Rng rng(seed);
  SymField t(sym_components(g.dim()), g.make_real());
  for (auto& c : t)
    for (auto& v : c) v = rng.normal();
  return t;
}

double sym_dot(int dim, const SymField& a, const SymField& b) {
  double s = 0.0;
  for (int c = 0; c < sym_components(dim); ++c)
    for (std::size_t i = 0; i < a[c].size(); ++i) s += sym_multiplicity(dim, c) * a[c][i] * b[c][i];
  return s;
}

ParticleConfig single(int dim, double box) {
  ParticleConfig c;
  c.dim = dim;
  c.box = box;
  Point p = Point::Zero();
  for (int i = 0; i < dim; ++i) p[i] = box / 2;
  c.centers = {p};
  return c;
}

SolverConfig small(int n) {
  SolverConfig sc;
  sc.n = n;
  sc.theta = 100.0;
  sc.tolerance = 1e-9;
  return sc;
}

}  // namespace

TEST_CASE("green operator annihilates constants, is symmetric and idempotent") {
  for (int dim : {2, 3}) {
    SpectralGrid g(dim, dim == 2 ? 32 : 16, 8.0);
    SymField c(sym_components(dim), g.make_real());
    for (int k = 0; k < sym_components(dim); ++k)
      for (auto& v : c[k]) v = 1.0 + k;
    for (const auto& comp : green_apply(g, c, 1.0))
      for (double v : comp) CHECK(std::abs(v) < 1e-12);

    const SymField a = random_sym(g, 1), b = random_sym(g, 2);
    const double ab = sym_dot(dim, green_apply(g, a, 1.0), b);
    const double ba = sym_dot(dim, a, green_apply(g, b, 1.0));
    CHECK(ab == doctest::Approx(ba).epsilon(1e-10));
    CHECK(sym_dot(dim, green_apply(g, a, 1.0), a) >= 0.0);

    const double mu0 = 3.0;
    SymField ga = green_apply(g, a, mu0);
    SymField scaled = ga;
    for (auto& comp : scaled)
      for (auto& v : comp) v *= 2.0 * mu0;
    const SymField gga = green_apply(g, scaled, mu0);
    double err = 0.0, ref = 0.0;
    for (int k = 0; k < sym_components(dim); ++k)
      for (std::size_t i = 0; i < ga[k].size(); ++i) {
        err = std::max(err, std::abs(gga[k][i] - ga[k][i]));
        ref = std::max(ref, std::abs(ga[k][i]));
      }
    CHECK(err < 1e-10 * ref);
  }
}

TEST_CASE("empty cell dissipates exactly |E|^2") {
  for (int dim : {2, 3}) {
    ParticleConfig c;
    c.dim = dim;
    c.box = 8.0;
    const Matrix e = strain_basis(dim).elements[0];
    const CorrectorField f = solve_corrector(c, e, small(16));
    CHECK(dissipation(f, c, 100.0) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("single sphere: monotone in theta, zero-mean strain, force free") {
  const ParticleConfig c = single(3, 6.0);
  const Matrix e = strain_basis(3).elements[3];
  double prev = 1.0;
  for (double theta : {10.0, 100.0, 1000.0}) {
    SolverConfig sc = small(24);
    sc.theta = theta;
    const CorrectorField f = solve_corrector(c, e, sc);
    const double d = dissipation(f, c, theta);
    CHECK(d > prev);
    prev = d;
    for (const auto& comp : f.strain_field) {
      double s = 0.0;
      for (double v : comp) s += v;
      CHECK(std::abs(s / comp.size()) < 1e-10);
    }
    for (const ParticleLoad& l : force_torque(f, c)) {
      CHECK(l.force.norm() < 1e-6);
      CHECK(l.torque.norm() < 1e-6);
    }
  }
}

TEST_CASE("clamping raises the dissipation") {
  const ParticleConfig c = single(2, 8.0);
  const Matrix e = strain_basis(2).elements[1];
  SolverConfig sc = small(32);
  const CorrectorField free = solve_corrector(c, e, sc);
  SpectralGrid g(2, sc.n, c.box);
  RealBuffer mask = g.make_real();
  for (std::size_t i = 0; i < mask.size(); ++i) {
    const Point x = g.node(i) - c.centers[0];
    mask[i] = x.norm() > 3.0 ? 1.0 : 0.0;
  }
  VectorField target{g.make_real(), g.make_real(), g.make_real()};
  sc.clamp = 1e3;
  const CorrectorField clamped = solve_clamped(c, mask, target, e, sc);
  CHECK(dissipation(clamped, c, sc.theta) >= dissipation(free, c, sc.theta) - 1e-12);
}

TEST_CASE("invalid solver settings are rejected") {
  SolverConfig sc;
  sc.n = 7;
  CHECK_THROWS_AS(validate(sc), ValidationError);
  sc = SolverConfig{};
  sc.theta = -1.0;
  CHECK_THROWS_AS(validate(sc), ValidationError);
  sc = SolverConfig{};
  sc.tolerance = 0.0;
  CHECK_THROWS_AS(validate(sc), ValidationError);
}

TEST_CASE("geometry hash depends on positions only through the configuration") {
  ParticleConfig a = single(3, 6.0);
  ParticleConfig b = a;
  CHECK(geometry_hash(a) == geometry_hash(b));
  b.centers[0][0] += 0.5;
  CHECK(geometry_hash(a) != geometry_hash(b));
}

TEST_CASE("mean-value ratio: both drivers give a bounded ratio") {
  ParticleConfig c;
  c.dim = 2;
  c.box = 12.0;
  const Point center(6.0, 6.0, 0.0);
  c.centers = {center + Point(2.5, 0, 0), center - Point(2.5, 0, 0)};
  const auto data = random_low_mode_fields(2, 2, 7);
  SolverConfig sc = small(64);
  for (MvpDriver d : {MvpDriver::exterior_force, MvpDriver::clamp}) {
    sc.clamp = d == MvpDriver::clamp ? 1e4 : 0.0;
    const MvpReport r = mvp_ratio(c, center, 5.0, data, sc, d);
    REQUIRE(r.ratios.size() == 2);
    CHECK(std::isfinite(r.max_ratio));
    CHECK(r.max_ratio > 0.0);
  }
  sc.clamp = 0.0;
  CHECK_THROWS_AS(mvp_ratio(c, center, 5.0, data, sc, MvpDriver::clamp), ValidationError);
  CHECK(parse_mvp_driver(to_string(MvpDriver::exterior_force)) == MvpDriver::exterior_force);
}

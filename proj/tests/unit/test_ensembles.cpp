#include <cmath>

#include "doctest.h"
#include "suspvisc/ensembles.hpp"
#include "suspvisc/errors.hpp"
#include "suspvisc/random.hpp"

using namespace suspvisc;

namespace {

EnsembleSpec spec(int dim, double box, double phi, ProcessKind kind = ProcessKind::random_sequential_addition,
                  double gap = 0.0, std::uint64_t seed = 1) {
  EnsembleSpec s;
  s.dim = dim;
  s.box = box;
  s.volume_fraction = phi;
  s.process = kind;
  s.gap = gap;
  s.seed = seed;
  return s;
}

ParticleConfig pair(double distance, double box = 16.0) {
  ParticleConfig c;
  c.dim = 3;
  c.box = box;
  c.centers.push_back(Point(4.0, 8.0, 8.0));
  c.centers.push_back(Point(4.0 + distance, 8.0, 8.0));
  return c;
}

}  // namespace

TEST_CASE("RSA counts follow the counting formula") {
  CHECK(generate(spec(3, 16, 0.01)).size() == 10);
  CHECK(generate(spec(2, 32, 0.02)).size() == 7);
  CHECK(generate(spec(3, 16, 0.0)).size() == 0);
}

TEST_CASE("generation is deterministic and hardcore") {
  for (auto kind : {ProcessKind::random_sequential_addition, ProcessKind::matern_ii,
                    ProcessKind::poisson_thinned, ProcessKind::cubic_lattice}) {
    // Poisson hardcore thinning cannot exceed intensity 1/(e v_excl).
    const double phi = kind == ProcessKind::poisson_thinned ? 0.01 : 0.05;
    const EnsembleSpec s = spec(3, 16, phi, kind, 0.5, 42);
    const ParticleConfig a = generate(s);
    const ParticleConfig b = generate(s);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.centers[i] == b.centers[i]);
    for (std::size_t i = 0; i < a.size(); ++i) {
      for (std::size_t j = i + 1; j < a.size(); ++j) {
        CHECK(periodic_distance(a.centers[i], a.centers[j], a.box, 3) >= 2.5 - 1e-12);
      }
    }
  }
}

TEST_CASE("invalid specs are rejected") {
  CHECK_THROWS_AS(generate(spec(3, 16, 0.5)), ValidationError);
  CHECK_THROWS_AS(generate(spec(3, 2, 0.01)), ValidationError);
  CHECK_THROWS_AS(generate(spec(4, 16, 0.01)), ValidationError);
  CHECK_THROWS_AS(generate(spec(3, 16, 0.05, ProcessKind::poisson_thinned, 0.5, 1)), ValidationError);
}

TEST_CASE("geometry diagnostics of simple configurations") {
  const GeometryDiagnostics g = geometry_diagnostics(pair(4.0), 1.0, 1.5);
  REQUIRE(g.gaps.size() == 2);
  CHECK(g.gaps[0] == doctest::Approx(2.0));
  CHECK(g.gaps[1] == doctest::Approx(2.0));
  CHECK(g.voronoi_inradii[0] == doctest::Approx(2.0));

  ParticleConfig one;
  one.dim = 3;
  one.box = 12.0;
  one.centers.push_back(Point(1.0, 2.0, 3.0));
  const GeometryDiagnostics s = geometry_diagnostics(one, 1.0, 1.5);
  CHECK(s.voronoi_inradii[0] == doctest::Approx(6.0));
  CHECK(s.isolated[0]);
}

TEST_CASE("diagnostics are translation invariant") {
  const ParticleConfig c = generate(spec(3, 16, 0.05, ProcessKind::random_sequential_addition, 0.0, 9));
  ParticleConfig t = c;
  const Point shift(3.3, -7.1, 11.9);
  for (auto& p : t.centers) p = wrap_point(p + shift, t.box, 3);
  const auto a = geometry_diagnostics(c, 1.0, 1.5);
  const auto b = geometry_diagnostics(t, 1.0, 1.5);
  for (std::size_t i = 0; i < a.gaps.size(); ++i) {
    CHECK(a.gaps[i] == doctest::Approx(b.gaps[i]).epsilon(1e-12));
    CHECK(a.voronoi_inradii[i] == doctest::Approx(b.voronoi_inradii[i]).epsilon(1e-12));
  }
}

TEST_CASE("pair correlation: hardcore hole, lattice intensity, Poisson null") {
  std::vector<ParticleConfig> rsa;
  for (int c = 0; c < 10; ++c) {
    rsa.push_back(generate(spec(3, 16, 0.1, ProcessKind::random_sequential_addition, 0.5, derive_seed(5, c))));
  }
  const PairCorrelation pc = pair_correlation(rsa);
  for (std::size_t b = 0; b < pc.bins(); ++b) {
    CHECK(pc.f2[b] >= 0.0);
    if (pc.edges[b + 1] <= 2.5) CHECK(pc.f2[b] == 0.0);
  }
  CHECK(intensity_estimates(pc).ordering_holds);

  const ParticleConfig lattice = generate(spec(3, 16, 0.05, ProcessKind::cubic_lattice));
  const PairCorrelation lp = pair_correlation(std::vector<ParticleConfig>{lattice});
  const double s = lattice.box / std::round(std::cbrt(static_cast<double>(lattice.size())));
  CHECK(lp.intensity == doctest::Approx(std::pow(s, -3.0)));

  std::vector<ParticleConfig> pois;
  for (int c = 0; c < 40; ++c) {
    pois.push_back(generate(spec(2, 64, 0.01, ProcessKind::poisson_thinned, 0.0, derive_seed(6, c))));
  }
  const PairCorrelation pp = pair_correlation(pois);
  std::size_t within = 0;
  std::size_t counted = 0;
  for (std::size_t b = 0; b < pp.bins(); ++b) {
    if (pp.edges[b] < 2.0 || pp.stderr_[b] <= 0.0) continue;
    ++counted;
    if (std::abs(pp.h2[b]) <= 3.0 * pp.stderr_[b]) ++within;
  }
  REQUIRE(counted > 0);
  CHECK(static_cast<double>(within) >= 0.95 * static_cast<double>(counted));
}

TEST_CASE("empty pair correlation is flagged") {
  ParticleConfig c;
  c.dim = 3;
  c.box = 16;
  const PairCorrelation pc = pair_correlation(std::vector<ParticleConfig>{c});
  CHECK(pc.empty);
  CHECK(pc.intensity == 0.0);
  CHECK_FALSE(pc.decay_exponent.has_value());
  const auto est = intensity_estimates(pc);
  CHECK(est.lambda == 0.0);
  CHECK(est.lambda2 == 0.0);
}

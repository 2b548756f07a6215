#include <cmath>

#include "doctest.h"
#include "suspvisc/effective_viscosity.hpp"
#include "suspvisc/ensembles.hpp"
#include "suspvisc/errors.hpp"
#include "suspvisc/spectral_stokes.hpp"

using namespace suspvisc;

namespace {

SolverConfig small(int n) {
  SolverConfig sc;
  sc.n = n;
  sc.theta = 100.0;
  sc.tolerance = 1e-9;
  return sc;
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

}  // namespace

TEST_CASE("strain basis is orthonormal, symmetric and traceless") {
  for (int dim : {2, 3}) {
    const StrainBasis b = strain_basis(dim);
    CHECK(b.elements.size() == static_cast<std::size_t>(dim * (dim + 1) / 2 - 1));
    for (std::size_t i = 0; i < b.elements.size(); ++i) {
      const Matrix& e = b.elements[i];
      CHECK((e - e.transpose()).norm() < 1e-15);
      CHECK(std::abs(e.trace()) < 1e-15);
      for (std::size_t j = 0; j < b.elements.size(); ++j) {
        const double dot = (e.array() * b.elements[j].array()).sum();
        CHECK(dot == doctest::Approx(i == j ? 1.0 : 0.0));
      }
    }
  }
}

TEST_CASE("no particles gives the identity tensor") {
  for (int dim : {2, 3}) {
    EnsembleSpec spec;
    spec.dim = dim;
    spec.box = 8.0;
    spec.volume_fraction = 0.0;
    const ViscosityTensor t = assemble_tensor(spec, small(16), 2);
    const auto id = Eigen::MatrixXd::Identity(t.B.rows(), t.B.cols());
    CHECK((t.B - id).norm() < 1e-12);
    CHECK(t.isotropic() == doctest::Approx(1.0));
  }
}

TEST_CASE("lattice tensor is symmetric with cubic symmetry") {
  const ParticleConfig c = single(3, 5.0);
  const StrainBasis basis = strain_basis(3);
  const Eigen::MatrixXd b = config_tensor(c, small(20), basis);
  CHECK((b - b.transpose()).norm() < 1e-8 * b.norm());
  CHECK(b(0, 0) > 1.0);
  CHECK(b(0, 0) == doctest::Approx(b(1, 1)).epsilon(1e-6));
  CHECK(b(2, 2) == doctest::Approx(b(3, 3)).epsilon(1e-6));
  CHECK(b(2, 2) == doctest::Approx(b(4, 4)).epsilon(1e-6));
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j)
      if (i != j) CHECK(std::abs(b(i, j)) < 1e-6 * b(0, 0));
}

TEST_CASE("off-diagonal entries match polarization") {
  ParticleConfig c = single(2, 8.0);
  c.centers[0] = Point(3.1, 4.7, 0.0);
  c.centers.push_back(Point(6.2, 2.0, 0.0));
  const StrainBasis basis = strain_basis(2);
  const SolverConfig sc = small(32);
  const Eigen::MatrixXd b = config_tensor(c, sc, basis);
  const Matrix sum = basis.elements[0] + basis.elements[1];
  const double d = dissipation(solve_corrector(c, sum, sc), c, sc.theta);
  CHECK(d == doctest::Approx(b(0, 0) + b(1, 1) + 2.0 * b(0, 1)).epsilon(1e-6));
}

TEST_CASE("sandwich bounds bracket and are three-dimensional only") {
  const SandwichBounds s = sandwich_bounds(single(3, 6.0));
  CHECK(s.upper.size() == 5);
  for (std::size_t i = 0; i < s.upper.size(); ++i) {
    CHECK(s.upper[i] > 1.0);
    CHECK(s.upper[i] >= s.lower_estimate[i]);
  }
  CHECK(s.inradii.front() == doctest::Approx(3.0));
  CHECK_THROWS_AS(sandwich_bounds(single(2, 6.0)), ValidationError);
}

#include <cmath>
#include <vector>

#include "doctest.h"
#include "suspvisc/errors.hpp"
#include "suspvisc/parallel.hpp"
#include "suspvisc/random.hpp"
#include "suspvisc/sphere_quadrature.hpp"
#include "suspvisc/statistics.hpp"

using namespace suspvisc;

TEST_CASE("compensated sum keeps small terms") {
  std::vector<double> v{1e16, 1.0, -1e16, 1.0};
  CHECK(compensated_sum(v) == doctest::Approx(2.0));
}

TEST_CASE("mean and standard error") {
  std::vector<double> v{1.0, 2.0, 3.0, 4.0};
  const MeanEstimate m = mean_and_stderr(v);
  CHECK(m.mean == doctest::Approx(2.5));
  CHECK(m.stderr_ == doctest::Approx(std::sqrt(1.6666666666666667 / 4.0)));
  CHECK(mean_and_stderr(std::vector<double>{7.0}).stderr_ == 0.0);
}

TEST_CASE("weighted least squares recovers an exact line") {
  Eigen::MatrixXd x(4, 2);
  Eigen::VectorXd y(4);
  Eigen::VectorXd s = Eigen::VectorXd::Ones(4);
  for (int i = 0; i < 4; ++i) {
    x(i, 0) = 1.0;
    x(i, 1) = i;
    y(i) = 3.0 - 2.0 * i;
  }
  const LinearFit f = weighted_least_squares(x, y, s, false);
  CHECK(f.coefficients(0) == doctest::Approx(3.0));
  CHECK(f.coefficients(1) == doctest::Approx(-2.0));
  CHECK(f.dof == 2);
}

TEST_CASE("power-law fit") {
  std::vector<double> x{1, 2, 4, 8};
  std::vector<double> y;
  for (double v : x) y.push_back(5.0 * std::pow(v, -3.0));
  const PowerLawFit f = fit_decay_exponent(x, y);
  CHECK(f.exponent == doctest::Approx(3.0));
  CHECK(f.prefactor == doctest::Approx(5.0));
}

TEST_CASE("seed derivation is deterministic and distinct") {
  CHECK(derive_seed(1, 2) == derive_seed(1, 2));
  CHECK(derive_seed(1, 2) != derive_seed(1, 3));
  CHECK(derive_seed(1, 2) != derive_seed(2, 2));
}

TEST_CASE("parallel_for visits every index once") {
  std::vector<int> hits(100, 0);
  parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i] += 1; });
  for (int h : hits) CHECK(h == 1);
}

TEST_CASE("sphere rules integrate constants and quadratics") {
  for (int dim : {2, 3}) {
    const SurfaceRule r = sphere_rule(dim, 8);
    double area = 0.0;
    double x2 = 0.0;
    for (std::size_t q = 0; q < r.nodes.size(); ++q) {
      area += r.weights[q];
      x2 += r.weights[q] * r.nodes[q][0] * r.nodes[q][0];
    }
    const double exact = dim == 2 ? 2.0 * M_PI : 4.0 * M_PI;
    CHECK(area == doctest::Approx(exact));
    CHECK(x2 == doctest::Approx(exact / dim));
  }
}

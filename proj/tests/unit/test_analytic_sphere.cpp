#include <cmath>
#include <vector>

#include "doctest.h"
#include "suspvisc/analytic_sphere.hpp"
#include "suspvisc/effective_viscosity.hpp"
#include "suspvisc/errors.hpp"
#include "suspvisc/random.hpp"
#include "suspvisc/statistics.hpp"

using namespace suspvisc;

TEST_CASE("rigid boundary condition and Stokes residual") {
  for (int dim : {2, 3}) {
    for (const Matrix& e : strain_basis(dim).elements) {
      const RadialAnsatz a = single_sphere_solution(dim, e);
      Rng rng(3);
      for (int k = 0; k < 20; ++k) {
        Point x = Point::Zero();
        for (int i = 0; i < dim; ++i) x[i] = rng.normal();
        x /= x.norm();
        CHECK((a.velocity(x) + e * x).norm() < 1e-12);
      }
      for (double r : {1.0, 1.5, 3.0, 10.0, 100.0}) CHECK(a.residual(r) < 1e-10);
    }
  }
}

TEST_CASE("whole-space energy") {
  Matrix e = strain_basis(3).elements[0];
  CHECK(single_sphere_solution(3, e).energy() == doctest::Approx(10.4719755).epsilon(1e-8));
  CHECK(whole_space_energy(3, e) == doctest::Approx(2.5 * 4.0 * M_PI / 3.0));
  CHECK(whole_space_energy(2, strain_basis(2).elements[1]) == doctest::Approx(2.0 * M_PI));
}

TEST_CASE("strain decays like r^-d") {
  for (int dim : {2, 3}) {
    const Matrix e = strain_basis(dim).elements[0];
    const RadialAnsatz a = single_sphere_solution(dim, e);
    std::vector<double> r{8, 16, 32, 64};
    std::vector<double> v;
    Point dir = Point::Zero();
    dir[0] = 0.6;
    dir[1] = 0.8;
    for (double x : r) {
      const Matrix g = a.gradient(x * dir);
      v.push_back((0.5 * (g + g.transpose())).norm());
    }
    CHECK(fit_decay_exponent(r, v).exponent == doctest::Approx(dim).epsilon(0.05 / dim));
  }
}

TEST_CASE("cell models bracket the whole-space energy") {
  for (int dim : {2, 3}) {
    const Matrix e = strain_basis(dim).elements[dim == 2 ? 1 : 2];
    const double whole = whole_space_energy(dim, e);
    std::vector<double> radii{2, 4, 8, 16};
    std::vector<double> gaps;
    for (double r : radii) {
      const RadialAnsatz up = cell_model(dim, r, CellKind::clamped, e);
      const RadialAnsatz lo = cell_model(dim, r, CellKind::traction_free, e);
      CHECK(up.residual(0.5 * (1.0 + r)) < 1e-10);
      CHECK(lo.residual(0.5 * (1.0 + r)) < 1e-10);
      CHECK(up.energy() >= whole);
      CHECK(whole >= lo.energy());
      gaps.push_back(up.energy() - lo.energy());
    }
    CHECK(fit_decay_exponent(radii, gaps).exponent == doctest::Approx(dim).epsilon(0.4 / dim));
    const double big = 1e4;
    CHECK(cell_model(dim, big, CellKind::clamped, e).energy() == doctest::Approx(whole).epsilon(1e-6));
    CHECK(cell_model(dim, big, CellKind::traction_free, e).energy() == doctest::Approx(whole).epsilon(1e-6));
    CHECK_THROWS_AS(cell_model(dim, 1.0, CellKind::clamped, e), ValidationError);
  }
}

TEST_CASE("far kernel: parity, decay, force-free stress, rotation equivariance") {
  for (int dim : {2, 3}) {
    const Matrix e = strain_basis(dim).elements[0];
    Point y = Point::Zero();
    y[0] = 3.0;
    y[1] = 4.0;
    CHECK(bg_far_kernel(dim, y, e).value == doctest::Approx(bg_far_kernel(dim, -y, e).value).epsilon(1e-10));
    std::vector<double> r{8, 16, 32, 64};
    std::vector<double> k;
    for (double s : r) k.push_back(bg_far_kernel(dim, s * y / 5.0, e).value);
    CHECK(fit_decay_exponent(r, k).exponent == doctest::Approx(dim).epsilon(0.3 / dim));
    CHECK(single_sphere_net_force(dim, e).norm() < 1e-10);
    CHECK_THROWS_AS(bg_far_kernel(dim, y / 5.0, e), ValidationError);
  }
  const Matrix e = strain_basis(3).elements[3];
  const Point y(2.0, -3.0, 1.5);
  const double t = 0.7;
  Matrix q;
  q << std::cos(t), -std::sin(t), 0, std::sin(t), std::cos(t), 0, 0, 0, 1;
  const double a = bg_far_kernel(3, y, e).value;
  const double b = bg_far_kernel(3, q * y, q * e * q.transpose()).value;
  CHECK(a == doctest::Approx(b).epsilon(1e-9));
}

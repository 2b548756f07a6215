#include <cmath>
#include <vector>

#include "doctest.h"
#include "suspvisc/analytic_sphere.hpp"
#include "suspvisc/dilute.hpp"
#include "suspvisc/errors.hpp"
#include "suspvisc/geometry.hpp"

using namespace suspvisc;

namespace {

ViscosityTensor synthetic(double phi, double slope) {
  ViscosityTensor t;
  t.B = Eigen::MatrixXd::Identity(5, 5) * (1.0 + slope * phi);
  t.stderr_ = Eigen::MatrixXd::Constant(5, 5, 1e-3);
  t.meta.dim = 3;
  t.meta.box = 16.0;
  t.meta.n = 64;
  t.meta.theta = 1e3;
  t.meta.process = "random_sequential_addition";
  t.meta.phi = phi;
  t.meta.phi_realized = phi;
  return t;
}

SolverConfig small(int n) {
  SolverConfig sc;
  sc.n = n;
  sc.theta = 100.0;
  sc.tolerance = 1e-10;
  return sc;
}

}  // namespace

TEST_CASE("Einstein fit recovers an exact affine law") {
  std::vector<ViscosityTensor> pts;
  for (double phi : {0.01, 0.02, 0.04, 0.06}) pts.push_back(synthetic(phi, 2.5));
  const DiluteFit f = einstein_fit(pts);
  CHECK(f.isotropic_slope == doctest::Approx(2.5).epsilon(1e-12));
  CHECK(f.isotropic_intercept == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(f.intercept_consistent);
  CHECK(std::abs(f.curvature) < 1e-9);
  for (int i = 0; i < 5; ++i) CHECK(f.slope(i, i) == doctest::Approx(2.5).epsilon(1e-12));

  pts.pop_back();
  pts.pop_back();
  CHECK_THROWS_AS(einstein_fit(pts), ValidationError);
  std::vector<ViscosityTensor> mixed{synthetic(0.01, 2.5), synthetic(0.02, 2.5), synthetic(0.03, 2.5)};
  mixed[1].meta.n = 32;
  CHECK_THROWS_AS(einstein_fit(mixed), ValidationError);
}

TEST_CASE("renormalized first-order tensor") {
  CHECK(renormalized_B1(0.0, 3).norm() == 0.0);
  const double lambda = 0.01 / unit_ball_volume(3);
  const Eigen::MatrixXd b = renormalized_B1(lambda, 3);
  CHECK((b - 0.025 * Eigen::MatrixXd::Identity(5, 5)).norm() < 1e-15);
  const Eigen::MatrixXd b2 = renormalized_B1(0.01 / unit_ball_volume(2), 2);
  CHECK((b2 - 0.02 * Eigen::MatrixXd::Identity(2, 2)).norm() < 1e-15);
  CHECK_THROWS_AS(renormalized_B1(-1.0, 3), ValidationError);
}

TEST_CASE("cluster expansion telescopes") {
  ParticleConfig c;
  c.dim = 2;
  c.box = 10.0;
  c.centers = {Point(2.0, 2.0, 0.0), Point(5.0, 2.5, 0.0), Point(3.0, 6.0, 0.0)};
  const Matrix e = strain_basis(2).elements[0];
  const ClusterReport r = cluster_terms(c, e, small(32));
  CHECK(r.energies.size() == 8);
  CHECK(r.telescoping_residual < 1e-10);
  CHECK(r.deltas[0] == doctest::Approx(r.energies[0]));
  CHECK(r.order_sums.size() == 4);

  c.centers.push_back(Point(8.0, 8.0, 0.0));
  c.centers.push_back(Point(8.0, 4.5, 0.0));
  CHECK_THROWS_AS(cluster_terms(c, e, small(32)), ValidationError);
}

TEST_CASE("near kernel by reflections is even and symmetric") {
  const Matrix e = strain_basis(3).elements[0];
  const Point y(1.5, 2.0, 2.5);
  CHECK(near_kernel_reflection(3, y, e) == doctest::Approx(near_kernel_reflection(3, -y, e)));
  const Eigen::MatrixXd t = near_kernel_reflection_tensor(3, y);
  CHECK((t - t.transpose()).norm() < 1e-12 * t.norm());
  CHECK_THROWS_AS(near_kernel_reflection(3, Point(1.0, 0.5, 0.0), e), ValidationError);
  const Eigen::MatrixXd f = far_kernel_tensor(3, y);
  CHECK(f(0, 0) == doctest::Approx(bg_far_kernel(3, y, e).value).epsilon(1e-8));
}

TEST_CASE("second-order term refuses a non-decaying correlation") {
  PairCorrelation pc;
  pc.dim = 2;
  pc.box = 40.0;
  pc.n_configs = 4;
  pc.intensity = 0.01;
  pc.fit_min = 4.0;
  pc.fit_max = 20.0;
  for (int b = 0; b <= 200; ++b) pc.edges.push_back(0.1 * b);
  for (int b = 0; b < 200; ++b) {
    const double r = pc.bin_center(b);
    pc.h2.push_back(r < 2.0 ? -1e-4 : 2e-5);
    pc.f2.push_back(1e-4 + pc.h2.back());
    pc.stderr_.push_back(1e-7);
  }
  refit_decay(pc);
  CHECK_FALSE(pc.tail_null);
  CHECK_THROWS_AS(second_order_term(pc, strain_basis(2).elements[0]), RenormalizationError);
}

TEST_CASE("Poisson far term: sampled part vanishes, exclusion part is deterministic") {
  EnsembleSpec spec;
  spec.dim = 2;
  spec.box = 64.0;
  spec.process = ProcessKind::poisson_thinned;
  spec.volume_fraction = 0.02;
  spec.seed = 11;
  std::vector<ParticleConfig> configs;
  for (std::uint64_t s = 0; s < 20; ++s) {
    EnsembleSpec e = spec;
    e.seed = spec.seed + s;
    configs.push_back(generate(e));
  }
  const PairCorrelation pc = pair_correlation(configs);
  const SecondOrderTerm t = second_order_term(pc, strain_basis(2).elements[0]);
  CHECK(std::abs(t.far_sampled_scalar) <= 3.0 * t.far_sampled_stderr);
  CHECK(t.far_scalar == doctest::Approx(t.far_exclusion_scalar + t.far_sampled_scalar));
  // Inside the exclusion disc h2 = -lambda^2 exactly.
  for (const QuadratureRow& row : t.trace)
    if (row.radius < 2.0 - 0.1) CHECK(row.h2 == doctest::Approx(-pc.intensity * pc.intensity));
  CHECK(std::isfinite(t.scalar));
}

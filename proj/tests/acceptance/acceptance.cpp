// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero when any fails. Usage: acceptance [--jobs N] [criterion ...]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "suspvisc/analytic_sphere.hpp"
#include "suspvisc/dilute.hpp"
#include "suspvisc/effective_viscosity.hpp"
#include "suspvisc/ensembles.hpp"
#include "suspvisc/errors.hpp"
#include "suspvisc/random.hpp"
#include "suspvisc/spectral_stokes.hpp"
#include "suspvisc/statistics.hpp"

using namespace suspvisc;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Shared {
  int jobs = 1;
  /// Every tensor assembled so far, for the structural checks.
  std::vector<ViscosityTensor> tensors;
};

std::string fmt(double v, int digits = 4) {
  std::ostringstream os;
  os.precision(digits);
  os << v;
  return os.str();
}

SolverConfig solver(int n, double theta, double tol = 1e-6) {
  SolverConfig sc;
  sc.n = n;
  sc.theta = theta;
  sc.tolerance = tol;
  sc.max_iterations = 20000;
  return sc;
}

Outcome einstein(Shared& sh, int dim, double box, int n, double lo, double hi) {
  EnsembleSpec spec;
  spec.dim = dim;
  spec.box = box;
  spec.process = ProcessKind::random_sequential_addition;
  spec.gap = 0.5;
  spec.seed = 2024 + static_cast<std::uint64_t>(dim);
  std::vector<ViscosityTensor> pts;
  for (double phi : {0.005, 0.01, 0.02}) {
    spec.volume_fraction = phi;
    pts.push_back(assemble_tensor(spec, solver(n, 1e3), 8, {sh.jobs, false}));
    sh.tensors.push_back(pts.back());
  }
  const DiluteFit f = einstein_fit(pts);
  const double s = f.isotropic_slope;
  Outcome o;
  o.pass = s >= lo && s <= hi;
  o.detail = "slope " + fmt(s) + " +- " + fmt(f.isotropic_slope_stderr, 2) + " in [" + fmt(lo) + ", " +
             fmt(hi) + "], intercept " + fmt(f.isotropic_intercept, 8);
  return o;
}

Outcome c1(Shared& sh) { return einstein(sh, 3, 16.0, 64, 2.1, 2.9); }
Outcome c2(Shared& sh) { return einstein(sh, 2, 32.0, 256, 1.7, 2.3); }

Outcome c3(Shared&) {
  const int dim = 3;
  const double box = 16.0;
  ParticleConfig c;
  c.dim = dim;
  c.box = box;
  c.centers = {Point(box / 2, box / 2, box / 2)};
  const SolverConfig sc = solver(96, 1e4, 1e-8);
  const Matrix e = strain_basis(dim).elements[0];
  const double excess = (dissipation(solve_corrector(c, e, sc), c, sc.theta) - 1.0) * std::pow(box, dim);
  const double exact = whole_space_energy(dim, e);
  const double rel = std::abs(excess - exact) / exact;
  return {rel <= 0.08, "L^3 (dissipation - |E|^2) = " + fmt(excess, 6) + " vs " + fmt(exact, 6) +
                           ", relative error " + fmt(rel, 3) + " <= 0.08"};
}

Outcome c4(Shared&) {
  bool ok = true;
  std::ostringstream os;
  const std::vector<double> radii{2, 4, 8, 16};
  for (int dim : {2, 3}) {
    double lo_p = HUGE_VAL;
    double hi_p = -HUGE_VAL;
    for (const Matrix& e : strain_basis(dim).elements) {
      const double whole = whole_space_energy(dim, e);
      std::vector<double> gaps;
      for (double r : radii) {
        const double up = cell_model(dim, r, CellKind::clamped, e).energy();
        const double lo = cell_model(dim, r, CellKind::traction_free, e).energy();
        ok = ok && up >= whole && whole >= lo;
        gaps.push_back(up - lo);
      }
      const double p = fit_decay_exponent(radii, gaps).exponent;
      ok = ok && std::abs(p - dim) <= 0.4;
      lo_p = std::min(lo_p, p);
      hi_p = std::max(hi_p, p);
    }
    os << "d=" << dim << " " << fmt(lo_p);
    if (hi_p - lo_p > 1e-3) os << ".." << fmt(hi_p);
    os << (dim == 2 ? ", " : "");
  }
  return {ok, "clamped >= whole >= free at R in {2,4,8,16} for every basis strain; gap exponent " + os.str() +
                  " (target d +- 0.4)"};
}

Outcome c5(Shared& sh) {
  EnsembleSpec spec;
  spec.dim = 3;
  spec.box = 8.0;
  spec.process = ProcessKind::random_sequential_addition;
  spec.volume_fraction = 3.0 * unit_ball_volume(3) / 512.0;
  spec.gap = 0.25;
  spec.seed = 77;
  const ParticleConfig config = generate(spec);
  ClusterOptions opt;
  opt.jobs = sh.jobs;
  const ClusterReport r = cluster_terms(config, strain_basis(3).elements[0], solver(32, 1e3, 1e-8), opt);
  const bool ok = config.size() == 3 && r.energies.size() == 8 && r.telescoping_residual <= 1e-10;
  return {ok, "N = " + std::to_string(config.size()) + ", " + std::to_string(r.energies.size()) +
                  " subset solves, relative residual " + fmt(r.telescoping_residual, 3) + " <= 1e-10"};
}

Outcome c6(Shared& sh) {
  if (sh.tensors.empty()) {
    for (int dim : {2, 3}) {
      EnsembleSpec spec;
      spec.dim = dim;
      spec.box = dim == 2 ? 16.0 : 8.0;
      spec.volume_fraction = 0.05;
      spec.gap = 0.5;
      spec.seed = 5;
      sh.tensors.push_back(assemble_tensor(spec, solver(dim == 2 ? 128 : 32, 1e3), 4, {sh.jobs, false}));
    }
  }
  double asym = 0.0;
  double min_eig = HUGE_VAL;
  for (const auto& t : sh.tensors) {
    asym = std::max(asym, (t.B - t.B.transpose()).cwiseAbs().maxCoeff());
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (t.B + t.B.transpose()));
    min_eig = std::min(min_eig, es.eigenvalues().minCoeff());
  }
  EnsembleSpec spec;
  spec.dim = 3;
  spec.box = 8.0;
  spec.volume_fraction = 0.05;
  spec.gap = 0.5;
  spec.seed = 9;
  const ParticleConfig c = generate(spec);
  const Matrix e = strain_basis(3).elements[2];
  std::vector<double> d;
  for (double theta : {1e2, 1e3, 1e4}) d.push_back(dissipation(solve_corrector(c, e, solver(32, theta, 1e-8)), c, theta));
  const bool mono = d[0] < d[1] && d[1] < d[2];
  const bool ok = asym <= 1e-8 && min_eig >= 1.0 - 1e-6 && mono;
  return {ok, std::to_string(sh.tensors.size()) + " tensors: max asymmetry " + fmt(asym, 2) +
                  " <= 1e-8, min eigenvalue " + fmt(min_eig, 8) + " >= 1 - 1e-6; dissipation at theta 1e2/1e3/1e4 = " +
                  fmt(d[0], 8) + " < " + fmt(d[1], 8) + " < " + fmt(d[2], 8)};
}

Outcome c7(Shared&) {
  bool ok = true;
  std::ostringstream os;
  for (int dim : {2, 3}) {
    const Matrix e = strain_basis(dim).elements[0];
    Point dir = Point::Zero();
    dir[0] = 0.6;
    dir[1] = 0.8;
    std::vector<double> r{8, 16, 32, 64};
    std::vector<double> v;
    for (double x : r) v.push_back(std::abs(bg_far_kernel(dim, x * dir, e).value));
    const double p = fit_decay_exponent(r, v).exponent;
    ok = ok && std::abs(p - dim) <= 0.3;
    os << "far d=" << dim << " " << fmt(p) << "; ";
  }
  const std::vector<double> near_r{3, 4, 5, 6, 8};
  // Three dimensions: two-reflection values.
  {
    const Matrix e = strain_basis(3).elements[0];
    const Point dir(0.6, 0.8, 0.0);
    std::vector<double> v;
    for (double x : near_r) v.push_back(std::abs(near_kernel_reflection(3, x * dir, e)));
    const double p = fit_decay_exponent(near_r, v).exponent;
    ok = ok && std::abs(p - 6.0) <= 0.6;
    os << "near d=3 (reflections) " << fmt(p) << "; ";
  }
  // Two dimensions: full two-body solves on a local box.
  {
    const Matrix e = strain_basis(2).elements[0];
    const Point dir(0.6, 0.8, 0.0);
    NearKernelOptions opt;
    opt.voxels_per_diameter = 16.0;
    std::vector<double> v;
    std::vector<double> refl;
    for (double x : near_r) {
      const NearKernelValue k = bg_near_kernel(2, x * dir, e, solver(16, 1e4, 1e-8), opt);
      v.push_back(std::abs(k.numeric_available ? k.numeric : k.reflection));
      refl.push_back(std::abs(k.reflection));
    }
    const double p = fit_decay_exponent(near_r, v).exponent;
    ok = ok && std::abs(p - 4.0) <= 0.6;
    os << "near d=2 (two-body solves) " << fmt(p) << ", reflections alone "
       << fmt(fit_decay_exponent(near_r, refl).exponent) << "; ";
  }
  std::string d = os.str();
  return {ok, d.substr(0, d.size() - 2) + " (targets d +- 0.3, 2d +- 0.6)"};
}

Outcome c8(Shared& sh) {
  std::ostringstream os;
  bool refused = false;
  {
    EnsembleSpec spec;
    spec.dim = 2;
    spec.box = 48.0;
    spec.volume_fraction = 0.05;
    spec.seed = 31;
    std::vector<ParticleConfig> configs;
    for (std::uint64_t s = 0; s < 8; ++s) {
      EnsembleSpec e = spec;
      e.seed = derive_seed(spec.seed, s);
      configs.push_back(generate(e));
    }
    PairCorrelation pc = pair_correlation(configs);
    // A correlation that settles on a constant nonzero plateau.
    double plateau = 0.0;
    for (std::size_t b = 0; b < pc.bins(); ++b) plateau = std::max(plateau, 20.0 * pc.stderr_[b]);
    for (std::size_t b = 0; b < pc.bins(); ++b) {
      if (pc.bin_center(b) > 4.0) pc.h2[b] += plateau;
    }
    refit_decay(pc);
    try {
      second_order_term(pc, strain_basis(2).elements[0]);
    } catch (const RenormalizationError&) {
      refused = true;
    }
    os << "plateau h2 " << (refused ? "refused" : "accepted") << "; ";
  }
  bool zero = true;
  for (int dim : {2, 3}) {
    EnsembleSpec spec;
    spec.dim = dim;
    spec.box = dim == 2 ? 64.0 : 24.0;
    spec.process = ProcessKind::poisson_thinned;
    spec.volume_fraction = 0.02;
    spec.seed = 41;
    std::vector<ParticleConfig> configs;
    for (std::uint64_t s = 0; s < 20; ++s) {
      EnsembleSpec e = spec;
      e.seed = derive_seed(spec.seed, s);
      configs.push_back(generate(e));
    }
    const PairCorrelation pc = pair_correlation(configs);
    SecondOrderOptions opt;
    opt.jobs = sh.jobs;
    const SecondOrderTerm t = second_order_term(pc, strain_basis(dim).elements[0], opt);
    const bool z = std::abs(t.far_sampled_scalar) <= 3.0 * t.far_sampled_stderr;
    zero = zero && z;
    os << "Poisson d=" << dim << " far over sampled pairs " << fmt(t.far_sampled_scalar, 3) << " +- "
       << fmt(t.far_sampled_stderr, 3) << " (exclusion-ball part " << fmt(t.far_exclusion_scalar, 3)
       << ", near " << fmt(t.near_scalar, 3) << "); ";
  }
  std::string d = os.str();
  return {refused && zero, d.substr(0, d.size() - 2)};
}

Outcome c9(Shared&) {
  EnsembleSpec spec;
  spec.dim = 3;
  spec.box = 8.0;
  spec.volume_fraction = 0.05;
  spec.gap = 0.5;
  spec.seed = 13;
  const ParticleConfig c = generate(spec);
  const SolverConfig sc = solver(48, 1e4, 1e-8);
  double worst_f = 0.0;
  double worst_t = 0.0;
  for (const Matrix& e : strain_basis(3).elements) {
    for (const ParticleLoad& l : force_torque(solve_corrector(c, e, sc), c)) {
      worst_f = std::max(worst_f, l.force.norm() / e.norm());
      worst_t = std::max(worst_t, l.torque.norm() / e.norm());
    }
  }
  const bool ok = worst_f <= 1e-3 && worst_t <= 1e-3;
  return {ok, std::to_string(c.size()) + " particles, 12 voxels per diameter: max |F|/|E| " + fmt(worst_f, 3) +
                  ", max |T|/|E| " + fmt(worst_t, 3) + " <= 1e-3"};
}

Outcome c10(Shared&) {
  // Outer radius R = 6 fills the box; data drive the flow from outside B_R.
  const double box = 12.0;
  ParticleConfig c;
  c.dim = 3;
  c.box = box;
  const Point center(box / 2, box / 2, box / 2);
  c.centers = {center + Point(2.5, 0, 0), center - Point(2.5, 0, 0), center + Point(0, 2.5, 0)};
  const auto data = random_low_mode_fields(3, 20, 123);
  std::vector<double> maxima;
  bool bounded = true;
  std::size_t degenerate = 0;
  for (int n : {32, 64}) {
    const MvpReport r = mvp_ratio(c, center, 6.0, data, solver(n, 1e3, 1e-8), MvpDriver::exterior_force);
    bounded = bounded && std::isfinite(r.max_ratio) && r.max_ratio > 0.0;
    degenerate += static_cast<std::size_t>(std::count(r.degenerate.begin(), r.degenerate.end(), true));
    maxima.push_back(r.max_ratio);
  }
  const double change = std::abs(maxima[1] - maxima[0]) / maxima[1];
  return {bounded && degenerate == 0 && change <= 0.2,
          "R = 6, 20 data forced outside B_R: max ratio n=32 " + fmt(maxima[0]) + ", n=64 " + fmt(maxima[1]) +
              ", relative change " + fmt(change, 3) + " <= 0.2, degenerate data " + std::to_string(degenerate)};
}

Outcome c11(Shared& sh) {
  EnsembleSpec spec;
  spec.dim = 2;
  spec.process = ProcessKind::random_sequential_addition;
  spec.volume_fraction = 0.1;
  spec.gap = 0.5;
  spec.seed = 17;
  const std::vector<double> boxes{8, 16, 32, 64};
  const std::vector<int> ns{32, 64, 128, 256};
  ConvergenceOptions opt;
  opt.jobs = sh.jobs;
  opt.pair_cutoff = 0.0;
  const ConvergenceStudy s = finite_volume_convergence(spec, boxes, ns, solver(32, 1e3), 8, opt);
  for (const auto& l : s.levels) sh.tensors.push_back(l.tensor);
  std::ostringstream os;
  for (std::size_t k = 0; k < s.differences.size(); ++k) {
    os << fmt(s.differences[k], 3) << " +- " << fmt(s.difference_stderr[k], 2)
       << (k + 1 < s.differences.size() ? ", " : "");
  }
  return {s.monotone, "|B(2L) - B(L)| for L = 8, 16, 32: " + os.str() + (s.monotone ? " (non-increasing within 2 sigma)" : " (increases beyond 2 sigma)")};
}

}  // namespace

int main(int argc, char** argv) {
  Shared sh;
  sh.jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--jobs" && i + 1 < argc) {
      sh.jobs = std::stoi(argv[++i]);
    } else {
      only.insert(std::stoi(a));
    }
  }
  const std::vector<std::pair<std::string, std::function<Outcome(Shared&)>>> checks{
      {"Einstein slope 3D", c1},
      {"Einstein slope 2D", c2},
      {"single-sphere energy", c3},
      {"cell-model sandwich", c4},
      {"cluster telescoping", c5},
      {"tensor structure", c6},
      {"kernel decay", c7},
      {"renormalization gating", c8},
      {"force and torque balance", c9},
      {"mean-value property", c10},
      {"finite-volume convergence", c11},
  };
  int failures = 0;
  for (std::size_t k = 0; k < checks.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    if (!only.empty() && !only.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = checks[k].second(sh);
    } catch (const std::exception& ex) {
      o = {false, std::string("error: ") + ex.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) ++failures;
    std::printf("criterion %2d %-26s %s  %s  [%.0f s]\n", id, checks[k].first.c_str(), o.pass ? "PASS" : "FAIL",
                o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}

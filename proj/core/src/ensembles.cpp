#include "suspvisc/ensembles.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "suspvisc/random.hpp"
#include "suspvisc/statistics.hpp"

namespace suspvisc {

namespace {

constexpr double kContactSlack = 1e-12;

struct ProcessName {
  ProcessKind kind;
  const char* name;
};

constexpr ProcessName kProcessNames[] = {
    {ProcessKind::cubic_lattice, "cubic-lattice"},
    {ProcessKind::random_sequential_addition, "rsa"},
    {ProcessKind::matern_ii, "matern-ii"},
    {ProcessKind::poisson_thinned, "poisson-thinned"},
};

Point uniform_point(Rng& rng, double box, int dim) {
  Point p = Point::Zero();
  for (int k = 0; k < dim; ++k) p[k] = rng.uniform() * box;
  return p;
}

double hardcore_distance(double gap) { return 2.0 + gap; }

ParticleConfig empty_config(const EnsembleSpec& spec) {
  ParticleConfig c;
  c.dim = spec.dim;
  c.box = spec.box;
  c.gap = spec.gap;
  c.seed = spec.seed;
  return c;
}

ParticleConfig lattice(const EnsembleSpec& spec) {
  ParticleConfig c = empty_config(spec);
  const long m = std::lround(spec.box * std::pow(spec.number_density(), 1.0 / spec.dim));
  if (m < 1) return c;
  const double s = spec.box / static_cast<double>(m);
  if (s < hardcore_distance(spec.gap)) {
    throw ValidationError("lattice spacing below contact distance");
  }
  const long total = spec.dim == 2 ? m * m : m * m * m;
  c.centers.reserve(static_cast<std::size_t>(total));
  for (long idx = 0; idx < total; ++idx) {
    Point p = Point::Zero();
    long rest = idx;
    for (int k = spec.dim - 1; k >= 0; --k) {
      p[k] = (static_cast<double>(rest % m) + 0.5) * s;
      rest /= m;
    }
    c.centers.push_back(p);
  }
  return c;
}

ParticleConfig rsa(const EnsembleSpec& spec) {
  ParticleConfig c = empty_config(spec);
  const long target = target_count(spec);
  if (target == 0) return c;
  Rng rng(spec.seed);
  const double dmin = hardcore_distance(spec.gap);
  const long budget = 200 * target;
  long failures = 0;
  c.centers.reserve(static_cast<std::size_t>(target));
  while (static_cast<long>(c.centers.size()) < target) {
    const Point p = uniform_point(rng, spec.box, spec.dim);
    const bool ok = std::none_of(c.centers.begin(), c.centers.end(), [&](const Point& q) {
      return periodic_distance(p, q, spec.box, spec.dim) < dmin;
    });
    if (ok) {
      c.centers.push_back(p);
    } else if (++failures > budget) {
      throw SaturationError("random sequential addition saturated",
                            static_cast<long>(c.centers.size()), target);
    }
  }
  return c;
}

// Poisson proposals for the hardcore thinnings.
std::vector<Point> poisson_proposals(Rng& rng, double intensity, const EnsembleSpec& spec) {
  const double volume = std::pow(spec.box, spec.dim);
  const auto count = rng.poisson(intensity * volume);
  std::vector<Point> pts;
  pts.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) pts.push_back(uniform_point(rng, spec.box, spec.dim));
  return pts;
}

double exclusion_volume(const EnsembleSpec& spec) {
  return ball_volume(spec.dim, hardcore_distance(spec.gap));
}

ParticleConfig matern_ii(const EnsembleSpec& spec) {
  ParticleConfig c = empty_config(spec);
  const double lambda = spec.number_density();
  if (lambda == 0.0) return c;
  const double v = exclusion_volume(spec);
  if (lambda * v >= 1.0) throw ValidationError("intensity unreachable by Matern-II thinning");
  const double proposal = -std::log1p(-lambda * v) / v;
  Rng rng(spec.seed);
  const auto pts = poisson_proposals(rng, proposal, spec);
  std::vector<double> marks(pts.size());
  for (auto& m : marks) m = rng.uniform();
  const double dmin = hardcore_distance(spec.gap);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    bool keep = true;
    for (std::size_t j = 0; j < pts.size() && keep; ++j) {
      if (j == i || marks[j] > marks[i]) continue;
      if (periodic_distance(pts[i], pts[j], spec.box, spec.dim) < dmin) keep = false;
    }
    if (keep) c.centers.push_back(pts[i]);
  }
  return c;
}

ParticleConfig poisson_thinned(const EnsembleSpec& spec) {
  ParticleConfig c = empty_config(spec);
  const double lambda = spec.number_density();
  if (lambda == 0.0) return c;
  const double v = exclusion_volume(spec);
  // Retained intensity x e^{-x} / v with x = proposal * v; take the root x < 1.
  const double target = lambda * v;
  if (target > std::exp(-1.0)) {
    throw ValidationError("intensity unreachable by Poisson hardcore thinning");
  }
  double lo = 0.0;
  double hi = 1.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (mid * std::exp(-mid) < target ? lo : hi) = mid;
  }
  const double proposal = 0.5 * (lo + hi) / v;
  Rng rng(spec.seed);
  const auto pts = poisson_proposals(rng, proposal, spec);
  const double dmin = hardcore_distance(spec.gap);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    bool keep = true;
    for (std::size_t j = 0; j < pts.size() && keep; ++j) {
      if (j != i && periodic_distance(pts[i], pts[j], spec.box, spec.dim) < dmin) keep = false;
    }
    if (keep) c.centers.push_back(pts[i]);
  }
  return c;
}

// Union-find with path halving.
struct DisjointSets {
  explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t i) {
    while (parent[i] != i) {
      parent[i] = parent[parent[i]];
      i = parent[i];
    }
    return i;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
  std::vector<std::size_t> parent;
};

}  // namespace

std::string to_string(ProcessKind kind) {
  for (const auto& p : kProcessNames) {
    if (p.kind == kind) return p.name;
  }
  return "unknown";
}

ProcessKind parse_process(std::string_view name) {
  for (const auto& p : kProcessNames) {
    if (name == p.name) return p.kind;
  }
  if (name == "lattice") return ProcessKind::cubic_lattice;
  if (name == "random-sequential-addition") return ProcessKind::random_sequential_addition;
  if (name == "matern") return ProcessKind::matern_ii;
  throw ValidationError("unknown process '" + std::string(name) + "'");
}

void validate(const EnsembleSpec& spec) {
  check_dimension(spec.dim);
  if (!std::isfinite(spec.box) || spec.box < 4.0) throw ValidationError("box side must be >= 4");
  if (!std::isfinite(spec.volume_fraction) || spec.volume_fraction < 0.0 ||
      spec.volume_fraction > kMaxVolumeFraction) {
    throw ValidationError("phi out of range");
  }
  if (!std::isfinite(spec.gap) || spec.gap < 0.0) throw ValidationError("gap must be >= 0");
}

double ParticleConfig::number_density() const {
  return static_cast<double>(centers.size()) / std::pow(box, dim);
}

double ParticleConfig::volume_fraction() const {
  return number_density() * unit_ball_volume(dim);
}

double min_center_distance(const ParticleConfig& config) {
  double best = config.centers.empty() ? std::numeric_limits<double>::infinity() : config.box;
  for (std::size_t i = 0; i < config.size(); ++i) {
    for (std::size_t j = i + 1; j < config.size(); ++j) {
      best = std::min(best,
                      periodic_distance(config.centers[i], config.centers[j], config.box, config.dim));
    }
  }
  return best;
}

void validate(const ParticleConfig& config) {
  check_dimension(config.dim);
  if (!std::isfinite(config.box) || config.box < 4.0) throw ValidationError("box side must be >= 4");
  if (!std::isfinite(config.gap) || config.gap < 0.0) throw ValidationError("gap must be >= 0");
  for (const auto& p : config.centers) {
    for (int k = 0; k < 3; ++k) {
      if (!std::isfinite(p[k])) throw ValidationError("non-finite particle center");
      if (k < config.dim && (p[k] < 0.0 || p[k] >= config.box)) {
        throw ValidationError("particle center outside the box");
      }
      if (k >= config.dim && p[k] != 0.0) throw ValidationError("inactive coordinate not zero");
    }
  }
  if (min_center_distance(config) < hardcore_distance(config.gap) - kContactSlack) {
    throw ValidationError("particles overlap or violate the minimum gap");
  }
}

long target_count(const EnsembleSpec& spec) {
  return std::lround(spec.volume_fraction * std::pow(spec.box, spec.dim) /
                     unit_ball_volume(spec.dim));
}

ParticleConfig generate(const EnsembleSpec& spec) {
  validate(spec);
  switch (spec.process) {
    case ProcessKind::cubic_lattice:
      return lattice(spec);
    case ProcessKind::random_sequential_addition:
      return rsa(spec);
    case ProcessKind::matern_ii:
      return matern_ii(spec);
    case ProcessKind::poisson_thinned:
      return poisson_thinned(spec);
  }
  throw ValidationError("unknown process");
}

GeometryDiagnostics geometry_diagnostics(const ParticleConfig& config, double rho, double r0) {
  validate(config);
  if (!(rho > 0.0) || !std::isfinite(rho)) throw ValidationError("fattening rho must be > 0");
  if (!std::isfinite(r0) || r0 < 0.0) throw ValidationError("moment exponent r0 must be >= 0");
  const std::size_t n = config.size();
  const double volume = std::pow(config.box, config.dim);
  const double vball = unit_ball_volume(config.dim);

  GeometryDiagnostics g;
  g.r0 = r0;
  g.fattening = rho;
  g.gaps.assign(n, 0.0);
  g.isolated.assign(n, false);
  g.voronoi_inradii.assign(n, 0.0);

  std::vector<double> dist(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = periodic_distance(config.centers[i], config.centers[j], config.box, config.dim);
      dist[i * n + j] = d;
      dist[j * n + i] = d;
    }
  }

  g.min_gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    if (n == 1) {
      g.isolated[i] = true;
      g.gaps[i] = 0.5 * config.box;
      g.voronoi_inradii[i] = 0.5 * config.box;
    } else {
      // Own periodic images sit at distance L.
      double nearest = config.box;
      for (std::size_t j = 0; j < n; ++j) {
        if (j != i) nearest = std::min(nearest, dist[i * n + j]);
      }
      g.gaps[i] = nearest - 2.0;
      g.voronoi_inradii[i] = std::min(0.5 * nearest, 0.5 * config.box);
    }
    g.min_gap = std::min(g.min_gap, g.gaps[i]);
    g.moment_gaps += std::pow(g.gaps[i], -r0) * vball / volume;
  }
  if (n == 0) g.min_gap = 0.5 * config.box;

  const double reach = 2.0 * (1.0 + rho);
  DisjointSets sets(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (dist[i * n + j] < reach) sets.unite(i, j);
    }
  }
  std::vector<std::ptrdiff_t> slot(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t root = sets.find(i);
    if (slot[root] < 0) {
      slot[root] = static_cast<std::ptrdiff_t>(g.components.size());
      g.components.emplace_back();
    }
    g.components[static_cast<std::size_t>(slot[root])].members.push_back(i);
  }
  const double fat_ball = ball_volume(config.dim, 1.0 + rho);
  for (auto& comp : g.components) {
    double span = 0.0;
    for (std::size_t a = 0; a < comp.members.size(); ++a) {
      for (std::size_t b = a + 1; b < comp.members.size(); ++b) {
        span = std::max(span, dist[comp.members[a] * n + comp.members[b]]);
      }
    }
    comp.diameter = span + reach;
    comp.volume = static_cast<double>(comp.members.size()) * fat_ball;
    g.moment_clusters += std::pow(comp.diameter, r0) * comp.volume / volume;
  }
  return g;
}

void refit_decay(PairCorrelation& pc) {
  pc.decay_exponent.reset();
  pc.decay_exponent_stderr = 0.0;
  pc.tail_null = false;
  if (pc.empty) return;
  std::vector<double> xs;
  std::vector<double> ys;
  std::size_t in_range = 0;
  std::size_t outliers = 0;
  for (std::size_t b = 0; b < pc.bins(); ++b) {
    const double r = pc.bin_center(b);
    if (r < pc.fit_min || r > pc.fit_max) continue;
    ++in_range;
    const double z = pc.stderr_[b] > 0.0 ? std::abs(pc.h2[b]) / pc.stderr_[b]
                                         : (pc.h2[b] == 0.0 ? 0.0 : HUGE_VAL);
    if (z > 3.0) ++outliers;
    if (z > 2.0) {
      xs.push_back(r);
      ys.push_back(std::abs(pc.h2[b]));
    }
  }
  if (in_range == 0) return;
  pc.tail_null = static_cast<double>(outliers) <= 0.05 * static_cast<double>(in_range);
  if (xs.size() >= 3) {
    const PowerLawFit fit = fit_decay_exponent(xs, ys);
    pc.decay_exponent = fit.exponent;
    pc.decay_exponent_stderr = fit.exponent_stderr;
  }
}

PairCorrelation pair_correlation(std::span<const ParticleConfig> configs,
                                 const PairCorrelationOptions& options) {
  if (configs.empty()) throw ValidationError("pair correlation needs at least one config");
  if (!(options.bin_width > 0.0)) throw ValidationError("bin width must be > 0");
  const auto& first = configs.front();
  for (const auto& c : configs) {
    if (c.dim != first.dim || c.box != first.box || c.gap != first.gap) {
      throw ValidationError("configs do not share dimension, box and gap");
    }
  }
  PairCorrelation pc;
  pc.dim = first.dim;
  pc.box = first.box;
  pc.gap = first.gap;
  pc.n_configs = configs.size();
  const double rmax = 0.5 * pc.box;
  const auto nbins = static_cast<std::size_t>(std::floor(rmax / options.bin_width + 1e-9));
  if (nbins == 0) throw ValidationError("bin width exceeds half the box");
  pc.edges.resize(nbins + 1);
  for (std::size_t b = 0; b <= nbins; ++b) pc.edges[b] = static_cast<double>(b) * options.bin_width;
  pc.fit_min = options.fit_min;
  pc.fit_max = options.fit_max > 0.0 ? options.fit_max : rmax;

  const double volume = std::pow(pc.box, pc.dim);
  std::vector<double> shell(nbins);
  for (std::size_t b = 0; b < nbins; ++b) {
    shell[b] = ball_volume(pc.dim, pc.edges[b + 1]) - ball_volume(pc.dim, pc.edges[b]);
  }

  // Per-config ordered-pair counts.
  const std::size_t nc = configs.size();
  std::vector<double> counts(nc * nbins, 0.0);
  std::vector<double> densities(nc);
  for (std::size_t c = 0; c < nc; ++c) {
    const auto& cfg = configs[c];
    densities[c] = static_cast<double>(cfg.size()) / volume;
    for (std::size_t i = 0; i < cfg.size(); ++i) {
      for (std::size_t j = i + 1; j < cfg.size(); ++j) {
        const double r = periodic_distance(cfg.centers[i], cfg.centers[j], pc.box, pc.dim);
        if (r >= pc.edges[nbins]) continue;
        const auto b = static_cast<std::size_t>(r / options.bin_width);
        if (b < nbins) counts[c * nbins + b] += 2.0;
      }
    }
  }
  const MeanEstimate lam = mean_and_stderr(densities);
  pc.intensity = lam.mean;
  pc.intensity_stderr = lam.stderr_;
  pc.empty = pc.intensity == 0.0;

  pc.f2.assign(nbins, 0.0);
  pc.h2.assign(nbins, 0.0);
  pc.stderr_.assign(nbins, 0.0);
  std::vector<double> per_config(nc);
  for (std::size_t b = 0; b < nbins; ++b) {
    const double norm = volume * shell[b];
    double total = 0.0;
    for (std::size_t c = 0; c < nc; ++c) {
      per_config[c] = counts[c * nbins + b] / norm;
      total += counts[c * nbins + b];
    }
    const MeanEstimate est = mean_and_stderr(per_config);
    pc.f2[b] = est.mean;
    pc.h2[b] = pc.empty ? 0.0 : est.mean - pc.intensity * pc.intensity;
    if (nc >= 10) {
      pc.stderr_[b] = est.stderr_;
    } else {
      // Counting statistics of unordered pairs, floored at one pair.
      pc.stderr_[b] = std::sqrt(2.0 * std::max(total, 2.0)) / (static_cast<double>(nc) * norm);
    }
    pc.intensity2 = std::max(pc.intensity2, pc.f2[b]);
  }
  refit_decay(pc);
  return pc;
}

IntensityEstimates intensity_estimates(const PairCorrelation& pc) {
  IntensityEstimates out;
  if (pc.empty) {
    out.ordering_holds = true;
    return out;
  }
  out.lambda = pc.intensity;
  out.lambda2 = pc.intensity2;
  out.ordering_holds = out.lambda * out.lambda <= out.lambda2 && out.lambda2 <= out.lambda;
  return out;
}

}  // namespace suspvisc

#include "cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "suspvisc/errors.hpp"
#include "suspvisc/log.hpp"
#include "suspvisc/random.hpp"

namespace suspvisc::cli {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Configuration

Json to_json(const CampaignConfig& c) {
  Json j = Json::object();
  Json campaign = Json::object();
  campaign["command"] = c.command;
  campaign["phi"] = c.phis;
  campaign["L"] = c.boxes;
  campaign["configs"] = c.n_configs;
  campaign["output"] = c.output_dir;
  campaign["seed"] = c.seed;
  campaign["jobs"] = c.jobs;
  campaign["input"] = c.input;
  campaign["strain"] = c.strain;
  campaign["radii"] = c.radii;
  campaign["allow_large"] = c.allow_large;
  campaign["richardson"] = c.richardson;
  campaign["near_numeric"] = c.near_numeric;
  campaign["second_order"] = c.second_order;
  campaign["mvp_radius"] = c.mvp_radius;
  campaign["mvp_samples"] = c.mvp_samples;
  campaign["mvp_driver"] = to_string(c.mvp_driver);
  campaign["pair_cutoff"] = c.pair_cutoff;
  campaign["bin_width"] = c.bin_width;
  j["campaign"] = std::move(campaign);
  Json ensemble = c.ensemble;
  ensemble.erase("phi");
  ensemble.erase("seed");
  ensemble.erase("box");
  j["ensemble"] = std::move(ensemble);
  j["solver"] = c.solver;
  return j;
}

namespace {

template <typename T>
void read(const Json& section, const char* key, T& value) {
  if (section.contains(key)) value = section.at(key).get<T>();
}

}  // namespace

CampaignConfig from_json(const Json& j) {
  CampaignConfig c;
  const Json empty = Json::object();
  const Json& campaign = j.contains("campaign") ? j.at("campaign") : empty;
  const Json& ensemble = j.contains("ensemble") ? j.at("ensemble") : empty;
  const Json& solver = j.contains("solver") ? j.at("solver") : empty;
  try {
    read(campaign, "command", c.command);
    read(campaign, "phi", c.phis);
    read(campaign, "L", c.boxes);
    read(campaign, "configs", c.n_configs);
    read(campaign, "output", c.output_dir);
    read(campaign, "seed", c.seed);
    read(campaign, "jobs", c.jobs);
    read(campaign, "input", c.input);
    read(campaign, "strain", c.strain);
    read(campaign, "radii", c.radii);
    read(campaign, "allow_large", c.allow_large);
    read(campaign, "richardson", c.richardson);
    read(campaign, "near_numeric", c.near_numeric);
    read(campaign, "second_order", c.second_order);
    read(campaign, "mvp_radius", c.mvp_radius);
    read(campaign, "mvp_samples", c.mvp_samples);
    if (campaign.contains("mvp_driver")) {
      c.mvp_driver = parse_mvp_driver(campaign["mvp_driver"].get<std::string>());
    }
    read(campaign, "pair_cutoff", c.pair_cutoff);
    read(campaign, "bin_width", c.bin_width);
    c.ensemble = ensemble.get<EnsembleSpec>();
    c.solver = solver.get<SolverConfig>();
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("bad configuration value: ") + e.what());
  }
  return c;
}

std::string emit_ini(const CampaignConfig& c) {
  const Json j = to_json(c);
  std::ostringstream os;
  bool first = true;
  for (const auto& [section, values] : j.items()) {
    if (!first) os << "\n";
    first = false;
    os << "[" << section << "]\n";
    for (const auto& [key, value] : values.items()) os << key << " = " << value.dump() << "\n";
  }
  return os.str();
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

// Deep merge of `patch` into `base`, section by section.
void merge(Json& base, const Json& patch) {
  for (const auto& [section, values] : patch.items()) {
    for (const auto& [key, value] : values.items()) base[section][key] = value;
  }
}

}  // namespace

CampaignConfig parse_ini(std::string_view text, const CampaignConfig& base) {
  Json patch = Json::object();
  std::string section;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  for (std::string raw; std::getline(in, raw);) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ValidationError("line " + std::to_string(line_no) + ": bad section header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      if (section != "campaign" && section != "ensemble" && section != "solver") {
        throw ValidationError("unknown section [" + section + "]");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos || section.empty()) {
      throw ValidationError("line " + std::to_string(line_no) + ": expected key = value inside a section");
    }
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    Json parsed = Json::parse(value, nullptr, false);
    if (parsed.is_discarded()) parsed = value;
    patch[section][key] = std::move(parsed);
  }
  Json merged = to_json(base);
  merge(merged, patch);
  return from_json(merged);
}

// ---------------------------------------------------------------------------
// Subcommands

namespace {

// A bare configuration or any artifact carrying one under "particles".
ParticleConfig load_particles(const std::string& path) {
  const Json j = read_json(path);
  try {
    return (j.contains("particles") ? j.at("particles") : j).get<ParticleConfig>();
  } catch (const Json::exception& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

struct Context {
  CampaignConfig cfg;
  fs::path out;

  // The output location is left out so artifacts do not depend on it.
  Json stamp() const {
    Json j = to_json(cfg);
    j["campaign"].erase("output");
    return j;
  }

  EnsembleSpec spec(double phi, double box) const {
    EnsembleSpec s = cfg.ensemble;
    s.volume_fraction = phi;
    s.box = box;
    s.seed = cfg.seed;
    return s;
  }
  double phi() const {
    if (cfg.phis.empty()) throw ValidationError("no volume fraction given (--phi)");
    return cfg.phis.front();
  }
  double box() const { return cfg.boxes.empty() ? cfg.ensemble.box : cfg.boxes.front(); }

  void json(const std::string& name, Json body) const {
    body["config"] = stamp();
    write_json(out / name, body);
    std::cout << (out / name).string() << "\n";
  }
  void csv(const std::string& name, CsvTable table) const {
    table.meta["config"] = stamp();
    write_csv(out / name, table);
    std::cout << (out / name).string() << "\n";
  }

  ParticleConfig config_from_input_or_generate() const {
    if (!cfg.input.empty()) return load_particles(cfg.input);
    return generate(spec(phi(), box()));
  }

  Matrix strain() const {
    const StrainBasis basis = strain_basis(cfg.ensemble.dim);
    if (cfg.strain < 0 || static_cast<std::size_t>(cfg.strain) >= basis.size()) {
      throw ValidationError("strain index out of range for the dimension");
    }
    return basis.elements[static_cast<std::size_t>(cfg.strain)];
  }
};

void cmd_gen(const Context& ctx) {
  const ParticleConfig config = generate(ctx.spec(ctx.phi(), ctx.box()));
  Json j = Json::object();
  j["particles"] = config;
  j["volume_fraction"] = config.volume_fraction();
  j["geometry"] = geometry_diagnostics(config, 1.0, 0.0);
  ctx.json("config.json", j);
}

void cmd_solve(const Context& ctx) {
  const ParticleConfig config = ctx.config_from_input_or_generate();
  if (config.dim != ctx.cfg.ensemble.dim) throw ValidationError("input dimension differs from --dim");
  const Matrix e = ctx.strain();
  const CorrectorField f = solve_corrector(config, e, ctx.cfg.solver);
  Json j = Json::object();
  j["particles"] = config;
  j["strain"] = matrix_json(e.topLeftCorner(config.dim, config.dim));
  j["dissipation"] = dissipation(f, config, ctx.cfg.solver.theta);
  j["iterations"] = f.iterations;
  j["residual"] = f.residual;
  j["rigidity_residual"] = f.rigidity_residual;
  j["divergence"] = f.divergence;
  j["loads"] = force_torque(f, config);
  ctx.json("solve.json", j);
  ctx.csv("solver_log.csv", residual_history_table(f));
  write_field(ctx.out / "field", f, ctx.stamp());
  std::cout << (ctx.out / "field.bin").string() << "\n";
}

void cmd_effvisc(const Context& ctx) {
  const ViscosityTensor t = assemble_tensor(ctx.spec(ctx.phi(), ctx.box()), ctx.cfg.solver, ctx.cfg.n_configs,
                                            {ctx.cfg.jobs, ctx.cfg.richardson});
  ctx.json("effvisc.json", t);
  ctx.csv("effvisc.csv", viscosity_long_table(std::span(&t, 1)));
}

void cmd_einstein(const Context& ctx) {
  if (ctx.cfg.phis.size() < 3) throw ValidationError("einstein needs at least three phi values");
  std::vector<ViscosityTensor> tensors;
  for (double phi : ctx.cfg.phis) {
    tensors.push_back(assemble_tensor(ctx.spec(phi, ctx.box()), ctx.cfg.solver, ctx.cfg.n_configs,
                                      {ctx.cfg.jobs, ctx.cfg.richardson}));
  }
  const DiluteFit fit = einstein_fit(tensors);
  CsvTable table;
  table.columns = {"phi", "phi_realized", "isotropic", "isotropic_stderr"};
  const auto m = tensors.front().B.rows();
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index k = 0; k < m; ++k) {
      table.columns.push_back("B" + std::to_string(i) + std::to_string(k));
      table.columns.push_back("stderr" + std::to_string(i) + std::to_string(k));
    }
  }
  for (const auto& t : tensors) {
    std::vector<double> row{t.meta.phi, t.meta.phi_realized, t.isotropic(), t.isotropic_stderr()};
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index k = 0; k < m; ++k) {
        row.push_back(t.B(i, k));
        row.push_back(t.stderr_(i, k));
      }
    }
    table.add(std::move(row));
  }
  ctx.csv("einstein_slope.csv", table);
  ctx.csv("einstein_long.csv", viscosity_long_table(tensors));
  Json j = fit;
  j["slope_target"] = (ctx.cfg.ensemble.dim + 2) / 2.0;
  ctx.json("einstein_fit.json", j);
}

void cmd_cluster(const Context& ctx) {
  const ParticleConfig config = ctx.config_from_input_or_generate();
  const ClusterReport r =
      cluster_terms(config, ctx.strain(), ctx.cfg.solver, {ctx.cfg.allow_large, ctx.cfg.jobs});
  Json j = r;
  j["particles_config"] = config;
  ctx.json("cluster.json", j);
}

void cmd_bg(const Context& ctx) {
  const int dim = ctx.cfg.ensemble.dim;
  const Matrix e = ctx.strain();
  std::vector<double> radii = ctx.cfg.radii;
  if (radii.empty()) radii = {3, 4, 5, 6, 8, 12, 16, 24, 32, 48, 64};
  CsvTable kernels;
  kernels.columns = {"r", "near_reflection", "near_numeric", "near_annulus_change", "far"};
  for (double r : radii) {
    Point y = Point::Zero();
    y[0] = r;
    double refl = std::numeric_limits<double>::quiet_NaN();
    double num = refl;
    double change = refl;
    if (r > 2.0) {
      NearKernelOptions o;
      o.numeric = ctx.cfg.near_numeric;
      const NearKernelValue v = bg_near_kernel(dim, y, e, ctx.cfg.solver, o);
      refl = v.reflection;
      if (v.numeric_available) {
        num = v.numeric;
        change = v.annulus_change;
      }
    }
    kernels.add({r, refl, num, change, bg_far_kernel(dim, y, e).value});
  }
  ctx.csv("bg_kernels.csv", kernels);
  if (!ctx.cfg.second_order) return;

  std::vector<ParticleConfig> configs;
  for (std::size_t c = 0; c < ctx.cfg.n_configs; ++c) {
    EnsembleSpec s = ctx.spec(ctx.phi(), ctx.box());
    s.seed = derive_seed(ctx.cfg.seed, c);
    configs.push_back(generate(s));
  }
  PairCorrelationOptions po;
  po.bin_width = ctx.cfg.bin_width;
  const PairCorrelation pc = pair_correlation(configs, po);
  ctx.csv("pair_correlation.csv", pair_correlation_table(pc));
  SecondOrderOptions so;
  so.jobs = ctx.cfg.jobs;
  const SecondOrderTerm t = second_order_term(pc, e, so);
  Json j = t;
  j["pair_correlation"] = pc;
  ctx.json("second_order.json", j);
  ctx.csv("quadrature_trace.csv", quadrature_trace_table(t));
}

void cmd_bounds(const Context& ctx) {
  const ParticleConfig config = ctx.config_from_input_or_generate();
  const SandwichBounds b = sandwich_bounds(config);
  Json j = b;
  j["particles"] = config;
  ctx.json("bounds.json", j);
}

ParticleConfig default_mvp_geometry(int dim, double box) {
  ParticleConfig c;
  c.dim = dim;
  c.box = box;
  Point mid = Point::Zero();
  for (int a = 0; a < dim; ++a) mid[a] = 0.5 * box;
  Point p = mid;
  p[0] += 2.5;
  c.centers.push_back(p);
  p = mid;
  p[0] -= 2.5;
  c.centers.push_back(p);
  p = mid;
  p[1] += 2.5;
  c.centers.push_back(p);
  return c;
}

void cmd_mvp(const Context& ctx) {
  const int dim = ctx.cfg.ensemble.dim;
  const double box = ctx.box();
  const ParticleConfig config =
      ctx.cfg.input.empty() ? default_mvp_geometry(dim, box) : load_particles(ctx.cfg.input);
  validate(config);
  Point center = Point::Zero();
  for (int a = 0; a < config.dim; ++a) center[a] = 0.5 * config.box;
  SolverConfig sc = ctx.cfg.solver;
  if (ctx.cfg.mvp_driver == MvpDriver::clamp && !(sc.clamp > 0.0)) sc.clamp = 1e4;
  const auto data = random_low_mode_fields(config.dim, ctx.cfg.mvp_samples, ctx.cfg.seed);
  const MvpReport r = mvp_ratio(config, center, ctx.cfg.mvp_radius, data, sc, ctx.cfg.mvp_driver);
  Json j = r;
  j["driver"] = to_string(ctx.cfg.mvp_driver);
  j["particles"] = config;
  ctx.json("mvp.json", j);
}

void cmd_converge(const Context& ctx) {
  std::vector<double> boxes = ctx.cfg.boxes;
  if (boxes.size() < 3) throw ValidationError("converge needs at least three L values");
  // Fixed voxel size: the solver n applies to the first box.
  const double h = boxes.front() / ctx.cfg.solver.n;
  std::vector<int> ns;
  for (double L : boxes) {
    const double n = L / h;
    if (std::abs(n - std::round(n)) > 1e-9) throw ValidationError("L list does not keep the voxel size");
    ns.push_back(static_cast<int>(std::lround(n)));
  }
  const ConvergenceStudy s =
      finite_volume_convergence(ctx.spec(ctx.phi(), boxes.front()), boxes, ns, ctx.cfg.solver,
                                ctx.cfg.n_configs, {ctx.cfg.jobs, ctx.cfg.pair_cutoff});
  ctx.json("converge.json", s);
  CsvTable t;
  t.columns = {"L", "n", "isotropic", "isotropic_stderr", "first_order", "second_order_partial"};
  for (const auto& l : s.levels) {
    t.add({l.box, static_cast<double>(l.n), l.isotropic, l.isotropic_stderr, l.first_order,
           l.second_order_partial});
  }
  ctx.csv("finite_volume.csv", t);
}

// Flags shared by every subcommand. Values apply only when given.
struct Flags {
  std::string config_file;
  std::string out;
  int jobs = 1;
  std::uint64_t seed = 0;
  int dim = 3;
  std::vector<double> boxes;
  std::vector<double> phis;
  std::string process;
  double gap = 0.0;
  int n = 64;
  double theta = 1e3;
  double tolerance = 1e-6;
  int max_iterations = 5000;
  bool no_smoothing = false;
  std::string interface;
  double clamp = 0.0;
  std::size_t configs = 8;
  std::string input;
  int strain = 0;
  std::vector<double> radii;
  bool allow_large = false;
  bool richardson = false;
  bool near_numeric = false;
  bool no_second_order = false;
  double mvp_radius = 6.0;
  int mvp_samples = 20;
  std::string mvp_driver;
  double pair_cutoff = 5.0;
  double bin_width = 0.1;
};

void add_flags(CLI::App* app, Flags& f) {
  app->add_option("--config", f.config_file, "INI campaign file");
  app->add_option("--out", f.out, "output directory (default $SUSPVISC_OUTPUT_DIR or .)");
  app->add_option("--jobs", f.jobs, "worker threads")->check(CLI::PositiveNumber);
  app->add_option("--seed", f.seed, "master seed");
  app->add_option("--dim", f.dim, "dimension (2 or 3)");
  app->add_option("--L", f.boxes, "box side(s), comma separated")->delimiter(',');
  app->add_option("--phi", f.phis, "volume fraction(s), comma separated")->delimiter(',');
  app->add_option("--process", f.process, "cubic-lattice, rsa, matern-ii or poisson-thinned");
  app->add_option("--gap", f.gap, "minimum surface gap");
  app->add_option("--n", f.n, "grid points per axis");
  app->add_option("--theta", f.theta, "particle viscosity ratio");
  app->add_option("--tol", f.tolerance, "CG relative tolerance");
  app->add_option("--max-iter", f.max_iterations, "CG iteration cap");
  app->add_flag("--no-smoothing", f.no_smoothing, "sharp voxel indicator");
  app->add_option("--interface", f.interface, "harmonic or arithmetic");
  app->add_option("--clamp", f.clamp, "velocity clamp strength");
  app->add_option("--configs", f.configs, "configurations per point");
  app->add_option("--input", f.input, "particle configuration JSON");
  app->add_option("--strain", f.strain, "basis strain index");
  app->add_option("--radii", f.radii, "kernel radii, comma separated")->delimiter(',');
  app->add_flag("--allow-large", f.allow_large, "permit clusters above four particles");
  app->add_flag("--richardson", f.richardson, "extrapolate in theta");
  app->add_flag("--near-numeric", f.near_numeric, "also solve the near kernel numerically");
  app->add_flag("--no-second-order", f.no_second_order, "kernel tables only");
  app->add_option("--radius", f.mvp_radius, "outer ball radius for mvp");
  app->add_option("--samples", f.mvp_samples, "boundary data for mvp");
  app->add_option("--driver", f.mvp_driver, "mvp flow driver: clamp or exterior-force");
  app->add_option("--pair-cutoff", f.pair_cutoff, "pair distance for cluster sums in converge");
  app->add_option("--bin-width", f.bin_width, "pair correlation bin width");
}

CampaignConfig resolve(const CLI::App* sub, const Flags& f) {
  CampaignConfig cfg;
  if (sub->count("--config")) {
    std::ifstream in(f.config_file);
    if (!in) throw ValidationError("cannot open " + f.config_file);
    std::stringstream ss;
    ss << in.rdbuf();
    cfg = parse_ini(ss.str(), cfg);
  }
  cfg.command = sub->get_name();
  auto given = [&](const char* name) { return sub->count(name) > 0; };
  if (given("--out")) cfg.output_dir = f.out;
  if (given("--jobs")) cfg.jobs = f.jobs;
  if (given("--seed")) cfg.seed = f.seed;
  if (given("--dim")) cfg.ensemble.dim = f.dim;
  if (given("--L")) cfg.boxes = f.boxes;
  if (given("--phi")) cfg.phis = f.phis;
  if (given("--process")) cfg.ensemble.process = parse_process(f.process);
  if (given("--gap")) cfg.ensemble.gap = f.gap;
  if (given("--n")) cfg.solver.n = f.n;
  if (given("--theta")) cfg.solver.theta = f.theta;
  if (given("--tol")) cfg.solver.tolerance = f.tolerance;
  if (given("--max-iter")) cfg.solver.max_iterations = f.max_iterations;
  if (given("--no-smoothing")) cfg.solver.smoothing = false;
  if (given("--interface")) cfg.solver.interface = parse_interface_rule(f.interface);
  if (given("--clamp")) cfg.solver.clamp = f.clamp;
  if (given("--configs")) cfg.n_configs = f.configs;
  if (given("--input")) cfg.input = f.input;
  if (given("--strain")) cfg.strain = f.strain;
  if (given("--radii")) cfg.radii = f.radii;
  if (given("--allow-large")) cfg.allow_large = true;
  if (given("--richardson")) cfg.richardson = true;
  if (given("--near-numeric")) cfg.near_numeric = true;
  if (given("--no-second-order")) cfg.second_order = false;
  if (given("--radius")) cfg.mvp_radius = f.mvp_radius;
  if (given("--samples")) cfg.mvp_samples = f.mvp_samples;
  if (given("--driver")) cfg.mvp_driver = parse_mvp_driver(f.mvp_driver);
  if (given("--pair-cutoff")) cfg.pair_cutoff = f.pair_cutoff;
  if (given("--bin-width")) cfg.bin_width = f.bin_width;
  if (cfg.output_dir.empty()) {
    const char* env = std::getenv("SUSPVISC_OUTPUT_DIR");
    cfg.output_dir = env && *env ? env : ".";
  }
  if (!cfg.boxes.empty()) cfg.ensemble.box = cfg.boxes.front();
  cfg.ensemble.seed = cfg.seed;
  if (cfg.n_configs < 1) throw ValidationError("configs must be >= 1");
  for (double phi : cfg.phis) {
    if (!(phi >= 0.0) || phi > kMaxVolumeFraction) throw ValidationError("phi out of range");
  }
  return cfg;
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"Effective viscosity of dilute rigid-sphere suspensions"};
  app.require_subcommand(1);
  Flags flags;
  using Handler = void (*)(const Context&);
  const std::vector<std::tuple<const char*, const char*, Handler>> commands = {
      {"gen", "generate a particle configuration", cmd_gen},
      {"solve", "solve one corrector and export the field", cmd_solve},
      {"effvisc", "assemble the effective viscosity tensor", cmd_effvisc},
      {"einstein", "sweep phi and fit the dilute slope", cmd_einstein},
      {"cluster", "cluster terms of a small configuration", cmd_cluster},
      {"bg", "second-order kernels and term", cmd_bg},
      {"bounds", "Voronoi cell-model bounds", cmd_bounds},
      {"mvp", "mean-value ratio check", cmd_mvp},
      {"converge", "finite-volume convergence study", cmd_converge},
  };
  std::vector<std::pair<CLI::App*, Handler>> subs;
  for (const auto& [name, help, handler] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    add_flags(sub, flags);
    subs.emplace_back(sub, handler);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  try {
    for (const auto& [sub, handler] : subs) {
      if (!sub->parsed()) continue;
      Context ctx;
      ctx.cfg = resolve(sub, flags);
      ctx.out = ctx.cfg.output_dir;
      handler(ctx);
    }
    return 0;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const SaturationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ConvergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const CampaignError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace suspvisc::cli

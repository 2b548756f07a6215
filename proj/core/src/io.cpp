#include "suspvisc/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>
#include <unistd.h>

#include "suspvisc/errors.hpp"

namespace suspvisc {

namespace {

std::vector<std::string> basis_names(int dim) {
  if (dim == 2) return {"(xx-yy)/sqrt2", "(xy+yx)/sqrt2"};
  return {"(xx-yy)/sqrt2", "(xx+yy-2zz)/sqrt6", "(xy+yx)/sqrt2", "(yz+zy)/sqrt2", "(xz+zx)/sqrt2"};
}

template <typename T>
T get_or(const Json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

}  // namespace

void to_json(Json& j, const Point& p) { j = Json::array({p[0], p[1], p[2]}); }

Json point_json(const Point& p, int dim) {
  Json j = Json::array();
  for (int a = 0; a < dim; ++a) j.push_back(p[a]);
  return j;
}

Json matrix_json(const Eigen::MatrixXd& m) {
  Json j = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(number_or_null(m(i, k)));
    j.push_back(std::move(row));
  }
  return j;
}

Eigen::MatrixXd matrix_from_json(const Json& j) {
  if (!j.is_array()) throw ValidationError("matrix must be an array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows ? static_cast<Eigen::Index>(j.at(0).size()) : 0;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const Json& row = j.at(static_cast<std::size_t>(i));
    if (static_cast<Eigen::Index>(row.size()) != cols) throw ValidationError("ragged matrix");
    for (Eigen::Index k = 0; k < cols; ++k) {
      const Json& v = row.at(static_cast<std::size_t>(k));
      m(i, k) = v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
    }
  }
  return m;
}

void to_json(Json& j, const ParticleConfig& c) {
  j = Json::object();
  j["dim"] = c.dim;
  j["box"] = c.box;
  j["gap"] = c.gap;
  j["seed"] = c.seed;
  Json centers = Json::array();
  for (const auto& p : c.centers) centers.push_back(point_json(p, c.dim));
  j["centers"] = std::move(centers);
}

void from_json(const Json& j, ParticleConfig& c) {
  c = ParticleConfig{};
  c.dim = j.at("dim").get<int>();
  c.box = j.at("box").get<double>();
  c.gap = get_or(j, "gap", 0.0);
  c.seed = get_or<std::uint64_t>(j, "seed", 0);
  check_dimension(c.dim);
  for (const auto& row : j.at("centers")) {
    if (row.size() != static_cast<std::size_t>(c.dim)) {
      throw ValidationError("center has the wrong number of coordinates");
    }
    Point p = Point::Zero();
    for (int a = 0; a < c.dim; ++a) p[a] = row.at(static_cast<std::size_t>(a)).get<double>();
    c.centers.push_back(p);
  }
  validate(c);
}

void to_json(Json& j, const EnsembleSpec& s) {
  j = Json::object();
  j["dim"] = s.dim;
  j["box"] = s.box;
  j["process"] = to_string(s.process);
  j["phi"] = s.volume_fraction;
  j["gap"] = s.gap;
  j["seed"] = s.seed;
}

void from_json(const Json& j, EnsembleSpec& s) {
  s = EnsembleSpec{};
  s.dim = get_or(j, "dim", s.dim);
  s.box = get_or(j, "box", s.box);
  if (j.contains("process")) s.process = parse_process(j.at("process").get<std::string>());
  s.volume_fraction = get_or(j, "phi", s.volume_fraction);
  s.gap = get_or(j, "gap", s.gap);
  s.seed = get_or(j, "seed", s.seed);
}

void to_json(Json& j, const SolverConfig& s) {
  j = Json::object();
  j["n"] = s.n;
  j["theta"] = s.theta;
  j["clamp"] = s.clamp;
  j["tolerance"] = s.tolerance;
  j["max_iterations"] = s.max_iterations;
  j["smoothing"] = s.smoothing;
  j["interface"] = to_string(s.interface);
}

void from_json(const Json& j, SolverConfig& s) {
  s = SolverConfig{};
  s.n = get_or(j, "n", s.n);
  s.theta = get_or(j, "theta", s.theta);
  s.clamp = get_or(j, "clamp", s.clamp);
  s.tolerance = get_or(j, "tolerance", s.tolerance);
  s.max_iterations = get_or(j, "max_iterations", s.max_iterations);
  s.smoothing = get_or(j, "smoothing", s.smoothing);
  if (j.contains("interface")) s.interface = parse_interface_rule(j.at("interface").get<std::string>());
}

void to_json(Json& j, const ViscosityMeta& m) {
  j = Json::object();
  j["dim"] = m.dim;
  j["L"] = m.box;
  j["n"] = m.n;
  j["theta"] = m.theta;
  j["phi"] = m.phi;
  j["phi_realized"] = m.phi_realized;
  j["gap"] = m.gap;
  j["process"] = m.process;
  j["seed"] = m.seed;
  j["n_configs"] = m.n_configs;
  j["skipped"] = m.skipped;
  j["richardson"] = m.richardson;
}

void from_json(const Json& j, ViscosityMeta& m) {
  m = ViscosityMeta{};
  m.dim = j.at("dim").get<int>();
  m.box = j.at("L").get<double>();
  m.n = j.at("n").get<int>();
  m.theta = j.at("theta").get<double>();
  m.phi = j.at("phi").get<double>();
  m.phi_realized = get_or(j, "phi_realized", m.phi);
  m.gap = get_or(j, "gap", 0.0);
  m.process = get_or<std::string>(j, "process", "");
  m.seed = get_or<std::uint64_t>(j, "seed", 0);
  m.n_configs = get_or<std::size_t>(j, "n_configs", 0);
  m.skipped = get_or<std::size_t>(j, "skipped", 0);
  m.richardson = get_or(j, "richardson", false);
}

void to_json(Json& j, const ViscosityTensor& t) {
  j = Json::object();
  j["basis"] = basis_names(t.meta.dim);
  j["B"] = matrix_json(t.B);
  j["stderr"] = matrix_json(t.stderr_);
  j["isotropic"] = t.isotropic();
  j["isotropic_stderr"] = t.isotropic_stderr();
  j["meta"] = t.meta;
  Json samples = Json::array();
  for (const auto& s : t.samples) samples.push_back(matrix_json(s));
  j["samples"] = std::move(samples);
  j["sample_phi"] = t.sample_phi;
  j["skipped_reasons"] = t.skipped_reasons;
}

void from_json(const Json& j, ViscosityTensor& t) {
  t = ViscosityTensor{};
  t.meta = j.at("meta").get<ViscosityMeta>();
  t.B = matrix_from_json(j.at("B"));
  t.stderr_ = matrix_from_json(j.at("stderr"));
  if (j.contains("samples")) {
    for (const auto& s : j.at("samples")) t.samples.push_back(matrix_from_json(s));
  }
  t.sample_phi = get_or<std::vector<double>>(j, "sample_phi", {});
  t.skipped_reasons = get_or<std::vector<std::string>>(j, "skipped_reasons", {});
  if (t.B.rows() != t.B.cols() || t.stderr_.rows() != t.B.rows() || t.stderr_.cols() != t.B.cols()) {
    throw ValidationError("viscosity tensor has inconsistent shapes");
  }
}

void to_json(Json& j, const PairCorrelation& pc) {
  j = Json::object();
  j["dim"] = pc.dim;
  j["box"] = pc.box;
  j["gap"] = pc.gap;
  j["n_configs"] = pc.n_configs;
  j["intensity"] = pc.intensity;
  j["intensity_stderr"] = pc.intensity_stderr;
  j["intensity2"] = pc.intensity2;
  j["fit_min"] = pc.fit_min;
  j["fit_max"] = pc.fit_max;
  j["decay_exponent"] = pc.decay_exponent ? Json(*pc.decay_exponent) : Json(nullptr);
  j["decay_exponent_stderr"] = pc.decay_exponent_stderr;
  j["tail_null"] = pc.tail_null;
  j["empty"] = pc.empty;
  j["bins"] = pc.bins();
}

void to_json(Json& j, const GeometryDiagnostics& g) {
  j = Json::object();
  j["gaps"] = g.gaps;
  j["min_gap"] = g.min_gap;
  j["r0"] = g.r0;
  j["fattening"] = g.fattening;
  j["moment_gaps"] = g.moment_gaps;
  j["moment_clusters"] = g.moment_clusters;
  Json comps = Json::array();
  for (const auto& c : g.components) {
    comps.push_back({{"members", c.members}, {"diameter", c.diameter}, {"volume", c.volume}});
  }
  j["components"] = std::move(comps);
  j["voronoi_inradii"] = g.voronoi_inradii;
}

void to_json(Json& j, const SandwichBounds& b) {
  j = Json::object();
  j["basis"] = basis_names(3);
  j["upper"] = b.upper;
  j["lower_estimate"] = b.lower_estimate;
  j["lower_is_estimate"] = true;
  j["inradii"] = b.inradii;
  j["share_radius"] = b.share_radius;
}

void to_json(Json& j, const ClusterReport& r) {
  j = Json::object();
  j["dim"] = r.dim;
  j["particles"] = r.particles;
  j["strain"] = matrix_json(r.strain.topLeftCorner(r.dim, r.dim));
  j["theta"] = r.theta;
  j["n"] = r.n;
  Json subsets = Json::array();
  for (std::size_t s = 0; s < r.energies.size(); ++s) {
    subsets.push_back({{"mask", s}, {"energy", r.energies[s]}, {"delta", r.deltas[s]}});
  }
  j["subsets"] = std::move(subsets);
  j["order_sums"] = r.order_sums;
  j["telescoping_residual"] = r.telescoping_residual;
}

void to_json(Json& j, const DiluteFit& f) {
  j = Json::object();
  j["dim"] = f.dim;
  j["basis"] = basis_names(f.dim);
  j["phi"] = f.phi;
  j["slope"] = matrix_json(f.slope);
  j["slope_stderr"] = matrix_json(f.slope_stderr);
  j["intercept"] = matrix_json(f.intercept);
  j["intercept_stderr"] = matrix_json(f.intercept_stderr);
  j["isotropic_slope"] = f.isotropic_slope;
  j["isotropic_slope_stderr"] = f.isotropic_slope_stderr;
  j["isotropic_intercept"] = f.isotropic_intercept;
  j["isotropic_intercept_stderr"] = f.isotropic_intercept_stderr;
  j["residuals"] = f.residuals;
  j["leverage"] = f.leverage;
  j["chi_square"] = f.chi_square;
  j["curvature"] = f.curvature;
  j["curvature_z"] = f.curvature_z;
  j["curvature_flag"] = f.curvature_flag;
  j["intercept_consistent"] = f.intercept_consistent;
  j["unit_weights"] = f.unit_weights;
}

void to_json(Json& j, const SecondOrderTerm& t) {
  j = Json::object();
  j["dim"] = t.dim;
  j["basis"] = basis_names(t.dim);
  j["near"] = matrix_json(t.near);
  j["far"] = matrix_json(t.far);
  j["total"] = matrix_json(t.total);
  j["total_stderr"] = matrix_json(t.total_stderr);
  j["near_scalar"] = t.near_scalar;
  j["far_scalar"] = t.far_scalar;
  j["far_scalar_stderr"] = t.far_scalar_stderr;
  j["far_exclusion_scalar"] = t.far_exclusion_scalar;
  j["far_sampled_scalar"] = t.far_sampled_scalar;
  j["far_sampled_stderr"] = t.far_sampled_stderr;
  j["scalar"] = t.scalar;
  j["scalar_stderr"] = t.scalar_stderr;
  j["near_tail"] = number_or_null(t.near_tail);
  j["far_tail"] = number_or_null(t.far_tail);
  j["tail_fraction"] = number_or_null(t.tail_fraction);
  j["ceiling"] = number_or_null(t.ceiling);
  j["within_ceiling"] = t.within_ceiling;
  j["anisotropy_z"] = t.anisotropy_z;
}

void to_json(Json& j, const NearKernelValue& v) {
  j = Json::object();
  j["reflection"] = v.reflection;
  j["numeric"] = v.numeric_available ? Json(v.numeric) : Json(nullptr);
  j["numeric_available"] = v.numeric_available;
  j["box_limited"] = v.box_limited;
  j["box"] = v.box;
  j["n"] = v.n;
  j["annulus_change"] = v.annulus_change;
}

void to_json(Json& j, const ConvergenceStudy& s) {
  j = Json::object();
  Json levels = Json::array();
  for (const auto& l : s.levels) {
    levels.push_back({{"L", l.box},
                      {"n", l.n},
                      {"B", matrix_json(l.tensor.B)},
                      {"stderr", matrix_json(l.tensor.stderr_)},
                      {"isotropic", l.isotropic},
                      {"isotropic_stderr", l.isotropic_stderr},
                      {"first_order", l.first_order},
                      {"second_order_partial", l.second_order_partial},
                      {"close_pairs", l.close_pairs}});
  }
  j["levels"] = std::move(levels);
  j["differences"] = s.differences;
  j["difference_stderr"] = s.difference_stderr;
  j["monotone"] = s.monotone;
  j["rate"] = s.rate_available ? Json(s.rate) : Json(nullptr);
  j["rate_stderr"] = s.rate_available ? Json(s.rate_stderr) : Json(nullptr);
}

void to_json(Json& j, const MvpReport& r) {
  j = Json::object();
  j["center"] = r.center;
  j["radius"] = r.radius;
  j["ratios"] = r.ratios;
  j["degenerate"] = r.degenerate;
  j["max_ratio"] = r.max_ratio;
}

void to_json(Json& j, const ParticleLoad& l) {
  j = Json::object();
  j["force"] = l.force;
  j["torque"] = l.torque;
}

// ---------------------------------------------------------------------------

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw Error("failed writing " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error("cannot rename onto " + path.string());
  }
}

void write_json(const std::filesystem::path& path, const Json& j) { write_atomic(path, j.dump(2) + "\n"); }

Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void CsvTable::add(std::vector<double> row) {
  if (row.size() != columns.size()) throw ValidationError("CSV row width differs from the header");
  rows.push_back(std::move(row));
}

std::string CsvTable::str() const {
  std::ostringstream os;
  os << "# " << meta.dump() << "\n";
  for (std::size_t c = 0; c < columns.size(); ++c) os << (c ? "," : "") << columns[c];
  os << "\n";
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "," : "") << format_number(row[c]);
    os << "\n";
  }
  return os.str();
}

void write_csv(const std::filesystem::path& path, const CsvTable& table) { write_atomic(path, table.str()); }

CsvTable pair_correlation_table(const PairCorrelation& pc) {
  CsvTable t;
  t.meta = pc;
  t.columns = {"r_lo", "r_hi", "f2", "h2", "stderr"};
  for (std::size_t b = 0; b < pc.bins(); ++b) {
    t.add({pc.edges[b], pc.edges[b + 1], pc.f2[b], pc.h2[b], pc.stderr_[b]});
  }
  return t;
}

CsvTable viscosity_long_table(std::span<const ViscosityTensor> tensors) {
  CsvTable t;
  t.columns = {"phi", "L", "i", "j", "Bij", "stderr"};
  Json metas = Json::array();
  for (const auto& v : tensors) {
    metas.push_back(v.meta);
    for (Eigen::Index i = 0; i < v.B.rows(); ++i) {
      for (Eigen::Index k = 0; k < v.B.cols(); ++k) {
        t.add({v.meta.phi_realized, v.meta.box, static_cast<double>(i), static_cast<double>(k), v.B(i, k),
               v.stderr_(i, k)});
      }
    }
  }
  t.meta["tensors"] = std::move(metas);
  return t;
}

CsvTable residual_history_table(const CorrectorField& f) {
  CsvTable t;
  t.meta = {{"n", f.n}, {"box", f.box}, {"theta", f.theta}, {"iterations", f.iterations}};
  t.columns = {"iteration", "residual"};
  for (std::size_t k = 0; k < f.history.size(); ++k) t.add({static_cast<double>(k), f.history[k]});
  return t;
}

CsvTable quadrature_trace_table(const SecondOrderTerm& t) {
  CsvTable out;
  out.meta = t;
  out.columns = {"r", "weight", "near_average", "far_average", "f2", "h2", "near_cumulative",
                 "far_cumulative"};
  for (const auto& row : t.trace) {
    out.add({row.radius, row.weight, row.near_average, row.far_average, row.f2, row.h2,
             row.near_cumulative, row.far_cumulative});
  }
  return out;
}

void write_field(const std::filesystem::path& stem, const CorrectorField& f, const Json& meta) {
  if (!f.grid) throw ValidationError("field has no grid");
  const int nc = sym_components(f.dim);
  std::vector<std::string> names;
  std::string bytes;
  const std::size_t size = f.grid->real_size();
  bytes.reserve((static_cast<std::size_t>(nc) + 1) * size * sizeof(double));
  auto append = [&](const RealBuffer& b) {
    bytes.append(reinterpret_cast<const char*>(b.data()), b.size() * sizeof(double));
  };
  const char* axes = "xyz";
  for (int c = 0; c < nc; ++c) {
    const auto [i, j] = sym_pair(f.dim, c);
    names.push_back(std::string("D_") + axes[i] + axes[j]);
    append(f.strain_field[static_cast<std::size_t>(c)]);
  }
  names.emplace_back("pressure");
  append(f.pressure);

  Json side = Json::object();
  side["dims"] = std::vector<int>(static_cast<std::size_t>(f.dim), f.n);
  side["box"] = f.box;
  side["components"] = names;
  side["dtype"] = "f64";
  side["order"] = "row-major";
  side["location"] = "cell centres";
  side["file"] = stem.filename().string() + ".bin";
  side["meta"] = meta;
  std::filesystem::path bin = stem;
  bin += ".bin";
  std::filesystem::path js = stem;
  js += ".json";
  write_atomic(bin, bytes);
  write_json(js, side);
}

}  // namespace suspvisc

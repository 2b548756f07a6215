#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "suspvisc/analytic_sphere.hpp"
#include "suspvisc/dilute.hpp"
#include "suspvisc/effective_viscosity.hpp"
#include "suspvisc/ensembles.hpp"
#include "suspvisc/spectral_stokes.hpp"

namespace suspvisc {

using Json = nlohmann::ordered_json;

// JSON conversions. Matrices are nested row arrays.
void to_json(Json& j, const Point& p);
Json point_json(const Point& p, int dim);
Json matrix_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const Json& j);

void to_json(Json& j, const ParticleConfig& c);
void from_json(const Json& j, ParticleConfig& c);
void to_json(Json& j, const EnsembleSpec& s);
void from_json(const Json& j, EnsembleSpec& s);
void to_json(Json& j, const SolverConfig& s);
void from_json(const Json& j, SolverConfig& s);
void to_json(Json& j, const ViscosityMeta& m);
void from_json(const Json& j, ViscosityMeta& m);
void to_json(Json& j, const ViscosityTensor& t);
void from_json(const Json& j, ViscosityTensor& t);
void to_json(Json& j, const PairCorrelation& pc);
void to_json(Json& j, const GeometryDiagnostics& g);
void to_json(Json& j, const SandwichBounds& b);
void to_json(Json& j, const ClusterReport& r);
void to_json(Json& j, const DiluteFit& f);
void to_json(Json& j, const SecondOrderTerm& t);
void to_json(Json& j, const NearKernelValue& v);
void to_json(Json& j, const ConvergenceStudy& s);
void to_json(Json& j, const MvpReport& r);
void to_json(Json& j, const ParticleLoad& l);

/// Writes to a temporary file next to `path`, then renames it over `path`.
void write_atomic(const std::filesystem::path& path, const std::string& content);
void write_json(const std::filesystem::path& path, const Json& j);
Json read_json(const std::filesystem::path& path);

/// Shortest decimal that round-trips to the same double.
std::string format_number(double v);

/// CSV with a first comment line `# {json}` carrying the producing
/// configuration, then a header row and the data rows.
struct CsvTable {
  Json meta = Json::object();
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  void add(std::vector<double> row);
  std::string str() const;
};

void write_csv(const std::filesystem::path& path, const CsvTable& table);

/// Pair statistics: r_lo, r_hi, f2, h2, stderr.
CsvTable pair_correlation_table(const PairCorrelation& pc);
/// Long format: phi, L, i, j, Bij, stderr.
CsvTable viscosity_long_table(std::span<const ViscosityTensor> tensors);
/// Solver log: iteration, residual.
CsvTable residual_history_table(const CorrectorField& f);
/// Quadrature trace of the second-order term.
CsvTable quadrature_trace_table(const SecondOrderTerm& t);

/// Writes D(psi) and the pressure as flat little-endian f64 arrays in
/// row-major order to `<stem>.bin`, with a JSON sidecar `<stem>.json`
/// describing {dims, box, components, dtype, order}.
void write_field(const std::filesystem::path& stem, const CorrectorField& f, const Json& meta);

}  // namespace suspvisc

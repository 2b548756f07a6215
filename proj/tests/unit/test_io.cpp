#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "doctest.h"
#include "suspvisc/ensembles.hpp"
#include "suspvisc/io.hpp"

using namespace suspvisc;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "suspvisc_test_io";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("configuration round trip") {
  EnsembleSpec spec;
  spec.dim = 2;
  spec.box = 20.0;
  spec.volume_fraction = 0.05;
  spec.gap = 0.25;
  spec.seed = 7;
  const ParticleConfig c = generate(spec);
  const Json j = c;
  const ParticleConfig back = j.get<ParticleConfig>();
  CHECK(back.dim == c.dim);
  CHECK(back.box == c.box);
  CHECK(back.gap == c.gap);
  CHECK(back.seed == c.seed);
  REQUIRE(back.size() == c.size());
  for (std::size_t i = 0; i < c.size(); ++i) CHECK(back.centers[i] == c.centers[i]);

  const EnsembleSpec s2 = Json(spec).get<EnsembleSpec>();
  CHECK(s2.volume_fraction == spec.volume_fraction);
  CHECK(s2.process == spec.process);
  CHECK(s2.seed == spec.seed);
}

TEST_CASE("solver config and tensor round trip") {
  SolverConfig sc;
  sc.n = 48;
  sc.theta = 250.0;
  sc.interface = InterfaceRule::arithmetic;
  sc.smoothing = false;
  const SolverConfig sc2 = Json(sc).get<SolverConfig>();
  CHECK(sc2.n == 48);
  CHECK(sc2.theta == 250.0);
  CHECK(sc2.interface == InterfaceRule::arithmetic);
  CHECK_FALSE(sc2.smoothing);

  ViscosityTensor t;
  t.B = Eigen::MatrixXd::Identity(2, 2) * 1.1;
  t.stderr_ = Eigen::MatrixXd::Constant(2, 2, std::numeric_limits<double>::quiet_NaN());
  t.meta.dim = 2;
  t.meta.phi = 0.03;
  t.samples = {t.B};
  t.sample_phi = {0.031};
  const ViscosityTensor t2 = Json(t).get<ViscosityTensor>();
  CHECK(t2.B == t.B);
  CHECK(std::isnan(t2.stderr_(0, 1)));
  CHECK(t2.meta.phi == 0.03);
  CHECK(t2.sample_phi == t.sample_phi);
}

TEST_CASE("numbers round trip through their shortest form") {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 2.5e17, -7.0}) CHECK(std::stod(format_number(v)) == v);
}

TEST_CASE("csv carries a metadata comment and a header") {
  CsvTable t;
  t.meta["phi"] = 0.02;
  t.columns = {"a", "b"};
  t.add({1.0, 0.5});
  t.add({2.0, 0.25});
  std::istringstream in(t.str());
  std::string line;
  std::getline(in, line);
  REQUIRE(line.rfind("# ", 0) == 0);
  CHECK(Json::parse(line.substr(2))["phi"] == 0.02);
  std::getline(in, line);
  CHECK(line == "a,b");
  std::getline(in, line);
  CHECK(line == "1,0.5");
  CHECK_THROWS(t.add({1.0}));
}

TEST_CASE("atomic write leaves only the final file") {
  const fs::path p = scratch("out.json");
  write_json(p, Json{{"x", 1}});
  write_json(p, Json{{"x", 2}});
  CHECK(read_json(p)["x"] == 2);
  for (const auto& e : fs::directory_iterator(p.parent_path()))
    CHECK(e.path().filename().string().find(".tmp") == std::string::npos);
}

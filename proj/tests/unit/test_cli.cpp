#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "doctest.h"

using namespace suspvisc;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "suspvisc_test_cli" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("INI round trip") {
  cli::CampaignConfig c;
  c.command = "effvisc";
  c.ensemble.dim = 2;
  c.ensemble.process = ProcessKind::matern_ii;
  c.ensemble.gap = 0.5;
  c.solver.n = 48;
  c.solver.theta = 300.0;
  c.phis = {0.01, 0.02};
  c.boxes = {16.0};
  c.n_configs = 5;
  c.seed = 99;
  c.radii = {3.0, 4.0};
  c.near_numeric = true;
  c.mvp_driver = MvpDriver::exterior_force;
  const cli::CampaignConfig back = cli::parse_ini(cli::emit_ini(c));
  CHECK(cli::to_json(back) == cli::to_json(c));
  CHECK_THROWS(cli::parse_ini("[bogus]\nx = 1\n"));
}

TEST_CASE("gen writes a reproducible configuration") {
  const fs::path a = scratch("a"), b = scratch("b");
  for (const fs::path& d : {a, b}) {
    const int code = cli::run({"suspvisc", "gen", "--dim", "2", "--L", "20", "--phi", "0.05",
                               "--seed", "3", "--out", d.string()});
    REQUIRE(code == 0);
  }
  CHECK(fs::exists(a / "config.json"));
  CHECK(slurp(a / "config.json") == slurp(b / "config.json"));
}

TEST_CASE("invalid input exits with code 2") {
  const fs::path d = scratch("bad");
  CHECK(cli::run({"suspvisc", "gen", "--phi", "0.5", "--out", d.string()}) == 2);
  CHECK(cli::run({"suspvisc", "gen", "--dim", "4", "--out", d.string()}) == 2);
  CHECK(cli::run({"suspvisc", "frobnicate"}) == 2);
}

TEST_CASE("effvisc on an empty ensemble gives the identity") {
  const fs::path d = scratch("eff");
  const int code = cli::run({"suspvisc", "effvisc", "--dim", "2", "--L", "8", "--phi", "0",
                             "--n", "16", "--theta", "100", "--configs", "2", "--out", d.string()});
  REQUIRE(code == 0);
  const Json j = read_json(d / "effvisc.json");
  CHECK(j.dump().find("isotropic") != std::string::npos);
  CHECK(fs::exists(d / "effvisc.csv"));
}

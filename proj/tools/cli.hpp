#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "suspvisc/io.hpp"

namespace suspvisc::cli {

/// Everything a subcommand needs. The INI file has sections [campaign],
/// [ensemble] and [solver]; every value is JSON (bare words read as strings).
struct CampaignConfig {
  std::string command;
  EnsembleSpec ensemble;
  SolverConfig solver;
  std::vector<double> phis;
  std::vector<double> boxes;
  std::size_t n_configs = 8;
  std::string output_dir;
  /// Master seed; configuration c uses derive_seed(seed, c).
  std::uint64_t seed = 0;
  int jobs = 1;

  // Subcommand parameters.
  std::string input;
  int strain = 0;
  std::vector<double> radii;
  bool allow_large = false;
  bool richardson = false;
  bool near_numeric = false;
  bool second_order = true;
  double mvp_radius = 6.0;
  int mvp_samples = 20;
  MvpDriver mvp_driver = MvpDriver::clamp;
  double pair_cutoff = 5.0;
  double bin_width = 0.1;
};

Json to_json(const CampaignConfig& c);
CampaignConfig from_json(const Json& j);
std::string emit_ini(const CampaignConfig& c);
/// Values present in `text` override those of `base`.
CampaignConfig parse_ini(std::string_view text, const CampaignConfig& base = {});

/// Full command line including the program name. Returns the exit code:
/// 0 success, 2 invalid input, 3 solver non-convergence, 4 campaign failure.
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);

}  // namespace suspvisc::cli

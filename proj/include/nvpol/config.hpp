#pragma once

// Declarative run configuration: an INI-style key/value file (JSON accepted
// as an alternative), strict validation with itemized errors, study
// dispatch, deterministic artifact emission and a JSON run manifest.

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "nvpol/illumination.hpp"
#include "nvpol/lindblad.hpp"
#include "nvpol/model.hpp"
#include "nvpol/spectra.hpp"

namespace nvpol {

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> errors);
  const std::vector<std::string>& errors() const { return errors_; }

 private:
  std::vector<std::string> errors_;
};

enum class Study {
  Evolve,
  Steady,
  Sweep,
  Matchfield,
  Pumpscan,
  Couplingscan,
  Illum,
};

struct EvolveConfig {
  double t_max_us = 200.0;
  int n_times = 401;
  bool log_times = false;
  bool lindblad = false;      // unitary unless set
  double pump_rate_mhz = 0.0; // Lindblad only
  bool use_t1 = false;
  std::vector<double> fields_mT;  // empty: params.B
  bool n_nv_level0 = false;       // start the NV 14N in m = 0
};

struct SteadyConfig {
  double pump_rate_mhz = 0.009;
};

struct MatchfieldConfig {
  double theta_min_deg = 0.0;
  double theta_max_deg = 35.0;
  int n_theta = 36;
  bool emit_cluster_table = true;  // all five conditions per theta
};

struct PumpscanConfig {
  double rate_min_mhz = 1e-3;
  double rate_max_mhz = 2.0;
  int n_rates = 25;               // log spaced
  std::vector<double> rates_mhz;  // explicit grid overrides the above
  bool auto_field = true;  // place B on the carbon amplitude peak
};

struct CouplingscanConfig {
  std::vector<double> couplings_mhz = {0.1, 0.25, 0.5, 1, 2, 4, 8, 13};
  CouplingScanOptions window;
};

struct IllumConfig {
  std::vector<double> radii_mm = {0.3, 1.2, 1.8};
  double power_min_W = 0.01;
  double power_max_W = 10.0;
  int n_powers = 25;  // log spaced
  double p_nv_max = 0.8;
  double i_sat = 10.0;
  double kappa = 6.9e-3;
  // pump-rate grid behind the P_C(R) map
  int n_map_rates = 15;
};

struct RunConfig {
  Study study = Study::Sweep;
  ModelVariant variant = ModelVariant::NvCoupledCarbon;
  std::vector<Site> sites;  // register members, canonical order
  ModelParams params;
  RelaxationTimes t1;
  SweepConfig sweep;
  EvolveConfig evolve;
  SteadyConfig steady;
  MatchfieldConfig matchfield;
  PumpscanConfig pumpscan;
  CouplingscanConfig couplingscan;
  IllumConfig illum;
  std::filesystem::path out_dir = "out";

  SpinRegister make_register() const { return SpinRegister::with_sites(sites); }
};

// Parses .json by extension, INI-style key/value otherwise. Throws
// ConfigError listing every unknown key and violated bound.
RunConfig load_config(const std::filesystem::path& file);
RunConfig config_from_json_text(const std::string& text);

// Serialized resolved config (defaults expanded); round-trips unchanged.
std::string config_to_json_text(const RunConfig& config);

struct RunManifest {
  std::string study;
  std::vector<std::string> artifacts;
  double wall_clock_s = 0.0;
  std::string version;
  std::map<std::string, double> metrics;  // residuals, key scalars
  std::vector<std::pair<std::string, bool>> checks;  // reproduce only
  std::string to_json() const;
};

// Runs the configured study, writes artifacts + manifest.json to
// config.out_dir, returns the manifest.
RunManifest run(const RunConfig& config);

// Pre-baked study configurations named after the result they regenerate.
std::vector<std::string> reproduce_ids();
RunManifest reproduce(const std::string& figure_id,
                      const std::filesystem::path& out_dir);

const char* version_string();

}  // namespace nvpol

#include <CLI11.hpp>

#include <cstdio>

#include "nvpol/config.hpp"

// Batch front-end. Exit codes: 0 success, 2 invalid configuration,
// 3 solver failure.

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitSolver = 3;

int guarded(const std::function<void()>& body) {
  try {
    body();
    return 0;
  } catch (const nvpol::ConfigError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return kExitValidation;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "invalid input: %s\n", e.what());
    return kExitValidation;
  } catch (const nvpol::SolverError& e) {
    std::fprintf(stderr, "solver failure: %s\n", e.what());
    return kExitSolver;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitSolver;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"NV-P1 cross-relaxation polarization simulator"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run_cmd = app.add_subcommand("run", "run a configured study");
  run_cmd->add_option("config", config_path, "config file (.ini-style or .json)")
      ->required();

  std::string validate_path;
  auto* val_cmd =
      app.add_subcommand("validate", "validate a config without running");
  val_cmd->add_option("config", validate_path, "config file")->required();

  std::string figure_id;
  std::string out_dir = "out";
  bool list_ids = false;
  auto* rep_cmd =
      app.add_subcommand("reproduce", "run a pre-baked study preset");
  rep_cmd->add_option("figure", figure_id, "preset id (see --list)");
  rep_cmd->add_option("--out", out_dir, "output directory");
  rep_cmd->add_flag("--list", list_ids, "list preset ids");

  CLI11_PARSE(app, argc, argv);

  if (run_cmd->parsed()) {
    return guarded([&] {
      const nvpol::RunConfig cfg = nvpol::load_config(config_path);
      const nvpol::RunManifest m = nvpol::run(cfg);
      std::printf("study %s finished in %.2f s; %zu artifacts in %s\n",
                  m.study.c_str(), m.wall_clock_s, m.artifacts.size(),
                  cfg.out_dir.string().c_str());
    });
  }
  if (val_cmd->parsed()) {
    return guarded([&] {
      nvpol::load_config(validate_path);
      std::printf("config ok\n");
    });
  }
  if (rep_cmd->parsed()) {
    if (list_ids) {
      for (const auto& id : nvpol::reproduce_ids()) std::printf("%s\n", id.c_str());
      return 0;
    }
    if (figure_id.empty()) {
      std::fprintf(stderr, "reproduce: figure id required (or --list)\n");
      return kExitValidation;
    }
    return guarded([&] {
      const nvpol::RunManifest m = nvpol::reproduce(figure_id, out_dir);
      int failed = 0;
      for (const auto& [name, ok] : m.checks)
        if (!ok) ++failed;
      std::printf("%s: %zu checks, %d failed\n", figure_id.c_str(),
                  m.checks.size(), failed);
    });
  }
  return 0;
}

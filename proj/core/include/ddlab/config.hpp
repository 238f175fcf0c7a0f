#pragma once

#include <string>
#include <vector>

#include "ddlab/evolution.hpp"
#include "ddlab/grid.hpp"
#include "ddlab/model.hpp"
#include "ddlab/stationary.hpp"

namespace ddlab {

struct ExperimentConfig {
  std::string name = "run";
  std::vector<double> eps_sweep;
  std::vector<double> omega_list;
  int k = 2;
  long seed = 0;
  double perturbation = 0.05;
};

struct OutputConfig {
  std::string directory = "out";
  std::string format = "csv";  // csv | json
};

struct RunConfig {
  ModelParams params;
  Grid1D grid;
  JkoConfig jko;
  ExperimentConfig experiment;
  OutputConfig output;
  std::string hash;  // of the canonical config document
};

// Strict parse: unknown keys are errors. Throws ConfigurationError.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::string& path);

std::string config_hash(const std::string& json_text);

void write_density_csv(const std::string& path, const Density& d);
void write_state_csv(const std::string& path, const StationaryState& state);
void write_state_json(const std::string& path, const StationaryState& state,
                      const std::string& cfg_hash, double residual);
void write_trajectory_csv(const std::string& path, const TrajectoryRecord& rec);
void write_trajectory_json(const std::string& path, const TrajectoryRecord& rec,
                           const std::string& cfg_hash);
void write_meta_json(const std::string& path, const std::string& cfg_hash,
                     const std::string& kind);

}  // namespace ddlab

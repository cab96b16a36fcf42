#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "saalab/econometrics.hpp"
#include "saalab/simulation.hpp"

namespace saalab {

struct EquilibriumRequest {
  std::vector<double> alpha_grid{0.0};
  int grid_size = 2001;
  double cost_lo = 1.0;
  double cost_hi = 3.0;
};

struct PipelineConfig {
  int schema_version = 1;
  std::filesystem::path out_dir = "out";
  SimConfig sim;
  EquilibriumRequest equilibrium;
  std::vector<Response> regressions{Response::NBidders, Response::LogOffer,
                                    Response::LogWin};
  std::vector<Weighting> weightings{Weighting::Quantity, Weighting::ProductEqualized};
  HcFlavor hc = HcFlavor::HC1;
  bool emit_text_tables = true;
};

// strict parse: unknown keys rejected, schema_version required
PipelineConfig parse_pipeline_config(const std::string& json_text);
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

struct PipelineResult {
  std::vector<std::string> artifacts;  // relative names, manifest last
  std::filesystem::path manifest_path;
};

// simulate -> reports -> regressions -> artifacts; the manifest is written
// last. Any stage error is rethrown prefixed with the stage name and partial
// artifacts are removed.
PipelineResult run_pipeline(const PipelineConfig& config);

}  // namespace saalab

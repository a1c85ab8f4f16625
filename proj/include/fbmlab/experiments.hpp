#pragma once

#include "fbmlab/config.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace fbmlab {

/// Catalog entry. `params` lists the keys of the [params] section; field
/// sections additionally need every key of their field (see field_parameters).
struct ExperimentInfo {
  std::string name;
  int criterion = 0;
  std::string claim;
  std::vector<std::string> params;
  std::vector<std::string> field_sections;  // e.g. {"field"} or {"field", "interaction"}
};

const std::vector<ExperimentInfo>& list_experiments();
/// Throws ValidationError for unknown names.
const ExperimentInfo& find_experiment(const std::string& name);

/// Structural checks (sections, exact keys, value ranges) and the regime
/// preconditions of the experiment. Throws ValidationError.
void validate_config(const Config& cfg);

/// One row of points.csv.
struct PlotPoint {
  std::string series;
  double x = 0.0;
  double y = 0.0;
  double y_err = 0.0;
};

/// In-memory outcome of an experiment; no files touched.
struct ExperimentOutput {
  nlohmann::json summary;         // experiment specific statistics, including "headline"
  std::vector<PlotPoint> points;
  bool divergence = false;
};

ExperimentOutput execute_experiment(const Config& cfg);

struct RunSummary {
  std::string experiment;
  std::string config_digest;
  std::string config_echo;  // canonical config text
  std::filesystem::path directory;
  std::vector<std::string> files;
  nlohmann::json headline;
  double wall_seconds = 0.0;
  std::string digest;  // FNV over the bytes of every produced file except manifest.json
  bool divergence = false;
};

/// Output root: $FBMLAB_OUTPUT_ROOT when set, otherwise [experiment] output.
std::filesystem::path output_root(const Config& cfg);

/// Validates, runs, and writes points.csv, summary.json and manifest.json to
/// <root>/<name>-<config digest prefix>/. Existing files are overwritten.
RunSummary run_experiment(const Config& cfg);
RunSummary run_experiment(const Config& cfg, const std::filesystem::path& root);

/// Plot-ready CSV from a run directory. kind "series": series,x,y,y_err;
/// kind "loglog": series,log_x,log_y,fit_y (least-squares line per series,
/// nonpositive points dropped). Throws NumericalError when the run has no
/// data; nothing is written in that case.
std::filesystem::path emit_plot_data(const std::filesystem::path& run_dir, const std::string& kind);

}  // namespace fbmlab

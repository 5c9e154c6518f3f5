#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "rrglab/steinlab.hpp"

namespace rrg {

inline constexpr std::string_view kToolVersion = "0.1.0";
inline constexpr int kSchemaVersion = 1;

enum class ExperimentKind { sample, spectrum, clt, locallaw, interpolate, malliavin, scaling };

std::string_view to_string(ExperimentKind kind);
/// Throws ValidationError for unknown names.
ExperimentKind parse_experiment_kind(std::string_view name);

struct ExperimentSpec {
  ExperimentKind experiment = ExperimentKind::clt;
  std::vector<int> ns;
  std::vector<int> ds;
  int M = 0;  ///< samples (graphs) per cell; experiment-specific default
  std::vector<double> energies{2.0};
  std::vector<double> etas{0.0};  ///< 0 means n^{-1/2}
  std::vector<double> ts{0.001, 0.01, 0.1};  ///< Delta_t times (interpolate)
  double coupling_t = 0.0;   ///< 0 means n^{-1/3}
  int s_points = 21;
  std::string s_grid = "uniform";  ///< uniform | log
  int profiles = 20;
  DirectionSpec direction;
  std::string inject = "none";  ///< none | normal (control stream for clt / scaling)
  int check_edges = 20;
  int variance_M = 0;  ///< > 0 adds a variance decomposition per malliavin cell
  int bootstrap = 1000;
  bool kappa4_table = false;
  std::uint64_t base_seed = 0;
  int workers = 1;
  std::string output_dir = ".";

  /// Effective key=value pairs (defaults filled), sorted by key.
  std::map<std::string, std::string> echo() const;
};

/// key = value lines, '#' comments, optional [section] headers (ignored;
/// keys are global). `overrides` are applied after the text and before
/// validation. Throws ParseError ("line K: ...") and ValidationError.
ExperimentSpec parse_spec(std::string_view text, const std::map<std::string, std::string>& overrides = {});

struct CellSummary {
  int n = 0;
  int d = 0;
  int samples = 0;
  int excluded = 0;
};

struct RunManifest {
  std::map<std::string, std::string> spec;
  std::string version;
  std::vector<std::string> files;  ///< relative to the output directory
  std::vector<CellSummary> cells;
  double wall_seconds = 0.0;
  std::string path;  ///< manifest.json
};

struct RunOptions {
  /// Called before every cell; throwing from it simulates a mid-run failure.
  std::function<void(std::size_t cell)> before_cell;
};

/// Dispatches to the experiment pipeline. Artifacts are written as
/// NAME.partial and renamed only once every cell succeeded; manifest.json is
/// written last. On failure the .partial files stay and no manifest appears.
RunManifest run(const ExperimentSpec& spec, const RunOptions& options = {});

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  int column(std::string_view name) const;  ///< -1 when absent
  std::string to_csv() const;
};

enum class PlotKind { loglog_scatter_with_fit, histogram_vs_normal, error_vs_s };

/// loglog: columns x, y (positive); histogram: bin_lo, bin_hi, count;
/// error-vs-s: s, err. Throws BadColumns on missing columns or no rows.
std::string render_plot(const Table& data, PlotKind kind, const std::string& title = "");
void emit_plot(const Table& data, PlotKind kind, const std::string& path, const std::string& title = "");

/// Equal-width bins on [lo, hi]; values outside are clamped into the end bins.
Table histogram_table(const std::vector<double>& samples, int bins = 40, double lo = -4.0, double hi = 4.0);

}  // namespace rrg

// File outputs of a study run: per-step CSV, summary JSON and SVG panels.
// Plots only draw columns that are also written to the CSV.

#ifndef MLSMOOTH_OUTPUT_HPP
#define MLSMOOTH_OUTPUT_HPP

#include "mlsmooth/study.hpp"

#include <ostream>
#include <string>
#include <vector>

namespace mlsmooth {

/// Columns: k, x_true[i], xhat_filt[i], xhat_rts[i], xhat_smc[i],
/// sigma_theory[i], sigma_hat[i], ci_lo[i], ci_hi[i], converged.
/// Values use 17 significant digits.
void write_study_csv(const RunReport& report, std::ostream& out);

/// Columns: k, s_sample[i], sigma_hat[i]. Empty rows are skipped.
void write_standard_error_csv(const RunReport& report, std::ostream& out);

/// Columns: k, x[i], y[j].
void write_trajectory_csv(const Trajectory& traj, std::ostream& out);

/// Coverage, convergence and timing summary.
std::string summary_json(const RunReport& report);

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::string color = "#1f77b4";
  bool dashed = false;
};

struct Band {
  std::vector<double> x;
  std::vector<double> lo;
  std::vector<double> hi;
  std::string color = "#1f77b4";
};

struct Panel {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
  std::vector<Band> bands;
};

/// Standalone SVG document. Non-finite points break lines.
std::string render_svg(const Panel& panel);

/// Writes the CSV files, summary.json and one SVG per panel into dir.
/// Returns the written paths.
std::vector<std::string> write_outputs(const RunReport& report, const std::string& dir);

} // namespace mlsmooth

#endif // MLSMOOTH_OUTPUT_HPP

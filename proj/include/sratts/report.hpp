#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sratts/evaluation.hpp"

namespace sratts {

// Shortest decimal that round-trips to the same double.
std::string format_double(double v);

// File stem safe for any label: [A-Za-z0-9_.-], everything else becomes '_'.
std::string sanitize_label(const std::string& label);

// Each writes <label>_<kind>.csv, .json and .svg into out_dir (created if
// needed) and returns the paths in that order.
std::vector<std::filesystem::path> emit_report(const SrErrorReport& report,
                                               const std::filesystem::path& out_dir);
std::vector<std::filesystem::path> emit_report(const PitchReport& report,
                                               const std::filesystem::path& out_dir);
std::vector<std::filesystem::path> emit_report(const LinearityReport& report,
                                               const std::filesystem::path& out_dir);

struct ChartSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;  // NaN points are skipped
};

// Self-contained SVG line chart.
std::string render_line_chart(const std::string& title, const std::string& x_label,
                              const std::string& y_label,
                              const std::vector<ChartSeries>& series);

// Mean SR error of several models on one chart.
std::filesystem::path emit_sr_comparison(const std::vector<SrErrorReport>& reports,
                                         const std::filesystem::path& path);

}  // namespace sratts

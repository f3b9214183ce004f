#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace sc {

/// One polyline of an SVG plot.
struct Series {
  std::string label;
  std::vector<std::pair<double, double>> pts;
  std::string color = "#1f77b4";
  bool dashed = false;
};

struct PlotOptions {
  std::string title, xlabel, ylabel;
  bool log_y = false;
  double y_floor = 0.0;  // clamp applied before log scaling (plot floor)
};

/// Static SVG line plot; a pure function of the data.
void write_svg_plot(const std::filesystem::path& path, const PlotOptions& opt,
                    const std::vector<Series>& series);

/// Minimal CSV writing: fields joined with commas, one row per line.
/// Fields must not contain commas or newlines (enforced by sanitize_field).
std::string sanitize_field(std::string s);
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

/// Formats a double with enough digits to round-trip, "nan" for NaN.
std::string fmt_num(double v);

}  // namespace sc

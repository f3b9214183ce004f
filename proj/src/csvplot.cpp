#include "sc/csvplot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace sc {

std::string fmt_num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

std::string sanitize_field(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  return s;
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_csv: cannot open " + path.string());
  for (std::size_t i = 0; i < header.size(); ++i)
    out << (i ? "," : "") << sanitize_field(header[i]);
  out << "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << sanitize_field(row[i]);
    out << "\n";
  }
}

namespace {

struct Mapper {
  double x0, x1, y0, y1;  // data range
  bool logy;
  static constexpr double kLeft = 70, kRight = 780, kTop = 40, kBottom = 520;

  double tx(double x) const { return kLeft + (x - x0) / (x1 - x0) * (kRight - kLeft); }
  double ty(double y) const {
    const double v = logy ? std::log10(y) : y;
    const double v0 = logy ? std::log10(y0) : y0;
    const double v1 = logy ? std::log10(y1) : y1;
    return kBottom - (v - v0) / (v1 - v0) * (kBottom - kTop);
  }
};

std::string xml_escape(const std::string& s) {
  std::string o;
  for (char c : s) {
    if (c == '<') o += "&lt;";
    else if (c == '>') o += "&gt;";
    else if (c == '&') o += "&amp;";
    else o += c;
  }
  return o;
}

}  // namespace

void write_svg_plot(const std::filesystem::path& path, const PlotOptions& opt,
                    const std::vector<Series>& series) {
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (const auto& s : series)
    for (auto [x, y] : s.pts) {
      double yy = y;
      if (opt.log_y) yy = std::max(yy, opt.y_floor > 0 ? opt.y_floor : 1e-12);
      if (!std::isfinite(x) || !std::isfinite(yy)) continue;
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      y0 = std::min(y0, yy);
      y1 = std::max(y1, yy);
    }
  if (x0 > x1) { x0 = 0; x1 = 1; }
  if (y0 > y1) { y0 = 0; y1 = 1; }
  if (x1 == x0) { x1 = x0 + 1; }
  if (y1 == y0) { y1 = y0 + (opt.log_y ? y0 * 9 + 1e-12 : 1); }
  if (opt.log_y) {
    y0 = std::pow(10.0, std::floor(std::log10(y0)));
    y1 = std::pow(10.0, std::ceil(std::log10(y1)));
  }
  const Mapper m{x0, x1, y0, y1, opt.log_y};

  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_svg_plot: cannot open " + path.string());
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='860' height='600' "
         "font-family='sans-serif' font-size='13'>\n";
  out << "<rect width='860' height='600' fill='white'/>\n";
  out << "<text x='430' y='22' text-anchor='middle' font-size='16'>" << xml_escape(opt.title)
      << "</text>\n";

  // Axes box.
  out << "<rect x='" << Mapper::kLeft << "' y='" << Mapper::kTop << "' width='"
      << Mapper::kRight - Mapper::kLeft << "' height='" << Mapper::kBottom - Mapper::kTop
      << "' fill='none' stroke='black'/>\n";

  // X ticks: 6 evenly spaced.
  for (int i = 0; i <= 5; ++i) {
    const double x = x0 + (x1 - x0) * i / 5.0;
    const double px = m.tx(x);
    out << "<line x1='" << px << "' y1='" << Mapper::kBottom << "' x2='" << px << "' y2='"
        << Mapper::kBottom + 5 << "' stroke='black'/>\n";
    out << "<text x='" << px << "' y='" << Mapper::kBottom + 20 << "' text-anchor='middle'>"
        << fmt_num(std::round(x * 1e6) / 1e6) << "</text>\n";
  }
  // Y ticks: decades when log, 6 even steps otherwise.
  if (opt.log_y) {
    for (double d = std::log10(y0); d <= std::log10(y1) + 1e-9; d += 1.0) {
      const double y = std::pow(10.0, d);
      const double py = m.ty(y);
      out << "<line x1='" << Mapper::kLeft - 5 << "' y1='" << py << "' x2='" << Mapper::kLeft
          << "' y2='" << py << "' stroke='black'/>\n";
      out << "<line x1='" << Mapper::kLeft << "' y1='" << py << "' x2='" << Mapper::kRight
          << "' y2='" << py << "' stroke='#dddddd'/>\n";
      out << "<text x='" << Mapper::kLeft - 8 << "' y='" << py + 4
          << "' text-anchor='end'>1e" << static_cast<int>(std::lround(d)) << "</text>\n";
    }
  } else {
    for (int i = 0; i <= 5; ++i) {
      const double y = y0 + (y1 - y0) * i / 5.0;
      const double py = m.ty(y);
      out << "<line x1='" << Mapper::kLeft - 5 << "' y1='" << py << "' x2='" << Mapper::kLeft
          << "' y2='" << py << "' stroke='black'/>\n";
      out << "<text x='" << Mapper::kLeft - 8 << "' y='" << py + 4 << "' text-anchor='end'>"
          << fmt_num(std::round(y * 1e6) / 1e6) << "</text>\n";
    }
  }
  out << "<text x='430' y='560' text-anchor='middle'>" << xml_escape(opt.xlabel) << "</text>\n";
  out << "<text x='18' y='280' text-anchor='middle' transform='rotate(-90 18 280)'>"
      << xml_escape(opt.ylabel) << "</text>\n";

  int li = 0;
  for (const auto& s : series) {
    out << "<polyline fill='none' stroke='" << s.color << "' stroke-width='1.8'"
        << (s.dashed ? " stroke-dasharray='7,4'" : "") << " points='";
    for (auto [x, y] : s.pts) {
      double yy = y;
      if (opt.log_y) yy = std::max(yy, y0);
      if (!std::isfinite(x) || !std::isfinite(yy)) continue;
      out << m.tx(x) << "," << m.ty(yy) << " ";
    }
    out << "'/>\n";
    const double ly = Mapper::kTop + 18 + 18 * li;
    out << "<line x1='" << Mapper::kRight - 170 << "' y1='" << ly << "' x2='"
        << Mapper::kRight - 140 << "' y2='" << ly << "' stroke='" << s.color << "' stroke-width='2'"
        << (s.dashed ? " stroke-dasharray='7,4'" : "") << "/>\n";
    out << "<text x='" << Mapper::kRight - 132 << "' y='" << ly + 4 << "'>"
        << xml_escape(s.label) << "</text>\n";
    ++li;
  }
  out << "</svg>\n";
}

}  // namespace sc

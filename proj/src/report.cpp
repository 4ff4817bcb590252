#include "sratts/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "sratts/error.hpp"

namespace sratts {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string sanitize_label(const std::string& label) {
  std::string out = label.empty() ? "model" : label;
  for (char& c : out) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '_' || c == '-' || c == '.';
    if (!ok) c = '_';
  }
  return out;
}

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorKind::kIo, "failed writing " + path.string());
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json failures_json(const std::vector<EvalFailure>& failures) {
  json arr = json::array();
  for (const auto& f : failures) {
    arr.push_back({{"utterance_id", f.utterance_id}, {"factor", f.factor}, {"reason", f.reason}});
  }
  return arr;
}

std::vector<fs::path> emit_triple(const fs::path& dir, const std::string& stem,
                                  const std::string& csv, const json& summary,
                                  const std::string& svg) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::kIo, "cannot create " + dir.string() + ": " + ec.message());
  const fs::path csv_path = dir / (stem + ".csv");
  const fs::path json_path = dir / (stem + ".json");
  const fs::path svg_path = dir / (stem + ".svg");
  write_text(csv_path, csv);
  write_text(json_path, summary.dump(2) + "\n");
  write_text(svg_path, svg);
  return {csv_path, json_path, svg_path};
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fixed(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string tick_label(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

}  // namespace

std::string render_line_chart(const std::string& title, const std::string& x_label,
                              const std::string& y_label,
                              const std::vector<ChartSeries>& series) {
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                  "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};
  constexpr double kW = 640, kH = 400, kLeft = 70, kRight = 150, kTop = 40, kBottom = 50;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!std::isfinite(s.y[i]) || !std::isfinite(s.x[i])) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x0 -= 0.5, x1 += 0.5;
  if (y1 == y0) y0 -= 0.5, y1 += 0.5;
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;
  const double pw = kW - kLeft - kRight;
  const double ph = kH - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return kTop + (1.0 - (y - y0) / (y1 - y0)) * ph; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << fixed(kW / 2) << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
      << xml_escape(title) << "</text>\n";
  svg << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\""
      << ph << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double xv = x0 + (x1 - x0) * i / 5.0;
    const double yv = y0 + (y1 - y0) * i / 5.0;
    svg << "<text x=\"" << fixed(px(xv)) << "\" y=\"" << fixed(kTop + ph + 16)
        << "\" text-anchor=\"middle\">" << tick_label(xv) << "</text>\n";
    svg << "<text x=\"" << fixed(kLeft - 6) << "\" y=\"" << fixed(py(yv) + 4)
        << "\" text-anchor=\"end\">" << tick_label(yv) << "</text>\n";
    svg << "<line x1=\"" << fixed(kLeft) << "\" x2=\"" << fixed(kLeft + pw) << "\" y1=\""
        << fixed(py(yv)) << "\" y2=\"" << fixed(py(yv)) << "\" stroke=\"#dddddd\"/>\n";
  }
  svg << "<text x=\"" << fixed(kLeft + pw / 2) << "\" y=\"" << fixed(kH - 12)
      << "\" text-anchor=\"middle\">" << xml_escape(x_label) << "</text>\n";
  svg << "<text transform=\"translate(16," << fixed(kTop + ph / 2)
      << ") rotate(-90)\" text-anchor=\"middle\">" << xml_escape(y_label) << "</text>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kColors[s % (sizeof(kColors) / sizeof(kColors[0]))];
    std::string points;
    for (std::size_t i = 0; i < series[s].x.size() && i < series[s].y.size(); ++i) {
      if (!std::isfinite(series[s].y[i])) continue;
      const std::string cx = fixed(px(series[s].x[i]));
      const std::string cy = fixed(py(series[s].y[i]));
      points += cx + "," + cy + " ";
      svg << "<circle cx=\"" << cx << "\" cy=\"" << cy << "\" r=\"2.5\" fill=\"" << color
          << "\"/>\n";
    }
    if (!points.empty()) points.pop_back();
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\""
        << points << "\"/>\n";
    const double ly = kTop + 12 + 16.0 * static_cast<double>(s);
    svg << "<line x1=\"" << fixed(kLeft + pw + 10) << "\" x2=\"" << fixed(kLeft + pw + 30)
        << "\" y1=\"" << fixed(ly) << "\" y2=\"" << fixed(ly) << "\" stroke=\"" << color
        << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << fixed(kLeft + pw + 34) << "\" y=\"" << fixed(ly + 4) << "\">"
        << xml_escape(series[s].name) << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

std::vector<fs::path> emit_report(const SrErrorReport& report, const fs::path& out_dir) {
  std::string csv = "model_label,utterance_id,factor,expected_sr,obtained_sr,error\n";
  for (const auto& r : report.rows) {
    csv += csv_field(report.model_label) + "," + csv_field(r.utterance_id) + "," +
           format_double(r.factor) + "," + format_double(r.expected_sr) + "," +
           format_double(r.obtained_sr) + "," + format_double(r.error) + "\n";
  }
  json per_factor = json::object();
  for (std::size_t i = 0; i < report.factors.size(); ++i) {
    per_factor[format_double(report.factors[i])] = {
        {"mean_error", number_or_null(report.mean_error[i])},
        {"rows", report.row_count[i]}};
  }
  const json summary = {{"model_label", report.model_label},
                        {"mode", to_string(report.mode)},
                        {"metric", "sr_error_seconds_per_token"},
                        {"factors", per_factor},
                        {"failures", failures_json(report.failures)}};
  const std::string svg = render_line_chart(
      "SR error: " + report.model_label + " (" + to_string(report.mode) + ")", "SR factor",
      "mean SR error (s/token)", {{report.model_label, report.factors, report.mean_error}});
  return emit_triple(out_dir, sanitize_label(report.model_label) + "_sr_error", csv, summary,
                     svg);
}

std::vector<fs::path> emit_report(const PitchReport& report, const fs::path& out_dir) {
  std::string csv = "model_label,factor,mean_f0_hz,voiced_frames,excluded_utterances\n";
  json per_factor = json::object();
  for (std::size_t i = 0; i < report.factors.size(); ++i) {
    csv += csv_field(report.model_label) + "," + format_double(report.factors[i]) + "," +
           format_double(report.mean_f0[i]) + "," + std::to_string(report.voiced_frames[i]) +
           "," + std::to_string(report.excluded_utterances[i]) + "\n";
    per_factor[format_double(report.factors[i])] = {
        {"mean_f0_hz", number_or_null(report.mean_f0[i])},
        {"voiced_frames", report.voiced_frames[i]},
        {"excluded_utterances", report.excluded_utterances[i]}};
  }
  const json summary = {{"model_label", report.model_label},
                        {"mode", to_string(report.mode)},
                        {"voicing_threshold", report.voicing_threshold},
                        {"factors", per_factor},
                        {"failures", failures_json(report.failures)}};
  const std::string svg = render_line_chart(
      "Mean F0: " + report.model_label + " (" + to_string(report.mode) + ")", "SR factor",
      "mean F0 (Hz)", {{report.model_label, report.factors, report.mean_f0}});
  return emit_triple(out_dir, sanitize_label(report.model_label) + "_pitch", csv, summary, svg);
}

std::vector<fs::path> emit_report(const LinearityReport& report, const fs::path& out_dir) {
  std::string csv = "model_label,utterance_id,position,token,factor,duration\n";
  std::vector<ChartSeries> series;
  json tokens = json::array();
  for (const auto& tok : report.tokens) {
    for (std::size_t i = 0; i < report.factors.size(); ++i) {
      csv += csv_field(report.model_label) + "," + csv_field(report.utterance_id) + "," +
             std::to_string(tok.position) + "," + std::to_string(tok.token) + "," +
             format_double(report.factors[i]) + "," + format_double(tok.durations[i]) + "\n";
    }
    json durations = json::object();
    for (std::size_t i = 0; i < report.factors.size(); ++i) {
      durations[format_double(report.factors[i])] = tok.durations[i];
    }
    tokens.push_back({{"position", tok.position},
                      {"token", tok.token},
                      {"durations", durations},
                      {"slope", tok.fit.slope},
                      {"intercept", tok.fit.intercept},
                      {"r2", tok.fit.r2},
                      {"chord_deviation", tok.chord_deviation}});
    series.push_back({"token " + std::to_string(tok.position) + " (id " +
                          std::to_string(tok.token) + ")",
                      report.factors, tok.durations});
  }
  const json summary = {{"model_label", report.model_label},
                        {"mode", to_string(report.mode)},
                        {"utterance_id", report.utterance_id},
                        {"tokens", tokens}};
  const std::string svg = render_line_chart(
      "Token durations: " + report.model_label + " (" + to_string(report.mode) + ")",
      "SR factor", "frames", series);
  return emit_triple(out_dir, sanitize_label(report.model_label) + "_linearity", csv, summary,
                     svg);
}

fs::path emit_sr_comparison(const std::vector<SrErrorReport>& reports, const fs::path& path) {
  std::vector<ChartSeries> series;
  for (const auto& r : reports) {
    series.push_back({r.model_label + " (" + to_string(r.mode) + ")", r.factors, r.mean_error});
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_text(path, render_line_chart("SR error by factor", "SR factor",
                                     "mean SR error (s/token)", series));
  return path;
}

}  // namespace sratts

#include "bseot/plot.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace bseot {

namespace {

constexpr const char* kHeader = "t,variant,pos_err,z_err,psi_err,iou";
constexpr std::array<const char*, 8> kColors = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                                "#9467bd", "#8c564b", "#e377c2", "#17becf"};

double parse_number(const std::string& field, std::size_t line) {
  double value = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || !std::isfinite(value)) {
    throw PlotError(fmt::format("line {}: '{}' is not a number", line, field));
  }
  return value;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

struct Panel {
  const char* file;
  const char* title;
  const char* unit;
  std::vector<double> MetricSeries::*values;
};

std::string render_svg(const MetricsTable& table, const Panel& panel) {
  constexpr double kWidth = 720, kHeight = 400;
  constexpr double kLeft = 70, kRight = 170, kTop = 40, kBottom = 50;
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;

  double t0 = INFINITY, t1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& [name, s] : table.series) {
    for (double t : s.t) {
      t0 = std::min(t0, t);
      t1 = std::max(t1, t);
    }
    for (double v : s.*panel.values) {
      y0 = std::min(y0, v);
      y1 = std::max(y1, v);
    }
  }
  if (t1 <= t0) t1 = t0 + 1.0;
  if (y1 <= y0) {
    y0 -= 0.5;
    y1 += 0.5;
  }
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;
  const auto px = [&](double t) { return kLeft + (t - t0) / (t1 - t0) * plot_w; };
  const auto py = [&](double v) { return kTop + (y1 - v) / (y1 - y0) * plot_h; };

  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" "
      "viewBox=\"0 0 {0} {1}\" font-family=\"sans-serif\" font-size=\"12\">\n"
      "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      "<text x=\"{2}\" y=\"24\" font-size=\"15\">{3}</text>\n",
      kWidth, kHeight, kLeft, panel.title);
  svg += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" "
                     "stroke=\"#444\"/>\n",
                     kLeft, kTop, plot_w, plot_h);
  for (int i = 0; i <= 5; ++i) {
    const double v = y0 + (y1 - y0) * i / 5.0;
    const double t = t0 + (t1 - t0) * i / 5.0;
    svg += fmt::format("<line x1=\"{0}\" x2=\"{1}\" y1=\"{2:.2f}\" y2=\"{2:.2f}\" stroke=\"#ddd\"/>"
                       "<text x=\"{3}\" y=\"{4:.2f}\" text-anchor=\"end\">{5:.3g}</text>\n",
                       kLeft, kLeft + plot_w, py(v), kLeft - 6, py(v) + 4, v);
    svg += fmt::format("<text x=\"{:.2f}\" y=\"{}\" text-anchor=\"middle\">{:.3g}</text>\n", px(t),
                       kTop + plot_h + 18, t);
  }
  svg += fmt::format("<text x=\"{:.2f}\" y=\"{}\" text-anchor=\"middle\">t [s]</text>\n",
                     kLeft + 0.5 * plot_w, kHeight - 10);
  svg += fmt::format("<text x=\"16\" y=\"{0:.2f}\" transform=\"rotate(-90 16 {0:.2f})\" "
                     "text-anchor=\"middle\">{1}</text>\n",
                     kTop + 0.5 * plot_h, panel.unit);

  for (std::size_t k = 0; k < table.variants.size(); ++k) {
    const std::string& name = table.variants[k];
    const MetricSeries& s = table.series.at(name);
    const char* color = kColors[k % kColors.size()];
    std::string points;
    const auto& values = s.*panel.values;
    for (std::size_t i = 0; i < s.t.size(); ++i) {
      points += fmt::format("{}{:.2f},{:.2f}", i ? " " : "", px(s.t[i]), py(values[i]));
    }
    svg += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" "
                       "points=\"{}\"/>\n",
                       color, points);
    const double ly = kTop + 10 + 18 * static_cast<double>(k);
    svg += fmt::format("<line x1=\"{0}\" x2=\"{1}\" y1=\"{2}\" y2=\"{2}\" stroke=\"{3}\" "
                       "stroke-width=\"3\"/><text x=\"{4}\" y=\"{5}\">{6}</text>\n",
                       kLeft + plot_w + 12, kLeft + plot_w + 36, ly, color, kLeft + plot_w + 42,
                       ly + 4, name);
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace

MetricsTable parse_metrics_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw PlotError("metrics CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kHeader) throw PlotError(fmt::format("unexpected header '{}'", line));

  MetricsTable table;
  std::size_t number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split(line);
    if (fields.size() != 6) {
      throw PlotError(fmt::format("line {}: expected 6 fields, got {}", number, fields.size()));
    }
    const std::string& variant = fields[1];
    if (variant.empty()) throw PlotError(fmt::format("line {}: empty variant", number));
    auto [it, inserted] = table.series.try_emplace(variant);
    if (inserted) table.variants.push_back(variant);
    MetricSeries& s = it->second;
    s.t.push_back(parse_number(fields[0], number));
    s.pos_err.push_back(parse_number(fields[2], number));
    s.z_err.push_back(parse_number(fields[3], number));
    s.psi_err.push_back(parse_number(fields[4], number));
    s.iou.push_back(parse_number(fields[5], number));
  }
  if (table.variants.empty()) throw PlotError("metrics CSV has no variants");
  return table;
}

std::vector<std::filesystem::path> export_plots(const std::filesystem::path& metrics_csv,
                                                const std::filesystem::path& out_dir) {
  std::ifstream in(metrics_csv, std::ios::binary);
  if (!in) throw PlotError("cannot read " + metrics_csv.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  const MetricsTable table = parse_metrics_csv(buffer.str());

  const std::array<Panel, 4> panels = {{
      {"position_error.svg", "Planar position error", "m", &MetricSeries::pos_err},
      {"z_error.svg", "Vertical error", "m", &MetricSeries::z_err},
      {"orientation_error.svg", "Orientation error", "rad", &MetricSeries::psi_err},
      {"iou.svg", "Side-view IoU", "IoU", &MetricSeries::iou},
  }};
  std::vector<std::string> rendered;
  for (const Panel& p : panels) rendered.push_back(render_svg(table, p));

  std::filesystem::create_directories(out_dir);
  std::vector<std::filesystem::path> written;
  for (std::size_t i = 0; i < panels.size(); ++i) {
    const auto path = out_dir / panels[i].file;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw PlotError("cannot write " + path.string());
    out << rendered[i];
    written.push_back(path);
  }
  return written;
}

}  // namespace bseot

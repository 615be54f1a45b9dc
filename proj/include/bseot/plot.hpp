#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace bseot {

class PlotError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MetricSeries {
  std::vector<double> t;
  std::vector<double> pos_err;
  std::vector<double> z_err;
  std::vector<double> psi_err;
  std::vector<double> iou;
};

/// Variant name to its rows, in order of first appearance.
struct MetricsTable {
  std::vector<std::string> variants;
  std::map<std::string, MetricSeries> series;
};

/// Parses a metrics CSV (t,variant,pos_err,z_err,psi_err,iou). Throws
/// PlotError on a bad header, a malformed row or when there are no rows.
MetricsTable parse_metrics_csv(const std::string& text);

/// One SVG per metric (position error, z error, orientation error, IoU).
/// Every file is rendered before any is written.
std::vector<std::filesystem::path> export_plots(const std::filesystem::path& metrics_csv,
                                                const std::filesystem::path& out_dir);

}  // namespace bseot

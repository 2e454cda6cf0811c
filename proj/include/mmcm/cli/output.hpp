#pragma once

// Artifact writers: CSV tables, SVG polyline plots and the JSON run report.

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace mmcm::cli {

inline constexpr const char* kSchemaVersion = "1.0.0";

class OutputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  void add_row(std::vector<double> row);
};

/// Shortest text with 17 significant digits that reads back to the same double.
std::string format_number(double x);

std::string to_csv(const Table& table);

Table parse_csv(const std::string& text);

struct Curve {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct Plot {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Curve> curves;
};

/// Static SVG with one polyline per curve.
std::string to_svg(const Plot& plot);

struct RunReport {
  std::string command;
  nlohmann::json scenario = nlohmann::json::object();
  nlohmann::json derived = nlohmann::json::object();
  nlohmann::json metrics = nlohmann::json::object();
  std::vector<std::string> warnings;
  std::vector<std::string> manifest;
};

nlohmann::json to_json(const RunReport& report);

struct Formats {
  bool csv = true;
  bool json = true;
  bool svg = false;
};

/// Comma-separated subset of csv, json, svg.
Formats parse_formats(const std::string& list);

struct Artifacts {
  std::vector<std::pair<std::string, Table>> tables;  // file suffix, table
  std::vector<std::pair<std::string, Plot>> plots;
};

/// Writes <dir>/<stem><suffix>.csv / .svg and <dir>/<stem>.json, recording
/// every file in report.manifest. Output is written in a fixed order.
void emit_outputs(RunReport& report, const Artifacts& artifacts, const std::string& dir,
                  const std::string& stem, const Formats& formats);

}  // namespace mmcm::cli

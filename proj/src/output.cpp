#include "mmcm/cli/output.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

namespace mmcm::cli {

void Table::add_row(std::vector<double> row) {
  if (row.size() != columns.size()) throw std::logic_error("row width does not match header");
  rows.push_back(std::move(row));
}

std::string format_number(double x) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
  if (ec != std::errc()) throw std::logic_error("number formatting failed");
  return std::string(buf, end);
}

std::string to_csv(const Table& table) {
  std::string out;
  for (std::size_t i = 0; i < table.columns.size(); ++i)
    out += (i ? "," : "") + table.columns[i];
  out += '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += format_number(row[i]);
    }
    out += '\n';
  }
  return out;
}

Table parse_csv(const std::string& text) {
  Table t;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("empty CSV");
  {
    std::istringstream header(line);
    std::string name;
    while (std::getline(header, name, ',')) t.columns.push_back(name);
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) {
      double x = 0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), x);
      if (ec != std::errc() || ptr != cell.data() + cell.size())
        throw std::invalid_argument("bad CSV cell '" + cell + "'");
      row.push_back(x);
    }
    t.add_row(std::move(row));
  }
  return t;
}

namespace {

std::string escape_xml(const std::string& s) {
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

std::string fixed(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

std::string tick(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", x);
  return buf;
}

}  // namespace

std::string to_svg(const Plot& plot) {
  constexpr double W = 720, H = 480, left = 80, right = 180, top = 40, bottom = 60;
  static const char* palette[] = {"#1f4e9c", "#111111", "#c0392b", "#27ae60", "#8e44ad", "#d35400"};
  static const char* dashes[] = {"", "", "6,4", "8,3,2,3", "2,2", "10,4"};

  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& c : plot.curves)
    for (std::size_t i = 0; i < std::min(c.x.size(), c.y.size()); ++i) {
      if (!std::isfinite(c.x[i]) || !std::isfinite(c.y[i])) continue;
      xmin = std::min(xmin, c.x[i]);
      xmax = std::max(xmax, c.x[i]);
      ymin = std::min(ymin, c.y[i]);
      ymax = std::max(ymax, c.y[i]);
    }
  if (!std::isfinite(xmin)) xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) ymax = ymin + 1;
  const double pw = W - left - right, ph = H - top - bottom;
  auto sx = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
  auto sy = [&](double y) { return top + ph - (y - ymin) / (ymax - ymin) * ph; };

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
    << "\" viewBox=\"0 0 " << W << ' ' << H << "\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << left << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"15\">"
    << escape_xml(plot.title) << "</text>\n";
  s << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
    << "\" fill=\"none\" stroke=\"#888\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double xv = xmin + (xmax - xmin) * k / 4, yv = ymin + (ymax - ymin) * k / 4;
    s << "<text x=\"" << fixed(sx(xv)) << "\" y=\"" << fixed(top + ph + 18)
      << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">" << tick(xv)
      << "</text>\n";
    s << "<text x=\"" << fixed(left - 6) << "\" y=\"" << fixed(sy(yv) + 4)
      << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">" << tick(yv)
      << "</text>\n";
  }
  s << "<text x=\"" << fixed(left + pw / 2) << "\" y=\"" << fixed(H - 16)
    << "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">"
    << escape_xml(plot.x_label) << "</text>\n";
  s << "<text x=\"18\" y=\"" << fixed(top + ph / 2) << "\" font-family=\"sans-serif\" font-size=\"13\""
    << " text-anchor=\"middle\" transform=\"rotate(-90 18 " << fixed(top + ph / 2) << ")\">"
    << escape_xml(plot.y_label) << "</text>\n";

  for (std::size_t k = 0; k < plot.curves.size(); ++k) {
    const auto& c = plot.curves[k];
    const char* color = palette[k % 6];
    const char* dash = dashes[k % 6];
    s << "<polyline data-name=\"" << escape_xml(c.name) << "\" fill=\"none\" stroke=\"" << color
      << "\" stroke-width=\"1.5\"";
    if (*dash) s << " stroke-dasharray=\"" << dash << '"';
    s << " points=\"";
    bool first = true;
    for (std::size_t i = 0; i < std::min(c.x.size(), c.y.size()); ++i) {
      if (!std::isfinite(c.x[i]) || !std::isfinite(c.y[i])) continue;
      s << (first ? "" : " ") << fixed(sx(c.x[i])) << ',' << fixed(sy(c.y[i]));
      first = false;
    }
    s << "\"/>\n";
    const double ly = top + 16 + 20.0 * static_cast<double>(k);
    s << "<line x1=\"" << fixed(W - right + 12) << "\" y1=\"" << fixed(ly) << "\" x2=\""
      << fixed(W - right + 40) << "\" y2=\"" << fixed(ly) << "\" stroke=\"" << color
      << "\" stroke-width=\"1.5\"";
    if (*dash) s << " stroke-dasharray=\"" << dash << '"';
    s << "/>\n";
    s << "<text x=\"" << fixed(W - right + 46) << "\" y=\"" << fixed(ly + 4)
      << "\" font-family=\"sans-serif\" font-size=\"12\">" << escape_xml(c.name) << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

nlohmann::json to_json(const RunReport& report) {
  nlohmann::json j;
  j["schema_version"] = kSchemaVersion;
  j["command"] = report.command;
  j["scenario"] = report.scenario;
  j["derived"] = report.derived;
  j["metrics"] = report.metrics;
  j["warnings"] = report.warnings;
  j["manifest"] = report.manifest;
  return j;
}

Formats parse_formats(const std::string& list) {
  Formats f{false, false, false};
  std::istringstream in(list);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item == "csv")
      f.csv = true;
    else if (item == "json")
      f.json = true;
    else if (item == "svg")
      f.svg = true;
    else
      throw std::invalid_argument("unknown format '" + item + "' (expected csv, json, svg)");
  }
  if (!f.csv && !f.json && !f.svg) throw std::invalid_argument("no output format selected");
  return f;
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw OutputError("cannot write '" + path.string() + "'");
  f << content;
  if (!f) throw OutputError("failed writing '" + path.string() + "'");
}

}  // namespace

void emit_outputs(RunReport& report, const Artifacts& artifacts, const std::string& dir,
                  const std::string& stem, const Formats& formats) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw OutputError("cannot create output directory '" + dir + "'");
  const fs::path base(dir);

  if (formats.csv)
    for (const auto& [suffix, table] : artifacts.tables) {
      const auto path = base / (stem + suffix + ".csv");
      write_file(path, to_csv(table));
      report.manifest.push_back(path.string());
    }
  if (formats.svg)
    for (const auto& [suffix, plot] : artifacts.plots) {
      const auto path = base / (stem + suffix + ".svg");
      write_file(path, to_svg(plot));
      report.manifest.push_back(path.string());
    }
  if (formats.json) {
    const auto path = base / (stem + ".json");
    report.manifest.push_back(path.string());
    write_file(path, to_json(report).dump(2) + "\n");
  }
}

}  // namespace mmcm::cli

#include "mmm/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "mmm/error.hpp"

namespace mmm {

namespace {

std::string cell_text(const nlohmann::json& c) {
  if (c.is_number_float()) return format_number(c.get<double>());
  if (c.is_number()) return c.dump();
  if (c.is_boolean()) return c.get<bool>() ? "true" : "false";
  if (c.is_null()) return "";
  std::string s = c.is_string() ? c.get<std::string>() : c.dump();
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char ch : s) {
    if (ch == '"') q += '"';
    q += ch;
  }
  return q + "\"";
}

double as_number(const nlohmann::json& c) {
  if (c.is_number()) return c.get<double>();
  return std::numeric_limits<double>::quiet_NaN();
}

// JSON has no inf/nan; keep them as strings so reports stay valid JSON.
nlohmann::json json_cell(const nlohmann::json& c) {
  if (c.is_number_float() && !std::isfinite(c.get<double>())) return format_number(c.get<double>());
  return c;
}

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::size_t Table::column(const std::string& c) const {
  auto it = std::find(columns.begin(), columns.end(), c);
  if (it == columns.end()) throw std::out_of_range("no column '" + c + "' in table " + name);
  return static_cast<std::size_t>(it - columns.begin());
}

std::vector<double> Table::numbers(const std::string& c) const {
  const std::size_t k = column(c);
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(as_number(r[k]));
  return out;
}

Table& ConvergenceReport::table(const std::string& name, std::vector<std::string> columns) {
  for (auto& t : tables)
    if (t.name == name) return t;
  tables.push_back({name, std::move(columns), {}});
  return tables.back();
}

const Table& ConvergenceReport::get(const std::string& name) const {
  for (const auto& t : tables)
    if (t.name == name) return t;
  throw std::out_of_range("no table '" + name + "'");
}

bool ConvergenceReport::has(const std::string& name) const {
  return std::any_of(tables.begin(), tables.end(), [&](const Table& t) { return t.name == name; });
}

void ConvergenceReport::flag(std::string name, bool value, std::string detail) {
  for (auto& f : flags)
    if (f.name == name) {
      f.value = value;
      f.detail = std::move(detail);
      return;
    }
  flags.push_back({std::move(name), value, std::move(detail)});
}

bool ConvergenceReport::flag_value(const std::string& name) const {
  for (const auto& f : flags)
    if (f.name == name) return f.value;
  throw std::out_of_range("no flag '" + name + "'");
}

nlohmann::json to_json(const Table& t) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : t.rows) {
    nlohmann::json row = nlohmann::json::array();
    for (const auto& c : r) row.push_back(json_cell(c));
    rows.push_back(std::move(row));
  }
  return {{"name", t.name}, {"columns", t.columns}, {"rows", std::move(rows)}};
}

nlohmann::json to_json(const ConvergenceReport& r) {
  nlohmann::json tables = nlohmann::json::array();
  for (const auto& t : r.tables) tables.push_back(to_json(t));
  nlohmann::json flags = nlohmann::json::array();
  for (const auto& f : r.flags)
    flags.push_back({{"name", f.name}, {"value", f.value}, {"detail", f.detail}});
  nlohmann::json scalars = nlohmann::json::object();
  for (const auto& [k, v] : r.scalars) scalars[k] = json_cell(v);
  return {{"title", r.title},
          {"notes", r.notes},
          {"scalars", std::move(scalars)},
          {"flags", std::move(flags)},
          {"tables", std::move(tables)}};
}

std::string to_csv(const Table& t) {
  std::ostringstream os;
  for (std::size_t c = 0; c < t.columns.size(); ++c) os << (c ? "," : "") << cell_text(t.columns[c]);
  os << '\n';
  for (const auto& r : t.rows) {
    for (std::size_t c = 0; c < r.size(); ++c) os << (c ? "," : "") << cell_text(r[c]);
    os << '\n';
  }
  return os.str();
}

std::string to_svg(const Table& t, const std::string& x, const std::string& y,
                   const std::string& series) {
  const std::size_t xi = t.column(x), yi = t.column(y);
  const std::size_t si = series.empty() ? 0 : t.column(series);
  std::vector<std::string> names;
  std::vector<std::vector<std::pair<double, double>>> lines;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& r : t.rows) {
    const double xv = as_number(r[xi]), yv = as_number(r[yi]);
    if (!std::isfinite(xv) || !std::isfinite(yv)) continue;
    const std::string key = series.empty() ? y : cell_text(r[si]);
    auto it = std::find(names.begin(), names.end(), key);
    if (it == names.end()) {
      names.push_back(key);
      lines.emplace_back();
      it = names.end() - 1;
    }
    lines[static_cast<std::size_t>(it - names.begin())].emplace_back(xv, yv);
    x0 = std::min(x0, xv), x1 = std::max(x1, xv), y0 = std::min(y0, yv), y1 = std::max(y1, yv);
  }
  constexpr double W = 640, H = 400, L = 60, R = 160, T = 30, B = 40;
  if (!(x1 > x0)) x0 -= 0.5, x1 += 0.5;
  if (!(y1 > y0)) y0 -= 0.5, y1 += 0.5;
  auto px = [&](double v) { return L + (v - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double v) { return H - B - (v - y0) / (y1 - y0) * (H - T - B); };
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                  "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  os << "<text x=\"" << L << "\" y=\"18\">" << t.name << ": " << y << " vs " << x << "</text>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B
     << "\" stroke=\"black\"/>\n";
  os << "<text x=\"" << L << "\" y=\"" << H - B + 16 << "\">" << format_number(x0) << "</text>\n";
  os << "<text x=\"" << W - R << "\" y=\"" << H - B + 16 << "\" text-anchor=\"end\">"
     << format_number(x1) << "</text>\n";
  os << "<text x=\"" << L - 4 << "\" y=\"" << H - B << "\" text-anchor=\"end\">"
     << format_number(y0) << "</text>\n";
  os << "<text x=\"" << L - 4 << "\" y=\"" << T + 4 << "\" text-anchor=\"end\">"
     << format_number(y1) << "</text>\n";
  for (std::size_t s = 0; s < lines.size(); ++s) {
    const char* colour = palette[s % 8];
    os << "<polyline fill=\"none\" stroke=\"" << colour << "\" points=\"";
    for (std::size_t i = 0; i < lines[s].size(); ++i)
      os << (i ? " " : "") << format_number(px(lines[s][i].first)) << ","
         << format_number(py(lines[s][i].second));
    os << "\"/>\n";
    os << "<text x=\"" << W - R + 8 << "\" y=\"" << T + 14 * (s + 1) << "\" fill=\"" << colour
       << "\">" << names[s] << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

OutputFormat parse_format(const std::string& s) {
  if (s == "csv") return OutputFormat::Csv;
  if (s == "json") return OutputFormat::Json;
  if (s == "both") return OutputFormat::Both;
  throw FormatError("format must be csv, json or both");
}

std::vector<std::filesystem::path> write_report(const ConvergenceReport& r,
                                                const std::filesystem::path& dir,
                                                const std::string& stem, OutputFormat fmt) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> out;
  auto put = [&](const std::filesystem::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw FormatError("cannot write " + p.string());
    f << text;
    out.push_back(p);
  };
  if (fmt != OutputFormat::Csv) put(dir / (stem + ".json"), to_json(r).dump(2) + "\n");
  if (fmt != OutputFormat::Json)
    for (const auto& t : r.tables) put(dir / (stem + "_" + t.name + ".csv"), to_csv(t));
  return out;
}

}  // namespace mmm

#include "ssd/cli/report.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "ssd/error.hpp"

namespace ssd::cli {

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::string cell_text(const Cell& cell) {
  if (const auto* d = std::get_if<double>(&cell)) return format_number(*d);
  if (const auto* i = std::get_if<std::int64_t>(&cell)) return std::to_string(*i);
  return csv_field(std::get<std::string>(cell));
}

nlohmann::ordered_json cell_json(const Cell& cell) {
  if (const auto* d = std::get_if<double>(&cell)) {
    if (!std::isfinite(*d)) return format_number(*d);
    // Round-trip through the 9-digit text so JSON and CSV carry the same value.
    return std::strtod(format_number(*d).c_str(), nullptr);
  }
  if (const auto* i = std::get_if<std::int64_t>(&cell)) return *i;
  return std::get<std::string>(cell);
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

}  // namespace

Format parse_format(std::string_view text) {
  if (text == "csv") return Format::Csv;
  if (text == "json") return Format::Json;
  throw Error(ErrorCode::InvalidConfig, "format must be csv or json");
}

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (x == 0.0) x = 0.0;  // no "-0"
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

std::string render(const Table& table, Format format) {
  if (format == Format::Csv) {
    std::string out;
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
      if (c) out += ',';
      out += csv_field(table.columns[c]);
    }
    out += '\n';
    for (const auto& row : table.rows) {
      for (std::size_t c = 0; c < row.size(); ++c) {
        if (c) out += ',';
        out += cell_text(row[c]);
      }
      out += '\n';
    }
    return out;
  }
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& row : table.rows) {
    nlohmann::ordered_json obj = nlohmann::ordered_json::object();
    for (std::size_t c = 0; c < row.size(); ++c) obj[table.columns[c]] = cell_json(row[c]);
    arr.push_back(std::move(obj));
  }
  return arr.dump(2) + "\n";
}

void emit_report(const Table& table, Format format, const std::string& path) {
  emit_report(table, format, path, std::cout);
}

void emit_report(const Table& table, Format format, const std::string& path, std::ostream& console) {
  if (table.rows.empty()) throw Error(ErrorCode::EmptyReport, "report has no rows");
  for (const auto& row : table.rows) {
    if (row.size() != table.columns.size()) throw Error(ErrorCode::IoError, "row width does not match the header");
  }
  const std::string text = render(table, format);
  if (path == "-") {
    console << text << std::flush;
    return;
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw Error(ErrorCode::IoError, "cannot open " + path + " for writing");
  file << text;
  file.close();
  if (!file) throw Error(ErrorCode::IoError, "write to " + path + " failed");
}

Table parse_csv(std::string_view text) {
  Table table;
  std::size_t start = 0;
  bool header = true;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    start = end + 1;
    if (line.empty()) continue;
    std::vector<std::string> fields = split_csv_line(line);
    if (header) {
      table.columns = std::move(fields);
      header = false;
      continue;
    }
    std::vector<Cell> row;
    for (std::string& f : fields) {
      char* tail = nullptr;
      const double value = std::strtod(f.c_str(), &tail);
      if (!f.empty() && tail && *tail == '\0') {
        row.emplace_back(value);
      } else {
        row.emplace_back(std::move(f));
      }
    }
    if (row.size() != table.columns.size()) throw Error(ErrorCode::ParseError, "CSV row width mismatch");
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace ssd::cli

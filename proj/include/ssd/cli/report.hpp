#pragma once

// Tabular report emission (CSV / JSON). Numbers carry 9 significant digits.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace ssd::cli {

using Cell = std::variant<double, std::int64_t, std::string>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

enum class Format { Csv, Json };

Format parse_format(std::string_view text);

inline const std::vector<std::string> kSweepColumns = {"temperature", "top_p", "teacher_success", "student_success",
                                                       "gap"};
inline const std::vector<std::string> kDecompositionColumns = {"step",  "total",         "gate",           "reshape",
                                                               "align", "on_support_tv", "off_support_mass"};
inline const std::vector<std::string> kDumpColumns = {"context_id",   "label",         "kept_count", "kept_mass",
                                                      "head_entropy", "total_entropy", "top20_mass"};

/// "%.9g"; non-finite values print as nan / inf / -inf.
std::string format_number(double x);

std::string render(const Table& table, Format format);

/// Writes `table` to `path` ("-" means `console`, stdout by default). Throws EmptyReport on a
/// table without rows (nothing is written) and IoError on write failure.
void emit_report(const Table& table, Format format, const std::string& path, std::ostream& console);
void emit_report(const Table& table, Format format, const std::string& path);

/// Parses CSV produced by render(); numeric-looking fields come back as doubles.
Table parse_csv(std::string_view text);

}  // namespace ssd::cli

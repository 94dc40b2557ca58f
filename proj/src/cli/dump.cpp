#include "ssd/cli/dump.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "ssd/error.hpp"

namespace ssd::cli {

namespace {

struct LineError {
  ErrorCode code;
  std::string message;
};

std::vector<double> numbers(const nlohmann::json& arr, const char* key) {
  if (!arr.is_array() || arr.empty()) throw LineError{ErrorCode::ParseError, std::string(key) + " must be a nonempty array"};
  std::vector<double> out;
  out.reserve(arr.size());
  for (const auto& x : arr) {
    if (!x.is_number()) throw LineError{ErrorCode::ParseError, std::string(key) + " holds a non-number"};
    out.push_back(x.get<double>());
  }
  return out;
}

DumpRecord parse_line(const std::string& line) {
  nlohmann::json obj;
  try {
    obj = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw LineError{ErrorCode::ParseError, std::string("invalid JSON: ") + e.what()};
  }
  if (!obj.is_object()) throw LineError{ErrorCode::ParseError, "record must be a JSON object"};
  if (!obj.contains("context_id") || !obj["context_id"].is_string()) {
    throw LineError{ErrorCode::ParseError, "missing string context_id"};
  }
  const bool has_probs = obj.contains("probs");
  const bool has_logits = obj.contains("logits");
  if (has_probs == has_logits) throw LineError{ErrorCode::ParseError, "exactly one of probs / logits is required"};
  std::optional<std::string> label;
  if (obj.contains("label")) {
    if (!obj["label"].is_string()) throw LineError{ErrorCode::ParseError, "label must be a string"};
    label = obj["label"].get<std::string>();
  }

  try {
    if (has_probs) {
      std::vector<double> p = numbers(obj["probs"], "probs");
      for (double x : p) {
        if (!std::isfinite(x) || x < 0.0) throw LineError{ErrorCode::ParseError, "probs holds a negative or non-finite value"};
      }
      return {obj["context_id"].get<std::string>(), Categorical(std::move(p)), label};
    }
    const std::vector<double> z = numbers(obj["logits"], "logits");
    return {obj["context_id"].get<std::string>(), softmax(z), label};
  } catch (const Error& e) {
    throw LineError{e.code() == ErrorCode::InvalidDistribution ? ErrorCode::InvalidDistribution : ErrorCode::ParseError,
                    e.what()};
  }
}

}  // namespace

DumpLoad parse_dump(std::istream& in, bool skip_bad) {
  DumpLoad load;
  std::string line;
  std::size_t number = 0;
  std::optional<ErrorCode> first_code;
  while (std::getline(in, line)) {
    ++number;
    if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) continue;
    try {
      load.records.push_back(parse_line(line));
    } catch (const LineError& e) {
      if (!first_code) first_code = e.code;
      load.skipped.push_back({number, e.message});
    }
  }
  if (!load.skipped.empty() && !skip_bad) {
    std::ostringstream msg;
    msg << load.skipped.size() << " malformed line(s):";
    for (const auto& issue : load.skipped) msg << "\n  line " << issue.line << ": " << issue.message;
    throw Error(*first_code, msg.str());
  }
  return load;
}

DumpLoad ingest_dump(const std::string& path, bool skip_bad) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::FileNotFound, "cannot open dump " + path);
  return parse_dump(in, skip_bad);
}

DumpAnalysis analyze_record(const DumpRecord& record, const DecodeConfig& cfg) {
  const RetainedSupport rs = retained_support(record.probs, cfg);
  std::vector<double> sorted = record.probs.vector();
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double top20 = 0.0;
  for (std::size_t i = 0; i < std::min<std::size_t>(20, sorted.size()); ++i) top20 += sorted[i];

  DumpAnalysis out;
  out.context_id = record.context_id;
  out.label = record.label.value_or("");
  out.kept_count = rs.support.size();
  out.kept_mass = rs.kept_mass;
  out.head_entropy = entropy(rs.operational);
  out.total_entropy = entropy(record.probs);
  out.top20_mass = std::min(top20, 1.0);
  return out;
}

Table dump_table(const std::vector<DumpRecord>& records, const DecodeConfig& cfg) {
  Table table{kDumpColumns, {}};
  for (const DumpRecord& r : records) {
    const DumpAnalysis a = analyze_record(r, cfg);
    table.rows.push_back({a.context_id, a.label, static_cast<std::int64_t>(a.kept_count), a.kept_mass, a.head_entropy,
                          a.total_entropy, a.top20_mass});
  }
  return table;
}

}  // namespace ssd::cli

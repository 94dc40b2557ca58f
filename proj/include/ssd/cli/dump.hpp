#pragma once

// Line-delimited JSON probability dumps, one context per line:
//   {"context_id": "...", "probs": [...], "label": "lock"}
//   {"context_id": "...", "logits": [...]}
// Logits are converted with a softmax at load time.

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ssd/categorical.hpp"
#include "ssd/cli/report.hpp"
#include "ssd/decode.hpp"

namespace ssd::cli {

struct DumpRecord {
  std::string context_id;
  Categorical probs;
  std::optional<std::string> label;
};

struct DumpIssue {
  std::size_t line = 0;  // 1-based
  std::string message;
};

struct DumpLoad {
  std::vector<DumpRecord> records;
  std::vector<DumpIssue> skipped;
};

/// Strict unless `skip_bad`: any malformed line aborts the load with a
/// ParseError (or InvalidDistribution) naming every offending line.
DumpLoad parse_dump(std::istream& in, bool skip_bad = false);
/// Throws FileNotFound when `path` cannot be opened.
DumpLoad ingest_dump(const std::string& path, bool skip_bad = false);

struct DumpAnalysis {
  std::string context_id;
  std::string label;
  std::size_t kept_count = 0;
  double kept_mass = 0.0;
  double head_entropy = 0.0;   // entropy of the operational (post-truncation) distribution
  double total_entropy = 0.0;  // entropy of the raw distribution
  double top20_mass = 0.0;
};

DumpAnalysis analyze_record(const DumpRecord& record, const DecodeConfig& cfg);
Table dump_table(const std::vector<DumpRecord>& records, const DecodeConfig& cfg);

}  // namespace ssd::cli

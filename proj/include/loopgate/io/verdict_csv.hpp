#pragma once

// Verdict CSV: `query_id,match_id,score,converged,accepted,label`.
// Rows appear in verification order; score is empty when absent.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "loopgate/io/text.hpp"
#include "loopgate/verifier.hpp"

namespace loopgate::io {

inline constexpr const char* kVerdictHeader = "query_id,match_id,score,converged,accepted,label";

/// One parsed verdict row.
struct VerdictRow {
  NodeId query_id = 0;
  NodeId match_id = 0;
  std::optional<double> score;
  bool converged = false;
  bool accepted = false;
  std::optional<bool> label;
};

inline VerdictRow to_row(const VerdictRecord& v) {
  return {v.candidate.query_id, v.candidate.match_id, v.score, v.converged, v.accepted, v.candidate.label};
}

inline std::string write_verdicts(const std::vector<VerdictRow>& rows) {
  std::string out = std::string(kVerdictHeader) + '\n';
  for (const auto& r : rows) {
    out += std::to_string(r.query_id) + ',' + std::to_string(r.match_id) + ',';
    if (r.score) out += format_exact(*r.score);
    out += r.converged ? ",1" : ",0";
    out += r.accepted ? ",1," : ",0,";
    if (r.label) out += *r.label ? '1' : '0';
    out += '\n';
  }
  return out;
}

inline std::string write_verdicts(const std::vector<VerdictRecord>& verdicts) {
  std::vector<VerdictRow> rows;
  rows.reserve(verdicts.size());
  for (const auto& v : verdicts) rows.push_back(to_row(v));
  return write_verdicts(rows);
}

inline std::vector<VerdictRow> parse_verdicts(const std::vector<std::string>& lines,
                                              const std::string& source = "<verdicts>") {
  std::vector<VerdictRow> out;
  bool seen_header = false;
  auto flag = [](const FieldParser& fp, std::string_view f, const char* what) {
    if (f == "1") return true;
    if (f == "0") return false;
    fp.fail(std::string(what) + " must be 0 or 1");
  };
  for (std::size_t n = 0; n < lines.size(); ++n) {
    const auto line = trim(lines[n]);
    if (line.empty() || line.front() == '#') continue;
    FieldParser fp(source, n + 1);
    if (!seen_header) {
      if (line != kVerdictHeader) fp.fail(std::string("expected header '") + kVerdictHeader + "'");
      seen_header = true;
      continue;
    }
    const auto f = split_csv(line);
    if (f.size() != 6) fp.fail("expected 6 fields, found " + std::to_string(f.size()));
    VerdictRow r;
    r.query_id = fp.index(f[0], "query_id");
    r.match_id = fp.index(f[1], "match_id");
    if (!f[2].empty()) r.score = fp.number(f[2], "score");
    r.converged = flag(fp, f[3], "converged");
    r.accepted = flag(fp, f[4], "accepted");
    if (!f[5].empty()) r.label = flag(fp, f[5], "label");
    out.push_back(r);
  }
  if (!seen_header) throw ParseError(source, 1, "missing header");
  return out;
}

inline std::vector<VerdictRow> read_verdicts(const std::filesystem::path& path) {
  return parse_verdicts(read_lines(path), path.string());
}

inline void save_verdicts(const std::filesystem::path& path, const std::vector<VerdictRecord>& verdicts) {
  write_file_atomic(path, write_verdicts(verdicts));
}

}  // namespace loopgate::io

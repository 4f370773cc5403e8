#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "ata/core.hpp"

namespace ata {

// One finding produced while parsing or validating traces. `location` is a
// line number ("line 7") or a span id, whichever is known.
struct ValidationIssue {
  Severity severity = Severity::Warning;
  std::string location;
  std::string message;

  bool operator==(const ValidationIssue&) const = default;
};

// All traces parsed from one input, keyed by trace id.
struct TraceSet {
  std::map<std::string, Trace> traces;
  std::vector<ValidationIssue> parse_warnings;
};

// One span as a single JSON line. parse(serialize(s)) == s.
std::string serialize_span(const SpanRecord& span);

// Parses one log line. Throws ParseError with the byte offset on malformed
// input, unknown event types, or negative timestamps.
SpanRecord parse_span_line(std::string_view line, std::size_t line_no = 0);

// Groups spans by trace id; within each trace spans are sorted by
// (start_ns, span_id) so the result is independent of input order.
// Orphan parent references become warnings; duplicate span ids within a
// trace and fully empty input are hard errors.
TraceSet load_trace_set(const std::vector<std::string>& lines);
TraceSet load_trace_set(std::istream& in);
TraceSet load_trace_file(const std::filesystem::path& path);

struct ValidateOptions {
  // How far a child span may appear to start before its parent before the
  // cross-service clock check fires.
  std::int64_t clock_skew_tolerance_ns = 1'000'000;
};

// Structural checks over one trace: event times inside span windows,
// dependency references, lifecycle ordering, per-service root counts, and
// clock skew between parent and child spans. Never throws.
std::vector<ValidationIssue> validate_trace(const Trace& trace,
                                            const ValidateOptions& options = {});

}  // namespace ata

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ata/core.hpp"
#include "ata/flow.hpp"

namespace ata {

// One categorized failure. Only warning and critical_error grade issues
// count as failures; info/debug never appear here.
struct FailureRecord {
  FailureCategory category = FailureCategory::Validation;
  Severity severity = Severity::Warning;
  std::string message;
  std::optional<std::string> task_id;

  bool operator==(const FailureRecord&) const = default;
};

// Per-trace metrics and failure counts; one CSV row per case.
struct SummaryRow {
  std::string case_id;
  std::int64_t execution_time_ns = 0;
  std::int64_t input_tokens = 0;
  std::int64_t output_tokens = 0;
  std::int64_t llm_calls = 0;
  std::int64_t tool_calls = 0;
  double cost_usd = 0.0;
  std::int64_t failures_total = 0;
  std::map<FailureCategory, std::int64_t> failures_by_category;
  std::map<Severity, std::int64_t> failures_by_severity;
  bool happy_path = true;
};

enum class RecommendationKind { ParallelExecution, Decomposition, Merging };

std::string_view to_string(RecommendationKind kind);

struct Recommendation {
  RecommendationKind kind = RecommendationKind::ParallelExecution;
  std::vector<std::string> target_tasks;
  std::string rationale;
  std::int64_t estimated_latency_gain_ns = 0;
};

struct RecommendConfig {
  std::int64_t decompose_failure_threshold = 2;
  std::int64_t merge_duration_ceiling_ns = 10'000'000;
};

// Builds the summary row for one trace: wall time from span extremes,
// usage/cost totals from the flow's root roll-ups, failure counts from
// extract_failures. Invariant under span reordering.
SummaryRow compute_summary(const Trace& trace, const TaskFlowGraph& flow);

// One record per warning-or-worse issue carried by any event, ordered by
// (event time, span id). Issues without a category map to validation with
// a provenance note appended to the message.
std::vector<FailureRecord> extract_failures(const Trace& trace);

// Static optimization hints from one discovered flow:
//   - parallel_execution for maximal sibling sets with no dependency path
//     between members whose executions did not overlap in time,
//   - decomposition for tasks with >= threshold attached failures,
//   - merging for same-label sibling pairs under the duration ceiling.
std::vector<Recommendation> recommend(const TaskFlowGraph& flow,
                                      const RecommendConfig& config = {});

// Fixed-order CSV emission (see docs/summary-format.md).
std::string summary_csv_header();
std::string summary_to_csv_row(const SummaryRow& row);
SummaryRow summary_from_csv_row(const std::vector<std::string>& fields);

// Failure lists travel as JSON lines, one record per line.
std::string failures_to_jsonl(const std::vector<FailureRecord>& failures);
std::vector<FailureRecord> failures_from_jsonl(std::string_view text);

std::string recommendations_to_text(const std::vector<Recommendation>& recs);

// Rebuilds category/severity counts from a failure list.
void tally_failures(SummaryRow& row, const std::vector<FailureRecord>& failures);

}  // namespace ata

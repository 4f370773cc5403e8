#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ata/analytics.hpp"
#include "ata/core.hpp"
#include "ata/expr.hpp"
#include "ata/flow.hpp"

namespace ata {

// One fault to inject. `site` selects the injection point among the
// eligible tasks for the category (wrapping modulo their count); fatal
// faults carry critical_error severity, recovered ones warning.
struct FaultSpec {
  FailureCategory category = FailureCategory::Validation;
  std::uint32_t site = 0;
  Severity severity = Severity::Warning;
};

// How the synthetic run ends: the correct value, a wrong value, or no
// value at all (the system gives up).
enum class CaseOutcome { Correct, Wrong, Absent };

// Full recipe for one synthetic calculator run. Generation is a pure
// function of this struct: same spec, same bytes.
struct CaseSpec {
  std::string case_id = "case";
  std::string input;
  bool distributed = false;
  bool parallel = false;
  int decomposition_depth = 3;
  std::vector<FaultSpec> faults;
  std::uint64_t seed = 0;
  CaseOutcome outcome = CaseOutcome::Correct;
};

// A generated run: the span log plus the ground-truth analytics outcomes
// bookkept by the generator itself (never re-derived through discovery).
struct GeneratedCase {
  std::vector<std::string> log_lines;
  TaskFlowGraph gt_flow;
  SummaryRow gt_summary;
  std::vector<FailureRecord> gt_failures;
  std::optional<double> final_output;
  std::optional<double> expected_output;
  bool has_nl = false;
  bool syntax_error = false;
};

// Emulates one calculator run over `spec.input`: decomposes the expression
// into a task tree, emits conformant span/event log lines (parallel,
// distributed, and dynamically decomposed structure per the spec flags),
// and injects the requested faults. Unparseable input produces the
// syntax-error pattern: a single failed root task with an incorrect_input
// failure and no output.
GeneratedCase generate_case(const CaseSpec& spec);

// Suite composition. The defaults build the bundled benchmark: 30 cases,
// 14 numerical / 16 with natural language, 13 distributed, 3 syntax
// errors, 21 correct outputs, 7 happy paths, 9 cases with validator
// failures (3 of them with no final output).
struct SuiteConfig {
  int cases = 30;
  int numerical = 14;
  int natural_language = 16;
  int distributed = 13;
  int syntax_errors = 3;
  int correct_outputs = 21;
  int happy_paths = 7;
  int validator_cases = 9;
  int validation_wrong_cases = 3;
};

SuiteConfig suite_config_from_json(const std::string& text);
SuiteConfig suite_config_from_file(const std::filesystem::path& path);

inline constexpr std::uint64_t kDefaultSuiteSeed = 42;

struct SuiteCensus {
  int cases = 0;
  int numerical = 0;
  int natural_language = 0;
  int distributed = 0;
  int syntax_errors = 0;
  int correct = 0;
  int incorrect = 0;
  int happy_paths = 0;

  bool operator==(const SuiteCensus&) const = default;
};

// Deterministic per-case plan derived from (config, seed). Throws
// ConfigError when the requested counts cannot be satisfied.
struct PlannedCase {
  CaseSpec spec;
  bool natural_language = false;
  bool happy = false;
  bool syntax = false;
};
std::vector<PlannedCase> plan_suite(const SuiteConfig& config,
                                    std::uint64_t seed);
SuiteCensus census_of_plan(const std::vector<PlannedCase>& plan);

// Writes the full benchmark directory (logs, ground truth, and the bundled
// "tamas-like" candidate that drops validator failures and reports empty
// flows with zero metrics for syntax-error cases). Pure function of
// (config, seed); two runs produce byte-identical trees.
SuiteCensus generate_suite(const SuiteConfig& config, std::uint64_t seed,
                           const std::filesystem::path& out_dir);

// N repeated runs of one input with seeded structural divergence, for
// cross-run variability studies. Returns the per-run log file contents.
std::vector<std::vector<std::string>> generate_runs(const std::string& input,
                                                    int n, std::uint64_t seed);

inline constexpr std::string_view kTamasLikeCandidate = "tamas-like";

}  // namespace ata

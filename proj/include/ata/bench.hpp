#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ata/analytics.hpp"
#include "ata/flow.hpp"
#include "ata/tracegen.hpp"
#include "ata/variability.hpp"

namespace ata {

enum class CaseTag { Numerical, NaturalLanguage, Distributed, SyntaxError };

std::string_view to_string(CaseTag tag);
CaseTag parse_case_tag(std::string_view text);

// One benchmark unit: the log, its ground-truth analytics outcomes, and
// bookkeeping for scoring.
struct BenchCase {
  std::string case_id;
  std::string input;
  std::optional<double> expected_output;
  std::optional<double> final_output;
  std::filesystem::path log_path;
  TaskFlowGraph gt_flow;
  SummaryRow gt_summary;
  std::vector<FailureRecord> gt_failures;
  std::set<CaseTag> tags;
};

// What one analytics system produced for one case.
struct CandidateOutput {
  std::string case_id;
  SummaryRow summary;
  std::optional<TaskFlowGraph> flow;
  std::vector<FailureRecord> failures;
};

// Loads a benchmark directory (layout in docs/summary-format.md) and
// cross-checks ground truth consistency. Throws BenchError on missing
// files and InconsistentGtError when summary and failure list disagree.
std::vector<BenchCase> load_benchmark(const std::filesystem::path& dir);

// Loads candidates/<name>/ from a benchmark directory. Missing per-case
// artifacts are tolerated (scored as non-matches later); an unknown
// candidate name is an error.
std::vector<CandidateOutput> load_candidate(const std::filesystem::path& dir,
                                            const std::string& name);

struct SummaryDiff {
  bool match = false;
  std::vector<std::string> fields;  // names of mismatched fields
};

// Integer metrics and failure counts compare exactly; execution time and
// cost within `rel_tol` relative tolerance.
SummaryDiff compare_summary(const SummaryRow& candidate, const SummaryRow& gt,
                            double rel_tol = 1e-6);

// Intersection-over-union of lowercase word multisets.
double token_similarity(const std::string& a, const std::string& b);

// Greedy best-first pairing of records within equal categories, scored by
// message similarity over max(|candidate|, |gt|). Both lists empty -> 1.
double failure_list_similarity(const std::vector<FailureRecord>& candidate,
                               const std::vector<FailureRecord>& gt);

struct CaseEval {
  std::string case_id;
  bool summary_match = false;
  std::optional<double> flow_ged;
  double failure_similarity = 0.0;
};

struct EvalReport {
  int cases = 0;
  int matches = 0;
  double summary_match_fraction = 0.0;
  double mean_flow_ged = 0.0;  // over cases with a candidate flow
  double mean_failure_similarity = 0.0;
  std::vector<CaseEval> per_case;  // sorted by case_id
};

struct EvalOptions {
  double rel_tol = 1e-6;
  std::size_t ged_budget = 12;
  GedCostModel costs;
};

// Scores candidate outputs against ground truth. A case without an output
// scores as a non-match; an output naming an unknown case id is an error.
EvalReport evaluate_candidate(const std::vector<BenchCase>& cases,
                              const std::vector<CandidateOutput>& outputs,
                              const EvalOptions& options = {});

// Runs this engine (ingest -> discovery -> summary -> failures) over every
// case log. Ingest failures produce an empty flow with zero metrics.
std::vector<CandidateOutput> run_engine_as_candidate(
    const std::vector<BenchCase>& cases);

// Tag and outcome counts over a loaded benchmark.
SuiteCensus census(const std::vector<BenchCase>& cases);

std::string eval_to_text(const EvalReport& report);
std::string eval_to_csv(const EvalReport& report);
std::string census_to_text(const SuiteCensus& census);

}  // namespace ata

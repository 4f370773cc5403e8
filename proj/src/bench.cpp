#include "ata/bench.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "ata/csv.hpp"
#include "ata/ingest.hpp"

namespace ata {

std::string_view to_string(CaseTag tag) {
  switch (tag) {
    case CaseTag::Numerical: return "numerical";
    case CaseTag::NaturalLanguage: return "natural_language";
    case CaseTag::Distributed: return "distributed";
    case CaseTag::SyntaxError: return "syntax_error";
  }
  return "?";
}

CaseTag parse_case_tag(std::string_view text) {
  if (text == "numerical") return CaseTag::Numerical;
  if (text == "natural_language") return CaseTag::NaturalLanguage;
  if (text == "distributed") return CaseTag::Distributed;
  if (text == "syntax_error") return CaseTag::SyntaxError;
  throw ParseError("unknown case tag: '" + std::string(text) + "'");
}

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw BenchError("missing file: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::map<std::string, SummaryRow> read_summary_csv(
    const std::filesystem::path& path) {
  const auto rows = csv_parse(read_file(path));
  if (rows.empty() || csv_join(rows.front()) != summary_csv_header())
    throw BenchError("bad summary header in " + path.string());
  std::map<std::string, SummaryRow> out;
  for (std::size_t i = 1; i < rows.size(); i++) {
    SummaryRow row = summary_from_csv_row(rows[i]);
    out[row.case_id] = std::move(row);
  }
  return out;
}

std::optional<double> parse_optional_double(const std::string& text) {
  if (text.empty()) return std::nullopt;
  return std::stod(text);
}

bool rel_close(double a, double b, double tol) {
  if (a == b) return true;
  return std::abs(a - b) <= tol * std::max(std::abs(a), std::abs(b));
}

}  // namespace

std::vector<BenchCase> load_benchmark(const std::filesystem::path& dir) {
  const auto case_rows = csv_parse(read_file(dir / "cases.csv"));
  if (case_rows.empty() ||
      csv_join(case_rows.front()) !=
          "case_id,input,tags,expected_output,final_output")
    throw BenchError("bad cases.csv header in " + dir.string());

  auto gt_summaries = read_summary_csv(dir / "gt" / "summary.csv");

  std::vector<BenchCase> cases;
  for (std::size_t i = 1; i < case_rows.size(); i++) {
    const auto& row = case_rows[i];
    if (row.size() != 5)
      throw BenchError("cases.csv row " + std::to_string(i + 1) +
                       " must have 5 fields");
    BenchCase bc;
    bc.case_id = row[0];
    bc.input = row[1];
    {
      std::stringstream tags(row[2]);
      std::string tag;
      while (std::getline(tags, tag, ';'))
        if (!tag.empty()) bc.tags.insert(parse_case_tag(tag));
    }
    bc.expected_output = parse_optional_double(row[3]);
    bc.final_output = parse_optional_double(row[4]);
    bc.log_path = dir / "logs" / (bc.case_id + ".log");
    if (!std::filesystem::exists(bc.log_path))
      throw BenchError("missing file: " + bc.log_path.string());
    bc.gt_flow =
        parse_flow_file(read_file(dir / "gt" / "flows" / (bc.case_id + ".flow")));
    bc.gt_failures = failures_from_jsonl(
        read_file(dir / "gt" / "failures" / (bc.case_id + ".failures")));
    auto summary = gt_summaries.find(bc.case_id);
    if (summary == gt_summaries.end())
      throw BenchError("case '" + bc.case_id + "' missing from gt/summary.csv");
    bc.gt_summary = summary->second;

    SummaryRow tallied = bc.gt_summary;
    tally_failures(tallied, bc.gt_failures);
    const SummaryDiff diff = compare_summary(tallied, bc.gt_summary);
    if (!diff.match)
      throw InconsistentGtError("ground truth for '" + bc.case_id +
                                "' is inconsistent: summary disagrees with "
                                "the failure list on " +
                                (diff.fields.empty() ? "?" : diff.fields[0]));
    if (bc.gt_summary.happy_path != bc.gt_failures.empty())
      throw InconsistentGtError("ground truth for '" + bc.case_id +
                                "' marks happy_path inconsistently");
    cases.push_back(std::move(bc));
  }
  if (cases.empty()) throw BenchError("benchmark has no cases");
  return cases;
}

std::vector<CandidateOutput> load_candidate(const std::filesystem::path& dir,
                                            const std::string& name) {
  const std::filesystem::path base = dir / "candidates" / name;
  if (!std::filesystem::is_directory(base))
    throw BenchError("unknown candidate: '" + name + "'");
  auto summaries = read_summary_csv(base / "summary.csv");
  std::vector<CandidateOutput> outputs;
  for (auto& [case_id, summary] : summaries) {
    CandidateOutput out;
    out.case_id = case_id;
    out.summary = summary;
    const auto flow_path = base / "flows" / (case_id + ".flow");
    if (std::filesystem::exists(flow_path))
      out.flow = parse_flow_file(read_file(flow_path));
    const auto failures_path = base / "failures" / (case_id + ".failures");
    if (std::filesystem::exists(failures_path))
      out.failures = failures_from_jsonl(read_file(failures_path));
    outputs.push_back(std::move(out));
  }
  return outputs;
}

SummaryDiff compare_summary(const SummaryRow& candidate, const SummaryRow& gt,
                            double rel_tol) {
  SummaryDiff diff;
  auto exact = [&](std::int64_t a, std::int64_t b, const char* field) {
    if (a != b) diff.fields.push_back(field);
  };
  exact(candidate.input_tokens, gt.input_tokens, "input_tokens");
  exact(candidate.output_tokens, gt.output_tokens, "output_tokens");
  exact(candidate.llm_calls, gt.llm_calls, "llm_calls");
  exact(candidate.tool_calls, gt.tool_calls, "tool_calls");
  exact(candidate.failures_total, gt.failures_total, "failures_total");
  for (FailureCategory c :
       {FailureCategory::InstructionViolation, FailureCategory::IncorrectInput,
        FailureCategory::Validation, FailureCategory::Validator}) {
    auto get = [&](const SummaryRow& row) {
      auto it = row.failures_by_category.find(c);
      return it == row.failures_by_category.end() ? std::int64_t{0} : it->second;
    };
    if (get(candidate) != get(gt))
      diff.fields.push_back("failures_" + std::string(to_string(c)));
  }
  for (Severity s : {Severity::CriticalError, Severity::Warning}) {
    auto get = [&](const SummaryRow& row) {
      auto it = row.failures_by_severity.find(s);
      return it == row.failures_by_severity.end() ? std::int64_t{0} : it->second;
    };
    if (get(candidate) != get(gt))
      diff.fields.push_back("failures_" + std::string(to_string(s)));
  }
  if (candidate.happy_path != gt.happy_path) diff.fields.push_back("happy_path");
  if (!rel_close(static_cast<double>(candidate.execution_time_ns),
                 static_cast<double>(gt.execution_time_ns), rel_tol))
    diff.fields.push_back("execution_time_ns");
  if (!rel_close(candidate.cost_usd, gt.cost_usd, rel_tol))
    diff.fields.push_back("cost_usd");
  diff.match = diff.fields.empty();
  return diff;
}

double token_similarity(const std::string& a, const std::string& b) {
  auto words = [](const std::string& text) {
    std::map<std::string, int> bag;
    std::string word;
    for (char c : text) {
      if (std::isalnum(static_cast<unsigned char>(c))) {
        word.push_back(static_cast<char>(
            std::tolower(static_cast<unsigned char>(c))));
      } else if (!word.empty()) {
        bag[word]++;
        word.clear();
      }
    }
    if (!word.empty()) bag[word]++;
    return bag;
  };
  const auto bag_a = words(a);
  const auto bag_b = words(b);
  std::size_t total_a = 0, total_b = 0, common = 0;
  for (const auto& [w, n] : bag_a) total_a += n;
  for (const auto& [w, n] : bag_b) total_b += n;
  if (total_a == 0 && total_b == 0) return 1.0;
  for (const auto& [w, n] : bag_a) {
    auto it = bag_b.find(w);
    if (it != bag_b.end()) common += std::min(n, it->second);
  }
  const std::size_t uni = total_a + total_b - common;
  return uni == 0 ? 1.0 : static_cast<double>(common) / static_cast<double>(uni);
}

double failure_list_similarity(const std::vector<FailureRecord>& candidate,
                               const std::vector<FailureRecord>& gt) {
  if (candidate.empty() && gt.empty()) return 1.0;
  if (candidate.empty() || gt.empty()) return 0.0;

  struct Pair {
    double sim;
    std::size_t c, g;
  };
  std::vector<Pair> pairs;
  for (std::size_t c = 0; c < candidate.size(); c++)
    for (std::size_t g = 0; g < gt.size(); g++)
      if (candidate[c].category == gt[g].category) {
        const double sim = token_similarity(candidate[c].message, gt[g].message);
        if (sim > 0) pairs.push_back({sim, c, g});
      }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    return std::tie(b.sim, a.c, a.g) < std::tie(a.sim, b.c, b.g);
  });
  std::vector<bool> c_used(candidate.size(), false), g_used(gt.size(), false);
  double total = 0.0;
  for (const auto& p : pairs) {
    if (c_used[p.c] || g_used[p.g]) continue;
    c_used[p.c] = true;
    g_used[p.g] = true;
    total += p.sim;
  }
  return total / static_cast<double>(std::max(candidate.size(), gt.size()));
}

EvalReport evaluate_candidate(const std::vector<BenchCase>& cases,
                              const std::vector<CandidateOutput>& outputs,
                              const EvalOptions& options) {
  std::map<std::string, const BenchCase*> by_id;
  for (const auto& bc : cases) by_id[bc.case_id] = &bc;
  std::map<std::string, const CandidateOutput*> out_by_id;
  for (const auto& out : outputs) {
    if (!by_id.count(out.case_id))
      throw BenchError("candidate output for unknown case id '" + out.case_id +
                       "'");
    out_by_id[out.case_id] = &out;
  }

  EvalReport report;
  report.cases = static_cast<int>(cases.size());
  double ged_sum = 0.0;
  int ged_count = 0;
  double sim_sum = 0.0;
  for (const auto& [case_id, bc] : by_id) {
    CaseEval ce;
    ce.case_id = case_id;
    auto it = out_by_id.find(case_id);
    if (it != out_by_id.end()) {
      const CandidateOutput& out = *it->second;
      ce.summary_match =
          compare_summary(out.summary, bc->gt_summary, options.rel_tol).match;
      if (out.flow) {
        ce.flow_ged = graph_edit_distance(*out.flow, bc->gt_flow, options.costs,
                                          options.ged_budget)
                          .distance;
        ged_sum += *ce.flow_ged;
        ged_count++;
      }
      ce.failure_similarity = failure_list_similarity(out.failures, bc->gt_failures);
    }
    if (ce.summary_match) report.matches++;
    sim_sum += ce.failure_similarity;
    report.per_case.push_back(std::move(ce));
  }
  report.summary_match_fraction =
      static_cast<double>(report.matches) / static_cast<double>(report.cases);
  report.mean_flow_ged = ged_count ? ged_sum / ged_count : 0.0;
  report.mean_failure_similarity = sim_sum / static_cast<double>(report.cases);
  return report;
}

std::vector<CandidateOutput> run_engine_as_candidate(
    const std::vector<BenchCase>& cases) {
  std::vector<CandidateOutput> outputs;
  for (const auto& bc : cases) {
    CandidateOutput out;
    out.case_id = bc.case_id;
    try {
      TraceSet set = load_trace_file(bc.log_path);
      const Trace* trace = nullptr;
      auto it = set.traces.find(bc.case_id);
      trace = it != set.traces.end() ? &it->second : &set.traces.begin()->second;
      TaskFlowGraph flow = discover_task_flow(*trace);
      out.summary = compute_summary(*trace, flow);
      out.summary.case_id = bc.case_id;
      out.failures = extract_failures(*trace);
      out.flow = std::move(flow);
    } catch (const Error&) {
      // Mirror a real system that cannot process a log: empty flow, zero
      // metrics, nothing detected.
      out.summary = SummaryRow{};
      out.summary.case_id = bc.case_id;
      tally_failures(out.summary, {});
      out.flow = TaskFlowGraph{};
      out.failures.clear();
    }
    outputs.push_back(std::move(out));
  }
  return outputs;
}

SuiteCensus census(const std::vector<BenchCase>& cases) {
  SuiteCensus c;
  c.cases = static_cast<int>(cases.size());
  for (const auto& bc : cases) {
    if (bc.tags.count(CaseTag::NaturalLanguage))
      c.natural_language++;
    else
      c.numerical++;
    if (bc.tags.count(CaseTag::Distributed)) c.distributed++;
    if (bc.tags.count(CaseTag::SyntaxError)) c.syntax_errors++;
    const bool correct = bc.expected_output && bc.final_output &&
                         *bc.expected_output == *bc.final_output;
    if (correct)
      c.correct++;
    else
      c.incorrect++;
    if (bc.gt_summary.happy_path) c.happy_paths++;
  }
  return c;
}

std::string eval_to_text(const EvalReport& report) {
  std::ostringstream out;
  for (const auto& ce : report.per_case) {
    out << ce.case_id << "  summary=" << (ce.summary_match ? "match" : "diff")
        << "  flow_ged=" << (ce.flow_ged ? fmt_double(*ce.flow_ged) : "absent")
        << "  failure_similarity=" << fmt_fixed(ce.failure_similarity, 6)
        << "\n";
  }
  out << "summary_match_fraction: " << fmt_fixed(report.summary_match_fraction, 6)
      << " (" << report.matches << "/" << report.cases << ")\n";
  out << "mean_flow_ged: " << fmt_double(report.mean_flow_ged) << "\n";
  out << "mean_failure_similarity: "
      << fmt_fixed(report.mean_failure_similarity, 6) << "\n";
  return out.str();
}

std::string eval_to_csv(const EvalReport& report) {
  std::string out = "case_id,summary_match,flow_ged,failure_similarity\n";
  for (const auto& ce : report.per_case) {
    out += csv_join({ce.case_id, ce.summary_match ? "true" : "false",
                     ce.flow_ged ? fmt_double(*ce.flow_ged) : "",
                     fmt_fixed(ce.failure_similarity, 6)}) +
           "\n";
  }
  return out;
}

std::string census_to_text(const SuiteCensus& c) {
  std::ostringstream out;
  out << "cases: " << c.cases << "\n";
  out << "numerical: " << c.numerical << "\n";
  out << "natural_language: " << c.natural_language << "\n";
  out << "distributed: " << c.distributed << "\n";
  out << "syntax_errors: " << c.syntax_errors << "\n";
  out << "correct: " << c.correct << "\n";
  out << "incorrect: " << c.incorrect << "\n";
  out << "happy_paths: " << c.happy_paths << "\n";
  return out.str();
}

}  // namespace ata

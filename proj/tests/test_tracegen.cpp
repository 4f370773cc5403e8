#include <doctest.h>

#include <algorithm>
#include <set>

#include "ata/bench.hpp"
#include "ata/ingest.hpp"
#include "ata/tracegen.hpp"
#include "testutil.hpp"

using namespace ata;

TEST_CASE("minimal decomposition: 1+1 yields a three-task happy flow") {
  CaseSpec spec;
  spec.case_id = "mini";
  spec.input = "1+1";
  spec.seed = 1;
  spec.decomposition_depth = 1;
  const GeneratedCase gen = generate_case(spec);
  CHECK(gen.gt_flow.nodes.size() == 3);
  CHECK(gen.gt_flow.roots.size() == 1);
  CHECK(gen.gt_summary.happy_path);
  CHECK(gen.gt_failures.empty());
  CHECK(gen.final_output == 2.0);
  CHECK(gen.expected_output == 2.0);
  int leaves = 0;
  for (const auto& [id, node] : gen.gt_flow.nodes)
    if (node.parent) {
      leaves++;
      CHECK(node.label == "const");
    }
  CHECK(leaves == 2);
}

TEST_CASE("a validation fault records one failure and skews the output") {
  CaseSpec spec;
  spec.case_id = "vf";
  spec.input = "(12/4)+[7*(2+1)]-9";
  spec.seed = 9;
  spec.outcome = CaseOutcome::Wrong;
  spec.faults.push_back({FailureCategory::Validation, 0, Severity::CriticalError});
  const GeneratedCase gen = generate_case(spec);
  REQUIRE(gen.gt_failures.size() == 1);
  CHECK(gen.gt_failures[0].category == FailureCategory::Validation);
  CHECK(gen.gt_failures[0].severity == Severity::CriticalError);
  REQUIRE(gen.final_output);
  REQUIRE(gen.expected_output);
  CHECK(*gen.final_output != *gen.expected_output);
  CHECK(!gen.gt_summary.happy_path);
}

TEST_CASE("same spec and seed regenerate byte-identical logs") {
  CaseSpec spec;
  spec.case_id = "det";
  spec.input = "((6+2)*[8-3*2])+{Average of 3, 7, and five?}";
  spec.seed = 4242;
  spec.distributed = true;
  spec.faults.push_back({FailureCategory::Validator, 1, Severity::Warning});
  const GeneratedCase a = generate_case(spec);
  const GeneratedCase b = generate_case(spec);
  CHECK(a.log_lines == b.log_lines);
  CHECK(write_flow_file(a.gt_flow) == write_flow_file(b.gt_flow));
  CHECK(summary_to_csv_row(a.gt_summary) == summary_to_csv_row(b.gt_summary));

  CaseSpec other = spec;
  other.seed = 4243;
  CHECK(generate_case(other).log_lines != a.log_lines);
}

TEST_CASE("instruction violation prunes a subtree but keeps the answer") {
  CaseSpec base;
  base.case_id = "iv";
  base.input = "[4+8*(5-3)/2]-15+(7-(9/3))";
  base.seed = 11;
  const GeneratedCase clean = generate_case(base);

  CaseSpec faulted = base;
  faulted.faults.push_back(
      {FailureCategory::InstructionViolation, 0, Severity::Warning});
  const GeneratedCase violated = generate_case(faulted);

  CHECK(violated.gt_flow.nodes.size() < clean.gt_flow.nodes.size());
  REQUIRE(violated.gt_failures.size() == 1);
  CHECK(violated.gt_failures[0].category ==
        FailureCategory::InstructionViolation);
  CHECK(violated.final_output == violated.expected_output);
}

TEST_CASE("validator faults stay invisible in the log taxonomy") {
  CaseSpec spec;
  spec.case_id = "val";
  spec.input = "14-{If you subtract 3 from 43 and then divide by 5, what is "
               "the result?}";
  spec.seed = 3;
  spec.faults.push_back({FailureCategory::Validator, 0, Severity::Warning});
  const GeneratedCase gen = generate_case(spec);

  REQUIRE(gen.gt_failures.size() == 1);
  CHECK(gen.gt_failures[0].category == FailureCategory::Validator);

  // The log itself records what the system believed: a validation
  // complaint whose rejected value equals the true sub-result (8).
  const TraceSet set = load_trace_set(gen.log_lines);
  const auto extracted = extract_failures(set.traces.begin()->second);
  REQUIRE(extracted.size() == 1);
  CHECK(extracted[0].category == FailureCategory::Validation);
  CHECK(extracted[0].message.find("8") != std::string::npos);
}

TEST_CASE("distributed cases span multiple services with tolerable skew") {
  CaseSpec spec;
  spec.case_id = "dist";
  spec.input = "(100-[25*2])/(5*{2+3})";
  spec.seed = 77;
  spec.distributed = true;
  const GeneratedCase gen = generate_case(spec);
  const TraceSet set = load_trace_set(gen.log_lines);
  const Trace& trace = set.traces.begin()->second;
  std::set<std::string> services;
  for (const auto& span : trace.spans) services.insert(span.service);
  CHECK(services.size() >= 2);
  for (const auto& issue : validate_trace(trace))
    CHECK(issue.severity < Severity::Warning);
}

TEST_CASE("parallel cases overlap sibling intervals") {
  CaseSpec spec;
  spec.case_id = "par";
  spec.input = "(12/4)+[7*(2+1)]-9";
  spec.seed = 5;
  spec.parallel = true;
  spec.decomposition_depth = 1;
  const GeneratedCase gen = generate_case(spec);
  // Root's children should overlap somewhere.
  std::vector<const TaskNode*> children;
  for (const auto& [id, node] : gen.gt_flow.nodes)
    if (node.parent) children.push_back(&node);
  REQUIRE(children.size() >= 2);
  bool overlap = false;
  for (std::size_t i = 0; i < children.size(); i++)
    for (std::size_t j = i + 1; j < children.size(); j++) {
      if (!children[i]->start_ns || !children[j]->start_ns) continue;
      if (*children[i]->start_ns < *children[j]->end_ns &&
          *children[j]->start_ns < *children[i]->end_ns)
        overlap = true;
    }
  CHECK(overlap);
}

TEST_CASE("syntax-error input produces an unreadable log with real GT") {
  CaseSpec spec;
  spec.case_id = "syn";
  spec.input = "2+{Average of 3, 7, and five?}*((5-";
  spec.seed = 13;
  spec.outcome = CaseOutcome::Absent;
  const GeneratedCase gen = generate_case(spec);
  CHECK(gen.syntax_error);
  CHECK(!gen.final_output);
  CHECK(!gen.expected_output);
  REQUIRE(gen.gt_failures.size() == 1);
  CHECK(gen.gt_failures[0].category == FailureCategory::IncorrectInput);
  CHECK(gen.gt_summary.execution_time_ns > 0);
  CHECK(gen.gt_flow.nodes.size() == 1);
  CHECK(gen.gt_flow.nodes.begin()->second.status == TaskStatus::Failed);
  REQUIRE(gen.log_lines.size() == 1);
  CHECK_THROWS_AS(load_trace_set(gen.log_lines), Error);
}

TEST_CASE("zero-fault closure: discovered analytics equal ground truth") {
  for (std::uint64_t seed = 1; seed <= 30; seed++) {
    CaseSpec spec;
    spec.case_id = "closure" + std::to_string(seed);
    spec.input = seed % 2 ? "(8-2)*3-(5+(11/2))/5"
                          : "{Sum of ten, twenty, and thirty?}/3-[5+(2*4)]";
    spec.seed = seed;
    spec.distributed = seed % 3 == 0;
    spec.parallel = seed % 2 == 0;
    const GeneratedCase gen = generate_case(spec);
    const TraceSet set = load_trace_set(gen.log_lines);
    const Trace& trace = set.traces.begin()->second;
    const TaskFlowGraph flow = discover_task_flow(trace);
    const SummaryRow summary = compute_summary(trace, flow);

    const GedResult ged = graph_edit_distance(flow, gen.gt_flow, {}, 64);
    CHECK(ged.distance == 0.0);
    const SummaryDiff diff = compare_summary(summary, gen.gt_summary);
    CAPTURE(diff.fields.empty() ? "" : diff.fields[0]);
    CHECK(diff.match);
    CHECK(summary.cost_usd == gen.gt_summary.cost_usd);  // same addition order
  }
}

TEST_CASE("default plan reproduces the reference composition") {
  const auto plan = plan_suite(SuiteConfig{}, kDefaultSuiteSeed);
  const SuiteCensus census = census_of_plan(plan);
  CHECK(census.cases == 30);
  CHECK(census.numerical == 14);
  CHECK(census.natural_language == 16);
  CHECK(census.distributed == 13);
  CHECK(census.syntax_errors == 3);
  CHECK(census.correct == 21);
  CHECK(census.incorrect == 9);
  CHECK(census.happy_paths == 7);

  // The showcase inputs appear with their canonical profiles.
  CHECK(plan[0].spec.input == "(8-2)*3-(5+(11/2))/5");
  CHECK(plan[0].happy);
  CHECK(plan[7].spec.input == "[4+8*(5-3)/2]-15+(7-(9/3))");
  REQUIRE(plan[7].spec.faults.size() == 1);
  CHECK(plan[7].spec.faults[0].category ==
        FailureCategory::InstructionViolation);
}

TEST_CASE("infeasible configs are rejected") {
  SuiteConfig zero;
  zero.cases = 0;
  CHECK_THROWS_AS(plan_suite(zero, 1), ConfigError);

  SuiteConfig happy_heavy;
  happy_heavy.happy_paths = 25;  // > correct_outputs
  happy_heavy.correct_outputs = 20;
  CHECK_THROWS_AS(plan_suite(happy_heavy, 1), ConfigError);

  SuiteConfig bad_split;
  bad_split.numerical = 10;  // 10 + 16 != 30
  CHECK_THROWS_AS(plan_suite(bad_split, 1), ConfigError);

  SuiteConfig syntax_heavy;
  syntax_heavy.syntax_errors = 12;  // > incorrect budget of 9
  CHECK_THROWS_AS(plan_suite(syntax_heavy, 1), ConfigError);
}

TEST_CASE("suite config json parsing") {
  const SuiteConfig config = suite_config_from_json(
      R"({"cases":10,"numerical":5,"natural_language":5,"distributed":2,
          "syntax_errors":1,"correct_outputs":7,"happy_paths":3,
          "validator_cases":2,"validation_wrong_cases":0})");
  CHECK(config.cases == 10);
  CHECK(config.validator_cases == 2);
  CHECK_THROWS_AS(suite_config_from_json("{\"caes\":3}"), ConfigError);
  CHECK_THROWS_AS(suite_config_from_json("[1,2]"), ConfigError);
}

TEST_CASE("custom feasible config generates and loads") {
  SuiteConfig config;
  config.cases = 8;
  config.numerical = 5;
  config.natural_language = 3;
  config.distributed = 3;
  config.syntax_errors = 1;
  config.correct_outputs = 6;
  config.happy_paths = 3;
  config.validator_cases = 1;
  config.validation_wrong_cases = 1;
  const auto plan = plan_suite(config, 9);
  const SuiteCensus census = census_of_plan(plan);
  CHECK(census.cases == 8);
  CHECK(census.happy_paths == 3);
  CHECK(census.syntax_errors == 1);
  CHECK(census.correct == 6);
}

TEST_CASE("generated runs diverge structurally but parse cleanly") {
  const auto runs = generate_runs("(8-2)*3-(5+(11/2))/5", 5, 31);
  REQUIRE(runs.size() == 5);
  std::set<std::size_t> node_counts;
  for (const auto& lines : runs) {
    const TraceSet set = load_trace_set(lines);
    node_counts.insert(
        discover_task_flow(set.traces.begin()->second).nodes.size());
  }
  CHECK(node_counts.size() > 1);  // seeded depth variation shows up
  CHECK_THROWS_AS(generate_runs("1+1", 0, 1), ConfigError);
}

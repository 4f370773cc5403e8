#include <doctest.h>

#include <algorithm>

#include "ata/analytics.hpp"
#include "ata/csv.hpp"
#include "ata/ingest.hpp"
#include "ata/rng.hpp"
#include "ata/tracegen.hpp"
#include "testutil.hpp"

using namespace ata;

namespace {

Trace trace_of(const GeneratedCase& gen) {
  return load_trace_set(gen.log_lines).traces.begin()->second;
}

Issue make_issue(Severity severity, std::optional<FailureCategory> category,
                 const std::string& message,
                 std::optional<std::string> task = {}) {
  Issue issue;
  issue.severity = severity;
  issue.category = category;
  issue.message = message;
  issue.entity_id = std::move(task);
  return issue;
}

SpanRecord span_with_issues(const std::string& span_id, std::int64_t start,
                            std::vector<Issue> issues) {
  SpanRecord span;
  span.trace_id = "t";
  span.span_id = span_id;
  span.service = "svc";
  span.start_ns = start;
  span.end_ns = start + 100;
  GenAIEvent event;
  event.type = LifecycleEventType::Update;
  event.time_ns = start + 1;
  event.issues = std::move(issues);
  span.events.push_back(event);
  return span;
}

TaskNode timed_node(const std::string& id, const std::string& label,
                    std::optional<std::string> parent, std::int64_t start,
                    std::int64_t end, std::vector<std::string> deps = {}) {
  TaskNode node;
  node.task_id = id;
  node.label = label;
  node.parent = std::move(parent);
  node.depends_on = std::move(deps);
  node.start_ns = start;
  node.end_ns = end;
  node.status = TaskStatus::Completed;
  return node;
}

TaskFlowGraph graph_of(std::vector<TaskNode> nodes) {
  TaskFlowGraph g;
  for (auto& node : nodes) g.nodes.emplace(node.task_id, std::move(node));
  for (const auto& [id, node] : g.nodes)
    if (!node.parent) g.roots.push_back(id);
  return g;
}

}  // namespace

TEST_CASE("happy generated case summarizes with zero failures") {
  CaseSpec spec;
  spec.case_id = "happy";
  spec.input = "(8-2)*3-(5+(11/2))/5";
  spec.seed = 5;
  const GeneratedCase gen = generate_case(spec);
  const Trace trace = trace_of(gen);
  const TaskFlowGraph flow = discover_task_flow(trace);
  const SummaryRow row = compute_summary(trace, flow);
  CHECK(row.failures_total == 0);
  CHECK(row.happy_path);
  CHECK(row.execution_time_ns > 0);
  CHECK(row.llm_calls > 0);
}

TEST_CASE("single span aggregates reserved attributes") {
  SpanRecord span;
  span.trace_id = "t";
  span.span_id = "s1";
  span.service = "svc";
  span.start_ns = 100;
  span.end_ns = 400;
  span.attributes["usage.input_tokens"] = std::int64_t{10};
  span.attributes["usage.output_tokens"] = std::int64_t{5};
  span.attributes["llm.call"] = true;
  GenAIEvent start;
  start.type = LifecycleEventType::Start;
  start.time_ns = 100;
  EntityRef task;
  task.kind = EntityKind::Task;
  task.id = "only";
  start.entities.push_back(task);
  span.events.push_back(start);
  Trace trace{"t", {span}};
  const TaskFlowGraph flow = discover_task_flow(trace);
  const SummaryRow row = compute_summary(trace, flow);
  CHECK(row.llm_calls == 1);
  CHECK(row.input_tokens == 10);
  CHECK(row.output_tokens == 5);
  CHECK(row.execution_time_ns == 300);
}

TEST_CASE("failure counting by category") {
  Trace trace{"t",
              {span_with_issues(
                   "s1", 0,
                   {make_issue(Severity::CriticalError,
                               FailureCategory::Validation, "v1", "a"),
                    make_issue(Severity::Warning, FailureCategory::Validation,
                               "v2", "a")}),
               span_with_issues("s2", 200,
                                {make_issue(Severity::Warning,
                                            FailureCategory::InstructionViolation,
                                            "iv", "b")})}};
  const TaskFlowGraph flow = discover_task_flow(trace);
  const SummaryRow row = compute_summary(trace, flow);
  CHECK(row.failures_total == 3);
  CHECK(row.failures_by_category.at(FailureCategory::Validation) == 2);
  CHECK(row.failures_by_category.at(FailureCategory::InstructionViolation) == 1);
  CHECK(row.failures_by_severity.at(Severity::CriticalError) == 1);
  CHECK(row.failures_by_severity.at(Severity::Warning) == 2);
  CHECK(!row.happy_path);
}

TEST_CASE("summary is invariant under span reordering") {
  CaseSpec spec;
  spec.case_id = "shuffled";
  spec.input = "((6+2)*[8-3*2])+{Average of 3, 7, and five?}";
  spec.seed = 17;
  spec.faults.push_back({FailureCategory::Validation, 1, Severity::Warning});
  const GeneratedCase gen = generate_case(spec);
  Trace trace = trace_of(gen);
  const TaskFlowGraph flow = discover_task_flow(trace);
  const SummaryRow before = compute_summary(trace, flow);

  Rng rng(11);
  for (std::size_t i = trace.spans.size(); i > 1; i--)
    std::swap(trace.spans[i - 1], trace.spans[rng.next() % i]);
  const TaskFlowGraph flow2 = discover_task_flow(trace);
  const SummaryRow after = compute_summary(trace, flow2);

  CHECK(before.execution_time_ns == after.execution_time_ns);
  CHECK(before.input_tokens == after.input_tokens);
  CHECK(before.cost_usd == after.cost_usd);
  CHECK(before.failures_total == after.failures_total);
  CHECK(before.failures_by_category == after.failures_by_category);
}

TEST_CASE("extract_failures keeps log categories and severity threshold") {
  Trace trace{"t",
              {span_with_issues(
                  "s1", 0,
                  {make_issue(Severity::CriticalError,
                              FailureCategory::IncorrectInput,
                              "ambiguous NL problem", "tNL"),
                   make_issue(Severity::Info, FailureCategory::Validation,
                              "fyi only"),
                   make_issue(Severity::Debug, {}, "noise")})}};
  const auto failures = extract_failures(trace);
  REQUIRE(failures.size() == 1);
  CHECK(failures[0].category == FailureCategory::IncorrectInput);
  CHECK(failures[0].severity == Severity::CriticalError);
  CHECK(failures[0].task_id == "tNL");
}

TEST_CASE("six incorrect-input plus three validator records") {
  std::vector<Issue> issues;
  for (int i = 0; i < 6; i++)
    issues.push_back(make_issue(Severity::CriticalError,
                                FailureCategory::IncorrectInput,
                                "unprocessable input " + std::to_string(i)));
  for (int i = 0; i < 3; i++)
    issues.push_back(make_issue(Severity::Warning, FailureCategory::Validator,
                                "correct value rejected " + std::to_string(i)));
  Trace trace{"t", {span_with_issues("s1", 0, issues)}};
  const auto failures = extract_failures(trace);
  REQUIRE(failures.size() == 9);
  int incorrect = 0, validator = 0;
  for (const auto& f : failures) {
    if (f.category == FailureCategory::IncorrectInput) incorrect++;
    if (f.category == FailureCategory::Validator) validator++;
  }
  CHECK(incorrect == 6);
  CHECK(validator == 3);
}

TEST_CASE("uncategorized warnings map to validation with a note") {
  Trace trace{"t", {span_with_issues("s1", 0,
                                     {make_issue(Severity::Warning, {},
                                                 "something odd happened")})}};
  const auto failures = extract_failures(trace);
  REQUIRE(failures.size() == 1);
  CHECK(failures[0].category == FailureCategory::Validation);
  CHECK(failures[0].message.find("something odd happened") != std::string::npos);
  CHECK(failures[0].message.find("uncategorized") != std::string::npos);
}

TEST_CASE("failure order is deterministic by time then span") {
  Trace trace{"t",
              {span_with_issues("s9", 500,
                                {make_issue(Severity::Warning,
                                            FailureCategory::Validation, "late")}),
               span_with_issues("s1", 0,
                                {make_issue(Severity::Warning,
                                            FailureCategory::Validation,
                                            "early")})}};
  const auto failures = extract_failures(trace);
  REQUIRE(failures.size() == 2);
  CHECK(failures[0].message == "early");
  CHECK(failures[1].message == "late");
}

TEST_CASE("failures_total always equals the extracted list length") {
  for (std::uint64_t seed = 1; seed <= 40; seed++) {
    CaseSpec spec;
    spec.case_id = "ft";
    spec.input = "(5*5)-[18/(4-1)]+2";
    spec.seed = seed;
    if (seed % 2)
      spec.faults.push_back(
          {FailureCategory::Validation, static_cast<std::uint32_t>(seed % 3),
           Severity::CriticalError});
    if (seed % 3 == 0)
      spec.faults.push_back({FailureCategory::InstructionViolation, 0,
                             Severity::Warning});
    const GeneratedCase gen = generate_case(spec);
    const Trace trace = trace_of(gen);
    const TaskFlowGraph flow = discover_task_flow(trace);
    const SummaryRow row = compute_summary(trace, flow);
    CHECK(row.failures_total ==
          static_cast<std::int64_t>(extract_failures(trace).size()));
  }
}

TEST_CASE("sequential independent siblings earn a parallel recommendation") {
  // B ran 10 ns, C ran 20 ns, strictly one after the other, no dependency:
  // running them concurrently saves (10 + 20) - max(10, 20) = 10 ns.
  TaskFlowGraph g = graph_of({
      timed_node("A", "root", {}, 0, 100),
      timed_node("B", "left", "A", 10, 20),
      timed_node("C", "right", "A", 30, 50),
  });
  const auto recs = recommend(g);
  REQUIRE(recs.size() == 1);
  CHECK(recs[0].kind == RecommendationKind::ParallelExecution);
  CHECK(recs[0].target_tasks == std::vector<std::string>{"B", "C"});
  CHECK(recs[0].estimated_latency_gain_ns == 10);
}

TEST_CASE("dependency paths exclude parallel recommendations") {
  TaskFlowGraph g = graph_of({
      timed_node("A", "root", {}, 0, 100),
      timed_node("B", "left", "A", 10, 20),
      timed_node("C", "right", "A", 30, 50, {"B"}),
  });
  CHECK(recommend(g).empty());

  // Transitive: B -> C -> D blocks {B, D} too.
  TaskFlowGraph h = graph_of({
      timed_node("A", "root", {}, 0, 100),
      timed_node("B", "b", "A", 10, 20),
      timed_node("C", "c", "A", 30, 40, {"B"}),
      timed_node("D", "d", "A", 50, 60, {"C"}),
  });
  CHECK(recommend(h).empty());
}

TEST_CASE("overlapping siblings are already parallel") {
  TaskFlowGraph g = graph_of({
      timed_node("A", "root", {}, 0, 100),
      timed_node("B", "left", "A", 10, 40),
      timed_node("C", "right", "A", 20, 50),
  });
  CHECK(recommend(g).empty());
}

TEST_CASE("repeated failures trigger a decomposition recommendation") {
  TaskFlowGraph g = graph_of({timed_node("A", "root", {}, 0, 100)});
  TaskNode& a = g.nodes.at("A");
  for (int i = 0; i < 3; i++)
    a.issues.push_back(make_issue(Severity::CriticalError,
                                  FailureCategory::Validation,
                                  "mismatch " + std::to_string(i)));
  const auto recs = recommend(g);
  REQUIRE(recs.size() == 1);
  CHECK(recs[0].kind == RecommendationKind::Decomposition);
  CHECK(recs[0].target_tasks == std::vector<std::string>{"A"});

  RecommendConfig strict;
  strict.decompose_failure_threshold = 4;
  CHECK(recommend(g, strict).empty());
}

TEST_CASE("short same-label sibling pairs suggest merging") {
  TaskFlowGraph g = graph_of({
      timed_node("A", "root", {}, 0, 100'000'000),
      timed_node("B", "const", "A", 0, 1'000'000),
      timed_node("C", "const", "A", 0, 1'500'000),
  });
  const auto recs = recommend(g);
  bool merging = false;
  for (const auto& rec : recs)
    if (rec.kind == RecommendationKind::Merging) {
      merging = true;
      CHECK(rec.target_tasks == std::vector<std::string>{"B", "C"});
    }
  CHECK(merging);

  RecommendConfig tight;
  tight.merge_duration_ceiling_ns = 2'000'000;  // combined 2.5 ms exceeds
  for (const auto& rec : recommend(g, tight))
    CHECK(rec.kind != RecommendationKind::Merging);
}

TEST_CASE("parallel recommendations never pair dependency-connected tasks") {
  // Brute-force reachability oracle over random sibling groups of <= 8.
  Rng rng(0xabc1);
  for (int iter = 0; iter < 500; iter++) {
    const int n = static_cast<int>(rng.range(2, 8));
    TaskFlowGraph g = graph_of({timed_node("root", "root", {}, 0, 1'000'000)});
    std::vector<std::string> ids;
    for (int i = 0; i < n; i++) {
      const std::string id = "x" + std::to_string(i);
      const std::int64_t start = static_cast<std::int64_t>(rng.range(0, 500));
      TaskNode node = timed_node(id, "w", "root", start,
                                 start + static_cast<std::int64_t>(rng.range(1, 200)));
      for (int j = 0; j < i; j++)
        if (rng.coin(0.25)) node.depends_on.push_back("x" + std::to_string(j));
      ids.push_back(id);
      g.nodes.emplace(id, std::move(node));
    }

    // Oracle: transitive closure by repeated relaxation.
    std::map<std::string, std::set<std::string>> reach;
    bool changed = true;
    while (changed) {
      changed = false;
      for (const auto& id : ids) {
        for (const auto& dep : g.nodes.at(id).depends_on) {
          if (reach[dep].insert(id).second) changed = true;
          for (const auto& further : reach[id])
            if (reach[dep].insert(further).second) changed = true;
        }
      }
    }

    for (const auto& rec : recommend(g)) {
      if (rec.kind != RecommendationKind::ParallelExecution) continue;
      for (const auto& u : rec.target_tasks)
        for (const auto& v : rec.target_tasks) {
          if (u == v) continue;
          CHECK(!reach[u].count(v));
        }
    }
  }
}

TEST_CASE("summary csv round-trips") {
  SummaryRow row;
  row.case_id = "case, with comma";
  row.execution_time_ns = 123456789;
  row.input_tokens = 42;
  row.output_tokens = 17;
  row.llm_calls = 3;
  row.tool_calls = 4;
  row.cost_usd = 0.001234;
  tally_failures(row, {{FailureCategory::Validator, Severity::Warning, "m", {}}});
  const std::string line = summary_to_csv_row(row);
  const SummaryRow back = summary_from_csv_row(csv_split(line));
  CHECK(back.case_id == row.case_id);
  CHECK(back.execution_time_ns == row.execution_time_ns);
  CHECK(back.cost_usd == row.cost_usd);
  CHECK(back.failures_by_category == row.failures_by_category);
  CHECK(back.happy_path == row.happy_path);
}

TEST_CASE("failure lists round-trip through jsonl") {
  std::vector<FailureRecord> failures = {
      {FailureCategory::Validation, Severity::CriticalError, "bad value", "t1"},
      {FailureCategory::Validator, Severity::Warning, "false alarm", {}},
  };
  const auto back = failures_from_jsonl(failures_to_jsonl(failures));
  CHECK(back == failures);
  CHECK(failures_from_jsonl("").empty());
}

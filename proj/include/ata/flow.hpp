#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ata/core.hpp"
#include "ata/ingest.hpp"

namespace ata {

enum class TaskStatus { Completed, Failed, Aborted, Suspended, Incomplete };

std::string_view to_string(TaskStatus status);
TaskStatus parse_task_status(std::string_view text);

// Usage and cost totals attached to one task. After discovery every node's
// bag includes the sum of its descendants' bags plus its own direct costs;
// duration_ns is the node's own end - start, never rolled up.
struct MetricBag {
  std::int64_t input_tokens = 0;
  std::int64_t output_tokens = 0;
  std::int64_t llm_calls = 0;
  std::int64_t tool_calls = 0;
  double cost_usd = 0.0;
  std::int64_t duration_ns = 0;

  bool operator==(const MetricBag&) const = default;
};

// One task in the discovered flow. Status comes from the chronologically
// last lifecycle event referencing the task: end -> completed,
// failure -> failed, abortion -> aborted, suspension -> suspended,
// anything else -> incomplete.
struct TaskNode {
  std::string task_id;
  std::string label;
  TaskStatus status = TaskStatus::Incomplete;
  std::optional<std::string> parent;
  std::vector<std::string> depends_on;
  std::optional<std::int64_t> start_ns;
  std::optional<std::int64_t> end_ns;
  MetricBag metrics;
  std::vector<Issue> issues;
  // Workflow annotation when the trace mentions one; not serialized.
  std::optional<std::string> workflow;
};

// Hierarchical task DAG: parent links form a forest, dependency edges are
// restricted to siblings and acyclic, every depends_on target exists.
struct TaskFlowGraph {
  std::map<std::string, TaskNode> nodes;
  std::vector<std::string> roots;  // sorted node ids without a parent

  bool empty() const { return nodes.empty(); }
};

// Rebuilds the task flow from task lifecycle events. Parent and depends_on
// fields resolve last-writer-wins by event time; span metrics are
// attributed to the task whose creation/start event appears earliest in
// that span. Throws CycleError / MissingDependencyError on invalid
// structure; recoverable oddities (re-parenting, non-sibling dependencies)
// go to `warnings` when provided and the offending edge is dropped.
TaskFlowGraph discover_task_flow(const Trace& trace,
                                 std::vector<ValidationIssue>* warnings = nullptr);

// Deterministic DOT rendering: decomposition edges solid, dependency edges
// dashed, node label = task label + status. Equal graphs produce
// byte-equal text.
std::string flow_to_dot(const TaskFlowGraph& flow);

// Flow file format (JSON document, schema in docs/flow-format.md).
// parse_flow_file(write_flow_file(g)) is structurally equal to g.
std::string write_flow_file(const TaskFlowGraph& flow);
TaskFlowGraph parse_flow_file(std::string_view text);

// Structural equality over everything the flow file carries: ids, labels,
// statuses, parents, dependencies, metrics, and timestamps.
bool flow_structurally_equal(const TaskFlowGraph& a, const TaskFlowGraph& b);

}  // namespace ata

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "ata/error.hpp"

namespace ata {

// The six entity kinds an agentic system is made of.
enum class EntityKind {
  Resource,
  Tool,
  Workflow,
  Task,
  Agent,
  Organization,
};

// Lifecycle transitions an entity can go through. Exactly these eight.
enum class LifecycleEventType {
  Creation,
  Update,
  Start,
  End,
  Suspension,
  Abortion,
  Failure,
  Deletion,
};

// Issue severity. The enum order defines the total order:
// critical_error > warning > info > debug.
enum class Severity {
  Debug = 0,
  Info = 1,
  Warning = 2,
  CriticalError = 3,
};

// The four-way failure taxonomy used by analytics and ground truth.
enum class FailureCategory {
  InstructionViolation,
  IncorrectInput,
  Validation,
  Validator,
};

std::string_view to_string(EntityKind kind);
std::string_view to_string(LifecycleEventType type);
std::string_view to_string(Severity severity);
std::string_view to_string(FailureCategory category);

// All parsers are case-insensitive and treat ' ' and '_' as equivalent
// ("critical error" == "critical_error"). Unknown names raise ParseError
// naming the offending string.
EntityKind parse_entity_kind(std::string_view text);
LifecycleEventType parse_event_type(std::string_view text);
Severity parse_severity(std::string_view text);
FailureCategory parse_failure_category(std::string_view text);

// Entity field values: strings, integers, decimals, or a list of ids
// (used by depends_on). Nothing nested beyond that.
using FieldValue =
    std::variant<std::int64_t, double, std::string, std::vector<std::string>>;
using FieldMap = std::map<std::string, FieldValue>;

// Span attribute values stay flat: string, integer, decimal, or boolean
// (llm.call / tool.call markers).
using AttrValue = std::variant<std::int64_t, double, bool, std::string>;
using AttrMap = std::map<std::string, AttrValue>;

// A problem reported by the running system, attached to a lifecycle event.
// `category` is required for failures, optional for info/debug notes.
struct Issue {
  Severity severity = Severity::Info;
  std::optional<FailureCategory> category;
  std::string message;
  std::optional<std::string> entity_id;

  bool operator==(const Issue&) const = default;
};

// Reference to an affected entity, with whatever fields the event carries.
// Task entities use the reserved keys parent_task_id, depends_on, tool_id,
// agent_id, name, input, output.
struct EntityRef {
  EntityKind kind = EntityKind::Task;
  std::string id;
  FieldMap fields;

  bool operator==(const EntityRef&) const = default;
};

// A lifecycle/state-change record bound to a span. `entities` may be empty
// only for update events; violations surface as validation warnings.
struct GenAIEvent {
  LifecycleEventType type = LifecycleEventType::Update;
  std::int64_t time_ns = 0;
  std::vector<EntityRef> entities;
  std::vector<Issue> issues;

  bool operator==(const GenAIEvent&) const = default;
};

// One logged operation. Timestamps are integer nanoseconds since epoch.
struct SpanRecord {
  std::string trace_id;
  std::string span_id;
  std::optional<std::string> parent_span_id;
  std::string name;
  std::string service;
  std::int64_t start_ns = 0;
  std::int64_t end_ns = 0;
  AttrMap attributes;
  std::vector<GenAIEvent> events;

  bool operator==(const SpanRecord&) const = default;
};

// All spans sharing one trace id, possibly from multiple services.
struct Trace {
  std::string trace_id;
  std::vector<SpanRecord> spans;

  bool operator==(const Trace&) const = default;
};

// Reserved span attribute keys recognized by metric aggregation.
inline constexpr std::string_view kAttrInputTokens = "usage.input_tokens";
inline constexpr std::string_view kAttrOutputTokens = "usage.output_tokens";
inline constexpr std::string_view kAttrLlmModel = "llm.model";
inline constexpr std::string_view kAttrLlmCall = "llm.call";
inline constexpr std::string_view kAttrToolCall = "tool.call";
inline constexpr std::string_view kAttrCostUsd = "cost.usd";

// Reserved task entity field keys.
inline constexpr std::string_view kFieldParentTaskId = "parent_task_id";
inline constexpr std::string_view kFieldDependsOn = "depends_on";
inline constexpr std::string_view kFieldToolId = "tool_id";
inline constexpr std::string_view kFieldAgentId = "agent_id";
inline constexpr std::string_view kFieldName = "name";
inline constexpr std::string_view kFieldInput = "input";
inline constexpr std::string_view kFieldOutput = "output";
inline constexpr std::string_view kFieldWorkflowId = "workflow_id";

// Shortest decimal text that round-trips back to the same double.
std::string fmt_double(double value);
// Fixed-point decimal text (used by CSV columns that pin a precision).
std::string fmt_fixed(double value, int precision);

}  // namespace ata

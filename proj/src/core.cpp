#include "ata/core.hpp"

#include <array>
#include <charconv>
#include <cstdio>

namespace ata {
namespace {

// Lowercases and folds ' ' into '_' so "Critical Error" matches
// "critical_error".
std::string normalize_name(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    if (c == ' ') c = '_';
    out.push_back(c);
  }
  return out;
}

}  // namespace

std::string_view to_string(EntityKind kind) {
  switch (kind) {
    case EntityKind::Resource: return "resource";
    case EntityKind::Tool: return "tool";
    case EntityKind::Workflow: return "workflow";
    case EntityKind::Task: return "task";
    case EntityKind::Agent: return "agent";
    case EntityKind::Organization: return "organization";
  }
  return "?";
}

std::string_view to_string(LifecycleEventType type) {
  switch (type) {
    case LifecycleEventType::Creation: return "creation";
    case LifecycleEventType::Update: return "update";
    case LifecycleEventType::Start: return "start";
    case LifecycleEventType::End: return "end";
    case LifecycleEventType::Suspension: return "suspension";
    case LifecycleEventType::Abortion: return "abortion";
    case LifecycleEventType::Failure: return "failure";
    case LifecycleEventType::Deletion: return "deletion";
  }
  return "?";
}

std::string_view to_string(Severity severity) {
  switch (severity) {
    case Severity::Debug: return "debug";
    case Severity::Info: return "info";
    case Severity::Warning: return "warning";
    case Severity::CriticalError: return "critical_error";
  }
  return "?";
}

std::string_view to_string(FailureCategory category) {
  switch (category) {
    case FailureCategory::InstructionViolation: return "instruction_violation";
    case FailureCategory::IncorrectInput: return "incorrect_input";
    case FailureCategory::Validation: return "validation";
    case FailureCategory::Validator: return "validator";
  }
  return "?";
}

EntityKind parse_entity_kind(std::string_view text) {
  const std::string n = normalize_name(text);
  if (n == "resource") return EntityKind::Resource;
  if (n == "tool") return EntityKind::Tool;
  if (n == "workflow") return EntityKind::Workflow;
  if (n == "task") return EntityKind::Task;
  if (n == "agent") return EntityKind::Agent;
  if (n == "organization") return EntityKind::Organization;
  throw ParseError("unknown entity kind: '" + std::string(text) + "'");
}

LifecycleEventType parse_event_type(std::string_view text) {
  const std::string n = normalize_name(text);
  if (n == "creation") return LifecycleEventType::Creation;
  if (n == "update") return LifecycleEventType::Update;
  if (n == "start") return LifecycleEventType::Start;
  if (n == "end") return LifecycleEventType::End;
  if (n == "suspension") return LifecycleEventType::Suspension;
  if (n == "abortion") return LifecycleEventType::Abortion;
  if (n == "failure") return LifecycleEventType::Failure;
  if (n == "deletion") return LifecycleEventType::Deletion;
  throw ParseError("unknown event type: '" + std::string(text) + "'");
}

Severity parse_severity(std::string_view text) {
  const std::string n = normalize_name(text);
  if (n == "debug") return Severity::Debug;
  if (n == "info") return Severity::Info;
  if (n == "warning") return Severity::Warning;
  if (n == "critical_error") return Severity::CriticalError;
  throw ParseError("unknown severity: '" + std::string(text) + "'");
}

FailureCategory parse_failure_category(std::string_view text) {
  const std::string n = normalize_name(text);
  if (n == "instruction_violation") return FailureCategory::InstructionViolation;
  if (n == "incorrect_input") return FailureCategory::IncorrectInput;
  if (n == "validation") return FailureCategory::Validation;
  if (n == "validator") return FailureCategory::Validator;
  throw ParseError("unknown failure category: '" + std::string(text) + "'");
}

std::string fmt_double(double value) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), ptr);
}

std::string fmt_fixed(double value, int precision) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value,
                                 std::chars_format::fixed, precision);
  return std::string(buf.data(), ptr);
}

}  // namespace ata

#include "ata/ingest.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace ata {

using nlohmann::json;

namespace {

json attr_to_json(const AttrValue& value) {
  return std::visit([](const auto& v) { return json(v); }, value);
}

AttrValue attr_from_json(const std::string& key, const json& j) {
  if (j.is_number_integer()) return j.get<std::int64_t>();
  if (j.is_number_unsigned()) return static_cast<std::int64_t>(j.get<std::uint64_t>());
  if (j.is_number_float()) return j.get<double>();
  if (j.is_boolean()) return j.get<bool>();
  if (j.is_string()) return j.get<std::string>();
  throw ParseError("attribute '" + key + "' must be a flat scalar");
}

json field_to_json(const FieldValue& value) {
  return std::visit([](const auto& v) { return json(v); }, value);
}

FieldValue field_from_json(const std::string& key, const json& j) {
  if (j.is_number_integer()) return j.get<std::int64_t>();
  if (j.is_number_unsigned()) return static_cast<std::int64_t>(j.get<std::uint64_t>());
  if (j.is_number_float()) return j.get<double>();
  if (j.is_string()) return j.get<std::string>();
  if (j.is_array()) {
    std::vector<std::string> ids;
    for (const auto& e : j) {
      if (!e.is_string())
        throw ParseError("field '" + key + "' list entries must be strings");
      ids.push_back(e.get<std::string>());
    }
    return ids;
  }
  throw ParseError("field '" + key + "' must be string, number, or id list");
}

json issue_to_json(const Issue& issue) {
  json j;
  j["severity"] = std::string(to_string(issue.severity));
  if (issue.category) j["category"] = std::string(to_string(*issue.category));
  j["message"] = issue.message;
  if (issue.entity_id) j["entity_id"] = *issue.entity_id;
  return j;
}

Issue issue_from_json(const json& j) {
  Issue issue;
  issue.severity = parse_severity(j.at("severity").get<std::string>());
  if (j.contains("category"))
    issue.category = parse_failure_category(j.at("category").get<std::string>());
  issue.message = j.at("message").get<std::string>();
  if (issue.message.empty()) throw ParseError("issue message must be non-empty");
  if (j.contains("entity_id")) issue.entity_id = j.at("entity_id").get<std::string>();
  return issue;
}

json entity_to_json(const EntityRef& entity) {
  json j;
  j["kind"] = std::string(to_string(entity.kind));
  j["id"] = entity.id;
  if (!entity.fields.empty()) {
    json fields = json::object();
    for (const auto& [key, value] : entity.fields) fields[key] = field_to_json(value);
    j["fields"] = fields;
  }
  return j;
}

EntityRef entity_from_json(const json& j) {
  EntityRef entity;
  entity.kind = parse_entity_kind(j.at("kind").get<std::string>());
  entity.id = j.at("id").get<std::string>();
  if (entity.id.empty()) throw ParseError("entity id must be non-empty");
  if (j.contains("fields")) {
    for (const auto& [key, value] : j.at("fields").items())
      entity.fields[key] = field_from_json(key, value);
  }
  if (entity.kind == EntityKind::Task) {
    auto deps = entity.fields.find(std::string(kFieldDependsOn));
    if (deps != entity.fields.end()) {
      if (const auto* ids = std::get_if<std::vector<std::string>>(&deps->second)) {
        for (const auto& id : *ids)
          if (id == entity.id)
            throw ParseError("task '" + entity.id + "' depends on itself");
      }
    }
  }
  return entity;
}

json event_to_json(const GenAIEvent& event) {
  json j;
  j["type"] = std::string(to_string(event.type));
  j["time_ns"] = event.time_ns;
  if (!event.entities.empty()) {
    json entities = json::array();
    for (const auto& e : event.entities) entities.push_back(entity_to_json(e));
    j["entities"] = entities;
  }
  if (!event.issues.empty()) {
    json issues = json::array();
    for (const auto& i : event.issues) issues.push_back(issue_to_json(i));
    j["issues"] = issues;
  }
  return j;
}

GenAIEvent event_from_json(const json& j) {
  GenAIEvent event;
  event.type = parse_event_type(j.at("type").get<std::string>());
  event.time_ns = j.at("time_ns").get<std::int64_t>();
  if (event.time_ns < 0)
    throw ParseError("negative event timestamp: " + std::to_string(event.time_ns));
  if (j.contains("entities"))
    for (const auto& e : j.at("entities")) event.entities.push_back(entity_from_json(e));
  if (j.contains("issues"))
    for (const auto& i : j.at("issues")) event.issues.push_back(issue_from_json(i));
  return event;
}

}  // namespace

std::string serialize_span(const SpanRecord& span) {
  json j;
  j["trace_id"] = span.trace_id;
  j["span_id"] = span.span_id;
  if (span.parent_span_id) j["parent_span_id"] = *span.parent_span_id;
  j["name"] = span.name;
  j["service"] = span.service;
  j["start_ns"] = span.start_ns;
  j["end_ns"] = span.end_ns;
  if (!span.attributes.empty()) {
    json attrs = json::object();
    for (const auto& [key, value] : span.attributes) attrs[key] = attr_to_json(value);
    j["attributes"] = attrs;
  }
  if (!span.events.empty()) {
    json events = json::array();
    for (const auto& e : span.events) events.push_back(event_to_json(e));
    j["events"] = events;
  }
  return j.dump();
}

SpanRecord parse_span_line(std::string_view line, std::size_t line_no) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError("malformed span line: " + std::string(e.what()), line_no,
                     e.byte);
  }
  try {
    if (!j.is_object()) throw ParseError("span line must be a JSON object");
    SpanRecord span;
    span.trace_id = j.at("trace_id").get<std::string>();
    span.span_id = j.at("span_id").get<std::string>();
    if (span.trace_id.empty() || span.span_id.empty())
      throw ParseError("trace_id and span_id must be non-empty");
    if (j.contains("parent_span_id"))
      span.parent_span_id = j.at("parent_span_id").get<std::string>();
    span.name = j.value("name", "");
    span.service = j.value("service", "");
    span.start_ns = j.at("start_ns").get<std::int64_t>();
    span.end_ns = j.at("end_ns").get<std::int64_t>();
    if (span.start_ns < 0 || span.end_ns < 0)
      throw ParseError("negative span timestamp");
    if (span.start_ns > span.end_ns)
      throw ParseError("span start_ns " + std::to_string(span.start_ns) +
                       " after end_ns " + std::to_string(span.end_ns));
    if (j.contains("attributes"))
      for (const auto& [key, value] : j.at("attributes").items())
        span.attributes[key] = attr_from_json(key, value);
    if (j.contains("events"))
      for (const auto& e : j.at("events")) span.events.push_back(event_from_json(e));
    return span;
  } catch (const ParseError& e) {
    throw ParseError(e.what(), line_no, e.byte_offset);
  } catch (const json::exception& e) {
    throw ParseError("malformed span line: " + std::string(e.what()), line_no);
  }
}

TraceSet load_trace_set(const std::vector<std::string>& lines) {
  TraceSet set;
  std::size_t line_no = 0;
  std::size_t parsed = 0;
  for (const auto& line : lines) {
    line_no++;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    SpanRecord span = parse_span_line(line, line_no);
    Trace& trace = set.traces[span.trace_id];
    trace.trace_id = span.trace_id;
    trace.spans.push_back(std::move(span));
    parsed++;
  }
  if (parsed == 0) throw IngestError("no spans in input");

  for (auto& [trace_id, trace] : set.traces) {
    std::sort(trace.spans.begin(), trace.spans.end(),
              [](const SpanRecord& a, const SpanRecord& b) {
                return std::tie(a.start_ns, a.span_id) <
                       std::tie(b.start_ns, b.span_id);
              });
    std::set<std::string> ids;
    for (const auto& span : trace.spans) {
      if (!ids.insert(span.span_id).second)
        throw IngestError("duplicate span id '" + span.span_id +
                          "' in trace '" + trace_id + "'");
    }
    for (const auto& span : trace.spans) {
      if (span.parent_span_id && !ids.count(*span.parent_span_id)) {
        set.parse_warnings.push_back(
            {Severity::Warning, span.span_id,
             "orphan parent: span references missing parent '" +
                 *span.parent_span_id + "'"});
      }
    }
  }
  return set;
}

TraceSet load_trace_set(std::istream& in) {
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return load_trace_set(lines);
}

TraceSet load_trace_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot open trace file: " + path.string());
  return load_trace_set(in);
}

std::vector<ValidationIssue> validate_trace(const Trace& trace,
                                            const ValidateOptions& options) {
  std::vector<ValidationIssue> issues;
  auto warn = [&](const std::string& location, const std::string& message,
                  Severity severity = Severity::Warning) {
    issues.push_back({severity, location, message});
  };

  std::map<std::string, const SpanRecord*> by_id;
  std::map<std::string, int> roots_per_service;
  for (const auto& span : trace.spans) {
    by_id[span.span_id] = &span;
    if (!span.parent_span_id) roots_per_service[span.service]++;
  }

  std::size_t root_total = 0;
  for (const auto& [service, count] : roots_per_service) {
    root_total += count;
    if (count > 1)
      warn(service, "service has " + std::to_string(count) +
                        " root spans; at most one expected");
  }
  if (root_total == 0)
    warn(trace.trace_id, "trace has no root span", Severity::CriticalError);

  // Collect task lifecycle sightings and dependency targets as we walk.
  std::set<std::string> task_ids;
  for (const auto& span : trace.spans)
    for (const auto& event : span.events)
      for (const auto& entity : event.entities)
        if (entity.kind == EntityKind::Task) task_ids.insert(entity.id);

  std::set<std::string> started;
  std::vector<const SpanRecord*> ordered;
  for (const auto& span : trace.spans) ordered.push_back(&span);
  std::sort(ordered.begin(), ordered.end(),
            [](const SpanRecord* a, const SpanRecord* b) {
              return std::tie(a->start_ns, a->span_id) <
                     std::tie(b->start_ns, b->span_id);
            });

  for (const SpanRecord* span : ordered) {
    for (const auto& event : span->events) {
      if (event.time_ns < span->start_ns || event.time_ns > span->end_ns)
        warn(span->span_id,
             "event at " + std::to_string(event.time_ns) +
                 " outside span window [" + std::to_string(span->start_ns) +
                 ", " + std::to_string(span->end_ns) + "]");
      if (event.entities.empty() && event.type != LifecycleEventType::Update)
        warn(span->span_id, std::string("non-update event '") +
                                std::string(to_string(event.type)) +
                                "' has no entities");
      for (const auto& entity : event.entities) {
        if (entity.kind != EntityKind::Task) continue;
        auto deps = entity.fields.find(std::string(kFieldDependsOn));
        if (deps != entity.fields.end()) {
          if (const auto* ids =
                  std::get_if<std::vector<std::string>>(&deps->second)) {
            for (const auto& dep : *ids)
              if (!task_ids.count(dep))
                warn(span->span_id, "task '" + entity.id +
                                        "' depends on unknown task '" + dep +
                                        "'");
          }
        }
        if (event.type == LifecycleEventType::Start) started.insert(entity.id);
        if (event.type == LifecycleEventType::End && !started.count(entity.id))
          warn(span->span_id,
               "lifecycle gap: end event for task '" + entity.id +
                   "' without a prior start");
      }
    }
  }

  for (const auto& span : trace.spans) {
    if (!span.parent_span_id) continue;
    auto parent = by_id.find(*span.parent_span_id);
    if (parent == by_id.end()) continue;  // orphan, reported at load time
    if (span.start_ns + options.clock_skew_tolerance_ns <
        parent->second->start_ns)
      warn(span.span_id,
           "clock skew: span starts " +
               std::to_string(parent->second->start_ns - span.start_ns) +
               " ns before its parent '" + *span.parent_span_id + "'");
  }

  return issues;
}

}  // namespace ata

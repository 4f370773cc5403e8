#include "ata/flow.hpp"

#include <algorithm>
#include <functional>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace ata {

using nlohmann::json;

std::string_view to_string(TaskStatus status) {
  switch (status) {
    case TaskStatus::Completed: return "completed";
    case TaskStatus::Failed: return "failed";
    case TaskStatus::Aborted: return "aborted";
    case TaskStatus::Suspended: return "suspended";
    case TaskStatus::Incomplete: return "incomplete";
  }
  return "?";
}

TaskStatus parse_task_status(std::string_view text) {
  if (text == "completed") return TaskStatus::Completed;
  if (text == "failed") return TaskStatus::Failed;
  if (text == "aborted") return TaskStatus::Aborted;
  if (text == "suspended") return TaskStatus::Suspended;
  if (text == "incomplete") return TaskStatus::Incomplete;
  throw FlowFileError("unknown task status: '" + std::string(text) + "'");
}

namespace {

// Event sighting order: event time first, then the canonical walk sequence
// so ties resolve the same way on every run.
struct Stamp {
  std::int64_t time_ns;
  std::size_t seq;
  bool operator<(const Stamp& other) const {
    return std::tie(time_ns, seq) < std::tie(other.time_ns, other.seq);
  }
};

struct NodeDraft {
  TaskNode node;
  std::optional<Stamp> parent_stamp;
  std::optional<Stamp> deps_stamp;
  std::optional<Stamp> status_stamp;
  std::optional<Stamp> label_stamp;
};

const std::string* field_string(const FieldMap& fields, std::string_view key) {
  auto it = fields.find(std::string(key));
  if (it == fields.end()) return nullptr;
  return std::get_if<std::string>(&it->second);
}

std::int64_t attr_int(const AttrMap& attrs, std::string_view key) {
  auto it = attrs.find(std::string(key));
  if (it == attrs.end()) return 0;
  if (const auto* i = std::get_if<std::int64_t>(&it->second)) return *i < 0 ? 0 : *i;
  if (const auto* d = std::get_if<double>(&it->second))
    return *d < 0 ? 0 : static_cast<std::int64_t>(*d);
  return 0;
}

double attr_double(const AttrMap& attrs, std::string_view key) {
  auto it = attrs.find(std::string(key));
  if (it == attrs.end()) return 0.0;
  if (const auto* d = std::get_if<double>(&it->second)) return *d < 0 ? 0.0 : *d;
  if (const auto* i = std::get_if<std::int64_t>(&it->second))
    return *i < 0 ? 0.0 : static_cast<double>(*i);
  return 0.0;
}

bool attr_flag(const AttrMap& attrs, std::string_view key) {
  auto it = attrs.find(std::string(key));
  if (it == attrs.end()) return false;
  if (const auto* b = std::get_if<bool>(&it->second)) return *b;
  if (const auto* i = std::get_if<std::int64_t>(&it->second)) return *i != 0;
  return false;
}

std::string dot_escape(std::string_view text) {
  std::string out;
  for (char c : text) {
    if (c == '"' || c == '\\') out.push_back('\\');
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out.push_back(c);
  }
  return out;
}

}  // namespace

TaskFlowGraph discover_task_flow(const Trace& trace,
                                 std::vector<ValidationIssue>* warnings) {
  auto warn = [&](const std::string& location, const std::string& message) {
    if (warnings) warnings->push_back({Severity::Warning, location, message});
  };

  std::vector<const SpanRecord*> ordered;
  for (const auto& span : trace.spans) ordered.push_back(&span);
  std::sort(ordered.begin(), ordered.end(),
            [](const SpanRecord* a, const SpanRecord* b) {
              return std::tie(a->start_ns, a->span_id) <
                     std::tie(b->start_ns, b->span_id);
            });

  std::map<std::string, NodeDraft> drafts;
  auto draft = [&](const std::string& id) -> NodeDraft& {
    NodeDraft& d = drafts[id];
    if (d.node.task_id.empty()) d.node.task_id = id;
    return d;
  };

  // Pass 1: one node per distinct task entity id; structural fields resolve
  // last-writer-wins by event time.
  std::size_t seq = 0;
  for (const SpanRecord* span : ordered) {
    for (const auto& event : span->events) {
      seq++;
      const Stamp stamp{event.time_ns, seq};
      for (const auto& entity : event.entities) {
        if (entity.kind == EntityKind::Task) {
          NodeDraft& d = draft(entity.id);
          if (const auto* parent = field_string(entity.fields, kFieldParentTaskId)) {
            if (!d.parent_stamp || d.parent_stamp < stamp) {
              if (d.node.parent && *d.node.parent != *parent)
                warn(entity.id, "task re-parented from '" + *d.node.parent +
                                    "' to '" + *parent + "'");
              d.node.parent = *parent;
              d.parent_stamp = stamp;
            }
          }
          auto deps = entity.fields.find(std::string(kFieldDependsOn));
          if (deps != entity.fields.end()) {
            if (const auto* ids =
                    std::get_if<std::vector<std::string>>(&deps->second)) {
              if (!d.deps_stamp || d.deps_stamp < stamp) {
                d.node.depends_on = *ids;
                d.deps_stamp = stamp;
              }
            }
          }
          const std::string* tool = field_string(entity.fields, kFieldToolId);
          const std::string* name = field_string(entity.fields, kFieldName);
          if (tool || name) {
            if (!d.label_stamp || d.label_stamp < stamp) {
              d.node.label = tool ? *tool : *name;
              d.label_stamp = stamp;
            }
          }
          if (const auto* wf = field_string(entity.fields, kFieldWorkflowId))
            d.node.workflow = *wf;

          switch (event.type) {
            case LifecycleEventType::Start:
              if (!d.node.start_ns || event.time_ns < *d.node.start_ns)
                d.node.start_ns = event.time_ns;
              break;
            case LifecycleEventType::End:
              if (!d.node.end_ns || event.time_ns > *d.node.end_ns)
                d.node.end_ns = event.time_ns;
              break;
            default:
              break;
          }
          if (!d.status_stamp || d.status_stamp < stamp) {
            switch (event.type) {
              case LifecycleEventType::End: d.node.status = TaskStatus::Completed; break;
              case LifecycleEventType::Failure: d.node.status = TaskStatus::Failed; break;
              case LifecycleEventType::Abortion: d.node.status = TaskStatus::Aborted; break;
              case LifecycleEventType::Suspension: d.node.status = TaskStatus::Suspended; break;
              default: d.node.status = TaskStatus::Incomplete; break;
            }
            d.status_stamp = stamp;
          }
        }
      }
      // Anchor issues: explicit entity_id wins, else the first task entity
      // in the event.
      for (const auto& issue : event.issues) {
        std::string anchor;
        if (issue.entity_id) {
          anchor = *issue.entity_id;
        } else {
          for (const auto& entity : event.entities)
            if (entity.kind == EntityKind::Task) {
              anchor = entity.id;
              break;
            }
        }
        if (!anchor.empty()) draft(anchor).node.issues.push_back(issue);
      }
    }
  }

  // Tasks referenced as parents but never created become placeholder roots
  // so failures and children always have an anchor.
  {
    std::vector<std::string> missing_parents;
    for (const auto& [id, d] : drafts)
      if (d.node.parent && !drafts.count(*d.node.parent))
        missing_parents.push_back(*d.node.parent);
    for (const auto& id : missing_parents) {
      if (drafts.count(id)) continue;
      warn(id, "parent task never appears in any event; placeholder added");
      draft(id);
    }
  }

  for (const auto& [id, d] : drafts) {
    for (const auto& dep : d.node.depends_on)
      if (!drafts.count(dep))
        throw MissingDependencyError("task '" + id + "' depends on '" + dep +
                                     "', which never appears in the trace");
  }

  // Parent links must form a forest.
  for (const auto& [id, d] : drafts) {
    std::set<std::string> seen;
    const NodeDraft* cur = &d;
    while (cur->node.parent) {
      if (!seen.insert(cur->node.task_id).second) {
        std::vector<std::string> cycle(seen.begin(), seen.end());
        throw CycleError("cycle in task parent links involving: " +
                             [&] {
                               std::string s;
                               for (const auto& n : cycle) s += n + " ";
                               return s;
                             }(),
                         cycle);
      }
      cur = &drafts.at(*cur->node.parent);
    }
  }

  // Dependency edges are only legal between siblings; report and drop the
  // rest, then check the per-group DAG property.
  for (auto& [id, d] : drafts) {
    std::vector<std::string> kept;
    for (const auto& dep : d.node.depends_on) {
      if (drafts.at(dep).node.parent == d.node.parent) {
        kept.push_back(dep);
      } else {
        warn(id, "dependency on non-sibling task '" + dep + "' dropped");
      }
    }
    d.node.depends_on = std::move(kept);
  }
  {
    // Cycle check over the sibling dependency edges (iterative DFS).
    std::map<std::string, int> state;  // 0 new, 1 active, 2 done
    for (const auto& [start, unused] : drafts) {
      if (state[start]) continue;
      std::vector<std::pair<std::string, std::size_t>> stack{{start, 0}};
      std::vector<std::string> path{start};
      state[start] = 1;
      while (!stack.empty()) {
        auto& [id, next] = stack.back();
        const auto& deps = drafts.at(id).node.depends_on;
        if (next < deps.size()) {
          const std::string dep = deps[next++];
          if (state[dep] == 1) {
            auto at = std::find(path.begin(), path.end(), dep);
            std::vector<std::string> cycle(at, path.end());
            std::string names;
            for (const auto& n : cycle) names += names.empty() ? n : " -> " + n;
            throw CycleError("dependency cycle detected: " + names, cycle);
          }
          if (state[dep] == 0) {
            state[dep] = 1;
            stack.emplace_back(dep, 0);
            path.push_back(dep);
          }
        } else {
          state[id] = 2;
          stack.pop_back();
          path.pop_back();
        }
      }
    }
  }

  // Pass 2: attribute each span's metrics to exactly one task — the one
  // whose creation/start event appears earliest in that span (falling back
  // to any task sighting), ties by task id.
  for (const SpanRecord* span : ordered) {
    std::optional<std::pair<Stamp, std::string>> best;
    std::optional<std::pair<Stamp, std::string>> fallback;
    std::size_t idx = 0;
    for (const auto& event : span->events) {
      idx++;
      const Stamp stamp{event.time_ns, idx};
      for (const auto& entity : event.entities) {
        if (entity.kind != EntityKind::Task) continue;
        auto candidate = std::make_pair(stamp, entity.id);
        auto earlier = [](const std::pair<Stamp, std::string>& lhs,
                          const std::pair<Stamp, std::string>& rhs) {
          if (lhs.first < rhs.first) return true;
          if (rhs.first < lhs.first) return false;
          return lhs.second < rhs.second;
        };
        if (event.type == LifecycleEventType::Creation ||
            event.type == LifecycleEventType::Start) {
          if (!best || earlier(candidate, *best)) best = candidate;
        }
        if (!fallback || earlier(candidate, *fallback)) fallback = candidate;
      }
    }
    const auto& owner = best ? best : fallback;
    if (!owner) continue;
    MetricBag& bag = drafts.at(owner->second).node.metrics;
    bag.input_tokens += attr_int(span->attributes, kAttrInputTokens);
    bag.output_tokens += attr_int(span->attributes, kAttrOutputTokens);
    bag.cost_usd += attr_double(span->attributes, kAttrCostUsd);
    if (attr_flag(span->attributes, kAttrLlmCall)) bag.llm_calls++;
    if (attr_flag(span->attributes, kAttrToolCall)) bag.tool_calls++;
  }

  TaskFlowGraph flow;
  for (auto& [id, d] : drafts) {
    if (d.node.label.empty()) d.node.label = id;
    if (d.node.start_ns && d.node.end_ns)
      d.node.metrics.duration_ns = *d.node.end_ns - *d.node.start_ns;
    flow.nodes.emplace(id, std::move(d.node));
  }
  for (const auto& [id, node] : flow.nodes)
    if (!node.parent) flow.roots.push_back(id);

  // Roll up usage and cost bottom-up over the parent forest.
  std::map<std::string, std::vector<std::string>> children;
  for (const auto& [id, node] : flow.nodes)
    if (node.parent) children[*node.parent].push_back(id);
  std::function<void(const std::string&)> roll = [&](const std::string& id) {
    MetricBag& bag = flow.nodes.at(id).metrics;
    for (const auto& child : children[id]) {
      roll(child);
      const MetricBag& cb = flow.nodes.at(child).metrics;
      bag.input_tokens += cb.input_tokens;
      bag.output_tokens += cb.output_tokens;
      bag.llm_calls += cb.llm_calls;
      bag.tool_calls += cb.tool_calls;
      bag.cost_usd += cb.cost_usd;
    }
  };
  for (const auto& root : flow.roots) roll(root);

  return flow;
}

std::string flow_to_dot(const TaskFlowGraph& flow) {
  std::ostringstream out;
  out << "digraph taskflow {\n";
  out << "  rankdir=TB;\n";
  for (const auto& [id, node] : flow.nodes) {
    out << "  \"" << dot_escape(id) << "\" [label=\"" << dot_escape(node.label)
        << "\\n" << to_string(node.status) << "\"];\n";
  }
  for (const auto& [id, node] : flow.nodes) {
    if (node.parent)
      out << "  \"" << dot_escape(*node.parent) << "\" -> \"" << dot_escape(id)
          << "\";\n";
  }
  for (const auto& [id, node] : flow.nodes) {
    std::vector<std::string> deps = node.depends_on;
    std::sort(deps.begin(), deps.end());
    for (const auto& dep : deps)
      out << "  \"" << dot_escape(dep) << "\" -> \"" << dot_escape(id)
          << "\" [style=dashed];\n";
  }
  out << "}\n";
  return out.str();
}

namespace {

json metrics_to_json(const MetricBag& bag) {
  json j;
  j["input_tokens"] = bag.input_tokens;
  j["output_tokens"] = bag.output_tokens;
  j["llm_calls"] = bag.llm_calls;
  j["tool_calls"] = bag.tool_calls;
  j["cost_usd"] = bag.cost_usd;
  j["duration_ns"] = bag.duration_ns;
  return j;
}

MetricBag metrics_from_json(const json& j) {
  MetricBag bag;
  bag.input_tokens = j.value("input_tokens", std::int64_t{0});
  bag.output_tokens = j.value("output_tokens", std::int64_t{0});
  bag.llm_calls = j.value("llm_calls", std::int64_t{0});
  bag.tool_calls = j.value("tool_calls", std::int64_t{0});
  bag.cost_usd = j.value("cost_usd", 0.0);
  bag.duration_ns = j.value("duration_ns", std::int64_t{0});
  return bag;
}

}  // namespace

std::string write_flow_file(const TaskFlowGraph& flow) {
  json doc;
  doc["nodes"] = json::array();
  for (const auto& [id, node] : flow.nodes) {
    json n;
    n["task_id"] = id;
    n["label"] = node.label;
    n["status"] = std::string(to_string(node.status));
    if (node.parent) n["parent"] = *node.parent;
    n["depends_on"] = node.depends_on;
    n["metrics"] = metrics_to_json(node.metrics);
    if (node.start_ns) n["start_ns"] = *node.start_ns;
    if (node.end_ns) n["end_ns"] = *node.end_ns;
    doc["nodes"].push_back(n);
  }
  return doc.dump(2) + "\n";
}

TaskFlowGraph parse_flow_file(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FlowFileError("malformed flow file: " + std::string(e.what()));
  }
  TaskFlowGraph flow;
  try {
    if (!doc.is_object() || !doc.contains("nodes") || !doc["nodes"].is_array())
      throw FlowFileError("flow file must be an object with a nodes array");
    for (const auto& n : doc["nodes"]) {
      TaskNode node;
      node.task_id = n.at("task_id").get<std::string>();
      if (node.task_id.empty()) throw FlowFileError("empty task_id");
      node.label = n.at("label").get<std::string>();
      node.status = parse_task_status(n.at("status").get<std::string>());
      if (n.contains("parent")) node.parent = n.at("parent").get<std::string>();
      if (n.contains("depends_on"))
        node.depends_on = n.at("depends_on").get<std::vector<std::string>>();
      if (n.contains("metrics")) node.metrics = metrics_from_json(n.at("metrics"));
      if (n.contains("start_ns")) node.start_ns = n.at("start_ns").get<std::int64_t>();
      if (n.contains("end_ns")) node.end_ns = n.at("end_ns").get<std::int64_t>();
      if (!flow.nodes.emplace(node.task_id, node).second)
        throw FlowFileError("duplicate node '" + node.task_id + "'");
    }
  } catch (const json::exception& e) {
    throw FlowFileError("malformed flow file: " + std::string(e.what()));
  }
  for (const auto& [id, node] : flow.nodes) {
    if (node.parent && !flow.nodes.count(*node.parent))
      throw FlowFileError("node '" + id + "' references absent parent '" +
                          *node.parent + "'");
    for (const auto& dep : node.depends_on)
      if (!flow.nodes.count(dep))
        throw FlowFileError("node '" + id + "' depends on absent node '" +
                            dep + "'");
    if (!node.parent) flow.roots.push_back(id);
  }
  return flow;
}

bool flow_structurally_equal(const TaskFlowGraph& a, const TaskFlowGraph& b) {
  if (a.nodes.size() != b.nodes.size()) return false;
  for (const auto& [id, na] : a.nodes) {
    auto it = b.nodes.find(id);
    if (it == b.nodes.end()) return false;
    const TaskNode& nb = it->second;
    auto sorted = [](std::vector<std::string> v) {
      std::sort(v.begin(), v.end());
      return v;
    };
    if (na.label != nb.label || na.status != nb.status ||
        na.parent != nb.parent || sorted(na.depends_on) != sorted(nb.depends_on) ||
        !(na.metrics == nb.metrics) || na.start_ns != nb.start_ns ||
        na.end_ns != nb.end_ns)
      return false;
  }
  return true;
}

}  // namespace ata

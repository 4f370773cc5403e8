#include "ata/analytics.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ata/csv.hpp"

namespace ata {

using nlohmann::json;

std::string_view to_string(RecommendationKind kind) {
  switch (kind) {
    case RecommendationKind::ParallelExecution: return "parallel_execution";
    case RecommendationKind::Decomposition: return "decomposition";
    case RecommendationKind::Merging: return "merging";
  }
  return "?";
}

void tally_failures(SummaryRow& row, const std::vector<FailureRecord>& failures) {
  row.failures_total = static_cast<std::int64_t>(failures.size());
  row.failures_by_category.clear();
  row.failures_by_severity.clear();
  for (FailureCategory c :
       {FailureCategory::InstructionViolation, FailureCategory::IncorrectInput,
        FailureCategory::Validation, FailureCategory::Validator})
    row.failures_by_category[c] = 0;
  row.failures_by_severity[Severity::CriticalError] = 0;
  row.failures_by_severity[Severity::Warning] = 0;
  for (const auto& f : failures) {
    row.failures_by_category[f.category]++;
    row.failures_by_severity[f.severity]++;
  }
  row.happy_path = row.failures_total == 0;
}

std::vector<FailureRecord> extract_failures(const Trace& trace) {
  struct Keyed {
    std::int64_t time_ns;
    std::string span_id;
    std::size_t event_idx;
    std::size_t issue_idx;
    FailureRecord record;
  };
  std::vector<Keyed> keyed;
  for (const auto& span : trace.spans) {
    std::size_t event_idx = 0;
    for (const auto& event : span.events) {
      event_idx++;
      std::size_t issue_idx = 0;
      for (const auto& issue : event.issues) {
        issue_idx++;
        if (issue.severity < Severity::Warning) continue;
        FailureRecord record;
        record.severity = issue.severity;
        if (issue.category) {
          record.category = *issue.category;
          record.message = issue.message;
        } else {
          record.category = FailureCategory::Validation;
          record.message = issue.message + " [uncategorized issue]";
        }
        if (issue.entity_id) {
          record.task_id = issue.entity_id;
        } else {
          for (const auto& entity : event.entities)
            if (entity.kind == EntityKind::Task) {
              record.task_id = entity.id;
              break;
            }
        }
        keyed.push_back({event.time_ns, span.span_id, event_idx, issue_idx,
                         std::move(record)});
      }
    }
  }
  std::sort(keyed.begin(), keyed.end(), [](const Keyed& a, const Keyed& b) {
    return std::tie(a.time_ns, a.span_id, a.event_idx, a.issue_idx) <
           std::tie(b.time_ns, b.span_id, b.event_idx, b.issue_idx);
  });
  std::vector<FailureRecord> out;
  out.reserve(keyed.size());
  for (auto& k : keyed) out.push_back(std::move(k.record));
  return out;
}

SummaryRow compute_summary(const Trace& trace, const TaskFlowGraph& flow) {
  SummaryRow row;
  row.case_id = trace.trace_id;
  if (!trace.spans.empty()) {
    std::int64_t min_start = trace.spans.front().start_ns;
    std::int64_t max_end = trace.spans.front().end_ns;
    for (const auto& span : trace.spans) {
      min_start = std::min(min_start, span.start_ns);
      max_end = std::max(max_end, span.end_ns);
    }
    row.execution_time_ns = max_end - min_start;
  }
  for (const auto& root : flow.roots) {
    const MetricBag& bag = flow.nodes.at(root).metrics;
    row.input_tokens += bag.input_tokens;
    row.output_tokens += bag.output_tokens;
    row.llm_calls += bag.llm_calls;
    row.tool_calls += bag.tool_calls;
    row.cost_usd += bag.cost_usd;
  }
  tally_failures(row, extract_failures(trace));
  return row;
}

namespace {

// Maximal cliques (Bron-Kerbosch, deterministic order) over the pairwise
// compatibility relation.
void bron_kerbosch(const std::vector<std::vector<bool>>& adj,
                   std::vector<int>& r, std::vector<int> p, std::vector<int> x,
                   std::vector<std::vector<int>>& out) {
  if (p.empty() && x.empty()) {
    if (r.size() >= 2) out.push_back(r);
    return;
  }
  std::vector<int> p_copy = p;
  for (int v : p_copy) {
    r.push_back(v);
    std::vector<int> p2, x2;
    for (int u : p)
      if (adj[v][u]) p2.push_back(u);
    for (int u : x)
      if (adj[v][u]) x2.push_back(u);
    bron_kerbosch(adj, r, p2, x2, out);
    r.pop_back();
    p.erase(std::find(p.begin(), p.end(), v));
    x.push_back(v);
  }
}

std::int64_t node_failure_count(const TaskNode& node) {
  std::int64_t n = 0;
  for (const auto& issue : node.issues)
    if (issue.severity >= Severity::Warning) n++;
  return n;
}

}  // namespace

std::vector<Recommendation> recommend(const TaskFlowGraph& flow,
                                      const RecommendConfig& config) {
  std::vector<Recommendation> recs;

  // Group siblings (same parent; roots form their own group).
  std::map<std::string, std::vector<std::string>> groups;
  for (const auto& [id, node] : flow.nodes)
    groups[node.parent.value_or("")].push_back(id);

  for (auto& [parent, members] : groups) {
    std::sort(members.begin(), members.end());
    const int n = static_cast<int>(members.size());

    // Transitive reachability over the group's dependency edges.
    std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
    std::map<std::string, int> index;
    for (int i = 0; i < n; i++) index[members[i]] = i;
    for (int i = 0; i < n; i++) {
      const TaskNode& node = flow.nodes.at(members[i]);
      for (const auto& dep : node.depends_on) {
        auto it = index.find(dep);
        if (it != index.end()) reach[it->second][i] = true;  // dep -> member
      }
    }
    for (int k = 0; k < n; k++)
      for (int i = 0; i < n; i++)
        if (reach[i][k])
          for (int j = 0; j < n; j++)
            if (reach[k][j]) reach[i][j] = true;

    // Parallel execution: compatibility = no dependency path either way and
    // strictly disjoint observed intervals. Only timed nodes participate.
    std::vector<int> timed;
    for (int i = 0; i < n; i++) {
      const TaskNode& node = flow.nodes.at(members[i]);
      if (node.start_ns && node.end_ns) timed.push_back(i);
    }
    const int m = static_cast<int>(timed.size());
    if (m >= 2) {
      std::vector<std::vector<bool>> compat(m, std::vector<bool>(m, false));
      for (int a = 0; a < m; a++) {
        for (int b = a + 1; b < m; b++) {
          const int i = timed[a], j = timed[b];
          if (reach[i][j] || reach[j][i]) continue;
          const TaskNode& u = flow.nodes.at(members[i]);
          const TaskNode& v = flow.nodes.at(members[j]);
          const bool overlap = *u.start_ns < *v.end_ns && *v.start_ns < *u.end_ns;
          if (overlap) continue;
          compat[a][b] = compat[b][a] = true;
        }
      }
      std::vector<int> all(m);
      for (int i = 0; i < m; i++) all[i] = i;
      std::vector<int> r;
      std::vector<std::vector<int>> cliques;
      bron_kerbosch(compat, r, all, {}, cliques);
      for (const auto& clique : cliques) {
        Recommendation rec;
        rec.kind = RecommendationKind::ParallelExecution;
        std::int64_t total = 0, longest = 0;
        for (int a : clique) {
          const TaskNode& node = flow.nodes.at(members[timed[a]]);
          rec.target_tasks.push_back(node.task_id);
          const std::int64_t d = *node.end_ns - *node.start_ns;
          total += d;
          longest = std::max(longest, d);
        }
        std::sort(rec.target_tasks.begin(), rec.target_tasks.end());
        rec.estimated_latency_gain_ns = total - longest;
        rec.rationale = "independent sibling tasks ran sequentially; running "
                        "them concurrently shortens the critical path";
        recs.push_back(std::move(rec));
      }
    }

    // Merging: same-label sibling pairs whose combined duration stays under
    // the ceiling.
    for (int i = 0; i < n; i++) {
      for (int j = i + 1; j < n; j++) {
        const TaskNode& u = flow.nodes.at(members[i]);
        const TaskNode& v = flow.nodes.at(members[j]);
        if (u.label != v.label) continue;
        if (!u.start_ns || !u.end_ns || !v.start_ns || !v.end_ns) continue;
        const std::int64_t combined =
            (*u.end_ns - *u.start_ns) + (*v.end_ns - *v.start_ns);
        if (combined >= config.merge_duration_ceiling_ns) continue;
        Recommendation rec;
        rec.kind = RecommendationKind::Merging;
        rec.target_tasks = {u.task_id, v.task_id};
        rec.rationale = "sibling tasks share the label '" + u.label +
                        "' and are short; consolidating them cuts overhead";
        recs.push_back(std::move(rec));
      }
    }
  }

  // Decomposition: tasks accumulating failures past the threshold.
  for (const auto& [id, node] : flow.nodes) {
    const std::int64_t failures = node_failure_count(node);
    if (failures >= config.decompose_failure_threshold) {
      Recommendation rec;
      rec.kind = RecommendationKind::Decomposition;
      rec.target_tasks = {id};
      rec.rationale = "task accumulated " + std::to_string(failures) +
                      " failures; splitting it into finer subtasks can "
                      "isolate the faulty step";
      recs.push_back(std::move(rec));
    }
  }

  std::sort(recs.begin(), recs.end(),
            [](const Recommendation& a, const Recommendation& b) {
              return std::tie(a.kind, a.target_tasks) <
                     std::tie(b.kind, b.target_tasks);
            });
  return recs;
}

std::string summary_csv_header() {
  return "case_id,execution_time_ns,input_tokens,output_tokens,llm_calls,"
         "tool_calls,cost_usd,failures_total,failures_instruction_violation,"
         "failures_incorrect_input,failures_validation,failures_validator,"
         "failures_critical_error,failures_warning,happy_path";
}

std::string summary_to_csv_row(const SummaryRow& row) {
  auto cat = [&](FailureCategory c) {
    auto it = row.failures_by_category.find(c);
    return it == row.failures_by_category.end() ? std::int64_t{0} : it->second;
  };
  auto sev = [&](Severity s) {
    auto it = row.failures_by_severity.find(s);
    return it == row.failures_by_severity.end() ? std::int64_t{0} : it->second;
  };
  std::vector<std::string> fields = {
      row.case_id,
      std::to_string(row.execution_time_ns),
      std::to_string(row.input_tokens),
      std::to_string(row.output_tokens),
      std::to_string(row.llm_calls),
      std::to_string(row.tool_calls),
      fmt_fixed(row.cost_usd, 6),
      std::to_string(row.failures_total),
      std::to_string(cat(FailureCategory::InstructionViolation)),
      std::to_string(cat(FailureCategory::IncorrectInput)),
      std::to_string(cat(FailureCategory::Validation)),
      std::to_string(cat(FailureCategory::Validator)),
      std::to_string(sev(Severity::CriticalError)),
      std::to_string(sev(Severity::Warning)),
      row.happy_path ? "true" : "false",
  };
  return csv_join(fields);
}

SummaryRow summary_from_csv_row(const std::vector<std::string>& fields) {
  if (fields.size() != 15)
    throw ParseError("summary row must have 15 fields, got " +
                     std::to_string(fields.size()));
  SummaryRow row;
  std::size_t i = 0;
  auto next_int = [&]() { return std::stoll(fields.at(i++)); };
  row.case_id = fields.at(i++);
  row.execution_time_ns = next_int();
  row.input_tokens = next_int();
  row.output_tokens = next_int();
  row.llm_calls = next_int();
  row.tool_calls = next_int();
  row.cost_usd = std::stod(fields.at(i++));
  row.failures_total = next_int();
  row.failures_by_category[FailureCategory::InstructionViolation] = next_int();
  row.failures_by_category[FailureCategory::IncorrectInput] = next_int();
  row.failures_by_category[FailureCategory::Validation] = next_int();
  row.failures_by_category[FailureCategory::Validator] = next_int();
  row.failures_by_severity[Severity::CriticalError] = next_int();
  row.failures_by_severity[Severity::Warning] = next_int();
  row.happy_path = fields.at(i) == "true";
  return row;
}

std::string failures_to_jsonl(const std::vector<FailureRecord>& failures) {
  std::string out;
  for (const auto& f : failures) {
    json j;
    j["category"] = std::string(to_string(f.category));
    j["severity"] = std::string(to_string(f.severity));
    j["message"] = f.message;
    if (f.task_id) j["task_id"] = *f.task_id;
    out += j.dump();
    out += "\n";
  }
  return out;
}

std::vector<FailureRecord> failures_from_jsonl(std::string_view text) {
  std::vector<FailureRecord> out;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    line_no++;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    json j;
    try {
      j = json::parse(line);
      FailureRecord f;
      f.category = parse_failure_category(j.at("category").get<std::string>());
      f.severity = parse_severity(j.at("severity").get<std::string>());
      f.message = j.at("message").get<std::string>();
      if (j.contains("task_id")) f.task_id = j.at("task_id").get<std::string>();
      out.push_back(std::move(f));
    } catch (const json::exception& e) {
      throw ParseError("malformed failure record: " + std::string(e.what()),
                       line_no);
    }
  }
  return out;
}

std::string recommendations_to_text(const std::vector<Recommendation>& recs) {
  std::ostringstream out;
  if (recs.empty()) {
    out << "no recommendations\n";
    return out.str();
  }
  for (const auto& rec : recs) {
    out << to_string(rec.kind) << ":";
    for (const auto& id : rec.target_tasks) out << " " << id;
    if (rec.estimated_latency_gain_ns > 0)
      out << " (estimated latency gain " << rec.estimated_latency_gain_ns
          << " ns)";
    out << "\n  " << rec.rationale << "\n";
  }
  return out.str();
}

}  // namespace ata

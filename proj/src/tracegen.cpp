#include "ata/tracegen.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ata/csv.hpp"
#include "ata/ingest.hpp"
#include "ata/rng.hpp"

namespace ata {

using nlohmann::json;

namespace {

constexpr std::int64_t kUs = 1'000;
constexpr std::int64_t kMs = 1'000'000;
constexpr std::int64_t kEpochBase = 1'700'000'000'000'000'000ll;

const char* const kServices[] = {"calc-core", "calc-worker-1", "calc-worker-2"};

struct GenTask {
  std::string id, span_id;
  std::string tool, name, input_text;
  int parent = -1;
  std::vector<int> children;
  std::vector<int> deps;
  ExprPtr expr;
  bool is_llm = false;
  std::int64_t create_time = 0;  // logical; when the parent announced it
  std::int64_t start = 0, end = 0;  // logical
  int service = 0;
  std::int64_t in_tokens = 0, out_tokens = 0;
  double cost = 0.0;
  // Injected update events carried by this task's span.
  std::vector<GenAIEvent> mid_events;
  // Failure event replacing the end event, when the task dies.
  std::optional<GenAIEvent> terminal_failure;
  double value = 0.0;
  bool fatal = false;
};

struct TreeDraft {
  struct Node {
    ExprPtr expr;
    int parent = -1;
    std::vector<int> children;
    bool dead = false;
    int level = 0;
  };
  std::vector<Node> nodes;

  int add(ExprPtr expr, int parent, int level) {
    nodes.push_back({std::move(expr), parent, {}, false, level});
    const int idx = static_cast<int>(nodes.size()) - 1;
    if (parent >= 0) nodes[parent].children.push_back(idx);
    return idx;
  }

  void kill(int idx) {
    nodes[idx].dead = true;
    for (int c : nodes[idx].children) kill(c);
  }
};

// One task per bracket group and per binary operation down to the
// decomposition depth, then a single leaf task per remaining subtree.
void build_tree(TreeDraft& draft, const ExprPtr& expr, int parent, int level,
                int depth_limit) {
  const bool expandable = expr->kind == ExprKind::BinaryOp ||
                          (expr->kind == ExprKind::Group &&
                           expr->children[0]->kind != ExprKind::NlSnippet);
  if (level > 0 && (level >= depth_limit || !expandable)) {
    draft.add(expr, parent, level);
    return;
  }
  const int idx = draft.add(expr, parent, level);
  if (!expandable) return;
  for (const auto& child : expr->children)
    build_tree(draft, child, idx, level + 1, depth_limit);
}

std::string garble(const std::string& text, Rng& rng) {
  std::string out = text;
  const std::size_t pos = out.empty() ? 0 : rng.next() % (out.size() + 1);
  out.insert(pos, "#?");
  return out;
}

class CaseBuilder {
 public:
  explicit CaseBuilder(const CaseSpec& spec)
      : spec_(spec),
        rng_struct_(Rng::mix(spec.seed, 1)),
        rng_time_(Rng::mix(spec.seed, 2)),
        rng_metrics_(Rng::mix(spec.seed, 3)),
        rng_faults_(Rng::mix(spec.seed, 4)) {}

  GeneratedCase run() {
    GeneratedCase out;
    ExprPtr ast;
    std::string parse_failure;
    try {
      ast = parse_expression(spec_.input);
      out.expected_output = eval_expression_exact(*ast).to_double();
    } catch (const ExprError& e) {
      parse_failure = e.what();
      ast.reset();
      out.expected_output.reset();
    }
    out.syntax_error = !ast;
    if (ast) {
      std::function<bool(const Expr&)> has_nl = [&](const Expr& e) {
        if (e.kind == ExprKind::NlSnippet) return true;
        for (const auto& c : e.children)
          if (has_nl(*c)) return true;
        return false;
      };
      out.has_nl = has_nl(*ast);
      build_tasks(ast);
      apply_instruction_faults();
      finalize_tasks();
      assign_services();
      layout_time();
      draw_metrics();
      resolve_faults(out);
      decide_final(out);
    } else {
      out.has_nl = spec_.input.find('{') != std::string::npos;
      build_syntax_case(parse_failure, out);
    }
    emit(out);
    assemble_gt(out);
    if (out.syntax_error) {
      // The run aborted while logging: the span line is cut short mid-write,
      // so the log itself cannot be parsed. Ground truth still records what
      // actually happened; only robust analyzers get credit here.
      std::string& line = out.log_lines.front();
      line = line.substr(0, std::max<std::size_t>(10, line.size() * 2 / 3));
      out.log_lines.resize(1);
    }
    return out;
  }

 private:
  void build_tasks(const ExprPtr& ast) {
    build_tree(draft_, ast, -1, 0, std::max(1, spec_.decomposition_depth));
  }

  // An instruction violation removes part of a decomposition: the task
  // keeps running and computes the remainder internally, but its children
  // no longer cover the expression.
  void apply_instruction_faults() {
    for (const auto& fault : spec_.faults) {
      if (fault.category != FailureCategory::InstructionViolation) continue;
      std::vector<int> eligible;
      for (std::size_t i = 0; i < draft_.nodes.size(); i++) {
        if (draft_.nodes[i].dead) continue;
        bool live_child = false;
        for (int c : draft_.nodes[i].children)
          if (!draft_.nodes[c].dead) live_child = true;
        if (live_child) eligible.push_back(static_cast<int>(i));
      }
      if (eligible.empty()) {
        pending_instr_.push_back(-1);  // degenerate: flag the root
        continue;
      }
      const int victim = eligible[fault.site % eligible.size()];
      std::vector<int> live;
      for (int c : draft_.nodes[victim].children)
        if (!draft_.nodes[c].dead) live.push_back(c);
      const int dropped = live.back();
      dropped_text_.push_back(expr_to_text(*draft_.nodes[dropped].expr));
      draft_.kill(dropped);
      pending_instr_.push_back(victim);
    }
  }

  // Pre-order walk of the live tree: final ids, labels, and dependency
  // edges between ordered siblings.
  void finalize_tasks() {
    std::function<int(int, int)> emit_task = [&](int draft_idx,
                                                 int parent) -> int {
      const TreeDraft::Node& node = draft_.nodes[draft_idx];
      GenTask task;
      const int index = static_cast<int>(tasks_.size());
      char buf[16];
      std::snprintf(buf, sizeof(buf), "%03d", index + 1);
      task.id = "t" + std::string(buf);
      task.span_id = "s" + std::string(buf);
      task.parent = parent;
      task.expr = node.expr;
      task.input_text = expr_to_text(*node.expr);
      task.value = eval_expression_exact(*node.expr).to_double();

      bool leaf = true;
      for (int c : node.children)
        if (!draft_.nodes[c].dead) leaf = false;
      if (parent < 0) {
        task.tool = "planner";
        task.name = "solve";
        task.is_llm = true;
        task.input_text = spec_.input;
      } else if (!leaf) {
        if (node.expr->kind == ExprKind::BinaryOp) {
          static const char* const names[] = {"op-add", "op-sub", "op-mul",
                                              "op-div"};
          task.tool = names[static_cast<int>(node.expr->op)];
          task.name = "combine operands";
          task.is_llm = true;
        } else {
          task.tool = "subexpr";
          task.name = "extract bracketed sub-expression";
        }
      } else {
        switch (node.expr->kind) {
          case ExprKind::Number:
            task.tool = "const";
            task.name = "constant";
            break;
          case ExprKind::NlSnippet:
            task.tool = "nl-solver";
            task.name = "interpret text";
            task.is_llm = true;
            break;
          default:
            task.tool = "eval";
            task.name = "evaluate sub-expression";
            break;
        }
      }
      tasks_.push_back(std::move(task));
      draft_to_final_[draft_idx] = index;
      for (int c : node.children) {
        if (draft_.nodes[c].dead) continue;
        const int child = emit_task(c, index);
        tasks_[index].children.push_back(child);
      }
      return index;
    };
    emit_task(0, -1);

    // Sequential plans sometimes pin an explicit ordering between sibling
    // operands; parallel plans never do.
    if (!spec_.parallel) {
      for (auto& task : tasks_) {
        if (task.children.size() < 2) continue;
        if (!rng_struct_.coin(0.5)) continue;
        for (std::size_t i = 1; i < task.children.size(); i++)
          tasks_[task.children[i]].deps.push_back(task.children[i - 1]);
      }
    }
  }

  void assign_services() {
    if (!spec_.distributed || tasks_.size() < 2) return;
    std::vector<int> candidates;
    for (std::size_t i = 1; i < tasks_.size(); i++)
      if (!tasks_[i].children.empty()) candidates.push_back(static_cast<int>(i));
    if (candidates.empty())
      for (std::size_t i = 1; i < tasks_.size(); i++)
        candidates.push_back(static_cast<int>(i));
    const int picks = candidates.size() > 1 && rng_struct_.coin(0.5) ? 2 : 1;
    std::set<int> chosen;
    while (static_cast<int>(chosen.size()) < picks)
      chosen.insert(candidates[rng_struct_.next() % candidates.size()]);
    int service = 1;
    for (int root : chosen) {
      std::function<void(int)> paint = [&](int idx) {
        tasks_[idx].service = service;
        for (int c : tasks_[idx].children) paint(c);
      };
      paint(root);
      service = service == 1 ? 2 : 1;
    }
    service_offset_[1] = (rng_time_.coin() ? 1 : -1) * rng_time_.range(50, 400) * kUs;
    service_offset_[2] = (rng_time_.coin() ? 1 : -1) * rng_time_.range(50, 400) * kUs;
  }

  void layout_time() {
    const std::int64_t base =
        kEpochBase + rng_time_.range(0, 3'600) * 1'000'000'000ll;
    std::function<void(int, std::int64_t)> place = [&](int idx, std::int64_t t0) {
      GenTask& task = tasks_[idx];
      task.start = t0;
      if (task.children.empty()) {
        task.end = t0 + rng_time_.range(1, 50) * kMs;
        return;
      }
      std::int64_t cursor = t0 + rng_time_.range(200, 1'000) * kUs;
      const bool overlap = spec_.parallel;
      std::int64_t last_end = cursor;
      std::int64_t stagger = 0;
      for (int c : task.children) {
        GenTask& child = tasks_[c];
        std::int64_t child_start;
        if (overlap) {
          child_start = cursor + stagger;
          stagger += rng_time_.range(50, 200) * kUs;
        } else {
          child_start = last_end + rng_time_.range(100, 500) * kUs;
        }
        child.create_time = child_start - 50 * kUs;
        place(c, child_start);
        last_end = overlap ? std::max(last_end, child.end) : child.end;
      }
      task.end = last_end + rng_time_.range(200, 1'000) * kUs;
    };
    place(0, base);
  }

  void draw_metrics() {
    for (auto& task : tasks_) {
      if (task.is_llm) {
        task.in_tokens = rng_metrics_.range(20, 120);
        task.out_tokens = rng_metrics_.range(5, 60);
        // Whole microdollars so CSV round-trips are exact.
        task.cost =
            static_cast<double>(5 * task.in_tokens + 15 * task.out_tokens) / 1e6;
      }
    }
  }

  std::vector<int> leaf_tasks() const {
    std::vector<int> leaves;
    for (std::size_t i = 0; i < tasks_.size(); i++)
      if (tasks_[i].children.empty()) leaves.push_back(static_cast<int>(i));
    if (leaves.empty()) leaves.push_back(0);
    return leaves;
  }

  void add_update_event(int span_task, std::int64_t time, Issue issue) {
    GenAIEvent event;
    event.type = LifecycleEventType::Update;
    event.time_ns = time;  // logical; shifted by the span's clock at emission
    event.issues.push_back(std::move(issue));
    tasks_[span_task].mid_events.push_back(std::move(event));
  }

  void resolve_faults(GeneratedCase& out) {
    // Instruction violations were applied structurally; now attach their
    // issues to the affected tasks.
    std::size_t instr_idx = 0;
    for (const auto& fault : spec_.faults) {
      if (fault.category != FailureCategory::InstructionViolation) continue;
      int draft_victim = pending_instr_[instr_idx];
      const int victim =
          draft_victim < 0 ? 0 : draft_to_final_.at(draft_victim);
      std::string dropped = instr_idx < dropped_text_.size()
                                ? dropped_text_[instr_idx]
                                : std::string("-");
      instr_idx++;
      Issue issue;
      issue.severity = fault.severity;
      issue.category = FailureCategory::InstructionViolation;
      issue.message = "decomposition of '" + tasks_[victim].input_text +
                      "' omitted sub-expression '" + dropped + "'";
      issue.entity_id = tasks_[victim].id;
      add_update_event(victim, tasks_[victim].end - 200 * kUs, issue);
      out.gt_failures.push_back({FailureCategory::InstructionViolation,
                                 fault.severity, issue.message,
                                 tasks_[victim].id});
    }

    const std::vector<int> leaves = leaf_tasks();
    std::map<int, std::vector<Issue>> fatal_queue;

    int root_event_slot = 1;
    for (const auto& fault : spec_.faults) {
      switch (fault.category) {
        case FailureCategory::InstructionViolation:
          break;  // handled above
        case FailureCategory::IncorrectInput: {
          const int leaf = leaves[fault.site % leaves.size()];
          if (fault.severity >= Severity::CriticalError) {
            GenTask& task = tasks_[leaf];
            if (!task.fatal) {
              task.fatal = true;
              task.input_text = garble(task.input_text, rng_faults_);
            }
            Issue issue;
            issue.severity = fault.severity;
            issue.category = FailureCategory::IncorrectInput;
            issue.message = "unprocessable input: '" + task.input_text + "'";
            issue.entity_id = task.id;
            fatal_queue[leaf].push_back(issue);
            out.gt_failures.push_back({FailureCategory::IncorrectInput,
                                       fault.severity, issue.message, task.id});
          } else {
            GenTask& task = tasks_[leaf];
            Issue issue;
            issue.severity = fault.severity;
            issue.category = FailureCategory::IncorrectInput;
            issue.message =
                "input required re-parsing: '" + task.input_text + "'";
            issue.entity_id = task.id;
            add_update_event(leaf, (task.start + task.end) / 2, issue);
            out.gt_failures.push_back({FailureCategory::IncorrectInput,
                                       fault.severity, issue.message, task.id});
          }
          break;
        }
        case FailureCategory::Validation: {
          const int leaf = leaves[fault.site % leaves.size()];
          const GenTask& task = tasks_[leaf];
          const double wrong =
              task.value + static_cast<double>(rng_faults_.range(1, 3));
          Issue issue;
          issue.severity = fault.severity;
          issue.category = FailureCategory::Validation;
          if (fault.severity >= Severity::CriticalError) {
            issue.message = "result mismatch for '" + task.input_text +
                            "': expected " + fmt_double(task.value) + " got " +
                            fmt_double(wrong);
          } else {
            issue.message = "intermediate result " + fmt_double(wrong) +
                            " failed validation for '" + task.input_text +
                            "'; retry produced " + fmt_double(task.value);
          }
          issue.entity_id = task.id;
          add_update_event(0, tasks_[0].end - (root_event_slot++) * 70 * kUs,
                           issue);
          out.gt_failures.push_back({FailureCategory::Validation,
                                     fault.severity, issue.message, task.id});
          break;
        }
        case FailureCategory::Validator: {
          // The validation stage wrongly rejects a correct value. The log
          // records what the system believed (a validation complaint); the
          // rejected value equals the task's true output, which is the
          // signal an analyzer can use to reclassify it.
          std::vector<int> nl_leaves;
          for (int leaf : leaves)
            if (tasks_[leaf].expr &&
                tasks_[leaf].expr->kind == ExprKind::NlSnippet)
              nl_leaves.push_back(leaf);
          const std::vector<int>& pool = nl_leaves.empty() ? leaves : nl_leaves;
          const int leaf = pool[fault.site % pool.size()];
          const GenTask& task = tasks_[leaf];
          Issue issue;
          issue.severity = fault.severity;
          issue.category = FailureCategory::Validation;
          issue.message = "validation rejected value " + fmt_double(task.value) +
                          " for '" + task.input_text +
                          "': expected a single numeric result";
          issue.entity_id = task.id;
          add_update_event(0, tasks_[0].end - (root_event_slot++) * 70 * kUs,
                           issue);
          out.gt_failures.push_back(
              {FailureCategory::Validator, fault.severity,
               "validator rejected correct value " + fmt_double(task.value) +
                   " for '" + task.input_text + "'",
               task.id});
          break;
        }
      }
    }

    // Fatal leaves: all but the last issue ride update events; the last one
    // rides the terminal failure event.
    for (auto& [leaf, issues] : fatal_queue) {
      GenTask& task = tasks_[leaf];
      for (std::size_t i = 0; i + 1 < issues.size(); i++)
        add_update_event(leaf,
                         task.end - static_cast<std::int64_t>(issues.size() - i) *
                                        50 * kUs,
                         issues[i]);
      GenAIEvent failure;
      failure.type = LifecycleEventType::Failure;
      failure.time_ns = task.end;
      EntityRef ref;
      ref.kind = EntityKind::Task;
      ref.id = task.id;
      failure.entities.push_back(ref);
      failure.issues.push_back(issues.back());
      task.terminal_failure = std::move(failure);
    }
  }

  void decide_final(GeneratedCase& out) {
    GenTask& root = tasks_[0];
    switch (spec_.outcome) {
      case CaseOutcome::Correct:
        out.final_output = out.expected_output;
        break;
      case CaseOutcome::Wrong:
        out.final_output = out.expected_output.value_or(0.0) +
                           static_cast<double>(rng_faults_.range(1, 5));
        break;
      case CaseOutcome::Absent: {
        out.final_output.reset();
        GenAIEvent failure;
        failure.type = LifecycleEventType::Failure;
        failure.time_ns = root.end;
        EntityRef ref;
        ref.kind = EntityKind::Task;
        ref.id = root.id;
        failure.entities.push_back(ref);
        root.terminal_failure = std::move(failure);
        root.fatal = true;
        break;
      }
    }
  }

  void build_syntax_case(const std::string& reason, GeneratedCase& out) {
    GenTask task;
    task.id = "t001";
    task.span_id = "s001";
    task.tool = "planner";
    task.name = "solve";
    task.input_text = spec_.input;
    task.is_llm = true;
    task.fatal = true;
    const std::int64_t base =
        kEpochBase + rng_time_.range(0, 3'600) * 1'000'000'000ll;
    task.start = base;
    task.end = base + rng_time_.range(2, 20) * kMs;
    task.in_tokens = rng_metrics_.range(20, 120);
    task.out_tokens = rng_metrics_.range(5, 60);
    task.cost = static_cast<double>(5 * task.in_tokens + 15 * task.out_tokens) / 1e6;

    Issue issue;
    issue.severity = Severity::CriticalError;
    issue.category = FailureCategory::IncorrectInput;
    issue.message = "cannot parse input: " + reason;
    issue.entity_id = task.id;
    GenAIEvent failure;
    failure.type = LifecycleEventType::Failure;
    failure.time_ns = task.end;
    EntityRef ref;
    ref.kind = EntityKind::Task;
    ref.id = task.id;
    failure.entities.push_back(ref);
    failure.issues.push_back(issue);
    task.terminal_failure = std::move(failure);

    out.gt_failures.push_back({FailureCategory::IncorrectInput,
                               Severity::CriticalError, issue.message,
                               task.id});
    out.final_output.reset();
    tasks_.push_back(std::move(task));
  }

  std::int64_t recorded(std::int64_t logical, int service) const {
    return logical + service_offset_[service];
  }

  void emit(GeneratedCase& out) {
    for (std::size_t i = 0; i < tasks_.size(); i++) {
      const GenTask& task = tasks_[i];
      SpanRecord span;
      span.trace_id = spec_.case_id;
      span.span_id = task.span_id;
      if (task.parent >= 0) span.parent_span_id = tasks_[task.parent].span_id;
      span.name = task.tool;
      span.service = kServices[task.service];
      span.start_ns = recorded(task.start, task.service);
      span.end_ns = recorded(std::max(task.end, task.start), task.service);
      if (task.is_llm) {
        span.attributes[std::string(kAttrLlmCall)] = true;
        span.attributes[std::string(kAttrLlmModel)] = std::string("scripted-lm-7");
        span.attributes[std::string(kAttrInputTokens)] = task.in_tokens;
        span.attributes[std::string(kAttrOutputTokens)] = task.out_tokens;
        span.attributes[std::string(kAttrCostUsd)] = task.cost;
      } else {
        span.attributes[std::string(kAttrToolCall)] = true;
      }

      std::vector<GenAIEvent> events;
      if (task.parent < 0) {
        GenAIEvent creation;
        creation.type = LifecycleEventType::Creation;
        creation.time_ns = span.start_ns;
        creation.entities.push_back(entity_for(i, /*with_fields=*/true));
        events.push_back(std::move(creation));
      }
      GenAIEvent start;
      start.type = LifecycleEventType::Start;
      start.time_ns = span.start_ns;
      EntityRef self;
      self.kind = EntityKind::Task;
      self.id = task.id;
      start.entities.push_back(self);
      events.push_back(std::move(start));

      for (int c : task.children) {
        GenAIEvent creation;
        creation.type = LifecycleEventType::Creation;
        creation.time_ns = recorded(tasks_[c].create_time, task.service);
        creation.entities.push_back(entity_for(c, /*with_fields=*/true));
        events.push_back(std::move(creation));
      }
      for (const GenAIEvent& mid : task.mid_events) {
        GenAIEvent event = mid;
        event.time_ns = recorded(event.time_ns, task.service);
        events.push_back(std::move(event));
      }
      if (task.terminal_failure) {
        GenAIEvent failure = *task.terminal_failure;
        failure.time_ns = recorded(failure.time_ns, task.service);
        events.push_back(std::move(failure));
      } else {
        GenAIEvent end;
        end.type = LifecycleEventType::End;
        end.time_ns = span.end_ns;
        EntityRef ref;
        ref.kind = EntityKind::Task;
        ref.id = task.id;
        const double reported =
            task.parent < 0 && out.final_output ? *out.final_output : task.value;
        ref.fields[std::string(kFieldOutput)] = reported;
        end.entities.push_back(ref);
        events.push_back(std::move(end));
      }
      std::stable_sort(events.begin(), events.end(),
                       [](const GenAIEvent& a, const GenAIEvent& b) {
                         return a.time_ns < b.time_ns;
                       });
      span.events = std::move(events);
      spans_.push_back(std::move(span));
    }
    for (const auto& span : spans_) out.log_lines.push_back(serialize_span(span));
  }

  EntityRef entity_for(std::size_t index, bool with_fields) const {
    const GenTask& task = tasks_[index];
    EntityRef ref;
    ref.kind = EntityKind::Task;
    ref.id = task.id;
    if (with_fields) {
      if (task.parent >= 0)
        ref.fields[std::string(kFieldParentTaskId)] = tasks_[task.parent].id;
      ref.fields[std::string(kFieldToolId)] = task.tool;
      ref.fields[std::string(kFieldName)] = task.name;
      ref.fields[std::string(kFieldInput)] = task.input_text;
      if (!task.deps.empty()) {
        std::vector<std::string> deps;
        for (int d : task.deps) deps.push_back(tasks_[d].id);
        ref.fields[std::string(kFieldDependsOn)] = deps;
      }
    }
    return ref;
  }

  void assemble_gt(GeneratedCase& out) {
    TaskFlowGraph flow;
    for (const auto& task : tasks_) {
      TaskNode node;
      node.task_id = task.id;
      node.label = task.tool;
      node.status = task.fatal ? TaskStatus::Failed : TaskStatus::Completed;
      if (task.parent >= 0) node.parent = tasks_[task.parent].id;
      for (int d : task.deps) node.depends_on.push_back(tasks_[d].id);
      node.start_ns = recorded(task.start, task.service);
      if (!task.fatal)
        node.end_ns = recorded(std::max(task.end, task.start), task.service);
      node.metrics.input_tokens = task.in_tokens;
      node.metrics.output_tokens = task.out_tokens;
      node.metrics.llm_calls = task.is_llm ? 1 : 0;
      node.metrics.tool_calls = task.is_llm ? 0 : 1;
      node.metrics.cost_usd = task.cost;
      if (node.start_ns && node.end_ns)
        node.metrics.duration_ns = *node.end_ns - *node.start_ns;
      flow.nodes.emplace(node.task_id, std::move(node));
    }
    // In-log issues land on the nodes their entity_id anchors them to.
    for (const auto& task : tasks_) {
      for (const auto& event : task.mid_events)
        for (const auto& issue : event.issues)
          if (issue.entity_id) flow.nodes.at(*issue.entity_id).issues.push_back(issue);
      if (task.terminal_failure)
        for (const auto& issue : task.terminal_failure->issues)
          if (issue.entity_id) flow.nodes.at(*issue.entity_id).issues.push_back(issue);
    }
    // Roll up usage bottom-up, children in id order (matches discovery).
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
    for (const auto& [id, node] : flow.nodes)
      if (!node.parent) flow.roots.push_back(id);
    for (const auto& root : flow.roots) roll(root);
    out.gt_flow = std::move(flow);

    SummaryRow row;
    row.case_id = spec_.case_id;
    std::int64_t min_start = spans_.front().start_ns;
    std::int64_t max_end = spans_.front().end_ns;
    for (const auto& span : spans_) {
      min_start = std::min(min_start, span.start_ns);
      max_end = std::max(max_end, span.end_ns);
    }
    row.execution_time_ns = max_end - min_start;
    for (const auto& root : out.gt_flow.roots) {
      const MetricBag& bag = out.gt_flow.nodes.at(root).metrics;
      row.input_tokens += bag.input_tokens;
      row.output_tokens += bag.output_tokens;
      row.llm_calls += bag.llm_calls;
      row.tool_calls += bag.tool_calls;
      row.cost_usd += bag.cost_usd;
    }
    tally_failures(row, out.gt_failures);
    out.gt_summary = std::move(row);
  }

  const CaseSpec& spec_;
  Rng rng_struct_, rng_time_, rng_metrics_, rng_faults_;
  TreeDraft draft_;
  std::map<int, int> draft_to_final_;
  std::vector<int> pending_instr_;
  std::vector<std::string> dropped_text_;
  std::vector<GenTask> tasks_;
  std::vector<SpanRecord> spans_;
  std::int64_t service_offset_[3] = {0, 0, 0};
};

}  // namespace

GeneratedCase generate_case(const CaseSpec& spec) {
  return CaseBuilder(spec).run();
}

namespace {

// Expression pools for suite construction. Numerical entries are pure
// math; NL entries wrap scripted snippets in math context.
const std::vector<std::string>& numerical_pool() {
  static const std::vector<std::string> pool = {
      "(8-2)*3-(5+(11/2))/5",
      "10/([9*(6-5)]+8)-(3+7)",
      "((4+6)*[3-1])/{5-3}",
      "(12/4)+[7*(2+1)]-9",
      "{[2+3]*(14-6)}/4",
      "1+1",
      "(100-[25*2])/(5*{2+3})",
      "[4+8*(5-3)/2]-15+(7-(9/3))",
      "6*[(8+4)/3]-(2*5)",
      "((15-3)/[2+2])*7",
      "9+[8*(6-4)]-{12/6}",
      "(5*5)-[18/(4-1)]+2",
      "[(9+1)*2]/(4-2)-3",
      "3*(7+[12/4])-20",
  };
  return pool;
}

const std::vector<std::string>& nl_pool() {
  static const std::vector<std::string> pool = {
      "((6+2)*[8-3*2])+{Average of 3, 7, and five?}",
      "2+{6*[12-({Multiply the sum of three, seven, and five by two. Then, "
      "subtract fifteen.}+3)]}/3+4*(7-5)-2/1",
      "{Sum of ten, twenty, and thirty?}/3-[5+(2*4)]",
      "(9*2)-{Half of ninety?}/5",
      "14-{If you subtract 3 from 43 and then divide by 5, what is the "
      "result?}",
      "{What is the product of four and six?}+(3*[10-4])/2",
      "[{Double the sum of eight and five.}-6]/(2+3)",
      "7*{A dozen eggs minus two?}-(15/3)",
      "({Quarter of two hundred?}-[6*4])/2+11",
      "{The smallest two-digit prime?}*(2+[9/3])-54",
      "{Thomas withdraws $10000 in 20 dollar bills from the bank account. He "
      "loses 100 bills while getting home. After that, he uses half of the "
      "remaining bills to pay for a bill. Thomas then triples his money. He "
      "then converts all his bills to 10 dollar bills. How many 5 dollar "
      "bills does he have?}",
      "{Days in two weeks plus one?}*[2+(6/3)]",
      "100-{Three squared plus one?}*(2+1)",
  };
  return pool;
}

std::string random_math_expr(Rng& rng, int depth = 0) {
  if (depth >= 2 || (depth > 0 && rng.coin(0.4)))
    return std::to_string(rng.range(1, 12));
  static const char* const ops = "+-*/";
  const char op = ops[rng.next() % 4];
  std::string left = random_math_expr(rng, depth + 1);
  std::string right = op == '/' ? std::to_string(rng.range(1, 9))
                                : random_math_expr(rng, depth + 1);
  std::string body = left + std::string(1, op) + right;
  switch (rng.next() % 3) {
    case 0: return "(" + body + ")";
    case 1: return "[" + body + "]";
    default: return body;
  }
}

std::string random_nl_expr(Rng& rng) {
  const auto& snippets = scripted_snippets();
  const auto& [text, value] = snippets[rng.next() % snippets.size()];
  const std::string wrapped = "{" + text + "}";
  switch (rng.next() % 3) {
    case 0:
      return wrapped + "+" + std::to_string(rng.range(1, 20));
    case 1:
      return "(" + std::to_string(rng.range(2, 9)) + "*" +
             std::to_string(rng.range(2, 9)) + ")-" + wrapped;
    default:
      return wrapped + "/" + std::to_string(rng.range(1, 5)) + "+[" +
             std::to_string(rng.range(1, 15)) + "-" +
             std::to_string(rng.range(1, 9)) + "]";
  }
}

// Guaranteed-unparseable inputs: a valid base plus a dangling operator or
// an unbalanced opener.
std::string break_expr(const std::string& base, Rng& rng) {
  static const char* const suffixes[] = {"+*2", "-(4", "+[5"};
  return base + suffixes[rng.next() % 3];
}

enum class Slot { Happy, Minor, ValidationWrong, ValidatorCorrect, ValidatorIncorrect, Syntax };

}  // namespace

std::vector<PlannedCase> plan_suite(const SuiteConfig& config,
                                    std::uint64_t seed) {
  const SuiteConfig& c = config;
  if (c.cases < 1) throw ConfigError("suite needs at least one case");
  auto non_negative = {c.numerical,       c.natural_language, c.distributed,
                       c.syntax_errors,   c.correct_outputs,  c.happy_paths,
                       c.validator_cases, c.validation_wrong_cases};
  for (int v : non_negative)
    if (v < 0) throw ConfigError("suite counts must be non-negative");
  if (c.numerical + c.natural_language != c.cases)
    throw ConfigError("numerical + natural_language must equal cases");
  const int incorrect = c.cases - c.correct_outputs;
  if (incorrect < 0) throw ConfigError("correct_outputs exceeds cases");
  if (c.syntax_errors > incorrect)
    throw ConfigError("syntax error cases cannot produce correct outputs");
  if (c.validation_wrong_cases > incorrect - c.syntax_errors)
    throw ConfigError("validation_wrong_cases exceed the incorrect budget");
  const int vi = incorrect - c.syntax_errors - c.validation_wrong_cases;
  if (vi > c.validator_cases)
    throw ConfigError("incorrect outputs exceed the cases that can fail "
                      "(syntax + validation_wrong + validator)");
  const int vc = c.validator_cases - vi;
  const int minor = c.cases - c.happy_paths - c.validation_wrong_cases -
                    c.validator_cases - c.syntax_errors;
  if (minor < 0)
    throw ConfigError("happy + validation_wrong + validator + syntax exceed cases");
  if (c.happy_paths > c.correct_outputs)
    throw ConfigError("happy paths exceed correct outputs");
  if (c.distributed > c.cases - c.syntax_errors)
    throw ConfigError("distributed cases exceed cases with multi-task flows");

  struct Group {
    Slot slot;
    int size;
  };
  const std::vector<Group> groups = {
      {Slot::Happy, c.happy_paths},
      {Slot::Minor, minor},
      {Slot::ValidationWrong, c.validation_wrong_cases},
      {Slot::ValidatorCorrect, vc},
      {Slot::ValidatorIncorrect, vi},
      {Slot::Syntax, c.syntax_errors},
  };

  // Natural-language quota flows to the groups where NL behavior matters
  // most; inside a group the trailing slots take it.
  std::map<Slot, int> nl_quota;
  {
    int remaining = c.natural_language;
    for (Slot slot : {Slot::ValidatorCorrect, Slot::ValidatorIncorrect,
                      Slot::ValidationWrong, Slot::Syntax, Slot::Minor,
                      Slot::Happy}) {
      int size = 0;
      for (const auto& g : groups)
        if (g.slot == slot) size = g.size;
      const int take = std::min(size, remaining);
      nl_quota[slot] = take;
      remaining -= take;
    }
    if (remaining != 0)
      throw ConfigError("natural_language count cannot be satisfied");
  }

  Rng plan_rng(Rng::mix(seed, 0x9'1a));
  std::size_t num_next = 0, nl_next = 0;
  auto next_numerical = [&]() {
    if (num_next < numerical_pool().size()) return numerical_pool()[num_next++];
    num_next++;
    return random_math_expr(plan_rng);
  };
  auto next_nl = [&]() {
    if (nl_next < nl_pool().size()) return nl_pool()[nl_next++];
    nl_next++;
    return random_nl_expr(plan_rng);
  };

  const int id_width = std::max<int>(2, std::to_string(c.cases).size());
  std::vector<PlannedCase> plan;
  int case_index = 0;
  for (const auto& group : groups) {
    for (int i = 0; i < group.size; i++, case_index++) {
      PlannedCase pc;
      pc.natural_language = i >= group.size - nl_quota[group.slot];
      pc.happy = group.slot == Slot::Happy;
      pc.syntax = group.slot == Slot::Syntax;
      CaseSpec& spec = pc.spec;
      {
        std::ostringstream id;
        id << "case";
        std::string n = std::to_string(case_index + 1);
        while (static_cast<int>(n.size()) < id_width) n = "0" + n;
        id << n;
        spec.case_id = id.str();
      }
      spec.seed = Rng::mix(seed, static_cast<std::uint64_t>(case_index) + 101);
      spec.decomposition_depth = static_cast<int>(plan_rng.range(2, 4));
      spec.parallel = plan_rng.coin(0.45);

      if (group.slot == Slot::Syntax) {
        const std::string base =
            pc.natural_language ? next_nl() : next_numerical();
        spec.input = break_expr(base, plan_rng);
        spec.outcome = CaseOutcome::Absent;
      } else {
        spec.input = pc.natural_language ? next_nl() : next_numerical();
      }

      auto fault = [&](FailureCategory cat, Severity sev) {
        FaultSpec f;
        f.category = cat;
        f.severity = sev;
        f.site = static_cast<std::uint32_t>(plan_rng.range(0, 3));
        spec.faults.push_back(f);
      };
      switch (group.slot) {
        case Slot::Happy:
        case Slot::Syntax:
          break;
        case Slot::Minor:
          switch (i % 3) {
            case 0: fault(FailureCategory::InstructionViolation, Severity::Warning); break;
            case 1: fault(FailureCategory::Validation, Severity::Warning); break;
            default: fault(FailureCategory::IncorrectInput, Severity::Warning); break;
          }
          spec.outcome = CaseOutcome::Correct;
          break;
        case Slot::ValidationWrong:
          if (i == 0) {
            fault(FailureCategory::InstructionViolation, Severity::Warning);
            for (int k = 0; k < 3; k++)
              fault(FailureCategory::Validation, Severity::CriticalError);
            spec.outcome = CaseOutcome::Absent;
          } else {
            for (int k = 0; k < 1 + (i % 2); k++)
              fault(FailureCategory::Validation, Severity::CriticalError);
            spec.outcome = CaseOutcome::Wrong;
          }
          break;
        case Slot::ValidatorCorrect:
          if (i == 0) {
            fault(FailureCategory::Validation, Severity::Warning);
            fault(FailureCategory::Validator, Severity::Warning);
          } else {
            fault(FailureCategory::Validator, Severity::Warning);
            if (i % 2 == 0) fault(FailureCategory::Validation, Severity::Warning);
          }
          spec.outcome = CaseOutcome::Correct;
          break;
        case Slot::ValidatorIncorrect:
          if (i == 0) {
            for (int k = 0; k < 6; k++)
              fault(FailureCategory::IncorrectInput, Severity::CriticalError);
            for (int k = 0; k < 3; k++)
              fault(FailureCategory::Validator, Severity::Warning);
          } else {
            for (int k = 0; k < 2; k++)
              fault(FailureCategory::Validator, Severity::Warning);
            fault(FailureCategory::Validation, Severity::CriticalError);
          }
          spec.outcome = CaseOutcome::Absent;
          break;
      }
      plan.push_back(std::move(pc));
    }
  }

  // Spread the distributed flag evenly across the non-syntax cases.
  {
    std::vector<std::size_t> eligible;
    for (std::size_t i = 0; i < plan.size(); i++)
      if (!plan[i].syntax) eligible.push_back(i);
    const int want = c.distributed;
    const int n = static_cast<int>(eligible.size());
    for (int i = 0; i < n; i++) {
      const bool mark = (i + 1) * want / n > i * want / n;
      plan[eligible[i]].spec.distributed = mark;
    }
  }
  return plan;
}

SuiteCensus census_of_plan(const std::vector<PlannedCase>& plan) {
  SuiteCensus census;
  census.cases = static_cast<int>(plan.size());
  for (const auto& pc : plan) {
    if (pc.natural_language)
      census.natural_language++;
    else
      census.numerical++;
    if (pc.spec.distributed) census.distributed++;
    if (pc.syntax) census.syntax_errors++;
    if (pc.spec.outcome == CaseOutcome::Correct)
      census.correct++;
    else
      census.incorrect++;
    if (pc.happy) census.happy_paths++;
  }
  return census;
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write file: " + path.string());
  out << content;
}

std::string tags_string(const PlannedCase& pc) {
  std::vector<std::string> tags;
  tags.push_back(pc.natural_language ? "natural_language" : "numerical");
  if (pc.spec.distributed) tags.push_back("distributed");
  if (pc.syntax) tags.push_back("syntax_error");
  std::string out;
  for (const auto& t : tags) out += out.empty() ? t : ";" + t;
  return out;
}

}  // namespace

SuiteCensus generate_suite(const SuiteConfig& config, std::uint64_t seed,
                           const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  const auto plan = plan_suite(config, seed);

  fs::create_directories(out_dir / "logs");
  fs::create_directories(out_dir / "gt" / "flows");
  fs::create_directories(out_dir / "gt" / "failures");
  const fs::path cand = out_dir / "candidates" / std::string(kTamasLikeCandidate);
  fs::create_directories(cand / "flows");
  fs::create_directories(cand / "failures");

  std::string cases_csv = "case_id,input,tags,expected_output,final_output\n";
  std::string gt_summary = summary_csv_header() + "\n";
  std::string cand_summary = summary_csv_header() + "\n";

  for (const auto& pc : plan) {
    GeneratedCase gen = generate_case(pc.spec);
    if (gen.syntax_error != pc.syntax)
      throw Error("generator bookkeeping mismatch on " + pc.spec.case_id);
    if (pc.happy != gen.gt_summary.happy_path)
      throw Error("happy-path bookkeeping mismatch on " + pc.spec.case_id);

    const std::string& id = pc.spec.case_id;
    std::string log;
    for (const auto& line : gen.log_lines) log += line + "\n";
    write_file(out_dir / "logs" / (id + ".log"), log);
    write_file(out_dir / "gt" / "flows" / (id + ".flow"),
               write_flow_file(gen.gt_flow));
    write_file(out_dir / "gt" / "failures" / (id + ".failures"),
               failures_to_jsonl(gen.gt_failures));
    gt_summary += summary_to_csv_row(gen.gt_summary) + "\n";

    cases_csv += csv_join({id, pc.spec.input, tags_string(pc),
                           gen.expected_output ? fmt_double(*gen.expected_output) : "",
                           gen.final_output ? fmt_double(*gen.final_output) : ""}) +
                 "\n";

    // The bundled naive candidate: cannot see validator failures at all and
    // reports an empty flow with zero metrics whenever the initial input
    // failed to parse.
    if (gen.syntax_error) {
      SummaryRow zero;
      zero.case_id = id;
      tally_failures(zero, {});
      cand_summary += summary_to_csv_row(zero) + "\n";
      write_file(cand / "flows" / (id + ".flow"), write_flow_file(TaskFlowGraph{}));
      write_file(cand / "failures" / (id + ".failures"), "");
    } else {
      std::vector<FailureRecord> kept;
      for (const auto& f : gen.gt_failures)
        if (f.category != FailureCategory::Validator) kept.push_back(f);
      SummaryRow row = gen.gt_summary;
      tally_failures(row, kept);
      cand_summary += summary_to_csv_row(row) + "\n";
      write_file(cand / "flows" / (id + ".flow"), write_flow_file(gen.gt_flow));
      write_file(cand / "failures" / (id + ".failures"), failures_to_jsonl(kept));
    }
  }

  write_file(out_dir / "cases.csv", cases_csv);
  write_file(out_dir / "gt" / "summary.csv", gt_summary);
  write_file(cand / "summary.csv", cand_summary);
  return census_of_plan(plan);
}

std::vector<std::vector<std::string>> generate_runs(const std::string& input,
                                                    int n, std::uint64_t seed) {
  if (n < 1) throw ConfigError("run count must be positive");
  std::vector<std::vector<std::string>> runs;
  for (int i = 0; i < n; i++) {
    Rng rng(Rng::mix(seed, 7'000 + static_cast<std::uint64_t>(i)));
    CaseSpec spec;
    {
      std::ostringstream id;
      id << "run" << (i + 1);
      spec.case_id = id.str();
    }
    spec.input = input;
    spec.seed = rng.next();
    spec.decomposition_depth = static_cast<int>(rng.range(2, 4));
    spec.parallel = rng.coin(0.5);
    spec.distributed = rng.coin(0.3);
    runs.push_back(generate_case(spec).log_lines);
  }
  return runs;
}

SuiteConfig suite_config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("malformed suite config: " + std::string(e.what()));
  }
  if (!j.is_object()) throw ConfigError("suite config must be a JSON object");
  SuiteConfig config;
  for (const auto& [key, value] : j.items()) {
    if (!value.is_number_integer())
      throw ConfigError("suite config field '" + key + "' must be an integer");
    const int v = value.get<int>();
    if (key == "cases") config.cases = v;
    else if (key == "numerical") config.numerical = v;
    else if (key == "natural_language") config.natural_language = v;
    else if (key == "distributed") config.distributed = v;
    else if (key == "syntax_errors") config.syntax_errors = v;
    else if (key == "correct_outputs") config.correct_outputs = v;
    else if (key == "happy_paths") config.happy_paths = v;
    else if (key == "validator_cases") config.validator_cases = v;
    else if (key == "validation_wrong_cases") config.validation_wrong_cases = v;
    else throw ConfigError("unknown suite config field '" + key + "'");
  }
  return config;
}

SuiteConfig suite_config_from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open suite config: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return suite_config_from_json(buf.str());
}

}  // namespace ata

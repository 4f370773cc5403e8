// ata — command-line surface over the trace analytics engine.
//
// Exit codes: 0 success, 2 usage/input error, 3 analysis error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ata/bench.hpp"
#include "ata/csv.hpp"
#include "ata/error.hpp"
#include "ata/flow.hpp"
#include "ata/ingest.hpp"
#include "ata/tracegen.hpp"
#include "ata/variability.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitAnalysis = 3;

int log_level() {
  const char* env = std::getenv("ATA_LOG_LEVEL");
  if (!env) return 1;  // warn
  const std::string v = env;
  if (v == "debug") return 3;
  if (v == "info") return 2;
  if (v == "warn" || v == "warning") return 1;
  return 0;
}

void log_info(const std::string& msg) {
  if (log_level() >= 2) std::cerr << "[info] " << msg << "\n";
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ata::Error("cannot write file: " + path.string());
  out << content;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ata::Error("cannot read file: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string issues_report(const std::vector<ata::ValidationIssue>& issues) {
  std::ostringstream out;
  for (const auto& issue : issues)
    out << to_string(issue.severity) << " [" << issue.location << "] "
        << issue.message << "\n";
  return out.str();
}

struct GlobalOptions {
  std::string out_dir = ".";
  std::string format = "text";  // text|csv|dot (commands pick what applies)
  std::size_t ged_budget = 12;
  std::uint64_t seed = ata::kDefaultSuiteSeed;
  double tolerance = 1e-6;
};

int cmd_ingest(const std::vector<std::string>& paths, const GlobalOptions& opt) {
  bool critical = false;
  std::string report;
  for (const auto& path : paths) {
    ata::TraceSet set = ata::load_trace_file(path);
    report += issues_report(set.parse_warnings);
    for (const auto& [trace_id, trace] : set.traces) {
      const auto issues = ata::validate_trace(trace);
      report += issues_report(issues);
      for (const auto& issue : issues)
        if (issue.severity >= ata::Severity::CriticalError) critical = true;
    }
  }
  std::cout << report;
  if (opt.format == "text" && opt.out_dir != ".")
    write_file(fs::path(opt.out_dir) / "ingest-report.txt", report);
  return critical ? kExitAnalysis : kExitOk;
}

int cmd_flow(const std::string& path, bool want_dot, bool want_flow_file,
             const GlobalOptions& opt) {
  ata::TraceSet set = ata::load_trace_file(path);
  const ata::Trace& trace = set.traces.begin()->second;
  if (set.traces.size() > 1)
    std::cerr << "[warn] log contains " << set.traces.size()
              << " traces; using '" << trace.trace_id << "'\n";
  ata::TaskFlowGraph flow = ata::discover_task_flow(trace);

  const std::string stem = fs::path(path).stem().string();
  if (!want_dot && !want_flow_file) want_flow_file = true;
  if (want_flow_file) {
    const fs::path out = fs::path(opt.out_dir) / (stem + ".flow");
    write_file(out, ata::write_flow_file(flow));
    log_info("wrote " + out.string());
  }
  if (want_dot) {
    const fs::path out = fs::path(opt.out_dir) / (stem + ".dot");
    write_file(out, ata::flow_to_dot(flow));
    log_info("wrote " + out.string());
  }
  std::cout << "trace " << trace.trace_id << ": " << flow.nodes.size()
            << " tasks, " << flow.roots.size() << " roots\n";
  for (const auto& [id, node] : flow.nodes)
    std::cout << "  " << id << " [" << node.label << "] "
              << to_string(node.status) << "\n";
  return kExitOk;
}

std::optional<double> root_output(const ata::TaskFlowGraph& flow,
                                  const ata::Trace& trace) {
  // The root task's output field from its end event, when the run ended.
  std::set<std::string> roots(flow.roots.begin(), flow.roots.end());
  for (const auto& span : trace.spans)
    for (const auto& event : span.events) {
      if (event.type != ata::LifecycleEventType::End) continue;
      for (const auto& entity : event.entities) {
        if (entity.kind != ata::EntityKind::Task || !roots.count(entity.id))
          continue;
        auto it = entity.fields.find(std::string(ata::kFieldOutput));
        if (it == entity.fields.end()) continue;
        if (const auto* d = std::get_if<double>(&it->second)) return *d;
        if (const auto* i = std::get_if<std::int64_t>(&it->second))
          return static_cast<double>(*i);
      }
    }
  return std::nullopt;
}

int cmd_variability(const std::vector<std::string>& paths, double expected,
                    const GlobalOptions& opt) {
  if (paths.size() < 2) {
    std::cerr << "error: variability needs at least two run logs\n";
    return kExitInput;
  }
  std::vector<ata::RunSample> runs;
  for (const auto& path : paths) {
    ata::TraceSet set = ata::load_trace_file(path);
    const ata::Trace& trace = set.traces.begin()->second;
    ata::RunSample run;
    run.flow = ata::discover_task_flow(trace);
    run.summary = ata::compute_summary(trace, run.flow);
    run.output = root_output(run.flow, trace);
    run.expected = expected;
    runs.push_back(std::move(run));
  }
  const ata::VariabilityReport report =
      ata::run_variability(runs, {}, opt.ged_budget);
  const std::string text = ata::variability_to_text(report);
  std::cout << text;
  write_file(fs::path(opt.out_dir) / "variability.txt", text);
  write_file(fs::path(opt.out_dir) / "variability.csv",
             ata::variability_csv_header() + "\n" +
                 ata::variability_to_csv_row(report) + "\n");
  return kExitOk;
}

int cmd_bench(const std::string& dir, const std::string& candidate, bool self,
              const GlobalOptions& opt) {
  const auto cases = ata::load_benchmark(dir);
  std::vector<ata::CandidateOutput> outputs;
  std::string name;
  if (self) {
    outputs = ata::run_engine_as_candidate(cases);
    name = "self";
  } else {
    outputs = ata::load_candidate(dir, candidate);
    name = candidate;
  }
  ata::EvalOptions eval_opt;
  eval_opt.rel_tol = opt.tolerance;
  eval_opt.ged_budget = opt.ged_budget;
  const ata::EvalReport report = ata::evaluate_candidate(cases, outputs, eval_opt);
  const std::string text = ata::eval_to_text(report);
  std::cout << text;
  write_file(fs::path(opt.out_dir) / ("eval-" + name + ".txt"), text);
  write_file(fs::path(opt.out_dir) / ("eval-" + name + ".csv"),
             ata::eval_to_csv(report));
  return kExitOk;
}

int cmd_gen(const std::string& config_path, bool census_only, int runs,
            const std::string& expression, const GlobalOptions& opt) {
  ata::SuiteConfig config;
  if (!config_path.empty())
    config = ata::suite_config_from_file(config_path);

  if (runs > 0) {
    if (expression.empty()) {
      std::cerr << "error: --runs needs --expression\n";
      return kExitInput;
    }
    const auto logs = ata::generate_runs(expression, runs, opt.seed);
    for (std::size_t i = 0; i < logs.size(); i++) {
      std::ostringstream name;
      name << "run" << (i < 9 ? "0" : "") << (i + 1) << ".log";
      std::string content;
      for (const auto& line : logs[i]) content += line + "\n";
      write_file(fs::path(opt.out_dir) / name.str(), content);
    }
    std::cout << "wrote " << logs.size() << " run logs to " << opt.out_dir
              << "\n";
    return kExitOk;
  }

  if (census_only) {
    const auto plan = ata::plan_suite(config, opt.seed);
    std::cout << ata::census_to_text(ata::census_of_plan(plan));
    return kExitOk;
  }

  const ata::SuiteCensus census = ata::generate_suite(config, opt.seed, opt.out_dir);
  std::cout << "suite written to " << opt.out_dir << "\n";
  std::cout << ata::census_to_text(census);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"agent trace analytics"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand

  GlobalOptions opt;
  app.add_option("--out", opt.out_dir, "output directory for report files");
  app.add_option("--format", opt.format, "report format hint (text|csv|dot)");
  app.add_option("--ged-budget", opt.ged_budget,
                 "max node count for exact graph edit distance");
  app.add_option("--seed", opt.seed, "generator seed");
  app.add_option("--tolerance", opt.tolerance,
                 "relative tolerance for continuous summary fields");

  auto* ingest = app.add_subcommand("ingest", "parse and validate trace logs");
  std::vector<std::string> ingest_paths;
  ingest->add_option("logs", ingest_paths, "trace log files")->required();

  auto* flow = app.add_subcommand("flow", "discover the task flow of a log");
  std::string flow_path;
  bool flow_dot = false, flow_file = false;
  flow->add_option("log", flow_path, "trace log file")->required();
  flow->add_flag("--dot", flow_dot, "write DOT rendering");
  flow->add_flag("--flow-file", flow_file, "write flow file");

  auto* variability =
      app.add_subcommand("variability", "cross-run variability of one input");
  std::vector<std::string> run_paths;
  double expected = 0.0;
  variability->add_option("logs", run_paths, "run logs")->required();
  variability->add_option("--expected", expected, "expected numeric output")
      ->required();

  auto* bench = app.add_subcommand("bench", "score a candidate against GT");
  std::string bench_dir, bench_candidate;
  bool bench_self = false;
  bench->add_option("dir", bench_dir, "benchmark directory")->required();
  bench->add_option("--candidate", bench_candidate, "candidate name");
  bench->add_flag("--self", bench_self, "run this engine as the candidate");

  auto* gen = app.add_subcommand("gen", "generate a benchmark suite");
  std::string gen_config, gen_expression;
  bool gen_census = false;
  int gen_runs = 0;
  gen->add_option("--config", gen_config, "suite config JSON file");
  gen->add_flag("--census", gen_census, "print composition counts only");
  gen->add_option("--runs", gen_runs, "emit N repeated runs of --expression");
  gen->add_option("--expression", gen_expression, "input for --runs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) ? kExitInput : kExitOk;
  }

  try {
    if (app.got_subcommand(ingest)) return cmd_ingest(ingest_paths, opt);
    if (app.got_subcommand(flow))
      return cmd_flow(flow_path, flow_dot, flow_file, opt);
    if (app.got_subcommand(variability))
      return cmd_variability(run_paths, expected, opt);
    if (app.got_subcommand(bench)) {
      if (bench_self == !bench_candidate.empty()) {
        std::cerr << "error: pass exactly one of --candidate NAME or --self\n";
        return kExitInput;
      }
      return cmd_bench(bench_dir, bench_candidate, bench_self, opt);
    }
    if (app.got_subcommand(gen))
      return cmd_gen(gen_config, gen_census, gen_runs, gen_expression, opt);
  } catch (const ata::CycleError& e) {
    std::cerr << "analysis error: " << e.what() << "\n";
    return kExitAnalysis;
  } catch (const ata::MissingDependencyError& e) {
    std::cerr << "analysis error: " << e.what() << "\n";
    return kExitAnalysis;
  } catch (const ata::InconsistentGtError& e) {
    std::cerr << "analysis error: " << e.what() << "\n";
    return kExitAnalysis;
  } catch (const ata::ParseError& e) {
    std::cerr << "input error";
    if (e.line) std::cerr << " at line " << e.line;
    if (e.byte_offset) std::cerr << " (byte " << e.byte_offset << ")";
    std::cerr << ": " << e.what() << "\n";
    return kExitInput;
  } catch (const ata::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitInput;
}

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ata/analytics.hpp"
#include "ata/flow.hpp"

namespace ata {

// Edit cost model for graph edit distance. Defaults: unit insert/delete,
// substitution 0 on equal labels and 1 otherwise.
struct GedCostModel {
  double node_insert = 1.0;
  double node_delete = 1.0;
  double edge_insert = 1.0;
  double edge_delete = 1.0;
  std::function<double(const std::string&, const std::string&)> node_substitute;

  double substitute(const std::string& a, const std::string& b) const {
    if (node_substitute) return node_substitute(a, b);
    return a == b ? 0.0 : 1.0;
  }
};

struct GedResult {
  double distance = 0.0;
  bool exact = false;
  // Substituted node pairs (a id -> b id); populated only for exact results.
  std::map<std::string, std::string> node_mapping;
};

// Edit distance between two task flows. Nodes compare by label;
// decomposition and dependency edges are distinct directed edge types.
// Up to `budget` nodes per graph the result is the exact minimum via
// branch and bound with an admissible label-multiset bound; above it a
// deterministic greedy label matching yields an upper bound (exact=false).
// A budget of 0 forces the greedy path.
GedResult graph_edit_distance(const TaskFlowGraph& a, const TaskFlowGraph& b,
                              const GedCostModel& costs = {},
                              std::size_t budget = 12);

// Average GED over all C(n,2) unordered pairs. Throws StatsError for
// fewer than two graphs.
double mean_pairwise_ged(const std::vector<TaskFlowGraph>& graphs,
                         const GedCostModel& costs = {},
                         std::size_t budget = 12);

// Coefficient of variation as a percentage, population standard deviation.
// value: 100*std/mean; 0 whenever std is 0; undefined (nullopt) when
// mean == 0 with std > 0.
struct CvResult {
  std::optional<double> value;
  double mean = 0.0;
  double stddev = 0.0;
};

// Throws StatsError for fewer than two values.
CvResult coefficient_of_variation(const std::vector<double>& values);

// Mean squared error across runs. Absent outputs contribute
// `absent_penalty` (default: expected squared, the error against 0).
// Throws StatsError on an empty run list.
double mse(const std::vector<std::optional<double>>& outputs, double expected,
           std::optional<double> absent_penalty = {});

// One repetition of the same input: its flow, summary, numeric output (if
// the run produced one), and the expected value.
struct RunSample {
  TaskFlowGraph flow;
  SummaryRow summary;
  std::optional<double> output;
  double expected = 0.0;
};

struct VariabilityReport {
  CvResult cv_accuracy;   // over per-run squared errors
  CvResult cv_cost;       // over cost_usd
  CvResult cv_time;       // over execution_time_ns
  CvResult cv_llm_calls;  // over llm_calls
  double flow_variability = 0.0;  // mean pairwise GED over the run flows
  double mse_value = 0.0;
};

// Cross-run variability for n >= 2 repetitions of one input.
VariabilityReport run_variability(const std::vector<RunSample>& runs,
                                  const GedCostModel& costs = {},
                                  std::size_t budget = 12);

std::string variability_to_text(const VariabilityReport& report);
std::string variability_csv_header();
std::string variability_to_csv_row(const VariabilityReport& report);

}  // namespace ata

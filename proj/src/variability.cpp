#include "ata/variability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "ata/csv.hpp"
#include "ata/error.hpp"

namespace ata {
namespace {

// Flattened view of a task flow for edit-distance work. Edge types:
// bit 0 = decomposition (parent -> child), bit 1 = dependency (dep -> task).
struct GraphView {
  std::vector<std::string> ids;     // sorted
  std::vector<std::string> labels;  // parallel to ids
  std::vector<std::vector<unsigned>> adj;  // adj[u][v] = type bits
  std::size_t edge_count = 0;

  explicit GraphView(const TaskFlowGraph& flow) {
    for (const auto& [id, node] : flow.nodes) ids.push_back(id);
    std::sort(ids.begin(), ids.end());
    std::map<std::string, int> index;
    for (std::size_t i = 0; i < ids.size(); i++)
      index[ids[i]] = static_cast<int>(i);
    labels.resize(ids.size());
    adj.assign(ids.size(), std::vector<unsigned>(ids.size(), 0));
    for (const auto& [id, node] : flow.nodes) {
      const int v = index[id];
      labels[v] = node.label;
      if (node.parent) {
        auto it = index.find(*node.parent);
        if (it != index.end()) {
          adj[it->second][v] |= 1u;
          edge_count++;
        }
      }
      for (const auto& dep : node.depends_on) {
        auto it = index.find(dep);
        if (it != index.end()) {
          adj[it->second][v] |= 2u;
          edge_count++;
        }
      }
    }
  }

  std::size_t size() const { return ids.size(); }
};

constexpr int kDeleted = -1;
constexpr int kUndecided = -2;

double edge_pair_cost(const GraphView& a, const GraphView& b, int ai, int ak,
                      int bj, int bl, const GedCostModel& costs) {
  // Cost of the (ai,ak)/(bj,bl) edge slots in both directions, all types.
  double cost = 0.0;
  for (int dir = 0; dir < 2; dir++) {
    const unsigned ae = dir == 0 ? a.adj[ai][ak] : a.adj[ak][ai];
    const unsigned be = dir == 0 ? b.adj[bj][bl] : b.adj[bl][bj];
    for (unsigned bit : {1u, 2u}) {
      const bool in_a = ae & bit;
      const bool in_b = be & bit;
      if (in_a && !in_b) cost += costs.edge_delete;
      if (!in_a && in_b) cost += costs.edge_insert;
    }
  }
  return cost;
}

double edges_touching(const GraphView& g, int v, const std::vector<bool>& gone,
                      double per_edge) {
  // Cost of removing/adding every edge incident to v whose other endpoint
  // is not already accounted for.
  double cost = 0.0;
  for (std::size_t u = 0; u < g.size(); u++) {
    if (static_cast<int>(u) == v || gone[u]) continue;
    for (unsigned bit : {1u, 2u}) {
      if (g.adj[v][u] & bit) cost += per_edge;
      if (g.adj[u][v] & bit) cost += per_edge;
    }
  }
  // Self loops cannot occur in task flows; no v-v term.
  return cost;
}

// Admissible lower bound on completing a partial node assignment: optimal
// label-multiset matching of the remaining nodes, ignoring edges.
double label_multiset_bound(const std::vector<std::string>& rest_a,
                            const std::vector<std::string>& rest_b,
                            const GedCostModel& costs) {
  std::map<std::string, int> count_a, count_b;
  for (const auto& l : rest_a) count_a[l]++;
  for (const auto& l : rest_b) count_b[l]++;
  std::size_t matched = 0;
  for (const auto& [label, na] : count_a) {
    auto it = count_b.find(label);
    if (it != count_b.end())
      matched += static_cast<std::size_t>(std::min(na, it->second));
  }
  const std::size_t ra = rest_a.size();
  const std::size_t rb = rest_b.size();
  const std::size_t pairs = std::min(ra, rb);
  // Cheapest possible differing-label substitution, or delete+insert if
  // that is cheaper; conservative when a custom substitute fn is set.
  double min_sub = costs.node_delete + costs.node_insert;
  for (const auto& [la, na] : count_a)
    for (const auto& [lb, nb] : count_b)
      if (la != lb) min_sub = std::min(min_sub, costs.substitute(la, lb));
  double bound = static_cast<double>(pairs - matched) * min_sub;
  if (ra > rb) bound += static_cast<double>(ra - rb) * costs.node_delete;
  if (rb > ra) bound += static_cast<double>(rb - ra) * costs.node_insert;
  return bound;
}

struct Search {
  const GraphView& a;
  const GraphView& b;
  const GedCostModel& costs;
  std::vector<int> assign;      // a index -> b index / kDeleted
  std::vector<bool> b_used;
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> best_assign;

  Search(const GraphView& a, const GraphView& b, const GedCostModel& costs)
      : a(a), b(b), costs(costs), assign(a.size(), kUndecided),
        b_used(b.size(), false) {}

  double completion_cost() const {
    // Unmatched b nodes are insertions, plus the edges among them and
    // towards mapped nodes.
    double cost = 0.0;
    std::vector<bool> inserted(b.size(), false);
    for (std::size_t j = 0; j < b.size(); j++)
      if (!b_used[j]) inserted[j] = true;
    for (std::size_t j = 0; j < b.size(); j++) {
      if (!inserted[j]) continue;
      cost += costs.node_insert;
      for (std::size_t l = 0; l < b.size(); l++) {
        if (l == j) continue;
        // Count each inserted-inserted edge once (from the lower index).
        if (inserted[l] && l < j) continue;
        for (unsigned bit : {1u, 2u}) {
          if (b.adj[j][l] & bit) cost += costs.edge_insert;
          if (b.adj[l][j] & bit) cost += costs.edge_insert;
        }
      }
    }
    return cost;
  }

  void run(double upper_bound) {
    best = upper_bound;
    recurse(0, 0.0);
  }

  void recurse(std::size_t i, double cost) {
    if (cost >= best) return;
    if (i == a.size()) {
      const double total = cost + completion_cost();
      if (total < best) {
        best = total;
        best_assign = assign;
      }
      return;
    }

    // Bound: label assignment of undecided a nodes vs unused b nodes.
    {
      std::vector<std::string> rest_a, rest_b;
      for (std::size_t k = i; k < a.size(); k++) rest_a.push_back(a.labels[k]);
      for (std::size_t j = 0; j < b.size(); j++)
        if (!b_used[j]) rest_b.push_back(b.labels[j]);
      if (cost + label_multiset_bound(rest_a, rest_b, costs) >= best) return;
    }

    // Try substitutions, equal labels first so good bounds arrive early.
    std::vector<int> order;
    for (std::size_t j = 0; j < b.size(); j++)
      if (!b_used[j]) order.push_back(static_cast<int>(j));
    std::stable_sort(order.begin(), order.end(), [&](int x, int y) {
      const bool ex = b.labels[x] == a.labels[i];
      const bool ey = b.labels[y] == a.labels[i];
      return ex > ey;
    });
    for (int j : order) {
      double delta = costs.substitute(a.labels[i], b.labels[j]);
      for (std::size_t k = 0; k < i; k++) {
        if (assign[k] == kDeleted) {
          // a-edges towards deleted nodes were charged at deletion time.
          continue;
        }
        delta += edge_pair_cost(a, b, static_cast<int>(i), static_cast<int>(k),
                                j, assign[k], costs);
      }
      assign[i] = j;
      b_used[j] = true;
      recurse(i + 1, cost + delta);
      assign[i] = kUndecided;
      b_used[j] = false;
    }

    // Delete a_i: charge the node plus every incident a-edge not already
    // charged by an earlier deletion (any such edge dies with this node).
    {
      double delta = costs.node_delete;
      std::vector<bool> gone(a.size(), false);
      for (std::size_t k = 0; k < i; k++)
        if (assign[k] == kDeleted) gone[k] = true;
      delta += edges_touching(a, static_cast<int>(i), gone, costs.edge_delete);
      assign[i] = kDeleted;
      recurse(i + 1, cost + delta);
      assign[i] = kUndecided;
    }
  }
};

GedResult greedy_ged(const GraphView& a, const GraphView& b,
                     const GedCostModel& costs) {
  // Deterministic label matching: pair equal labels in id order, then pair
  // leftovers in order as substitutions, then delete/insert the tail.
  std::vector<int> assign(a.size(), kDeleted);
  std::vector<bool> b_used(b.size(), false);

  std::map<std::string, std::vector<int>> b_by_label;
  for (std::size_t j = 0; j < b.size(); j++)
    b_by_label[b.labels[j]].push_back(static_cast<int>(j));
  std::vector<int> unmatched_a;
  for (std::size_t i = 0; i < a.size(); i++) {
    auto it = b_by_label.find(a.labels[i]);
    if (it != b_by_label.end() && !it->second.empty()) {
      const int j = it->second.front();
      it->second.erase(it->second.begin());
      assign[i] = j;
      b_used[j] = true;
    } else {
      unmatched_a.push_back(static_cast<int>(i));
    }
  }
  std::vector<int> unmatched_b;
  for (std::size_t j = 0; j < b.size(); j++)
    if (!b_used[j]) unmatched_b.push_back(static_cast<int>(j));
  for (std::size_t k = 0; k < unmatched_a.size() && k < unmatched_b.size(); k++) {
    assign[unmatched_a[k]] = unmatched_b[k];
    b_used[unmatched_b[k]] = true;
  }

  // Cost of this single mapping.
  double cost = 0.0;
  for (std::size_t i = 0; i < a.size(); i++) {
    if (assign[i] == kDeleted) {
      cost += costs.node_delete;
    } else {
      cost += costs.substitute(a.labels[i], b.labels[assign[i]]);
    }
  }
  for (std::size_t j = 0; j < b.size(); j++)
    if (!b_used[j]) cost += costs.node_insert;

  // Edges: walk every a edge; matched iff both endpoints mapped and b has
  // the same typed edge. Then count unmatched b edges as insertions.
  std::vector<std::vector<unsigned>> b_matched(
      b.size(), std::vector<unsigned>(b.size(), 0));
  for (std::size_t u = 0; u < a.size(); u++) {
    for (std::size_t v = 0; v < a.size(); v++) {
      for (unsigned bit : {1u, 2u}) {
        if (!(a.adj[u][v] & bit)) continue;
        if (assign[u] != kDeleted && assign[v] != kDeleted &&
            (b.adj[assign[u]][assign[v]] & bit)) {
          b_matched[assign[u]][assign[v]] |= bit;
        } else {
          cost += costs.edge_delete;
        }
      }
    }
  }
  for (std::size_t u = 0; u < b.size(); u++)
    for (std::size_t v = 0; v < b.size(); v++)
      for (unsigned bit : {1u, 2u})
        if ((b.adj[u][v] & bit) && !(b_matched[u][v] & bit))
          cost += costs.edge_insert;

  GedResult result;
  result.distance = cost;
  result.exact = false;
  return result;
}

}  // namespace

GedResult graph_edit_distance(const TaskFlowGraph& a, const TaskFlowGraph& b,
                              const GedCostModel& costs, std::size_t budget) {
  const GraphView va(a);
  const GraphView vb(b);
  const GedResult greedy = greedy_ged(va, vb, costs);
  if (std::max(va.size(), vb.size()) > budget) return greedy;

  Search search(va, vb, costs);
  search.run(greedy.distance + 1e-9);
  GedResult result;
  result.exact = true;
  if (search.best_assign.empty() && !va.ids.empty()) {
    // Greedy was already optimal; rerun with a loose bound to recover the
    // mapping (cheap: graphs here are small).
    search.best = std::numeric_limits<double>::infinity();
    search.recurse(0, 0.0);
  }
  result.distance = search.best;
  for (std::size_t i = 0; i < search.best_assign.size(); i++)
    if (search.best_assign[i] >= 0)
      result.node_mapping[va.ids[i]] = vb.ids[search.best_assign[i]];
  return result;
}

double mean_pairwise_ged(const std::vector<TaskFlowGraph>& graphs,
                         const GedCostModel& costs, std::size_t budget) {
  if (graphs.size() < 2)
    throw StatsError("mean pairwise GED needs at least two graphs, got " +
                     std::to_string(graphs.size()));
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < graphs.size(); i++) {
    for (std::size_t j = i + 1; j < graphs.size(); j++) {
      sum += graph_edit_distance(graphs[i], graphs[j], costs, budget).distance;
      pairs++;
    }
  }
  return sum / static_cast<double>(pairs);
}

CvResult coefficient_of_variation(const std::vector<double>& values) {
  if (values.size() < 2)
    throw StatsError("coefficient of variation needs at least two values, got " +
                     std::to_string(values.size()));
  CvResult r;
  double sum = 0.0;
  for (double v : values) sum += v;
  r.mean = sum / static_cast<double>(values.size());
  double sq = 0.0;
  for (double v : values) sq += (v - r.mean) * (v - r.mean);
  r.stddev = std::sqrt(sq / static_cast<double>(values.size()));
  if (r.stddev == 0.0) {
    r.value = 0.0;
  } else if (r.mean == 0.0) {
    r.value = std::nullopt;
  } else {
    r.value = 100.0 * r.stddev / r.mean;
  }
  return r;
}

double mse(const std::vector<std::optional<double>>& outputs, double expected,
           std::optional<double> absent_penalty) {
  if (outputs.empty()) throw StatsError("MSE needs at least one run");
  const double penalty = absent_penalty.value_or(expected * expected);
  double sum = 0.0;
  for (const auto& out : outputs) {
    if (out) {
      const double err = *out - expected;
      sum += err * err;
    } else {
      sum += penalty;
    }
  }
  return sum / static_cast<double>(outputs.size());
}

VariabilityReport run_variability(const std::vector<RunSample>& runs,
                                  const GedCostModel& costs,
                                  std::size_t budget) {
  if (runs.size() < 2)
    throw StatsError("variability needs at least two runs, got " +
                     std::to_string(runs.size()));
  VariabilityReport report;
  std::vector<double> sq_errors, cost_vals, time_vals, llm_vals;
  std::vector<std::optional<double>> outputs;
  std::vector<TaskFlowGraph> flows;
  double mse_sum = 0.0;
  for (const auto& run : runs) {
    double sq;
    if (run.output) {
      const double err = *run.output - run.expected;
      sq = err * err;
    } else {
      sq = run.expected * run.expected;
    }
    sq_errors.push_back(sq);
    mse_sum += sq;
    cost_vals.push_back(run.summary.cost_usd);
    time_vals.push_back(static_cast<double>(run.summary.execution_time_ns));
    llm_vals.push_back(static_cast<double>(run.summary.llm_calls));
    outputs.push_back(run.output);
    flows.push_back(run.flow);
  }
  report.cv_accuracy = coefficient_of_variation(sq_errors);
  report.cv_cost = coefficient_of_variation(cost_vals);
  report.cv_time = coefficient_of_variation(time_vals);
  report.cv_llm_calls = coefficient_of_variation(llm_vals);
  report.flow_variability = mean_pairwise_ged(flows, costs, budget);
  report.mse_value = mse_sum / static_cast<double>(runs.size());
  return report;
}

namespace {

std::string cv_text(const CvResult& cv) {
  if (!cv.value) return "undefined";
  return fmt_fixed(*cv.value, 2) + "%";
}

std::string cv_csv(const CvResult& cv) {
  if (!cv.value) return "undefined";
  return fmt_double(*cv.value);
}

}  // namespace

std::string variability_to_text(const VariabilityReport& report) {
  std::ostringstream out;
  out << "accuracy CV:        " << cv_text(report.cv_accuracy) << "\n";
  out << "cost CV:            " << cv_text(report.cv_cost) << "\n";
  out << "execution time CV:  " << cv_text(report.cv_time) << "\n";
  out << "llm calls CV:       " << cv_text(report.cv_llm_calls) << "\n";
  out << "flow variability:   " << fmt_double(report.flow_variability)
      << " (mean pairwise GED)\n";
  out << "mse:                " << fmt_double(report.mse_value) << "\n";
  return out.str();
}

std::string variability_csv_header() {
  return "accuracy_cv_pct,cost_cv_pct,execution_time_cv_pct,llm_calls_cv_pct,"
         "flow_variability,mse";
}

std::string variability_to_csv_row(const VariabilityReport& report) {
  std::vector<std::string> fields = {
      cv_csv(report.cv_accuracy),   cv_csv(report.cv_cost),
      cv_csv(report.cv_time),       cv_csv(report.cv_llm_calls),
      fmt_double(report.flow_variability), fmt_double(report.mse_value),
  };
  return csv_join(fields);
}

}  // namespace ata

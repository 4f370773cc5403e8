// Test-only helpers: independent oracles and seeded fixture generators.
// Everything here stays independent of the implementation paths it checks.
#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ata/expr.hpp"
#include "ata/flow.hpp"
#include "ata/rng.hpp"
#include "ata/variability.hpp"

namespace atest {

// ---------------------------------------------------------------------------
// Brute-force graph edit distance: enumerate every injective mapping from a
// subset of A's nodes onto B's nodes; unmapped A nodes are deleted, unhit B
// nodes inserted. The cheapest mapping is the exact distance for the unit
// cost model (and any model where substitution never beats delete+insert
// unfairly, since deletion is always among the enumerated choices).
// ---------------------------------------------------------------------------

struct FlatGraph {
  std::vector<std::string> labels;
  // (u, v, type): type 0 = decomposition, 1 = dependency
  std::set<std::tuple<int, int, int>> edges;
};

inline FlatGraph flatten(const ata::TaskFlowGraph& flow) {
  FlatGraph g;
  std::vector<std::string> ids;
  for (const auto& [id, node] : flow.nodes) ids.push_back(id);
  std::sort(ids.begin(), ids.end());
  std::map<std::string, int> index;
  for (std::size_t i = 0; i < ids.size(); i++) index[ids[i]] = static_cast<int>(i);
  g.labels.resize(ids.size());
  for (const auto& [id, node] : flow.nodes) {
    const int v = index[id];
    g.labels[v] = node.label;
    if (node.parent && index.count(*node.parent))
      g.edges.insert({index[*node.parent], v, 0});
    for (const auto& dep : node.depends_on)
      if (index.count(dep)) g.edges.insert({index[dep], v, 1});
  }
  return g;
}

inline double mapping_cost(const FlatGraph& a, const FlatGraph& b,
                           const std::vector<int>& assign,
                           const ata::GedCostModel& costs) {
  const int nb = static_cast<int>(b.labels.size());
  std::vector<bool> b_hit(nb, false);
  double cost = 0.0;
  for (std::size_t i = 0; i < assign.size(); i++) {
    if (assign[i] < 0) {
      cost += costs.node_delete;
    } else {
      b_hit[assign[i]] = true;
      cost += costs.substitute(a.labels[i], b.labels[assign[i]]);
    }
  }
  for (int j = 0; j < nb; j++)
    if (!b_hit[j]) cost += costs.node_insert;

  std::set<std::tuple<int, int, int>> b_matched;
  for (const auto& [u, v, t] : a.edges) {
    if (assign[u] >= 0 && assign[v] >= 0 &&
        b.edges.count({assign[u], assign[v], t})) {
      b_matched.insert({assign[u], assign[v], t});
    } else {
      cost += costs.edge_delete;
    }
  }
  for (const auto& edge : b.edges)
    if (!b_matched.count(edge)) cost += costs.edge_insert;
  return cost;
}

inline double brute_force_ged(const ata::TaskFlowGraph& fa,
                              const ata::TaskFlowGraph& fb,
                              const ata::GedCostModel& costs = {}) {
  const FlatGraph a = flatten(fa);
  const FlatGraph b = flatten(fb);
  const int na = static_cast<int>(a.labels.size());
  const int nb = static_cast<int>(b.labels.size());
  std::vector<int> assign(na, -1);
  std::vector<bool> used(nb, false);
  double best = mapping_cost(a, b, assign, costs);

  std::function<void(int)> rec = [&](int i) {
    if (i == na) {
      best = std::min(best, mapping_cost(a, b, assign, costs));
      return;
    }
    assign[i] = -1;
    rec(i + 1);
    for (int j = 0; j < nb; j++) {
      if (used[j]) continue;
      used[j] = true;
      assign[i] = j;
      rec(i + 1);
      assign[i] = -1;
      used[j] = false;
    }
  };
  if (na > 0) rec(0);
  return best;
}

// ---------------------------------------------------------------------------
// Seeded random task-flow graphs: a random parent forest plus random
// sibling dependency edges (always acyclic by ordering).
// ---------------------------------------------------------------------------

inline ata::TaskFlowGraph random_flow(ata::Rng& rng, int max_nodes,
                                      int label_alphabet = 3) {
  const int n = static_cast<int>(rng.range(1, max_nodes));
  ata::TaskFlowGraph flow;
  std::vector<std::string> ids;
  for (int i = 0; i < n; i++) {
    ata::TaskNode node;
    node.task_id = "n" + std::to_string(i);
    node.label = std::string(1, static_cast<char>('a' + rng.next() % label_alphabet));
    node.status = ata::TaskStatus::Completed;
    if (i > 0 && rng.coin(0.8))
      node.parent = ids[static_cast<std::size_t>(rng.next() % ids.size())];
    ids.push_back(node.task_id);
    flow.nodes.emplace(node.task_id, std::move(node));
  }
  // Sibling dependency edges, later -> earlier only, so cycles are impossible.
  std::map<std::string, std::vector<std::string>> groups;
  for (const auto& [id, node] : flow.nodes)
    groups[node.parent.value_or("")].push_back(id);
  for (auto& [parent, members] : groups) {
    std::sort(members.begin(), members.end());
    for (std::size_t i = 1; i < members.size(); i++)
      if (rng.coin(0.3))
        flow.nodes.at(members[i]).depends_on.push_back(
            members[rng.next() % i]);
  }
  for (const auto& [id, node] : flow.nodes)
    if (!node.parent) flow.roots.push_back(id);
  return flow;
}

// ---------------------------------------------------------------------------
// Shunting-yard expression oracle, independent of the recursive-descent
// parser: infix -> RPN -> exact rational evaluation. Shares only the
// scripted snippet table (data, not algorithm).
// ---------------------------------------------------------------------------

inline ata::Rational shunting_yard_eval(const std::string& text) {
  using ata::Rational;
  struct Token {
    enum Kind { Num, Op, Open, Close } kind;
    Rational value;
    char op = 0;
    char bracket = 0;
  };

  std::vector<Token> tokens;
  std::size_t i = 0;
  auto close_of = [](char open) {
    return open == '(' ? ')' : open == '[' ? ']' : '}';
  };
  while (i < text.size()) {
    const char c = text[i];
    if (c == ' ' || c == '\t') {
      i++;
      continue;
    }
    if (c >= '0' && c <= '9') {
      std::int64_t num = 0, den = 1;
      while (i < text.size() && text[i] >= '0' && text[i] <= '9')
        num = num * 10 + (text[i++] - '0');
      if (i < text.size() && text[i] == '.') {
        i++;
        while (i < text.size() && text[i] >= '0' && text[i] <= '9') {
          num = num * 10 + (text[i++] - '0');
          den *= 10;
        }
      }
      tokens.push_back({Token::Num, Rational(num, den), 0, 0});
      continue;
    }
    if (c == '+' || c == '-' || c == '*' || c == '/') {
      tokens.push_back({Token::Op, Rational(), c, 0});
      i++;
      continue;
    }
    if (c == '(' || c == '[') {
      tokens.push_back({Token::Open, Rational(), 0, c});
      i++;
      continue;
    }
    if (c == '{') {
      std::size_t look = i + 1;
      while (look < text.size() && (text[look] == ' ' || text[look] == '\t'))
        look++;
      const bool snippet =
          look < text.size() &&
          (std::isalpha(static_cast<unsigned char>(text[look])) ||
           text[look] == '$');
      if (snippet) {
        const std::size_t end = text.find('}', i + 1);
        if (end == std::string::npos) throw ata::Error("oracle: unterminated {");
        auto value = ata::lookup_snippet(text.substr(i + 1, end - i - 1));
        if (!value) throw ata::Error("oracle: unknown snippet");
        tokens.push_back({Token::Num, *value, 0, 0});
        i = end + 1;
        continue;
      }
      tokens.push_back({Token::Open, Rational(), 0, c});
      i++;
      continue;
    }
    if (c == ')' || c == ']' || c == '}') {
      tokens.push_back({Token::Close, Rational(), 0, c});
      i++;
      continue;
    }
    throw ata::Error(std::string("oracle: unexpected character '") + c + "'");
  }

  // Infix -> RPN.
  std::vector<Token> rpn;
  std::vector<Token> stack;
  auto prec = [](char op) { return op == '*' || op == '/' ? 2 : 1; };
  for (const Token& tok : tokens) {
    switch (tok.kind) {
      case Token::Num:
        rpn.push_back(tok);
        break;
      case Token::Op:
        while (!stack.empty() && stack.back().kind == Token::Op &&
               prec(stack.back().op) >= prec(tok.op)) {
          rpn.push_back(stack.back());
          stack.pop_back();
        }
        stack.push_back(tok);
        break;
      case Token::Open:
        stack.push_back(tok);
        break;
      case Token::Close:
        while (!stack.empty() && stack.back().kind != Token::Open) {
          rpn.push_back(stack.back());
          stack.pop_back();
        }
        if (stack.empty() || close_of(stack.back().bracket) != tok.bracket)
          throw ata::Error("oracle: bracket mismatch");
        stack.pop_back();
        break;
    }
  }
  while (!stack.empty()) {
    if (stack.back().kind == Token::Open)
      throw ata::Error("oracle: unbalanced bracket");
    rpn.push_back(stack.back());
    stack.pop_back();
  }

  std::vector<Rational> values;
  for (const Token& tok : rpn) {
    if (tok.kind == Token::Num) {
      values.push_back(tok.value);
      continue;
    }
    if (values.size() < 2) throw ata::Error("oracle: dangling operator");
    const Rational rhs = values.back();
    values.pop_back();
    const Rational lhs = values.back();
    values.pop_back();
    switch (tok.op) {
      case '+': values.push_back(lhs + rhs); break;
      case '-': values.push_back(lhs - rhs); break;
      case '*': values.push_back(lhs * rhs); break;
      case '/': values.push_back(lhs / rhs); break;
    }
  }
  if (values.size() != 1) throw ata::Error("oracle: malformed expression");
  return values.front();
}

// Random well-formed expressions for cross-checking the evaluator.
inline std::string random_expression(ata::Rng& rng, int depth = 0) {
  if (depth >= 3 || (depth > 0 && rng.coin(0.45)))
    return std::to_string(rng.range(1, 50));
  static const char* const ops = "+-*/";
  const char op = ops[rng.next() % 4];
  const std::string left = random_expression(rng, depth + 1);
  const std::string right =
      op == '/' ? std::to_string(rng.range(1, 19)) : random_expression(rng, depth + 1);
  const std::string body = left + std::string(1, op) + right;
  switch (rng.next() % 4) {
    case 0: return "(" + body + ")";
    case 1: return "[" + body + "]";
    case 2: return "{" + body + "}";
    default: return body;
  }
}

}  // namespace atest

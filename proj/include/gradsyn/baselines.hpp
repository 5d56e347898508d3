#pragma once

// Baseline and ablation selection policies:
//   retrostar  A*-style argmin of g(M) + h(M), h == 0, reaction cost -ln f
//   naive      expected-improvement selection (hypothetical s(M) = 1)
//   topo       gradient selection, but s recomputed over the full reversed
//              topological order; cycle-closing reactions are rejected to
//              keep the graph acyclic

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <queue>
#include <vector>

#include "gradsyn/gradient.hpp"
#include "gradsyn/graph.hpp"
#include "gradsyn/planner.hpp"
#include "gradsyn/svalue.hpp"

namespace gradsyn {

// ---------------------------------------------------------------------------
// retro*-style selection

struct CostAnnotations {
  /// Molecule node id -> cheapest path cost from the root (sum of reaction
  /// costs along the path); infinity for unreachable nodes.
  std::vector<double> g_cost;
  /// Optimistic heuristic: h == 0 everywhere.
  double h(NodeId) const { return 0.0; }
  double v(NodeId m) const { return g_cost[m] + h(m); }
};

using ReactionCost = std::function<double(const SearchGraph&, NodeId)>;

inline double neg_log_feasibility(const SearchGraph& g, NodeId r) {
  return -std::log(g.reaction(r).feasibility);
}

/// Dijkstra from the root over product -> reactant steps, each weighted by
/// the connecting reaction's cost (nonnegative). Returns the number of
/// settled molecules for instrumentation.
inline CostAnnotations recompute_costs(const SearchGraph& g,
                                       const ReactionCost& cost = neg_log_feasibility,
                                       std::uint64_t* settled = nullptr) {
  CostAnnotations costs;
  constexpr double kInf = std::numeric_limits<double>::infinity();
  costs.g_cost.assign(g.node_count(), kInf);
  using Entry = std::pair<double, NodeId>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> frontier;
  costs.g_cost[g.root()] = 0.0;
  frontier.push({0.0, g.root()});
  std::uint64_t pops = 0;
  while (!frontier.empty()) {
    auto [d, m] = frontier.top();
    frontier.pop();
    if (d > costs.g_cost[m]) continue;
    ++pops;
    for (NodeId r : g.molecule(m).reaction_children) {
      const double step = cost(g, r);
      for (NodeId reactant : g.reaction(r).reactants) {
        double nd = d + step;
        if (nd < costs.g_cost[reactant]) {
          costs.g_cost[reactant] = nd;
          frontier.push({nd, reactant});
        }
      }
    }
  }
  if (settled) *settled += pops;
  return costs;
}

/// argmin of v(M) = g(M) + h(M) over the open molecules; ties go to the
/// smallest insertion id.
inline std::optional<NodeId> retro_star_select(const SearchGraph& g, const CostAnnotations& costs) {
  std::optional<NodeId> best;
  double best_v = std::numeric_limits<double>::infinity();
  for (NodeId m : g.open_nodes()) {
    double v = costs.v(m);
    if (!best || v < best_v) {
      best = m;
      best_v = v;
    }
  }
  return best;
}

class RetroStarPolicy final : public SelectionPolicy {
 public:
  explicit RetroStarPolicy(ReactionCost cost = neg_log_feasibility) : cost_(std::move(cost)) {}

  std::string name() const override { return "retrostar"; }

  void init(SearchGraph& g, const SearchParams&) override {
    costs_ = recompute_costs(g, cost_, &update_visits);
  }

  std::optional<NodeId> select(SearchGraph& g, const SearchParams&) override {
    return retro_star_select(g, costs_);
  }

  void update(SearchGraph& g, const UpdateContext&, const SearchParams&) override {
    costs_ = recompute_costs(g, cost_, &update_visits);
  }

 private:
  ReactionCost cost_;
  CostAnnotations costs_;
};

// ---------------------------------------------------------------------------
// Naive expected-improvement selection (the "no gradient" ablation)

struct NaiveSelection {
  std::optional<NodeId> choice;
  std::uint64_t recomputations = 0;  ///< node recomputations spent on hypotheticals
};

/// For each open molecule M, hypothetically sets s(M) = 1, recomputes the
/// root's s restricted to M's ancestor closure, and picks the M that
/// maximizes the hypothetical root value. Ties go to the smallest id.
inline NaiveSelection naive_improvement_select(const SearchGraph& g, const SearchParams& p) {
  NaiveSelection result;
  const std::size_t n = g.node_count();
  std::vector<double> base(n, 0.0);
  for (NodeId x = 0; x < n; ++x) base[x] = g.s(x);

  std::vector<double> work(n, 0.0);
  std::vector<double> next(n, 0.0);
  double best_value = -1.0;

  for (NodeId m : g.open_nodes()) {
    // ancestor closure of m over parent edges, excluding m itself
    std::vector<NodeId> ancestors;
    std::vector<char> in_set(n, 0);
    in_set[m] = 1;
    std::vector<NodeId> stack{m};
    while (!stack.empty()) {
      NodeId x = stack.back();
      stack.pop_back();
      auto visit = [&](NodeId y) {
        if (!in_set[y]) {
          in_set[y] = 1;
          ancestors.push_back(y);
          stack.push_back(y);
        }
      };
      if (g.kind(x) == NodeKind::molecule)
        for (NodeId r : g.molecule(x).reaction_parents) visit(r);
      else
        visit(g.reaction(x).product);
    }

    work = base;
    next = base;
    work[m] = 1.0;
    next[m] = 1.0;
    const int max_sweeps =
        std::min<int>(p.max_fixed_point_sweeps, static_cast<int>(ancestors.size()) + 1);
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
      double delta = 0.0;
      for (NodeId x : ancestors) {
        double v = detail::local_s_with(g, x, p, p.s0, [&](NodeId y) { return work[y]; });
        next[x] = v;
        double d = std::abs(v - work[x]);
        if (d > delta) delta = d;
      }
      for (NodeId x : ancestors) work[x] = next[x];
      result.recomputations += ancestors.size();
      if (delta < p.fixed_point_tol) break;
    }

    double value = work[g.root()];
    if (!result.choice || value > best_value) {
      result.choice = m;
      best_value = value;
    }
  }
  return result;
}

class NaiveImprovementPolicy final : public SelectionPolicy {
 public:
  std::string name() const override { return "naive"; }

  void init(SearchGraph& g, const SearchParams& p) override {
    std::vector<NodeId> seed{g.root()};
    update_visits += static_cast<std::uint64_t>(bottom_up_update(g, seed, p));
  }

  std::optional<NodeId> select(SearchGraph& g, const SearchParams& p) override {
    NaiveSelection sel = naive_improvement_select(g, p);
    selection_visits += sel.recomputations;
    return sel.choice;
  }

  void update(SearchGraph& g, const UpdateContext& ctx, const SearchParams& p) override {
    update_visits += static_cast<std::uint64_t>(bottom_up_update(g, ctx.seeds, p));
  }
};

// ---------------------------------------------------------------------------
// Topological-order update (the "no bottom-up" ablation)

/// Recomputes every s in one pass over the reversed topological order.
/// The graph must be acyclic; throws StateError when a cycle is found.
/// Returns the number of nodes recomputed (always the node count).
inline std::uint64_t topo_svalue_update(SearchGraph& g, const SearchParams& p) {
  const std::size_t n = g.node_count();
  std::vector<std::uint32_t> unresolved(n, 0);  // successors not yet recomputed
  std::vector<NodeId> queue;
  queue.reserve(n);
  for (NodeId x = 0; x < n; ++x) {
    std::size_t succ = g.kind(x) == NodeKind::molecule ? g.molecule(x).reaction_children.size()
                                                       : g.reaction(x).reactants.size();
    unresolved[x] = static_cast<std::uint32_t>(succ);
    if (succ == 0) queue.push_back(x);
  }
  std::size_t head = 0;
  while (head < queue.size()) {
    NodeId x = queue[head++];
    g.set_s(x, local_s(g, x, p));
    if (g.kind(x) == NodeKind::molecule) {
      for (NodeId r : g.molecule(x).reaction_parents)
        if (--unresolved[r] == 0) queue.push_back(r);
    } else {
      NodeId product = g.reaction(x).product;
      if (--unresolved[product] == 0) queue.push_back(product);
    }
  }
  if (head != n) throw StateError("cycle detected during topological s-value update");
  return static_cast<std::uint64_t>(head);
}

/// Gradient selection over an acyclic graph maintained by rejecting any
/// reaction that would close a cycle; the update phase recomputes all s
/// values in reversed topological order and then propagates D.
class TopoPolicy final : public SelectionPolicy {
 public:
  std::string name() const override { return "topo"; }

  void init(SearchGraph& g, const SearchParams& p) override {
    update_visits += topo_svalue_update(g, p);
    propagate_visits += static_cast<std::uint64_t>(propagate(g, p));
  }

  std::optional<NodeId> select(SearchGraph& g, const SearchParams&) override {
    return select_next(g);
  }

  bool admit_reaction(const SearchGraph& g, NodeId product,
                      const std::vector<NodeId>& existing_reactants) override {
    return !would_close_cycle(g, product, existing_reactants);
  }

  void update(SearchGraph& g, const UpdateContext&, const SearchParams& p) override {
    update_visits += topo_svalue_update(g, p);
    propagate_visits += static_cast<std::uint64_t>(propagate(g, p));
  }
};

// ---------------------------------------------------------------------------

inline std::unique_ptr<SelectionPolicy> make_policy(const std::string& name) {
  if (name == "gradient") return std::make_unique<GradientPolicy>();
  if (name == "retrostar") return std::make_unique<RetroStarPolicy>();
  if (name == "naive") return std::make_unique<NaiveImprovementPolicy>();
  if (name == "topo") return std::make_unique<TopoPolicy>();
  throw InvalidInputError("unknown policy: " + name);
}

}  // namespace gradsyn

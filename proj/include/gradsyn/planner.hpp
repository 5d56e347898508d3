#pragma once

// The search loop: select -> expand -> update, repeated until the iteration
// budget is exhausted or no open node remains. Finding a route does not stop
// the search; the point is a plan with backup routes, so the loop keeps
// raising the root's success probability until the budget runs out.

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gradsyn/evaluation.hpp"
#include "gradsyn/gradient.hpp"
#include "gradsyn/graph.hpp"
#include "gradsyn/models.hpp"
#include "gradsyn/params.hpp"
#include "gradsyn/route.hpp"
#include "gradsyn/svalue.hpp"

namespace gradsyn {

/// argmax of D over the open molecules; ties go to the smallest insertion
/// id. Empty optional when the open set is empty.
inline std::optional<NodeId> select_next(const SearchGraph& g) {
  std::optional<NodeId> best;
  double best_d = 0.0;
  for (NodeId m : g.open_nodes()) {  // insertion order, so the first max wins ties
    double d = g.grad(m);
    if (!best || d > best_d) {
      best = m;
      best_d = d;
    }
  }
  return best;
}

struct StepReport {
  std::optional<NodeId> expanded;
  int reactions_added = 0;
  int new_molecules = 0;
  int candidates_discarded = 0;  ///< empty reactant lists from the model
  int candidates_rejected = 0;   ///< vetoed by the policy (e.g. cycle closers)
  bool exhausted = false;
  bool marked_dead = false;
};

struct UpdateContext {
  NodeId expanded = 0;
  std::vector<NodeId> new_molecules;
  std::vector<NodeId> new_reactions;
  /// Update seeds: the reactant molecules of every reaction added this step
  /// (new or reused — their parents must refresh either way), or the
  /// expanded node itself when it died.
  std::vector<NodeId> seeds;
};

/// A selection policy owns the "select" and "update" phases of the loop and
/// may veto candidate reactions before they are installed.
class SelectionPolicy {
 public:
  virtual ~SelectionPolicy() = default;
  virtual std::string name() const = 0;
  virtual void init(SearchGraph& g, const SearchParams& p) = 0;
  virtual std::optional<NodeId> select(SearchGraph& g, const SearchParams& p) = 0;
  virtual bool admit_reaction(const SearchGraph&, NodeId /*product*/,
                              const std::vector<NodeId>& /*existing_reactants*/) {
    return true;
  }
  virtual void update(SearchGraph& g, const UpdateContext& ctx, const SearchParams& p) = 0;

  // instrumentation, aggregated by run()
  std::uint64_t update_visits = 0;     ///< bottom-up / s-recomputation node visits
  std::uint64_t propagate_visits = 0;  ///< gradient finalizations
  std::uint64_t selection_visits = 0;  ///< extra per-selection recomputations
};

/// The gradient-guided policy: single-visit bottom-up s refresh, full
/// top-down D propagation, argmax-D selection.
class GradientPolicy final : public SelectionPolicy {
 public:
  std::string name() const override { return "gradient"; }

  void init(SearchGraph& g, const SearchParams& p) override {
    std::vector<NodeId> seed{g.root()};
    update_visits += static_cast<std::uint64_t>(bottom_up_update(g, seed, p));
    propagate_visits += static_cast<std::uint64_t>(propagate(g, p));
  }

  std::optional<NodeId> select(SearchGraph& g, const SearchParams&) override {
    return select_next(g);
  }

  void update(SearchGraph& g, const UpdateContext& ctx, const SearchParams& p) override {
    update_visits += static_cast<std::uint64_t>(bottom_up_update(g, ctx.seeds, p));
    propagate_visits += static_cast<std::uint64_t>(propagate(g, p));
  }
};

/// One full iteration. On a model failure the exception propagates and the
/// graph is left untouched (the selected node stays open).
inline StepReport step(SearchGraph& g, const ExpansionModel& model, const FeasibilityModel& feas,
                       const SearchParams& p, SelectionPolicy& policy) {
  StepReport report;
  std::optional<NodeId> selected = policy.select(g, p);
  if (!selected) {
    report.exhausted = true;
    return report;
  }
  const NodeId target = *selected;
  const Molecule molecule = g.molecule(target).molecule;

  std::vector<ReactionCandidate> candidates = model.expand(molecule);

  struct Admitted {
    const ReactionCandidate* candidate;
    double feasibility;
  };
  std::vector<Admitted> admitted;
  admitted.reserve(candidates.size());
  for (const ReactionCandidate& c : candidates) {
    if (c.reactants.empty()) {
      ++report.candidates_discarded;
      continue;
    }
    std::vector<NodeId> existing;
    for (const Molecule& r : c.reactants)
      if (auto id = g.find_molecule(r.canonical)) existing.push_back(*id);
    if (!policy.admit_reaction(g, target, existing)) {
      ++report.candidates_rejected;
      continue;
    }
    admitted.push_back({&c, feas.feasibility(c.rank, c.score)});
  }

  UpdateContext ctx;
  ctx.expanded = target;
  if (admitted.empty()) {
    g.mark_dead(target);
    report.marked_dead = true;
    ctx.seeds.push_back(target);
  } else {
    g.mark_expanded(target);
    for (const Admitted& a : admitted) {
      AddReactionResult res = g.add_reaction(target, a.candidate->reactants, a.feasibility,
                                             a.candidate->rank);
      if (!res.created) continue;
      ++report.reactions_added;
      report.new_molecules += static_cast<int>(res.new_molecules.size());
      ctx.new_reactions.push_back(res.reaction);
      for (NodeId m : res.new_molecules) ctx.new_molecules.push_back(m);
      for (NodeId m : g.reaction(res.reaction).reactants) ctx.seeds.push_back(m);
    }
    if (ctx.seeds.empty()) ctx.seeds.push_back(target);
    // dedupe seeds, preserve first-seen order
    std::vector<NodeId> unique;
    for (NodeId s : ctx.seeds) {
      bool dup = false;
      for (NodeId u : unique)
        if (u == s) dup = true;
      if (!dup) unique.push_back(s);
    }
    ctx.seeds = std::move(unique);
  }

  report.expanded = target;
  policy.update(g, ctx, p);
  return report;
}

// ---------------------------------------------------------------------------
// Route extraction

namespace detail {

struct RouteEnumerator {
  const SearchGraph& g;
  std::size_t cap;
  std::vector<std::pair<NodeId, NodeId>> choices;  // molecule -> reaction, in pick order
  std::vector<Route> out;

  const NodeId* choice_of(NodeId m) const {
    for (const auto& [mol, rxn] : choices)
      if (mol == m) return &rxn;
    return nullptr;
  }

  /// Does `from` reach `target` through the current choice edges?
  bool reaches(NodeId from, NodeId target) const {
    if (from == target) return true;
    std::vector<NodeId> stack{from};
    std::vector<NodeId> seen{from};
    while (!stack.empty()) {
      NodeId m = stack.back();
      stack.pop_back();
      const NodeId* r = choice_of(m);
      if (!r) continue;
      for (NodeId child : g.reaction(*r).reactants) {
        if (child == target) return true;
        bool dup = false;
        for (NodeId s : seen)
          if (s == child) dup = true;
        if (!dup) {
          seen.push_back(child);
          stack.push_back(child);
        }
      }
    }
    return false;
  }

  void materialize() {
    Route route;
    route.target = g.root();
    std::vector<char> mol_in(g.node_count(), 0);
    mol_in[route.target] = 1;
    for (const auto& [m, r] : choices) {
      mol_in[m] = 1;
      route.reactions.push_back(r);
      for (NodeId reactant : g.reaction(r).reactants) mol_in[reactant] = 1;
    }
    for (NodeId x = 0; x < g.node_count(); ++x)
      if (mol_in[x]) route.molecules.push_back(x);
    std::sort(route.reactions.begin(), route.reactions.end());
    route.choices.assign(choices.begin(), choices.end());
    std::sort(route.choices.begin(), route.choices.end());
    out.push_back(std::move(route));
  }

  void extend(std::vector<NodeId> pending) {
    if (out.size() >= cap) return;
    if (pending.empty()) {
      materialize();
      return;
    }
    // resolve the smallest pending molecule first (deterministic order)
    std::size_t pick = 0;
    for (std::size_t i = 1; i < pending.size(); ++i)
      if (pending[i] < pending[pick]) pick = i;
    NodeId m = pending[pick];
    pending.erase(pending.begin() + static_cast<std::ptrdiff_t>(pick));

    const MoleculeNode& mn = g.molecule(m);
    if (mn.status != MolStatus::expanded) return;  // open or dead: no route through here
    for (NodeId r : mn.reaction_children) {
      bool cyclic = false;
      std::vector<NodeId> added;
      for (NodeId reactant : g.reaction(r).reactants) {
        if (reaches(reactant, m)) {
          cyclic = true;
          break;
        }
      }
      if (cyclic) continue;
      choices.push_back({m, r});
      std::vector<NodeId> next_pending = pending;
      for (NodeId reactant : g.reaction(r).reactants) {
        const MoleculeNode& rn = g.molecule(reactant);
        if (rn.purchasable) continue;
        if (choice_of(reactant)) continue;  // already resolved in this route
        bool queued = false;
        for (NodeId q : next_pending)
          if (q == reactant) queued = true;
        if (!queued) next_pending.push_back(reactant);
      }
      extend(std::move(next_pending));
      choices.pop_back();
      if (out.size() >= cap) return;
    }
  }
};

}  // namespace detail

/// Enumerates complete routes (one chosen reaction per unpurchasable
/// molecule, purchasable leaves, cycle-reentrant branches skipped), ordered
/// by descending product of reaction feasibilities. At most `max_routes` are
/// returned; enumeration stops after `enumeration_cap` complete routes, so
/// on dense graphs the ranking is over that prefix.
inline std::vector<Route> extract_routes(const SearchGraph& g, std::size_t max_routes,
                                         std::size_t enumeration_cap = 4096) {
  if (max_routes == 0) return {};
  const MoleculeNode& root = g.molecule(g.root());
  if (root.purchasable) {
    Route trivial;
    trivial.target = g.root();
    trivial.molecules.push_back(g.root());
    return {trivial};
  }
  detail::RouteEnumerator enumerator{g, std::max(max_routes, enumeration_cap), {}, {}};
  enumerator.extend({g.root()});
  std::vector<Route> routes = std::move(enumerator.out);

  std::vector<double> sigma(routes.size(), 1.0);
  for (std::size_t i = 0; i < routes.size(); ++i)
    for (NodeId r : routes[i].reactions) sigma[i] *= g.reaction(r).feasibility;
  std::vector<std::size_t> order(routes.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return sigma[a] > sigma[b]; });
  std::vector<Route> ranked;
  ranked.reserve(std::min(max_routes, routes.size()));
  for (std::size_t i = 0; i < order.size() && ranked.size() < max_routes; ++i)
    ranked.push_back(std::move(routes[order[i]]));
  return ranked;
}

// ---------------------------------------------------------------------------
// Full runs

struct RunConfig {
  int budget = 100;
  std::uint64_t seed = 0;  ///< drives the Monte-Carlo evaluation only
  int max_routes = 64;
  EvalSettings eval;
};

struct RunStats {
  std::string policy;
  int iterations = 0;
  bool exhausted = false;
  double wall_time_total_s = 0.0;
  double wall_time_per_iter_s = 0.0;
  std::size_t molecule_count = 0;
  std::size_t reaction_count = 0;
  int routes_found = 0;
  double final_ssp = 0.0;
  std::optional<double> final_ssp_std_error;
  std::string eval_method;
  std::optional<long> eval_samples;
  int candidates_discarded = 0;
  int candidates_rejected = 0;
  std::uint64_t update_visits = 0;
  std::uint64_t propagate_visits = 0;
  std::uint64_t selection_visits = 0;
};

struct RunResult {
  SearchGraph graph;
  RunStats stats;
  std::vector<Route> routes;
};

/// Runs the full loop for up to `budget` iterations, stopping early only on
/// an exhausted open set. Returns the final graph, extracted routes and run
/// statistics including the final SSP estimate.
inline RunResult run(const Molecule& target, const ExpansionModel& model,
                     const FeasibilityModel& feas, std::shared_ptr<const Inventory> inventory,
                     const SearchParams& p, const RunConfig& cfg, SelectionPolicy& policy) {
  p.validate();
  if (cfg.budget < 0) throw InvalidInputError("budget must be >= 0");

  SearchGraph g(target, std::move(inventory));
  RunStats stats;
  stats.policy = policy.name();

  const auto start = std::chrono::steady_clock::now();
  policy.init(g, p);
  for (int i = 0; i < cfg.budget; ++i) {
    StepReport rep = step(g, model, feas, p, policy);
    if (rep.exhausted) {
      stats.exhausted = true;
      break;
    }
    ++stats.iterations;
    stats.candidates_discarded += rep.candidates_discarded;
    stats.candidates_rejected += rep.candidates_rejected;
  }
  const auto end = std::chrono::steady_clock::now();
  stats.wall_time_total_s = std::chrono::duration<double>(end - start).count();
  stats.wall_time_per_iter_s =
      stats.iterations > 0 ? stats.wall_time_total_s / stats.iterations : 0.0;

  stats.molecule_count = g.molecule_count();
  stats.reaction_count = g.reaction_count();
  stats.update_visits = policy.update_visits;
  stats.propagate_visits = policy.propagate_visits;
  stats.selection_visits = policy.selection_visits;

  std::vector<Route> routes = extract_routes(g, static_cast<std::size_t>(cfg.max_routes));
  stats.routes_found = static_cast<int>(routes.size());

  EvalSettings eval = cfg.eval;
  if (eval.seed == 0) {
    std::uint64_t s = cfg.seed;
    eval.seed = detail::splitmix64(s);
  }
  EvalReport report = evaluate_graph(g, eval);
  stats.final_ssp = report.value;
  stats.final_ssp_std_error = report.std_error;
  stats.eval_method = report.method;
  stats.eval_samples = report.n;

  return RunResult{std::move(g), std::move(stats), std::move(routes)};
}

}  // namespace gradsyn

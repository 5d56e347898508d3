#pragma once

// Shared fixtures: hand-built worked instances with known probabilities, a
// blueprint builder, and deterministic random instance generators. The
// generators use a raw mt19937_64 with explicit bit-to-value mapping so the
// same seed produces the same instance on every platform.

#include <initializer_list>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "gradsyn/gradsyn.hpp"

namespace fixtures {

using namespace gradsyn;

inline std::shared_ptr<SetInventory> inv(std::initializer_list<std::string> names) {
  return std::make_shared<SetInventory>(std::vector<std::string>(names));
}

/// Search-mode fixed point into stored s, then gradient propagation: a fully
/// settled state for hand-built graphs.
inline void settle(SearchGraph& g, const SearchParams& p) {
  refresh_svalues(g, p);
  propagate(g, p);
}

// ---------------------------------------------------------------------------
// Worked instances

/// Two molecules feeding each other through a reaction cycle, each with an
/// external alternative:
///   M1: children {RA (f=0.8, purchasable A), R2 (f=0.5, reactant M2)}
///   M2: children {RB (f=0.6, purchasable B), R1 (f=0.5, reactant M1)}
/// Exact probabilities: P(M1) = 1-(1-0.8)(1-0.3) = 0.86,
///                      P(M2) = 1-(1-0.6)(1-0.4) = 0.76.
struct CyclePair {
  SearchGraph g;
  NodeId m1, ra, a, r2, m2, rb, b, r1;
};

inline CyclePair right_cycle() {
  SearchGraph g(Molecule("M1"), inv({"A", "B"}));
  g.mark_expanded(0);
  auto ra = g.add_reaction(0, {Molecule("A")}, 0.8, 1);   // RA=1, A=2
  auto r2 = g.add_reaction(0, {Molecule("M2")}, 0.5, 2);  // R2=3, M2=4
  g.mark_expanded(4);
  auto rb = g.add_reaction(4, {Molecule("B")}, 0.6, 1);   // RB=5, B=6
  auto r1 = g.add_reaction(4, {Molecule("M1")}, 0.5, 2);  // R1=7, closes the cycle
  return CyclePair{std::move(g), 0, ra.reaction, 2, r2.reaction, 4, rb.reaction, 6, r1.reaction};
}

/// Same cycle, but only M1 has an external alternative; M2 depends on M1
/// alone. Exact: P(M1)=0.8, P(R1)=0.4, P(M2)=0.4, P(R2)=0.2 — the cycle
/// cannot support itself.
struct CycleChain {
  SearchGraph g;
  NodeId m1, ra, a, r2, m2, r1;
};

inline CycleChain left_cycle() {
  SearchGraph g(Molecule("M1"), inv({"A"}));
  g.mark_expanded(0);
  auto ra = g.add_reaction(0, {Molecule("A")}, 0.8, 1);   // RA=1, A=2
  auto r2 = g.add_reaction(0, {Molecule("M2")}, 0.5, 2);  // R2=3, M2=4
  g.mark_expanded(4);
  auto r1 = g.add_reaction(4, {Molecule("M1")}, 0.5, 1);  // R1=5
  return CycleChain{std::move(g), 0, ra.reaction, 2, r2.reaction, 4, r1.reaction};
}

/// Shared-descendant instance (all top reactions have f = 1):
///   M0 <- R3 {M1, M3}
///   M1: R1 {M3, X}, R2 {M3}
///   M3: RM3 (f=0.5, purchasable P1);  X: RX (f=0.8, purchasable P2)
/// R1 success implies R2 success, so exactly: P(M1) = P(R2) = 0.5 and
/// P(R3) = P(M1 and M3) = 0.5, while the independence combinations give
/// 1-(1-0.4)(1-0.5) = 0.7 and 0.5*0.5 = 0.25.
struct SharedInstance {
  SearchGraph g;
  NodeId m0, r3, m1, m3, r1, r2, x, rm3, p1, rx, p2;
};

inline SharedInstance shared_descendants() {
  SearchGraph g(Molecule("M0"), inv({"P1", "P2"}));
  g.mark_expanded(0);
  auto r3 = g.add_reaction(0, {Molecule("M1"), Molecule("M3")}, 1.0, 1);  // R3=1, M1=2, M3=3
  g.mark_expanded(2);
  auto r1 = g.add_reaction(2, {Molecule("M3"), Molecule("X")}, 1.0, 1);  // R1=4, X=5
  auto r2 = g.add_reaction(2, {Molecule("M3")}, 1.0, 2);                 // R2=6
  g.mark_expanded(3);
  auto rm3 = g.add_reaction(3, {Molecule("P1")}, 0.5, 1);  // RM3=7, P1=8
  g.mark_expanded(5);
  auto rx = g.add_reaction(5, {Molecule("P2")}, 0.8, 1);  // RX=9, P2=10
  return SharedInstance{std::move(g), 0,          r3.reaction, 2, 3, r1.reaction,
                        r2.reaction,  5,          rm3.reaction, 8, rx.reaction, 10};
}

/// Priority instance: the root offers a cheap single-reactant path and a
/// high-feasibility two-reactant path.
///   T:  R1 (f=0.2, {M1}),  R2 (f=0.9, {M2, M3})
///   M1: R3 (f=0.1, {M4})
/// With s0 = 0 the two-reactant path carries zero gradient and M4 is
/// selected; with s0 = 0.05 the gradients of M2/M3 (0.045 scale) beat M4's.
struct PriorityGraph {
  SearchGraph g;
  NodeId t, r1, m1, r2, m2, m3, r3, m4;
};

inline PriorityGraph priority_graph() {
  SearchGraph g(Molecule("T"), inv({}));
  g.mark_expanded(0);
  auto r1 = g.add_reaction(0, {Molecule("M1")}, 0.2, 1);                 // R1=1, M1=2
  auto r2 = g.add_reaction(0, {Molecule("M2"), Molecule("M3")}, 0.9, 2); // R2=3, M2=4, M3=5
  g.mark_expanded(2);
  auto r3 = g.add_reaction(2, {Molecule("M4")}, 0.1, 1);  // R3=6, M4=7
  return PriorityGraph{std::move(g), 0, r1.reaction, 2, r2.reaction, 4, 5, r3.reaction, 7};
}

/// The same instance as a pluggable world, for driving the real planner
/// loop (feasibilities ride in the score field with ScoreFeasibility).
struct PriorityWorld {
  std::shared_ptr<TableExpansionModel> model;
  std::shared_ptr<SetInventory> inventory;
  Molecule target{"T"};
};

inline PriorityWorld priority_world() {
  PriorityWorld world;
  world.model = std::make_shared<TableExpansionModel>();
  world.inventory = std::make_shared<SetInventory>();
  std::vector<ReactionCandidate> t_cands(2);
  t_cands[0].reactants = {Molecule("M1")};
  t_cands[0].rank = 1;
  t_cands[0].score = 0.2;
  t_cands[1].reactants = {Molecule("M2"), Molecule("M3")};
  t_cands[1].rank = 2;
  t_cands[1].score = 0.9;
  world.model->set("T", std::move(t_cands));
  std::vector<ReactionCandidate> m1_cands(1);
  m1_cands[0].reactants = {Molecule("M4")};
  m1_cands[0].rank = 1;
  m1_cands[0].score = 0.1;
  world.model->set("M1", std::move(m1_cands));
  return world;
}

// ---------------------------------------------------------------------------
// Blueprint builder

struct Blueprint {
  struct Reaction {
    std::string product;
    std::vector<std::string> reactants;
    double feasibility = 0.5;
    int rank = 1;
  };
  std::string target = "t0";
  std::vector<Reaction> reactions;  ///< products must appear before first use
  std::set<std::string> purchasable;
};

inline SearchGraph build(const Blueprint& blueprint) {
  auto inventory = std::make_shared<SetInventory>();
  for (const std::string& m : blueprint.purchasable) inventory->insert(m);
  SearchGraph g(Molecule(blueprint.target), inventory);
  for (const auto& r : blueprint.reactions) {
    auto product = g.find_molecule(r.product);
    if (!product) throw std::runtime_error("blueprint product not in graph yet: " + r.product);
    if (g.molecule(*product).status == MolStatus::open) g.mark_expanded(*product);
    std::vector<Molecule> reactants;
    for (const std::string& m : r.reactants) reactants.emplace_back(m);
    g.add_reaction(*product, reactants, r.feasibility, r.rank);
  }
  return g;
}

// ---------------------------------------------------------------------------
// Random instance generators

struct Rng {
  std::mt19937_64 engine;
  explicit Rng(std::uint64_t seed) : engine(seed) {}
  double unit() { return gradsyn::detail::unit_double(engine()); }
  int below(int n) { return static_cast<int>(engine() % static_cast<std::uint64_t>(n)); }
  double in(double lo, double hi) { return lo + (hi - lo) * unit(); }
};

/// Random tree: all molecules distinct, no sharing. Leaves are purchasable
/// or open; internal molecules are expanded with 1..2 reactions of 1..3
/// fresh reactants each.
inline SearchGraph random_tree(std::uint64_t seed, int max_reactions = 12) {
  Rng rng(seed);
  Blueprint bp;
  int counter = 0;
  auto fresh = [&] { return "t" + std::to_string(++counter); };
  struct Item {
    std::string name;
    int depth;
  };
  std::vector<Item> frontier{{bp.target, 0}};
  int budget = 1 + rng.below(max_reactions);
  std::size_t head = 0;
  while (head < frontier.size() && static_cast<int>(bp.reactions.size()) < budget) {
    Item item = frontier[head++];
    int n_reactions = 1 + rng.below(2);
    for (int i = 0; i < n_reactions && static_cast<int>(bp.reactions.size()) < budget; ++i) {
      Blueprint::Reaction r;
      r.product = item.name;
      r.feasibility = rng.in(0.15, 0.95);
      r.rank = i + 1;
      int n_reactants = 1 + rng.below(3);
      for (int j = 0; j < n_reactants; ++j) {
        std::string child = fresh();
        r.reactants.push_back(child);
        double u = rng.unit();
        if (item.depth >= 3 || u < 0.45)
          bp.purchasable.insert(child);
        else if (u < 0.70)
          ;  // open leaf
        else
          frontier.push_back({child, item.depth + 1});
      }
      bp.reactions.push_back(std::move(r));
    }
  }
  return build(bp);
}

/// Random acyclic instance with shared molecules. Every molecule carries a
/// level; reactants sit strictly deeper than their product, so the graph is
/// a DAG by construction.
inline SearchGraph random_dag(std::uint64_t seed, int max_nodes = 40, int min_root_reactions = 1) {
  Rng rng(seed);
  Blueprint bp;
  int counter = 0;
  std::map<std::string, int> level{{bp.target, 0}};
  std::vector<std::string> expandable{bp.target};           // not yet expanded, not purchasable
  std::vector<std::vector<std::string>> by_level(16);       // shareable molecules per level
  auto fresh = [&](int lvl) {
    std::string name = "d" + std::to_string(++counter);
    level[name] = lvl;
    if (lvl < static_cast<int>(by_level.size())) by_level[static_cast<std::size_t>(lvl)].push_back(name);
    return name;
  };
  std::size_t nodes = 1;
  std::size_t head = 0;
  while (head < expandable.size() && nodes < static_cast<std::size_t>(max_nodes)) {
    std::string product = expandable[head++];
    int lvl = level[product];
    if (lvl > 4) continue;  // stays an open leaf
    int n_reactions = (product == bp.target ? min_root_reactions : 1) + rng.below(2);
    for (int i = 0; i < n_reactions; ++i) {
      Blueprint::Reaction r;
      r.product = product;
      r.feasibility = rng.in(0.15, 0.95);
      r.rank = i + 1;
      int n_reactants = 1 + rng.below(3);
      for (int j = 0; j < n_reactants; ++j) {
        // share an existing deeper molecule sometimes
        std::string child;
        bool shared = false;
        if (rng.unit() < 0.35) {
          int deeper = lvl + 1 + rng.below(2);
          if (deeper < static_cast<int>(by_level.size()) &&
              !by_level[static_cast<std::size_t>(deeper)].empty()) {
            auto& pool = by_level[static_cast<std::size_t>(deeper)];
            child = pool[static_cast<std::size_t>(rng.below(static_cast<int>(pool.size())))];
            shared = true;
          }
        }
        if (!shared) {
          child = fresh(lvl + 1);
          ++nodes;
          double u = rng.unit();
          if (u < 0.45)
            bp.purchasable.insert(child);
          else if (u < 0.80)
            ;  // open leaf
          else
            expandable.push_back(child);
        }
        bool dup = false;
        for (const std::string& existing : r.reactants)
          if (existing == child) dup = true;
        if (!dup) r.reactants.push_back(child);
      }
      bp.reactions.push_back(std::move(r));
      ++nodes;
    }
  }
  return build(bp);
}

/// Random instance that additionally allows back-references to shallower
/// molecules, producing cycles and heavy sharing.
inline SearchGraph random_cyclic(std::uint64_t seed, int max_nodes = 60) {
  Rng rng(seed);
  Blueprint bp;
  int counter = 0;
  std::vector<std::string> all{bp.target};
  std::vector<std::string> expandable{bp.target};
  auto fresh = [&] {
    std::string name = "c" + std::to_string(++counter);
    all.push_back(name);
    return name;
  };
  std::size_t nodes = 1;
  std::size_t head = 0;
  while (head < expandable.size() && nodes < static_cast<std::size_t>(max_nodes)) {
    std::string product = expandable[head++];
    int n_reactions = 1 + rng.below(2);
    for (int i = 0; i < n_reactions; ++i) {
      Blueprint::Reaction r;
      r.product = product;
      r.feasibility = rng.in(0.15, 0.95);
      r.rank = i + 1;
      int n_reactants = 1 + rng.below(3);
      for (int j = 0; j < n_reactants; ++j) {
        std::string child;
        if (rng.unit() < 0.20 && all.size() > 1) {
          child = all[static_cast<std::size_t>(rng.below(static_cast<int>(all.size())))];
          if (child == product) child = all[0];  // at least make it interesting
        } else {
          child = fresh();
          ++nodes;
          double u = rng.unit();
          if (u < 0.40)
            bp.purchasable.insert(child);
          else if (u < 0.75)
            ;  // open leaf
          else
            expandable.push_back(child);
        }
        bool dup = false;
        for (const std::string& existing : r.reactants)
          if (existing == child) dup = true;
        if (!dup) r.reactants.push_back(child);
      }
      bp.reactions.push_back(std::move(r));
      ++nodes;
    }
  }
  return build(bp);
}

/// Random instance sized for exact enumeration (reaction count capped).
inline SearchGraph random_guarded(std::uint64_t seed, int max_reactions = 16) {
  Rng rng(seed);
  Blueprint bp;
  int counter = 0;
  std::vector<std::string> all{bp.target};
  std::vector<std::string> expandable{bp.target};
  auto fresh = [&] {
    std::string name = "g" + std::to_string(++counter);
    all.push_back(name);
    return name;
  };
  std::size_t head = 0;
  while (head < expandable.size() && static_cast<int>(bp.reactions.size()) < max_reactions) {
    std::string product = expandable[head++];
    int n_reactions = 1 + rng.below(2);
    for (int i = 0; i < n_reactions && static_cast<int>(bp.reactions.size()) < max_reactions; ++i) {
      Blueprint::Reaction r;
      r.product = product;
      r.feasibility = rng.in(0.2, 0.9);
      r.rank = i + 1;
      int n_reactants = 1 + rng.below(2);
      for (int j = 0; j < n_reactants; ++j) {
        std::string child;
        if (rng.unit() < 0.25 && all.size() > 1) {
          child = all[static_cast<std::size_t>(rng.below(static_cast<int>(all.size())))];
        } else {
          child = fresh();
          double u = rng.unit();
          if (u < 0.55)
            bp.purchasable.insert(child);
          else if (u < 0.8)
            ;  // open leaf
          else
            expandable.push_back(child);
        }
        bool dup = false;
        for (const std::string& existing : r.reactants)
          if (existing == child) dup = true;
        if (!dup) r.reactants.push_back(child);
      }
      bp.reactions.push_back(std::move(r));
    }
  }
  return build(bp);
}

}  // namespace fixtures

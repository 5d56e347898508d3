#pragma once

// Ground-truth SSP computation. Under a fixed feasibility sample, success is
// the least fixed point of "purchasable, or some feasible reaction with all
// reactants successful" — starting from all-false, so a cycle can never
// justify itself. exact_ssp enumerates all feasibility assignments (guarded
// by reaction count, the problem is NP-hard in general); mc_ssp estimates by
// seeded sampling.

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "gradsyn/graph.hpp"
#include "gradsyn/hash.hpp"
#include "gradsyn/route.hpp"

namespace gradsyn {

/// One realization of the reaction feasibility process: every reaction node
/// maps to feasible (1) or not (0). Buyability is deterministic and comes
/// from the molecule nodes' purchasable flags (binary buyability).
struct FeasibilitySample {
  std::unordered_map<NodeId, bool> assignment;
};

/// Root success under one sample, computed as a least fixed point by
/// iterating to stability (pass bound: node count). Missing assignments are
/// an error.
inline bool success_under_sample(const SearchGraph& g, const FeasibilitySample& fs) {
  const std::size_t n = g.node_count();
  std::vector<char> feasible(n, 0);
  for (NodeId x = 0; x < n; ++x) {
    if (g.kind(x) != NodeKind::reaction) continue;
    auto it = fs.assignment.find(x);
    if (it == fs.assignment.end())
      throw InvalidInputError("feasibility sample misses reaction " + std::to_string(x));
    feasible[x] = it->second ? 1 : 0;
  }

  std::vector<char> succ(n, 0);
  for (std::size_t pass = 0; pass < n; ++pass) {
    bool changed = false;
    for (NodeId x = 0; x < n; ++x) {
      if (succ[x]) continue;
      bool now = false;
      if (g.kind(x) == NodeKind::molecule) {
        const MoleculeNode& m = g.molecule(x);
        if (m.purchasable) {
          now = true;
        } else {
          for (NodeId r : m.reaction_children)
            if (succ[r]) {
              now = true;
              break;
            }
        }
      } else {
        const ReactionNode& r = g.reaction(x);
        if (feasible[x]) {
          now = true;
          for (NodeId m : r.reactants)
            if (!succ[m]) {
              now = false;
              break;
            }
        }
      }
      if (now) {
        succ[x] = 1;
        changed = true;
      }
    }
    if (!changed) break;
  }
  return succ[g.root()] != 0;
}

namespace detail {

/// Worklist version of the least-fixed-point success computation, O(edges).
/// `feasible` is indexed by position in `reaction_ids`. Fills `succ` (node
/// id indexed) and returns nothing; equivalent to the sweep in
/// success_under_sample.
inline void success_fixed_point(const SearchGraph& g, const std::vector<NodeId>& reaction_ids,
                                const std::vector<char>& feasible,
                                const std::vector<std::uint32_t>& reaction_slot,
                                std::vector<char>& succ, std::vector<std::uint32_t>& remaining) {
  const std::size_t n = g.node_count();
  succ.assign(n, 0);
  for (std::size_t i = 0; i < reaction_ids.size(); ++i)
    remaining[i] = static_cast<std::uint32_t>(g.reaction(reaction_ids[i]).reactants.size());

  std::vector<NodeId> queue;
  queue.reserve(n);
  for (NodeId x = 0; x < n; ++x)
    if (g.kind(x) == NodeKind::molecule && g.molecule(x).purchasable) {
      succ[x] = 1;
      queue.push_back(x);
    }
  for (std::size_t head = 0; head < queue.size(); ++head) {
    NodeId m = queue[head];
    for (NodeId r : g.molecule(m).reaction_parents) {
      std::uint32_t slot = reaction_slot[r];
      if (!feasible[slot]) continue;
      if (--remaining[slot] == 0) {
        succ[r] = 1;
        NodeId product = g.reaction(r).product;
        if (!succ[product]) {
          succ[product] = 1;
          queue.push_back(product);
        }
      }
    }
  }
}

struct EnumerationSetup {
  std::vector<NodeId> reaction_ids;
  std::vector<std::uint32_t> reaction_slot;  // node id -> position in reaction_ids
  std::vector<double> marginal;              // per position
};

inline EnumerationSetup enumeration_setup(const SearchGraph& g) {
  EnumerationSetup setup;
  setup.reaction_slot.assign(g.node_count(), 0);
  for (NodeId x = 0; x < g.node_count(); ++x)
    if (g.kind(x) == NodeKind::reaction) {
      setup.reaction_slot[x] = static_cast<std::uint32_t>(setup.reaction_ids.size());
      setup.reaction_ids.push_back(x);
      setup.marginal.push_back(g.reaction(x).feasibility);
    }
  return setup;
}

/// Exact probability that node `target` succeeds, enumerating the reactions
/// in the given order (the order only affects rounding, not the value).
inline double exact_probability_ordered(const SearchGraph& g, NodeId target,
                                        const EnumerationSetup& setup) {
  const std::size_t k = setup.reaction_ids.size();
  std::vector<char> feasible(k, 0);
  std::vector<char> succ;
  std::vector<std::uint32_t> remaining(k, 0);

  double total = 0.0;
  const std::uint64_t limit = std::uint64_t{1} << k;
  for (std::uint64_t mask = 0; mask < limit; ++mask) {
    double weight = 1.0;
    for (std::size_t i = 0; i < k; ++i) {
      bool on = (mask >> i) & 1;
      feasible[i] = on ? 1 : 0;
      weight *= on ? setup.marginal[i] : 1.0 - setup.marginal[i];
    }
    if (weight == 0.0) continue;
    success_fixed_point(g, setup.reaction_ids, feasible, setup.reaction_slot, succ, remaining);
    bool ok;
    if (g.kind(target) == NodeKind::molecule) {
      ok = succ[target] != 0;
    } else {
      ok = succ[target] != 0;  // reaction success already requires feasibility + reactants
    }
    if (ok) total += weight;
  }
  return total;
}

}  // namespace detail

constexpr int kDefaultExactGuard = 20;

/// Exact success probability of an arbitrary node (molecule or reaction) by
/// full enumeration of feasibility assignments. Refuses graphs with more
/// reactions than `guard`.
inline double exact_node_probability(const SearchGraph& g, NodeId target,
                                     int guard = kDefaultExactGuard) {
  if (target >= g.node_count()) throw NotFoundError("node id out of range");
  auto setup = detail::enumeration_setup(g);
  if (setup.reaction_ids.size() > static_cast<std::size_t>(guard))
    throw EnumerationLimitError("graph has " + std::to_string(setup.reaction_ids.size()) +
                                " reactions, over the exact-enumeration guard of " +
                                std::to_string(guard) + "; use mc_ssp instead");
  return detail::exact_probability_ordered(g, target, setup);
}

/// Exact SSP of the graph (root success probability).
inline double exact_ssp(const SearchGraph& g, int guard = kDefaultExactGuard) {
  return exact_node_probability(g, g.root(), guard);
}

/// Exact marginals and joint/disjunction probabilities of two nodes, from a
/// single enumeration. Used to check the independence inequalities.
struct PairProbabilities {
  double pa = 0.0;
  double pb = 0.0;
  double p_and = 0.0;
  double p_or = 0.0;
};

inline PairProbabilities exact_pair_probabilities(const SearchGraph& g, NodeId a, NodeId b,
                                                  int guard = kDefaultExactGuard) {
  auto setup = detail::enumeration_setup(g);
  if (setup.reaction_ids.size() > static_cast<std::size_t>(guard))
    throw EnumerationLimitError("graph exceeds the exact-enumeration guard");
  const std::size_t k = setup.reaction_ids.size();
  std::vector<char> feasible(k, 0);
  std::vector<char> succ;
  std::vector<std::uint32_t> remaining(k, 0);
  PairProbabilities out;
  const std::uint64_t limit = std::uint64_t{1} << k;
  for (std::uint64_t mask = 0; mask < limit; ++mask) {
    double weight = 1.0;
    for (std::size_t i = 0; i < k; ++i) {
      bool on = (mask >> i) & 1;
      feasible[i] = on ? 1 : 0;
      weight *= on ? setup.marginal[i] : 1.0 - setup.marginal[i];
    }
    if (weight == 0.0) continue;
    detail::success_fixed_point(g, setup.reaction_ids, feasible, setup.reaction_slot, succ,
                                remaining);
    bool sa = succ[a] != 0;
    bool sb = succ[b] != 0;
    if (sa) out.pa += weight;
    if (sb) out.pb += weight;
    if (sa && sb) out.p_and += weight;
    if (sa || sb) out.p_or += weight;
  }
  return out;
}

struct McResult {
  double estimate = 0.0;
  double std_error = 0.0;
  long n = 0;
};

/// Monte-Carlo SSP estimate over n independent samples. Sample i draws its
/// bits from the deterministic stream (seed, i), so the result depends only
/// on (graph, n, seed) — never on scheduling.
inline McResult mc_ssp(const SearchGraph& g, long n, std::uint64_t seed) {
  if (n < 1) throw InvalidInputError("sample count must be >= 1");
  auto setup = detail::enumeration_setup(g);
  const std::size_t k = setup.reaction_ids.size();
  std::vector<char> feasible(k, 0);
  std::vector<char> succ;
  std::vector<std::uint32_t> remaining(k, 0);
  const NodeId root = g.root();

  long hits = 0;
  for (long i = 0; i < n; ++i) {
    detail::HashStream stream(seed, static_cast<std::uint64_t>(i));
    for (std::size_t j = 0; j < k; ++j)
      feasible[j] = stream.next_unit() < setup.marginal[j] ? 1 : 0;
    detail::success_fixed_point(g, setup.reaction_ids, feasible, setup.reaction_slot, succ,
                                remaining);
    if (succ[root]) ++hits;
  }
  McResult out;
  out.n = n;
  out.estimate = static_cast<double>(hits) / static_cast<double>(n);
  out.std_error = std::sqrt(out.estimate * (1.0 - out.estimate) / static_cast<double>(n));
  return out;
}

/// Probability that a single route succeeds: the product of its reactions'
/// marginal feasibilities (leaves are purchasable by the route invariants,
/// so the buyability terms are all 1).
inline double route_sigma_probability(const SearchGraph& g, const Route& route) {
  validate_route(g, route);
  double p = 1.0;
  for (NodeId r : route.reactions) p *= g.reaction(r).feasibility;
  return p;
}

// ---------------------------------------------------------------------------
// Final-graph evaluation rule used by the harness

struct EvalSettings {
  enum class Mode { automatic, exact, mc };
  Mode mode = Mode::automatic;
  int exact_guard = kDefaultExactGuard;
  long mc_samples = 10000;
  std::uint64_t seed = 0;
};

struct EvalReport {
  std::string method;  ///< "exact" or "mc"
  double value = 0.0;
  std::optional<double> std_error;
  std::optional<long> n;
  std::size_t reactions_enumerated = 0;
};

/// Exact SSP when the reaction count fits under the guard, Monte-Carlo
/// otherwise (or as forced by the mode).
inline EvalReport evaluate_graph(const SearchGraph& g, const EvalSettings& settings) {
  EvalReport report;
  report.reactions_enumerated = g.reaction_count();
  bool exact = settings.mode == EvalSettings::Mode::exact ||
               (settings.mode == EvalSettings::Mode::automatic &&
                g.reaction_count() <= static_cast<std::size_t>(settings.exact_guard));
  if (exact) {
    report.method = "exact";
    report.value = exact_ssp(g, settings.exact_guard);
  } else {
    McResult mc = mc_ssp(g, settings.mc_samples, settings.seed);
    report.method = "mc";
    report.value = mc.estimate;
    report.std_error = mc.std_error;
    report.n = mc.n;
  }
  return report;
}

}  // namespace gradsyn

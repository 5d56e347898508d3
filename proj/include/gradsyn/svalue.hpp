#pragma once

// s-value computation. Three entry points:
//   local_s            one-node recomputation from current successor values
//   bottom_up_update   single-visit queue refresh after a graph change
//   fixed_point_evaluate  synchronous sweeps to the least fixed point
//
// The bottom-up update tolerates stale reads (a node may be recomputed before
// a child that sits later in the queue); errors do not accumulate because
// later updates revisit the affected region. The fixed-point evaluator exists
// to quantify exactly that gap and to evaluate finished graphs.

#include <cmath>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "gradsyn/graph.hpp"
#include "gradsyn/params.hpp"

namespace gradsyn {

namespace detail {

template <class SFn>
double local_s_with(const SearchGraph& g, NodeId x, const SearchParams& p, double open_s0,
                    SFn&& s_of) {
  if (g.kind(x) == NodeKind::molecule) {
    const MoleculeNode& m = g.molecule(x);
    if (m.purchasable) return 1.0;
    if (m.status == MolStatus::dead) return 0.0;
    if (m.status == MolStatus::open) return open_s0;
    if (m.reaction_children.empty())
      throw StateError("expanded molecule has no reactions; it should have been marked dead");
    double fail = 1.0;
    for (NodeId r : m.reaction_children) fail *= 1.0 - s_of(r);
    return p.theta_m * (1.0 - fail);
  }
  const ReactionNode& r = g.reaction(x);
  double v = p.theta_r * r.feasibility;
  for (NodeId m : r.reactants) v *= s_of(m);
  if (v > 1.0) v = 1.0;  // theta_r >= 1 can push the raw value past 1
  if (v < 0.0) v = 0.0;
  return v;
}

}  // namespace detail

/// Local rule: purchasable molecule -> 1, open -> p.s0, dead -> 0, expanded
/// molecule -> theta_m * (1 - prod(1 - s(R))), reaction -> clamp of
/// theta_r * f * prod(s(M)). Pure; reads successor values from the graph.
inline double local_s(const SearchGraph& g, NodeId x, const SearchParams& p) {
  return detail::local_s_with(g, x, p, p.s0, [&](NodeId y) { return g.s(y); });
}

/// Single-visit bottom-up refresh: seeds go into a FIFO queue; dequeuing a
/// node recomputes its stored s and enqueues its not-yet-enqueued
/// predecessors. Each node is recomputed at most once per call, so the walk
/// terminates on every graph, cyclic ones included. Returns the number of
/// nodes recomputed.
inline int bottom_up_update(SearchGraph& g, std::span<const NodeId> seeds, const SearchParams& p) {
  std::vector<char> enqueued(g.node_count(), 0);
  std::vector<NodeId> queue;
  queue.reserve(seeds.size() + 16);
  for (NodeId s : seeds) {
    if (s >= g.node_count()) throw NotFoundError("seed id not in graph");
    if (!enqueued[s]) {
      enqueued[s] = 1;
      queue.push_back(s);
    }
  }
  std::size_t head = 0;
  int visited = 0;
  while (head < queue.size()) {
    NodeId x = queue[head++];
    g.set_s(x, local_s(g, x, p));
    ++visited;
    auto push = [&](NodeId pre) {
      if (!enqueued[pre]) {
        enqueued[pre] = 1;
        queue.push_back(pre);
      }
    };
    if (g.kind(x) == NodeKind::molecule)
      for (NodeId r : g.molecule(x).reaction_parents) push(r);
    else
      push(g.reaction(x).product);
  }
  return visited;
}

struct FixedPointResult {
  std::vector<double> s;  ///< node id -> value
  bool converged = false;
  int sweeps = 0;
};

/// Values held fixed during fixed-point evaluation (e.g. a perturbed leaf).
using PinnedValues = std::unordered_map<NodeId, double>;

namespace detail {

inline FixedPointResult fixed_point_with_s0(const SearchGraph& g, const SearchParams& p,
                                            double open_s0, const PinnedValues& pinned) {
  const std::size_t n = g.node_count();
  for (const auto& [id, v] : pinned) {
    if (id >= n) throw NotFoundError("pinned node id not in graph");
    (void)v;
  }
  auto pin = [&](NodeId x) -> const double* {
    auto it = pinned.find(x);
    return it == pinned.end() ? nullptr : &it->second;
  };

  std::vector<double> cur(n, 0.0);
  std::vector<double> next(n, 0.0);
  for (NodeId x = 0; x < n; ++x) {
    if (const double* pv = pin(x)) {
      cur[x] = *pv;
    } else if (g.kind(x) == NodeKind::molecule) {
      const MoleculeNode& m = g.molecule(x);
      if (m.purchasable)
        cur[x] = 1.0;
      else if (m.status == MolStatus::open)
        cur[x] = open_s0;
      else
        cur[x] = 0.0;  // expanded and dead resolve during the sweeps
    }
  }

  FixedPointResult out;
  for (int sweep = 0; sweep < p.max_fixed_point_sweeps; ++sweep) {
    double delta = 0.0;
    for (NodeId x = 0; x < n; ++x) {
      const double* pv = pin(x);
      double v = pv ? *pv
                    : local_s_with(g, x, p, open_s0, [&](NodeId y) { return cur[y]; });
      next[x] = v;
      double d = std::abs(v - cur[x]);
      if (d > delta) delta = d;
    }
    cur.swap(next);
    ++out.sweeps;
    if (delta < p.fixed_point_tol) {
      out.converged = true;
      break;
    }
  }
  out.s = std::move(cur);
  return out;
}

}  // namespace detail

/// Synchronous (Jacobi) sweeps of the local rule over all nodes, in eval
/// mode: open molecules take p.eval_s0. Starts from the all-zero lower
/// bound, so on cyclic graphs the iteration climbs monotonically to the
/// least fixed point and sweep k carries information along paths of length
/// <= k. Stops when the largest per-sweep change drops below
/// p.fixed_point_tol or the sweep budget runs out (reported via the
/// converged flag). Does not mutate the graph. On acyclic graphs the
/// converged result equals a single reversed-topological-order pass exactly.
inline FixedPointResult fixed_point_evaluate(const SearchGraph& g, const SearchParams& p,
                                             const PinnedValues& pinned = {}) {
  return detail::fixed_point_with_s0(g, p, p.eval_s0, pinned);
}

/// Recomputes every stored s to the search-mode fixed point (open molecules
/// at p.s0). Utility for building consistent fixtures and refreshing graphs
/// that were constructed directly rather than through the planner loop.
inline FixedPointResult refresh_svalues(SearchGraph& g, const SearchParams& p) {
  FixedPointResult r = detail::fixed_point_with_s0(g, p, p.s0, {});
  for (NodeId x = 0; x < g.node_count(); ++x) g.set_s(x, r.s[x]);
  return r;
}

}  // namespace gradsyn

#pragma once

// Top-down gradient propagation: D(X) = d s(root) / d s(X) for every node.
// D(root) is pinned at 1; a reaction takes D from its product, a molecule
// sums over its parent reactions. Nodes are finalized once each, in
// dependency order where the graph allows it; a cycle that stalls the order
// is broken at the smallest stalled id, which then reads the stale stored D
// of its unfinished parents (their value from the previous call, initially 0).

#include <algorithm>
#include <cstdint>
#include <queue>
#include <vector>

#include "gradsyn/graph.hpp"
#include "gradsyn/params.hpp"

namespace gradsyn {

/// d s(r) / d s(m) for a reactant m of reaction r:
/// theta_r * f(r) * prod of the other reactants' s. Returns 0 when the local
/// reaction value sits on the saturated branch of the clamp.
inline double partial_reaction_wrt_reactant(const SearchGraph& g, NodeId r, NodeId m,
                                            const SearchParams& p) {
  const ReactionNode& rn = g.reaction(r);
  if (std::find(rn.reactants.begin(), rn.reactants.end(), m) == rn.reactants.end())
    throw InvalidInputError("molecule is not a reactant of this reaction");
  double raw = p.theta_r * rn.feasibility;
  double without = p.theta_r * rn.feasibility;
  for (NodeId mi : rn.reactants) {
    raw *= g.s(mi);
    if (mi != m) without *= g.s(mi);
  }
  if (raw > 1.0) return 0.0;
  return without;
}

/// d s(mp) / d s(r) for a child reaction r of expanded molecule mp:
/// theta_m * prod over the sibling reactions of (1 - s).
inline double partial_molecule_wrt_reaction(const SearchGraph& g, NodeId mp, NodeId r,
                                            const SearchParams& p) {
  const MoleculeNode& mn = g.molecule(mp);
  if (mn.purchasable || mn.status != MolStatus::expanded)
    throw InvalidInputError("product must be an expanded, unpurchasable molecule");
  if (std::find(mn.reaction_children.begin(), mn.reaction_children.end(), r) ==
      mn.reaction_children.end())
    throw InvalidInputError("reaction is not a child of this molecule");
  double v = p.theta_m;
  for (NodeId ri : mn.reaction_children)
    if (ri != r) v *= 1.0 - g.s(ri);
  return v;
}

/// Recomputes D for every node. Nodes unreachable from the root get D = 0.
/// Finalizes each node exactly once; returns the number of nodes finalized
/// (always the node count).
inline int propagate(SearchGraph& g, const SearchParams& p) {
  const std::size_t n = g.node_count();
  if (n == 0) return 0;
  const NodeId root = g.root();

  std::vector<char> reachable = descendants_of(g, root);

  // Zero unreachable nodes first so that summing over all parents below
  // needs no reachability filter.
  int finalized_count = 0;
  for (NodeId x = 0; x < n; ++x)
    if (!reachable[x]) {
      g.set_grad(x, 0.0);
      ++finalized_count;
    }

  // Pending parents per reachable node (edges parent -> child, i.e. product
  // -> reaction and reaction -> reactant). The root is processed first no
  // matter how many cyclic parents point at it.
  std::vector<std::uint32_t> pending(n, 0);
  for (NodeId x = 0; x < n; ++x) {
    if (!reachable[x]) continue;
    if (g.kind(x) == NodeKind::molecule) {
      std::uint32_t c = 0;
      for (NodeId r : g.molecule(x).reaction_parents)
        if (reachable[r]) ++c;
      pending[x] = c;
    } else {
      pending[x] = 1;  // the sole product; reachable whenever the reaction is
    }
  }
  pending[root] = 0;

  std::vector<char> finalized(n, 0);
  std::priority_queue<NodeId, std::vector<NodeId>, std::greater<NodeId>> ready;
  ready.push(root);

  std::size_t remaining = 0;
  for (NodeId x = 0; x < n; ++x)
    if (reachable[x]) ++remaining;

  auto finalize = [&](NodeId x) {
    double d;
    if (x == root) {
      d = 1.0;
    } else if (g.kind(x) == NodeKind::molecule) {
      d = 0.0;
      for (NodeId r : g.molecule(x).reaction_parents)
        d += g.grad(r) * partial_reaction_wrt_reactant(g, r, x, p);
    } else {
      const ReactionNode& rn = g.reaction(x);
      const MoleculeNode& prod = g.molecule(rn.product);
      double factor = (!prod.purchasable && prod.status == MolStatus::expanded)
                          ? partial_molecule_wrt_reaction(g, rn.product, x, p)
                          : 0.0;  // s of an open/dead/purchasable product is constant
      d = g.grad(rn.product) * factor;
    }
    g.set_grad(x, d);
    finalized[x] = 1;
    ++finalized_count;
    --remaining;
    auto release = [&](NodeId child) {
      if (!reachable[child] || finalized[child] || child == root) return;
      if (pending[child] > 0 && --pending[child] == 0) ready.push(child);
    };
    if (g.kind(x) == NodeKind::molecule)
      for (NodeId r : g.molecule(x).reaction_children) release(r);
    else
      for (NodeId m : g.reaction(x).reactants) release(m);
  };

  while (remaining > 0) {
    if (ready.empty()) {
      // A cycle stalls the order: break it at the smallest unfinalized id.
      for (NodeId x = 0; x < n; ++x)
        if (reachable[x] && !finalized[x]) {
          ready.push(x);
          break;
        }
    }
    NodeId x = ready.top();
    ready.pop();
    if (finalized[x]) continue;
    finalize(x);
  }
  return finalized_count;
}

}  // namespace gradsyn

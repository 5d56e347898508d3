#pragma once

// A route is a tree-shaped success certificate extracted from the search
// graph: the target plus, for every included unpurchasable molecule, exactly
// one chosen reaction with all of its reactants included. Leaves are
// purchasable. Routes are acyclic by construction even when the graph is not.

#include <utility>
#include <vector>

#include "gradsyn/graph.hpp"

namespace gradsyn {

struct Route {
  NodeId target = 0;
  std::vector<NodeId> molecules;  ///< included molecules, ascending id
  std::vector<NodeId> reactions;  ///< included reactions, ascending id
  /// (expanded molecule, chosen reaction) pairs, ascending by molecule id.
  std::vector<std::pair<NodeId, NodeId>> choices;
};

/// Checks the route invariants against the graph: the target matches, every
/// unpurchasable included molecule has exactly one chosen child reaction,
/// every chosen reaction's reactants are all included, included leaves are
/// purchasable, and the choice graph is acyclic. Throws InvalidInputError
/// with a description when a check fails.
inline void validate_route(const SearchGraph& g, const Route& route) {
  auto fail = [](const char* what) { throw InvalidInputError(std::string("invalid route: ") + what); };
  if (route.molecules.empty()) fail("no molecules");
  bool target_included = false;
  for (NodeId m : route.molecules)
    if (m == route.target) target_included = true;
  if (!target_included) fail("target not included");

  std::vector<std::pair<NodeId, NodeId>> choices = route.choices;
  auto choice_of = [&](NodeId m) -> const NodeId* {
    for (const auto& [mol, rxn] : choices)
      if (mol == m) return &rxn;
    return nullptr;
  };

  std::vector<char> in_route(g.node_count(), 0);
  for (NodeId m : route.molecules) {
    if (g.kind(m) != NodeKind::molecule) fail("molecule list contains a reaction id");
    in_route[m] = 1;
  }
  for (NodeId r : route.reactions) {
    if (g.kind(r) != NodeKind::reaction) fail("reaction list contains a molecule id");
    in_route[r] = 1;
  }

  std::size_t chosen = 0;
  for (NodeId m : route.molecules) {
    const MoleculeNode& mn = g.molecule(m);
    const NodeId* c = choice_of(m);
    if (mn.purchasable) {
      if (c) fail("purchasable molecule has a chosen reaction");
      continue;
    }
    if (!c) fail("unpurchasable molecule has no chosen reaction");
    ++chosen;
    bool is_child = false;
    for (NodeId r : mn.reaction_children)
      if (r == *c) is_child = true;
    if (!is_child) fail("chosen reaction is not a child of its molecule");
    if (!in_route[*c]) fail("chosen reaction missing from reaction list");
    for (NodeId reactant : g.reaction(*c).reactants)
      if (!in_route[reactant]) fail("reactant of a chosen reaction missing from the route");
  }
  if (chosen != route.reactions.size()) fail("reaction list does not match the choices");

  // acyclicity of the choice graph: depth-first over molecule -> chosen
  // reaction -> reactants with an on-path marker
  std::vector<char> state(g.node_count(), 0);  // 0 unseen, 1 on path, 2 done
  std::vector<std::pair<NodeId, std::size_t>> stack;
  auto enter = [&](NodeId m) {
    if (state[m] == 1) fail("choice graph contains a cycle");
    if (state[m] == 0) {
      state[m] = 1;
      stack.push_back({m, 0});
    }
  };
  enter(route.target);
  while (!stack.empty()) {
    auto& [m, next] = stack.back();
    const NodeId* c = choice_of(m);
    if (!c) {
      state[m] = 2;
      stack.pop_back();
      continue;
    }
    const auto& reactants = g.reaction(*c).reactants;
    if (next >= reactants.size()) {
      state[m] = 2;
      stack.pop_back();
      continue;
    }
    NodeId child = reactants[next++];
    if (state[child] == 1) fail("choice graph contains a cycle");
    if (state[child] == 0) {
      state[child] = 1;
      stack.push_back({child, 0});
    }
  }
}

}  // namespace gradsyn

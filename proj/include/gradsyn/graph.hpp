#pragma once

// AND-OR search graph. Molecule (OR) nodes and reaction (AND) nodes share one
// dense id space in insertion order; insertion order is the global tie-break
// key everywhere. Molecules are deduplicated by canonical string, reactions
// by (product, sorted reactant set) signature. Cycles are permitted; nodes
// are never removed.

#include <algorithm>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "gradsyn/errors.hpp"
#include "gradsyn/models.hpp"
#include "gradsyn/molecule.hpp"

namespace gradsyn {

using NodeId = std::uint32_t;

enum class NodeKind : std::uint8_t { molecule, reaction };

enum class MolStatus : std::uint8_t { open, expanded, dead };

inline const char* to_string(MolStatus s) {
  switch (s) {
    case MolStatus::open: return "open";
    case MolStatus::expanded: return "expanded";
    case MolStatus::dead: return "dead";
  }
  return "?";
}

struct MoleculeNode {
  NodeId id = 0;
  Molecule molecule;
  bool purchasable = false;
  MolStatus status = MolStatus::open;
  double s = 0.0;    ///< current success-probability estimate
  double grad = 0.0; ///< D = d s(root) / d s(this)
  std::vector<NodeId> reaction_children;  ///< Suc(M): reactions producing this molecule
  std::vector<NodeId> reaction_parents;   ///< Pre(M): reactions consuming this molecule
};

struct ReactionNode {
  NodeId id = 0;
  NodeId product = 0;             ///< sole predecessor
  std::vector<NodeId> reactants;  ///< Suc(R): nonempty, no duplicates
  double feasibility = 1.0;       ///< f(R) in (0, 1]
  int rank = 1;                   ///< position in the backward model output
  double s = 0.0;
  double grad = 0.0;
};

struct AddReactionResult {
  NodeId reaction = 0;
  std::vector<NodeId> new_molecules;  ///< molecule nodes created by this call
  bool created = false;               ///< false when the signature already existed
};

class SearchGraph {
 public:
  /// Creates a graph containing only the root molecule. A purchasable root
  /// starts with s = 1 and is not open; anything else starts open.
  SearchGraph(const Molecule& target, std::shared_ptr<const Inventory> inventory)
      : inventory_(std::move(inventory)) {
    if (target.canonical.empty()) throw InvalidInputError("target molecule must not be empty");
    if (!inventory_) throw InvalidInputError("inventory must not be null");
    root_ = intern_molecule(target);
  }

  // --- basic access -------------------------------------------------------

  std::size_t node_count() const { return slots_.size(); }
  std::size_t molecule_count() const { return molecules_.size(); }
  std::size_t reaction_count() const { return reactions_.size(); }
  NodeId root() const { return root_; }
  const Inventory* inventory() const { return inventory_.get(); }

  NodeKind kind(NodeId id) const { return slot(id).kind; }

  const MoleculeNode& molecule(NodeId id) const {
    const Slot& sl = slot(id);
    if (sl.kind != NodeKind::molecule) throw InvalidInputError("node is not a molecule");
    return molecules_[sl.index];
  }

  const ReactionNode& reaction(NodeId id) const {
    const Slot& sl = slot(id);
    if (sl.kind != NodeKind::reaction) throw InvalidInputError("node is not a reaction");
    return reactions_[sl.index];
  }

  double s(NodeId id) const {
    const Slot& sl = slot(id);
    return sl.kind == NodeKind::molecule ? molecules_[sl.index].s : reactions_[sl.index].s;
  }

  double grad(NodeId id) const {
    const Slot& sl = slot(id);
    return sl.kind == NodeKind::molecule ? molecules_[sl.index].grad : reactions_[sl.index].grad;
  }

  void set_s(NodeId id, double value) {
    Slot sl = slot(id);
    (sl.kind == NodeKind::molecule ? molecules_[sl.index].s : reactions_[sl.index].s) = value;
  }

  void set_grad(NodeId id, double value) {
    Slot sl = slot(id);
    (sl.kind == NodeKind::molecule ? molecules_[sl.index].grad : reactions_[sl.index].grad) = value;
  }

  /// Test/experiment hook; the planner itself never rewrites feasibilities.
  void set_feasibility(NodeId id, double f) {
    Slot sl = slot(id);
    if (sl.kind != NodeKind::reaction) throw InvalidInputError("node is not a reaction");
    if (!(f > 0.0 && f <= 1.0)) throw InvalidInputError("feasibility must lie in (0, 1]");
    reactions_[sl.index].feasibility = f;
  }

  std::optional<NodeId> find_molecule(std::string_view canonical) const {
    auto it = molecule_index_.find(std::string(canonical));
    return it == molecule_index_.end() ? std::nullopt : std::optional<NodeId>(it->second);
  }

  // --- operations ---------------------------------------------------------

  /// Installs a reaction under `product`. Reactant molecules are resolved
  /// through the molecule index (reused when present, created otherwise;
  /// purchasable ones start with s = 1 and are never open). A duplicate
  /// (product, reactant set) signature returns the existing reaction id and
  /// leaves the graph unchanged. Duplicate reactants within one candidate
  /// are collapsed.
  AddReactionResult add_reaction(NodeId product, const std::vector<Molecule>& reactants,
                                 double feasibility, int rank) {
    if (product >= node_count()) throw NotFoundError("unknown product id");
    if (kind(product) != NodeKind::molecule) throw InvalidInputError("product must be a molecule node");
    if (reactants.empty()) throw InvalidInputError("reactants must not be empty");
    if (!(feasibility > 0.0 && feasibility <= 1.0))
      throw InvalidInputError("feasibility must lie in (0, 1]");
    if (rank < 1) throw InvalidInputError("rank must be >= 1");
    for (const Molecule& r : reactants)
      if (r.canonical.empty()) throw InvalidInputError("reactant molecule must not be empty");

    // collapse duplicates, preserve first-seen order
    std::vector<const Molecule*> unique;
    unique.reserve(reactants.size());
    for (const Molecule& r : reactants) {
      bool dup = false;
      for (const Molecule* u : unique)
        if (u->canonical == r.canonical) {
          dup = true;
          break;
        }
      if (!dup) unique.push_back(&r);
    }

    std::vector<std::string> sorted;
    sorted.reserve(unique.size());
    for (const Molecule* u : unique) sorted.push_back(u->canonical);
    std::sort(sorted.begin(), sorted.end());
    std::string sig = std::to_string(product);
    for (const std::string& c : sorted) {
      sig.push_back('\x1f');
      sig += c;
    }
    if (auto it = reaction_index_.find(sig); it != reaction_index_.end())
      return {it->second, {}, false};

    if (!inventory_)
      throw StateError("graph was deserialized without an inventory; cannot add reactions");

    AddReactionResult result;
    std::vector<NodeId> reactant_ids;
    reactant_ids.reserve(unique.size());
    for (const Molecule* u : unique) {
      auto it = molecule_index_.find(u->canonical);
      if (it != molecule_index_.end()) {
        reactant_ids.push_back(it->second);
      } else {
        NodeId id = intern_molecule(*u);
        reactant_ids.push_back(id);
        result.new_molecules.push_back(id);
      }
    }

    NodeId rid = static_cast<NodeId>(slots_.size());
    slots_.push_back({NodeKind::reaction, static_cast<std::uint32_t>(reactions_.size())});
    ReactionNode rn;
    rn.id = rid;
    rn.product = product;
    rn.reactants = reactant_ids;
    rn.feasibility = feasibility;
    rn.rank = rank;
    reactions_.push_back(std::move(rn));
    reaction_index_.emplace(std::move(sig), rid);

    molecules_[slot(product).index].reaction_children.push_back(rid);
    for (NodeId mid : reactant_ids) molecules_[slot(mid).index].reaction_parents.push_back(rid);

    result.reaction = rid;
    result.created = true;
    return result;
  }

  /// Open molecules in insertion order.
  std::vector<NodeId> open_nodes() const {
    std::vector<NodeId> out;
    for (const MoleculeNode& m : molecules_)
      if (m.status == MolStatus::open) out.push_back(m.id);
    return out;
  }

  /// Marks an open molecule as dead (expansion produced no reactions).
  /// Dead is permanent: s = 0 and the node is excluded from all selection.
  void mark_dead(NodeId id) {
    MoleculeNode& m = molecule_mut(id);
    if (m.status != MolStatus::open) throw StateError("only open molecules can be marked dead");
    m.status = MolStatus::dead;
    m.s = 0.0;
  }

  /// Marks an open molecule as expanded (its reactions are being installed).
  void mark_expanded(NodeId id) {
    MoleculeNode& m = molecule_mut(id);
    if (m.status != MolStatus::open) throw StateError("only open molecules can be expanded");
    m.status = MolStatus::expanded;
  }

  // --- deserialization ----------------------------------------------------

  /// Rebuilds a graph from node records (ids must be dense and consistent
  /// with the adjacency lists). The result carries no inventory, so no new
  /// reactions can be added; everything else works.
  static SearchGraph reconstruct(std::vector<MoleculeNode> molecules,
                                 std::vector<ReactionNode> reactions, NodeId root) {
    SearchGraph g;
    std::size_t total = molecules.size() + reactions.size();
    g.slots_.resize(total, Slot{NodeKind::molecule, 0});
    std::vector<char> used(total, 0);
    auto claim = [&](NodeId id, NodeKind k, std::uint32_t index) {
      if (id >= total || used[id]) throw InvalidInputError("node ids must be dense and unique");
      used[id] = 1;
      g.slots_[id] = Slot{k, index};
    };
    for (std::size_t i = 0; i < molecules.size(); ++i)
      claim(molecules[i].id, NodeKind::molecule, static_cast<std::uint32_t>(i));
    for (std::size_t i = 0; i < reactions.size(); ++i)
      claim(reactions[i].id, NodeKind::reaction, static_cast<std::uint32_t>(i));
    g.molecules_ = std::move(molecules);
    g.reactions_ = std::move(reactions);
    if (root >= total || g.slots_[root].kind != NodeKind::molecule)
      throw InvalidInputError("root must be a molecule node");
    g.root_ = root;
    for (const MoleculeNode& m : g.molecules_) {
      if (!g.molecule_index_.emplace(m.molecule.canonical, m.id).second)
        throw InvalidInputError("duplicate canonical molecule: " + m.molecule.canonical);
    }
    for (const ReactionNode& r : g.reactions_) {
      if (g.kind(r.product) != NodeKind::molecule)
        throw InvalidInputError("reaction product must be a molecule");
      if (r.reactants.empty()) throw InvalidInputError("reaction must have reactants");
      for (NodeId m : r.reactants)
        if (m >= total || g.kind(m) != NodeKind::molecule)
          throw InvalidInputError("reactant edges must point at molecules");
    }
    return g;
  }

 private:
  struct Slot {
    NodeKind kind;
    std::uint32_t index;
  };

  SearchGraph() = default;

  const Slot& slot(NodeId id) const {
    if (id >= slots_.size()) throw NotFoundError("node id out of range");
    return slots_[id];
  }

  MoleculeNode& molecule_mut(NodeId id) {
    const Slot& sl = slot(id);
    if (sl.kind != NodeKind::molecule) throw InvalidInputError("node is not a molecule");
    return molecules_[sl.index];
  }

  NodeId intern_molecule(const Molecule& m) {
    NodeId id = static_cast<NodeId>(slots_.size());
    slots_.push_back({NodeKind::molecule, static_cast<std::uint32_t>(molecules_.size())});
    MoleculeNode node;
    node.id = id;
    node.molecule = m;
    node.purchasable = inventory_->purchasable(m);
    if (node.purchasable) {
      node.status = MolStatus::expanded;  // terminal, never open
      node.s = 1.0;
    }
    molecules_.push_back(std::move(node));
    molecule_index_.emplace(m.canonical, id);
    return id;
  }

  std::vector<Slot> slots_;
  std::vector<MoleculeNode> molecules_;
  std::vector<ReactionNode> reactions_;
  NodeId root_ = 0;
  std::unordered_map<std::string, NodeId> molecule_index_;
  std::unordered_map<std::string, NodeId> reaction_index_;
  std::shared_ptr<const Inventory> inventory_;
};

/// Descendant set of `start` (inclusive) over successor edges
/// (molecule -> child reactions -> reactants).
inline std::vector<char> descendants_of(const SearchGraph& g, NodeId start) {
  std::vector<char> seen(g.node_count(), 0);
  std::vector<NodeId> stack{start};
  seen[start] = 1;
  while (!stack.empty()) {
    NodeId x = stack.back();
    stack.pop_back();
    auto visit = [&](NodeId y) {
      if (!seen[y]) {
        seen[y] = 1;
        stack.push_back(y);
      }
    };
    if (g.kind(x) == NodeKind::molecule)
      for (NodeId r : g.molecule(x).reaction_children) visit(r);
    else
      for (NodeId m : g.reaction(x).reactants) visit(m);
  }
  return seen;
}

/// True when adding a reaction under `product` with the given existing
/// reactant molecules would close a directed cycle.
inline bool would_close_cycle(const SearchGraph& g, NodeId product,
                              const std::vector<NodeId>& existing_reactants) {
  for (NodeId m : existing_reactants) {
    if (m == product) return true;
    std::vector<char> reach = descendants_of(g, m);
    if (reach[product]) return true;
  }
  return false;
}

}  // namespace gradsyn

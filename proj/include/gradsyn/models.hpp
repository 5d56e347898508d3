#pragma once

// World definitions: backward expansion models B(M), feasibility models f(R)
// and purchasable-molecule inventories I. Models are read-only after
// construction and safe to share across workers.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "gradsyn/errors.hpp"
#include "gradsyn/hash.hpp"
#include "gradsyn/molecule.hpp"

namespace gradsyn {

/// One candidate single-product reaction proposed by a backward model.
struct ReactionCandidate {
  std::vector<Molecule> reactants;  ///< nonempty
  int rank = 1;                     ///< 1-based position in the model output
  std::optional<double> score;      ///< optional raw model score
};

/// Backward expansion model B(M). Implementations must be deterministic for a
/// fixed configuration and must emit ranks 1..n with no gaps.
class ExpansionModel {
 public:
  virtual ~ExpansionModel() = default;
  virtual std::vector<ReactionCandidate> expand(const Molecule& m) const = 0;
};

/// Marginal feasibility of a proposed reaction, in (0, 1].
class FeasibilityModel {
 public:
  virtual ~FeasibilityModel() = default;
  virtual double feasibility(int rank, std::optional<double> score) const = 0;
};

/// Purchasable-molecule predicate.
class Inventory {
 public:
  virtual ~Inventory() = default;
  virtual bool purchasable(const Molecule& m) const = 0;
};

// ---------------------------------------------------------------------------
// Feasibility models

/// Constant model: every reaction gets f(R) = 0.5.
inline double constant_feasibility(int rank) {
  if (rank < 1) throw InvalidInputError("rank must be >= 1");
  return 0.5;
}

/// Rank model: f(R) = 0.75 / (1 + rank/10), decreasing in rank.
inline double rank_feasibility(int rank) {
  if (rank < 1) throw InvalidInputError("rank must be >= 1");
  return 0.75 / (1.0 + static_cast<double>(rank) / 10.0);
}

class ConstantFeasibility final : public FeasibilityModel {
 public:
  double feasibility(int rank, std::optional<double>) const override {
    return constant_feasibility(rank);
  }
};

class RankFeasibility final : public FeasibilityModel {
 public:
  double feasibility(int rank, std::optional<double>) const override {
    return rank_feasibility(rank);
  }
};

/// Passes the candidate's score field through as f(R). Lets reaction files
/// pin an explicit probability per reaction; both built-in models above
/// ignore scores entirely.
class ScoreFeasibility final : public FeasibilityModel {
 public:
  double feasibility(int rank, std::optional<double> score) const override {
    if (rank < 1) throw InvalidInputError("rank must be >= 1");
    if (!score) throw InvalidInputError("score feasibility requires a score on every reaction");
    if (!(*score > 0.0 && *score <= 1.0))
      throw InvalidInputError("score used as feasibility must lie in (0, 1]");
    return *score;
  }
};

inline std::unique_ptr<FeasibilityModel> make_feasibility(const std::string& name) {
  if (name == "constant") return std::make_unique<ConstantFeasibility>();
  if (name == "rank") return std::make_unique<RankFeasibility>();
  if (name == "score") return std::make_unique<ScoreFeasibility>();
  throw InvalidInputError("unknown feasibility model: " + name);
}

// ---------------------------------------------------------------------------
// Inventories

/// Explicit purchasable set.
class SetInventory final : public Inventory {
 public:
  SetInventory() = default;
  explicit SetInventory(std::vector<std::string> molecules) {
    for (auto& m : molecules) set_.insert(std::move(m));
  }

  bool purchasable(const Molecule& m) const override { return set_.count(m.canonical) > 0; }

  void insert(std::string canonical) { set_.insert(std::move(canonical)); }
  std::size_t size() const { return set_.size(); }
  const std::unordered_set<std::string>& contents() const { return set_; }

 private:
  std::unordered_set<std::string> set_;
};

// ---------------------------------------------------------------------------
// Lookup-table expansion model

/// Expansion model backed by an explicit product -> candidates table, e.g.
/// loaded from a reaction file. Candidates are stored sorted by rank.
class TableExpansionModel final : public ExpansionModel {
 public:
  TableExpansionModel() = default;

  void set(const std::string& product, std::vector<ReactionCandidate> candidates) {
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const ReactionCandidate& a, const ReactionCandidate& b) { return a.rank < b.rank; });
    table_[product] = std::move(candidates);
  }

  std::vector<ReactionCandidate> expand(const Molecule& m) const override {
    auto it = table_.find(m.canonical);
    if (it == table_.end()) return {};
    return it->second;
  }

  const std::map<std::string, std::vector<ReactionCandidate>>& table() const { return table_; }

 private:
  // ordered so exports are deterministic
  std::map<std::string, std::vector<ReactionCandidate>> table_;
};

// ---------------------------------------------------------------------------
// Synthetic worlds

/// Parameters of a deterministic pseudo-random reaction world. Tokens are
/// "m<id>" where id encodes a synthetic depth (id / tokens_per_depth); all
/// expansion and purchasability decisions are pure functions of (seed, id).
struct SyntheticWorldConfig {
  std::uint64_t seed = 42;
  int branching = 3;        ///< max reactions per molecule
  int max_reactants = 3;    ///< reactants per reaction, in 1..3
  int max_depth = 6;        ///< molecules at this depth or deeper never expand
  double dead_end_fraction = 0.08;  ///< chance a molecule expands to zero reactions
  double share_fraction = 0.20;     ///< chance a reactant comes from the next depth's shared pool
  double cycle_fraction = 0.05;     ///< chance a reactant refers back to depth <= current
  int shared_pool = 24;             ///< size of the per-depth shared token pool
  double buy_base = 0.15;           ///< purchasable probability at depth 0
  double buy_slope = 0.20;          ///< added purchasable probability per depth level
  int tokens_per_depth = 4096;      ///< id stride encoding the depth

  void validate() const {
    if (branching < 1 || branching > 16) throw InvalidInputError("branching must be in 1..16");
    if (max_reactants < 1 || max_reactants > 3) throw InvalidInputError("max_reactants must be in 1..3");
    if (max_depth < 1) throw InvalidInputError("max_depth must be >= 1");
    if (tokens_per_depth < 2) throw InvalidInputError("tokens_per_depth must be >= 2");
    if (shared_pool < 1 || shared_pool >= tokens_per_depth)
      throw InvalidInputError("shared_pool must be in [1, tokens_per_depth)");
    for (double f : {dead_end_fraction, share_fraction, cycle_fraction})
      if (!(f >= 0.0 && f <= 1.0)) throw InvalidInputError("fractions must lie in [0, 1]");
    if (share_fraction + cycle_fraction > 1.0)
      throw InvalidInputError("share_fraction + cycle_fraction must be <= 1");
  }
};

/// Deterministic synthetic reaction world. Stateless: two instances with
/// equal configs behave identically.
class SyntheticWorld {
 public:
  explicit SyntheticWorld(SyntheticWorldConfig cfg) : cfg_(cfg) { cfg_.validate(); }

  const SyntheticWorldConfig& config() const { return cfg_; }

  Molecule token(int depth, int index) const {
    return Molecule("m" + std::to_string(static_cast<std::uint64_t>(depth) * cfg_.tokens_per_depth +
                                         static_cast<std::uint64_t>(index)));
  }

  /// Parses "m<id>"; throws InvalidInputError on malformed tokens.
  std::uint64_t parse_token(const Molecule& m) const {
    const std::string& t = m.canonical;
    if (t.size() < 2 || t[0] != 'm') throw InvalidInputError("malformed synthetic token: " + t);
    std::uint64_t id = 0;
    auto [ptr, ec] = std::from_chars(t.data() + 1, t.data() + t.size(), id);
    if (ec != std::errc() || ptr != t.data() + t.size())
      throw InvalidInputError("malformed synthetic token: " + t);
    return id;
  }

  int depth_of(std::uint64_t id) const {
    return static_cast<int>(id / static_cast<std::uint64_t>(cfg_.tokens_per_depth));
  }

  bool purchasable_token(const Molecule& m) const {
    std::uint64_t id = parse_token(m);
    int depth = depth_of(id);
    double prob = cfg_.buy_base + cfg_.buy_slope * depth;
    if (prob > 1.0) prob = 1.0;
    detail::HashStream h(cfg_.seed, detail::mix(0xB0Bu, id));
    return h.next_unit() < prob;
  }

  /// Deterministic fan-out of a molecule: up to `branching` reactions with
  /// 1..max_reactants reactants each. A configurable fraction of reactants
  /// reuses shared-pool or shallower tokens, which induces shared nodes and
  /// cycles in the search graph.
  std::vector<ReactionCandidate> expand_token(const Molecule& m) const {
    const std::uint64_t id = parse_token(m);
    const int depth = depth_of(id);
    if (depth >= cfg_.max_depth) return {};

    detail::HashStream h(cfg_.seed, detail::mix(0xE4Bu, id));
    if (h.next_unit() < cfg_.dead_end_fraction) return {};

    const int n_reactions = 1 + static_cast<int>(h.next_below(static_cast<std::uint64_t>(cfg_.branching)));
    const std::uint64_t stride = static_cast<std::uint64_t>(cfg_.tokens_per_depth);

    std::vector<ReactionCandidate> out;
    out.reserve(static_cast<std::size_t>(n_reactions));
    for (int i = 0; i < n_reactions; ++i) {
      ReactionCandidate cand;
      cand.rank = i + 1;
      const int n_reactants = 1 + static_cast<int>(h.next_below(static_cast<std::uint64_t>(cfg_.max_reactants)));
      std::set<std::uint64_t> seen;
      for (int j = 0; j < n_reactants; ++j) {
        const double u = h.next_unit();
        std::uint64_t t_depth;
        std::uint64_t t_index;
        if (u < cfg_.cycle_fraction) {
          // back-reference: any depth up to the current one, drawn from the
          // shared pool so it is likely to hit an existing node
          t_depth = h.next_below(static_cast<std::uint64_t>(depth) + 1);
          t_index = h.next_below(static_cast<std::uint64_t>(cfg_.shared_pool));
        } else if (u < cfg_.cycle_fraction + cfg_.share_fraction) {
          t_depth = static_cast<std::uint64_t>(depth) + 1;
          t_index = h.next_below(static_cast<std::uint64_t>(cfg_.shared_pool));
        } else {
          t_depth = static_cast<std::uint64_t>(depth) + 1;
          t_index = static_cast<std::uint64_t>(cfg_.shared_pool) +
                    h.next_below(stride - static_cast<std::uint64_t>(cfg_.shared_pool));
        }
        std::uint64_t t_id = t_depth * stride + t_index;
        if (t_id == id) t_id = t_depth * stride + (t_index + 1) % stride;  // avoid trivial self-loop
        seen.insert(t_id);
      }
      for (std::uint64_t t_id : seen) cand.reactants.emplace_back("m" + std::to_string(t_id));
      out.push_back(std::move(cand));
    }
    return out;
  }

 private:
  SyntheticWorldConfig cfg_;
};

class SyntheticExpansion final : public ExpansionModel {
 public:
  explicit SyntheticExpansion(SyntheticWorld world) : world_(std::move(world)) {}
  std::vector<ReactionCandidate> expand(const Molecule& m) const override {
    return world_.expand_token(m);
  }

 private:
  SyntheticWorld world_;
};

class SyntheticInventory final : public Inventory {
 public:
  explicit SyntheticInventory(SyntheticWorld world) : world_(std::move(world)) {}
  bool purchasable(const Molecule& m) const override { return world_.purchasable_token(m); }

 private:
  SyntheticWorld world_;
};

// ---------------------------------------------------------------------------
// World slices: enumeration and solvability

/// Closed set of reactions reachable from one target, plus the purchasable
/// molecules seen along the way. Maps are ordered so exports are stable.
struct WorldSlice {
  std::map<std::string, std::vector<ReactionCandidate>> reactions;
  std::set<std::string> purchasable;
  std::vector<std::string> molecules;  ///< discovery order
};

/// Breadth-first closure of the world under `expand`, starting at `target`.
/// Purchasable molecules terminate branches and are never expanded.
inline WorldSlice enumerate_world(const ExpansionModel& model, const Inventory& inv,
                                  const Molecule& target) {
  WorldSlice slice;
  std::unordered_set<std::string> seen;
  std::vector<Molecule> queue{target};
  seen.insert(target.canonical);
  for (std::size_t head = 0; head < queue.size(); ++head) {
    Molecule m = queue[head];
    slice.molecules.push_back(m.canonical);
    if (inv.purchasable(m)) {
      slice.purchasable.insert(m.canonical);
      continue;
    }
    auto candidates = model.expand(m);
    for (const auto& c : candidates)
      for (const auto& r : c.reactants)
        if (seen.insert(r.canonical).second) queue.push_back(r);
    slice.reactions[m.canonical] = std::move(candidates);
  }
  return slice;
}

/// True when at least one route exists in the slice assuming every reaction
/// works: least fixed point of "purchasable, or some reaction with all
/// reactants derivable".
inline bool slice_solvable(const WorldSlice& slice, const std::string& target) {
  std::unordered_set<std::string> ok(slice.purchasable.begin(), slice.purchasable.end());
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& [product, candidates] : slice.reactions) {
      if (ok.count(product)) continue;
      for (const auto& c : candidates) {
        bool all = !c.reactants.empty();
        for (const auto& r : c.reactants)
          if (!ok.count(r.canonical)) {
            all = false;
            break;
          }
        if (all) {
          ok.insert(product);
          changed = true;
          break;
        }
      }
    }
  }
  return ok.count(target) > 0;
}

}  // namespace gradsyn

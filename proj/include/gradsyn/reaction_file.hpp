#pragma once

// Reaction-file format: a JSON document defining a lookup-table world.
//
//   {
//     "reactions": {
//       "<product>": [ {"reactants": ["a", "b"], "rank": 1, "score": 0.9}, ... ],
//       ...
//     },
//     "purchasable": ["a", "b", ...]
//   }
//
// "score" is optional. Ranks must be 1..n per product with no gaps. Note
// that the JSON parser resolves duplicate product keys by keeping the last
// occurrence.

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "gradsyn/errors.hpp"
#include "gradsyn/models.hpp"
#include "gradsyn/serialize.hpp"

namespace gradsyn {

struct ReactionFileWorld {
  std::shared_ptr<TableExpansionModel> model;
  std::shared_ptr<SetInventory> inventory;
};

inline ReactionFileWorld parse_reaction_json(const Json& j, const std::string& origin) {
  if (!j.is_object()) throw ParseError(origin + ": top level must be an object");
  ReactionFileWorld world;
  world.model = std::make_shared<TableExpansionModel>();
  world.inventory = std::make_shared<SetInventory>();

  if (j.contains("purchasable")) {
    const Json& purchasable = j["purchasable"];
    if (!purchasable.is_array()) throw ParseError(origin + ": \"purchasable\" must be an array");
    for (const Json& m : purchasable) {
      if (!m.is_string()) throw ParseError(origin + ": purchasable entries must be strings");
      world.inventory->insert(m.get<std::string>());
    }
  }

  if (j.contains("reactions")) {
    const Json& reactions = j["reactions"];
    if (!reactions.is_object()) throw ParseError(origin + ": \"reactions\" must be an object");
    for (auto it = reactions.begin(); it != reactions.end(); ++it) {
      const std::string& product = it.key();
      if (product.empty()) throw ParseError(origin + ": empty product name");
      if (!it.value().is_array())
        throw ParseError(origin + ": reactions for \"" + product + "\" must be an array");
      std::vector<ReactionCandidate> candidates;
      int position = 0;
      for (const Json& entry : it.value()) {
        ++position;
        std::string where = origin + ": reactions[\"" + product + "\"][" +
                            std::to_string(position - 1) + "]";
        if (!entry.is_object() || !entry.contains("reactants"))
          throw ParseError(where + ": entry must be an object with \"reactants\"");
        ReactionCandidate cand;
        for (const Json& r : entry["reactants"]) {
          if (!r.is_string()) throw ParseError(where + ": reactants must be strings");
          cand.reactants.emplace_back(r.get<std::string>());
        }
        cand.rank = entry.value("rank", position);
        if (cand.rank < 1) throw ParseError(where + ": rank must be >= 1");
        if (entry.contains("score")) cand.score = entry["score"].get<double>();
        candidates.push_back(std::move(cand));
      }
      world.model->set(product, std::move(candidates));
    }
  }
  return world;
}

/// Loads a reaction file into a lookup-table expansion model and a set-based
/// inventory. Parse failures carry the file path and the offending field.
inline ReactionFileWorld load_reaction_file(const std::filesystem::path& path) {
  std::string text = read_text_file(path);
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return parse_reaction_json(j, path.string());
}

inline Json world_slice_to_json(const WorldSlice& slice) {
  Json reactions = Json::object();
  for (const auto& [product, candidates] : slice.reactions) {
    Json arr = Json::array();
    for (const ReactionCandidate& c : candidates) {
      Json entry;
      Json reactant_names = Json::array();
      for (const Molecule& r : c.reactants) reactant_names.push_back(r.canonical);
      entry["reactants"] = std::move(reactant_names);
      entry["rank"] = c.rank;
      if (c.score) entry["score"] = *c.score;
      arr.push_back(std::move(entry));
    }
    reactions[product] = std::move(arr);
  }
  Json purchasable = Json::array();
  for (const std::string& m : slice.purchasable) purchasable.push_back(m);
  return Json{{"reactions", std::move(reactions)}, {"purchasable", std::move(purchasable)}};
}

/// Exports the closed world slice reachable from `target` to the reaction
/// file format, so any world (synthetic ones included) can be frozen to a
/// file and reloaded with an identical planner trajectory.
inline void save_world_slice(const std::filesystem::path& path, const WorldSlice& slice) {
  write_text_file(path, world_slice_to_json(slice).dump(2) + "\n");
}

}  // namespace gradsyn

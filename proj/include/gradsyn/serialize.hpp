#pragma once

// JSON and DOT serialization. All emitters use nlohmann's ordered_json and
// canonical orderings (node id, edge id) so identical inputs produce
// byte-identical documents.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gradsyn/evaluation.hpp"
#include "gradsyn/graph.hpp"
#include "gradsyn/params.hpp"
#include "gradsyn/planner.hpp"
#include "gradsyn/route.hpp"

namespace gradsyn {

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// params

inline Json params_to_json(const SearchParams& p) {
  return Json{{"s0", p.s0},
              {"theta_m", p.theta_m},
              {"theta_r", p.theta_r},
              {"eval_s0", p.eval_s0},
              {"max_fixed_point_sweeps", p.max_fixed_point_sweeps},
              {"fixed_point_tol", p.fixed_point_tol}};
}

inline SearchParams params_from_json(const Json& j) {
  SearchParams p;
  p.s0 = j.value("s0", p.s0);
  p.theta_m = j.value("theta_m", p.theta_m);
  p.theta_r = j.value("theta_r", p.theta_r);
  p.eval_s0 = j.value("eval_s0", p.eval_s0);
  p.max_fixed_point_sweeps = j.value("max_fixed_point_sweeps", p.max_fixed_point_sweeps);
  p.fixed_point_tol = j.value("fixed_point_tol", p.fixed_point_tol);
  p.validate();
  return p;
}

// ---------------------------------------------------------------------------
// graph

inline Json graph_to_json(const SearchGraph& g, const SearchParams* params = nullptr) {
  Json nodes = Json::array();
  Json edges = Json::array();
  for (NodeId x = 0; x < g.node_count(); ++x) {
    if (g.kind(x) == NodeKind::molecule) {
      const MoleculeNode& m = g.molecule(x);
      nodes.push_back(Json{{"id", m.id},
                           {"kind", "molecule"},
                           {"canonical", m.molecule.canonical},
                           {"purchasable", m.purchasable},
                           {"status", to_string(m.status)},
                           {"s", m.s},
                           {"grad", m.grad}});
    } else {
      const ReactionNode& r = g.reaction(x);
      std::string signature = g.molecule(r.product).molecule.canonical + "<=";
      for (std::size_t i = 0; i < r.reactants.size(); ++i) {
        if (i) signature += "+";
        signature += g.molecule(r.reactants[i]).molecule.canonical;
      }
      nodes.push_back(Json{{"id", r.id},
                           {"kind", "reaction"},
                           {"signature", signature},
                           {"feasibility", r.feasibility},
                           {"rank", r.rank},
                           {"s", r.s},
                           {"grad", r.grad}});
      edges.push_back(Json{{"from", r.product}, {"to", r.id}});
      for (NodeId reactant : r.reactants) edges.push_back(Json{{"from", r.id}, {"to", reactant}});
    }
  }
  Json j{{"root", g.root()}, {"params", params ? params_to_json(*params) : Json(nullptr)}};
  j["nodes"] = std::move(nodes);
  j["edges"] = std::move(edges);
  return j;
}

inline SearchGraph graph_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("nodes") || !j.contains("edges") || !j.contains("root"))
    throw ParseError("graph document must contain root, nodes and edges");
  std::vector<MoleculeNode> molecules;
  std::vector<ReactionNode> reactions;
  std::size_t total = j["nodes"].size();

  auto status_from = [](const std::string& s) {
    if (s == "open") return MolStatus::open;
    if (s == "expanded") return MolStatus::expanded;
    if (s == "dead") return MolStatus::dead;
    throw ParseError("unknown molecule status: " + s);
  };

  for (const Json& n : j["nodes"]) {
    NodeId id = n.at("id").get<NodeId>();
    if (id >= total) throw ParseError("node id out of range: " + std::to_string(id));
    std::string kind = n.at("kind").get<std::string>();
    if (kind == "molecule") {
      MoleculeNode m;
      m.id = id;
      m.molecule = Molecule(n.at("canonical").get<std::string>());
      m.purchasable = n.at("purchasable").get<bool>();
      m.status = status_from(n.at("status").get<std::string>());
      m.s = n.at("s").get<double>();
      m.grad = n.at("grad").get<double>();
      molecules.push_back(std::move(m));
    } else if (kind == "reaction") {
      ReactionNode r;
      r.id = id;
      r.feasibility = n.at("feasibility").get<double>();
      r.rank = n.at("rank").get<int>();
      r.s = n.at("s").get<double>();
      r.grad = n.at("grad").get<double>();
      reactions.push_back(std::move(r));
    } else {
      throw ParseError("unknown node kind: " + kind);
    }
  }

  std::vector<char> is_molecule(total, 0);
  for (const MoleculeNode& m : molecules) is_molecule[m.id] = 1;
  std::vector<int> mol_slot(total, -1);
  std::vector<int> rxn_slot(total, -1);
  for (std::size_t i = 0; i < molecules.size(); ++i) mol_slot[molecules[i].id] = static_cast<int>(i);
  for (std::size_t i = 0; i < reactions.size(); ++i) rxn_slot[reactions[i].id] = static_cast<int>(i);

  std::vector<char> has_product(total, 0);
  for (const Json& e : j["edges"]) {
    NodeId from = e.at("from").get<NodeId>();
    NodeId to = e.at("to").get<NodeId>();
    if (from >= total || to >= total) throw ParseError("edge endpoint out of range");
    if (is_molecule[from] && !is_molecule[to]) {
      // product edge
      if (has_product[to]) throw ParseError("reaction has two product edges");
      has_product[to] = 1;
      reactions[static_cast<std::size_t>(rxn_slot[to])].product = from;
      molecules[static_cast<std::size_t>(mol_slot[from])].reaction_children.push_back(to);
    } else if (!is_molecule[from] && is_molecule[to]) {
      reactions[static_cast<std::size_t>(rxn_slot[from])].reactants.push_back(to);
      molecules[static_cast<std::size_t>(mol_slot[to])].reaction_parents.push_back(from);
    } else {
      throw ParseError("edges must connect a molecule and a reaction");
    }
  }
  for (const ReactionNode& r : reactions)
    if (!has_product[r.id]) throw ParseError("reaction has no product edge");

  return SearchGraph::reconstruct(std::move(molecules), std::move(reactions),
                                  j.at("root").get<NodeId>());
}

// ---------------------------------------------------------------------------
// DOT

namespace detail {
inline std::string dot_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  return out;
}

inline std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}
}  // namespace detail

/// DOT rendering: molecules as ellipses (purchasable filled green, dead
/// gray, open dashed), reactions as boxes; every node is annotated with its
/// s value and gradient D.
inline std::string graph_to_dot(const SearchGraph& g) {
  std::ostringstream out;
  out << "digraph search_graph {\n";
  out << "  rankdir=TB;\n";
  out << "  node [fontname=\"Helvetica\"];\n";
  for (NodeId x = 0; x < g.node_count(); ++x) {
    if (g.kind(x) == NodeKind::molecule) {
      const MoleculeNode& m = g.molecule(x);
      out << "  n" << x << " [shape=ellipse";
      if (m.purchasable)
        out << ", style=filled, fillcolor=palegreen";
      else if (m.status == MolStatus::dead)
        out << ", style=filled, fillcolor=gray80";
      else if (m.status == MolStatus::open)
        out << ", style=dashed";
      out << ", label=\"" << detail::dot_escape(m.molecule.canonical) << "\\ns="
          << detail::fixed3(m.s) << " D=" << detail::fixed3(m.grad) << "\"];\n";
    } else {
      const ReactionNode& r = g.reaction(x);
      out << "  n" << x << " [shape=box, label=\"f=" << detail::fixed3(r.feasibility)
          << " rank=" << r.rank << "\\ns=" << detail::fixed3(r.s)
          << " D=" << detail::fixed3(r.grad) << "\"];\n";
    }
  }
  for (NodeId x = 0; x < g.node_count(); ++x) {
    if (g.kind(x) != NodeKind::reaction) continue;
    const ReactionNode& r = g.reaction(x);
    out << "  n" << r.product << " -> n" << x << ";\n";
    for (NodeId reactant : r.reactants) out << "  n" << x << " -> n" << reactant << ";\n";
  }
  out << "}\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// routes / stats / evaluation reports

inline Json routes_to_json(const SearchGraph& g, const std::vector<Route>& routes) {
  Json arr = Json::array();
  for (const Route& route : routes) {
    double sigma = 1.0;
    for (NodeId r : route.reactions) sigma *= g.reaction(r).feasibility;
    Json choices = Json::array();
    for (const auto& [m, r] : route.choices)
      choices.push_back(Json{{"molecule", m}, {"reaction", r}});
    arr.push_back(Json{{"target", route.target},
                       {"molecules", route.molecules},
                       {"reactions", route.reactions},
                       {"choices", std::move(choices)},
                       {"sigma", sigma}});
  }
  return Json{{"routes", std::move(arr)}};
}

inline Json eval_report_to_json(const EvalReport& report) {
  Json j{{"method", report.method}, {"value", report.value}};
  if (report.std_error) j["std_error"] = *report.std_error;
  if (report.n) j["n"] = *report.n;
  j["reactions_enumerated"] = report.reactions_enumerated;
  return j;
}

inline Json stats_to_json(const RunStats& stats) {
  Json j{{"policy", stats.policy},
         {"iterations", stats.iterations},
         {"exhausted", stats.exhausted},
         {"molecule_count", stats.molecule_count},
         {"reaction_count", stats.reaction_count},
         {"routes_found", stats.routes_found},
         {"final_ssp", stats.final_ssp},
         {"eval_method", stats.eval_method},
         {"candidates_discarded", stats.candidates_discarded},
         {"candidates_rejected", stats.candidates_rejected},
         {"update_visits", stats.update_visits},
         {"propagate_visits", stats.propagate_visits},
         {"selection_visits", stats.selection_visits}};
  if (stats.final_ssp_std_error) j["final_ssp_std_error"] = *stats.final_ssp_std_error;
  if (stats.eval_samples) j["eval_samples"] = *stats.eval_samples;
  // timing lives under its own key so determinism checks can drop it wholesale
  j["timing"] = Json{{"wall_time_total_s", stats.wall_time_total_s},
                     {"wall_time_per_iter_s", stats.wall_time_per_iter_s}};
  return j;
}

// ---------------------------------------------------------------------------
// file helpers

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write file: " + path.string());
  out << content;
}

}  // namespace gradsyn

#include <catch2/catch_amalgamated.hpp>

#include "fixtures.hpp"
#include "gradsyn/baselines.hpp"
#include "gradsyn/planner.hpp"
#include "gradsyn/serialize.hpp"

using namespace gradsyn;
using Catch::Approx;
using fixtures::inv;

namespace {

struct FailingModel final : ExpansionModel {
  std::vector<ReactionCandidate> expand(const Molecule&) const override {
    throw Error("backend unavailable");
  }
};

struct EmptyModel final : ExpansionModel {
  std::vector<ReactionCandidate> expand(const Molecule&) const override { return {}; }
};

SyntheticWorldConfig small_world(std::uint64_t seed) {
  SyntheticWorldConfig config;
  config.seed = seed;
  config.branching = 2;
  config.max_depth = 4;
  config.tokens_per_depth = 256;
  config.buy_base = 0.3;
  config.buy_slope = 0.25;
  return config;
}

}  // namespace

TEST_CASE("select_next prefers the highest gradient, ties to the smallest id") {
  SearchGraph g(Molecule("t"), inv({}));
  g.mark_expanded(g.root());
  g.add_reaction(g.root(), {Molecule("a"), Molecule("b"), Molecule("c")}, 0.5, 1);
  NodeId a = *g.find_molecule("a");
  NodeId b = *g.find_molecule("b");
  NodeId c = *g.find_molecule("c");
  g.set_grad(a, 0.3);
  g.set_grad(b, 0.9);
  g.set_grad(c, 0.9);
  CHECK(select_next(g) == b);  // 0.9 tie: b has the smaller id
  g.set_grad(a, 0.0);
  g.set_grad(b, 0.0);
  g.set_grad(c, 0.0);
  CHECK(select_next(g) == a);  // all-zero gradients: first open node
}

TEST_CASE("select_next on an empty open set") {
  SearchGraph g(Molecule("p"), inv({"p"}));
  CHECK_FALSE(select_next(g).has_value());
}

TEST_CASE("step marks a node dead when the model returns nothing") {
  SearchParams p;
  GradientPolicy policy;
  SearchGraph g(Molecule("t"), inv({}));
  policy.init(g, p);
  EmptyModel model;
  ConstantFeasibility feas;
  StepReport rep = step(g, model, feas, p, policy);
  CHECK(rep.marked_dead);
  CHECK(rep.expanded == g.root());
  CHECK(g.open_nodes().empty());
  CHECK(g.molecule(g.root()).status == MolStatus::dead);
  CHECK(g.s(g.root()) == 0.0);

  StepReport next = step(g, model, feas, p, policy);
  CHECK(next.exhausted);
}

TEST_CASE("a purchasable-reactant expansion strictly raises the root value") {
  fixtures::PriorityWorld world;
  world.model = std::make_shared<TableExpansionModel>();
  world.inventory = std::make_shared<SetInventory>(std::vector<std::string>{"a", "b"});
  std::vector<ReactionCandidate> cands(1);
  cands[0].reactants = {Molecule("a"), Molecule("b")};
  cands[0].rank = 1;
  world.model->set("T", std::move(cands));

  SearchParams p;
  GradientPolicy policy;
  SearchGraph g(Molecule("T"), world.inventory);
  policy.init(g, p);
  double before = g.s(g.root());
  ConstantFeasibility feas;
  step(g, *world.model, feas, p, policy);
  CHECK(g.s(g.root()) > before);
  CHECK(g.s(g.root()) == Approx(0.5).margin(1e-12));
}

TEST_CASE("a model failure leaves the graph untouched") {
  SearchParams p;
  GradientPolicy policy;
  SearchGraph g(Molecule("t"), inv({}));
  policy.init(g, p);
  FailingModel model;
  ConstantFeasibility feas;
  CHECK_THROWS_AS(step(g, model, feas, p, policy), Error);
  CHECK(g.node_count() == 1);
  CHECK(g.molecule(g.root()).status == MolStatus::open);
}

TEST_CASE("priority world trajectory follows the s0 switch") {
  ScoreFeasibility feas;

  SECTION("s0 = 0 sends the planner to m4") {
    auto world = fixtures::priority_world();
    SearchParams p;
    p.s0 = 0.0;
    GradientPolicy policy;
    RunConfig cfg;
    cfg.budget = 2;
    RunResult res = run(world.target, *world.model, feas, world.inventory, p, cfg, policy);
    auto m4 = res.graph.find_molecule("M4");
    REQUIRE(m4.has_value());
    CHECK(select_next(res.graph) == *m4);
  }

  SECTION("s0 = 0.05 sends the planner to m2/m3 instead") {
    auto world = fixtures::priority_world();
    SearchParams p;
    p.s0 = 0.05;
    GradientPolicy policy;
    RunConfig cfg;
    cfg.budget = 2;
    RunResult res = run(world.target, *world.model, feas, world.inventory, p, cfg, policy);
    auto m2 = res.graph.find_molecule("M2");
    auto m3 = res.graph.find_molecule("M3");
    auto m4 = res.graph.find_molecule("M4");
    REQUIRE((m2 && m3 && m4));
    auto chosen = select_next(res.graph);
    REQUIRE(chosen.has_value());
    CHECK((*chosen == *m2 || *chosen == *m3));
    CHECK(*chosen == *m2);  // equal gradients, smaller id wins
    CHECK(res.graph.grad(*m2) > res.graph.grad(*m4));
  }
}

TEST_CASE("run on a purchasable target does nothing") {
  SyntheticWorldConfig config = small_world(3);
  SyntheticWorld world(config);
  // find a purchasable depth-0 token
  Molecule target = world.token(0, 0);
  for (int i = 0; i < config.tokens_per_depth; ++i) {
    target = world.token(0, i);
    if (world.purchasable_token(target)) break;
  }
  REQUIRE(world.purchasable_token(target));
  SyntheticExpansion model(world);
  ConstantFeasibility feas;
  SearchParams p;
  GradientPolicy policy;
  RunConfig cfg;
  cfg.budget = 50;
  RunResult res = run(target, model, feas, std::make_shared<SyntheticInventory>(world), p, cfg,
                      policy);
  CHECK(res.stats.iterations == 0);
  CHECK(res.stats.exhausted);
  CHECK(res.stats.final_ssp == 1.0);
  CHECK(res.stats.routes_found == 1);  // the trivial route
  CHECK(res.routes[0].reactions.empty());
}

TEST_CASE("budget zero returns the initial graph with zero SSP") {
  auto world = fixtures::priority_world();
  ScoreFeasibility feas;
  SearchParams p;
  GradientPolicy policy;
  RunConfig cfg;
  cfg.budget = 0;
  RunResult res = run(world.target, *world.model, feas, world.inventory, p, cfg, policy);
  CHECK(res.stats.iterations == 0);
  CHECK(res.graph.node_count() == 1);
  CHECK(res.stats.final_ssp == 0.0);
  CHECK(res.stats.routes_found == 0);
}

TEST_CASE("runs are deterministic and budgets nest as graph prefixes") {
  SyntheticWorldConfig config = small_world(42);
  SyntheticWorld world(config);
  std::vector<Molecule> targets = make_suite(config, 1);
  SyntheticExpansion model(world);
  ConstantFeasibility feas;
  SearchParams p;
  auto run_with = [&](int budget) {
    GradientPolicy policy;
    RunConfig cfg;
    cfg.budget = budget;
    cfg.seed = 7;
    return run(targets[0], model, feas, std::make_shared<SyntheticInventory>(world), p, cfg,
               policy);
  };
  RunResult a1 = run_with(30);
  RunResult a2 = run_with(30);
  CHECK(graph_to_json(a1.graph).dump() == graph_to_json(a2.graph).dump());
  CHECK(a1.stats.final_ssp == a2.stats.final_ssp);

  RunResult b = run_with(60);
  REQUIRE(a1.graph.node_count() <= b.graph.node_count());
  for (NodeId x = 0; x < a1.graph.node_count(); ++x) {
    REQUIRE(a1.graph.kind(x) == b.graph.kind(x));
    if (a1.graph.kind(x) == NodeKind::molecule)
      CHECK(a1.graph.molecule(x).molecule == b.graph.molecule(x).molecule);
    else
      CHECK(a1.graph.reaction(x).reactants == b.graph.reaction(x).reactants);
  }
}

TEST_CASE("SSP estimates never decrease with budget on a deterministic world") {
  auto world_cfg = small_world(11);
  world_cfg.branching = 2;
  world_cfg.max_depth = 3;
  SyntheticWorld world(world_cfg);
  std::vector<Molecule> targets = make_suite(world_cfg, 1);
  SyntheticExpansion model(world);
  ConstantFeasibility feas;
  SearchParams p;
  double last = -1.0;
  for (int budget : {0, 1, 2, 4, 6, 9}) {
    GradientPolicy policy;
    RunConfig cfg;
    cfg.budget = budget;
    cfg.eval.mode = EvalSettings::Mode::exact;
    cfg.eval.exact_guard = 40;
    RunResult res = run(targets[0], model, feas, std::make_shared<SyntheticInventory>(world), p,
                        cfg, policy);
    CHECK(res.stats.final_ssp >= last - 1e-12);
    last = res.stats.final_ssp;
  }
}

TEST_CASE("extract_routes on a graph with no successful pathway") {
  SearchGraph g(Molecule("t"), inv({}));
  g.mark_expanded(g.root());
  g.add_reaction(g.root(), {Molecule("x")}, 0.5, 1);  // x stays open
  CHECK(extract_routes(g, 10).empty());
}

TEST_CASE("a blocked branch is not extracted") {
  // root <- r1 {a purch}, root <- r3 {m5 open}: only the r1 route exists
  SearchGraph g(Molecule("t"), inv({"a"}));
  g.mark_expanded(g.root());
  auto r1 = g.add_reaction(g.root(), {Molecule("a")}, 0.5, 1);
  auto r3 = g.add_reaction(g.root(), {Molecule("m5")}, 0.5, 2);
  auto routes = extract_routes(g, 10);
  REQUIRE(routes.size() == 1);
  CHECK(routes[0].reactions == std::vector<NodeId>{r1.reaction});
  (void)r3;
}

TEST_CASE("diamond graphs share a purchasable leaf across two routes") {
  SearchGraph g(Molecule("t"), inv({"shared", "b", "c"}));
  g.mark_expanded(g.root());
  auto r1 = g.add_reaction(g.root(), {Molecule("shared"), Molecule("b")}, 0.9, 1);
  auto r2 = g.add_reaction(g.root(), {Molecule("shared"), Molecule("c")}, 0.4, 2);
  auto routes = extract_routes(g, 10);
  REQUIRE(routes.size() == 2);
  // ranked by sigma: r1 first
  CHECK(routes[0].reactions == std::vector<NodeId>{r1.reaction});
  CHECK(routes[1].reactions == std::vector<NodeId>{r2.reaction});
  NodeId shared = *g.find_molecule("shared");
  for (const Route& route : routes) {
    CHECK(std::find(route.molecules.begin(), route.molecules.end(), shared) !=
          route.molecules.end());
    CHECK_NOTHROW(validate_route(g, route));
  }

  // test-side brute force: every subset of reactions that forms a route
  int complete = 0;
  for (int mask = 1; mask < 4; ++mask) {
    bool r1_in = mask & 1;
    bool r2_in = mask & 2;
    if (r1_in && r2_in) continue;  // one choice per molecule
    complete += (r1_in || r2_in) ? 1 : 0;
  }
  CHECK(complete == 2);
}

TEST_CASE("extraction skips cycle-reentrant branches but keeps valid detours") {
  auto cycle = fixtures::right_cycle();
  auto routes = extract_routes(cycle.g, 10);
  // routes for M1: {RA}, and {R2, RB} through M2's alternative
  REQUIRE(routes.size() == 2);
  for (const Route& route : routes) CHECK_NOTHROW(validate_route(cycle.g, route));
  CHECK(routes[0].reactions == std::vector<NodeId>{cycle.ra});          // sigma 0.8
  std::vector<NodeId> detour{cycle.r2, cycle.rb};
  std::sort(detour.begin(), detour.end());
  CHECK(routes[1].reactions == detour);                                 // sigma 0.3
}

TEST_CASE("extracted routes always validate on random cyclic graphs") {
  for (std::uint64_t seed = 700; seed < 720; ++seed) {
    SearchGraph g = fixtures::random_cyclic(seed);
    auto routes = extract_routes(g, 16);
    for (const Route& route : routes) {
      CHECK_NOTHROW(validate_route(g, route));
      double sigma = route_sigma_probability(g, route);
      CHECK(sigma > 0.0);
      CHECK(sigma <= 1.0);
    }
    // ranking is by nonincreasing sigma
    for (std::size_t i = 1; i < routes.size(); ++i)
      CHECK(route_sigma_probability(g, routes[i - 1]) >=
            route_sigma_probability(g, routes[i]) - 1e-12);
  }
}

TEST_CASE("validate_route rejects tampered routes") {
  SearchGraph g(Molecule("t"), inv({"a"}));
  g.mark_expanded(g.root());
  auto r1 = g.add_reaction(g.root(), {Molecule("a")}, 0.5, 1);
  auto routes = extract_routes(g, 1);
  REQUIRE(routes.size() == 1);
  Route broken = routes[0];
  broken.choices.clear();
  CHECK_THROWS_AS(validate_route(g, broken), InvalidInputError);
  Route missing_leaf = routes[0];
  missing_leaf.molecules = {g.root()};
  CHECK_THROWS_AS(validate_route(g, missing_leaf), InvalidInputError);
  (void)r1;
}

TEST_CASE("gradient selection equals naive improvement selection on trees") {
  SearchParams p;
  p.s0 = 0.05;
  int compared = 0;
  for (std::uint64_t seed = 800; seed < 840; ++seed) {
    SearchGraph g = fixtures::random_tree(seed);
    if (g.open_nodes().empty()) continue;
    fixtures::settle(g, p);
    auto grad_choice = select_next(g);
    auto naive_choice = naive_improvement_select(g, p).choice;
    REQUIRE(grad_choice.has_value());
    REQUIRE(naive_choice.has_value());
    CHECK(*grad_choice == *naive_choice);
    ++compared;
  }
  CHECK(compared >= 25);
}

// Evolutionary search tests: domination and crowding against independent
// oracles, exact hypervolume hand cases, variation-operator contracts, and
// end-to-end runs on a space small enough to evaluate exhaustively.
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "vitas/cost.hpp"
#include "vitas/errors.hpp"
#include "vitas/mapping.hpp"
#include "vitas/rng.hpp"
#include "vitas/search.hpp"
#include "vitas/space.hpp"

using namespace vitas;
using search::Individual;
using search::SearchConfig;
using space::ArchEncoding;
using space::SpaceSpec;
using space::StageSpec;

namespace {

Individual ind(double score, double flops, bool feasible = true) {
  Individual i;
  i.score = score;
  i.flops_g = flops;
  i.feasible = feasible;
  return i;
}

// Independent domination rule: feasible beats infeasible; among infeasible
// lower cost wins; among feasible, weakly better in (score up, flops down)
// and strictly better somewhere.
bool dominates_oracle(const Individual& a, const Individual& b) {
  if (a.feasible != b.feasible) return a.feasible;
  if (!a.feasible) return a.flops_g < b.flops_g;
  return a.score >= b.score && a.flops_g <= b.flops_g &&
         (a.score > b.score || a.flops_g < b.flops_g);
}

// Front peeling by direct counting.
std::vector<int> sort_oracle(const std::vector<Individual>& pop) {
  const std::size_t n = pop.size();
  std::vector<int> rank(n, -1);
  int level = 0;
  std::size_t assigned = 0;
  while (assigned < n) {
    std::vector<std::size_t> current;
    for (std::size_t i = 0; i < n; ++i) {
      if (rank[i] != -1) continue;
      bool dominated = false;
      for (std::size_t j = 0; j < n && !dominated; ++j) {
        if (j != i && rank[j] == -1 && dominates_oracle(pop[j], pop[i]))
          dominated = true;
      }
      if (!dominated) current.push_back(i);
    }
    for (std::size_t i : current) rank[i] = level;
    assigned += current.size();
    ++level;
  }
  return rank;
}

// Small pyramid space (292 canonical forms) cheap enough for exhaustive
// ground truth.
SpaceSpec tiny_space() {
  SpaceSpec spec;
  spec.name = "tiny";
  spec.family = space::Family::TwinsLike;
  StageSpec st;
  st.patch_choices = {16, 32};
  st.embed_max_dim = 32;
  st.embed_ratio_choices = {0.5, 1.0};
  st.layers = 2;
  st.op_types = {"local", "global"};
  st.head_choices = {2};
  st.max_attn_dim = 48;
  st.max_mlp_dim = 64;
  st.attn_ratio_choices = {0.5, 1.0};
  st.mlp_ratio_choices = {0.5, 1.0};
  spec.stages = {st};
  return spec;
}

// A space with no adjustable ratio genes: repair has no moves, so any budget
// below the fixed floor stays infeasible.
SpaceSpec rigid_space() {
  SpaceSpec spec;
  spec.name = "rigid";
  spec.family = space::Family::TwinsLike;
  StageSpec st;
  st.patch_choices = {16};
  st.embed_max_dim = 8;
  st.embed_ratio_choices = {1.0};
  st.layers = 1;
  st.op_types = {"local"};
  st.head_choices = {1};
  st.max_attn_dim = 4;
  st.max_mlp_dim = 4;
  st.attn_ratio_choices = {1.0};
  st.mlp_ratio_choices = {1.0};
  spec.stages = {st};
  return spec;
}

}  // namespace

TEST_CASE("nondominated ranks match front peeling on random point sets") {
  Rng rng(808);
  for (int rep = 0; rep < 100; ++rep) {
    const int n = 1 + static_cast<int>(rng.below(40));
    std::vector<Individual> pop;
    for (int i = 0; i < n; ++i) {
      // Coarse grids force plenty of ties and duplicates.
      const double score = static_cast<double>(rng.below(6));
      const double flops = static_cast<double>(rng.below(6)) / 2.0;
      const bool feasible = rng.unit() < 0.8;
      pop.push_back(ind(score, flops, feasible));
    }
    CAPTURE(rep);
    CHECK(search::nondominated_sort(pop) == sort_oracle(pop));
  }
}

TEST_CASE("infeasible points always rank behind every feasible point") {
  std::vector<Individual> pop = {
      ind(0.1, 9.0, true),   // weak but feasible
      ind(99.0, 0.1, false), // strong but over budget
      ind(5.0, 1.0, true),
  };
  const auto ranks = search::nondominated_sort(pop);
  CHECK(ranks[1] > ranks[0]);
  CHECK(ranks[1] > ranks[2]);
}

TEST_CASE("crowding distances: boundaries infinite, interiors additive") {
  // Four points on one front, evenly spaced in both objectives.
  std::vector<Individual> pop = {ind(1, 1), ind(2, 2), ind(3, 3), ind(4, 4)};
  const auto ranks = search::nondominated_sort(pop);
  for (int r : ranks) CHECK(r == 0);
  const auto crowd = search::crowding_distances(pop, ranks);
  const double inf = std::numeric_limits<double>::infinity();
  CHECK(crowd[0] == inf);
  CHECK(crowd[3] == inf);
  // Interior: (next - prev) / span per objective = 2/3 + 2/3.
  CHECK(crowd[1] == doctest::Approx(4.0 / 3.0).epsilon(1e-12));
  CHECK(crowd[2] == doctest::Approx(4.0 / 3.0).epsilon(1e-12));

  // Fronts of one or two members are all boundary.
  std::vector<Individual> two = {ind(1, 1), ind(2, 2)};
  const auto c2 = search::crowding_distances(two, {0, 0});
  CHECK(c2[0] == inf);
  CHECK(c2[1] == inf);
}

TEST_CASE("hypervolume: hand-checked sweep cases") {
  using P = std::pair<double, double>;  // (score, flops)
  CHECK(search::hypervolume({}, 0.0, 5.0) == 0.0);
  CHECK(search::hypervolume({P{3, 1}}, 0.0, 5.0) == doctest::Approx(12.0));
  // Two nondominated points: 3 * (4-1) + 5 * (5-4).
  CHECK(search::hypervolume({P{3, 1}, P{5, 4}}, 0.0, 5.0) == doctest::Approx(14.0));
  // The second point is dominated (worse score at higher cost): contributes 0.
  CHECK(search::hypervolume({P{3, 1}, P{2, 4}}, 0.0, 5.0) == doctest::Approx(12.0));
  // Points outside the reference corner are ignored.
  CHECK(search::hypervolume({P{3, 6}}, 0.0, 5.0) == 0.0);
  CHECK(search::hypervolume({P{0, 1}}, 0.0, 5.0) == 0.0);
  // Equal costs: only the better score is kept.
  CHECK(search::hypervolume({P{3, 1}, P{5, 1}}, 0.0, 5.0) == doctest::Approx(20.0));
  // Order of the input points is irrelevant.
  CHECK(search::hypervolume({P{5, 4}, P{3, 1}}, 0.0, 5.0) == doctest::Approx(14.0));
}

TEST_CASE("mutation contracts: rate zero is identity, outputs stay valid") {
  const SpaceSpec spec = tiny_space();
  Rng rng(4);
  const ArchEncoding base =
      space::canonicalize(spec, space::sample_uniform(spec, true, rng));

  Rng r0(9);
  CHECK(search::mutate(spec, base, 0.0, r0) == base);

  for (int rep = 0; rep < 50; ++rep) {
    const ArchEncoding m = search::mutate(spec, base, 1.0, rng);
    CHECK_NOTHROW(space::validate(spec, m));
    CHECK(space::is_canonical(spec, m));
    CHECK(m.stages[0].layers.size() == base.stages[0].layers.size());
  }

  // Deterministic for a fixed generator state.
  Rng ra(77), rb(77);
  CHECK(search::mutate(spec, base, 0.5, ra) == search::mutate(spec, base, 0.5, rb));
}

TEST_CASE("crossover contracts: self-cross is identity, outputs stay valid") {
  const SpaceSpec spec = space::builtin_space("twins-small");
  Rng rng(21);
  const ArchEncoding a = space::sample_uniform(spec, true, rng);
  const ArchEncoding b = space::sample_uniform(spec, true, rng);

  Rng rc(1);
  CHECK(search::crossover(spec, a, a, rc) == a);

  for (int rep = 0; rep < 30; ++rep) {
    const ArchEncoding child = search::crossover(spec, a, b, rng);
    CHECK_NOTHROW(space::validate(spec, child));
    CHECK(space::is_canonical(spec, child));
  }
}

TEST_CASE("budget repair: monotone decrements reach the bound or report failure") {
  const SpaceSpec spec = tiny_space();

  // Full-width configuration, then repair into a mid-range budget.
  ArchEncoding full;
  full.stages.resize(1);
  full.stages[0].patch = 0;
  full.stages[0].embed_ratio = 1;
  for (int i = 0; i < 2; ++i) {
    space::LayerGene g;
    g.op = 0;
    g.attn_ratio = 1;
    g.mlp_ratio = 1;
    full.stages[0].layers.push_back(g);
  }
  const double full_cost = cost::estimate(spec, full).flops_g;
  const double budget = full_cost * 0.6;
  ArchEncoding repaired = full;
  CHECK(search::repair_to_budget(spec, repaired, budget));
  CHECK(cost::estimate(spec, repaired).flops_g <= budget);

  // Already within budget: untouched.
  ArchEncoding same = repaired;
  CHECK(search::repair_to_budget(spec, same, budget));
  CHECK(same == repaired);

  // No ratio gene can absorb an impossible budget.
  ArchEncoding hopeless = full;
  CHECK_FALSE(search::repair_to_budget(spec, hopeless, 1e-12));
}

TEST_CASE("evaluators: named factories and the external command") {
  const SpaceSpec spec = tiny_space();
  Rng rng(2);
  const ArchEncoding a = space::sample_uniform(spec, true, rng);

  CHECK(search::make_evaluator("proxy")(spec, a) > 0.0);
  CHECK_THROWS_AS((void)search::make_evaluator("magic"), ValidationError);
  CHECK_THROWS_AS((void)search::make_evaluator("cmd:"), ValidationError);

  // Uniformity-aware depth score: d per stage, discounted by the sharing
  // imbalance of a balanced assignment over d widths.
  ArchEncoding two_active;
  two_active.stages.resize(1);
  space::LayerGene g;
  g.op = 0;
  two_active.stages[0].layers = {g, g};
  const double expected =
      2.0 / (1.0 + mapping::metrics(mapping::build_cyclic(2)).influence_gap);
  CHECK(search::make_evaluator("influence")(spec, two_active) ==
        doctest::Approx(expected).epsilon(1e-12));

  ArchEncoding one_active = two_active;
  one_active.stages[0].layers[1].op = 2;  // identity
  one_active = space::canonicalize(spec, one_active);
  CHECK(search::make_evaluator("influence")(spec, one_active) ==
        doctest::Approx(1.0).epsilon(1e-12));

  // External command evaluators: parse stdout, propagate failures.
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path();
  const fs::path good = dir / "vitas_eval_good.sh";
  const fs::path bad = dir / "vitas_eval_bad.sh";
  const fs::path mute = dir / "vitas_eval_mute.sh";
  std::ofstream(good) << "#!/bin/sh\necho 2.5\n";
  std::ofstream(bad) << "#!/bin/sh\nexit 3\n";
  std::ofstream(mute) << "#!/bin/sh\necho not-a-number\n";
  for (const auto& p : {good, bad, mute})
    fs::permissions(p, fs::perms::owner_all | fs::perms::group_read |
                           fs::perms::others_read);

  CHECK(search::make_evaluator("cmd:" + good.string())(spec, a) == 2.5);
  CHECK_THROWS_AS(search::make_evaluator("cmd:" + bad.string())(spec, a),
                  ValidationError);
  CHECK_THROWS_AS(search::make_evaluator("cmd:" + mute.string())(spec, a),
                  ValidationError);
  for (const auto& p : {good, bad, mute}) fs::remove(p);
}

TEST_CASE("search bookkeeping: exact evaluation counts and monotone progress") {
  const SpaceSpec spec = tiny_space();
  const auto [mn, mx] = cost::min_max_cost(spec);
  SearchConfig cfg;
  cfg.population = 24;
  cfg.generations = 12;
  cfg.parents = 8;
  cfg.budget_flops_g = 0.5 * (mn.flops_g + mx.flops_g);
  cfg.mutation_rate = 0.2;
  cfg.seed = 3;

  const auto res = search::nsga2_search(spec, cfg, search::make_evaluator("proxy"));

  CHECK(res.evaluations == 24 * 12);
  REQUIRE(res.history.size() == 12);
  for (int gidx = 0; gidx < 12; ++gidx) {
    const auto& log = res.history[static_cast<std::size_t>(gidx)];
    CHECK(log.generation == gidx + 1);
    CHECK(log.evaluations == 24LL * (gidx + 1));
    CHECK(log.front_size > 0);
    if (gidx > 0) {
      const auto& prev = res.history[static_cast<std::size_t>(gidx - 1)];
      CHECK(log.best_score >= prev.best_score);       // elitist selection
      CHECK(log.min_flops_g <= prev.min_flops_g);     // cheap boundary kept
      CHECK(log.hypervolume >= prev.hypervolume - 1e-12);
    }
  }

  CHECK(static_cast<int>(res.population.size()) == cfg.population);
  for (const auto& i : res.population) {
    CHECK(i.feasible);  // generated by repair or cloned from feasible parents
    CHECK(i.flops_g <= cfg.budget_flops_g);
    CHECK(space::is_canonical(spec, i.arch));
  }

  // Final front: feasible, deduplicated, sorted by cost, mutually nondominated.
  REQUIRE(!res.front.empty());
  std::set<std::string> encodings;
  for (const auto& i : res.front) {
    CHECK(i.feasible);
    CHECK(i.rank == 0);
    CHECK(encodings.insert(space::encode(i.arch)).second);
  }
  for (std::size_t i = 1; i < res.front.size(); ++i)
    CHECK(res.front[i - 1].flops_g <= res.front[i].flops_g);
  for (std::size_t i = 0; i < res.front.size(); ++i)
    for (std::size_t j = 0; j < res.front.size(); ++j)
      if (i != j) CHECK_FALSE(dominates_oracle(res.front[i], res.front[j]));

  // Best-ever tracking agrees with the final history row.
  CHECK(res.best.feasible);
  CHECK(res.best.score == res.history.back().best_score);
  CHECK(res.best.flops_g <= cfg.budget_flops_g);
}

TEST_CASE("search is deterministic per seed") {
  const SpaceSpec spec = tiny_space();
  SearchConfig cfg;
  cfg.population = 12;
  cfg.generations = 6;
  cfg.parents = 4;
  cfg.budget_flops_g = 0.02;
  cfg.seed = 11;
  const auto a = search::nsga2_search(spec, cfg, search::make_evaluator("proxy"));
  const auto b = search::nsga2_search(spec, cfg, search::make_evaluator("proxy"));
  REQUIRE(a.front.size() == b.front.size());
  for (std::size_t i = 0; i < a.front.size(); ++i) {
    CHECK(space::encode(a.front[i].arch) == space::encode(b.front[i].arch));
    CHECK(a.front[i].score == b.front[i].score);
    CHECK(a.front[i].flops_g == b.front[i].flops_g);
  }
  REQUIRE(a.history.size() == b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    CHECK(a.history[i].best_score == b.history[i].best_score);
    CHECK(a.history[i].hypervolume == b.history[i].hypervolume);
  }
}

TEST_CASE("search recovers most of the exhaustive hypervolume") {
  const SpaceSpec spec = tiny_space();
  const auto evaluate = search::make_evaluator("proxy");
  const auto [mn, mx] = cost::min_max_cost(spec);
  const double budget = 0.5 * (mn.flops_g + mx.flops_g);

  // Ground truth over every canonical form within budget.
  std::vector<std::pair<double, double>> feasible_pts;
  for (const ArchEncoding& a : space::enumerate_canonical(spec, 10000)) {
    const double f = cost::estimate(spec, a).flops_g;
    if (f <= budget) feasible_pts.emplace_back(evaluate(spec, a), f);
  }
  const double true_hv = search::hypervolume(feasible_pts, 0.0, budget);
  REQUIRE(true_hv > 0.0);

  SearchConfig cfg;
  cfg.population = 24;
  cfg.generations = 30;
  cfg.parents = 8;
  cfg.budget_flops_g = budget;
  cfg.mutation_rate = 0.2;
  cfg.seed = 5;
  const auto res = search::nsga2_search(spec, cfg, evaluate);
  CHECK(res.history.back().hypervolume >= 0.95 * true_hv);
  CHECK(res.history.back().hypervolume <= true_hv + 1e-12);
}

TEST_CASE("a cost-seeking evaluator collapses the front to the cheapest forms") {
  const SpaceSpec spec = tiny_space();
  const search::Evaluator cheapest = [](const SpaceSpec& s, const ArchEncoding& a) {
    return -cost::estimate(s, a).flops_g;
  };
  SearchConfig cfg;
  cfg.population = 16;
  cfg.generations = 15;
  cfg.parents = 6;
  cfg.budget_flops_g = 0.05;
  cfg.seed = 8;
  const auto res = search::nsga2_search(spec, cfg, cheapest);

  // Score and cost are perfectly anti-aligned, so one point dominates all
  // others: the front holds only minimum-cost architectures.
  REQUIRE(!res.front.empty());
  const double min_flops = res.history.back().min_flops_g;
  for (const auto& i : res.front) {
    CHECK(i.flops_g == doctest::Approx(min_flops).epsilon(1e-12));
    CHECK(i.score == doctest::Approx(-min_flops).epsilon(1e-12));
  }
  CHECK(res.best.score == doctest::Approx(-min_flops).epsilon(1e-12));
}

TEST_CASE("score-only mode keeps the budget and maximizes the scalar") {
  const SpaceSpec spec = tiny_space();
  SearchConfig cfg;
  cfg.population = 16;
  cfg.generations = 10;
  cfg.parents = 6;
  cfg.budget_flops_g = 0.03;
  cfg.seed = 13;
  cfg.constraint_only = true;
  const auto res = search::nsga2_search(spec, cfg, search::make_evaluator("proxy"));
  CHECK(res.evaluations == 16 * 10);
  for (const auto& i : res.population) {
    CHECK(i.feasible);
    CHECK(i.flops_g <= cfg.budget_flops_g);
  }
  for (std::size_t i = 1; i < res.history.size(); ++i)
    CHECK(res.history[i].best_score >= res.history[i - 1].best_score);
  CHECK(res.best.score == res.history.back().best_score);
}

TEST_CASE("configuration validation") {
  const SpaceSpec spec = tiny_space();
  const auto eval = search::make_evaluator("proxy");
  SearchConfig cfg;
  cfg.budget_flops_g = 0.05;

  SearchConfig bad = cfg;
  bad.population = 1;
  CHECK_THROWS_AS((void)search::nsga2_search(spec, bad, eval), ValidationError);
  bad = cfg;
  bad.generations = 0;
  CHECK_THROWS_AS((void)search::nsga2_search(spec, bad, eval), ValidationError);
  bad = cfg;
  bad.parents = 1;
  CHECK_THROWS_AS((void)search::nsga2_search(spec, bad, eval), ValidationError);
  bad = cfg;
  bad.parents = bad.population + 1;
  CHECK_THROWS_AS((void)search::nsga2_search(spec, bad, eval), ValidationError);
  bad = cfg;
  bad.budget_flops_g = 0.0;
  CHECK_THROWS_AS((void)search::nsga2_search(spec, bad, eval), ValidationError);
  bad = cfg;
  bad.mutation_rate = 1.5;
  CHECK_THROWS_AS((void)search::nsga2_search(spec, bad, eval), ValidationError);
  CHECK_THROWS_AS((void)search::nsga2_search(spec, cfg, search::Evaluator{}),
                  ValidationError);
}

TEST_CASE("an unreachable budget fails with a clear error") {
  // No ratio gene has a cheaper setting, so repair can never fit the budget
  // and initialization exhausts its attempt cap.
  const SpaceSpec spec = rigid_space();
  SearchConfig cfg;
  cfg.population = 4;
  cfg.generations = 2;
  cfg.parents = 2;
  cfg.budget_flops_g = 1e-12;
  CHECK_THROWS_AS(
      (void)search::nsga2_search(spec, cfg, search::make_evaluator("proxy")),
      ValidationError);
}

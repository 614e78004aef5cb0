#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "vitas/rng.hpp"
#include "vitas/space.hpp"

namespace vitas::search {

struct Individual {
  space::ArchEncoding arch;
  double score = 0.0;
  double flops_g = 0.0;
  double params_m = 0.0;
  bool feasible = true;
  int rank = 0;          // nondomination front index, 0 = best
  double crowding = 0.0;
};

struct SearchConfig {
  int population = 50;
  int generations = 40;
  int parents = 20;
  double budget_flops_g = 0.0;  // hard upper bound, required > 0
  double mutation_rate = 0.1;
  std::uint64_t seed = 42;
  bool constraint_only = false;  // score-only selection under the budget
};

struct GenerationLog {
  int generation = 0;         // 1-based; generation 1 is the initial population
  long long evaluations = 0;  // cumulative evaluator calls
  double best_score = 0.0;
  double min_flops_g = 0.0;
  double mean_score = 0.0;
  double hypervolume = 0.0;
  int front_size = 0;
};

struct SearchResult {
  std::vector<Individual> front;       // final nondominated feasible set, deduplicated
  Individual best;                     // highest-scoring feasible individual ever evaluated
  std::vector<Individual> population;  // full final population
  std::vector<GenerationLog> history;
  long long evaluations = 0;
};

/// Scores an architecture; higher is better. Must be deterministic.
using Evaluator =
    std::function<double(const space::SpaceSpec&, const space::ArchEncoding&)>;

/// Built-in evaluators by name: "proxy" (smooth capacity heuristic),
/// "influence" (uniformity of a cyclic sharing scheme over active depths),
/// or "cmd:<path>" (external command fed the encoding, prints a number).
Evaluator make_evaluator(const std::string& name);

/// Nondomination ranks under (maximize score, minimize flops) with
/// feasibility dominating infeasibility; among infeasible, lower cost wins.
std::vector<int> nondominated_sort(const std::vector<Individual>& pop);

/// Crowding distances computed within each rank; boundary points get +inf.
std::vector<double> crowding_distances(const std::vector<Individual>& pop,
                                       const std::vector<int>& ranks);

/// Dominated area between the points and the reference corner, for
/// (maximize score, minimize flops). Points not strictly better than the
/// reference in both coordinates contribute nothing.
double hypervolume(const std::vector<std::pair<double, double>>& score_flops,
                   double ref_score, double ref_flops);

space::ArchEncoding mutate(const space::SpaceSpec& spec,
                           const space::ArchEncoding& arch, double rate,
                           vitas::Rng& rng);

space::ArchEncoding crossover(const space::SpaceSpec& spec,
                              const space::ArchEncoding& a,
                              const space::ArchEncoding& b, vitas::Rng& rng);

/// Greedy single-gene ratio decrements (largest cost reduction first) until
/// the architecture fits the budget or max_steps is exhausted. Returns
/// whether the result is within budget.
bool repair_to_budget(const space::SpaceSpec& spec, space::ArchEncoding& arch,
                      double budget_flops_g, int max_steps = 50);

/// Elitist bi-objective evolutionary search. Generation 1 is the evaluated
/// initial population, so total evaluations = population * generations.
SearchResult nsga2_search(const space::SpaceSpec& spec, const SearchConfig& cfg,
                          const Evaluator& evaluate);

}  // namespace vitas::search

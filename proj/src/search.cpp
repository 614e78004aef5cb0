#include "vitas/search.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <memory>
#include <numeric>
#include <stdexcept>

#include "vitas/cost.hpp"
#include "vitas/errors.hpp"
#include "vitas/mapping.hpp"

namespace vitas::search {

namespace {

constexpr int kInitAttempts = 100000;

bool dominates(const Individual& a, const Individual& b) {
  if (a.feasible != b.feasible) return a.feasible;
  if (!a.feasible) return a.flops_g < b.flops_g;  // smaller budget violation
  const bool no_worse = a.score >= b.score && a.flops_g <= b.flops_g;
  const bool strictly = a.score > b.score || a.flops_g < b.flops_g;
  return no_worse && strictly;
}

int active_layers(const space::SpaceSpec& spec, const space::ArchEncoding& arch,
                  std::size_t si) {
  int d = 0;
  for (const auto& g : arch.stages[si].layers) {
    if (!space::is_identity(spec, g, si)) ++d;
  }
  return d;
}

double proxy_score(const space::SpaceSpec& spec, const space::ArchEncoding& arch) {
  double s = 0.0;
  int stride = 1;
  for (std::size_t si = 0; si < spec.stages.size(); ++si) {
    const auto& st = spec.stages[si];
    const auto& genes = arch.stages[si];
    stride *= st.patch_choices[static_cast<std::size_t>(genes.patch)];
    const double embed = std::max(
        1.0, std::lround(st.embed_max_dim *
                         st.embed_ratio_choices[static_cast<std::size_t>(
                             genes.embed_ratio)]) *
                 1.0);
    s += 0.6 * std::log1p(embed);
    for (const auto& g : genes.layers) {
      if (space::is_identity(spec, g, si)) continue;
      const double attn = std::max(
          1.0, std::lround(st.max_attn_dim *
                           st.attn_ratio_choices[static_cast<std::size_t>(
                               g.attn_ratio)]) *
                   1.0);
      const double mlp = std::max(
          1.0, std::lround(st.max_mlp_dim *
                           st.mlp_ratio_choices[static_cast<std::size_t>(
                               g.mlp_ratio)]) *
                   1.0);
      const double heads =
          static_cast<double>(st.head_choices[static_cast<std::size_t>(g.heads)]);
      s += 0.35 * std::log1p(attn) + 0.25 * std::log1p(mlp) + 0.10 * std::sqrt(heads);
    }
  }
  // Finer overall patching keeps more tokens alive; reward it mildly.
  s += 0.3 * std::log1p(224.0 / static_cast<double>(std::max(1, stride)));
  return s;
}

double cyclic_gap_for_depth(int l) {
  static std::map<int, double> cache;
  auto it = cache.find(l);
  if (it != cache.end()) return it->second;
  const auto m = mapping::build_cyclic(l);
  const double gap = mapping::metrics(m).influence_gap;
  cache.emplace(l, gap);
  return gap;
}

double influence_score(const space::SpaceSpec& spec,
                       const space::ArchEncoding& arch) {
  double s = 0.0;
  for (std::size_t si = 0; si < spec.stages.size(); ++si) {
    const int d = active_layers(spec, arch, si);
    if (d == 0) continue;
    const double gap = (d == 1) ? 0.0 : cyclic_gap_for_depth(d);
    // Deeper stages can earn more, but only if their sharing stays uniform.
    s += static_cast<double>(d) / (1.0 + gap);
  }
  return s;
}

double command_score(const std::string& path, const space::ArchEncoding& arch) {
  const std::string encoding = space::encode(arch);
  // Encodings contain only digits, '.', ',' and '|'; single quotes keep the
  // shell from interpreting the pipes.
  const std::string command = path + " '" + encoding + "'";
  std::unique_ptr<FILE, int (*)(FILE*)> pipe(popen(command.c_str(), "r"), pclose);
  if (!pipe) throw ValidationError("search: failed to launch evaluator command");
  std::string output;
  std::array<char, 256> buf{};
  while (fgets(buf.data(), static_cast<int>(buf.size()), pipe.get()) != nullptr) {
    output += buf.data();
  }
  const int status = pclose(pipe.release());
  if (status != 0) {
    throw ValidationError("search: evaluator command failed: " + path);
  }
  try {
    std::size_t used = 0;
    const double value = std::stod(output, &used);
    (void)used;
    return value;
  } catch (const std::exception&) {
    throw ValidationError("search: evaluator command printed no number: " + path);
  }
}

struct RepairMove {
  enum class Gene { Embed, Attn, Mlp } gene = Gene::Embed;
  std::size_t stage = 0;
  std::size_t layer = 0;
};

void apply_move(space::ArchEncoding& arch, const RepairMove& mv) {
  auto& st = arch.stages[mv.stage];
  switch (mv.gene) {
    case RepairMove::Gene::Embed:
      --st.embed_ratio;
      break;
    case RepairMove::Gene::Attn:
      --st.layers[mv.layer].attn_ratio;
      break;
    case RepairMove::Gene::Mlp:
      --st.layers[mv.layer].mlp_ratio;
      break;
  }
}

Individual make_individual(const space::SpaceSpec& spec,
                           space::ArchEncoding arch, double budget,
                           const Evaluator& evaluate) {
  Individual ind;
  const auto report = cost::estimate(spec, arch);
  ind.flops_g = report.flops_g;
  ind.params_m = report.params_m;
  ind.feasible = report.flops_g <= budget;
  ind.score = evaluate(spec, arch);
  ind.arch = std::move(arch);
  return ind;
}

std::vector<std::size_t> selection_order(const std::vector<Individual>& pop,
                                         bool constraint_only) {
  std::vector<std::size_t> order(pop.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (constraint_only) {
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) {
                       if (pop[a].feasible != pop[b].feasible)
                         return pop[a].feasible;
                       if (pop[a].score != pop[b].score)
                         return pop[a].score > pop[b].score;
                       return pop[a].flops_g < pop[b].flops_g;
                     });
  } else {
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) {
                       if (pop[a].rank != pop[b].rank)
                         return pop[a].rank < pop[b].rank;
                       if (pop[a].crowding != pop[b].crowding)
                         return pop[a].crowding > pop[b].crowding;
                       // Boundary points tie at +inf; keep the incumbent
                       // best score (elitism) and cheapest cost first.
                       if (pop[a].score != pop[b].score)
                         return pop[a].score > pop[b].score;
                       return pop[a].flops_g < pop[b].flops_g;
                     });
  }
  return order;
}

void annotate(std::vector<Individual>& pop) {
  const auto ranks = nondominated_sort(pop);
  const auto crowd = crowding_distances(pop, ranks);
  for (std::size_t i = 0; i < pop.size(); ++i) {
    pop[i].rank = ranks[i];
    pop[i].crowding = crowd[i];
  }
}

GenerationLog log_generation(int gen, long long evals,
                             const std::vector<Individual>& pop, double budget) {
  GenerationLog log;
  log.generation = gen;
  log.evaluations = evals;
  log.best_score = -std::numeric_limits<double>::infinity();
  log.min_flops_g = std::numeric_limits<double>::infinity();
  double sum = 0.0;
  std::vector<std::pair<double, double>> pts;
  for (const auto& ind : pop) {
    sum += ind.score;
    if (!ind.feasible) continue;
    log.best_score = std::max(log.best_score, ind.score);
    log.min_flops_g = std::min(log.min_flops_g, ind.flops_g);
    pts.emplace_back(ind.score, ind.flops_g);
  }
  log.mean_score = pop.empty() ? 0.0 : sum / static_cast<double>(pop.size());
  log.hypervolume = hypervolume(pts, 0.0, budget);
  for (const auto& ind : pop) {
    if (ind.rank == 0 && ind.feasible) ++log.front_size;
  }
  return log;
}

}  // namespace

Evaluator make_evaluator(const std::string& name) {
  if (name == "proxy") {
    return [](const space::SpaceSpec& spec, const space::ArchEncoding& arch) {
      return proxy_score(spec, arch);
    };
  }
  if (name == "influence") {
    return [](const space::SpaceSpec& spec, const space::ArchEncoding& arch) {
      return influence_score(spec, arch);
    };
  }
  if (name.rfind("cmd:", 0) == 0) {
    const std::string path = name.substr(4);
    if (path.empty()) throw ValidationError("search: empty evaluator command");
    return [path](const space::SpaceSpec&, const space::ArchEncoding& arch) {
      return command_score(path, arch);
    };
  }
  throw ValidationError("search: unknown evaluator '" + name +
                        "' (expected proxy, influence, or cmd:<path>)");
}

std::vector<int> nondominated_sort(const std::vector<Individual>& pop) {
  const std::size_t n = pop.size();
  std::vector<std::vector<std::size_t>> dominated(n);
  std::vector<int> dom_count(n, 0);
  std::vector<int> ranks(n, 0);
  std::vector<std::size_t> front;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      if (dominates(pop[i], pop[j])) {
        dominated[i].push_back(j);
      } else if (dominates(pop[j], pop[i])) {
        ++dom_count[i];
      }
    }
    if (dom_count[i] == 0) front.push_back(i);
  }
  int rank = 0;
  while (!front.empty()) {
    std::vector<std::size_t> next;
    for (std::size_t i : front) {
      ranks[i] = rank;
      for (std::size_t j : dominated[i]) {
        if (--dom_count[j] == 0) next.push_back(j);
      }
    }
    front = std::move(next);
    ++rank;
  }
  return ranks;
}

std::vector<double> crowding_distances(const std::vector<Individual>& pop,
                                       const std::vector<int>& ranks) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> crowd(pop.size(), 0.0);
  if (pop.empty()) return crowd;
  const int max_rank = *std::max_element(ranks.begin(), ranks.end());
  for (int r = 0; r <= max_rank; ++r) {
    std::vector<std::size_t> front;
    for (std::size_t i = 0; i < pop.size(); ++i) {
      if (ranks[i] == r) front.push_back(i);
    }
    if (front.size() <= 2) {
      for (std::size_t i : front) crowd[i] = inf;
      continue;
    }
    const auto accumulate = [&](auto key) {
      std::stable_sort(front.begin(), front.end(),
                       [&](std::size_t a, std::size_t b) {
                         return key(pop[a]) < key(pop[b]);
                       });
      const double lo = key(pop[front.front()]);
      const double hi = key(pop[front.back()]);
      crowd[front.front()] = inf;
      crowd[front.back()] = inf;
      if (hi == lo) return;
      for (std::size_t k = 1; k + 1 < front.size(); ++k) {
        crowd[front[k]] +=
            (key(pop[front[k + 1]]) - key(pop[front[k - 1]])) / (hi - lo);
      }
    };
    accumulate([](const Individual& ind) { return ind.score; });
    accumulate([](const Individual& ind) { return ind.flops_g; });
  }
  return crowd;
}

double hypervolume(const std::vector<std::pair<double, double>>& score_flops,
                   double ref_score, double ref_flops) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& p : score_flops) {
    if (p.first > ref_score && p.second < ref_flops) pts.push_back(p);
  }
  // Ascending cost; on ties keep the best score first.
  std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second < b.second;
    return a.first > b.first;
  });
  double hv = 0.0;
  std::vector<std::pair<double, double>> kept;
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& p : pts) {
    if (p.first > best) {  // cheaper points already cover lower scores
      kept.push_back(p);
      best = p.first;
    }
  }
  for (std::size_t i = 0; i < kept.size(); ++i) {
    const double next_flops = (i + 1 < kept.size()) ? kept[i + 1].second : ref_flops;
    hv += (next_flops - kept[i].second) * (kept[i].first - ref_score);
  }
  return hv;
}

space::ArchEncoding mutate(const space::SpaceSpec& spec,
                           const space::ArchEncoding& arch, double rate,
                           vitas::Rng& rng) {
  space::validate(spec, arch);
  space::ArchEncoding out = arch;
  for (std::size_t si = 0; si < spec.stages.size(); ++si) {
    const auto& st = spec.stages[si];
    auto& genes = out.stages[si];
    const int identity_op = static_cast<int>(st.op_types.size());
    if (rng.unit() < rate) {
      genes.patch = static_cast<int>(rng.index(st.patch_choices.size()));
    }
    if (rng.unit() < rate) {
      genes.embed_ratio = static_cast<int>(rng.index(st.embed_ratio_choices.size()));
    }
    for (auto& g : genes.layers) {
      if (rng.unit() < rate) {
        const int new_op = static_cast<int>(rng.index(st.op_types.size() + 1));
        if (new_op == identity_op) {
          g = space::LayerGene{identity_op, 0, 0, 0};
        } else {
          if (g.op == identity_op) {
            g.heads = static_cast<int>(rng.index(st.head_choices.size()));
            g.attn_ratio = static_cast<int>(rng.index(st.attn_ratio_choices.size()));
            g.mlp_ratio = static_cast<int>(rng.index(st.mlp_ratio_choices.size()));
          }
          g.op = new_op;
        }
      }
      if (g.op != identity_op) {
        if (rng.unit() < rate) {
          g.heads = static_cast<int>(rng.index(st.head_choices.size()));
        }
        if (rng.unit() < rate) {
          g.attn_ratio = static_cast<int>(rng.index(st.attn_ratio_choices.size()));
        }
        if (rng.unit() < rate) {
          g.mlp_ratio = static_cast<int>(rng.index(st.mlp_ratio_choices.size()));
        }
      }
    }
  }
  return space::canonicalize(spec, out);
}

space::ArchEncoding crossover(const space::SpaceSpec& spec,
                              const space::ArchEncoding& a,
                              const space::ArchEncoding& b, vitas::Rng& rng) {
  space::validate(spec, a);
  space::validate(spec, b);
  space::ArchEncoding out = a;
  for (std::size_t si = 0; si < spec.stages.size(); ++si) {
    auto& genes = out.stages[si];
    const auto& ga = a.stages[si];
    const auto& gb = b.stages[si];
    genes.patch = rng.coin() ? ga.patch : gb.patch;
    genes.embed_ratio = rng.coin() ? ga.embed_ratio : gb.embed_ratio;
    for (std::size_t li = 0; li < genes.layers.size(); ++li) {
      genes.layers[li] = rng.coin() ? ga.layers[li] : gb.layers[li];
    }
  }
  return space::canonicalize(spec, out);
}

bool repair_to_budget(const space::SpaceSpec& spec, space::ArchEncoding& arch,
                      double budget_flops_g, int max_steps) {
  double flops = cost::estimate(spec, arch).flops_g;
  if (flops <= budget_flops_g) return true;
  for (int step = 0; step < max_steps; ++step) {
    double best_flops = flops;
    RepairMove best_move;
    bool found = false;
    for (std::size_t si = 0; si < spec.stages.size(); ++si) {
      const auto& genes = arch.stages[si];
      std::vector<RepairMove> moves;
      if (genes.embed_ratio > 0) {
        moves.push_back({RepairMove::Gene::Embed, si, 0});
      }
      for (std::size_t li = 0; li < genes.layers.size(); ++li) {
        const auto& g = genes.layers[li];
        if (space::is_identity(spec, g, si)) continue;
        if (g.attn_ratio > 0) moves.push_back({RepairMove::Gene::Attn, si, li});
        if (g.mlp_ratio > 0) moves.push_back({RepairMove::Gene::Mlp, si, li});
      }
      for (const auto& mv : moves) {
        space::ArchEncoding trial = arch;
        apply_move(trial, mv);
        const double f = cost::estimate(spec, trial).flops_g;
        if (f < best_flops) {
          best_flops = f;
          best_move = mv;
          found = true;
        }
      }
    }
    if (!found) return false;  // every ratio gene already at its floor
    apply_move(arch, best_move);
    flops = best_flops;
    if (flops <= budget_flops_g) return true;
  }
  return flops <= budget_flops_g;
}

SearchResult nsga2_search(const space::SpaceSpec& spec, const SearchConfig& cfg,
                          const Evaluator& evaluate) {
  space::validate(spec);
  if (cfg.population < 2) throw ValidationError("search: population must be >= 2");
  if (cfg.generations < 1) throw ValidationError("search: generations must be >= 1");
  if (cfg.parents < 2 || cfg.parents > cfg.population) {
    throw ValidationError("search: parents must lie in [2, population]");
  }
  if (!(cfg.budget_flops_g > 0.0)) {
    throw ValidationError("search: budget must be positive");
  }
  if (cfg.mutation_rate < 0.0 || cfg.mutation_rate > 1.0) {
    throw ValidationError("search: mutation rate must lie in [0, 1]");
  }
  if (!evaluate) throw ValidationError("search: evaluator is empty");

  vitas::Rng rng(cfg.seed);
  SearchResult result;
  long long evals = 0;
  bool have_best = false;

  const auto admit = [&](std::vector<Individual>& dest, Individual ind) {
    if (ind.feasible && (!have_best || ind.score > result.best.score)) {
      result.best = ind;
      have_best = true;
    }
    dest.push_back(std::move(ind));
    ++evals;
  };

  // Generation 1: rejection-sample feasible architectures (with repair).
  std::vector<Individual> pop;
  pop.reserve(static_cast<std::size_t>(cfg.population));
  int attempts = 0;
  while (static_cast<int>(pop.size()) < cfg.population) {
    if (++attempts > kInitAttempts) {
      throw ValidationError(
          "search: could not sample a feasible initial population; "
          "the budget is too tight for this space");
    }
    auto arch = space::sample_uniform(spec, /*canonical=*/true, rng);
    if (!repair_to_budget(spec, arch, cfg.budget_flops_g)) continue;
    admit(pop, make_individual(spec, std::move(arch), cfg.budget_flops_g, evaluate));
  }
  annotate(pop);
  result.history.push_back(log_generation(1, evals, pop, cfg.budget_flops_g));

  for (int gen = 2; gen <= cfg.generations; ++gen) {
    const auto order = selection_order(pop, cfg.constraint_only);
    const std::size_t parent_count =
        std::min<std::size_t>(static_cast<std::size_t>(cfg.parents), order.size());
    std::vector<std::size_t> parents(order.begin(),
                                     order.begin() + static_cast<std::ptrdiff_t>(parent_count));

    std::vector<Individual> offspring;
    offspring.reserve(static_cast<std::size_t>(cfg.population));
    while (static_cast<int>(offspring.size()) < cfg.population) {
      space::ArchEncoding child;
      bool made = false;
      // Children that cannot be repaired into the budget are discarded and
      // new parents drawn; parents are feasible, so this rarely recurs.
      for (int attempt = 0; attempt < 1000 && !made; ++attempt) {
        const std::size_t pa = parents[rng.index(parents.size())];
        std::size_t pb = parents[rng.index(parents.size())];
        if (parents.size() > 1 && pb == pa) {
          pb = parents[rng.index(parents.size())];
        }
        child = crossover(spec, pop[pa].arch, pop[pb].arch, rng);
        child = mutate(spec, child, cfg.mutation_rate, rng);
        made = repair_to_budget(spec, child, cfg.budget_flops_g);
      }
      if (!made) {  // fall back to a known-feasible parent clone
        child = pop[parents[rng.index(parents.size())]].arch;
      }
      admit(offspring,
            make_individual(spec, std::move(child), cfg.budget_flops_g, evaluate));
    }

    std::vector<Individual> merged = pop;
    merged.insert(merged.end(), std::make_move_iterator(offspring.begin()),
                  std::make_move_iterator(offspring.end()));
    annotate(merged);
    const auto keep = selection_order(merged, cfg.constraint_only);
    std::vector<Individual> next;
    next.reserve(static_cast<std::size_t>(cfg.population));
    for (std::size_t i = 0; i < static_cast<std::size_t>(cfg.population); ++i) {
      next.push_back(merged[keep[i]]);
    }
    pop = std::move(next);
    annotate(pop);
    result.history.push_back(log_generation(gen, evals, pop, cfg.budget_flops_g));
  }

  result.population = pop;
  result.evaluations = evals;
  std::vector<std::string> seen;
  for (const auto& ind : pop) {
    if (ind.rank != 0 || !ind.feasible) continue;
    const std::string key = space::encode(ind.arch);
    if (std::find(seen.begin(), seen.end(), key) != seen.end()) continue;
    seen.push_back(key);
    result.front.push_back(ind);
  }
  std::stable_sort(result.front.begin(), result.front.end(),
                   [](const Individual& a, const Individual& b) {
                     return a.flops_g < b.flops_g;
                   });
  return result;
}

}  // namespace vitas::search

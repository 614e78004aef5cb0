// vitas-kit: command-line front end for the mapping / space / cost / simshare
// / rank / search libraries. Exit codes: 0 success, 1 usage, 2 bad input or
// configuration, 3 internal error. A non-zero exit never writes to stdout.

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "vitas/cost.hpp"
#include "vitas/errors.hpp"
#include "vitas/mapping.hpp"
#include "vitas/rank.hpp"
#include "vitas/rng.hpp"
#include "vitas/search.hpp"
#include "vitas/simshare.hpp"
#include "vitas/space.hpp"
#include "vitas/version.hpp"

namespace {

using json = nlohmann::ordered_json;
using vitas::ValidationError;

std::uint64_t env_default_seed() {
  const char* s = std::getenv("VITAS_KIT_SEED");
  if (s == nullptr || *s == '\0') return 42;
  const std::string text(s);
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(text, &used);
    if (used != text.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ValidationError("VITAS_KIT_SEED must be a non-negative integer");
  }
}

std::string read_input(const std::string& path) {
  std::ostringstream ss;
  if (path == "-") {
    ss << std::cin.rdbuf();
  } else {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open file: " + path);
    ss << in.rdbuf();
  }
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot write file: " + path);
  f << text;
}

std::string fmt(double x, int prec = 6) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(prec) << x;
  return ss.str();
}

json beta_json(const vitas::mapping::BetaMatrix& b) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < b.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < b.cols(); ++j) row.push_back(b(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json mapping_json(const vitas::mapping::ChannelMapping& m) {
  const auto met = vitas::mapping::metrics(m);
  json j;
  j["l"] = m.l;
  j["kind"] = vitas::mapping::to_string(m.kind);
  j["contiguous"] = m.contiguous;
  j["beta"] = beta_json(m.beta);
  if (m.bilateral()) j["beta_right"] = beta_json(m.beta_right);
  j["training_counts"] = std::vector<int>(
      met.training_counts.data(),
      met.training_counts.data() + met.training_counts.size());
  j["influence"] = std::vector<double>(
      met.influence.data(), met.influence.data() + met.influence.size());
  j["influence_gap"] = met.influence_gap;
  return j;
}

void print_mapping(std::ostream& os, const vitas::mapping::ChannelMapping& m) {
  const auto met = vitas::mapping::metrics(m);
  std::string text = vitas::mapping::to_text(m);
  if (text.empty() || text.back() != '\n') text += '\n';
  os << text;
  os << "training_counts =";
  for (Eigen::Index i = 0; i < met.training_counts.size(); ++i) {
    os << ' ' << met.training_counts[i];
  }
  os << "\ninfluence =";
  for (Eigen::Index i = 0; i < met.influence.size(); ++i) {
    os << ' ' << fmt(met.influence[i]);
  }
  os << "\ninfluence_gap = " << fmt(met.influence_gap) << '\n';
}

vitas::mapping::ChannelMapping build_by_kind(const std::string& kind, int l,
                                             bool contiguous) {
  if (kind == "ordinal") return vitas::mapping::build_ordinal(l);
  if (kind == "bilateral") return vitas::mapping::build_bilateral(l);
  if (kind == "cyclic") return vitas::mapping::build_cyclic(l, contiguous);
  throw ValidationError("unknown mapping kind '" + kind +
                        "' (expected ordinal, bilateral, or cyclic)");
}

json individual_json(const vitas::search::Individual& ind) {
  json j;
  j["encoding"] = vitas::space::encode(ind.arch);
  j["score"] = ind.score;
  j["flops_g"] = ind.flops_g;
  j["params_m"] = ind.params_m;
  return j;
}

struct CsvPaths {
  std::vector<std::pair<double, double>> paths;
};

CsvPaths parse_paths_csv(const std::string& text) {
  CsvPaths out;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string trimmed = line;
    trimmed.erase(0, trimmed.find_first_not_of(" \t"));
    if (trimmed.empty() || trimmed[0] == '#') continue;
    const auto comma = trimmed.find(',');
    if (comma == std::string::npos) {
      throw ValidationError("rank input line " + std::to_string(line_no) +
                            ": expected 'flops,score'");
    }
    const std::string a = trimmed.substr(0, comma);
    const std::string b = trimmed.substr(comma + 1);
    try {
      out.paths.emplace_back(std::stod(a), std::stod(b));
    } catch (const std::exception&) {
      // Tolerate one non-numeric header row.
      if (line_no == 1) continue;
      throw ValidationError("rank input line " + std::to_string(line_no) +
                            ": non-numeric value");
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  std::ostringstream out;  // buffered so failures never leave partial stdout

  CLI::App app{"ViT architecture-search toolkit: weight-sharing mappings, "
               "search-space modeling, cost estimation, sharing simulation, "
               "rank evaluation, and evolutionary search"};
  app.set_version_flag("--version", VITAS_KIT_VERSION);
  app.require_subcommand(1);

  try {
    const std::uint64_t default_seed = env_default_seed();

    // ----- mapping ------------------------------------------------------
    auto* map_cmd = app.add_subcommand("mapping", "Channel-group weight-sharing mappings");
    map_cmd->require_subcommand(1);

    struct {
      int l = 0;
      std::string kind;
      bool contiguous = true;
      bool as_json = false;
      std::string mapping_out;
      std::string in_path;
      int iters = 2000;
      std::uint64_t seed = 0;
    } mo;
    mo.seed = default_seed;

    auto add_mapping_io = [&](CLI::App* cmd) {
      cmd->add_flag("--json", mo.as_json, "emit JSON instead of text");
      cmd->add_option("--mapping-out", mo.mapping_out,
                      "also write the mapping in text form to this path");
    };

    auto emit_mapping = [&](const vitas::mapping::ChannelMapping& m, json extra) {
      if (!mo.mapping_out.empty()) write_file(mo.mapping_out, vitas::mapping::to_text(m));
      if (mo.as_json) {
        json j = mapping_json(m);
        for (auto& [k, v] : extra.items()) j[k] = v;
        out << j.dump(2) << '\n';
      } else {
        print_mapping(out, m);
        for (auto& [k, v] : extra.items()) {
          out << k << " = " << (v.is_number_float() ? fmt(v.get<double>()) : v.dump())
              << '\n';
        }
      }
    };

    auto* mb = map_cmd->add_subcommand("build", "Construct an ordinal, bilateral, or cyclic mapping");
    mb->add_option("-l,--l", mo.l, "channel group count")->required()->check(CLI::Range(1, 4096));
    mb->add_option("-k,--kind", mo.kind, "ordinal | bilateral | cyclic")->required();
    mb->add_flag("--contiguous,!--no-contiguous", mo.contiguous,
                 "keep each cyclic column one contiguous run (default on)");
    add_mapping_io(mb);
    mb->callback([&] { emit_mapping(build_by_kind(mo.kind, mo.l, mo.contiguous), json::object()); });

    auto* mr = map_cmd->add_subcommand("refine", "Local-search refinement of a mapping's influence gap");
    mr->add_option("--in", mo.in_path, "mapping text file to start from (default: build from --kind/--l)");
    mr->add_option("-l,--l", mo.l, "channel group count")->check(CLI::Range(1, 4096));
    mr->add_option("-k,--kind", mo.kind, "ordinal | bilateral | cyclic");
    mr->add_flag("--contiguous,!--no-contiguous", mo.contiguous,
                 "keep constructed cyclic columns contiguous (default on)");
    mr->add_option("--iters", mo.iters, "local search iteration budget")
        ->check(CLI::Range(1, 100000000));
    mr->add_option("--seed", mo.seed, "random seed (default: VITAS_KIT_SEED or 42)");
    add_mapping_io(mr);
    mr->callback([&] {
      vitas::mapping::ChannelMapping start;
      if (!mo.in_path.empty()) {
        start = vitas::mapping::from_text(read_input(mo.in_path));
      } else if (!mo.kind.empty() && mo.l > 0) {
        start = build_by_kind(mo.kind, mo.l, mo.contiguous);
      } else {
        throw ValidationError("mapping refine needs --in or both --kind and --l");
      }
      const double initial = vitas::mapping::metrics(start).influence_gap;
      const auto refined = vitas::mapping::refine_local_search(start, mo.iters, mo.seed);
      json extra;
      extra["initial_gap"] = initial;
      extra["iterations"] = mo.iters;
      extra["seed"] = mo.seed;
      emit_mapping(refined, extra);
    });

    auto* me = map_cmd->add_subcommand("enumerate", "Exhaustive minimum-gap mapping (l <= 6)");
    me->add_option("-l,--l", mo.l, "channel group count")->required()->check(CLI::Range(1, 4096));
    add_mapping_io(me);
    me->callback([&] { emit_mapping(vitas::mapping::enumerate_optimal(mo.l), json::object()); });

    auto* mm = map_cmd->add_subcommand("metrics", "Training counts, influence, and influence gap");
    mm->add_option("--in", mo.in_path, "mapping text file (default: build from --kind/--l)");
    mm->add_option("-l,--l", mo.l, "channel group count")->check(CLI::Range(1, 4096));
    mm->add_option("-k,--kind", mo.kind, "ordinal | bilateral | cyclic");
    mm->add_flag("--contiguous,!--no-contiguous", mo.contiguous,
                 "keep constructed cyclic columns contiguous (default on)");
    mm->add_flag("--json", mo.as_json, "emit JSON instead of text");
    mm->callback([&] {
      vitas::mapping::ChannelMapping m;
      if (!mo.in_path.empty()) {
        m = vitas::mapping::from_text(read_input(mo.in_path));
      } else if (!mo.kind.empty() && mo.l > 0) {
        m = build_by_kind(mo.kind, mo.l, mo.contiguous);
      } else {
        throw ValidationError("mapping metrics needs --in or both --kind and --l");
      }
      const auto met = vitas::mapping::metrics(m);
      if (mo.as_json) {
        out << mapping_json(m).dump(2) << '\n';
      } else {
        out << "l = " << m.l << "\nkind = " << vitas::mapping::to_string(m.kind) << '\n';
        out << "training_counts =";
        for (Eigen::Index i = 0; i < met.training_counts.size(); ++i)
          out << ' ' << met.training_counts[i];
        out << "\ninfluence =";
        for (Eigen::Index i = 0; i < met.influence.size(); ++i)
          out << ' ' << fmt(met.influence[i]);
        out << "\ninfluence_gap = " << fmt(met.influence_gap) << '\n';
      }
    });

    // ----- space --------------------------------------------------------
    auto* space_cmd = app.add_subcommand("space", "Search-space counting, sampling, canonicalization");
    space_cmd->require_subcommand(1);

    struct {
      std::string space;
      bool canonical = true;
      bool as_json = false;
      std::uint64_t seed = 0;
      int count = 1;
      std::string arch;
    } so;
    so.seed = default_seed;

    auto* sc = space_cmd->add_subcommand("count", "Exact cardinality of a space");
    sc->add_option("--space", so.space, "builtin name or config file path")->required();
    sc->add_flag("--canonical,!--raw", so.canonical,
                 "count identity-shifted canonical forms (default) or raw assignments");
    sc->add_flag("--json", so.as_json, "emit JSON instead of text");
    sc->callback([&] {
      const auto spec = vitas::space::load_space(so.space);
      const auto count = vitas::space::count_space(spec, so.canonical);
      if (so.as_json) {
        json j;
        j["space"] = spec.name;
        j["canonical"] = so.canonical;
        j["total"] = count.total.str();
        json per = json::array();
        for (const auto& c : count.per_stage) per.push_back(c.str());
        j["per_stage"] = per;
        out << j.dump(2) << '\n';
      } else {
        out << "space = " << spec.name << '\n';
        out << "canonical = " << (so.canonical ? "true" : "false") << '\n';
        out << "total = " << count.total.str() << '\n';
        for (std::size_t i = 0; i < count.per_stage.size(); ++i) {
          out << "stage " << (i + 1) << " = " << count.per_stage[i].str() << '\n';
        }
      }
    });

    auto* ss = space_cmd->add_subcommand("sample", "Uniform architecture samples");
    ss->add_option("--space", so.space, "builtin name or config file path")->required();
    ss->add_flag("--canonical,!--raw", so.canonical,
                 "sample canonical forms uniformly (default) or raw assignments");
    ss->add_option("--count", so.count, "number of samples")->check(CLI::Range(1, 1000000));
    ss->add_option("--seed", so.seed, "random seed (default: VITAS_KIT_SEED or 42)");
    ss->add_flag("--json", so.as_json, "emit JSON instead of text");
    ss->callback([&] {
      const auto spec = vitas::space::load_space(so.space);
      vitas::Rng rng(so.seed);
      std::vector<std::string> samples;
      samples.reserve(static_cast<std::size_t>(so.count));
      for (int i = 0; i < so.count; ++i) {
        samples.push_back(vitas::space::encode(
            vitas::space::sample_uniform(spec, so.canonical, rng)));
      }
      if (so.as_json) {
        json j;
        j["space"] = spec.name;
        j["canonical"] = so.canonical;
        j["seed"] = so.seed;
        j["count"] = so.count;
        j["samples"] = samples;
        out << j.dump(2) << '\n';
      } else {
        for (const auto& s : samples) out << s << '\n';
      }
    });

    auto* scan = space_cmd->add_subcommand("canonicalize", "Identity-shift an encoding into canonical form");
    scan->add_option("--space", so.space, "builtin name or config file path")->required();
    scan->add_option("--arch", so.arch, "architecture encoding")->required();
    scan->add_flag("--json", so.as_json, "emit JSON instead of text");
    scan->callback([&] {
      const auto spec = vitas::space::load_space(so.space);
      const auto arch = vitas::space::decode(spec, so.arch);
      const auto canon = vitas::space::canonicalize(spec, arch);
      const std::string canon_text = vitas::space::encode(canon);
      if (so.as_json) {
        json j;
        j["space"] = spec.name;
        j["input"] = vitas::space::encode(arch);
        j["canonical"] = canon_text;
        j["changed"] = !(canon == arch);
        out << j.dump(2) << '\n';
      } else {
        out << canon_text << '\n';
      }
    });

    // ----- cost ---------------------------------------------------------
    struct {
      std::string space;
      std::string arch;
      int height = 224;
      int width = 224;
      bool as_json = true;
    } co;
    auto* cost_cmd = app.add_subcommand("cost", "FLOPs and parameter estimate for one architecture (JSON)");
    cost_cmd->add_option("--space", co.space, "builtin name or config file path")->required();
    cost_cmd->add_option("--arch", co.arch, "architecture encoding")->required();
    cost_cmd->add_option("--height", co.height, "input height in pixels")->check(CLI::Range(1, 1 << 16));
    cost_cmd->add_option("--width", co.width, "input width in pixels")->check(CLI::Range(1, 1 << 16));
    cost_cmd->add_flag("--json", co.as_json, "emit JSON (always on for this subcommand)");
    cost_cmd->callback([&] {
      const auto spec = vitas::space::load_space(co.space);
      const auto arch = vitas::space::decode(spec, co.arch);
      const auto rep = vitas::cost::estimate(spec, arch, co.height, co.width);
      json j;
      j["space"] = spec.name;
      j["arch"] = vitas::space::encode(arch);
      j["input_h"] = co.height;
      j["input_w"] = co.width;
      j["flops_g"] = rep.flops_g;
      j["params_m"] = rep.params_m;
      json per = json::array();
      for (const auto& st : rep.per_stage) {
        json e;
        e["flops_g"] = st.flops / 1e9;
        e["params_m"] = st.params / 1e6;
        per.push_back(std::move(e));
      }
      j["per_stage"] = per;
      out << j.dump(2) << '\n';
    });

    // ----- simulate -----------------------------------------------------
    struct {
      std::string kind = "cyclic";
      int l = 10;
      bool contiguous = true;
      std::string mapping_in;
      long long steps = 100000;
      int buckets = 10;
      bool alternate = false;
      std::uint64_t seed = 0;
    } io;
    io.seed = default_seed;
    auto* sim_cmd = app.add_subcommand(
        "simulate", "Uniform width-sampling training simulation (CSV: step,group,count,influence)");
    sim_cmd->add_option("-k,--kind", io.kind, "ordinal | bilateral | cyclic (default cyclic)");
    sim_cmd->add_option("-l,--l", io.l, "channel group count (default 10)")->check(CLI::Range(1, 4096));
    sim_cmd->add_flag("--contiguous,!--no-contiguous", io.contiguous,
                      "keep constructed cyclic columns contiguous (default on)");
    sim_cmd->add_option("--mapping-in", io.mapping_in, "mapping text file (overrides --kind/--l)");
    sim_cmd->add_option("--steps", io.steps, "sampling steps")->check(CLI::Range(0LL, 1000000000LL));
    sim_cmd->add_option("--buckets", io.buckets, "number of CSV checkpoints")->check(CLI::Range(1, 100000));
    sim_cmd->add_flag("--alternate", io.alternate,
                      "bilateral: alternate sides between steps instead of both per step");
    sim_cmd->add_option("--seed", io.seed, "random seed (default: VITAS_KIT_SEED or 42)");
    sim_cmd->callback([&] {
      vitas::mapping::ChannelMapping m;
      if (!io.mapping_in.empty()) {
        m = vitas::mapping::from_text(read_input(io.mapping_in));
      } else {
        m = build_by_kind(io.kind, io.l, io.contiguous);
      }
      out << "step,group,count,influence\n";
      long long prev = -1;
      for (int b = 1; b <= io.buckets; ++b) {
        const long long s = io.steps * b / io.buckets;
        if (s == prev) continue;
        prev = s;
        // Same seed => the shorter run is a prefix of the longer one, so each
        // checkpoint is one pass over the identical sampling trajectory.
        const auto state = vitas::simshare::simulate(m, s, io.seed, io.alternate);
        for (int i = 0; i < state.l; ++i) {
          out << s << ',' << (i + 1) << ',' << state.counts[i] << ','
              << fmt(state.influence_acc[i]) << '\n';
        }
      }
    });

    // ----- rank ---------------------------------------------------------
    struct {
      std::string in_path;
      double lo = 1.0;
      double hi = 9.0;
      int groups = 8;
      bool as_json = true;
    } ro;
    auto* rank_cmd = app.add_subcommand(
        "rank", "Grouped-budget rank coefficients from a flops,score CSV (JSON)");
    rank_cmd->add_option("--in", ro.in_path, "CSV file of 'flops,score' rows, or - for stdin")
        ->required();
    rank_cmd->add_option("--lo", ro.lo, "lowest group edge in GFLOPs (default 1)");
    rank_cmd->add_option("--hi", ro.hi, "highest group edge in GFLOPs (default 9)");
    rank_cmd->add_option("--groups", ro.groups, "number of equal-width groups (default 8)")
        ->check(CLI::Range(1, 10000));
    rank_cmd->add_flag("--json", ro.as_json, "emit JSON (always on for this subcommand)");
    rank_cmd->callback([&] {
      const auto csv = parse_paths_csv(read_input(ro.in_path));
      const auto edges = vitas::rank::uniform_edges(ro.lo, ro.hi, ro.groups);
      const auto groups = vitas::rank::grouped_budget_eval(csv.paths, edges);
      json j;
      j["edges"] = edges;
      json arr = json::array();
      for (std::size_t k = 0; k < groups.size(); ++k) {
        const auto& g = groups[k];
        json e;
        e["lo"] = g.lo;
        e["hi"] = g.hi;
        e["n"] = g.n;
        e["skipped"] = !g.stats.has_value();
        if (g.stats) {
          e["pearson"] = g.stats->pearson;
          e["spearman"] = g.stats->spearman;
          e["kendall"] = g.stats->kendall;
        } else {
          std::cerr << "warning: group " << (k + 1) << " [" << fmt(g.lo, 3) << ", "
                    << fmt(g.hi, 3) << ") skipped (" << g.n
                    << " path(s) or degenerate values)\n";
        }
        arr.push_back(std::move(e));
      }
      j["groups"] = arr;
      out << j.dump(2) << '\n';
    });

    // ----- search -------------------------------------------------------
    struct {
      std::string space;
      double budget = 0.0;
      int population = 50;
      int generations = 40;
      int parents = 20;
      double mutation_rate = 0.1;
      std::string evaluator = "proxy";
      bool constraint_only = false;
      std::uint64_t seed = 0;
      bool as_json = true;
    } eo;
    eo.seed = default_seed;
    auto* search_cmd = app.add_subcommand(
        "search", "NSGA-II evolutionary search under a FLOPs budget (JSON)");
    search_cmd->add_option("--space", eo.space, "builtin name or config file path")->required();
    search_cmd->add_option("--budget-gflops", eo.budget, "hard FLOPs budget in giga-MACs")
        ->required()->check(CLI::PositiveNumber);
    search_cmd->add_option("--population", eo.population, "population size (default 50)")
        ->check(CLI::Range(2, 100000));
    search_cmd->add_option("--generations", eo.generations, "generation count (default 40)")
        ->check(CLI::Range(1, 100000));
    search_cmd->add_option("--parents", eo.parents, "parent pool size (default 20)")
        ->check(CLI::Range(2, 100000));
    search_cmd->add_option("--mutation-rate", eo.mutation_rate,
                           "per-gene mutation probability (default 0.1)")
        ->check(CLI::Range(0.0, 1.0));
    search_cmd->add_option("--evaluator", eo.evaluator,
                           "proxy | influence | cmd:<path> (default proxy)");
    search_cmd->add_flag("--constraint-only", eo.constraint_only,
                         "select on score alone, keeping the budget as a hard constraint");
    search_cmd->add_option("--seed", eo.seed, "random seed (default: VITAS_KIT_SEED or 42)");
    search_cmd->add_flag("--json", eo.as_json, "emit JSON (always on for this subcommand)");
    search_cmd->callback([&] {
      const auto spec = vitas::space::load_space(eo.space);
      vitas::search::SearchConfig cfg;
      cfg.population = eo.population;
      cfg.generations = eo.generations;
      if (search_cmd->count("--parents") == 0 && eo.parents > eo.population) {
        eo.parents = eo.population;  // shrink the default pool for small runs
      }
      cfg.parents = eo.parents;
      cfg.budget_flops_g = eo.budget;
      cfg.mutation_rate = eo.mutation_rate;
      cfg.seed = eo.seed;
      cfg.constraint_only = eo.constraint_only;
      const auto evaluate = vitas::search::make_evaluator(eo.evaluator);
      const auto res = vitas::search::nsga2_search(spec, cfg, evaluate);
      json j;
      j["space"] = spec.name;
      j["budget_gflops"] = eo.budget;
      j["population"] = cfg.population;
      j["generations"] = cfg.generations;
      j["parents"] = cfg.parents;
      j["mutation_rate"] = cfg.mutation_rate;
      j["seed"] = cfg.seed;
      j["constraint_only"] = cfg.constraint_only;
      j["evaluator"] = eo.evaluator;
      j["evaluations"] = res.evaluations;
      json hist = json::array();
      for (const auto& g : res.history) {
        json e;
        e["generation"] = g.generation;
        e["evaluations"] = g.evaluations;
        e["best_score"] = g.best_score;
        e["min_flops_g"] = g.min_flops_g;
        e["mean_score"] = g.mean_score;
        e["hypervolume"] = g.hypervolume;
        e["front_size"] = g.front_size;
        hist.push_back(std::move(e));
      }
      j["history"] = hist;
      json front = json::array();
      for (const auto& ind : res.front) front.push_back(individual_json(ind));
      j["front"] = front;
      j["best"] = individual_json(res.best);
      out << j.dump(2) << '\n';
    });

    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);  // help/version print to stdout and return 0
    return code == 0 ? 0 : 1;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }

  std::cout << out.str();
  return 0;
}

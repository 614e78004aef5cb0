#include "vitas/space.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "vitas/errors.hpp"
#include "vitas/rng.hpp"

namespace vitas::space {

namespace {

std::vector<double> tenth_ratios() {
  std::vector<double> r;
  for (int i = 1; i <= 10; ++i) r.push_back(i / 10.0);
  return r;
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

int parse_int(const std::string& s, int line_no, const std::string& key) {
  try {
    std::size_t pos = 0;
    const int v = std::stoi(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ValidationError("line " + std::to_string(line_no) + ": key '" + key +
                          "' needs an integer, got '" + s + "'");
  }
}

double parse_double(const std::string& s, int line_no, const std::string& key) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ValidationError("line " + std::to_string(line_no) + ": key '" + key +
                          "' needs a number, got '" + s + "'");
  }
}

StageSpec default_stage() {
  StageSpec s;
  s.embed_ratio_choices = tenth_ratios();
  s.attn_ratio_choices = tenth_ratios();
  s.mlp_ratio_choices = tenth_ratios();
  return s;
}

StageSpec twins_stage(int patch, int embed_max, int layers, int attn_max, int mlp_max) {
  StageSpec s = default_stage();
  s.patch_choices = {patch};
  s.embed_max_dim = embed_max;
  s.layers = layers;
  s.op_types = {"local", "global"};
  s.head_choices = {2, 4, 8, 16};
  s.max_attn_dim = attn_max;
  s.max_mlp_dim = mlp_max;
  return s;
}

SpaceSpec deit_space(const std::string& name, int embed_max, int attn_max, int mlp_max) {
  SpaceSpec spec;
  spec.name = name;
  spec.family = Family::DeiTLike;
  spec.class_token = true;
  StageSpec s = default_stage();
  s.patch_choices = {14, 16, 32};
  s.embed_max_dim = embed_max;
  s.layers = 14;
  s.op_types = {"block"};
  s.head_choices = {3, 6, 12, 16};
  s.max_attn_dim = attn_max;
  s.max_mlp_dim = mlp_max;
  spec.stages = {s};
  return spec;
}

/// Mixed-radix decomposition of a parametric combination index, op-major.
LayerGene gene_from_index(const StageSpec& st, std::uint64_t k) {
  LayerGene g;
  const std::uint64_t m = st.mlp_ratio_choices.size();
  const std::uint64_t a = st.attn_ratio_choices.size();
  const std::uint64_t h = st.head_choices.size();
  g.mlp_ratio = static_cast<int>(k % m);
  k /= m;
  g.attn_ratio = static_cast<int>(k % a);
  k /= a;
  g.heads = static_cast<int>(k % h);
  k /= h;
  g.op = static_cast<int>(k);
  return g;
}

LayerGene identity_gene(const StageSpec& st) {
  LayerGene g;
  g.op = static_cast<int>(st.op_types.size());
  return g;
}

/// Uniform cpp_int in [0, n) by chunked rejection sampling.
BigInt random_below_big(Rng& rng, const BigInt& n) {
  if (n <= 0) throw ValidationError("random_below_big: n must be positive");
  const unsigned bits = boost::multiprecision::msb(n) + 1;
  BigInt result;
  do {
    result = 0;
    unsigned remaining = bits;
    while (remaining > 0) {
      const unsigned take = remaining < 64 ? remaining : 64u;
      std::uint64_t chunk = rng.next_u64();
      if (take < 64) chunk >>= (64 - take);
      result <<= take;
      result |= chunk;
      remaining -= take;
    }
  } while (result >= n);
  return result;
}

}  // namespace

std::string to_string(Family family) {
  return family == Family::TwinsLike ? "twins" : "deit";
}

std::uint64_t StageSpec::parametric_choices() const {
  return static_cast<std::uint64_t>(op_types.size()) * head_choices.size() *
         attn_ratio_choices.size() * mlp_ratio_choices.size();
}

std::vector<std::string> builtin_space_names() {
  return {"twins-tiny", "twins-small", "twins-base", "twins-large",
          "deit-tiny", "deit-small"};
}

bool is_builtin_space(const std::string& name) {
  const auto names = builtin_space_names();
  return std::find(names.begin(), names.end(), name) != names.end();
}

SpaceSpec builtin_space(const std::string& name) {
  SpaceSpec spec;
  spec.name = name;
  spec.family = Family::TwinsLike;
  if (name == "twins-tiny" || name == "twins-small") {
    // The reference tables print the identical space for tiny and small.
    spec.stages = {twins_stage(4, 128, 4, 480, 512),
                   twins_stage(2, 256, 4, 960, 1024),
                   twins_stage(2, 512, 12, 1920, 2048),
                   twins_stage(2, 1024, 6, 3840, 4096)};
  } else if (name == "twins-base") {
    spec.stages = {twins_stage(4, 192, 4, 480, 768),
                   twins_stage(2, 384, 4, 960, 1536),
                   twins_stage(2, 768, 20, 1920, 3072),
                   twins_stage(2, 1536, 4, 3840, 6144)};
  } else if (name == "twins-large") {
    spec.stages = {twins_stage(4, 256, 4, 960, 1024),
                   twins_stage(2, 512, 4, 1920, 2048),
                   twins_stage(2, 1024, 20, 3840, 4096),
                   twins_stage(2, 2048, 4, 7680, 8192)};
  } else if (name == "deit-tiny") {
    return deit_space(name, 384, 1440, 1440);
  } else if (name == "deit-small") {
    return deit_space(name, 768, 2880, 2880);
  } else {
    throw ValidationError("unknown built-in space '" + name + "'");
  }
  return spec;
}

SpaceSpec parse_space_spec(const std::string& text) {
  SpaceSpec spec;
  spec.family = Family::TwinsLike;
  bool family_set = false;
  bool class_token_set = false;
  bool any_content = false;
  StageSpec* stage = nullptr;

  std::istringstream is(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(is, raw)) {
    ++line_no;
    std::string line = raw;
    if (const auto hash = line.find('#'); hash != std::string::npos)
      line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    any_content = true;

    if (line == "[stage]") {
      spec.stages.push_back(default_stage());
      stage = &spec.stages.back();
      continue;
    }
    if (line.front() == '[')
      throw ValidationError("line " + std::to_string(line_no) +
                            ": unknown section '" + line + "' (expected [stage])");

    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ValidationError("line " + std::to_string(line_no) +
                            ": expected key=value, got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (value.empty())
      throw ValidationError("line " + std::to_string(line_no) + ": key '" + key +
                            "' has an empty value");

    if (stage == nullptr) {
      if (key == "name") {
        spec.name = value;
      } else if (key == "family") {
        if (value == "twins" || value == "twins-like") spec.family = Family::TwinsLike;
        else if (value == "deit" || value == "deit-like") spec.family = Family::DeiTLike;
        else
          throw ValidationError("line " + std::to_string(line_no) +
                                ": family must be 'twins' or 'deit', got '" + value + "'");
        family_set = true;
      } else if (key == "class_token") {
        if (value == "true" || value == "1") spec.class_token = true;
        else if (value == "false" || value == "0") spec.class_token = false;
        else
          throw ValidationError("line " + std::to_string(line_no) +
                                ": class_token must be true/false");
        class_token_set = true;
      } else {
        throw ValidationError("line " + std::to_string(line_no) + ": unknown global key '" +
                              key + "' (stage keys belong below a [stage] line)");
      }
      continue;
    }

    if (key == "layers") {
      stage->layers = parse_int(value, line_no, key);
    } else if (key == "ops") {
      stage->op_types = split_csv(value);
    } else if (key == "heads") {
      stage->head_choices.clear();
      for (const auto& tok : split_csv(value))
        stage->head_choices.push_back(parse_int(tok, line_no, key));
    } else if (key == "attn_ratios") {
      stage->attn_ratio_choices.clear();
      for (const auto& tok : split_csv(value))
        stage->attn_ratio_choices.push_back(parse_double(tok, line_no, key));
    } else if (key == "mlp_ratios") {
      stage->mlp_ratio_choices.clear();
      for (const auto& tok : split_csv(value))
        stage->mlp_ratio_choices.push_back(parse_double(tok, line_no, key));
    } else if (key == "embed_ratios") {
      stage->embed_ratio_choices.clear();
      for (const auto& tok : split_csv(value))
        stage->embed_ratio_choices.push_back(parse_double(tok, line_no, key));
    } else if (key == "embed_patch") {
      stage->patch_choices.clear();
      for (const auto& tok : split_csv(value))
        stage->patch_choices.push_back(parse_int(tok, line_no, key));
    } else if (key == "embed_max_dim") {
      stage->embed_max_dim = parse_int(value, line_no, key);
    } else if (key == "max_attn_dim") {
      stage->max_attn_dim = parse_int(value, line_no, key);
    } else if (key == "max_mlp_dim") {
      stage->max_mlp_dim = parse_int(value, line_no, key);
    } else {
      throw ValidationError("line " + std::to_string(line_no) + ": unknown stage key '" +
                            key + "'");
    }
  }

  if (!any_content) throw ValidationError("empty space config document");
  if (!class_token_set) spec.class_token = (spec.family == Family::DeiTLike);
  (void)family_set;
  validate(spec);
  return spec;
}

SpaceSpec load_space(const std::string& name_or_path) {
  if (is_builtin_space(name_or_path)) return builtin_space(name_or_path);
  if (std::filesystem::exists(name_or_path)) {
    std::ifstream in(name_or_path);
    if (!in) throw ValidationError("cannot open space config '" + name_or_path + "'");
    std::ostringstream os;
    os << in.rdbuf();
    SpaceSpec spec = parse_space_spec(os.str());
    if (spec.name.empty()) spec.name = std::filesystem::path(name_or_path).stem().string();
    return spec;
  }
  throw ValidationError("'" + name_or_path +
                        "' is neither a built-in space nor a readable config file");
}

void validate(const SpaceSpec& spec) {
  if (spec.stages.empty()) throw ValidationError("space needs at least one stage");
  for (std::size_t si = 0; si < spec.stages.size(); ++si) {
    const StageSpec& st = spec.stages[si];
    const std::string where = "stage " + std::to_string(si + 1);
    if (st.patch_choices.empty())
      throw ValidationError(where + ": embed_patch must list at least one patch size");
    for (const int p : st.patch_choices)
      if (p < 1) throw ValidationError(where + ": patch sizes must be >= 1");
    if (st.embed_max_dim < 1)
      throw ValidationError(where + ": embed_max_dim must be >= 1");
    if (st.layers < 0) throw ValidationError(where + ": layers must be >= 0");

    auto check_ratios = [&](const std::vector<double>& ratios, const char* key) {
      if (ratios.empty())
        throw ValidationError(where + ": " + key + " must list at least one ratio");
      double prev = 0.0;
      for (const double r : ratios) {
        if (!(r > 0.0) || r > 1.0)
          throw ValidationError(where + ": " + key + " entries must lie in (0, 1]");
        if (r <= prev)
          throw ValidationError(where + ": " + key + " must be strictly increasing");
        prev = r;
      }
    };
    check_ratios(st.embed_ratio_choices, "embed_ratios");

    if (st.layers > 0) {
      if (st.op_types.empty())
        throw ValidationError(where + ": ops must list at least one parametric op");
      if (st.head_choices.empty())
        throw ValidationError(where + ": heads must list at least one head count");
      for (const int h : st.head_choices)
        if (h < 1) throw ValidationError(where + ": head counts must be >= 1");
      if (st.max_attn_dim < 1)
        throw ValidationError(where + ": max_attn_dim must be >= 1");
      if (st.max_mlp_dim < 1)
        throw ValidationError(where + ": max_mlp_dim must be >= 1");
      check_ratios(st.attn_ratio_choices, "attn_ratios");
      check_ratios(st.mlp_ratio_choices, "mlp_ratios");

      // The attention width at every ratio must be a whole number divisible
      // by every head choice, or heads could not split it evenly.
      for (const double r : st.attn_ratio_choices) {
        const double exact = st.max_attn_dim * r;
        const long dim = std::lround(exact);
        if (std::abs(exact - static_cast<double>(dim)) > 1e-6)
          throw ValidationError(where + ": max_attn_dim * ratio " + std::to_string(r) +
                                " is not a whole number");
        for (const int h : st.head_choices)
          if (dim % h != 0)
            throw ValidationError(where + ": attention width " + std::to_string(dim) +
                                  " (ratio " + std::to_string(r) +
                                  ") is not divisible by " + std::to_string(h) + " heads");
      }
    }
  }
}

bool is_identity(const SpaceSpec& spec, const LayerGene& gene, std::size_t stage) {
  return gene.op == static_cast<int>(spec.stages[stage].op_types.size());
}

void validate(const SpaceSpec& spec, const ArchEncoding& arch) {
  if (arch.stages.size() != spec.stages.size())
    throw ValidationError("encoding has " + std::to_string(arch.stages.size()) +
                          " stages, space has " + std::to_string(spec.stages.size()));
  for (std::size_t si = 0; si < spec.stages.size(); ++si) {
    const StageSpec& st = spec.stages[si];
    const StageGenes& sg = arch.stages[si];
    const std::string where = "stage " + std::to_string(si + 1);
    auto check_index = [&](int idx, std::size_t n, const std::string& field) {
      if (idx < 0 || idx >= static_cast<int>(n))
        throw ValidationError(where + " " + field + " index " + std::to_string(idx) +
                              " out of range [0, " + std::to_string(n) + ")");
    };
    check_index(sg.patch, st.patch_choices.size(), "patch");
    check_index(sg.embed_ratio, st.embed_ratio_choices.size(), "embed ratio");
    if (sg.layers.size() != static_cast<std::size_t>(st.layers))
      throw ValidationError(where + " has " + std::to_string(sg.layers.size()) +
                            " layer genes, expected " + std::to_string(st.layers));
    for (std::size_t li = 0; li < sg.layers.size(); ++li) {
      const LayerGene& g = sg.layers[li];
      const std::string lw = where + " layer " + std::to_string(li + 1);
      if (g.op < 0 || g.op > static_cast<int>(st.op_types.size()))
        throw ValidationError(lw + " op index " + std::to_string(g.op) +
                              " out of range [0, " + std::to_string(st.op_types.size()) +
                              "] (max value means identity)");
      if (g.op == static_cast<int>(st.op_types.size())) {
        if (g.heads != 0 || g.attn_ratio != 0 || g.mlp_ratio != 0)
          throw ValidationError(lw + ": identity slot carries nonzero sub-choices");
      } else {
        check_index(g.heads, st.head_choices.size(), "layer " + std::to_string(li + 1) + " heads");
        check_index(g.attn_ratio, st.attn_ratio_choices.size(),
                    "layer " + std::to_string(li + 1) + " attn ratio");
        check_index(g.mlp_ratio, st.mlp_ratio_choices.size(),
                    "layer " + std::to_string(li + 1) + " mlp ratio");
      }
    }
  }
}

ArchEncoding canonicalize(const SpaceSpec& spec, const ArchEncoding& arch) {
  validate(spec, arch);
  ArchEncoding out = arch;
  for (std::size_t si = 0; si < out.stages.size(); ++si) {
    auto& layers = out.stages[si].layers;
    std::stable_partition(layers.begin(), layers.end(), [&](const LayerGene& g) {
      return !is_identity(spec, g, si);
    });
  }
  return out;
}

bool is_canonical(const SpaceSpec& spec, const ArchEncoding& arch) {
  for (std::size_t si = 0; si < arch.stages.size(); ++si) {
    bool seen_identity = false;
    for (const LayerGene& g : arch.stages[si].layers) {
      const bool id = is_identity(spec, g, si);
      if (seen_identity && !id) return false;
      seen_identity = seen_identity || id;
    }
  }
  return true;
}

SpaceCount count_space(const SpaceSpec& spec, bool canonical) {
  validate(spec);
  SpaceCount out;
  out.total = 1;
  for (const StageSpec& st : spec.stages) {
    const BigInt embed = BigInt(st.patch_choices.size()) *
                         BigInt(st.embed_ratio_choices.size());
    const BigInt p = st.layers > 0 ? BigInt(st.parametric_choices()) : BigInt(0);
    BigInt stage_count;
    if (canonical) {
      BigInt sum = 0, power = 1;  // sum_{d=0}^{L} P^d
      for (int d = 0; d <= st.layers; ++d) {
        sum += power;
        power *= p;
      }
      stage_count = embed * sum;
    } else {
      BigInt power = 1;
      for (int d = 0; d < st.layers; ++d) power *= (p + 1);
      stage_count = embed * power;
    }
    out.per_stage.push_back(stage_count);
    out.total *= stage_count;
  }
  return out;
}

ArchEncoding sample_uniform(const SpaceSpec& spec, bool canonical, vitas::Rng& rng) {
  validate(spec);
  ArchEncoding arch;
  for (const StageSpec& st : spec.stages) {
    StageGenes sg;
    sg.patch = static_cast<int>(rng.index(st.patch_choices.size()));
    sg.embed_ratio = static_cast<int>(rng.index(st.embed_ratio_choices.size()));
    const std::uint64_t p = st.parametric_choices();
    if (canonical) {
      // Depth d carries weight P^d: that is the number of canonical forms
      // with exactly d parametric layers, so forms come out equiprobable.
      BigInt total = 0, power = 1;
      std::vector<BigInt> cumulative;
      for (int d = 0; d <= st.layers; ++d) {
        total += power;
        cumulative.push_back(total);
        power *= p;
      }
      const BigInt u = random_below_big(rng, total);
      int depth = 0;
      while (u >= cumulative[static_cast<std::size_t>(depth)]) ++depth;
      for (int li = 0; li < st.layers; ++li) {
        if (li < depth) {
          LayerGene g;
          g.op = static_cast<int>(rng.index(st.op_types.size()));
          g.heads = static_cast<int>(rng.index(st.head_choices.size()));
          g.attn_ratio = static_cast<int>(rng.index(st.attn_ratio_choices.size()));
          g.mlp_ratio = static_cast<int>(rng.index(st.mlp_ratio_choices.size()));
          sg.layers.push_back(g);
        } else {
          sg.layers.push_back(identity_gene(st));
        }
      }
    } else {
      for (int li = 0; li < st.layers; ++li) {
        const std::uint64_t k = rng.below(p + 1);
        sg.layers.push_back(k == p ? identity_gene(st) : gene_from_index(st, k));
      }
    }
    arch.stages.push_back(std::move(sg));
  }
  return arch;
}

ArchEncoding sample_uniform(const SpaceSpec& spec, bool canonical, std::uint64_t seed) {
  Rng rng(seed);
  return sample_uniform(spec, canonical, rng);
}

std::string encode(const ArchEncoding& arch) {
  std::ostringstream os;
  for (std::size_t si = 0; si < arch.stages.size(); ++si) {
    if (si) os << '|';
    const StageGenes& sg = arch.stages[si];
    os << sg.patch << ',' << sg.embed_ratio;
    for (const LayerGene& g : sg.layers)
      os << ',' << g.op << ',' << g.heads << ',' << g.attn_ratio << ',' << g.mlp_ratio;
  }
  return os.str();
}

ArchEncoding decode(const SpaceSpec& spec, const std::string& text) {
  std::vector<std::string> stage_parts;
  {
    std::string part;
    std::istringstream is(text);
    while (std::getline(is, part, '|')) stage_parts.push_back(part);
  }
  if (stage_parts.size() != spec.stages.size())
    throw ValidationError("encoding has " + std::to_string(stage_parts.size()) +
                          " stage blocks, space has " + std::to_string(spec.stages.size()));

  ArchEncoding arch;
  for (std::size_t si = 0; si < stage_parts.size(); ++si) {
    const StageSpec& st = spec.stages[si];
    const std::string where = "stage " + std::to_string(si + 1);
    std::vector<int> vals;
    for (const auto& tok : split_csv(stage_parts[si])) {
      try {
        std::size_t pos = 0;
        vals.push_back(std::stoi(tok, &pos));
        if (pos != tok.size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw ValidationError(where + ": '" + tok + "' is not an integer index");
      }
    }
    const std::size_t expected = 2 + 4 * static_cast<std::size_t>(st.layers);
    if (vals.size() != expected)
      throw ValidationError(where + " has " + std::to_string(vals.size()) +
                            " indices, expected " + std::to_string(expected));
    StageGenes sg;
    sg.patch = vals[0];
    sg.embed_ratio = vals[1];
    for (int li = 0; li < st.layers; ++li) {
      LayerGene g;
      g.op = vals[2 + 4 * static_cast<std::size_t>(li)];
      g.heads = vals[3 + 4 * static_cast<std::size_t>(li)];
      g.attn_ratio = vals[4 + 4 * static_cast<std::size_t>(li)];
      g.mlp_ratio = vals[5 + 4 * static_cast<std::size_t>(li)];
      sg.layers.push_back(g);
    }
    arch.stages.push_back(std::move(sg));
  }
  validate(spec, arch);
  return arch;
}

std::vector<ArchEncoding> enumerate_canonical(const SpaceSpec& spec,
                                              std::uint64_t max_count) {
  const SpaceCount count = count_space(spec, true);
  if (count.total > BigInt(max_count))
    throw ValidationError("canonical space holds " + count.total.str() +
                          " forms, beyond the enumeration cap of " +
                          std::to_string(max_count));

  // Per stage, all StageGenes in deterministic order: patch-major, then embed
  // ratio, then depth ascending, then layer genes counting up op-major.
  std::vector<std::vector<StageGenes>> per_stage;
  for (const StageSpec& st : spec.stages) {
    std::vector<StageGenes> forms;
    const std::uint64_t p = st.parametric_choices();
    for (std::size_t pi = 0; pi < st.patch_choices.size(); ++pi) {
      for (std::size_t ei = 0; ei < st.embed_ratio_choices.size(); ++ei) {
        for (int depth = 0; depth <= st.layers; ++depth) {
          std::vector<std::uint64_t> odom(static_cast<std::size_t>(depth), 0);
          while (true) {
            StageGenes sg;
            sg.patch = static_cast<int>(pi);
            sg.embed_ratio = static_cast<int>(ei);
            for (int li = 0; li < depth; ++li)
              sg.layers.push_back(gene_from_index(st, odom[static_cast<std::size_t>(li)]));
            for (int li = depth; li < st.layers; ++li)
              sg.layers.push_back(identity_gene(st));
            forms.push_back(std::move(sg));
            // Advance the odometer; most-significant digit first.
            int pos = depth - 1;
            while (pos >= 0) {
              if (++odom[static_cast<std::size_t>(pos)] < p) break;
              odom[static_cast<std::size_t>(pos)] = 0;
              --pos;
            }
            if (pos < 0) break;
          }
        }
      }
    }
    per_stage.push_back(std::move(forms));
  }

  std::vector<ArchEncoding> out;
  ArchEncoding current;
  current.stages.resize(spec.stages.size());
  auto compose = [&](auto&& self, std::size_t si) -> void {
    if (si == per_stage.size()) {
      out.push_back(current);
      return;
    }
    for (const StageGenes& sg : per_stage[si]) {
      current.stages[si] = sg;
      self(self, si + 1);
    }
  };
  compose(compose, 0);
  return out;
}

}  // namespace vitas::space

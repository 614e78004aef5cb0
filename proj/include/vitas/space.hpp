#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <cstdint>
#include <string>
#include <vector>

namespace vitas {
class Rng;
}

namespace vitas::space {

using BigInt = boost::multiprecision::cpp_int;

enum class Family { TwinsLike, DeiTLike };

std::string to_string(Family family);

/// One pyramid stage: a patch-embedding layer (never skippable) followed by
/// `layers` to-be-searched slots, each choosing Identity or a parametric op
/// with head/width sub-choices. Widths are ratio fractions of the stage maxima.
struct StageSpec {
  std::vector<int> patch_choices;          // embedding patch size / stride
  int embed_max_dim = 0;                   // embedding output at ratio 1.0
  std::vector<double> embed_ratio_choices; // searched embedding width fractions
  int layers = 0;                          // TBS slot count
  std::vector<std::string> op_types;       // e.g. {"local","global"}; Identity implicit
  std::vector<int> head_choices;
  int max_attn_dim = 0;                    // fused QKV output at ratio 1.0
  int max_mlp_dim = 0;                     // MLP hidden at ratio 1.0
  std::vector<double> attn_ratio_choices;
  std::vector<double> mlp_ratio_choices;

  /// Parametric combinations per TBS slot (Identity excluded).
  std::uint64_t parametric_choices() const;
};

struct SpaceSpec {
  std::string name;
  Family family = Family::TwinsLike;
  bool class_token = false;  // DeiT-style prepended classification token
  std::vector<StageSpec> stages;
};

/// One TBS slot's genes. op == |op_types| encodes Identity, in which case the
/// three sub-indices must be zero (Identity carries no sub-choices).
struct LayerGene {
  int op = 0;
  int heads = 0;
  int attn_ratio = 0;
  int mlp_ratio = 0;

  bool operator==(const LayerGene&) const = default;
};

struct StageGenes {
  int patch = 0;
  int embed_ratio = 0;
  std::vector<LayerGene> layers;

  bool operator==(const StageGenes&) const = default;
};

/// A concrete architecture drawn from a SpaceSpec. For class-token families
/// the private token identity is the chosen patch size itself, so encoding
/// equality already distinguishes tokens; no extra gene is stored.
struct ArchEncoding {
  std::vector<StageGenes> stages;

  bool operator==(const ArchEncoding&) const = default;
};

struct SpaceCount {
  BigInt total = 0;
  std::vector<BigInt> per_stage;
};

/// Parse the key=value / [stage] config format (see README). Built-in names
/// twins-tiny/small/base/large and deit-tiny/small load the reference tables.
SpaceSpec parse_space_spec(const std::string& text);
SpaceSpec builtin_space(const std::string& name);
bool is_builtin_space(const std::string& name);
std::vector<std::string> builtin_space_names();

/// Resolve a --space argument: builtin name, or path to a config file.
SpaceSpec load_space(const std::string& name_or_path);

void validate(const SpaceSpec& spec);
void validate(const SpaceSpec& spec, const ArchEncoding& arch);

bool is_identity(const SpaceSpec& spec, const LayerGene& gene, std::size_t stage);

/// Stable-move every Identity slot to the tail of its stage; parametric slots
/// keep their relative order. Idempotent; the image is the canonical
/// representative of all slot orderings realizing the same computation.
ArchEncoding canonicalize(const SpaceSpec& spec, const ArchEncoding& arch);
bool is_canonical(const SpaceSpec& spec, const ArchEncoding& arch);

/// Exact cardinality. canonical=true counts identity-shifted forms:
/// per stage, (patch x embed-ratio choices) * sum_{d=0}^{L} P^d where P is the
/// per-slot parametric combination count; canonical=false counts raw slot
/// assignments (P+1)^L * embedding choices.
SpaceCount count_space(const SpaceSpec& spec, bool canonical);

/// Uniform draw. canonical=true is uniform over canonical forms (depth d is
/// drawn with weight P^d, then genes uniformly); canonical=false is uniform
/// over raw assignments. Deterministic given seed; the second overload
/// advances a caller-owned RNG (for search loops).
ArchEncoding sample_uniform(const SpaceSpec& spec, bool canonical, std::uint64_t seed);
ArchEncoding sample_uniform(const SpaceSpec& spec, bool canonical, vitas::Rng& rng);

/// Text form: per stage "patch,embed_ratio,(op,heads,attn,mlp)*" with stages
/// joined by '|'. decode validates every index and names the offending field.
std::string encode(const ArchEncoding& arch);
ArchEncoding decode(const SpaceSpec& spec, const std::string& text);

/// All canonical forms of a small space, in deterministic lexicographic
/// order; throws if the canonical count exceeds max_count (oracle guard).
std::vector<ArchEncoding> enumerate_canonical(const SpaceSpec& spec,
                                              std::uint64_t max_count);

}  // namespace vitas::space

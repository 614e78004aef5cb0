#include "vitas/cost.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "vitas/errors.hpp"

namespace vitas::cost {

namespace {

using space::ArchEncoding;
using space::Family;
using space::LayerGene;
using space::SpaceSpec;
using space::StageGenes;
using space::StageSpec;

constexpr int kLocalWindowTokens = 49;  // 7x7 neighborhood

long scaled_dim(int max_dim, double ratio) {
  return std::max(1L, std::lround(max_dim * ratio));
}

struct TokenGrid {
  long h = 0;
  long w = 0;
  long grid() const { return h * w; }
};

/// Cost of one parametric layer at token count n (grid plus any class token),
/// width d, key/value token count n_kv.
StageCost layer_cost(long n, long n_kv, long d, long attn_dim, long mlp_dim) {
  StageCost c;
  const double a = static_cast<double>(attn_dim);
  const double qk = a / 3.0;  // per-matrix width of the fused QKV output
  const double nd = static_cast<double>(n) * static_cast<double>(d);
  c.flops = nd * a                                             // QKV projection
            + static_cast<double>(n) * static_cast<double>(n_kv) * qk   // scores
            + static_cast<double>(n) * static_cast<double>(n_kv) * qk   // aggregation
            + static_cast<double>(n) * qk * static_cast<double>(d)      // output proj
            + 2.0 * nd * static_cast<double>(mlp_dim);                  // MLP both FCs
  c.params = static_cast<double>(d) * a + a                    // QKV weight + bias
             + qk * static_cast<double>(d) + static_cast<double>(d)     // proj
             + static_cast<double>(d) * mlp_dim + mlp_dim               // MLP FC1
             + static_cast<double>(mlp_dim) * d + static_cast<double>(d);  // MLP FC2
  return c;
}

long kv_tokens(const SpaceSpec& spec, const StageSpec& st, const std::string& op,
               const TokenGrid& grid, long n) {
  if (spec.family == Family::TwinsLike) {
    if (op == "local") return std::min<long>(kLocalWindowTokens, n);
    if (op == "global") {
      // Keys/values sub-sampled by the stage's embedding stride.
      const long stride = st.patch_choices.empty() ? 1 : st.patch_choices.front();
      return ((grid.h + stride - 1) / stride) * ((grid.w + stride - 1) / stride);
    }
  }
  return n;  // full attention
}

CostReport estimate_impl(const SpaceSpec& spec, const ArchEncoding& arch,
                         int input_h, int input_w, bool validate_arch) {
  if (validate_arch) space::validate(spec, arch);
  if (input_h < 1 || input_w < 1)
    throw ValidationError("input resolution must be positive");

  CostReport report;
  report.per_stage.resize(spec.stages.size());
  TokenGrid grid{input_h, input_w};
  long in_ch = 3;

  for (std::size_t si = 0; si < spec.stages.size(); ++si) {
    const StageSpec& st = spec.stages[si];
    const StageGenes& sg = arch.stages[si];
    StageCost& sc = report.per_stage[si];

    const int patch = st.patch_choices[static_cast<std::size_t>(sg.patch)];
    if (grid.h % patch != 0 || grid.w % patch != 0)
      throw ValidationError("stage " + std::to_string(si + 1) + ": token grid " +
                            std::to_string(grid.h) + "x" + std::to_string(grid.w) +
                            " is not divisible by patch size " + std::to_string(patch));
    grid.h /= patch;
    grid.w /= patch;

    const long d = scaled_dim(st.embed_max_dim,
                              st.embed_ratio_choices[static_cast<std::size_t>(sg.embed_ratio)]);
    const double patch_in = static_cast<double>(in_ch) * patch * patch;
    sc.flops += static_cast<double>(grid.grid()) * static_cast<double>(d) * patch_in;
    sc.params += patch_in * static_cast<double>(d) + static_cast<double>(d);

    const bool with_class_token = spec.class_token && spec.family == Family::DeiTLike;
    const long n = grid.grid() + (with_class_token ? 1 : 0);

    for (const LayerGene& g : sg.layers) {
      if (space::is_identity(spec, g, si)) continue;
      const long attn_dim = scaled_dim(
          st.max_attn_dim, st.attn_ratio_choices[static_cast<std::size_t>(g.attn_ratio)]);
      const long mlp_dim = scaled_dim(
          st.max_mlp_dim, st.mlp_ratio_choices[static_cast<std::size_t>(g.mlp_ratio)]);
      const std::string& op = st.op_types[static_cast<std::size_t>(g.op)];
      const long n_kv = kv_tokens(spec, st, op, grid, n);
      const StageCost lc = layer_cost(n, n_kv, d, attn_dim, mlp_dim);
      sc.flops += lc.flops;
      sc.params += lc.params;
    }

    in_ch = d;
  }

  // Classifier head over the final width, folded into the last stage.
  StageCost& last = report.per_stage.back();
  last.flops += static_cast<double>(in_ch) * kNumClasses;
  last.params += static_cast<double>(in_ch) * kNumClasses + kNumClasses;

  for (const StageCost& sc : report.per_stage) {
    report.flops_g += sc.flops;
    report.params_m += sc.params;
  }
  report.flops_g /= 1e9;
  report.params_m /= 1e6;
  return report;
}

}  // namespace

CostReport estimate(const SpaceSpec& spec, const ArchEncoding& arch, int input_h,
                    int input_w) {
  return estimate_impl(spec, arch, input_h, input_w, /*validate_arch=*/true);
}

std::pair<CostReport, CostReport> min_max_cost(const SpaceSpec& spec, int input_h,
                                               int input_w) {
  space::validate(spec);

  // Enumerate patch-index combinations (tiny products in practice); for each,
  // evaluate the all-identity/min-ratio corner and the full-depth/max-ratio
  // corner with the costlier op per layer.
  std::uint64_t combos = 1;
  for (const StageSpec& st : spec.stages) {
    combos *= st.patch_choices.size();
    if (combos > 100000)
      throw ValidationError("too many patch combinations for exact extremes");
  }

  CostReport best_min, best_max;
  bool have = false;
  std::vector<std::size_t> patch_idx(spec.stages.size(), 0);
  for (std::uint64_t c = 0; c < combos; ++c) {
    std::uint64_t rem = c;
    for (std::size_t si = 0; si < spec.stages.size(); ++si) {
      patch_idx[si] = rem % spec.stages[si].patch_choices.size();
      rem /= spec.stages[si].patch_choices.size();
    }

    ArchEncoding lo, hi;
    bool divisible = true;
    long h = input_h, w = input_w;
    for (std::size_t si = 0; si < spec.stages.size(); ++si) {
      const StageSpec& st = spec.stages[si];
      const int patch = st.patch_choices[patch_idx[si]];
      if (h % patch != 0 || w % patch != 0) {
        divisible = false;
        break;
      }
      h /= patch;
      w /= patch;

      StageGenes glo, ghi;
      glo.patch = ghi.patch = static_cast<int>(patch_idx[si]);
      glo.embed_ratio = 0;
      ghi.embed_ratio = static_cast<int>(st.embed_ratio_choices.size()) - 1;
      for (int li = 0; li < st.layers; ++li) {
        LayerGene id;
        id.op = static_cast<int>(st.op_types.size());
        glo.layers.push_back(id);  // all-identity floor
        LayerGene top;
        top.op = 0;  // op resolved to the costlier kind below
        top.heads = 0;
        top.attn_ratio = static_cast<int>(st.attn_ratio_choices.size()) - 1;
        top.mlp_ratio = static_cast<int>(st.mlp_ratio_choices.size()) - 1;
        ghi.layers.push_back(top);
      }
      lo.stages.push_back(std::move(glo));
      hi.stages.push_back(std::move(ghi));
    }
    if (!divisible) continue;  // this patch path cannot consume the input

    const CostReport lo_report = estimate_impl(spec, lo, input_h, input_w, true);

    // Per-layer costlier op: evaluate each op uniformly across the stage; the
    // op only scales the attention terms, identically for every layer of the
    // stage, so a per-stage argmax is a per-layer argmax.
    CostReport hi_report;
    {
      CostReport best;
      bool first = true;
      std::vector<int> op_pick(spec.stages.size(), 0);
      auto eval_ops = [&](auto&& self, std::size_t si) -> void {
        if (si == spec.stages.size()) {
          ArchEncoding cand = hi;
          for (std::size_t s2 = 0; s2 < cand.stages.size(); ++s2)
            for (LayerGene& g : cand.stages[s2].layers) g.op = op_pick[s2];
          const CostReport r = estimate_impl(spec, cand, input_h, input_w, true);
          if (first || r.flops_g > best.flops_g) {
            best = r;
            first = false;
          }
          return;
        }
        const std::size_t n_ops = std::max<std::size_t>(1, spec.stages[si].op_types.size());
        for (std::size_t oi = 0; oi < n_ops; ++oi) {
          op_pick[si] = static_cast<int>(oi);
          self(self, si + 1);
        }
      };
      eval_ops(eval_ops, 0);
      hi_report = best;
    }

    if (!have || lo_report.flops_g < best_min.flops_g) best_min = lo_report;
    if (!have || hi_report.flops_g > best_max.flops_g) best_max = hi_report;
    have = true;
  }

  if (!have)
    throw ValidationError("no patch combination divides the input resolution " +
                          std::to_string(input_h) + "x" + std::to_string(input_w));
  return {best_min, best_max};
}

bool check_budget(const SpaceSpec& spec, const ArchEncoding& arch, double budget_gflops,
                  int input_h, int input_w) {
  return estimate(spec, arch, input_h, input_w).flops_g <= budget_gflops;
}

}  // namespace vitas::cost

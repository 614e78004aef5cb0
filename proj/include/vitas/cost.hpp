#pragma once

#include <utility>
#include <vector>

#include "vitas/space.hpp"

namespace vitas::cost {

struct StageCost {
  double flops = 0.0;   // multiply-accumulates (1 MAC = 1 FLOP)
  double params = 0.0;  // raw parameter count
};

struct CostReport {
  double flops_g = 0.0;   // giga-MACs
  double params_m = 0.0;  // millions of parameters
  std::vector<StageCost> per_stage;  // one entry per stage; the classifier
                                     // head is folded into the last stage
};

/// Number of output classes assumed by the classifier head.
inline constexpr int kNumClasses = 1000;

/// Deterministic closed-form cost of one architecture at the given input.
/// Patch embed: tokens * D * (C_in * P^2). Attention: QKV N*D*A, then
/// N*N_kv*(A/3) each for scores and aggregation, then N*(A/3)*D projection,
/// with A the fused QKV width. N_kv is window-limited (7x7) for "local" ops
/// and stride-subsampled for "global" ops in twins-family spaces. MLP:
/// 2*N*D*M. Identity slots cost nothing. Softmax/LayerNorm/activations are
/// omitted (sub-1% of the totals).
CostReport estimate(const space::SpaceSpec& spec, const space::ArchEncoding& arch,
                    int input_h = 224, int input_w = 224);

/// Exact extremes of the space. Cost is monotone in every ratio index and in
/// depth, so corners are exact per patch combination; patch combinations are
/// enumerated and the reports with minimal/maximal FLOPs returned.
std::pair<CostReport, CostReport> min_max_cost(const space::SpaceSpec& spec,
                                               int input_h = 224, int input_w = 224);

bool check_budget(const space::SpaceSpec& spec, const space::ArchEncoding& arch,
                  double budget_gflops, int input_h = 224, int input_w = 224);

}  // namespace vitas::cost

#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

namespace vitas::rank {

struct RankStats {
  double pearson = 0.0;
  double spearman = 0.0;
  double kendall = 0.0;
  int n = 0;
};

/// Fractional (average-of-ties) ranks, 1-based.
Eigen::VectorXd average_ranks(const Eigen::VectorXd& v);

double pearson(const Eigen::VectorXd& r, const Eigen::VectorXd& s);

/// Kendall tau-a: (concordant - discordant) / (n(n-1)/2), ties uncorrected.
/// O(n log n) merge counting; exact integer arithmetic throughout.
double kendall_tau(const Eigen::VectorXd& r, const Eigen::VectorXd& s);

/// Pearson, Spearman (Pearson of average ranks) and Kendall in one pass.
/// Throws on length mismatch, n < 2, or zero variance in either vector.
RankStats coefficients(const Eigen::VectorXd& r, const Eigen::VectorXd& s);

struct GroupStats {
  double lo = 0.0;  // group interval [lo, hi)
  double hi = 0.0;
  int n = 0;
  std::optional<RankStats> stats;  // absent when the group was skipped (< 2 paths)
};

/// Budget-bucketed rank agreement between cost and score: assign each
/// (flops, score) path to the group whose [edge_k, edge_{k+1}) interval holds
/// its flops (last edge inclusive), then correlate flops against score within
/// each group. Groups with fewer than two paths are skipped, not errors;
/// paths outside the edges are validation errors.
std::vector<GroupStats> grouped_budget_eval(
    const std::vector<std::pair<double, double>>& paths,
    const std::vector<double>& edges);

/// Equal-width group edges over [lo, hi].
std::vector<double> uniform_edges(double lo, double hi, int groups);

}  // namespace vitas::rank

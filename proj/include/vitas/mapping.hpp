#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

namespace vitas::mapping {

/// Which channel groups serve which candidate width. Column j (0-based)
/// represents the width-(j+1) dimension and must contain exactly j+1 ones.
using BetaMatrix = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>;

enum class MappingKind { Ordinal, Bilateral, Cyclic, Custom };

std::string to_string(MappingKind kind);
MappingKind kind_from_string(const std::string& name);

/// A weight-sharing assignment of l channel groups to l candidate widths.
/// Bilateral mappings carry a second (right-anchored) matrix; a sampled
/// width then trains both sub-paths, doubling per-group training counts.
struct ChannelMapping {
  int l = 0;
  MappingKind kind = MappingKind::Custom;
  bool contiguous = false;  // every column is one cyclic-contiguous run
  BetaMatrix beta;          // l x l, entries in {0,1}
  BetaMatrix beta_right;    // empty unless bilateral

  bool bilateral() const { return beta_right.size() > 0; }
};

template <class Scalar = double>
struct MappingMetricsT {
  Eigen::VectorXi training_counts;                 // row sums (summed pair when bilateral)
  Eigen::Vector<Scalar, Eigen::Dynamic> influence; // I_i = sum_j beta(i,j) / (j+1)
  Scalar influence_gap = Scalar(0);                // sum over unordered pairs of squared diffs
};
using MappingMetrics = MappingMetricsT<double>;

/// Sum over unordered index pairs (i1 < i2) of (x[i1] - x[i2])^2.
/// Equals n*|x|^2 - (sum x)^2; computed pairwise for transparency at small n.
template <class Derived>
typename Derived::Scalar pairwise_squared_gap(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  Scalar gap(0);
  for (Eigen::Index a = 0; a < x.size(); ++a)
    for (Eigen::Index b = a + 1; b < x.size(); ++b) {
      const Scalar d = x(a) - x(b);
      gap += d * d;
    }
  return gap;
}

/// Per-cell influence weights: psi(i,j) = 1/(j+1) where beta(i,j)=1, else 0.
/// A width-j dimension splits its output roughly evenly over its j groups,
/// so each used group contributes ~1/j of the gradient signal.
template <class Scalar = double>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>
influence_matrix(const BetaMatrix& beta) {
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> psi =
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(beta.rows(), beta.cols());
  for (Eigen::Index j = 0; j < beta.cols(); ++j)
    for (Eigen::Index i = 0; i < beta.rows(); ++i)
      if (beta(i, j) != 0) psi(i, j) = Scalar(1) / Scalar(j + 1);
  return psi;
}

/// Row influence sums I_i for one beta matrix.
template <class Scalar = double>
Eigen::Vector<Scalar, Eigen::Dynamic> influence_vector(const BetaMatrix& beta) {
  Eigen::Vector<Scalar, Eigen::Dynamic> inf =
      Eigen::Vector<Scalar, Eigen::Dynamic>::Zero(beta.rows());
  for (Eigen::Index j = 0; j < beta.cols(); ++j) {
    const Scalar w = Scalar(1) / Scalar(j + 1);
    for (Eigen::Index i = 0; i < beta.rows(); ++i)
      if (beta(i, j) != 0) inf(i) += w;
  }
  return inf;
}

/// Leftmost-j assignment: beta(i,j) = 1 iff i <= j. Group i trains l-i times
/// (1-based: l-i+1), so early groups dominate every width.
ChannelMapping build_ordinal(int l);

/// Ordinal pair anchored at both ends: left matrix ordinal, right matrix
/// beta(i,j) = 1 iff i >= l-j-1 (0-based). Summed row counts all equal l+1.
ChannelMapping build_bilateral(int l);

/// Fairness-optimized assignment: column sums exact, row-count spread <= 1,
/// influence gap no worse than ordinal. Contiguous mode keeps every column
/// one cyclic run; otherwise a cell-swap local search may break runs to
/// shrink the gap further. Deterministic.
ChannelMapping build_cyclic(int l, bool contiguous = true);

template <class Scalar = double>
MappingMetricsT<Scalar> metrics_t(const ChannelMapping& m) {
  MappingMetricsT<Scalar> out;
  BetaMatrix combined = m.beta;
  if (m.bilateral()) combined += m.beta_right;
  out.training_counts = combined.rowwise().sum();
  out.influence = influence_vector<Scalar>(m.beta);
  if (m.bilateral()) out.influence += influence_vector<Scalar>(m.beta_right);
  out.influence_gap = pairwise_squared_gap(out.influence);
  return out;
}

MappingMetrics metrics(const ChannelMapping& m);

/// First-improvement hill climbing on the influence gap. Moves swap one used
/// group for one unused group within a single column (column sums invariant);
/// moves that push the row-count spread above max(1, current spread) are
/// rejected. Stuck for max_iters/10 scans -> random kick from the incumbent.
/// Returns the best mapping seen; deterministic given seed.
ChannelMapping refine_local_search(const ChannelMapping& m, int max_iters,
                                   std::uint64_t seed);

/// Exhaustive minimum-gap search over all beta with exact column sums and
/// row-count spread <= 1. Feasible only for l <= 6 (<= 162000 raw matrices);
/// larger l throws. Ties broken toward the lexicographically smallest matrix
/// (row-major scan, 0 before 1).
ChannelMapping enumerate_optimal(int l);

/// Throws ValidationError unless column sums are exact, entries are 0/1 and,
/// for cyclic mappings, the row-count spread is <= 1.
void validate(const ChannelMapping& m);

/// True iff every column of beta is a single contiguous run modulo l.
bool is_contiguous(const BetaMatrix& beta);

/// Plain-text form: "l=<n> kind=<kind>" then l rows of 0/1 digits
/// (a blank line and a second block for bilateral).
std::string to_text(const ChannelMapping& m);
ChannelMapping from_text(const std::string& text);

}  // namespace vitas::mapping

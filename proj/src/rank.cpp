#include "vitas/rank.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>

#include "vitas/errors.hpp"

namespace vitas::rank {

namespace {

// Merge-sort a key sequence in place, counting inversions (bubble-sort swaps).
std::uint64_t merge_count(std::vector<double>& keys, std::vector<double>& tmp,
                          std::size_t lo, std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::uint64_t swaps = merge_count(keys, tmp, lo, mid) + merge_count(keys, tmp, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (keys[j] < keys[i]) {
      swaps += mid - i;
      tmp[k++] = keys[j++];
    } else {
      tmp[k++] = keys[i++];
    }
  }
  while (i < mid) tmp[k++] = keys[i++];
  while (j < hi) tmp[k++] = keys[j++];
  std::copy(tmp.begin() + static_cast<std::ptrdiff_t>(lo),
            tmp.begin() + static_cast<std::ptrdiff_t>(hi),
            keys.begin() + static_cast<std::ptrdiff_t>(lo));
  return swaps;
}

// Sum over runs of equal keys of run*(run-1)/2, i.e. the number of tied pairs.
// Assumes keys sorted by the given comparison order.
std::uint64_t tied_pairs(const std::vector<double>& sorted_keys) {
  std::uint64_t total = 0;
  std::size_t run = 1;
  for (std::size_t i = 1; i <= sorted_keys.size(); ++i) {
    if (i < sorted_keys.size() && sorted_keys[i] == sorted_keys[i - 1]) {
      ++run;
    } else {
      total += static_cast<std::uint64_t>(run) * (run - 1) / 2;
      run = 1;
    }
  }
  return total;
}

void check_pair(const Eigen::VectorXd& r, const Eigen::VectorXd& s) {
  if (r.size() != s.size()) throw ValidationError("rank: input length mismatch");
  if (r.size() < 2) throw ValidationError("rank: need at least two observations");
}

}  // namespace

Eigen::VectorXd average_ranks(const Eigen::VectorXd& v) {
  const Eigen::Index n = v.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return v[a] < v[b]; });
  Eigen::VectorXd ranks(n);
  Eigen::Index i = 0;
  while (i < n) {
    Eigen::Index j = i;
    while (j + 1 < n && v[order[static_cast<std::size_t>(j + 1)]] ==
                            v[order[static_cast<std::size_t>(i)]]) {
      ++j;
    }
    // Positions i..j (0-based) share the average of ranks i+1..j+1.
    const double avg = static_cast<double>(i + j) / 2.0 + 1.0;
    for (Eigen::Index k = i; k <= j; ++k) {
      ranks[order[static_cast<std::size_t>(k)]] = avg;
    }
    i = j + 1;
  }
  return ranks;
}

double pearson(const Eigen::VectorXd& r, const Eigen::VectorXd& s) {
  check_pair(r, s);
  const double n = static_cast<double>(r.size());
  const Eigen::VectorXd rc = r.array() - r.mean();
  const Eigen::VectorXd sc = s.array() - s.mean();
  const double var_r = rc.squaredNorm() / n;
  const double var_s = sc.squaredNorm() / n;
  if (var_r == 0.0 || var_s == 0.0) {
    throw ValidationError("rank: zero variance input, coefficient undefined");
  }
  return (rc.dot(sc) / n) / std::sqrt(var_r * var_s);
}

double kendall_tau(const Eigen::VectorXd& r, const Eigen::VectorXd& s) {
  check_pair(r, s);
  const std::size_t n = static_cast<std::size_t>(r.size());

  // Sort jointly by r (s as secondary key so that ties in r group s runs).
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (r[static_cast<Eigen::Index>(a)] != r[static_cast<Eigen::Index>(b)])
      return r[static_cast<Eigen::Index>(a)] < r[static_cast<Eigen::Index>(b)];
    return s[static_cast<Eigen::Index>(a)] < s[static_cast<Eigen::Index>(b)];
  });

  std::vector<double> r_sorted(n), s_by_r(n);
  for (std::size_t i = 0; i < n; ++i) {
    r_sorted[i] = r[static_cast<Eigen::Index>(order[i])];
    s_by_r[i] = s[static_cast<Eigen::Index>(order[i])];
  }

  // Ties in r alone (n1), ties in s alone (n2), joint ties (n3).
  const std::uint64_t n1 = tied_pairs(r_sorted);
  std::vector<double> s_sorted = s_by_r;
  std::sort(s_sorted.begin(), s_sorted.end());
  const std::uint64_t n2 = tied_pairs(s_sorted);

  std::uint64_t n3 = 0;
  {
    std::size_t run = 1;
    for (std::size_t i = 1; i <= n; ++i) {
      if (i < n && r_sorted[i] == r_sorted[i - 1] && s_by_r[i] == s_by_r[i - 1]) {
        ++run;
      } else {
        n3 += static_cast<std::uint64_t>(run) * (run - 1) / 2;
        run = 1;
      }
    }
  }

  std::vector<double> keys = s_by_r;
  std::vector<double> tmp(n);
  const std::uint64_t swaps = merge_count(keys, tmp, 0, n);

  // Knight's identity: C - D = n0 - n1 - n2 + n3 - 2*swaps, where each
  // bubble swap flips exactly one discordant pair among the untied ones.
  const std::uint64_t n0 = static_cast<std::uint64_t>(n) * (n - 1) / 2;
  const std::int64_t c_minus_d =
      static_cast<std::int64_t>(n0) - static_cast<std::int64_t>(n1) -
      static_cast<std::int64_t>(n2) + static_cast<std::int64_t>(n3) -
      2 * static_cast<std::int64_t>(swaps);
  return static_cast<double>(c_minus_d) / static_cast<double>(n0);
}

RankStats coefficients(const Eigen::VectorXd& r, const Eigen::VectorXd& s) {
  check_pair(r, s);
  RankStats out;
  out.n = static_cast<int>(r.size());
  out.pearson = pearson(r, s);
  out.spearman = pearson(average_ranks(r), average_ranks(s));
  out.kendall = kendall_tau(r, s);
  return out;
}

std::vector<double> uniform_edges(double lo, double hi, int groups) {
  if (!(hi > lo)) throw ValidationError("rank: group range must satisfy hi > lo");
  if (groups < 1) throw ValidationError("rank: need at least one group");
  std::vector<double> edges(static_cast<std::size_t>(groups) + 1);
  for (int k = 0; k <= groups; ++k) {
    edges[static_cast<std::size_t>(k)] =
        lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(groups);
  }
  return edges;
}

std::vector<GroupStats> grouped_budget_eval(
    const std::vector<std::pair<double, double>>& paths,
    const std::vector<double>& edges) {
  if (edges.size() < 2) throw ValidationError("rank: need at least two group edges");
  if (!std::is_sorted(edges.begin(), edges.end()) ||
      std::adjacent_find(edges.begin(), edges.end()) != edges.end()) {
    throw ValidationError("rank: group edges must be strictly increasing");
  }
  const std::size_t groups = edges.size() - 1;
  std::vector<std::vector<std::pair<double, double>>> buckets(groups);
  for (const auto& [flops, score] : paths) {
    if (flops < edges.front() || flops > edges.back()) {
      throw ValidationError("rank: path cost outside the group range");
    }
    // upper_bound gives the first edge strictly above; last edge is inclusive.
    auto it = std::upper_bound(edges.begin(), edges.end(), flops);
    std::size_t k = static_cast<std::size_t>(it - edges.begin());
    k = (k == 0) ? 0 : k - 1;
    if (k >= groups) k = groups - 1;
    buckets[k].emplace_back(flops, score);
  }
  std::vector<GroupStats> out(groups);
  for (std::size_t k = 0; k < groups; ++k) {
    out[k].lo = edges[k];
    out[k].hi = edges[k + 1];
    out[k].n = static_cast<int>(buckets[k].size());
    if (buckets[k].size() < 2) continue;  // skipped group
    Eigen::VectorXd f(static_cast<Eigen::Index>(buckets[k].size()));
    Eigen::VectorXd s(static_cast<Eigen::Index>(buckets[k].size()));
    for (std::size_t i = 0; i < buckets[k].size(); ++i) {
      f[static_cast<Eigen::Index>(i)] = buckets[k][i].first;
      s[static_cast<Eigen::Index>(i)] = buckets[k][i].second;
    }
    // A group whose members all share one cost (or one score) has no
    // defined coefficient; report it as skipped rather than erroring out.
    const bool f_const = (f.maxCoeff() == f.minCoeff());
    const bool s_const = (s.maxCoeff() == s.minCoeff());
    if (f_const || s_const) continue;
    out[k].stats = coefficients(f, s);
  }
  return out;
}

}  // namespace vitas::rank

#include "vitas/mapping.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <sstream>
#include <vector>

#include "vitas/errors.hpp"
#include "vitas/rng.hpp"

namespace vitas::mapping {

namespace {

void require_positive_l(int l) {
  if (l < 1) throw ValidationError("channel group count l must be >= 1");
}

int row_spread(const Eigen::VectorXi& counts) {
  return counts.maxCoeff() - counts.minCoeff();
}

Eigen::VectorXi row_counts(const BetaMatrix& beta) { return beta.rowwise().sum(); }

/// Lexicographic row-major comparison, 0 < 1.
bool lex_less(const BetaMatrix& a, const BetaMatrix& b) {
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      if (a(i, j) != b(i, j)) return a(i, j) < b(i, j);
  return false;
}

/// Place the width-w window at offset o (cyclic) into column j of beta.
void place_window(BetaMatrix& beta, int j, int w, int o) {
  const int l = static_cast<int>(beta.rows());
  beta.col(j).setZero();
  for (int k = 0; k < w; ++k) beta((o + k) % l, j) = 1;
}

struct OffsetObjective {
  int spread_excess;  // max(0, spread - 1)
  double gap;
  bool operator<(const OffsetObjective& other) const {
    if (spread_excess != other.spread_excess) return spread_excess < other.spread_excess;
    return gap < other.gap;
  }
};

BetaMatrix beta_from_offsets(int l, const std::vector<int>& offsets) {
  BetaMatrix beta = BetaMatrix::Zero(l, l);
  for (int j = 0; j < l; ++j) place_window(beta, j, j + 1, offsets[j]);
  return beta;
}

BetaMatrix beta_from_masks(int l, const std::vector<std::uint32_t>& masks) {
  BetaMatrix beta = BetaMatrix::Zero(l, l);
  for (int j = 0; j < l; ++j)
    for (int r = 0; r < l; ++r)
      if ((masks[static_cast<std::size_t>(j)] >> r) & 1u) beta(r, j) = 1;
  return beta;
}

OffsetObjective offsets_objective(int l, const std::vector<int>& offsets) {
  const BetaMatrix beta = beta_from_offsets(l, offsets);
  const Eigen::VectorXi counts = row_counts(beta);
  return {std::max(0, row_spread(counts) - 1),
          pairwise_squared_gap(influence_vector<double>(beta))};
}

/// Greedy window placement: widths l down to 1, each at the offset that
/// minimizes (row-count spread, partial influence gap, offset). Myopic -- a
/// follow-up offset search below recovers the cases where the best final
/// configuration requires a temporarily unbalanced intermediate state.
std::vector<int> greedy_offsets(int l) {
  std::vector<int> offsets(static_cast<std::size_t>(l), 0);
  Eigen::VectorXi counts = Eigen::VectorXi::Zero(l);
  Eigen::VectorXd influence = Eigen::VectorXd::Zero(l);
  for (int w = l; w >= 1; --w) {
    int best_offset = 0;
    int best_spread = std::numeric_limits<int>::max();
    double best_gap = std::numeric_limits<double>::infinity();
    for (int o = 0; o < l; ++o) {
      Eigen::VectorXi c = counts;
      Eigen::VectorXd inf = influence;
      for (int k = 0; k < w; ++k) {
        const int r = (o + k) % l;
        c(r) += 1;
        inf(r) += 1.0 / w;
      }
      const int spread = row_spread(c);
      const double gap = pairwise_squared_gap(inf);
      if (spread < best_spread || (spread == best_spread && gap < best_gap - 1e-12)) {
        best_offset = o;
        best_spread = spread;
        best_gap = gap;
      }
    }
    offsets[static_cast<std::size_t>(w - 1)] = best_offset;
    for (int k = 0; k < w; ++k) {
      const int r = (best_offset + k) % l;
      counts(r) += 1;
      influence(r) += 1.0 / w;
    }
  }
  return offsets;
}

/// Deterministic local search over window offsets (contiguity preserved).
/// Objective: (spread excess over 1, gap), lexicographic. Best-improvement
/// steps with seeded kicks on plateaus; returns the best offsets seen.
std::vector<int> refine_offsets(int l, std::vector<int> offsets) {
  Rng rng(0x5eedULL + static_cast<std::uint64_t>(l));
  std::vector<int> best = offsets;
  OffsetObjective best_obj = offsets_objective(l, best);
  std::vector<int> cur = best;
  OffsetObjective cur_obj = best_obj;
  const int max_rounds = 60 + 10 * l;
  for (int round = 0; round < max_rounds; ++round) {
    bool improved = false;
    // Full-width column: every offset is the same column; skip it.
    for (int j = 0; j + 1 < l; ++j) {
      for (int o = 0; o < l; ++o) {
        if (o == cur[static_cast<std::size_t>(j)]) continue;
        std::vector<int> cand = cur;
        cand[static_cast<std::size_t>(j)] = o;
        const OffsetObjective obj = offsets_objective(l, cand);
        if (obj < cur_obj) {
          cur = std::move(cand);
          cur_obj = obj;
          improved = true;
        }
      }
    }
    if (cur_obj < best_obj) {
      best = cur;
      best_obj = cur_obj;
    }
    if (!improved) {
      // Plateau: kick two random windows and keep climbing.
      cur = best;
      for (int kick = 0; kick < 2 && l > 1; ++kick) {
        const int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(l - 1)));
        cur[static_cast<std::size_t>(j)] = static_cast<int>(rng.below(static_cast<std::uint64_t>(l)));
      }
      cur_obj = offsets_objective(l, cur);
    }
  }
  return best;
}

struct MoveState {
  BetaMatrix beta;
  Eigen::VectorXi counts;
  Eigen::VectorXd influence;
  double gap;
};

MoveState make_state(const BetaMatrix& beta) {
  MoveState s;
  s.beta = beta;
  s.counts = row_counts(beta);
  s.influence = influence_vector<double>(beta);
  s.gap = pairwise_squared_gap(s.influence);
  return s;
}

/// Apply "column j: drop group a, add group b" to the state in place.
void apply_swap(MoveState& s, int j, int a, int b) {
  const double w = 1.0 / (j + 1);
  s.beta(a, j) = 0;
  s.beta(b, j) = 1;
  s.counts(a) -= 1;
  s.counts(b) += 1;
  s.influence(a) -= w;
  s.influence(b) += w;
  s.gap = pairwise_squared_gap(s.influence);
}

}  // namespace

std::string to_string(MappingKind kind) {
  switch (kind) {
    case MappingKind::Ordinal: return "ordinal";
    case MappingKind::Bilateral: return "bilateral";
    case MappingKind::Cyclic: return "cyclic";
    case MappingKind::Custom: return "custom";
  }
  return "custom";
}

MappingKind kind_from_string(const std::string& name) {
  if (name == "ordinal") return MappingKind::Ordinal;
  if (name == "bilateral") return MappingKind::Bilateral;
  if (name == "cyclic") return MappingKind::Cyclic;
  if (name == "custom") return MappingKind::Custom;
  throw ValidationError("unknown mapping kind '" + name + "'");
}

ChannelMapping build_ordinal(int l) {
  require_positive_l(l);
  ChannelMapping m;
  m.l = l;
  m.kind = MappingKind::Ordinal;
  m.contiguous = true;
  m.beta = BetaMatrix::Zero(l, l);
  for (int j = 0; j < l; ++j)
    for (int i = 0; i <= j; ++i) m.beta(i, j) = 1;
  return m;
}

ChannelMapping build_bilateral(int l) {
  require_positive_l(l);
  ChannelMapping m = build_ordinal(l);
  m.kind = MappingKind::Bilateral;
  m.beta_right = BetaMatrix::Zero(l, l);
  for (int j = 0; j < l; ++j)
    for (int i = l - j - 1; i < l; ++i) m.beta_right(i, j) = 1;
  return m;
}

ChannelMapping build_cyclic(int l, bool contiguous) {
  require_positive_l(l);
  ChannelMapping m;
  m.l = l;
  m.kind = MappingKind::Cyclic;
  m.contiguous = contiguous;

  std::vector<int> offsets = refine_offsets(l, greedy_offsets(l));
  m.beta = beta_from_offsets(l, offsets);

  if (!contiguous) {
    // Cell-swap refinement may break the runs; keep whichever is better.
    const ChannelMapping refined = refine_local_search(m, 30 * l * l, 0x17ac1eULL);
    if (metrics(refined).influence_gap < metrics(m).influence_gap) m.beta = refined.beta;
    m.contiguous = is_contiguous(m.beta);
  }
  return m;
}

MappingMetrics metrics(const ChannelMapping& m) { return metrics_t<double>(m); }

ChannelMapping refine_local_search(const ChannelMapping& m, int max_iters,
                                   std::uint64_t seed) {
  validate(m);
  if (m.bilateral())
    throw ValidationError("refine_local_search expects a single-matrix mapping");
  if (max_iters <= 0) return m;

  Rng rng(seed);
  MoveState cur = make_state(m.beta);
  MoveState best = cur;
  const int allowed_spread = std::max(1, row_spread(cur.counts));
  const int plateau_limit = std::max(1, max_iters / 10);
  int plateau = 0;

  // Enumerate all (column, used, unused) swaps once; scan order is shuffled
  // per iteration so first-improvement paths depend only on the seed.
  std::vector<std::array<int, 3>> moves;
  for (int iter = 0; iter < max_iters; ++iter) {
    moves.clear();
    for (int j = 0; j + 1 < m.l; ++j)  // full column has no unused group
      for (int a = 0; a < m.l; ++a)
        for (int b = 0; b < m.l; ++b)
          if (cur.beta(a, j) == 1 && cur.beta(b, j) == 0) moves.push_back({j, a, b});
    for (std::size_t k = moves.size(); k > 1; --k)
      std::swap(moves[k - 1], moves[rng.index(k)]);

    bool improved = false;
    for (const auto& mv : moves) {
      MoveState next = cur;
      apply_swap(next, mv[0], mv[1], mv[2]);
      if (row_spread(next.counts) > allowed_spread) continue;
      if (next.gap < cur.gap - 1e-12) {
        cur = std::move(next);
        improved = true;
        break;  // first improvement
      }
    }
    if (cur.gap < best.gap) {
      best = cur;
      plateau = 0;
    }
    if (!improved) {
      if (++plateau >= plateau_limit) {
        // Kick: a few random constraint-respecting swaps from the incumbent.
        cur = best;
        for (int kick = 0; kick < 3 && !moves.empty(); ++kick) {
          for (std::size_t attempt = 0; attempt < moves.size(); ++attempt) {
            // moves was enumerated against an older matrix; re-check validity.
            const auto& mv = moves[rng.index(moves.size())];
            if (cur.beta(mv[1], mv[0]) != 1 || cur.beta(mv[2], mv[0]) != 0) continue;
            MoveState next = cur;
            apply_swap(next, mv[0], mv[1], mv[2]);
            if (row_spread(next.counts) <= allowed_spread) {
              cur = std::move(next);
              break;
            }
          }
        }
        plateau = 0;
      }
    }
  }

  ChannelMapping out = m;
  out.kind = MappingKind::Custom;
  if (m.kind == MappingKind::Cyclic) out.kind = MappingKind::Cyclic;
  out.beta = best.beta;
  out.contiguous = is_contiguous(out.beta);
  return out;
}

ChannelMapping enumerate_optimal(int l) {
  require_positive_l(l);
  if (l > 6)
    throw ValidationError("enumerate_optimal supports l <= 6 (requested l=" +
                          std::to_string(l) + ")");

  // All column subsets per width, as bitmasks.
  std::vector<std::vector<std::uint32_t>> subsets(static_cast<std::size_t>(l) + 1);
  for (std::uint32_t mask = 0; mask < (1u << l); ++mask) {
    const int bits = __builtin_popcount(mask);
    if (bits >= 1 && bits <= l) subsets[static_cast<std::size_t>(bits)].push_back(mask);
  }

  BetaMatrix best;
  double best_gap = std::numeric_limits<double>::infinity();
  std::vector<std::uint32_t> chosen(static_cast<std::size_t>(l), 0);
  std::vector<int> counts(static_cast<std::size_t>(l), 0);
  std::vector<double> influence(static_cast<std::size_t>(l), 0.0);

  // Depth-first over columns j = 0..l-1 (width j+1), pruning on the row-count
  // spread that is already unavoidable.
  auto recurse = [&](auto&& self, int j) -> void {
    if (j == l) {
      Eigen::Map<const Eigen::VectorXd> inf(influence.data(), l);
      const double gap = pairwise_squared_gap(inf);
      if (gap < best_gap - 1e-12) {
        best_gap = gap;
        best = beta_from_masks(l, chosen);
      } else if (gap < best_gap + 1e-12) {
        const BetaMatrix cand = beta_from_masks(l, chosen);
        if (best.size() == 0 || lex_less(cand, best)) {
          best = cand;
          best_gap = std::min(best_gap, gap);
        }
      }
      return;
    }
    const int remaining = l - j;  // columns still to place, including this one
    for (const std::uint32_t mask : subsets[static_cast<std::size_t>(j + 1)]) {
      int cmin = std::numeric_limits<int>::max();
      int cmax = std::numeric_limits<int>::min();
      for (int r = 0; r < l; ++r) {
        const int c = counts[static_cast<std::size_t>(r)] + ((mask >> r) & 1u);
        cmin = std::min(cmin, c);
        cmax = std::max(cmax, c);
      }
      // A row can still gain at most (remaining - 1) after this column.
      if (cmax - (cmin + remaining - 1) > 1) continue;
      chosen[static_cast<std::size_t>(j)] = mask;
      const double w = 1.0 / (j + 1);
      for (int r = 0; r < l; ++r)
        if ((mask >> r) & 1u) {
          counts[static_cast<std::size_t>(r)] += 1;
          influence[static_cast<std::size_t>(r)] += w;
        }
      const int spread =
          *std::max_element(counts.begin(), counts.end()) -
          *std::min_element(counts.begin(), counts.end());
      if (j + 1 < l || spread <= 1) self(self, j + 1);
      for (int r = 0; r < l; ++r)
        if ((mask >> r) & 1u) {
          counts[static_cast<std::size_t>(r)] -= 1;
          influence[static_cast<std::size_t>(r)] -= w;
        }
    }
  };
  recurse(recurse, 0);

  // Final-spread filter happens inside the leaf guard above; best is set iff
  // some feasible matrix exists (always true: wrap-around tiling works).
  ChannelMapping out;
  out.l = l;
  out.kind = MappingKind::Custom;
  out.beta = best;
  out.contiguous = is_contiguous(out.beta);
  return out;
}

void validate(const ChannelMapping& m) {
  require_positive_l(m.l);
  auto check_block = [&](const BetaMatrix& beta, const char* which) {
    if (beta.rows() != m.l || beta.cols() != m.l)
      throw ValidationError(std::string(which) + " matrix must be l x l");
    for (Eigen::Index j = 0; j < beta.cols(); ++j) {
      int sum = 0;
      for (Eigen::Index i = 0; i < beta.rows(); ++i) {
        if (beta(i, j) != 0 && beta(i, j) != 1)
          throw ValidationError(std::string(which) + " matrix entries must be 0/1");
        sum += beta(i, j);
      }
      if (sum != static_cast<int>(j) + 1)
        throw ValidationError(std::string(which) + " column " + std::to_string(j + 1) +
                              " sums to " + std::to_string(sum) + ", expected " +
                              std::to_string(j + 1));
    }
  };
  check_block(m.beta, "left");
  if (m.bilateral()) check_block(m.beta_right, "right");
  if (m.kind == MappingKind::Cyclic) {
    BetaMatrix combined = m.beta;
    if (m.bilateral()) combined += m.beta_right;
    if (row_spread(row_counts(combined)) > 1)
      throw ValidationError("cyclic mapping row-count spread exceeds 1");
  }
}

bool is_contiguous(const BetaMatrix& beta) {
  const int l = static_cast<int>(beta.rows());
  for (int j = 0; j < l; ++j) {
    int used = 0;
    for (int i = 0; i < l; ++i) used += beta(i, j);
    if (used == 0 || used == l) continue;
    // Count 0->1 boundaries around the cycle; one run <=> exactly one.
    int starts = 0;
    for (int i = 0; i < l; ++i)
      if (beta(i, j) == 1 && beta((i + l - 1) % l, j) == 0) ++starts;
    if (starts != 1) return false;
  }
  return true;
}

std::string to_text(const ChannelMapping& m) {
  std::ostringstream os;
  os << "l=" << m.l << " kind=" << to_string(m.kind) << "\n";
  auto write_block = [&](const BetaMatrix& beta) {
    for (Eigen::Index i = 0; i < beta.rows(); ++i) {
      for (Eigen::Index j = 0; j < beta.cols(); ++j) {
        if (j) os << ' ';
        os << beta(i, j);
      }
      os << '\n';
    }
  };
  write_block(m.beta);
  if (m.bilateral()) {
    os << '\n';
    write_block(m.beta_right);
  }
  return os.str();
}

ChannelMapping from_text(const std::string& text) {
  std::istringstream is(text);
  std::string header;
  if (!std::getline(is, header)) throw ValidationError("empty mapping document");
  int l = 0;
  std::string kind_name;
  {
    std::istringstream hs(header);
    std::string tok;
    while (hs >> tok) {
      if (tok.rfind("l=", 0) == 0) l = std::stoi(tok.substr(2));
      else if (tok.rfind("kind=", 0) == 0) kind_name = tok.substr(5);
    }
  }
  if (l < 1) throw ValidationError("mapping header must declare l=<n> with n >= 1");
  if (kind_name.empty()) throw ValidationError("mapping header must declare kind=<kind>");

  ChannelMapping m;
  m.l = l;
  m.kind = kind_from_string(kind_name);

  auto read_block = [&](BetaMatrix& beta) -> bool {
    beta = BetaMatrix::Zero(l, l);
    int row = 0;
    std::string line;
    while (row < l && std::getline(is, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;  // skip blanks
      std::istringstream ls(line);
      for (int j = 0; j < l; ++j) {
        int v;
        if (!(ls >> v) || (v != 0 && v != 1))
          throw ValidationError("mapping row " + std::to_string(row + 1) +
                                " must hold " + std::to_string(l) + " 0/1 digits");
        beta(row, j) = v;
      }
      ++row;
    }
    return row == l;
  };

  if (!read_block(m.beta)) throw ValidationError("mapping matrix truncated");
  if (m.kind == MappingKind::Bilateral) {
    if (!read_block(m.beta_right))
      throw ValidationError("bilateral mapping needs a second matrix block");
  }
  m.contiguous = is_contiguous(m.beta);
  validate(m);
  return m;
}

}  // namespace vitas::mapping

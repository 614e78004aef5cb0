#include "vitas/simshare.hpp"

#include <algorithm>
#include <cmath>

#include "vitas/errors.hpp"
#include "vitas/rng.hpp"

namespace vitas::simshare {

SimState simulate(const mapping::ChannelMapping& m, long long steps,
                  std::uint64_t seed, bool alternate) {
  mapping::validate(m);
  if (steps < 0) throw ValidationError("simulate: steps must be >= 0");

  SimState state;
  state.l = m.l;
  state.steps = steps;
  state.seed = seed;
  state.counts = Eigen::Vector<long long, Eigen::Dynamic>::Zero(m.l);
  state.influence_acc = Eigen::VectorXd::Zero(m.l);

  Rng rng(seed);
  auto credit = [&](const mapping::BetaMatrix& beta, int j) {
    const double psi = 1.0 / (j + 1);
    for (int i = 0; i < state.l; ++i) {
      if (beta(i, j) != 0) {
        state.counts(i) += 1;
        state.influence_acc(i) += psi;
      }
    }
  };

  for (long long step = 0; step < steps; ++step) {
    const int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(m.l)));
    if (!m.bilateral()) {
      credit(m.beta, j);
    } else if (!alternate) {
      credit(m.beta, j);
      credit(m.beta_right, j);
    } else {
      credit(step % 2 == 0 ? m.beta : m.beta_right, j);
    }
  }
  return state;
}

double empirical_influence(int j, long long trials, std::uint64_t seed) {
  if (j < 1) throw ValidationError("empirical_influence: width j must be >= 1");
  if (trials < 1) throw ValidationError("empirical_influence: trials must be >= 1");
  if (j == 1) return 1.0;  // single term: y_1 / y_1

  Rng rng(seed);
  double acc = 0.0;
  for (long long t = 0; t < trials; ++t) {
    double first = 0.0;
    double total = 0.0;
    for (int k = 0; k < j; ++k) {
      const double y = rng.uniform(0.5, 1.5) * rng.uniform(0.5, 1.5);
      if (k == 0) first = y;
      total += y;
    }
    acc += first / total;
  }
  return acc / static_cast<double>(trials);
}

double grad_check(const TinyFc& fc, double epsilon) {
  if (!(epsilon > 0.0)) throw ValidationError("grad_check: epsilon must be positive");
  if (fc.w.size() != fc.x.size())
    throw ValidationError("grad_check: weight and input widths differ");

  double max_rel = 0.0;
  TinyFc probe = fc;
  for (Eigen::Index i = 0; i < fc.w.size(); ++i) {
    const double analytic = fc.x(i);
    probe.w(i) = fc.w(i) + epsilon;
    const double up = probe.forward();
    probe.w(i) = fc.w(i) - epsilon;
    const double down = probe.forward();
    probe.w(i) = fc.w(i);
    const double numeric = (up - down) / (2.0 * epsilon);
    const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-12});
    max_rel = std::max(max_rel, std::abs(analytic - numeric) / scale);
  }
  return max_rel;
}

}  // namespace vitas::simshare

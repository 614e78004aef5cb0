#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "vitas/mapping.hpp"

namespace vitas::simshare {

/// Accumulated training statistics from uniform width sampling over a
/// channel-group mapping.
struct SimState {
  int l = 0;
  long long steps = 0;
  std::uint64_t seed = 0;
  Eigen::Vector<long long, Eigen::Dynamic> counts;  // updates seen per group
  Eigen::VectorXd influence_acc;                    // summed psi per group
};

/// Draw a width j uniformly from 1..l each step and credit every group used
/// by that width with one update and psi = 1/j influence. Bilateral mappings
/// exercise both sub-paths per step (cost factor two); with alternate=true
/// they alternate sides between steps instead.
SimState simulate(const mapping::ChannelMapping& m, long long steps,
                  std::uint64_t seed, bool alternate = false);

/// Monte Carlo estimate of E[y_1 / sum_{k<=j} y_k] with y_k = w_k * x_k and
/// w, x iid Uniform(0.5, 1.5). Exchangeability makes the expectation exactly
/// 1/j; strictly positive draws keep the denominator sign-stable.
double empirical_influence(int j, long long trials, std::uint64_t seed);

/// A width-j linear neuron y = w . x with its exact gradient dy/dw_i = x_i.
struct TinyFc {
  Eigen::VectorXd w;
  Eigen::VectorXd x;

  double forward() const { return w.dot(x); }
};

/// Max relative error between the analytic gradient and central finite
/// differences at the given epsilon.
double grad_check(const TinyFc& fc, double epsilon);

}  // namespace vitas::simshare

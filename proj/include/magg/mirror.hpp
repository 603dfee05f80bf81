#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include "simplex.hpp"

namespace magg {

// Per-vertex losses for one sample. finite_flag is false when the loss
// layer clamped any component to keep it finite.
struct LossVector {
  std::vector<double> values;
  bool finite_flag = true;
};

inline void require_finite(const std::vector<double>& v, const char* what) {
  for (double x : v)
    if (!std::isfinite(x)) throw std::invalid_argument(std::string(what) + ": non-finite input");
}

// Potential beta * log((1/M) sum_j exp(-zeta_j / beta)), max-shifted so no
// intermediate overflows for |zeta_j / beta| up to 1e6.
inline double potential(const std::vector<double>& zeta, double beta) {
  if (!(beta > 0.0)) throw std::invalid_argument("potential: beta > 0 required");
  require_finite(zeta, "potential");
  const std::size_t M = zeta.size();
  if (M < 2) throw std::invalid_argument("potential: M >= 2 required");
  // a_j = -zeta_j / beta; LSE(a) = max + log sum exp(a - max).
  double amax = -std::numeric_limits<double>::infinity();
  for (double z : zeta) amax = std::max(amax, -z / beta);
  double s = 0.0;
  for (double z : zeta) s += std::exp(-z / beta - amax);
  return beta * (amax + std::log(s) - std::log(static_cast<double>(M)));
}

// Weights proportional to exp(-zeta_j / beta); subtracts min_j zeta_j before
// exponentiation so the largest exponent is exactly 0.
inline SimplexWeights mirror_map(const std::vector<double>& zeta, double beta) {
  if (!(beta > 0.0)) throw std::invalid_argument("mirror_map: beta > 0 required");
  require_finite(zeta, "mirror_map");
  const std::size_t M = zeta.size();
  if (M < 2) throw std::invalid_argument("mirror_map: M >= 2 required");
  double zmin = zeta[0];
  for (double z : zeta) zmin = std::min(zmin, z);
  SimplexWeights w(M);
  double s = 0.0;
  for (std::size_t j = 0; j < M; ++j) {
    w[j] = std::exp(-(zeta[j] - zmin) / beta);
    s += w[j];
  }
  for (double& x : w) x /= s;
  return w;
}

// Engine state: cumulative losses, the running SUM of all weight iterates
// (theta_0 .. theta_i, divided on read), and the step count i.
struct DualState {
  std::vector<double> zeta;
  std::vector<double> avg_accumulator;
  std::size_t step_count = 0;
  double beta = 1.0;

  DualState(std::size_t M, double beta_in) : zeta(M, 0.0), beta(beta_in) {
    if (M < 2) throw std::invalid_argument("DualState: M >= 2 required");
    if (!(beta > 0.0)) throw std::invalid_argument("DualState: beta > 0 required");
    avg_accumulator = uniform_weights(M);  // theta_0
  }
};

// One recursion step: accumulate the loss vector, recompute weights, add the
// NEW weights into the average accumulator. Must be called in sample order.
inline void step(DualState& state, const LossVector& u) {
  if (u.values.size() != state.zeta.size())
    throw std::invalid_argument("step: dimension mismatch");
  require_finite(u.values, "step");
  for (std::size_t j = 0; j < state.zeta.size(); ++j) state.zeta[j] += u.values[j];
  const SimplexWeights theta = mirror_map(state.zeta, state.beta);
  for (std::size_t j = 0; j < theta.size(); ++j) state.avg_accumulator[j] += theta[j];
  ++state.step_count;
}

// Average of theta_0 .. theta_{step_count}; after n-1 steps this is the
// n-sample aggregate, which never sees the n-th sample.
inline SimplexWeights aggregate(const DualState& state) {
  SimplexWeights out(state.avg_accumulator);
  const double inv = 1.0 / static_cast<double>(state.step_count + 1);
  for (double& x : out) x *= inv;
  return out;
}

// Independent closed-form oracle for the weights. Deliberately does not share
// code with mirror_map: exponents are shifted by max_j(-L_j/beta) and the
// normalizer is accumulated with Kahan compensation.
inline SimplexWeights weights_closed_form(const std::vector<double>& cumulative_losses,
                                          double beta) {
  if (!(beta > 0.0))
    throw std::invalid_argument("weights_closed_form: beta > 0 required");
  require_finite(cumulative_losses, "weights_closed_form");
  const std::size_t M = cumulative_losses.size();
  if (M < 2) throw std::invalid_argument("weights_closed_form: M >= 2 required");
  std::vector<double> a(M);
  double amax = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < M; ++j) {
    a[j] = -cumulative_losses[j] / beta;
    amax = std::max(amax, a[j]);
  }
  SimplexWeights w(M);
  double sum = 0.0, comp = 0.0;
  for (std::size_t j = 0; j < M; ++j) {
    w[j] = std::exp(a[j] - amax);
    const double y = w[j] - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  for (double& x : w) x /= sum;
  return w;
}

}  // namespace magg

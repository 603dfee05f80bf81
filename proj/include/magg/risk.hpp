#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "rng.hpp"
#include "simplex.hpp"

namespace magg {

// Argmin with lowest-index tie-break. Input is the running componentwise sum
// of vertex losses, which is order-free, so permuting samples cannot change
// the selection.
inline std::size_t erm_select(const std::vector<double>& cumulative_losses) {
  if (cumulative_losses.empty()) throw std::invalid_argument("erm_select: empty input");
  std::size_t best = 0;
  for (std::size_t j = 1; j < cumulative_losses.size(); ++j)
    if (cumulative_losses[j] < cumulative_losses[best]) best = j;
  return best;
}

// Minimal vertex risk and its (0-based) index, lowest index on ties.
inline std::pair<std::size_t, double> oracle_from_vertex_risks(
    const std::vector<double>& vertex_risks) {
  if (vertex_risks.empty()) throw std::invalid_argument("oracle: empty vertex risks");
  const std::size_t j = erm_select(vertex_risks);
  return {j, vertex_risks[j]};
}

struct McEstimate {
  double estimate = 0.0;
  double stderr_ = 0.0;
  std::size_t n = 0;
};

// Sample mean and unbiased standard error of loss_at_draw over N fresh draws.
inline McEstimate monte_carlo_risk(const std::function<double(Rng&)>& loss_at_draw,
                                   std::size_t N, std::uint64_t seed) {
  if (N < 2) throw std::invalid_argument("monte_carlo_risk: N >= 2 required");
  Rng rng(seed);
  double sum = 0.0, sumsq = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    const double q = loss_at_draw(rng);
    sum += q;
    sumsq += q * q;
  }
  McEstimate e;
  e.n = N;
  e.estimate = sum / static_cast<double>(N);
  const double var =
      std::max(0.0, (sumsq - sum * sum / static_cast<double>(N)) / static_cast<double>(N - 1));
  e.stderr_ = std::sqrt(var / static_cast<double>(N));
  return e;
}

// Divergence closed forms between family parameters (first argument = truth).
inline double kl_param_gaussian(double a, double b, double sigma) {
  const double d = a - b;
  return d * d / (2.0 * sigma * sigma);
}

// Two-point family; the parameter is the mass at x = 0.
inline double kl_param_bernoulli(double a, double b) {
  return a * std::log(a / b) + (1.0 - a) * std::log((1.0 - a) / (1.0 - b));
}

inline double kl_param_poisson(double a, double b) {
  return a * std::log(a / b) + b - a;
}

}  // namespace magg

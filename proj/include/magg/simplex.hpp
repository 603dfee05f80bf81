#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace magg {

// A point of the M-simplex: nonnegative entries summing to 1 within 1e-12.
using SimplexWeights = std::vector<double>;

inline void check_simplex(const SimplexWeights& w, double tol = 1e-12) {
  if (w.size() < 2) throw std::invalid_argument("simplex: M >= 2 required");
  double s = 0.0;
  for (double x : w) {
    if (!(x >= 0.0)) throw std::invalid_argument("simplex: negative weight");
    s += x;
  }
  if (std::fabs(s - 1.0) > tol)
    throw std::invalid_argument("simplex: weights do not sum to 1");
}

inline SimplexWeights uniform_weights(std::size_t M) {
  if (M < 2) throw std::invalid_argument("uniform_weights: M >= 2 required");
  return SimplexWeights(M, 1.0 / static_cast<double>(M));
}

inline SimplexWeights vertex_weights(std::size_t M, std::size_t j) {
  if (M < 2) throw std::invalid_argument("vertex_weights: M >= 2 required");
  if (j >= M) throw std::invalid_argument("vertex_weights: index out of range");
  SimplexWeights w(M, 0.0);
  w[j] = 1.0;
  return w;
}

}  // namespace magg

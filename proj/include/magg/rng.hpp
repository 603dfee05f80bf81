#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace magg {

// splitmix64: stateless 64-bit mixer used for seed derivation.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Declared trial-seed rule: one mixer application per component, chained.
// Stable across platforms; documented in the README.
inline std::uint64_t hash64(std::uint64_t master, std::uint64_t cell,
                            std::uint64_t rep) {
  constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
  std::uint64_t h = splitmix64(master);
  h = splitmix64(h ^ (cell + kGolden));
  h = splitmix64(h ^ (rep + kGolden));
  return h;
}

// Deterministic random stream. All transforms are fixed here rather than
// delegated to std:: distributions, whose algorithms are implementation
// defined; reproducibility of output bytes on one platform is a contract.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t raw() { return eng_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform01() {
    return static_cast<double>(eng_() >> 11) * (1.0 / 9007199254740992.0);
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Marsaglia polar method; caches the spare deviate.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform01() - 1.0;
      v = 2.0 * uniform01() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  // Student t with integer dof: N / sqrt(chi2_nu / nu).
  double student_t(int nu) {
    if (nu < 1) throw std::invalid_argument("student_t: nu >= 1 required");
    double chi2 = 0.0;
    for (int i = 0; i < nu; ++i) {
      const double z = normal();
      chi2 += z * z;
    }
    return normal() / std::sqrt(chi2 / nu);
  }

  // Knuth's product method; adequate for the small rates used here.
  int poisson(double lambda) {
    if (!(lambda > 0.0)) throw std::invalid_argument("poisson: lambda > 0");
    const double limit = std::exp(-lambda);
    int k = 0;
    double p = 1.0;
    do {
      ++k;
      p *= uniform01();
    } while (p > limit);
    return k - 1;
  }

  // Two-point draw with mass `a` at ZERO (note the reversed convention:
  // the parameter is the probability of x = 0, not of x = 1).
  int bernoulli_zero_mass(double a) { return uniform01() < a ? 0 : 1; }

  // Index into `cum` = inclusive cumulative masses (last entry ~ 1).
  std::size_t categorical(const std::vector<double>& cum) {
    const double u = uniform01();
    std::size_t lo = 0, hi = cum.size() - 1;
    while (lo < hi) {
      const std::size_t mid = (lo + hi) / 2;
      if (u < cum[mid]) hi = mid; else lo = mid + 1;
    }
    return lo;
  }

 private:
  std::mt19937_64 eng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace magg

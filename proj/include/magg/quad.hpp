#pragma once

#include <cstddef>
#include <stdexcept>

namespace magg {

// Composite Simpson rule with n even intervals; exact for cubics, which
// covers every closed-form risk integrand used by the built-in scenarios.
template <typename F>
double simpson(F&& f, double a, double b, std::size_t n = 4096) {
  if (n < 2 || n % 2 != 0) throw std::invalid_argument("simpson: n must be even >= 2");
  const double h = (b - a) / static_cast<double>(n);
  double s = f(a) + f(b);
  for (std::size_t i = 1; i < n; ++i)
    s += f(a + h * static_cast<double>(i)) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

template <typename F>
double trapezoid(F&& f, double a, double b, std::size_t n = 4096) {
  if (n < 1) throw std::invalid_argument("trapezoid: n >= 1 required");
  const double h = (b - a) / static_cast<double>(n);
  double s = 0.5 * (f(a) + f(b));
  for (std::size_t i = 1; i < n; ++i) s += f(a + h * static_cast<double>(i));
  return s * h;
}

}  // namespace magg

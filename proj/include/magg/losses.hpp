#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "mirror.hpp"
#include "quad.hpp"
#include "simplex.hpp"

namespace magg {

// ---------------------------------------------------------------------------
// Dictionary: the frozen collection of M candidates. Evaluators come from a
// small declarative catalog so dictionaries round-trip through JSON configs.
// ---------------------------------------------------------------------------

enum class DictKind { regression_fn, classifier_score, density, parameter };

struct ConstantFn {
  double c = 0.0;
};
struct AffineFn {
  double intercept = 0.0;
  double slope = 0.0;
};
// Piecewise-constant density: heights[i] on [edges[i], edges[i+1]); the last
// bin is closed on the right. Zero outside the edge range.
struct HistogramFn {
  std::vector<double> edges;
  std::vector<double> heights;
};
struct GaussianPdfFn {
  double mean = 0.0;
  double sigma = 1.0;
};

using Evaluator = std::variant<ConstantFn, AffineFn, HistogramFn, GaussianPdfFn>;

inline double evaluate(const Evaluator& e, double x) {
  if (const auto* c = std::get_if<ConstantFn>(&e)) return c->c;
  if (const auto* a = std::get_if<AffineFn>(&e)) return a->intercept + a->slope * x;
  if (const auto* h = std::get_if<HistogramFn>(&e)) {
    if (x < h->edges.front() || x > h->edges.back()) return 0.0;
    // upper_bound - 1 gives the bin; the right endpoint folds into the last.
    auto it = std::upper_bound(h->edges.begin(), h->edges.end(), x);
    std::size_t i = static_cast<std::size_t>(it - h->edges.begin());
    if (i == 0) i = 1;
    if (i > h->heights.size()) i = h->heights.size();
    return h->heights[i - 1];
  }
  const auto& g = std::get<GaussianPdfFn>(e);
  const double d = (x - g.mean) / g.sigma;
  return std::exp(-0.5 * d * d) / (g.sigma * std::sqrt(2.0 * M_PI));
}

inline void validate_histogram_density(const HistogramFn& h, double tol = 1e-9) {
  if (h.edges.size() != h.heights.size() + 1 || h.heights.empty())
    throw std::invalid_argument("histogram: edges must be heights+1");
  double mass = 0.0;
  for (std::size_t i = 0; i < h.heights.size(); ++i) {
    const double w = h.edges[i + 1] - h.edges[i];
    if (!(w > 0.0)) throw std::invalid_argument("histogram: edges must increase");
    if (h.heights[i] < 0.0) throw std::invalid_argument("histogram: negative height");
    mass += h.heights[i] * w;
  }
  if (std::fabs(mass - 1.0) > tol)
    throw std::invalid_argument("histogram: not normalized");
}

struct Dictionary {
  DictKind kind = DictKind::regression_fn;
  std::vector<Evaluator> evaluators;  // function kinds
  std::vector<double> params;         // parameter kind only
  double support_lo = 0.0;            // declared support for functions of x
  double support_hi = 1.0;
  std::optional<double> L;       // sup-norm bound on evaluators / parameter cap
  std::optional<double> Ltilde;  // sup-norm bound on candidate-vs-truth gaps
  std::optional<double> ell;     // parameter floor (rate families)

  std::size_t size() const {
    return kind == DictKind::parameter ? params.size() : evaluators.size();
  }
};

// Spot-check |f_j| <= L on a uniform grid over the declared support.
inline void validate_dictionary(const Dictionary& d, std::size_t grid = 257) {
  if (d.size() < 2) throw std::invalid_argument("dictionary: M >= 2 required");
  if (d.kind == DictKind::parameter) {
    for (double a : d.params)
      if (!std::isfinite(a)) throw std::invalid_argument("dictionary: non-finite parameter");
    return;
  }
  for (const auto& e : d.evaluators)
    if (const auto* h = std::get_if<HistogramFn>(&e)) validate_histogram_density(*h);
  if (!d.L) return;
  const double hi = *d.L * (1.0 + 1e-12);
  for (const auto& e : d.evaluators)
    for (std::size_t i = 0; i < grid; ++i) {
      const double x = d.support_lo + (d.support_hi - d.support_lo) *
                                          static_cast<double>(i) / static_cast<double>(grid - 1);
      if (std::fabs(evaluate(e, x)) > hi)
        throw std::invalid_argument("dictionary: evaluator exceeds declared bound L");
    }
}

// ---------------------------------------------------------------------------
// Gram matrix G_jk = integral p_j p_k. Exact bin sums for histogram pairs,
// trapezoid quadrature otherwise.
// ---------------------------------------------------------------------------

struct GramMatrix {
  std::size_t M = 0;
  std::vector<double> entries;  // row-major M x M
  std::string quadrature_meta;

  double at(std::size_t i, std::size_t j) const { return entries[i * M + j]; }
  double& at(std::size_t i, std::size_t j) { return entries[i * M + j]; }
};

// Exact integral of the product of two piecewise-constant densities over the
// union grid of their edges.
inline double histogram_product_integral(const HistogramFn& a, const HistogramFn& b) {
  std::vector<double> cuts;
  cuts.reserve(a.edges.size() + b.edges.size());
  cuts.insert(cuts.end(), a.edges.begin(), a.edges.end());
  cuts.insert(cuts.end(), b.edges.begin(), b.edges.end());
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double lo = cuts[i], hi = cuts[i + 1];
    const double mid = 0.5 * (lo + hi);
    s += evaluate(Evaluator(a), mid) * evaluate(Evaluator(b), mid) * (hi - lo);
  }
  return s;
}

inline GramMatrix gram_matrix(const Dictionary& d, std::size_t grid_points = 4096) {
  if (d.kind != DictKind::density)
    throw std::invalid_argument("gram_matrix: density dictionary required");
  const std::size_t M = d.size();
  GramMatrix g;
  g.M = M;
  g.entries.assign(M * M, 0.0);
  bool all_hist = true;
  for (const auto& e : d.evaluators)
    if (!std::holds_alternative<HistogramFn>(e)) all_hist = false;
  for (std::size_t i = 0; i < M; ++i)
    for (std::size_t j = i; j < M; ++j) {
      double v;
      if (all_hist) {
        v = histogram_product_integral(std::get<HistogramFn>(d.evaluators[i]),
                                       std::get<HistogramFn>(d.evaluators[j]));
      } else {
        v = trapezoid(
            [&](double x) { return evaluate(d.evaluators[i], x) * evaluate(d.evaluators[j], x); },
            d.support_lo, d.support_hi, grid_points);
      }
      g.at(i, j) = v;
      g.at(j, i) = v;
    }
  g.quadrature_meta = all_hist ? "exact-bin-sum" : "trapezoid-" + std::to_string(grid_points);
  return g;
}

// ---------------------------------------------------------------------------
// Margin losses for classification.
// ---------------------------------------------------------------------------

struct PhiLoss {
  std::string name;
  std::function<double(double)> phi;
  std::function<double(double)> d1;
  std::function<double(double)> d2;
};

inline PhiLoss phi_exp() {
  auto e = [](double x) { return std::exp(x); };
  return {"exp", e, e, e};
}

inline PhiLoss phi_logit2() {
  constexpr double ln2 = 0.69314718055994530942;
  return {"logit2",
          [](double x) { return std::log1p(std::exp(x)) / ln2; },
          [](double x) {
            const double s = 1.0 / (1.0 + std::exp(-x));
            return s / ln2;
          },
          [](double x) {
            const double s = 1.0 / (1.0 + std::exp(-x));
            return s * (1.0 - s) / ln2;
          }};
}

inline PhiLoss phi_squared() {
  return {"squared", [](double x) { return (1.0 - x) * (1.0 - x); },
          [](double x) { return 2.0 * x - 2.0; }, [](double) { return 2.0; }};
}

// Second derivative at the kink x = 1 is the one-sided value 2.
inline PhiLoss phi_softmargin() {
  return {"softmargin",
          [](double x) {
            const double m = std::max(0.0, 1.0 - x);
            return m * m;
          },
          [](double x) { return x < 1.0 ? 2.0 * x - 2.0 : 0.0; },
          [](double x) { return x <= 1.0 ? 2.0 : 0.0; }};
}

inline PhiLoss phi_by_name(const std::string& name) {
  if (name == "exp") return phi_exp();
  if (name == "logit2") return phi_logit2();
  if (name == "squared") return phi_squared();
  if (name == "softmargin") return phi_softmargin();
  throw std::invalid_argument("unknown phi loss: " + name);
}

// ---------------------------------------------------------------------------
// Vertex-loss vectors u(z) = (Q(z, e_1), ..., Q(z, e_M)): the only loss
// information the engine ever sees.
// ---------------------------------------------------------------------------

inline LossVector squared_regression_vertex_losses(double x, double y, const Dictionary& d) {
  if (!std::isfinite(y)) throw std::invalid_argument("regression loss: non-finite y");
  LossVector u;
  u.values.resize(d.size());
  for (std::size_t j = 0; j < d.size(); ++j) {
    const double r = y - evaluate(d.evaluators[j], x);
    u.values[j] = r * r;
  }
  return u;
}

// Q(z, theta) = 0.5 theta'theta - z'theta, so Q(z, e_j) = 0.5 - z_j.
inline LossVector quadratic_game_vertex_losses(const std::vector<double>& z) {
  require_finite(z, "game loss");
  LossVector u;
  u.values.resize(z.size());
  for (std::size_t j = 0; j < z.size(); ++j) u.values[j] = 0.5 - z[j];
  return u;
}

inline LossVector phi_classification_vertex_losses(double x, int y, const Dictionary& d,
                                                   const PhiLoss& loss) {
  if (y != 1 && y != -1) throw std::invalid_argument("phi loss: label must be +-1");
  LossVector u;
  u.values.resize(d.size());
  for (std::size_t j = 0; j < d.size(); ++j)
    u.values[j] = loss.phi(-static_cast<double>(y) * evaluate(d.evaluators[j], x));
  return u;
}

// u_j = -log(max(p_j(x), floor)); flags when any clamp fired.
inline LossVector kl_density_vertex_losses(double x, const Dictionary& d, double floor_) {
  if (!(floor_ > 0.0 && floor_ < 1.0))
    throw std::invalid_argument("kl loss: floor must lie in (0, 1)");
  LossVector u;
  u.values.resize(d.size());
  for (std::size_t j = 0; j < d.size(); ++j) {
    const double p = evaluate(d.evaluators[j], x);
    if (p < 0.0) throw std::invalid_argument("kl loss: negative density value");
    if (p < floor_) u.finite_flag = false;
    u.values[j] = -std::log(std::max(p, floor_));
  }
  return u;
}

inline LossVector l2_density_vertex_losses(double x, const Dictionary& d, const GramMatrix& g) {
  if (g.M != d.size()) throw std::invalid_argument("l2 loss: gram dimension mismatch");
  LossVector u;
  u.values.resize(d.size());
  for (std::size_t j = 0; j < d.size(); ++j)
    u.values[j] = g.at(j, j) - 2.0 * evaluate(d.evaluators[j], x);
  return u;
}

enum class ParamFamily { gaussian, bernoulli, poisson };

inline const char* family_name(ParamFamily f) {
  switch (f) {
    case ParamFamily::gaussian: return "gaussian";
    case ParamFamily::bernoulli: return "bernoulli";
    default: return "poisson";
  }
}

inline void validate_family_param(ParamFamily f, double a, const Dictionary& d) {
  switch (f) {
    case ParamFamily::gaussian:
      if (d.L && std::fabs(a) > *d.L * (1.0 + 1e-12))
        throw std::invalid_argument("gaussian family: |a| <= L required");
      break;
    case ParamFamily::bernoulli:
      if (!(a > 0.0 && a < 1.0))
        throw std::invalid_argument("bernoulli family: a in (0,1) required");
      break;
    case ParamFamily::poisson: {
      const double lo = d.ell.value_or(0.0), hi = d.L.value_or(std::numeric_limits<double>::infinity());
      if (!(a > 0.0) || a < lo - 1e-12 || a > hi + 1e-12)
        throw std::invalid_argument("poisson family: a in [ell, L] required");
      break;
    }
  }
}

// Negative log-likelihood at each candidate parameter. NOTE the two-point
// family convention: the parameter is the mass at x = 0 (so x = 0 has
// probability a, x = 1 probability 1 - a).
inline LossVector parametric_kl_vertex_losses(double x, ParamFamily family,
                                              const std::vector<double>& params,
                                              double sigma = 1.0) {
  LossVector u;
  u.values.resize(params.size());
  for (std::size_t j = 0; j < params.size(); ++j) {
    const double a = params[j];
    switch (family) {
      case ParamFamily::gaussian: {
        const double d = (x - a) / sigma;
        u.values[j] = 0.5 * std::log(2.0 * M_PI * sigma * sigma) + 0.5 * d * d;
        break;
      }
      case ParamFamily::bernoulli: {
        if (x != 0.0 && x != 1.0)
          throw std::invalid_argument("bernoulli loss: sample must be 0 or 1");
        u.values[j] = -(x == 0.0 ? std::log(a) : std::log(1.0 - a));
        break;
      }
      case ParamFamily::poisson: {
        if (x < 0.0 || x != std::floor(x))
          throw std::invalid_argument("poisson loss: sample must be a count");
        u.values[j] = -(x * std::log(a) - a - std::lgamma(x + 1.0));
        break;
      }
    }
  }
  return u;
}

// theta' H(x).
inline double mixture_predict(const SimplexWeights& theta, const Dictionary& d, double x) {
  if (theta.size() != d.size()) throw std::invalid_argument("mixture_predict: dimension mismatch");
  double s = 0.0;
  if (d.kind == DictKind::parameter)
    for (std::size_t j = 0; j < theta.size(); ++j) s += theta[j] * d.params[j];
  else
    for (std::size_t j = 0; j < theta.size(); ++j) s += theta[j] * evaluate(d.evaluators[j], x);
  return s;
}

}  // namespace magg

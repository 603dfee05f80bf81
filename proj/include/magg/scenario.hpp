#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "calibration.hpp"
#include "losses.hpp"
#include "mirror.hpp"
#include "quad.hpp"
#include "risk.hpp"
#include "rng.hpp"
#include "simplex.hpp"

namespace magg {

enum class ScenarioKind {
  quadratic_game,
  regression_gaussian,
  regression_exp_moment,
  regression_heavy_tail,
  regression_bounded,
  classification_phi,
  density_kl,
  density_l2,
  parametric_gaussian,
  parametric_bernoulli,
  parametric_poisson,
};

inline std::string kind_to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::quadratic_game: return "quadratic-game";
    case ScenarioKind::regression_gaussian: return "regression-gaussian";
    case ScenarioKind::regression_exp_moment: return "regression-exp-moment";
    case ScenarioKind::regression_heavy_tail: return "regression-heavy-tail";
    case ScenarioKind::regression_bounded: return "regression-bounded";
    case ScenarioKind::classification_phi: return "classification-phi";
    case ScenarioKind::density_kl: return "density-kl";
    case ScenarioKind::density_l2: return "density-l2";
    case ScenarioKind::parametric_gaussian: return "parametric-gaussian";
    case ScenarioKind::parametric_bernoulli: return "parametric-bernoulli";
    default: return "parametric-poisson";
  }
}

inline ScenarioKind kind_from_string(const std::string& s) {
  if (s == "quadratic-game") return ScenarioKind::quadratic_game;
  if (s == "regression-gaussian") return ScenarioKind::regression_gaussian;
  if (s == "regression-exp-moment") return ScenarioKind::regression_exp_moment;
  if (s == "regression-heavy-tail") return ScenarioKind::regression_heavy_tail;
  if (s == "regression-bounded") return ScenarioKind::regression_bounded;
  if (s == "classification-phi") return ScenarioKind::classification_phi;
  if (s == "density-kl") return ScenarioKind::density_kl;
  if (s == "density-l2") return ScenarioKind::density_l2;
  if (s == "parametric-gaussian") return ScenarioKind::parametric_gaussian;
  if (s == "parametric-bernoulli") return ScenarioKind::parametric_bernoulli;
  if (s == "parametric-poisson") return ScenarioKind::parametric_poisson;
  throw std::invalid_argument("unknown scenario kind: " + s);
}

// One observation; which fields are live depends on the scenario kind.
struct Sample {
  double x = 0.0;
  double y = 0.0;            // regression response / classification label
  std::vector<double> z;     // quadratic game vector
};

// A seeded synthetic data process with known truth, frozen dictionary, and
// exact risk oracles. Immutable after validate(); safe to share across
// threads. The mean separation of the quadratic game shrinks with the cell's
// n, so risk/draw calls take n explicitly.
struct Scenario {
  ScenarioKind kind = ScenarioKind::quadratic_game;
  std::size_t M = 0;
  Dictionary dict;

  // quadratic game
  double sigma = 1.0;
  std::size_t truth_k = 0;  // 0-based internally; configs use 1-based

  // regression / classification
  Evaluator truth_fn = ConstantFn{0.0};
  double noise_sigma = 1.0;     // gaussian / exp-moment noise sd
  double noise_halfwidth = 1.0; // bounded-uniform noise
  int t_dof = 5;                // heavy-tail student dof
  double s_moment = 2.0;        // heavy-tail moment order
  double C1 = 1.0;
  double b0 = 1.0;              // exp-moment scale constant
  std::string phi_name;         // classification margin loss
  double eta_slope = 0.0;       // P(Y=1|x) = clip(1/2 + eta_slope*(x-1/2))
  PhiLoss phi;                  // resolved from phi_name

  // densities
  HistogramFn truth_hist;
  double clamp_floor = 1e-300;
  GramMatrix gram;              // density-l2 only

  // parametric families
  ParamFamily family = ParamFamily::gaussian;
  double a_star = 0.5;
  double param_sigma = 1.0;

  std::size_t quad_points = 4096;  // risk quadrature intervals

  bool is_regression() const {
    return kind == ScenarioKind::regression_gaussian ||
           kind == ScenarioKind::regression_exp_moment ||
           kind == ScenarioKind::regression_heavy_tail ||
           kind == ScenarioKind::regression_bounded;
  }
  bool is_density() const {
    return kind == ScenarioKind::density_kl || kind == ScenarioKind::density_l2;
  }
  bool is_parametric() const {
    return kind == ScenarioKind::parametric_gaussian ||
           kind == ScenarioKind::parametric_bernoulli ||
           kind == ScenarioKind::parametric_poisson;
  }

  double delta(std::size_t n) const {
    return 0.5 * sigma * std::sqrt(std::log(static_cast<double>(M)) / static_cast<double>(n));
  }

  // Construction-time checks; also derives gram (l2) and phi (classification).
  void validate() {
    if (kind == ScenarioKind::quadratic_game) {
      if (M < 2) throw std::invalid_argument("scenario: M >= 2 required");
      if (!(sigma > 0.0)) throw std::invalid_argument("scenario: sigma > 0 required");
      if (truth_k >= M) throw std::invalid_argument("scenario: truth_k out of range");
      return;
    }
    M = dict.size();
    validate_dictionary(dict);
    if (is_regression()) {
      if (dict.kind != DictKind::regression_fn)
        throw std::invalid_argument("scenario: regression dictionary required");
      if (kind == ScenarioKind::regression_gaussian ||
          kind == ScenarioKind::regression_exp_moment) {
        if (!(noise_sigma > 0.0)) throw std::invalid_argument("scenario: noise sigma > 0");
      }
      if (kind == ScenarioKind::regression_heavy_tail) {
        if (!(s_moment >= 2.0)) throw std::invalid_argument("scenario: s >= 2 required");
        // The t distribution has moments only below its dof.
        if (!(static_cast<double>(t_dof) > s_moment))
          throw std::invalid_argument("scenario: t dof must exceed s");
      }
      if (kind == ScenarioKind::regression_bounded && !(noise_halfwidth > 0.0))
        throw std::invalid_argument("scenario: noise halfwidth > 0 required");
      if (dict.Ltilde) {
        // Spot-check sup |f_j - f| <= Ltilde on the declared support.
        const double cap = *dict.Ltilde * (1.0 + 1e-12);
        for (std::size_t i = 0; i < 257; ++i) {
          const double x = dict.support_lo + (dict.support_hi - dict.support_lo) *
                                                 static_cast<double>(i) / 256.0;
          const double f = evaluate(truth_fn, x);
          for (const auto& e : dict.evaluators)
            if (std::fabs(evaluate(e, x) - f) > cap)
              throw std::invalid_argument("scenario: |f_j - f| exceeds Ltilde");
        }
      }
    } else if (kind == ScenarioKind::classification_phi) {
      if (dict.kind != DictKind::classifier_score)
        throw std::invalid_argument("scenario: classifier dictionary required");
      for (const auto& e : dict.evaluators)
        for (std::size_t i = 0; i < 257; ++i) {
          const double x = dict.support_lo + (dict.support_hi - dict.support_lo) *
                                                 static_cast<double>(i) / 256.0;
          if (std::fabs(evaluate(e, x)) > 1.0 + 1e-12)
            throw std::invalid_argument("scenario: classifier scores must lie in [-1,1]");
        }
      phi = phi_by_name(phi_name);
    } else if (is_density()) {
      if (dict.kind != DictKind::density)
        throw std::invalid_argument("scenario: density dictionary required");
      validate_histogram_density(truth_hist);
      if (!(clamp_floor > 0.0 && clamp_floor < 1.0))
        throw std::invalid_argument("scenario: clamp floor in (0,1) required");
      if (dict.L) {
        for (const auto& e : dict.evaluators)
          for (double h : std::get<HistogramFn>(e).heights)
            if (h > *dict.L * (1.0 + 1e-12))
              throw std::invalid_argument("scenario: density height exceeds L");
      }
      if (kind == ScenarioKind::density_l2) gram = gram_matrix(dict);
    } else if (is_parametric()) {
      if (dict.kind != DictKind::parameter)
        throw std::invalid_argument("scenario: parameter dictionary required");
      if (kind == ScenarioKind::parametric_gaussian) family = ParamFamily::gaussian;
      if (kind == ScenarioKind::parametric_bernoulli) family = ParamFamily::bernoulli;
      if (kind == ScenarioKind::parametric_poisson) family = ParamFamily::poisson;
      for (double a : dict.params) validate_family_param(family, a, dict);
      validate_family_param(family, a_star, dict);
      if (family == ParamFamily::gaussian && !(param_sigma > 0.0))
        throw std::invalid_argument("scenario: family sigma > 0 required");
    }
    if (M < 2) throw std::invalid_argument("scenario: M >= 2 required");
  }

  // --- data generation ------------------------------------------------------

  Sample draw(Rng& rng, std::size_t n) const {
    Sample s;
    switch (kind) {
      case ScenarioKind::quadratic_game: {
        const double d = delta(n);
        s.z.resize(M);
        for (std::size_t j = 0; j < M; ++j)
          s.z[j] = (j == truth_k ? d : 0.0) + sigma * rng.normal();
        break;
      }
      case ScenarioKind::regression_gaussian:
      case ScenarioKind::regression_exp_moment:
        s.x = rng.uniform(dict.support_lo, dict.support_hi);
        s.y = evaluate(truth_fn, s.x) + noise_sigma * rng.normal();
        break;
      case ScenarioKind::regression_heavy_tail:
        s.x = rng.uniform(dict.support_lo, dict.support_hi);
        s.y = evaluate(truth_fn, s.x) + rng.student_t(t_dof);
        break;
      case ScenarioKind::regression_bounded:
        s.x = rng.uniform(dict.support_lo, dict.support_hi);
        s.y = evaluate(truth_fn, s.x) + rng.uniform(-noise_halfwidth, noise_halfwidth);
        break;
      case ScenarioKind::classification_phi: {
        s.x = rng.uniform(dict.support_lo, dict.support_hi);
        const double eta = eta_at(s.x);
        s.y = rng.uniform01() < eta ? 1.0 : -1.0;
        break;
      }
      case ScenarioKind::density_kl:
      case ScenarioKind::density_l2: {
        // Inverse CDF over the truth histogram: pick the bin containing u,
        // then place x linearly inside it.
        const double u = rng.uniform01();
        double cum = 0.0;
        const auto& h = truth_hist;
        for (std::size_t i = 0; i < h.heights.size(); ++i) {
          const double w = h.edges[i + 1] - h.edges[i];
          const double mass = h.heights[i] * w;
          if (u < cum + mass || i + 1 == h.heights.size()) {
            s.x = mass > 0.0 ? h.edges[i] + (u - cum) / mass * w
                             : 0.5 * (h.edges[i] + h.edges[i + 1]);
            break;
          }
          cum += mass;
        }
        break;
      }
      case ScenarioKind::parametric_gaussian:
        s.x = a_star + param_sigma * rng.normal();
        break;
      case ScenarioKind::parametric_bernoulli:
        s.x = static_cast<double>(rng.bernoulli_zero_mass(a_star));
        break;
      case ScenarioKind::parametric_poisson:
        s.x = static_cast<double>(rng.poisson(a_star));
        break;
    }
    return s;
  }

  double eta_at(double x) const {
    const double mid = 0.5 * (dict.support_lo + dict.support_hi);
    return std::min(1.0, std::max(0.0, 0.5 + eta_slope * (x - mid)));
  }

  // --- losses ----------------------------------------------------------------

  LossVector vertex_losses(const Sample& s) const {
    switch (kind) {
      case ScenarioKind::quadratic_game:
        return quadratic_game_vertex_losses(s.z);
      case ScenarioKind::regression_gaussian:
      case ScenarioKind::regression_exp_moment:
      case ScenarioKind::regression_heavy_tail:
      case ScenarioKind::regression_bounded:
        return squared_regression_vertex_losses(s.x, s.y, dict);
      case ScenarioKind::classification_phi:
        return phi_classification_vertex_losses(s.x, static_cast<int>(s.y), dict, phi);
      case ScenarioKind::density_kl:
        return kl_density_vertex_losses(s.x, dict, clamp_floor);
      case ScenarioKind::density_l2:
        return l2_density_vertex_losses(s.x, dict, gram);
      default:
        return parametric_kl_vertex_losses(s.x, family, dict.params, param_sigma);
    }
  }

  // Mixture loss Q(z, theta) for Monte Carlo estimation.
  double mixture_loss(const SimplexWeights& theta, const Sample& s) const {
    switch (kind) {
      case ScenarioKind::quadratic_game: {
        double q = 0.0, zt = 0.0;
        for (std::size_t j = 0; j < M; ++j) {
          q += theta[j] * theta[j];
          zt += s.z[j] * theta[j];
        }
        return 0.5 * q - zt;
      }
      case ScenarioKind::regression_gaussian:
      case ScenarioKind::regression_exp_moment:
      case ScenarioKind::regression_heavy_tail:
      case ScenarioKind::regression_bounded: {
        const double r = s.y - mixture_predict(theta, dict, s.x);
        return r * r;
      }
      case ScenarioKind::classification_phi:
        return phi.phi(-s.y * mixture_predict(theta, dict, s.x));
      case ScenarioKind::density_kl:
        return -std::log(std::max(mixture_predict(theta, dict, s.x), clamp_floor));
      case ScenarioKind::density_l2: {
        double q = 0.0;
        for (std::size_t i = 0; i < M; ++i)
          for (std::size_t j = 0; j < M; ++j) q += theta[i] * theta[j] * gram.at(i, j);
        return q - 2.0 * mixture_predict(theta, dict, s.x);
      }
      default: {
        const double a = mixture_predict(theta, dict, s.x);
        std::vector<double> one{a, a};  // reuse the vertex kernel at the mixture parameter
        return parametric_kl_vertex_losses(s.x, family, one, param_sigma).values[0];
      }
    }
  }

  // --- exact risks -----------------------------------------------------------
  // The same quadrature evaluates A(theta) and every A(e_j), so any
  // discretization bias cancels in the excess. Parametric risks are reported
  // as divergences from the truth parameter (additive entropy constant
  // dropped); excess values are unaffected.

  double noise_variance() const {
    switch (kind) {
      case ScenarioKind::regression_gaussian:
      case ScenarioKind::regression_exp_moment:
        return noise_sigma * noise_sigma;
      case ScenarioKind::regression_heavy_tail:
        return static_cast<double>(t_dof) / (static_cast<double>(t_dof) - 2.0);
      case ScenarioKind::regression_bounded:
        return noise_halfwidth * noise_halfwidth / 3.0;
      default:
        return 0.0;
    }
  }

  double exact_mixture_risk(const SimplexWeights& theta, std::size_t n) const {
    switch (kind) {
      case ScenarioKind::quadratic_game: {
        const double d = delta(n);
        double q = 0.0;
        for (double t : theta) q += t * t;
        return 0.5 * q - d * theta[truth_k];
      }
      case ScenarioKind::regression_gaussian:
      case ScenarioKind::regression_exp_moment:
      case ScenarioKind::regression_heavy_tail:
      case ScenarioKind::regression_bounded: {
        const double len = dict.support_hi - dict.support_lo;
        const double l2 = simpson(
            [&](double x) {
              const double r = mixture_predict(theta, dict, x) - evaluate(truth_fn, x);
              return r * r;
            },
            dict.support_lo, dict.support_hi, quad_points) / len;
        return l2 + noise_variance();
      }
      case ScenarioKind::classification_phi: {
        const double len = dict.support_hi - dict.support_lo;
        return simpson(
                   [&](double x) {
                     const double v = mixture_predict(theta, dict, x);
                     const double eta = eta_at(x);
                     return eta * phi.phi(-v) + (1.0 - eta) * phi.phi(v);
                   },
                   dict.support_lo, dict.support_hi, quad_points) / len;
      }
      case ScenarioKind::density_kl:
        return density_kl_risk([&](double x) {
          return mixture_predict(theta, dict, x);
        });
      case ScenarioKind::density_l2: {
        double q = 0.0;
        for (std::size_t i = 0; i < M; ++i)
          for (std::size_t j = 0; j < M; ++j) q += theta[i] * theta[j] * gram.at(i, j);
        double c = 0.0;
        for (std::size_t j = 0; j < M; ++j)
          c += theta[j] * histogram_product_integral(std::get<HistogramFn>(dict.evaluators[j]),
                                                     truth_hist);
        return q - 2.0 * c;
      }
      case ScenarioKind::parametric_gaussian:
        return kl_param_gaussian(a_star, mixture_predict(theta, dict, 0.0), param_sigma);
      case ScenarioKind::parametric_bernoulli:
        return kl_param_bernoulli(a_star, mixture_predict(theta, dict, 0.0));
      default:
        return kl_param_poisson(a_star, mixture_predict(theta, dict, 0.0));
    }
  }

  std::vector<double> exact_vertex_risks(std::size_t n) const {
    std::vector<double> r(M);
    for (std::size_t j = 0; j < M; ++j) r[j] = exact_mixture_risk(vertex_weights(M, j), n);
    return r;
  }

  // Simplex-wide optimum of the game risk (closed form); used as an extra
  // reference column. Interior once delta < 1.
  double game_simplex_optimum(std::size_t n) const {
    if (kind != ScenarioKind::quadratic_game)
      throw std::logic_error("game_simplex_optimum: wrong scenario kind");
    const double d = delta(n);
    if (d >= 1.0) return 0.5 - d;  // vertex e_k is optimal for huge separations
    const double c = (1.0 - d) / static_cast<double>(M);
    const double mm = static_cast<double>(M);
    return 0.5 * ((mm - 1.0) * c * c + (c + d) * (c + d)) - d * (c + d);
  }

  BetaPolicy beta_policy(std::size_t n, bool use_claimed = false) const {
    std::map<std::string, double> c;
    switch (kind) {
      case ScenarioKind::quadratic_game:
        c = {{"sigma", sigma}, {"M", static_cast<double>(M)}, {"n", static_cast<double>(n)}};
        break;
      case ScenarioKind::regression_gaussian:
        c = {{"sigma", noise_sigma}, {"Ltilde", dict.Ltilde.value_or(0.0)}};
        break;
      case ScenarioKind::regression_exp_moment:
        c = {{"sigma", noise_sigma},
             {"Ltilde", dict.Ltilde.value_or(0.0)},
             {"L", dict.L.value_or(0.0)},
             {"b0", b0}};
        break;
      case ScenarioKind::regression_heavy_tail:
        c = {{"s", s_moment},
             {"C1", C1},
             {"n", static_cast<double>(n)},
             {"M", static_cast<double>(M)}};
        break;
      case ScenarioKind::regression_bounded:
        c = {{"L", dict.L.value_or(0.0)}};
        break;
      case ScenarioKind::density_l2:
        c = {{"L", dict.L.value_or(0.0)}};
        break;
      case ScenarioKind::parametric_gaussian:
        c = {{"sigma", param_sigma}, {"L", dict.L.value_or(0.0)}};
        break;
      case ScenarioKind::parametric_poisson:
        c = {{"ell", dict.ell.value_or(0.0)}, {"L", dict.L.value_or(0.0)}};
        break;
      default:
        break;
    }
    return beta_for_scenario(kind_to_string(kind), c, phi_name, use_claimed);
  }

 private:
  // Exact integral of -p(x) log(max(q(x), floor)) over the union bin grid;
  // every integrand here is piecewise constant, so midpoint sums are exact.
  template <typename QFn>
  double density_kl_risk(QFn&& q) const {
    std::vector<double> cuts(truth_hist.edges);
    for (const auto& e : dict.evaluators) {
      const auto& h = std::get<HistogramFn>(e);
      cuts.insert(cuts.end(), h.edges.begin(), h.edges.end());
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      const double mid = 0.5 * (cuts[i] + cuts[i + 1]);
      const double p = evaluate(Evaluator(truth_hist), mid);
      if (p <= 0.0) continue;
      s -= p * std::log(std::max(q(mid), clamp_floor)) * (cuts[i + 1] - cuts[i]);
    }
    return s;
  }
};

}  // namespace magg

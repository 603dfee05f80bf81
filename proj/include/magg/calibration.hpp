#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "losses.hpp"
#include "rng.hpp"
#include "simplex.hpp"

namespace magg {

// ---------------------------------------------------------------------------
// Temperature policies: the minimal temperature each scenario family needs
// for the fast-rate guarantee, as exact closed-form arithmetic.
// ---------------------------------------------------------------------------

struct BetaPolicy {
  std::string scenario_kind;
  double beta_min = 0.0;
  std::map<std::string, double> constants;
  std::string provenance;  // human-readable rule, e.g. "beta >= 12*L"
};

struct MomentConstants {
  double b = 0.0;
  double B = 0.0;
  double beta_min = 0.0;
};

// B is pinned to (4L+2)^{-2}; b is the midpoint of its admissible interval
// (L*B, 1/4). L*B < 1/4 holds for every L > 0.
inline MomentConstants bounded_moment_constants(double L) {
  if (!(L > 0.0)) throw std::invalid_argument("bounded_moment_constants: L > 0 required");
  MomentConstants c;
  c.B = 1.0 / ((4.0 * L + 2.0) * (4.0 * L + 2.0));
  c.b = 0.5 * (L * c.B + 0.25);
  c.beta_min = (c.b / c.B) * (c.b / c.B);
  return c;
}

// Tail remainder: 4L|y| outside [-B beta, B beta], a quadratic bridge on the
// middle band, zero on [-b sqrt(beta), b sqrt(beta)]. The middle band can be
// empty when b sqrt(beta) >= B beta; nothing special-cases that.
inline double remainder_R_beta(double y, double L, double b, double B, double beta) {
  const double ay = std::fabs(y);
  if (ay >= B * beta) return 4.0 * L * ay;
  if (ay > b * std::sqrt(beta)) return 4.0 * L * L * y * y / (B * beta);
  return 0.0;
}

// beta = C1 * (n / log M)^{2/(2+s)} for the s-th-moment regression family.
inline double moment_beta(double s, double C1, std::size_t n, std::size_t M) {
  if (!(s >= 2.0)) throw std::invalid_argument("moment_beta: s >= 2 required");
  if (!(C1 > 0.0)) throw std::invalid_argument("moment_beta: C1 > 0 required");
  if (M < 2 || n < 1) throw std::invalid_argument("moment_beta: M >= 2, n >= 1 required");
  return C1 * std::pow(static_cast<double>(n) / std::log(static_cast<double>(M)),
                       2.0 / (2.0 + s));
}

// Smallest sufficient temperature for a margin loss: sup over a 10001-point
// grid on [-1, 1] of phi'(x)^2 / phi''(x), with 0/0 read as 0.
inline double beta_phi(const PhiLoss& loss, std::size_t grid = 10001) {
  double sup = 0.0;
  for (std::size_t i = 0; i < grid; ++i) {
    const double x = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(grid - 1);
    const double g1 = loss.d1(x), g2 = loss.d2(x);
    const double num = g1 * g1;
    if (g2 <= 0.0) {
      if (num <= 1e-24) continue;  // 0/0
      throw std::domain_error("beta_phi: unbounded ratio (phi'' = 0 with phi' != 0) for " +
                              loss.name);
    }
    sup = std::max(sup, num / g2);
  }
  return sup;
}

// Claimed thresholds from the published analysis where they differ from the
// grid-sup sufficient values; selected by the --claimed-beta switch.
inline std::optional<double> claimed_beta_phi(const std::string& name) {
  constexpr double e = 2.718281828459045235;
  constexpr double ln2 = 0.69314718055994530942;
  if (name == "logit2") return e * ln2;
  if (name == "squared" || name == "softmargin") return 2.0;
  return std::nullopt;
}

inline double require_const(const std::map<std::string, double>& c, const std::string& k,
                            const std::string& kind) {
  auto it = c.find(k);
  if (it == c.end())
    throw std::invalid_argument("beta_for_scenario(" + kind + "): missing constant '" + k + "'");
  return it->second;
}

inline void require_positive(double v, const std::string& name, const std::string& kind) {
  if (!(v > 0.0))
    throw std::invalid_argument("beta_for_scenario(" + kind + "): " + name + " > 0 violated");
}

// Exact closed-form threshold per scenario family. `phi_name` is consulted
// only for classification-phi; `use_claimed` switches to the published
// claimed margin-loss values where they exist.
inline BetaPolicy beta_for_scenario(const std::string& kind,
                                    const std::map<std::string, double>& c,
                                    const std::string& phi_name = "",
                                    bool use_claimed = false) {
  BetaPolicy p;
  p.scenario_kind = kind;
  p.constants = c;
  if (kind == "density-kl" || kind == "parametric-bernoulli") {
    p.beta_min = 1.0;
    p.provenance = "beta >= 1";
  } else if (kind == "density-l2") {
    const double L = require_const(c, "L", kind);
    require_positive(L, "L", kind);
    p.beta_min = 12.0 * L;
    p.provenance = "beta >= 12*L";
  } else if (kind == "regression-gaussian") {
    const double sigma = require_const(c, "sigma", kind);
    const double Lt = require_const(c, "Ltilde", kind);
    require_positive(sigma, "sigma", kind);
    require_positive(Lt, "Ltilde", kind);
    p.beta_min = 2.0 * sigma * sigma + 2.0 * Lt * Lt;
    p.provenance = "beta >= 2*sigma^2 + 2*Ltilde^2";
  } else if (kind == "regression-exp-moment") {
    const double sigma = require_const(c, "sigma", kind);
    const double Lt = require_const(c, "Ltilde", kind);
    const double L = require_const(c, "L", kind);
    const double b0 = require_const(c, "b0", kind);
    require_positive(sigma, "sigma", kind);
    require_positive(Lt, "Ltilde", kind);
    require_positive(L, "L", kind);
    require_positive(b0, "b0", kind);
    p.beta_min = std::max(2.0 * sigma * sigma + 2.0 * Lt * Lt, 4.0 * L / b0);
    p.provenance = "beta >= max(2*sigma^2 + 2*Ltilde^2, 4*L/b0)";
  } else if (kind == "regression-bounded") {
    const double L = require_const(c, "L", kind);
    require_positive(L, "L", kind);
    const MomentConstants mc = bounded_moment_constants(L);
    p.beta_min = mc.beta_min;
    p.constants["b"] = mc.b;
    p.constants["B"] = mc.B;
    p.provenance = "beta >= (b/B)^2, B = (4L+2)^-2, b = (L*B + 1/4)/2";
  } else if (kind == "regression-heavy-tail") {
    const double s = require_const(c, "s", kind);
    const double C1 = c.count("C1") ? c.at("C1") : 1.0;
    const double n = require_const(c, "n", kind);
    const double M = require_const(c, "M", kind);
    p.beta_min = moment_beta(s, C1, static_cast<std::size_t>(n), static_cast<std::size_t>(M));
    p.constants["C1"] = C1;
    p.provenance = "beta = C1 * (n/log M)^(2/(2+s))";
  } else if (kind == "parametric-gaussian") {
    const double sigma = require_const(c, "sigma", kind);
    const double L = require_const(c, "L", kind);
    require_positive(sigma, "sigma", kind);
    require_positive(L, "L", kind);
    p.beta_min = 2.0 * sigma * sigma + 8.0 * L * L;
    p.provenance = "beta >= 2*sigma^2 + 8*L^2";
  } else if (kind == "parametric-poisson") {
    const double ell = require_const(c, "ell", kind);
    const double L = require_const(c, "L", kind);
    require_positive(ell, "ell", kind);
    if (!(L > ell))
      throw std::invalid_argument("beta_for_scenario(parametric-poisson): L > ell violated");
    p.beta_min = 1.0 + L * (1.0 + L / ell) * std::pow(L / ell, 1.0 / (2.0 * L + 1.0));
    p.provenance = "beta >= 1 + L*(1 + L/ell)*(L/ell)^(1/(2L+1))";
  } else if (kind == "quadratic-game") {
    // Exact moment-generating-function certificate: the exponential of the
    // loss difference is concave once beta >= 2 sigma^2 + 2 (1+delta)^2,
    // delta being the mean separation of the scenario.
    const double sigma = require_const(c, "sigma", kind);
    const double n = require_const(c, "n", kind);
    const double M = require_const(c, "M", kind);
    require_positive(sigma, "sigma", kind);
    if (M < 2.0 || n < 1.0)
      throw std::invalid_argument("beta_for_scenario(quadratic-game): M >= 2, n >= 1 violated");
    const double delta = 0.5 * sigma * std::sqrt(std::log(M) / n);
    p.beta_min = 2.0 * sigma * sigma + 2.0 * (1.0 + delta) * (1.0 + delta);
    p.constants["delta"] = delta;
    p.provenance = "beta >= 2*sigma^2 + 2*(1+delta)^2, delta = (sigma/2)*sqrt(log M / n)";
  } else if (kind == "classification-phi") {
    if (phi_name.empty())
      throw std::invalid_argument("beta_for_scenario(classification-phi): phi name required");
    const PhiLoss loss = phi_by_name(phi_name);
    const double computed = beta_phi(loss);
    const std::optional<double> claimed = claimed_beta_phi(phi_name);
    p.constants["computed_sufficient"] = computed;
    if (claimed) p.constants["claimed"] = *claimed;
    p.beta_min = (use_claimed && claimed) ? *claimed : computed;
    p.provenance = "beta >= sup_{|x|<=1} phi'(x)^2 / phi''(x) (" + phi_name + ")";
  } else {
    throw std::invalid_argument("beta_for_scenario: unknown kind '" + kind + "'");
  }
  return p;
}

// ---------------------------------------------------------------------------
// Concavity checking. Functions on the simplex carry optional analytic
// derivatives; without them, central differences with Richardson refinement.
// ---------------------------------------------------------------------------

struct SimplexFn {
  std::function<double(const std::vector<double>&)> value;
  // grad fills g (size M); hess fills row-major M x M. Either may be null.
  std::function<void(const std::vector<double>&, std::vector<double>&)> grad;
  std::function<void(const std::vector<double>&, std::vector<double>&)> hess;
};

struct ConcavityReport {
  double min_eigenvalue_observed = 0.0;
  std::size_t sample_points = 0;
  double tolerance = 0.0;
  bool passed = false;
};

namespace detail {

// ~eps^(1/4): second differences divide function rounding by h^2, so a
// smaller step drowns a near-zero Hessian in noise before truncation matters.
inline double fd_step(double x) { return 1e-4 * std::max(1.0, std::fabs(x)); }

// Central difference with one Richardson refinement: (4 D(h/2) - D(h)) / 3.
inline double fd_partial(const SimplexFn& f, std::vector<double> th, std::size_t j) {
  const double h = fd_step(th[j]);
  auto diff = [&](double hh) {
    th[j] += hh;
    const double up = f.value(th);
    th[j] -= 2.0 * hh;
    const double dn = f.value(th);
    th[j] += hh;
    return (up - dn) / (2.0 * hh);
  };
  const double d1 = diff(h), d2 = diff(0.5 * h);
  return (4.0 * d2 - d1) / 3.0;
}

inline void fd_gradient(const SimplexFn& f, const std::vector<double>& th,
                        std::vector<double>& g) {
  g.resize(th.size());
  for (std::size_t j = 0; j < th.size(); ++j) g[j] = fd_partial(f, th, j);
}

inline void fd_hessian(const SimplexFn& f, const std::vector<double>& th,
                       std::vector<double>& h) {
  const std::size_t M = th.size();
  h.assign(M * M, 0.0);
  std::vector<double> t = th;
  for (std::size_t j = 0; j < M; ++j) {
    const double hj = fd_step(th[j]);
    std::vector<double> gp, gm;
    t[j] = th[j] + hj;
    fd_gradient(f, t, gp);
    t[j] = th[j] - hj;
    fd_gradient(f, t, gm);
    t[j] = th[j];
    for (std::size_t k = 0; k < M; ++k) h[j * M + k] = (gp[k] - gm[k]) / (2.0 * hj);
  }
  // Symmetrize: FD cross-derivatives differ by O(h^2) noise.
  for (std::size_t j = 0; j < M; ++j)
    for (std::size_t k = j + 1; k < M; ++k) {
      const double v = 0.5 * (h[j * M + k] + h[k * M + j]);
      h[j * M + k] = v;
      h[k * M + j] = v;
    }
}

inline void eval_derivatives(const SimplexFn& f, const std::vector<double>& th,
                             std::vector<double>& g, std::vector<double>& h) {
  if (f.grad) f.grad(th, g); else fd_gradient(f, th, g);
  if (f.hess) f.hess(th, h); else fd_hessian(f, th, h);
}

}  // namespace detail

// Flat-Dirichlet interior points; vertices and edge midpoints are appended
// deterministically when M <= 4 (cheap full coverage of the 1-skeleton).
inline std::vector<std::vector<double>> simplex_sample_points(std::size_t M, std::size_t N,
                                                              Rng& rng) {
  std::vector<std::vector<double>> pts;
  pts.reserve(N + (M <= 4 ? M + M * (M - 1) / 2 : 0));
  if (M <= 4) {
    for (std::size_t j = 0; j < M; ++j) pts.push_back(vertex_weights(M, j));
    for (std::size_t i = 0; i < M; ++i)
      for (std::size_t j = i + 1; j < M; ++j) {
        std::vector<double> p(M, 0.0);
        p[i] = 0.5;
        p[j] = 0.5;
        pts.push_back(p);
      }
  }
  while (pts.size() < N) {
    std::vector<double> p(M);
    double s = 0.0;
    for (double& x : p) {
      x = -std::log(1.0 - rng.uniform01());
      s += x;
    }
    for (double& x : p) x /= s;
    pts.push_back(p);
  }
  return pts;
}

namespace detail {

// Minimum eigenvalue of matrices A(theta) across sampled points; passed iff
// it stays above -tol_rel * scale, scale = max(1, largest |entry| seen).
template <typename MatrixAt>
ConcavityReport scan_min_eigenvalue(MatrixAt&& matrix_at, std::size_t M, std::size_t N,
                                    std::uint64_t seed, double tol_rel) {
  if (N < 1) throw std::invalid_argument("concavity check: N >= 1 required");
  Rng rng(seed);
  const auto pts = simplex_sample_points(M, N, rng);
  double min_eig = std::numeric_limits<double>::infinity();
  double scale = 1.0;
  std::vector<double> a;
  Eigen::MatrixXd A(M, M);
  for (const auto& th : pts) {
    matrix_at(th, a);
    for (std::size_t i = 0; i < M * M; ++i) scale = std::max(scale, std::fabs(a[i]));
    for (std::size_t i = 0; i < M; ++i)
      for (std::size_t j = 0; j < M; ++j)
        A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = a[i * M + j];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A, Eigen::EigenvaluesOnly);
    min_eig = std::min(min_eig, es.eigenvalues().minCoeff());
  }
  ConcavityReport r;
  r.min_eigenvalue_observed = min_eig;
  r.sample_points = pts.size();
  r.tolerance = tol_rel * scale;
  r.passed = min_eig >= -r.tolerance;
  return r;
}

}  // namespace detail

// Exponential-concavity certificate: beta * hess(g) - grad(g) grad(g)^T must
// be positive semidefinite across the simplex.
inline ConcavityReport check_exp_concavity(const SimplexFn& g, double beta, std::size_t M,
                                           std::size_t N = 500, std::uint64_t seed = 1,
                                           double tol_rel = 1e-8) {
  if (!(beta > 0.0)) throw std::invalid_argument("check_exp_concavity: beta > 0 required");
  std::vector<double> gr, he;
  return detail::scan_min_eigenvalue(
      [&](const std::vector<double>& th, std::vector<double>& a) {
        detail::eval_derivatives(g, th, gr, he);
        if (!std::isfinite(g.value(th)))
          throw std::invalid_argument("check_exp_concavity: non-finite g");
        a.assign(M * M, 0.0);
        for (std::size_t i = 0; i < M; ++i)
          for (std::size_t j = 0; j < M; ++j)
            a[i * M + j] = beta * he[i * M + j] - gr[i] * gr[j];
      },
      M, N, seed, tol_rel);
}

// Plain concavity: the negated Hessian must be positive semidefinite, i.e.
// the reported minimum eigenvalue is min eig(-hess f).
inline ConcavityReport check_concavity(const SimplexFn& f, std::size_t M, std::size_t N = 500,
                                       std::uint64_t seed = 1, double tol_rel = 1e-8) {
  std::vector<double> gr, he;
  return detail::scan_min_eigenvalue(
      [&](const std::vector<double>& th, std::vector<double>& a) {
        detail::eval_derivatives(f, th, gr, he);
        a.assign(M * M, 0.0);
        for (std::size_t i = 0; i < M * M; ++i) a[i] = -he[i];
      },
      M, N, seed, tol_rel);
}

// ---------------------------------------------------------------------------
// Analytic catalog for the checker.
// ---------------------------------------------------------------------------

// g(theta) = -log(theta'h) + log(thetaPrime'h): the per-sample loss gap of
// the log-density model. grad = -h/(theta'h); hess = h h^T / (theta'h)^2.
inline SimplexFn kl_gap_fn(std::vector<double> h, std::vector<double> theta_prime) {
  const double tp = [&] {
    double s = 0.0;
    for (std::size_t j = 0; j < h.size(); ++j) s += theta_prime[j] * h[j];
    return s;
  }();
  if (!(tp > 0.0)) throw std::invalid_argument("kl_gap_fn: thetaPrime'h must be positive");
  const double off = std::log(tp);
  auto dot = [h](const std::vector<double>& th) {
    double s = 0.0;
    for (std::size_t j = 0; j < h.size(); ++j) s += th[j] * h[j];
    return s;
  };
  SimplexFn f;
  f.value = [dot, off](const std::vector<double>& th) { return -std::log(dot(th)) + off; };
  f.grad = [dot, h](const std::vector<double>& th, std::vector<double>& g) {
    const double t = dot(th);
    g.resize(h.size());
    for (std::size_t j = 0; j < h.size(); ++j) g[j] = -h[j] / t;
  };
  f.hess = [dot, h](const std::vector<double>& th, std::vector<double>& he) {
    const double t = dot(th);
    const std::size_t M = h.size();
    he.assign(M * M, 0.0);
    for (std::size_t i = 0; i < M; ++i)
      for (std::size_t j = 0; j < M; ++j) he[i * M + j] = h[i] * h[j] / (t * t);
  };
  return f;
}

// g(theta) = phi(-y theta'h): margin loss as a function of the weights.
inline SimplexFn phi_margin_fn(PhiLoss loss, std::vector<double> h, int y) {
  if (y != 1 && y != -1) throw std::invalid_argument("phi_margin_fn: label must be +-1");
  auto dot = [h](const std::vector<double>& th) {
    double s = 0.0;
    for (std::size_t j = 0; j < h.size(); ++j) s += th[j] * h[j];
    return s;
  };
  const double ys = static_cast<double>(y);
  SimplexFn f;
  f.value = [dot, loss, ys](const std::vector<double>& th) { return loss.phi(-ys * dot(th)); };
  f.grad = [dot, loss, ys, h](const std::vector<double>& th, std::vector<double>& g) {
    const double d = loss.d1(-ys * dot(th));
    g.resize(h.size());
    for (std::size_t j = 0; j < h.size(); ++j) g[j] = -ys * d * h[j];
  };
  f.hess = [dot, loss, ys, h](const std::vector<double>& th, std::vector<double>& he) {
    const double d = loss.d2(-ys * dot(th));
    const std::size_t M = h.size();
    he.assign(M * M, 0.0);
    for (std::size_t i = 0; i < M; ++i)
      for (std::size_t j = 0; j < M; ++j) he[i * M + j] = d * h[i] * h[j];
  };
  return f;
}

// Moment transform of the two-point family: scalar in t = H'theta,
//   F(t) = a (t/t')^{1/beta} + (1-a) ((1-t)/(1-t'))^{1/beta}.
inline double psi_bernoulli(const SimplexWeights& theta, const SimplexWeights& theta_prime,
                            const std::vector<double>& params, double a, double beta) {
  if (!(a > 0.0 && a < 1.0)) throw std::invalid_argument("psi_bernoulli: a in (0,1) required");
  double t = 0.0, tp = 0.0;
  for (std::size_t j = 0; j < params.size(); ++j) {
    if (!(params[j] > 0.0 && params[j] < 1.0))
      throw std::invalid_argument("psi_bernoulli: params in (0,1) required");
    t += theta[j] * params[j];
    tp += theta_prime[j] * params[j];
  }
  const double q = 1.0 / beta;
  return a * std::pow(t / tp, q) + (1.0 - a) * std::pow((1.0 - t) / (1.0 - tp), q);
}

// Moment transform of the count family:
//   Psi = exp(a (t/t')^{1/beta} - a - (t - t')/beta).
inline double psi_poisson(const SimplexWeights& theta, const SimplexWeights& theta_prime,
                          const std::vector<double>& params, double a, double beta) {
  double t = 0.0, tp = 0.0;
  for (std::size_t j = 0; j < params.size(); ++j) {
    if (!(params[j] > 0.0)) throw std::invalid_argument("psi_poisson: params > 0 required");
    t += theta[j] * params[j];
    tp += theta_prime[j] * params[j];
  }
  if (!(a > 0.0)) throw std::invalid_argument("psi_poisson: a > 0 required");
  const double q = 1.0 / beta;
  return std::exp(a * std::pow(t / tp, q) - a - (t - tp) * q);
}

namespace detail {

// Builds a SimplexFn for a scalar composition theta -> F(H'theta), with
// analytic F', F'' supplied: hess = F''(t) H H^T.
inline SimplexFn scalar_composition_fn(std::vector<double> H, std::function<double(double)> F,
                                       std::function<double(double)> F1,
                                       std::function<double(double)> F2) {
  auto dot = [H](const std::vector<double>& th) {
    double s = 0.0;
    for (std::size_t j = 0; j < H.size(); ++j) s += th[j] * H[j];
    return s;
  };
  SimplexFn f;
  f.value = [dot, F](const std::vector<double>& th) { return F(dot(th)); };
  f.grad = [dot, F1, H](const std::vector<double>& th, std::vector<double>& g) {
    const double d = F1(dot(th));
    g.resize(H.size());
    for (std::size_t j = 0; j < H.size(); ++j) g[j] = d * H[j];
  };
  f.hess = [dot, F2, H](const std::vector<double>& th, std::vector<double>& he) {
    const double d = F2(dot(th));
    const std::size_t M = H.size();
    he.assign(M * M, 0.0);
    for (std::size_t i = 0; i < M; ++i)
      for (std::size_t j = 0; j < M; ++j) he[i * M + j] = d * H[i] * H[j];
  };
  return f;
}

}  // namespace detail

inline SimplexFn psi_bernoulli_fn(std::vector<double> params, SimplexWeights theta_prime,
                                  double a, double beta) {
  double tp = 0.0;
  for (std::size_t j = 0; j < params.size(); ++j) tp += theta_prime[j] * params[j];
  if (!(tp > 0.0 && tp < 1.0))
    throw std::invalid_argument("psi_bernoulli_fn: H'thetaPrime must lie in (0,1)");
  const double q = 1.0 / beta;
  const double ca = a / std::pow(tp, q);
  const double cb = (1.0 - a) / std::pow(1.0 - tp, q);
  auto F = [ca, cb, q](double t) { return ca * std::pow(t, q) + cb * std::pow(1.0 - t, q); };
  auto F1 = [ca, cb, q](double t) {
    return ca * q * std::pow(t, q - 1.0) - cb * q * std::pow(1.0 - t, q - 1.0);
  };
  auto F2 = [ca, cb, q](double t) {
    return ca * q * (q - 1.0) * std::pow(t, q - 2.0) +
           cb * q * (q - 1.0) * std::pow(1.0 - t, q - 2.0);
  };
  return detail::scalar_composition_fn(std::move(params), F, F1, F2);
}

inline SimplexFn psi_poisson_fn(std::vector<double> params, SimplexWeights theta_prime,
                                double a, double beta) {
  double tp = 0.0;
  for (std::size_t j = 0; j < params.size(); ++j) tp += theta_prime[j] * params[j];
  if (!(tp > 0.0)) throw std::invalid_argument("psi_poisson_fn: H'thetaPrime must be positive");
  const double q = 1.0 / beta;
  auto G = [a, tp, q](double t) { return a * std::pow(t / tp, q) - a - (t - tp) * q; };
  auto G1 = [a, tp, q](double t) { return a * q * std::pow(t / tp, q - 1.0) / tp - q; };
  auto G2 = [a, tp, q](double t) {
    return a * q * (q - 1.0) * std::pow(t / tp, q - 2.0) / (tp * tp);
  };
  auto F = [G](double t) { return std::exp(G(t)); };
  auto F1 = [G, G1](double t) { return std::exp(G(t)) * G1(t); };
  auto F2 = [G, G1, G2](double t) {
    const double g1 = G1(t);
    return std::exp(G(t)) * (G2(t) + g1 * g1);
  };
  return detail::scalar_composition_fn(std::move(params), F, F1, F2);
}

// Exact moment transform for the Gaussian location family:
// E exp(-(l(X,t)-l(X,t'))/beta) with X ~ N(a, sigma^2) has the closed form
// exp(G(t)) below; its concavity in theta certifies the family's threshold.
inline SimplexFn psi_gaussian_fn(std::vector<double> params, SimplexWeights theta_prime,
                                 double a, double sigma, double beta) {
  if (!(sigma > 0.0)) throw std::invalid_argument("psi_gaussian_fn: sigma > 0 required");
  double tp = 0.0;
  for (std::size_t j = 0; j < params.size(); ++j) tp += theta_prime[j] * params[j];
  const double s2 = sigma * sigma;
  auto G = [a, tp, s2, beta](double t) {
    return (t - tp) * (2.0 * a - t - tp) / (2.0 * s2 * beta) +
           (t - tp) * (t - tp) / (2.0 * s2 * beta * beta);
  };
  auto G1 = [a, tp, s2, beta](double t) {
    return (a - t) / (s2 * beta) + (t - tp) / (s2 * beta * beta);
  };
  const double g2 = (1.0 - beta) / (s2 * beta * beta);
  auto F = [G](double t) { return std::exp(G(t)); };
  auto F1 = [G, G1](double t) { return std::exp(G(t)) * G1(t); };
  auto F2 = [G, G1, g2](double t) {
    const double g1 = G1(t);
    return std::exp(G(t)) * (g2 + g1 * g1);
  };
  return detail::scalar_composition_fn(std::move(params), F, F1, F2);
}

// Exact moment transform for the mean-vector game: s(theta) is quadratic, so
// the gradient/Hessian are analytic. Concavity of exp(s) at the policy beta
// certifies the self-derived game threshold.
inline SimplexFn psi_game_fn(std::size_t M, std::size_t truth_k, double delta, double sigma,
                             SimplexWeights theta_prime, double beta) {
  if (truth_k >= M) throw std::invalid_argument("psi_game_fn: truth_k out of range");
  if (!(beta > 0.0)) throw std::invalid_argument("psi_game_fn: beta > 0 required");
  const double s2 = sigma * sigma;
  auto risk = [M, truth_k, delta](const std::vector<double>& th) {
    double q = 0.0;
    for (std::size_t j = 0; j < M; ++j) q += th[j] * th[j];
    return 0.5 * q - delta * th[truth_k];
  };
  const double a_prime = risk(theta_prime);
  auto sfun = [=](const std::vector<double>& th) {
    double d2 = 0.0;
    for (std::size_t j = 0; j < M; ++j) {
      const double d = th[j] - theta_prime[j];
      d2 += d * d;
    }
    return -(risk(th) - a_prime) / beta + s2 * d2 / (2.0 * beta * beta);
  };
  SimplexFn f;
  f.value = [sfun](const std::vector<double>& th) { return std::exp(sfun(th)); };
  f.grad = [=](const std::vector<double>& th, std::vector<double>& g) {
    const double v = std::exp(sfun(th));
    g.resize(M);
    for (std::size_t j = 0; j < M; ++j) {
      const double ds = -(th[j] - (j == truth_k ? delta : 0.0)) / beta +
                        s2 * (th[j] - theta_prime[j]) / (beta * beta);
      g[j] = v * ds;
    }
  };
  f.hess = [=](const std::vector<double>& th, std::vector<double>& he) {
    const double v = std::exp(sfun(th));
    const double diag = -1.0 / beta + s2 / (beta * beta);
    std::vector<double> ds(M);
    for (std::size_t j = 0; j < M; ++j)
      ds[j] = -(th[j] - (j == truth_k ? delta : 0.0)) / beta +
              s2 * (th[j] - theta_prime[j]) / (beta * beta);
    he.assign(M * M, 0.0);
    for (std::size_t i = 0; i < M; ++i)
      for (std::size_t j = 0; j < M; ++j)
        he[i * M + j] = v * (ds[i] * ds[j] + (i == j ? diag : 0.0));
  };
  return f;
}

}  // namespace magg

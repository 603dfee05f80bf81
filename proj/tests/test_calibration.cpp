#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "magg/calibration.hpp"
#include "magg/rng.hpp"
#include "magg/simplex.hpp"

using namespace magg;

TEST_CASE("temperature thresholds evaluate to the exact closed forms") {
  CHECK(beta_for_scenario("density-kl", {}).beta_min == 1.0);
  CHECK(beta_for_scenario("parametric-bernoulli", {}).beta_min == 1.0);
  CHECK(beta_for_scenario("density-l2", {{"L", 2.0}}).beta_min == 24.0);
  CHECK(beta_for_scenario("regression-gaussian", {{"sigma", 1.0}, {"Ltilde", 1.0}}).beta_min ==
        4.0);
  CHECK(beta_for_scenario("parametric-gaussian", {{"sigma", 1.0}, {"L", 1.0}}).beta_min ==
        10.0);
  // max of the two exp-moment constraints
  CHECK(beta_for_scenario("regression-exp-moment",
                          {{"sigma", 1.0}, {"Ltilde", 1.0}, {"L", 2.0}, {"b0", 1.0}})
            .beta_min == 8.0);
  CHECK(beta_for_scenario("regression-exp-moment",
                          {{"sigma", 2.0}, {"Ltilde", 1.0}, {"L", 1.0}, {"b0", 1.0}})
            .beta_min == 10.0);
  // rate-family threshold
  const auto pois = beta_for_scenario("parametric-poisson", {{"ell", 1.0}, {"L", 2.0}});
  CHECK_THAT(pois.beta_min,
             Catch::Matchers::WithinRel(1.0 + 6.0 * std::pow(2.0, 0.2), 1e-15));
  CHECK_THAT(pois.beta_min, Catch::Matchers::WithinAbs(7.89219013, 5e-8));
}

TEST_CASE("missing or invalid constants are rejected with the violated name") {
  using Catch::Matchers::ContainsSubstring;
  REQUIRE_THROWS_WITH(beta_for_scenario("regression-gaussian", {{"Ltilde", 1.0}}),
                      ContainsSubstring("sigma"));
  REQUIRE_THROWS_WITH(beta_for_scenario("density-l2", {{"L", -2.0}}), ContainsSubstring("L"));
  REQUIRE_THROWS_WITH(beta_for_scenario("parametric-poisson", {{"ell", 2.0}, {"L", 1.0}}),
                      ContainsSubstring("L > ell"));
  REQUIRE_THROWS_AS(beta_for_scenario("no-such-kind", {}), std::invalid_argument);
}

TEST_CASE("bounded-response constants") {
  const auto c1 = bounded_moment_constants(1.0);
  CHECK_THAT(c1.B, Catch::Matchers::WithinRel(1.0 / 36.0, 1e-15));
  CHECK_THAT(c1.b, Catch::Matchers::WithinRel(5.0 / 36.0, 1e-15));
  CHECK_THAT(c1.beta_min, Catch::Matchers::WithinRel(25.0, 1e-12));
  const auto ch = bounded_moment_constants(0.5);
  CHECK_THAT(ch.B, Catch::Matchers::WithinRel(1.0 / 16.0, 1e-15));
  CHECK_THAT(ch.b, Catch::Matchers::WithinRel(9.0 / 64.0, 1e-15));
  CHECK_THAT(ch.beta_min, Catch::Matchers::WithinRel(5.0625, 1e-12));
  // admissibility L*B < b < 1/4 across a grid of L
  for (double L = 0.05; L < 50.0; L *= 1.7) {
    const auto cc = bounded_moment_constants(L);
    REQUIRE(L * cc.B < cc.b);
    REQUIRE(cc.b < 0.25);
  }
  REQUIRE_THROWS_AS(bounded_moment_constants(0.0), std::invalid_argument);
}

TEST_CASE("tail remainder term piecewise values") {
  const double L = 1.0;
  const auto c = bounded_moment_constants(L);
  const double beta = 100.0;  // above threshold so the middle band is nonempty
  const double lo = c.b * std::sqrt(beta);   // 50/36
  const double hi = c.B * beta;              // 100/36
  // dead zone
  CHECK(remainder_R_beta(0.0, L, c.b, c.B, beta) == 0.0);
  CHECK(remainder_R_beta(0.99 * lo, L, c.b, c.B, beta) == 0.0);
  CHECK(remainder_R_beta(-0.99 * lo, L, c.b, c.B, beta) == 0.0);
  // middle band: quadratic
  const double y = 0.5 * (lo + hi);
  CHECK_THAT(remainder_R_beta(y, L, c.b, c.B, beta),
             Catch::Matchers::WithinRel(4.0 * L * L * y * y / (c.B * beta), 1e-15));
  // outer band: linear
  CHECK_THAT(remainder_R_beta(2.0 * hi, L, c.b, c.B, beta),
             Catch::Matchers::WithinRel(4.0 * L * 2.0 * hi, 1e-15));
  CHECK_THAT(remainder_R_beta(-3.0 * hi, L, c.b, c.B, beta),
             Catch::Matchers::WithinRel(12.0 * L * hi, 1e-15));
  // at the threshold temperature the two band edges coincide (empty middle)
  CHECK(c.b * std::sqrt(c.beta_min) == Catch::Approx(c.B * c.beta_min).epsilon(1e-12));
  // nonnegative everywhere
  Rng rng(3);
  for (int i = 0; i < 1000; ++i)
    REQUIRE(remainder_R_beta(rng.uniform(-20.0, 20.0), L, c.b, c.B, beta) >= 0.0);
}

TEST_CASE("moment-rate temperature formula") {
  // beta = C1 * (n / log M)^(2/(2+s)); at s=2 that is the square root
  CHECK_THAT(moment_beta(2.0, 1.0, 1000, 10),
             Catch::Matchers::WithinRel(std::sqrt(1000.0 / std::log(10.0)), 1e-15));
  CHECK_THAT(moment_beta(2.0, 2.5, 400, 50),
             Catch::Matchers::WithinRel(2.5 * std::sqrt(400.0 / std::log(50.0)), 1e-15));
  CHECK_THAT(moment_beta(4.0, 1.0, 729, 2),
             Catch::Matchers::WithinRel(std::pow(729.0 / std::log(2.0), 1.0 / 3.0), 1e-15));
  // exponent vanishes as the moment order grows
  CHECK_THAT(moment_beta(1e6, 3.0, 100000, 10), Catch::Matchers::WithinRel(3.0, 1e-3));
  // nondecreasing in n
  double prev = 0.0;
  for (std::size_t n2 : {10, 100, 1000, 10000}) {
    const double b = moment_beta(2.0, 1.0, n2, 10);
    REQUIRE(b >= prev);
    prev = b;
  }
  REQUIRE_THROWS_AS(moment_beta(1.5, 1.0, 100, 10), std::invalid_argument);
}

TEST_CASE("margin-loss temperature via the derivative-ratio sup") {
  CHECK_THAT(beta_phi(phi_exp()), Catch::Matchers::WithinRel(std::exp(1.0), 1e-12));
  CHECK_THAT(beta_phi(phi_squared()), Catch::Matchers::WithinRel(8.0, 1e-12));
  CHECK_THAT(beta_phi(phi_softmargin()), Catch::Matchers::WithinRel(8.0, 1e-12));
  CHECK_THAT(beta_phi(phi_logit2()),
             Catch::Matchers::WithinRel(std::exp(1.0) / std::log(2.0), 1e-9));
  // flat second derivative with live first derivative has no finite sup
  PhiLoss linear;
  linear.name = "linear";
  linear.phi = [](double x) { return 1.0 + x; };
  linear.d1 = [](double) { return 1.0; };
  linear.d2 = [](double) { return 0.0; };
  REQUIRE_THROWS_AS(beta_phi(linear), std::domain_error);
}

TEST_CASE("stated margin-loss temperatures where they differ from computed") {
  REQUIRE(claimed_beta_phi("logit2").has_value());
  CHECK_THAT(*claimed_beta_phi("logit2"),
             Catch::Matchers::WithinRel(std::exp(1.0) * std::log(2.0), 1e-15));
  CHECK(*claimed_beta_phi("squared") == 2.0);
  CHECK(*claimed_beta_phi("softmargin") == 2.0);
  CHECK_FALSE(claimed_beta_phi("exp").has_value());

  const auto comp = beta_for_scenario("classification-phi", {}, "logit2", false);
  const auto clm = beta_for_scenario("classification-phi", {}, "logit2", true);
  CHECK_THAT(comp.beta_min, Catch::Matchers::WithinRel(std::exp(1.0) / std::log(2.0), 1e-9));
  CHECK_THAT(clm.beta_min, Catch::Matchers::WithinRel(std::exp(1.0) * std::log(2.0), 1e-15));
  CHECK(comp.constants.count("computed_sufficient") == 1);
  CHECK(comp.constants.count("claimed") == 1);
}

TEST_CASE("game temperature records its separation constant") {
  const auto p = beta_for_scenario("quadratic-game", {{"sigma", 1.0}, {"M", 50.0}, {"n", 400.0}});
  const double delta = 0.5 * std::sqrt(std::log(50.0) / 400.0);
  CHECK_THAT(p.constants.at("delta"), Catch::Matchers::WithinRel(delta, 1e-15));
  CHECK_THAT(p.beta_min, Catch::Matchers::WithinRel(2.0 + 2.0 * (1.0 + delta) * (1.0 + delta),
                                                    1e-15));
}

TEST_CASE("log-loss gap is exponentially concave exactly down to the unit temperature") {
  std::vector<double> h{0.5, 1.5, 1.0};
  auto g = kl_gap_fn(h, uniform_weights(3));
  const auto pass = check_exp_concavity(g, 1.0, 3);
  CHECK(pass.passed);
  CHECK(pass.sample_points >= 500);
  CHECK(pass.min_eigenvalue_observed >= -pass.tolerance);
  const auto fail = check_exp_concavity(g, 0.5, 3);
  CHECK_FALSE(fail.passed);
  CHECK(fail.min_eigenvalue_observed < -fail.tolerance);
  // monotone in the temperature for the convex gap
  for (double beta : {1.5, 2.0, 5.0, 50.0})
    REQUIRE(check_exp_concavity(g, beta, 3).passed);
}

TEST_CASE("degenerate maps in the concavity checker") {
  // constant map: zero gradient and Hessian everywhere -> passes
  SimplexFn constant;
  constant.value = [](const std::vector<double>&) { return 3.0; };
  CHECK(check_concavity(constant, 4).passed);
  CHECK(check_exp_concavity(constant, 0.1, 4).passed);
  // linear map with live gradient: -grad grad^T has a negative eigenvalue
  SimplexFn linear;
  linear.value = [](const std::vector<double>& th) { return th[0] - th[1]; };
  CHECK_FALSE(check_exp_concavity(linear, 1.0, 3).passed);
}

TEST_CASE("finite differences agree with analytic derivatives") {
  std::vector<double> h{0.8, 1.2, 0.6, 1.4};
  auto analytic = kl_gap_fn(h, uniform_weights(4));
  SimplexFn numeric;
  numeric.value = analytic.value;  // gradients/Hessians via finite differences
  const auto ra = check_exp_concavity(analytic, 1.0, 4, 200, 7);
  const auto rn = check_exp_concavity(numeric, 1.0, 4, 200, 7, 1e-6);
  CHECK(ra.passed);
  CHECK(rn.passed);
  CHECK_THAT(rn.min_eigenvalue_observed,
             Catch::Matchers::WithinAbs(ra.min_eigenvalue_observed, 1e-4));
  const auto fa = check_exp_concavity(analytic, 0.5, 4, 200, 7);
  const auto fn = check_exp_concavity(numeric, 0.5, 4, 200, 7, 1e-6);
  CHECK_FALSE(fa.passed);
  CHECK_FALSE(fn.passed);
  CHECK_THAT(fn.min_eigenvalue_observed,
             Catch::Matchers::WithinRel(fa.min_eigenvalue_observed, 1e-3));
}

TEST_CASE("margin-loss gap concavity at the computed temperature") {
  std::vector<double> h{0.9, -0.4, 0.2};
  for (const char* name : {"exp", "squared", "logit2"}) {
    const PhiLoss loss = phi_by_name(name);
    const double beta = beta_phi(loss);
    for (int y : {1, -1}) {
      INFO(name << " y=" << y);
      REQUIRE(check_exp_concavity(phi_margin_fn(loss, h, y), beta, 3).passed);
    }
  }
  // the claimed squared-loss temperature fails the pointwise condition
  const auto weak = check_exp_concavity(phi_margin_fn(phi_squared(), h, 1), 2.0, 3);
  CHECK_FALSE(weak.passed);
}

TEST_CASE("moment transforms equal one at equal weights") {
  const std::vector<double> params{0.2, 0.4, 0.6, 0.8};
  const SimplexWeights th{0.1, 0.2, 0.3, 0.4};
  CHECK_THAT(psi_bernoulli(th, th, params, 0.4, 1.0), Catch::Matchers::WithinRel(1.0, 1e-14));
  const std::vector<double> pp{1.0, 2.0, 3.0, 4.0};
  CHECK_THAT(psi_poisson(th, th, pp, 2.0, 7.9), Catch::Matchers::WithinRel(1.0, 1e-14));
  // distinct weights with the same mixture parameter give 1 at unit temperature
  const SimplexWeights p1{0.5, 0.0, 0.0, 0.5};  // 0.1 + 0.4 = 0.5
  const SimplexWeights p2{0.0, 0.5, 0.5, 0.0};  // 0.2 + 0.3 = 0.5
  CHECK_THAT(psi_bernoulli(p1, p2, params, 0.37, 1.0), Catch::Matchers::WithinRel(1.0, 1e-14));
  // large-temperature limit: exponent shrinks toward zero
  CHECK_THAT(psi_poisson({1.0, 0.0, 0.0, 0.0}, {0.0, 0.0, 0.0, 1.0}, pp, 2.0, 1e9),
             Catch::Matchers::WithinAbs(1.0, 1e-6));
}

TEST_CASE("family moment transforms pass at their thresholds and fail far below") {
  const SimplexWeights uni = uniform_weights(4);
  const std::vector<double> bparams{0.2, 0.4, 0.6, 0.8};
  for (double a : bparams) {
    REQUIRE(check_concavity(psi_bernoulli_fn(bparams, uni, a, 1.0), 4).passed);
    REQUIRE_FALSE(check_concavity(psi_bernoulli_fn(bparams, uni, a, 0.5), 4).passed);
  }
  const std::vector<double> pparams{1.0, 1.5, 2.0};
  const SimplexWeights uni3 = uniform_weights(3);
  const double beta0 =
      beta_for_scenario("parametric-poisson", {{"ell", 1.0}, {"L", 2.0}}).beta_min;
  for (double a : pparams)
    REQUIRE(check_concavity(psi_poisson_fn(pparams, uni3, a, beta0), 3).passed);
  // at beta=1 the exponent is linear in t, so the transform is convex and the
  // check fails -- except at a = mean(params), where it degenerates to the
  // constant 1 and trivially passes
  REQUIRE_FALSE(check_concavity(psi_poisson_fn(pparams, uni3, 1.0, 1.0), 3).passed);
  REQUIRE(check_concavity(psi_poisson_fn(pparams, uni3, 1.5, 1.0), 3).passed);
  REQUIRE_FALSE(check_concavity(psi_poisson_fn(pparams, uni3, 2.0, 1.0), 3).passed);
  const std::vector<double> gparams{-1.0, -0.5, 0.5, 1.0};
  for (double a : gparams) {
    REQUIRE(check_concavity(psi_gaussian_fn(gparams, uni, a, 1.0, 10.0), 4).passed);
    REQUIRE_FALSE(check_concavity(psi_gaussian_fn(gparams, uni, a, 1.0, 1.0), 4).passed);
  }
}

TEST_CASE("game moment transform certifies the derived threshold") {
  const std::size_t M = 6;
  const double sigma = 1.0, delta = 0.2;
  const double beta = 2.0 * sigma * sigma + 2.0 * (1.0 + delta) * (1.0 + delta);
  auto psi = psi_game_fn(M, 0, delta, sigma, uniform_weights(M), beta);
  REQUIRE(check_concavity(psi, M).passed);
  auto weak = psi_game_fn(M, 0, delta, sigma, uniform_weights(M), 0.5);
  REQUIRE_FALSE(check_concavity(weak, M).passed);
}

TEST_CASE("simplex sampling covers vertices and midpoints in low dimension") {
  Rng rng(9);
  auto pts = simplex_sample_points(3, 40, rng);
  REQUIRE(pts.size() >= 40);
  bool has_vertex = false, has_midpoint = false;
  for (const auto& p : pts) {
    REQUIRE_NOTHROW(check_simplex(p, 1e-9));
    if (p == SimplexWeights{1.0, 0.0, 0.0}) has_vertex = true;
    if (p == SimplexWeights{0.5, 0.5, 0.0}) has_midpoint = true;
  }
  CHECK(has_vertex);
  CHECK(has_midpoint);
  auto big = simplex_sample_points(10, 25, rng);
  REQUIRE(big.size() == 25);
  for (const auto& p : big) REQUIRE_NOTHROW(check_simplex(p, 1e-9));
}

#include <catch_amalgamated.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <vector>

#include "magg/losses.hpp"
#include "magg/rng.hpp"
#include "magg/scenario.hpp"

using namespace magg;

namespace {

Dictionary two_constants(double c1, double c2) {
  Dictionary d;
  d.kind = DictKind::regression_fn;
  d.evaluators = {ConstantFn{c1}, ConstantFn{c2}};
  return d;
}

// independent of histogram_product_integral: rectangle-by-rectangle overlap
double brute_force_product(const HistogramFn& a, const HistogramFn& b) {
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < a.edges.size(); ++i)
    for (std::size_t j = 0; j + 1 < b.edges.size(); ++j) {
      const double lo = std::max(a.edges[i], b.edges[j]);
      const double hi = std::min(a.edges[i + 1], b.edges[j + 1]);
      if (hi > lo) s += a.heights[i] * b.heights[j] * (hi - lo);
    }
  return s;
}

}  // namespace

TEST_CASE("squared regression vertex losses") {
  auto d = two_constants(0.0, 1.0);
  auto u = squared_regression_vertex_losses(0.3, 1.0, d);
  CHECK(u.values == std::vector<double>{1.0, 0.0});
  auto u2 = squared_regression_vertex_losses(0.3, 0.5, d);
  CHECK(u2.values == std::vector<double>{0.25, 0.25});
  // exact hit for every candidate
  auto same = two_constants(0.7, 0.7);
  auto u3 = squared_regression_vertex_losses(0.1, 0.7, same);
  CHECK(u3.values == std::vector<double>{0.0, 0.0});
  REQUIRE_THROWS_AS(
      squared_regression_vertex_losses(0.0, std::numeric_limits<double>::infinity(), d),
      std::invalid_argument);
}

TEST_CASE("mean-vector game vertex losses") {
  auto u0 = quadratic_game_vertex_losses({0.0, 0.0, 0.0});
  CHECK(u0.values == std::vector<double>{0.5, 0.5, 0.5});
  auto u1 = quadratic_game_vertex_losses({1.0, 0.0, 0.0});
  CHECK(u1.values == std::vector<double>{-0.5, 0.5, 0.5});
  REQUIRE_THROWS_AS(quadratic_game_vertex_losses({std::numeric_limits<double>::quiet_NaN()}),
                    std::invalid_argument);
}

TEST_CASE("margin loss catalog satisfies its contracts") {
  for (const char* name : {"exp", "logit2", "squared", "softmargin"}) {
    PhiLoss loss = phi_by_name(name);
    INFO(name);
    for (int i = 0; i <= 1000; ++i) {
      const double x = -1.0 + 2.0 * i / 1000.0;
      CHECK(loss.phi(x) >= 0.0);
      CHECK(loss.d2(x) >= 0.0);
      // analytic first derivative against central differences
      const double h = 1e-6;
      const double fd = (loss.phi(x + h) - loss.phi(x - h)) / (2.0 * h);
      REQUIRE(std::fabs(loss.d1(x) - fd) <= 1e-6 * (1.0 + std::fabs(loss.d1(x))));
    }
  }
  REQUIRE_THROWS_AS(phi_by_name("nope"), std::invalid_argument);
}

TEST_CASE("margin classification vertex losses") {
  Dictionary d;
  d.kind = DictKind::classifier_score;
  d.evaluators = {ConstantFn{1.0}, ConstantFn{0.0}};
  auto u = phi_classification_vertex_losses(0.2, 1, d, phi_exp());
  CHECK_THAT(u.values[0], Catch::Matchers::WithinRel(std::exp(-1.0), 1e-15));
  auto ul = phi_classification_vertex_losses(0.2, 1, d, phi_logit2());
  CHECK_THAT(ul.values[1], Catch::Matchers::WithinRel(1.0, 1e-14));  // log2(1+e^0)
  // the composition is phi(-y*score) with the published phi(x) = (1-x)^2,
  // so a +1-margin score evaluates to (1-(-1))^2 = 4, not 0
  Dictionary dy;
  dy.kind = DictKind::classifier_score;
  dy.evaluators = {ConstantFn{1.0}};
  auto us = phi_classification_vertex_losses(0.0, 1, dy, phi_squared());
  CHECK_THAT(us.values[0], Catch::Matchers::WithinAbs(4.0, 1e-15));
  REQUIRE_THROWS_AS(phi_classification_vertex_losses(0.0, 2, d, phi_exp()),
                    std::invalid_argument);
}

TEST_CASE("density log-losses with clamping") {
  Dictionary d;
  d.kind = DictKind::density;
  // two atoms as a histogram on [0,1]: a uniform density and one with a hole
  d.evaluators = {HistogramFn{{0.0, 0.5, 1.0}, {1.0, 1.0}},
                  HistogramFn{{0.0, 0.5, 1.0}, {2.0, 0.0}}};
  auto u = kl_density_vertex_losses(0.25, d, 1e-300);
  CHECK_THAT(u.values[0], Catch::Matchers::WithinAbs(0.0, 1e-15));  // -log 1
  CHECK_THAT(u.values[1], Catch::Matchers::WithinRel(-std::log(2.0), 1e-15));
  CHECK(u.finite_flag);
  // clamped component
  auto uc = kl_density_vertex_losses(0.75, d, 1e-300);
  CHECK_FALSE(uc.finite_flag);
  CHECK_THAT(uc.values[1], Catch::Matchers::WithinRel(-std::log(1e-300), 1e-12));
  CHECK(uc.values[1] > 690.0);
  // two-atom uniform classic value
  Dictionary atom2;
  atom2.kind = DictKind::density;
  atom2.evaluators = {HistogramFn{{0.0, 1.0, 2.0}, {0.5, 0.5}}};
  auto ua = kl_density_vertex_losses(0.3, atom2, 1e-300);
  CHECK_THAT(ua.values[0], Catch::Matchers::WithinRel(std::log(2.0), 1e-15));
  // invalid dictionary: negative density
  Dictionary neg;
  neg.kind = DictKind::density;
  neg.evaluators = {HistogramFn{{0.0, 1.0}, {-0.5}}};
  REQUIRE_THROWS_AS(kl_density_vertex_losses(0.5, neg, 1e-300), std::invalid_argument);
  // floor outside (0,1)
  REQUIRE_THROWS_AS(kl_density_vertex_losses(0.25, d, 0.0), std::invalid_argument);
}

TEST_CASE("lowering the clamp floor never raises unclamped losses") {
  Dictionary d;
  d.kind = DictKind::density;
  d.evaluators = {HistogramFn{{0.0, 0.5, 1.0}, {1.8, 0.2}},
                  HistogramFn{{0.0, 0.5, 1.0}, {0.2, 1.8}}};
  for (double x : {0.1, 0.6, 0.9}) {
    auto hi = kl_density_vertex_losses(x, d, 1e-3);
    auto lo = kl_density_vertex_losses(x, d, 1e-12);
    for (std::size_t j = 0; j < 2; ++j) REQUIRE(lo.values[j] >= hi.values[j] - 1e-15);
  }
}

TEST_CASE("quadratic density losses from the gram diagonal") {
  Dictionary d;
  d.kind = DictKind::density;
  d.evaluators = {HistogramFn{{0.0, 1.0}, {1.0}},               // uniform, G11 = 1
                  HistogramFn{{0.0, 0.5, 1.0}, {1.5, 0.5}}};    // G22 = 0.5*(2.25+0.25)
  auto g = gram_matrix(d);
  CHECK_THAT(g.at(0, 0), Catch::Matchers::WithinRel(1.0, 1e-12));
  auto u = l2_density_vertex_losses(0.3, d, g);
  CHECK_THAT(u.values[0], Catch::Matchers::WithinRel(-1.0, 1e-12));  // 1 - 2*1
  CHECK_THAT(g.at(1, 1), Catch::Matchers::WithinRel(1.25, 1e-12));
  // vertex specialization equals the quadratic form at e_j
  for (std::size_t j = 0; j < 2; ++j) {
    double direct = g.at(j, j) - 2.0 * evaluate(d.evaluators[j], 0.3);
    CHECK_THAT(u.values[j], Catch::Matchers::WithinAbs(direct, 1e-15));
  }
  // constructed zero: two unit-width bins with heights solving h2 = G/2
  const double h2 = 1.0 - std::sqrt(2.0) / 2.0;
  Dictionary dz;
  dz.kind = DictKind::density;
  dz.evaluators = {HistogramFn{{0.0, 1.0, 2.0}, {1.0 - h2, h2}},
                   HistogramFn{{0.0, 2.0}, {0.5}}};
  auto gz = gram_matrix(dz);
  auto uz = l2_density_vertex_losses(1.5, dz, gz);  // falls in the h2 bin
  CHECK_THAT(uz.values[0], Catch::Matchers::WithinAbs(0.0, 1e-12));
}

TEST_CASE("gram matrix for histograms is exact") {
  HistogramFn u1{{0.0, 1.0}, {1.0}};
  HistogramFn u2{{0.0, 1.0}, {1.0}};
  Dictionary d;
  d.kind = DictKind::density;
  d.evaluators = {u1, u2};
  auto g = gram_matrix(d);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j)
      CHECK_THAT(g.at(i, j), Catch::Matchers::WithinRel(1.0, 1e-14));
  CHECK(g.quadrature_meta == "exact-bin-sum");

  // disjoint supports
  Dictionary dd;
  dd.kind = DictKind::density;
  dd.evaluators = {HistogramFn{{0.0, 0.5}, {2.0}}, HistogramFn{{0.5, 1.0}, {2.0}}};
  auto gd = gram_matrix(dd);
  CHECK(gd.at(0, 1) == 0.0);
  CHECK_THAT(gd.at(0, 0), Catch::Matchers::WithinRel(2.0, 1e-14));

  // overlapping bins vs the brute-force rectangle oracle
  Rng rng(5);
  for (int rep = 0; rep < 25; ++rep) {
    auto random_hist = [&](int bins) {
      std::vector<double> edges{0.0};
      for (int b = 0; b < bins; ++b) edges.push_back(edges.back() + rng.uniform(0.1, 0.5));
      std::vector<double> mass(bins);
      double tot = 0.0;
      for (auto& m : mass) {
        m = rng.uniform(0.05, 1.0);
        tot += m;
      }
      std::vector<double> heights(bins);
      for (int b = 0; b < bins; ++b)
        heights[b] = mass[b] / tot / (edges[b + 1] - edges[b]);
      return HistogramFn{edges, heights};
    };
    Dictionary rd;
    rd.kind = DictKind::density;
    rd.evaluators = {random_hist(3), random_hist(5), random_hist(4)};
    auto gr = gram_matrix(rd);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j) {
        const double oracle = brute_force_product(
            std::get<HistogramFn>(rd.evaluators[i]), std::get<HistogramFn>(rd.evaluators[j]));
        REQUIRE_THAT(gr.at(i, j), Catch::Matchers::WithinAbs(oracle, 1e-12));
        REQUIRE_THAT(gr.at(i, j), Catch::Matchers::WithinAbs(gr.at(j, i), 1e-10));
      }
    // positive semidefinite up to the stated slack
    Eigen::MatrixXd m(3, 3);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) m(i, j) = gr.at(i, j);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    REQUIRE(es.eigenvalues().minCoeff() >= -1e-8 * m.trace());
  }
}

TEST_CASE("parameter-family log-losses") {
  Dictionary d;
  d.kind = DictKind::parameter;
  d.params = {0.5, 0.25};

  auto ub = parametric_kl_vertex_losses(0.0, ParamFamily::bernoulli, d.params);
  CHECK_THAT(ub.values[0], Catch::Matchers::WithinRel(std::log(2.0), 1e-15));
  auto ub1 = parametric_kl_vertex_losses(1.0, ParamFamily::bernoulli, d.params);
  CHECK_THAT(ub1.values[1], Catch::Matchers::WithinRel(-std::log(0.75), 1e-15));
  REQUIRE_THROWS_AS(parametric_kl_vertex_losses(0.5, ParamFamily::bernoulli, d.params),
                    std::invalid_argument);

  auto up = parametric_kl_vertex_losses(0.0, ParamFamily::poisson, {1.0, 2.0});
  CHECK_THAT(up.values[0], Catch::Matchers::WithinRel(1.0, 1e-15));
  CHECK_THAT(up.values[1], Catch::Matchers::WithinRel(2.0, 1e-15));
  REQUIRE_THROWS_AS(parametric_kl_vertex_losses(1.5, ParamFamily::poisson, {1.0}),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(parametric_kl_vertex_losses(-1.0, ParamFamily::poisson, {1.0}),
                    std::invalid_argument);

  auto ug = parametric_kl_vertex_losses(0.0, ParamFamily::gaussian, {0.0}, 1.0);
  CHECK_THAT(ug.values[0], Catch::Matchers::WithinRel(0.5 * std::log(2.0 * M_PI), 1e-15));

  // family domain validation against dictionary bounds
  Dictionary pg;
  pg.kind = DictKind::parameter;
  pg.L = 1.0;
  REQUIRE_THROWS_AS(validate_family_param(ParamFamily::gaussian, 1.5, pg),
                    std::invalid_argument);
  REQUIRE_NOTHROW(validate_family_param(ParamFamily::gaussian, -1.0, pg));
  Dictionary pp;
  pp.kind = DictKind::parameter;
  pp.ell = 1.0;
  pp.L = 2.0;
  REQUIRE_THROWS_AS(validate_family_param(ParamFamily::poisson, 0.5, pp),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(validate_family_param(ParamFamily::poisson, 2.5, pp),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(validate_family_param(ParamFamily::bernoulli, 1.0, pp),
                    std::invalid_argument);
}

TEST_CASE("mixture prediction is the dot product with the candidate values") {
  Dictionary d;
  d.kind = DictKind::regression_fn;
  d.evaluators = {AffineFn{0.0, 1.0}, ConstantFn{2.0}, AffineFn{1.0, -0.5}};
  const double x = 0.37;
  CHECK(mixture_predict({1.0, 0.0, 0.0}, d, x) == evaluate(d.evaluators[0], x));
  CHECK_THAT(mixture_predict({0.5, 0.5, 0.0}, d, x),
             Catch::Matchers::WithinRel((x + 2.0) / 2.0, 1e-15));
  Rng rng(3);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> raw(3);
    double tot = 0.0;
    for (auto& r : raw) {
      r = rng.uniform(0.01, 1.0);
      tot += r;
    }
    SimplexWeights th{raw[0] / tot, raw[1] / tot, raw[2] / tot};
    double oracle = 0.0;
    for (int j = 0; j < 3; ++j) oracle += th[j] * evaluate(d.evaluators[j], x);
    REQUIRE_THAT(mixture_predict(th, d, x), Catch::Matchers::WithinAbs(oracle, 1e-14));
  }
  REQUIRE_THROWS_AS(mixture_predict({0.5, 0.5}, d, x), std::invalid_argument);
}

TEST_CASE("mixture losses are midpoint-convex in the weights") {
  Rng rng(19);
  // one scenario per loss family with a frozen sample each
  Scenario reg;
  reg.kind = ScenarioKind::regression_gaussian;
  reg.dict.kind = DictKind::regression_fn;
  reg.dict.evaluators = {ConstantFn{0.0}, AffineFn{0.0, 1.0}, ConstantFn{0.5}};
  reg.truth_fn = ConstantFn{0.0};
  reg.validate();

  Scenario cls;
  cls.kind = ScenarioKind::classification_phi;
  cls.dict.kind = DictKind::classifier_score;
  cls.dict.evaluators = {ConstantFn{0.5}, AffineFn{-0.5, 1.0}, ConstantFn{-0.3}};
  cls.phi_name = "exp";
  cls.eta_slope = 0.5;
  cls.validate();

  Scenario kld;
  kld.kind = ScenarioKind::density_kl;
  kld.dict.kind = DictKind::density;
  kld.dict.evaluators = {HistogramFn{{0.0, 0.5, 1.0}, {1.5, 0.5}},
                         HistogramFn{{0.0, 0.5, 1.0}, {0.5, 1.5}},
                         HistogramFn{{0.0, 0.5, 1.0}, {1.0, 1.0}}};
  kld.truth_hist = HistogramFn{{0.0, 0.5, 1.0}, {1.0, 1.0}};
  kld.validate();

  Scenario l2d = kld;
  l2d.kind = ScenarioKind::density_l2;
  l2d.validate();

  for (const Scenario* sc : {&reg, &cls, &kld, &l2d}) {
    Rng draw_rng(101);
    Sample s = sc->draw(draw_rng, 100);
    for (int rep = 0; rep < 100; ++rep) {
      auto rand_theta = [&] {
        std::vector<double> r(3);
        double tot = 0.0;
        for (auto& v : r) {
          v = rng.uniform(0.01, 1.0);
          tot += v;
        }
        for (auto& v : r) v /= tot;
        return SimplexWeights(r);
      };
      auto a = rand_theta(), b = rand_theta();
      SimplexWeights mid(3);
      for (int j = 0; j < 3; ++j) mid[j] = 0.5 * (a[j] + b[j]);
      const double qa = sc->mixture_loss(a, s), qb = sc->mixture_loss(b, s);
      REQUIRE(sc->mixture_loss(mid, s) <= 0.5 * (qa + qb) + 1e-10);
    }
  }
}

TEST_CASE("histogram evaluator conventions") {
  HistogramFn h{{0.0, 0.5, 1.0}, {1.5, 0.5}};
  CHECK(evaluate(Evaluator(h), 0.25) == 1.5);
  CHECK(evaluate(Evaluator(h), 0.5) == 0.5);   // left-closed interior bins
  CHECK(evaluate(Evaluator(h), 1.0) == 0.5);   // right edge belongs to last bin
  CHECK(evaluate(Evaluator(h), -0.1) == 0.0);  // zero outside the support
  CHECK(evaluate(Evaluator(h), 1.1) == 0.0);
  REQUIRE_THROWS_AS(validate_histogram_density(HistogramFn{{0.0, 1.0}, {0.5}}),
                    std::invalid_argument);  // mass 0.5, not normalized
  REQUIRE_NOTHROW(validate_histogram_density(h));
}

TEST_CASE("dictionary validation enforces declared bounds") {
  Dictionary d;
  d.kind = DictKind::regression_fn;
  d.evaluators = {ConstantFn{0.9}, ConstantFn{-0.4}};
  d.L = 1.0;
  REQUIRE_NOTHROW(validate_dictionary(d));
  d.evaluators.push_back(AffineFn{0.0, 2.0});  // reaches 2.0 at x=1
  REQUIRE_THROWS_AS(validate_dictionary(d), std::invalid_argument);
  Dictionary single;
  single.kind = DictKind::regression_fn;
  single.evaluators = {ConstantFn{0.0}};
  REQUIRE_THROWS_AS(validate_dictionary(single), std::invalid_argument);
}

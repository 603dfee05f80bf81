// Command-line front end: study runs, temperature calibration queries, and
// concavity diagnostics. Exit codes: 0 success, 1 concavity check failed,
// 2 invalid config/arguments, 3 I/O failure. Errors for 2/3 go to stderr as
// one-line JSON records.

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "magg/config.hpp"
#include "magg/io.hpp"
#include "magg/magg.hpp"

namespace {

void emit_error(const std::string& kind, const std::string& what) {
  std::fprintf(stderr, "{\"error\": \"%s\", \"detail\": \"%s\"}\n", kind.c_str(),
               magg::json_escape(what).c_str());
}

struct Options {
  std::string config;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  unsigned jobs = 1;
  bool allow_below_threshold = false;
  bool claimed_beta = false;
};

int cmd_run(const Options& opt) {
  magg::StudySpec spec = magg::load_study_config(opt.config);
  if (opt.seed) spec.master_seed = *opt.seed;
  spec.jobs = opt.jobs;
  spec.use_claimed_beta = opt.claimed_beta;

  std::vector<std::string> warnings;
  if (spec.beta_override > 0.0) {
    for (std::size_t n : spec.ns) {
      const magg::BetaPolicy pol = spec.scenario.beta_policy(n, opt.claimed_beta);
      if (spec.beta_override < pol.beta_min) {
        const std::string msg = "beta_override " + magg::fmt17(spec.beta_override) +
                                " below beta_min " + magg::fmt17(pol.beta_min) +
                                " at n=" + std::to_string(n);
        if (!opt.allow_below_threshold)
          throw std::invalid_argument(msg + " (pass --allow-below-threshold to force)");
        warnings.push_back(msg);
      }
    }
  }

  magg::StudyReport rep = magg::run_study(spec);

  std::vector<magg::NamedSlope> slopes;
  for (magg::Method m : spec.methods) {
    magg::NamedSlope row;
    row.scenario = spec.name;
    row.method = m;
    try {
      row.fit = magg::study_slope(rep, m);
    } catch (const std::domain_error& e) {
      row.defined = false;
      row.error = e.what();
    }
    slopes.push_back(row);
  }

  const magg::BetaPolicy policy =
      spec.scenario.beta_policy(spec.ns.front(), opt.claimed_beta);

  namespace fs = std::filesystem;
  const fs::path outdir(opt.out);
  magg::atomic_write(outdir / "trials.csv", magg::render_trials_csv(rep));
  magg::atomic_write(outdir / "slopes.csv", magg::render_slopes_csv(slopes));
  magg::atomic_write(outdir / "summary.json",
                     magg::render_summary_json(rep, slopes, &policy, warnings));
  for (const auto& w : warnings)
    std::fprintf(stderr, "{\"warning\": \"%s\"}\n", magg::json_escape(w).c_str());
  std::printf("{\"status\": \"ok\", \"out\": \"%s\", \"cells\": %zu, \"trials\": %zu, "
              "\"wall_ms\": %s}\n",
              magg::json_escape(outdir.string()).c_str(), rep.cells.size(),
              rep.cells.size() * spec.reps, magg::fmt17(rep.wall_ms_total).c_str());
  return 0;
}

int cmd_calibrate(const Options& opt) {
  magg::StudySpec spec = magg::load_study_config(opt.config);
  std::vector<magg::BetaPolicy> pols;
  bool uniform = true;
  for (std::size_t n : spec.ns) {
    pols.push_back(spec.scenario.beta_policy(n, opt.claimed_beta));
    if (pols.size() > 1 && pols.back().beta_min != pols.front().beta_min) uniform = false;
  }
  if (uniform) {
    std::printf("%s\n", magg::beta_policy_json(pols.front()).c_str());
  } else {
    std::string s = "[";
    for (std::size_t i = 0; i < pols.size(); ++i) {
      s += std::string(i == 0 ? "" : ",") + "\n  {\"n\": " + std::to_string(spec.ns[i]) +
           ", \"policy\": " + magg::beta_policy_json(pols[i], 2) + "}";
    }
    s += "\n]";
    std::printf("%s\n", s.c_str());
  }
  return 0;
}

// Worst observed eigenvalue across a family of per-draw checks.
magg::ConcavityReport merge_reports(const std::vector<magg::ConcavityReport>& rs) {
  magg::ConcavityReport out;
  out.passed = true;
  out.min_eigenvalue_observed = 0.0;
  bool first = true;
  for (const auto& r : rs) {
    if (first || r.min_eigenvalue_observed < out.min_eigenvalue_observed)
      out.min_eigenvalue_observed = r.min_eigenvalue_observed;
    out.sample_points += r.sample_points;
    out.tolerance = r.tolerance;
    out.passed = out.passed && r.passed;
    first = false;
  }
  return out;
}

int cmd_check_concavity(const Options& opt) {
  magg::StudySpec spec = magg::load_study_config(opt.config);
  const magg::Scenario& sc = spec.scenario;
  const std::size_t n0 = spec.ns.front();
  const double beta = spec.beta_override > 0.0
                          ? spec.beta_override
                          : sc.beta_policy(n0, opt.claimed_beta).beta_min;
  const std::uint64_t seed = opt.seed.value_or(1);
  magg::Rng rng(seed);
  const std::size_t draws = 8;     // data draws (h vectors / family params)
  const std::size_t points = 64;   // simplex points per draw

  std::vector<magg::ConcavityReport> reports;
  switch (sc.kind) {
    case magg::ScenarioKind::density_kl: {
      const auto theta_prime = magg::uniform_weights(sc.M);
      for (std::size_t d = 0; d < draws; ++d) {
        magg::Sample s = sc.draw(rng, n0);
        std::vector<double> h(sc.M);
        for (std::size_t j = 0; j < sc.M; ++j)
          h[j] = magg::evaluate(sc.dict.evaluators[j], s.x);
        reports.push_back(magg::check_exp_concavity(magg::kl_gap_fn(h, theta_prime), beta,
                                                    sc.M, points, seed + d));
      }
      break;
    }
    case magg::ScenarioKind::classification_phi: {
      for (std::size_t d = 0; d < draws; ++d) {
        magg::Sample s = sc.draw(rng, n0);
        std::vector<double> h(sc.M);
        for (std::size_t j = 0; j < sc.M; ++j)
          h[j] = magg::evaluate(sc.dict.evaluators[j], s.x);
        reports.push_back(magg::check_exp_concavity(
            magg::phi_margin_fn(sc.phi, h, s.y > 0 ? 1 : -1), beta, sc.M, points, seed + d));
      }
      break;
    }
    case magg::ScenarioKind::parametric_bernoulli:
    case magg::ScenarioKind::parametric_poisson:
    case magg::ScenarioKind::parametric_gaussian: {
      const auto theta_prime = magg::uniform_weights(sc.M);
      std::vector<double> avals = sc.dict.params;
      avals.push_back(sc.a_star);
      for (double a : avals) {
        magg::SimplexFn psi;
        if (sc.kind == magg::ScenarioKind::parametric_bernoulli)
          psi = magg::psi_bernoulli_fn(sc.dict.params, theta_prime, a, beta);
        else if (sc.kind == magg::ScenarioKind::parametric_poisson)
          psi = magg::psi_poisson_fn(sc.dict.params, theta_prime, a, beta);
        else
          psi = magg::psi_gaussian_fn(sc.dict.params, theta_prime, a, sc.param_sigma, beta);
        reports.push_back(magg::check_concavity(psi, sc.M, points, seed));
      }
      break;
    }
    case magg::ScenarioKind::quadratic_game: {
      const auto theta_prime = magg::uniform_weights(sc.M);
      reports.push_back(magg::check_concavity(
          magg::psi_game_fn(sc.M, sc.truth_k, sc.delta(n0), sc.sigma, theta_prime, beta),
          sc.M, draws * points, seed));
      break;
    }
    default:
      throw std::invalid_argument(
          "no pointwise concavity diagnostic for kind '" + magg::kind_to_string(sc.kind) +
          "': its calibration rests on an averaged moment bound");
  }
  const magg::ConcavityReport merged = merge_reports(reports);
  std::printf("%s\n", magg::concavity_report_json(merged).c_str());
  return merged.passed ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mirror-averaging aggregation toolkit"};
  app.require_subcommand(1);
  Options opt;

  auto add_common = [&](CLI::App* sub, bool with_out) {
    sub->add_option("--config", opt.config, "study config JSON")->required();
    sub->add_option("--seed", opt.seed, "master seed override");
    sub->add_option("--jobs", opt.jobs, "worker thread cap")->check(CLI::PositiveNumber);
    if (with_out) sub->add_option("--out", opt.out, "output directory");
    sub->add_flag("--allow-below-threshold", opt.allow_below_threshold,
                  "permit beta overrides below the calibrated minimum");
    sub->add_flag("--claimed-beta", opt.claimed_beta,
                  "use claimed margin-loss temperatures instead of computed ones");
  };
  CLI::App* run = app.add_subcommand("run", "execute the configured study");
  add_common(run, true);
  CLI::App* cal = app.add_subcommand("calibrate", "print the temperature policy");
  add_common(cal, false);
  CLI::App* chk = app.add_subcommand("check-concavity", "run the concavity diagnostic");
  add_common(chk, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    emit_error("invalid-arguments", e.what());
    return 2;
  }

  try {
    if (run->parsed()) return cmd_run(opt);
    if (cal->parsed()) return cmd_calibrate(opt);
    return cmd_check_concavity(opt);
  } catch (const std::filesystem::filesystem_error& e) {
    emit_error("io", e.what());
    return 3;
  } catch (const std::runtime_error& e) {
    // config open failures and write failures land here
    emit_error("io", e.what());
    return 3;
  } catch (const std::exception& e) {
    emit_error("invalid-config", e.what());
    return 2;
  }
}

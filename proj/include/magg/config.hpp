#pragma once

// Config parsing only; all output JSON is emitted by io.hpp so numeric
// formatting stays under one roof. Requires the vendored json.hpp on the
// include path.

#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "scenario.hpp"
#include "study.hpp"

namespace magg {

namespace detail {

inline Evaluator parse_evaluator(const nlohmann::json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "constant") return ConstantFn{j.at("value").get<double>()};
  if (type == "affine")
    return AffineFn{j.at("intercept").get<double>(), j.at("slope").get<double>()};
  if (type == "histogram")
    return HistogramFn{j.at("edges").get<std::vector<double>>(),
                       j.at("heights").get<std::vector<double>>()};
  if (type == "gaussian-pdf")
    return GaussianPdfFn{j.at("mean").get<double>(), j.at("sigma").get<double>()};
  throw std::invalid_argument("config: unknown function type: " + type);
}

inline Dictionary parse_dictionary(const nlohmann::json& j, DictKind kind) {
  Dictionary d;
  d.kind = kind;
  if (j.contains("support")) {
    const auto& sup = j.at("support");
    d.support_lo = sup.at(0).get<double>();
    d.support_hi = sup.at(1).get<double>();
  }
  if (kind == DictKind::parameter) {
    d.params = j.at("params").get<std::vector<double>>();
  } else if (j.contains("functions")) {
    for (const auto& f : j.at("functions")) d.evaluators.push_back(parse_evaluator(f));
  } else if (j.contains("histograms")) {
    const auto edges = j.at("edges").get<std::vector<double>>();
    for (const auto& hs : j.at("histograms"))
      d.evaluators.push_back(HistogramFn{edges, hs.get<std::vector<double>>()});
  } else {
    throw std::invalid_argument("config: dictionary needs functions|histograms|params");
  }
  if (j.contains("L")) d.L = j.at("L").get<double>();
  if (j.contains("Ltilde")) d.Ltilde = j.at("Ltilde").get<double>();
  if (j.contains("ell")) d.ell = j.at("ell").get<double>();
  return d;
}

}  // namespace detail

// Builds a validated Scenario from the "scenario" object. Indices in configs
// are 1-based.
inline Scenario parse_scenario(const nlohmann::json& j) {
  Scenario sc;
  sc.kind = kind_from_string(j.at("kind").get<std::string>());
  switch (sc.kind) {
    case ScenarioKind::quadratic_game:
      sc.M = j.at("M").get<std::size_t>();
      sc.sigma = j.at("sigma").get<double>();
      sc.truth_k = j.at("truth_index").get<std::size_t>() - 1;
      break;
    case ScenarioKind::regression_gaussian:
    case ScenarioKind::regression_exp_moment:
    case ScenarioKind::regression_heavy_tail:
    case ScenarioKind::regression_bounded: {
      sc.dict = detail::parse_dictionary(j.at("dictionary"), DictKind::regression_fn);
      if (j.contains("truth_index")) {
        const std::size_t t = j.at("truth_index").get<std::size_t>() - 1;
        if (t >= sc.dict.evaluators.size())
          throw std::invalid_argument("config: truth_index out of range");
        sc.truth_fn = sc.dict.evaluators[t];
      } else {
        sc.truth_fn = detail::parse_evaluator(j.at("truth"));
      }
      if (j.contains("noise_sigma")) sc.noise_sigma = j.at("noise_sigma").get<double>();
      if (j.contains("t_dof")) sc.t_dof = j.at("t_dof").get<int>();
      if (j.contains("s")) sc.s_moment = j.at("s").get<double>();
      if (j.contains("C1")) sc.C1 = j.at("C1").get<double>();
      if (j.contains("halfwidth")) sc.noise_halfwidth = j.at("halfwidth").get<double>();
      if (j.contains("b0")) sc.b0 = j.at("b0").get<double>();
      break;
    }
    case ScenarioKind::classification_phi: {
      sc.dict = detail::parse_dictionary(j.at("dictionary"), DictKind::classifier_score);
      sc.phi_name = j.at("phi").get<std::string>();
      sc.eta_slope = j.at("eta_slope").get<double>();
      break;
    }
    case ScenarioKind::density_kl:
    case ScenarioKind::density_l2: {
      sc.dict = detail::parse_dictionary(j.at("dictionary"), DictKind::density);
      if (j.contains("truth_index")) {
        const std::size_t t = j.at("truth_index").get<std::size_t>() - 1;
        if (t >= sc.dict.evaluators.size())
          throw std::invalid_argument("config: truth_index out of range");
        sc.truth_hist = std::get<HistogramFn>(sc.dict.evaluators[t]);
      } else {
        const auto& tj = j.at("truth");
        sc.truth_hist = HistogramFn{tj.at("edges").get<std::vector<double>>(),
                                    tj.at("heights").get<std::vector<double>>()};
      }
      if (j.contains("clamp_floor")) sc.clamp_floor = j.at("clamp_floor").get<double>();
      break;
    }
    case ScenarioKind::parametric_gaussian:
    case ScenarioKind::parametric_bernoulli:
    case ScenarioKind::parametric_poisson: {
      sc.dict = detail::parse_dictionary(j.at("dictionary"), DictKind::parameter);
      sc.a_star = j.at("a_star").get<double>();
      if (j.contains("sigma")) sc.param_sigma = j.at("sigma").get<double>();
      break;
    }
  }
  sc.validate();
  return sc;
}

inline StudySpec parse_study_config(const nlohmann::json& root) {
  StudySpec spec;
  const auto& sj = root.at("scenario");
  spec.scenario = parse_scenario(sj);
  spec.name = sj.at("name").get<std::string>();
  const auto& st = root.at("study");
  spec.ns = st.at("ns").get<std::vector<std::size_t>>();
  spec.reps = st.at("reps").get<std::size_t>();
  if (st.contains("seed")) spec.master_seed = st.at("seed").get<std::uint64_t>();
  if (st.contains("methods")) {
    spec.methods.clear();
    for (const auto& m : st.at("methods")) {
      const std::string name = m.get<std::string>();
      if (name == "mirror-averaging")
        spec.methods.push_back(Method::mirror_averaging);
      else if (name == "erm-selector")
        spec.methods.push_back(Method::erm_selector);
      else
        throw std::invalid_argument("config: unknown method: " + name);
    }
    if (spec.methods.empty()) throw std::invalid_argument("config: empty methods list");
  }
  if (st.contains("beta_override")) spec.beta_override = st.at("beta_override").get<double>();
  if (st.contains("remainder_draws"))
    spec.remainder_draws = st.at("remainder_draws").get<std::size_t>();
  for (std::size_t n : spec.ns)
    if (n < 2) throw std::invalid_argument("config: every n must be >= 2");
  return spec;
}

inline StudySpec load_study_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  nlohmann::json root;
  in >> root;
  return parse_study_config(root);
}

}  // namespace magg

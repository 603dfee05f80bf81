#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "calibration.hpp"
#include "study.hpp"

namespace magg {

// Shortest round-trippable decimal; every number in every output file goes
// through this one formatter so reruns are byte-identical.
inline std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

// Write to a sibling temp file, then rename into place: readers never observe
// a partially written artifact.
inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.parent_path() / (path.filename().string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for write: " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

inline std::string json_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size() + 8);
  for (char ch : s) {
    switch (ch) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default:
        if (static_cast<unsigned char>(ch) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", ch);
          out += buf;
        } else {
          out += ch;
        }
    }
  }
  return out;
}

// Per-trial rows. The '#' header lines carry provenance and real timing;
// consumers (and the determinism check) look only at the non-'#' body. The
// wall_ms column is reserved and always 0 so the body stays reproducible.
inline std::string render_trials_csv(const StudyReport& rep) {
  std::string s;
  s += "# master_seed=" + std::to_string(rep.spec.master_seed) +
       " jobs=" + std::to_string(rep.spec.jobs) +
       " wall_ms_total=" + fmt17(rep.wall_ms_total) + "\n";
  s += "scenario,method,beta,M,n,rep,seed,excess_risk,clamp_rate,wall_ms\n";
  for (std::size_t c = 0; c < rep.cells.size(); ++c) {
    const CellSummary& cs = rep.cells[c];
    for (std::size_t r = 0; r < rep.trials[c].size(); ++r) {
      const TrialResult& t = rep.trials[c][r];
      s += cs.scenario + "," + method_to_string(cs.method) + "," + fmt17(cs.beta) + "," +
           std::to_string(cs.M) + "," + std::to_string(cs.n) + "," +
           std::to_string(r + 1) + "," + std::to_string(t.seed) + "," +
           fmt17(t.excess_risk) + "," + fmt17(t.clamp_rate) + ",0\n";
    }
  }
  return s;
}

struct NamedSlope {
  std::string scenario;
  Method method = Method::mirror_averaging;
  SlopeFit fit;
  bool defined = true;
  std::string error;  // set when the fit was undefined
};

inline std::string render_slopes_csv(const std::vector<NamedSlope>& rows) {
  std::string s = "scenario,method,slope,stderr,cells_used,cells_dropped,note\n";
  for (const auto& r : rows) {
    s += r.scenario + "," + method_to_string(r.method) + ",";
    if (r.defined) {
      s += fmt17(r.fit.slope) + "," + fmt17(r.fit.stderr_) + "," +
           std::to_string(r.fit.cells_used) + "," + std::to_string(r.fit.cells_dropped) +
           "," + (r.fit.note.empty() ? std::string() : r.fit.note);
    } else {
      s += ",,0,0," + r.error;
    }
    s += "\n";
  }
  return s;
}

inline std::string beta_policy_json(const BetaPolicy& p, int indent = 0) {
  const std::string pad(static_cast<std::size_t>(indent), ' ');
  const std::string pad2(static_cast<std::size_t>(indent) + 2, ' ');
  std::string s = "{\n";
  s += pad2 + "\"scenario_kind\": \"" + json_escape(p.scenario_kind) + "\",\n";
  s += pad2 + "\"beta_min\": " + fmt17(p.beta_min) + ",\n";
  s += pad2 + "\"constants\": {";
  bool first = true;
  for (const auto& [k, v] : p.constants) {
    s += std::string(first ? "" : ",") + "\n" + pad2 + "  \"" + json_escape(k) +
         "\": " + fmt17(v);
    first = false;
  }
  s += first ? "},\n" : "\n" + pad2 + "},\n";
  s += pad2 + "\"provenance\": \"" + json_escape(p.provenance) + "\"\n";
  s += pad + "}";
  return s;
}

inline std::string concavity_report_json(const ConcavityReport& r, int indent = 0) {
  const std::string pad(static_cast<std::size_t>(indent), ' ');
  const std::string pad2(static_cast<std::size_t>(indent) + 2, ' ');
  std::string s = "{\n";
  s += pad2 + "\"passed\": " + (r.passed ? std::string("true") : std::string("false")) + ",\n";
  s += pad2 + "\"min_eigenvalue_observed\": " + fmt17(r.min_eigenvalue_observed) + ",\n";
  s += pad2 + "\"sample_points\": " + std::to_string(r.sample_points) + ",\n";
  s += pad2 + "\"tolerance\": " + fmt17(r.tolerance) + "\n";
  s += pad + "}";
  return s;
}

// Aggregate study summary. Indices are 1-based in every output artifact.
inline std::string render_summary_json(const StudyReport& rep,
                                       const std::vector<NamedSlope>& slopes,
                                       const BetaPolicy* policy = nullptr,
                                       const std::vector<std::string>& warnings = {}) {
  std::string s = "{\n";
  s += "  \"scenario\": \"" + json_escape(rep.spec.name) + "\",\n";
  if (!warnings.empty()) {
    s += "  \"warnings\": [";
    for (std::size_t i = 0; i < warnings.size(); ++i)
      s += std::string(i == 0 ? "" : ", ") + "\"" + json_escape(warnings[i]) + "\"";
    s += "],\n";
  }
  s += "  \"kind\": \"" + json_escape(kind_to_string(rep.spec.scenario.kind)) + "\",\n";
  s += "  \"M\": " + std::to_string(rep.spec.scenario.M) + ",\n";
  s += "  \"reps\": " + std::to_string(rep.spec.reps) + ",\n";
  s += "  \"master_seed\": " + std::to_string(rep.spec.master_seed) + ",\n";
  s += "  \"jobs\": " + std::to_string(rep.spec.jobs) + ",\n";
  s += "  \"wall_ms_total\": " + fmt17(rep.wall_ms_total) + ",\n";
  if (policy != nullptr) s += "  \"beta_policy\": " + beta_policy_json(*policy, 2) + ",\n";
  s += "  \"cells\": [";
  for (std::size_t c = 0; c < rep.cells.size(); ++c) {
    const CellSummary& cs = rep.cells[c];
    s += std::string(c == 0 ? "" : ",");
    s += "\n    {\n";
    s += "      \"scenario\": \"" + json_escape(cs.scenario) + "\",\n";
    s += "      \"method\": \"" + method_to_string(cs.method) + "\",\n";
    s += "      \"beta\": " + fmt17(cs.beta) + ",\n";
    s += "      \"M\": " + std::to_string(cs.M) + ",\n";
    s += "      \"n\": " + std::to_string(cs.n) + ",\n";
    s += "      \"reps\": " + std::to_string(cs.reps) + ",\n";
    s += "      \"mean_excess\": " + fmt17(cs.mean_excess) + ",\n";
    s += "      \"stderr_excess\": " + fmt17(cs.stderr_excess) + ",\n";
    s += "      \"mean_clamp_rate\": " + fmt17(cs.mean_clamp_rate) + ",\n";
    s += "      \"bound_core\": " + fmt17(cs.bound_core) + ",\n";
    s += "      \"bound_remainder\": " + fmt17(cs.bound_remainder) + ",\n";
    s += "      \"bound_total\": " + fmt17(cs.bound_total) + ",\n";
    s += "      \"oracle_index\": " + std::to_string(cs.oracle_index + 1) + ",\n";
    s += "      \"oracle_risk\": " + fmt17(cs.oracle_risk);
    if (rep.spec.scenario.kind == ScenarioKind::quadratic_game) {
      s += ",\n      \"simplex_optimum_risk\": " +
           fmt17(rep.spec.scenario.game_simplex_optimum(cs.n));
    }
    s += "\n    }";
  }
  s += rep.cells.empty() ? "],\n" : "\n  ],\n";
  s += "  \"slopes\": [";
  for (std::size_t i = 0; i < slopes.size(); ++i) {
    const NamedSlope& r = slopes[i];
    s += std::string(i == 0 ? "" : ",");
    s += "\n    {\n";
    s += "      \"scenario\": \"" + json_escape(r.scenario) + "\",\n";
    s += "      \"method\": \"" + method_to_string(r.method) + "\",\n";
    if (r.defined) {
      s += "      \"slope\": " + fmt17(r.fit.slope) + ",\n";
      s += "      \"stderr\": " + fmt17(r.fit.stderr_) + ",\n";
      s += "      \"cells_used\": " + std::to_string(r.fit.cells_used) + ",\n";
      s += "      \"cells_dropped\": " + std::to_string(r.fit.cells_dropped) + ",\n";
      s += "      \"note\": \"" + json_escape(r.fit.note) + "\"\n";
    } else {
      s += "      \"slope\": null,\n";
      s += "      \"stderr\": null,\n";
      s += "      \"cells_used\": 0,\n";
      s += "      \"cells_dropped\": 0,\n";
      s += "      \"note\": \"" + json_escape(r.error) + "\"\n";
    }
    s += "    }";
  }
  s += slopes.empty() ? "]\n" : "\n  ]\n";
  s += "}\n";
  return s;
}

}  // namespace magg

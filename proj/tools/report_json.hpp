#pragma once

#include <cmath>
#include <string>

#include "hmm_spde/experiments.hpp"
#include "hmm_spde/hmm.hpp"
#include "json.hpp"

namespace hmm_spde::cli {

inline nlohmann::json number_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); }

inline nlohmann::json to_json(const RateReport& report) {
  nlohmann::json j;
  j["experiment"] = report.experiment;
  j["sweep_variable"] = report.sweep_variable;
  j["runtime_seconds"] = report.runtime_seconds;
  auto& fits = j["fits"] = nlohmann::json::array();
  for (const auto& f : report.fits) {
    fits.push_back({{"metric", f.metric},
                    {"scale", f.scale == FitScale::log_log ? "log_log" : "semi_log"},
                    {"slope", number_or_null(f.fit.slope)},
                    {"ci95_low", number_or_null(f.fit.ci_low)},
                    {"ci95_high", number_or_null(f.fit.ci_high)},
                    {"rows_used", f.rows_used}});
  }
  auto& rows = j["rows"] = nlohmann::json::array();
  for (const auto& r : report.rows)
    rows.push_back({{"metric", r.metric},
                    {"value", r.value},
                    {"error", r.error},
                    {"mc_stderr", r.mc_stderr},
                    {"n_samples", r.n_samples}});
  auto& ref = j["reference"] = nlohmann::json::object();
  for (const auto& [k, v] : report.reference) ref[k] = number_or_null(v);
  return j;
}

inline nlohmann::json to_json(const HmmParams& p) {
  return {{"epsilon", p.epsilon},       {"macro_dt", p.macro_dt}, {"micro_dt", p.micro_dt},
          {"tau", p.tau()},             {"T", p.horizon},         {"N", p.window},
          {"M", p.replicas},            {"n_T", p.warmup},        {"n_0", p.macro_steps()},
          {"m_0", p.micro_steps_per_macro()}};
}

}  // namespace hmm_spde::cli

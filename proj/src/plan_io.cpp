// SPDX-License-Identifier: Apache-2.0
#include "nfad/plan_io.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <sstream>

#include "json.hpp"

namespace nfad {

using nlohmann::json;

namespace {

NearFieldPolicy parse_policy(const std::string& s) {
  if (s == "all_correlated") return NearFieldPolicy::all_correlated;
  if (s == "geometric") return NearFieldPolicy::geometric;
  if (s == "first_n_corr") return NearFieldPolicy::first_n_corr;
  throw ConfigError("unknown near-field policy: " + s);
}

std::string policy_name(NearFieldPolicy p) {
  switch (p) {
    case NearFieldPolicy::all_correlated: return "all_correlated";
    case NearFieldPolicy::geometric: return "geometric";
    case NearFieldPolicy::first_n_corr: return "first_n_corr";
  }
  return "unknown";
}

BackendChoice parse_backend(const std::string& s) {
  if (s == "auto") return BackendChoice::automatic;
  if (s == "full") return BackendChoice::full;
  if (s == "block") return BackendChoice::block;
  throw ConfigError("unknown backend: " + s);
}

std::string backend_name(BackendChoice b) {
  switch (b) {
    case BackendChoice::automatic: return "auto";
    case BackendChoice::full: return "full";
    case BackendChoice::block: return "block";
  }
  return "auto";
}

void reject_unknown(const json& j, std::initializer_list<const char*> known, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : known) ok = ok || it.key() == k;
    if (!ok) throw ConfigError("unknown " + where + " key: " + it.key());
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

ExperimentPlan plan_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("plan is not valid JSON: ") + e.what());
  }
  reject_unknown(j,
                 {"sweep", "values", "antennas", "wavelength_m", "cell_radius_m", "scatterer_radius_m", "devices",
                  "scatterers", "n_corr", "power_dbm", "noise_dbm", "near_field_policy", "active", "seq_len", "bits",
                  "trials", "seed", "keep_active_fraction", "fixed_population", "channel_case", "model", "backend",
                  "solver"},
                 "plan");
  ExperimentPlan p;
  try {
    read(j, "sweep", p.sweep_variable);
    read(j, "values", p.values);
    read(j, "antennas", p.scenario.geometry.antenna_count);
    read(j, "wavelength_m", p.scenario.geometry.carrier_wavelength_m);
    read(j, "cell_radius_m", p.scenario.geometry.cell_radius_m);
    read(j, "scatterer_radius_m", p.scenario.geometry.scatterer_region_radius_m);
    read(j, "devices", p.scenario.devices);
    read(j, "scatterers", p.scenario.scatterers_per_device);
    read(j, "n_corr", p.scenario.n_corr);
    if (j.contains("power_dbm")) p.scenario.power_mw = dbm_to_mw(j.at("power_dbm").get<double>());
    if (j.contains("noise_dbm")) p.scenario.noise_power_mw = dbm_to_mw(j.at("noise_dbm").get<double>());
    if (j.contains("near_field_policy")) p.scenario.policy = parse_policy(j.at("near_field_policy").get<std::string>());
    read(j, "active", p.active);
    read(j, "seq_len", p.seq_len);
    read(j, "bits", p.bits);
    read(j, "trials", p.trials);
    read(j, "seed", p.seed);
    read(j, "keep_active_fraction", p.keep_active_fraction);
    read(j, "fixed_population", p.fixed_population);
    if (j.contains("channel_case")) p.channel_case = parse_channel_case(j.at("channel_case").get<std::string>());
    if (j.contains("model")) p.model = parse_model_kind(j.at("model").get<std::string>());
    if (j.contains("backend")) p.backend = parse_backend(j.at("backend").get<std::string>());
    if (j.contains("solver")) {
      const json& s = j.at("solver");
      reject_unknown(s, {"kind", "mu", "tol", "max_sweeps", "divergence_jump", "exact_rank_limit", "roots"}, "solver");
      if (s.contains("kind")) {
        const auto k = s.at("kind").get<std::string>();
        if (k == "exact") p.solver.kind = StepKind::exact;
        else if (k == "inexact") p.solver.kind = StepKind::inexact;
        else throw ConfigError("unknown solver kind: " + k);
      }
      read(s, "mu", p.solver.mu);
      read(s, "tol", p.solver.tol);
      read(s, "max_sweeps", p.solver.max_sweeps);
      read(s, "divergence_jump", p.solver.divergence_jump);
      if (s.contains("exact_rank_limit")) p.solver.exact_rank_limit = s.at("exact_rank_limit").get<std::size_t>();
      if (s.contains("roots")) p.solver.roots = parse_root_finder(s.at("roots").get<std::string>());
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad plan field: ") + e.what());
  }
  p.validate();
  return p;
}

ExperimentPlan load_plan(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open plan file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return plan_from_json_text(ss.str());
}

std::string plan_to_json_text(const ExperimentPlan& p) {
  json j;
  j["sweep"] = p.sweep_variable;
  j["values"] = p.values;
  j["antennas"] = p.scenario.geometry.antenna_count;
  j["wavelength_m"] = p.scenario.geometry.carrier_wavelength_m;
  j["cell_radius_m"] = p.scenario.geometry.cell_radius_m;
  j["scatterer_radius_m"] = p.scenario.geometry.scatterer_region_radius_m;
  j["devices"] = p.scenario.devices;
  j["scatterers"] = p.scenario.scatterers_per_device;
  j["near_field_policy"] = policy_name(p.scenario.policy);
  j["n_corr"] = p.scenario.n_corr;
  j["power_dbm"] = 10.0 * std::log10(p.scenario.power_mw);
  j["noise_dbm"] = 10.0 * std::log10(p.scenario.noise_power_mw);
  j["active"] = p.active;
  j["seq_len"] = p.seq_len;
  j["bits"] = p.bits;
  j["trials"] = p.trials;
  j["seed"] = p.seed;
  j["keep_active_fraction"] = p.keep_active_fraction;
  j["fixed_population"] = p.fixed_population;
  j["channel_case"] = to_string(p.channel_case);
  j["model"] = to_string(p.model);
  j["backend"] = backend_name(p.backend);
  json s;
  s["kind"] = p.solver.kind == StepKind::exact ? "exact" : "inexact";
  s["mu"] = p.solver.mu;
  s["tol"] = p.solver.tol;
  s["max_sweeps"] = p.solver.max_sweeps;
  s["divergence_jump"] = p.solver.divergence_jump;
  s["roots"] = to_string(p.solver.roots);
  if (p.solver.exact_rank_limit != std::numeric_limits<std::size_t>::max()) s["exact_rank_limit"] = p.solver.exact_rank_limit;
  j["solver"] = s;
  return j.dump(2);
}

}  // namespace nfad

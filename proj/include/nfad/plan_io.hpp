// SPDX-License-Identifier: Apache-2.0
//
// JSON experiment plans. Missing keys keep their defaults.
//
//   {
//     "sweep": "L", "values": [6, 10, 14, 18],
//     "antennas": 16, "devices": 50, "active": 5, "seq_len": 10,
//     "scatterers": 4, "bits": 0, "trials": 200, "seed": 1,
//     "channel_case": "correlated_rayleigh", "model": "true_mle",
//     "keep_active_fraction": false, "fixed_population": false,
//     "near_field_policy": "all_correlated", "n_corr": 0,
//     "backend": "auto",
//     "solver": {"kind": "inexact", "mu": 10, "tol": 1e-3, "max_sweeps": 50}
//   }
#pragma once

#include <string>

#include "nfad/harness.hpp"

namespace nfad {

ExperimentPlan plan_from_json_text(const std::string& text);
ExperimentPlan load_plan(const std::string& path);
std::string plan_to_json_text(const ExperimentPlan& plan);

}  // namespace nfad

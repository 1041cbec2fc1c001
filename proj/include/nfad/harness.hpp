// SPDX-License-Identifier: Apache-2.0
//
// Monte Carlo experiment driver: per-trial scenario generation, solving,
// threshold sweeps and aggregate detection statistics.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "nfad/cd_solvers.hpp"
#include "nfad/data_detection.hpp"
#include "nfad/geometry.hpp"

namespace nfad {

enum class ChannelCase { correlated_rician, correlated_rayleigh, uncorrelated };
enum class ModelKind { true_mle, mismatched_mle };
enum class BackendChoice { automatic, full, block };

std::string to_string(ChannelCase c);
std::string to_string(ModelKind m);
ChannelCase parse_channel_case(const std::string& s);
ModelKind parse_model_kind(const std::string& s);

struct ExperimentPlan {
  std::string sweep_variable = "L";  // one of M, L, N, K, scatterers, J
  std::vector<double> values{10};
  ScenarioConfig scenario;           // geometry.antenna_count, devices, scatterers_per_device, policy
  int seq_len = 10;                  // L
  int active = 5;                    // K
  bool keep_active_fraction = false; // N sweeps scale K to keep K/N fixed
  int bits = 0;                      // J
  int trials = 200;
  std::uint64_t seed = 1;
  ChannelCase channel_case = ChannelCase::correlated_rayleigh;
  ModelKind model = ModelKind::true_mle;
  bool fixed_population = false;     // one population per sweep point instead of per trial
  BackendChoice backend = BackendChoice::automatic;
  SolverOptions solver;

  void validate() const;
};

/// The plan with the sweep variable set to `value`.
ExperimentPlan plan_at(const ExperimentPlan& plan, double value);

/// Threshold grid theta_k = (k + 0.5) / size.
std::vector<double> threshold_grid(int size = 512);

struct TrialOutcome {
  bool diverged = false;
  int sweeps = 0;
  std::vector<int> misses;        // per threshold
  std::vector<int> false_alarms;  // per threshold
  int actives = 0;
  int inactives = 0;
  int symbol_errors = 0;          // at threshold 0.5
  int detected = 0;
  double max_violation = 0.0;
  double seconds = 0.0;
  RVec a_hat;
};

/// Deterministic per-trial seeds for the scenario pieces.
struct TrialSeeds {
  std::uint64_t population, sequences, activity, signal, solver;
};
TrialSeeds trial_seeds(std::uint64_t seed, std::uint64_t point, std::uint64_t trial);

TrialOutcome run_trial(const ExperimentPlan& point_plan, std::uint64_t point, std::uint64_t trial,
                       const std::vector<double>& grid);

struct DetectionReport {
  double sweep_value = 0.0;
  std::vector<double> thresholds;
  std::vector<double> pm;  // non-decreasing in the threshold
  std::vector<double> pf;  // non-increasing in the threshold
  double error_probability = 0.0;
  double crossing_threshold = 0.0;
  bool crossing_found = false;
  int trials = 0;
  int used_trials = 0;
  int diverged = 0;
  int decisions = 0;       // device decisions entering PM/PF, trials * N
  double mean_sweeps = 0.0;
  double symbol_error_rate = 0.0;
  double max_violation = 0.0;
  double mean_seconds = 0.0;
};

/// Aggregates outcomes in the given order; counts are integers so the
/// result does not depend on that order.
DetectionReport aggregate(const std::vector<TrialOutcome>& outcomes, const std::vector<double>& grid);

std::vector<DetectionReport> run_experiment(const ExperimentPlan& plan);

/// Same plan with every correlation matrix replaced by its trace-matched identity.
std::vector<DetectionReport> baseline_mismatched(const ExperimentPlan& plan);

struct Crossing {
  double value = 0.0;
  double threshold = 0.0;
  bool found = false;
};

/// PM = PF crossing by bisection on the linear interpolant of PM - PF.
Crossing error_probability(const std::vector<double>& pm, const std::vector<double>& pf,
                           const std::vector<double>& grid);

/// z statistic of the one-sided two-proportion test H1: p1 > p2.
double two_proportion_z(double p1, double n1, double p2, double n2);
bool significantly_greater(double p1, double n1, double p2, double n2, double z_crit = 1.6448536269514722);

struct ConvergenceRow {
  double sweep_value = 0.0;
  int instances = 0;
  int exact_converged = 0;
  int inexact_converged = 0;
};

/// Exact and inexact solvers on the same instances for every sweep value.
std::vector<ConvergenceRow> convergence_table(const ExperimentPlan& plan);

/// Long-format CSV: sweep,value,channel_case,model,J,metric,metric_value.
void write_detection_csv(std::ostream& os, const ExperimentPlan& plan, const std::vector<DetectionReport>& reports,
                         bool header = true);
void write_curves_csv(std::ostream& os, const std::vector<DetectionReport>& reports);
void write_convergence_csv(std::ostream& os, const ExperimentPlan& plan, const std::vector<ConvergenceRow>& rows);
void write_trace_csv(std::ostream& os, const SolveResult& result);

/// Builds the population, model and signal of one trial, as run_trial does.
struct TrialProblem {
  DevicePopulation population;
  ActivityModel true_model;
  ActivityModel solve_model;
  ActivityTruth truth;
  ReceivedSignal signal;
};
TrialProblem make_trial_problem(const ExperimentPlan& point_plan, std::uint64_t point, std::uint64_t trial);

/// Solves one problem with the plan's backend choice.
SolveResult solve_problem(const ActivityModel& model, const CVec& y, const SolverOptions& options,
                          BackendChoice backend = BackendChoice::automatic);

}  // namespace nfad

// SPDX-License-Identifier: Apache-2.0
#include "nfad/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <memory>
#include <ostream>

#include "nfad/lowrank.hpp"

namespace nfad {

std::string to_string(ChannelCase c) {
  switch (c) {
    case ChannelCase::correlated_rician: return "correlated_rician";
    case ChannelCase::correlated_rayleigh: return "correlated_rayleigh";
    case ChannelCase::uncorrelated: return "uncorrelated";
  }
  return "unknown";
}

std::string to_string(ModelKind m) { return m == ModelKind::true_mle ? "true_mle" : "mismatched_mle"; }

ChannelCase parse_channel_case(const std::string& s) {
  if (s == "correlated_rician") return ChannelCase::correlated_rician;
  if (s == "correlated_rayleigh") return ChannelCase::correlated_rayleigh;
  if (s == "uncorrelated") return ChannelCase::uncorrelated;
  throw ConfigError("unknown channel case: " + s);
}

ModelKind parse_model_kind(const std::string& s) {
  if (s == "true_mle") return ModelKind::true_mle;
  if (s == "mismatched_mle") return ModelKind::mismatched_mle;
  throw ConfigError("unknown model: " + s);
}

void ExperimentPlan::validate() const {
  static const std::vector<std::string> vars{"M", "L", "N", "K", "scatterers", "J"};
  if (std::find(vars.begin(), vars.end(), sweep_variable) == vars.end())
    throw ConfigError("unknown sweep variable: " + sweep_variable);
  if (values.empty()) throw ConfigError("sweep value list is empty");
  if (trials < 1) throw ConfigError("trials must be >= 1");
  for (double v : values) plan_at(*this, v);
}

ExperimentPlan plan_at(const ExperimentPlan& plan, double value) {
  ExperimentPlan p = plan;
  const int v = static_cast<int>(std::lround(value));
  const std::string& s = plan.sweep_variable;
  if (s == "M") p.scenario.geometry.antenna_count = v;
  else if (s == "L") p.seq_len = v;
  else if (s == "N") {
    if (plan.keep_active_fraction)
      p.active = static_cast<int>(std::lround(static_cast<double>(plan.active) * v / plan.scenario.devices));
    p.scenario.devices = v;
  } else if (s == "K") p.active = v;
  else if (s == "scatterers") p.scenario.scatterers_per_device = v;
  else if (s == "J") p.bits = v;
  p.scenario.line_of_sight = p.channel_case == ChannelCase::correlated_rician;
  p.scenario.uncorrelated = p.channel_case == ChannelCase::uncorrelated;
  p.values = {value};
  p.scenario.validate();
  if (p.seq_len < 1) throw ConfigError("sequence length must be >= 1");
  if (p.active < 0 || p.active > p.scenario.devices) throw ConfigError("active count out of range");
  if (p.bits < 0 || p.bits > 8) throw ConfigError("bits out of range");
  return p;
}

std::vector<double> threshold_grid(int size) {
  std::vector<double> g(static_cast<std::size_t>(size));
  for (int k = 0; k < size; ++k) g[static_cast<std::size_t>(k)] = (k + 0.5) / size;
  return g;
}

TrialSeeds trial_seeds(std::uint64_t seed, std::uint64_t point, std::uint64_t trial) {
  const std::uint64_t base = derive_seed(seed, point, trial);
  return {derive_seed(base, 1), derive_seed(base, 2), derive_seed(base, 3), derive_seed(base, 4),
          derive_seed(base, 5)};
}

TrialProblem make_trial_problem(const ExperimentPlan& p, std::uint64_t point, std::uint64_t trial) {
  const TrialSeeds seeds = trial_seeds(p.seed, point, trial);
  const std::uint64_t pop_seed = p.fixed_population ? derive_seed(p.seed, point, 0xf17edULL) : seeds.population;
  TrialProblem tp;
  tp.population = generate_population(p.scenario, pop_seed);
  const int q = 1 << p.bits;
  const SignatureSet seqs = generate_sequences(p.scenario.devices, p.seq_len, q, seeds.sequences);
  DataDetectionConfig dcfg;
  dcfg.bits = p.bits;
  tp.true_model = expand_problem(tp.population, seqs, dcfg);
  tp.solve_model = p.model == ModelKind::mismatched_mle ? mismatched_model(tp.true_model) : tp.true_model;
  tp.truth = sample_activity(p.scenario.devices, p.active, q, seeds.activity);
  tp.signal = synthesize_signal(tp.true_model, tp.truth, seeds.signal);
  return tp;
}

SolveResult solve_problem(const ActivityModel& model, const CVec& y, const SolverOptions& options,
                          BackendChoice backend) {
  std::unique_ptr<CovarianceBackend> state;
  if (backend != BackendChoice::full) {
    try {
      const LowRankBasis basis = build_basis(model);
      state = std::make_unique<BlockState>(model, basis, y);
    } catch (const ConfigError&) {
      if (backend == BackendChoice::block) throw;
    }
  }
  if (!state) state = std::make_unique<FullState>(model, y);
  return solve(*state, options);
}

TrialOutcome run_trial(const ExperimentPlan& p, std::uint64_t point, std::uint64_t trial,
                       const std::vector<double>& grid) {
  const auto t0 = std::chrono::steady_clock::now();
  const TrialProblem tp = make_trial_problem(p, point, trial);
  SolverOptions opts = p.solver;
  opts.seed = trial_seeds(p.seed, point, trial).solver;
  const SolveResult res = solve_problem(tp.solve_model, tp.signal.y, opts, p.backend);

  TrialOutcome out;
  out.sweeps = res.sweeps;
  out.a_hat = res.a;
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (res.termination == Termination::diverged) {
    out.diverged = true;
    return out;
  }
  const int n = p.scenario.devices;
  const int q = 1 << p.bits;
  std::vector<int> sent(static_cast<std::size_t>(n), -1);
  for (std::size_t i = 0; i < tp.truth.active.size(); ++i)
    sent[static_cast<std::size_t>(tp.truth.active[i])] = tp.truth.symbol[i];
  out.actives = static_cast<int>(tp.truth.active.size());
  out.inactives = n - out.actives;
  out.misses.assign(grid.size(), 0);
  out.false_alarms.assign(grid.size(), 0);
  for (int i = 0; i < n; ++i) {
    const double score = res.a.segment(static_cast<Index>(i) * q, q).maxCoeff();
    const bool active = sent[static_cast<std::size_t>(i)] >= 0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const bool decided = score > grid[k];
      if (active && !decided) ++out.misses[k];
      if (!active && decided) ++out.false_alarms[k];
    }
  }
  DataDetectionConfig dcfg;
  dcfg.bits = p.bits;
  const DataErrorReport er = data_error_metrics(decode(res.a, dcfg), tp.truth);
  out.symbol_errors = er.symbol_errors;
  out.detected = er.detected_actives;
  out.max_violation = q > 1 ? combination_violation(res.a, q).maxCoeff() : 0.0;
  return out;
}

DetectionReport aggregate(const std::vector<TrialOutcome>& outcomes, const std::vector<double>& grid) {
  DetectionReport rep;
  rep.thresholds = grid;
  rep.trials = static_cast<int>(outcomes.size());
  std::vector<long long> miss(grid.size(), 0), fa(grid.size(), 0);
  long long actives = 0, inactives = 0, sweeps = 0, sym = 0, det = 0;
  double viol = 0.0, secs = 0.0;
  for (const auto& o : outcomes) {
    secs += o.seconds;
    if (o.diverged) {
      ++rep.diverged;
      continue;
    }
    ++rep.used_trials;
    for (std::size_t k = 0; k < grid.size(); ++k) {
      miss[k] += o.misses[k];
      fa[k] += o.false_alarms[k];
    }
    actives += o.actives;
    inactives += o.inactives;
    sweeps += o.sweeps;
    sym += o.symbol_errors;
    det += o.detected;
    viol = std::max(viol, o.max_violation);
  }
  rep.decisions = static_cast<int>(actives + inactives);
  rep.pm.assign(grid.size(), 0.0);
  rep.pf.assign(grid.size(), 0.0);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    rep.pm[k] = actives > 0 ? static_cast<double>(miss[k]) / static_cast<double>(actives) : 0.0;
    rep.pf[k] = inactives > 0 ? static_cast<double>(fa[k]) / static_cast<double>(inactives) : 0.0;
  }
  const Crossing c = error_probability(rep.pm, rep.pf, grid);
  rep.error_probability = c.value;
  rep.crossing_threshold = c.threshold;
  rep.crossing_found = c.found;
  rep.mean_sweeps = rep.used_trials ? static_cast<double>(sweeps) / rep.used_trials : 0.0;
  rep.symbol_error_rate = det > 0 ? static_cast<double>(sym) / static_cast<double>(det) : 0.0;
  rep.max_violation = viol;
  rep.mean_seconds = rep.trials ? secs / rep.trials : 0.0;
  return rep;
}

std::vector<DetectionReport> run_experiment(const ExperimentPlan& plan) {
  plan.validate();
  const auto grid = threshold_grid();
  std::vector<DetectionReport> reports;
  for (std::size_t pi = 0; pi < plan.values.size(); ++pi) {
    const ExperimentPlan p = plan_at(plan, plan.values[pi]);
    std::vector<TrialOutcome> outcomes(static_cast<std::size_t>(p.trials));
    std::exception_ptr error;
#ifdef NFAD_HAVE_OPENMP
#pragma omp parallel for schedule(dynamic, 1)
#endif
    for (int t = 0; t < p.trials; ++t) {
      try {
        outcomes[static_cast<std::size_t>(t)] = run_trial(p, pi, static_cast<std::uint64_t>(t), grid);
      } catch (...) {
#ifdef NFAD_HAVE_OPENMP
#pragma omp critical
#endif
        if (!error) error = std::current_exception();
      }
    }
    if (error) std::rethrow_exception(error);
    DetectionReport rep = aggregate(outcomes, grid);
    rep.sweep_value = plan.values[pi];
    reports.push_back(std::move(rep));
  }
  return reports;
}

std::vector<DetectionReport> baseline_mismatched(const ExperimentPlan& plan) {
  ExperimentPlan p = plan;
  p.model = ModelKind::mismatched_mle;
  return run_experiment(p);
}

Crossing error_probability(const std::vector<double>& pm, const std::vector<double>& pf,
                           const std::vector<double>& grid) {
  if (pm.size() != grid.size() || pf.size() != grid.size() || grid.empty())
    throw ConfigError("curves and grid differ in length");
  const std::size_t n = grid.size();
  auto diff = [&](std::size_t k) { return pm[k] - pf[k]; };
  Crossing c;
  for (std::size_t k = 0; k < n; ++k) {
    if (diff(k) == 0.0) {
      c = {pm[k], grid[k], true};
      return c;
    }
    if (k + 1 < n && (diff(k) < 0.0) != (diff(k + 1) < 0.0) && diff(k + 1) != 0.0) {
      // bisection on the linear interpolant between grid k and k+1
      double lo = 0.0, hi = 1.0;
      const double d0 = diff(k), d1 = diff(k + 1);
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double dm = d0 + mid * (d1 - d0);
        if ((dm < 0.0) == (d0 < 0.0)) lo = mid;
        else hi = mid;
      }
      const double t = 0.5 * (lo + hi);
      c.threshold = grid[k] + t * (grid[k + 1] - grid[k]);
      c.value = pm[k] + t * (pm[k + 1] - pm[k]);
      c.found = true;
      return c;
    }
  }
  const std::size_t end = diff(0) > 0.0 ? 0 : n - 1;
  c.threshold = grid[end];
  c.value = 0.5 * (pm[end] + pf[end]);
  c.found = false;
  return c;
}

double two_proportion_z(double p1, double n1, double p2, double n2) {
  const double pooled = (p1 * n1 + p2 * n2) / (n1 + n2);
  const double se = std::sqrt(pooled * (1.0 - pooled) * (1.0 / n1 + 1.0 / n2));
  if (se == 0.0) return p1 > p2 ? INFINITY : 0.0;
  return (p1 - p2) / se;
}

bool significantly_greater(double p1, double n1, double p2, double n2, double z_crit) {
  return two_proportion_z(p1, n1, p2, n2) > z_crit;
}

std::vector<ConvergenceRow> convergence_table(const ExperimentPlan& plan) {
  plan.validate();
  std::vector<ConvergenceRow> rows;
  for (std::size_t pi = 0; pi < plan.values.size(); ++pi) {
    const ExperimentPlan p = plan_at(plan, plan.values[pi]);
    std::vector<int> exact(static_cast<std::size_t>(p.trials), 0), inexact(static_cast<std::size_t>(p.trials), 0);
    std::exception_ptr error;
#ifdef NFAD_HAVE_OPENMP
#pragma omp parallel for schedule(dynamic, 1)
#endif
    for (int t = 0; t < p.trials; ++t) {
      try {
        const TrialProblem tp = make_trial_problem(p, pi, static_cast<std::uint64_t>(t));
        SolverOptions opts = p.solver;
        opts.seed = trial_seeds(p.seed, pi, static_cast<std::uint64_t>(t)).solver;
        opts.kind = StepKind::exact;
        exact[static_cast<std::size_t>(t)] = solve_problem(tp.solve_model, tp.signal.y, opts, p.backend).converged();
        opts.kind = StepKind::inexact;
        inexact[static_cast<std::size_t>(t)] =
            solve_problem(tp.solve_model, tp.signal.y, opts, p.backend).converged();
      } catch (...) {
#ifdef NFAD_HAVE_OPENMP
#pragma omp critical
#endif
        if (!error) error = std::current_exception();
      }
    }
    if (error) std::rethrow_exception(error);
    ConvergenceRow row;
    row.sweep_value = plan.values[pi];
    row.instances = p.trials;
    for (int t = 0; t < p.trials; ++t) {
      row.exact_converged += exact[static_cast<std::size_t>(t)];
      row.inexact_converged += inexact[static_cast<std::size_t>(t)];
    }
    rows.push_back(row);
  }
  return rows;
}

// ---------------------------------------------------------------------------

namespace {

void row(std::ostream& os, const ExperimentPlan& plan, double value, int bits, const std::string& metric, double v) {
  os << plan.sweep_variable << ',' << value << ',' << to_string(plan.channel_case) << ',' << to_string(plan.model)
     << ',' << bits << ',' << metric << ',' << v << '\n';
}

}  // namespace

void write_detection_csv(std::ostream& os, const ExperimentPlan& plan, const std::vector<DetectionReport>& reports,
                         bool header) {
  const auto old = os.precision(17);
  if (header) os << "sweep,value,channel_case,model,J,metric,metric_value\n";
  for (const auto& r : reports) {
    const int bits = plan_at(plan, r.sweep_value).bits;
    row(os, plan, r.sweep_value, bits, "error_probability", r.error_probability);
    row(os, plan, r.sweep_value, bits, "crossing_threshold", r.crossing_threshold);
    row(os, plan, r.sweep_value, bits, "crossing_found", r.crossing_found ? 1.0 : 0.0);
    row(os, plan, r.sweep_value, bits, "trials", r.trials);
    row(os, plan, r.sweep_value, bits, "diverged_rate", r.trials ? static_cast<double>(r.diverged) / r.trials : 0.0);
    row(os, plan, r.sweep_value, bits, "mean_sweeps", r.mean_sweeps);
    row(os, plan, r.sweep_value, bits, "symbol_error_rate", r.symbol_error_rate);
    row(os, plan, r.sweep_value, bits, "max_combination_violation", r.max_violation);
  }
  os.precision(old);
}

void write_curves_csv(std::ostream& os, const std::vector<DetectionReport>& reports) {
  const auto old = os.precision(17);
  os << "value,threshold,pm,pf\n";
  for (const auto& r : reports)
    for (std::size_t k = 0; k < r.thresholds.size(); ++k)
      os << r.sweep_value << ',' << r.thresholds[k] << ',' << r.pm[k] << ',' << r.pf[k] << '\n';
  os.precision(old);
}

void write_convergence_csv(std::ostream& os, const ExperimentPlan& plan, const std::vector<ConvergenceRow>& rows) {
  const auto old = os.precision(17);
  os << "sweep,value,instances,exact_converged_fraction,inexact_converged_fraction\n";
  for (const auto& r : rows)
    os << plan.sweep_variable << ',' << r.sweep_value << ',' << r.instances << ','
       << static_cast<double>(r.exact_converged) / r.instances << ','
       << static_cast<double>(r.inexact_converged) / r.instances << '\n';
  os.precision(old);
}

void write_trace_csv(std::ostream& os, const SolveResult& result) {
  const auto old = os.precision(17);
  os << "sweep,objective,v_norm,elapsed_s\n";
  for (const auto& t : result.trace) os << t.sweep << ',' << t.objective << ',' << t.v_norm << ',' << t.elapsed_s << '\n';
  os.precision(old);
}

}  // namespace nfad

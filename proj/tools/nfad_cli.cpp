// SPDX-License-Identifier: Apache-2.0
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "nfad/analysis.hpp"
#include "nfad/harness.hpp"
#include "nfad/lowrank.hpp"
#include "nfad/plan_io.hpp"

using namespace nfad;

namespace {

struct Common {
  std::string plan_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::string out;
};

void add_common(CLI::App* cmd, Common& c, bool plan_required = true) {
  auto* opt = cmd->add_option("--plan", c.plan_path, "experiment plan (JSON)")->check(CLI::ExistingFile);
  if (plan_required) opt->required();
  cmd->add_option("--seed", c.seed, "override the plan seed");
  cmd->add_option("--trials", c.trials, "override trials per sweep point")->check(CLI::PositiveNumber);
  cmd->add_option("--out", c.out, "output CSV (default: stdout)");
}

ExperimentPlan resolve(const Common& c) {
  ExperimentPlan p = c.plan_path.empty() ? ExperimentPlan{} : load_plan(c.plan_path);
  if (c.seed) p.seed = *c.seed;
  if (c.trials) p.trials = *c.trials;
  p.validate();
  return p;
}

// Writes to the file named by `path`, or stdout when empty.
class Sink {
 public:
  explicit Sink(const std::string& path) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw ConfigError("cannot write " + path);
    }
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

void run_simulate(const Common& c, bool baseline, const std::string& curves_path) {
  const ExperimentPlan plan = resolve(c);
  Sink out(c.out);
  const auto reports = run_experiment(plan);
  write_detection_csv(out.stream(), plan, reports);
  if (baseline) {
    ExperimentPlan mm = plan;
    mm.model = ModelKind::mismatched_mle;
    write_detection_csv(out.stream(), mm, run_experiment(mm), false);
  }
  if (!curves_path.empty()) {
    Sink curves(curves_path);
    write_curves_csv(curves.stream(), reports);
  }
}

void run_convergence(const Common& c) {
  const ExperimentPlan plan = resolve(c);
  Sink out(c.out);
  write_convergence_csv(out.stream(), plan, convergence_table(plan));
}

void run_analyze(const Common& c, int scan_trials) {
  const ExperimentPlan plan = resolve(c);
  Sink sink(c.out);
  std::ostream& os = sink.stream();
  os.precision(17);
  os << "report,value,trial,metric,metric_value\n";
  for (std::size_t pi = 0; pi < plan.values.size(); ++pi) {
    const ExperimentPlan p = plan_at(plan, plan.values[pi]);
    const double v = plan.values[pi];
    for (int t = 0; t < p.trials; ++t) {
      const TrialProblem tp = make_trial_problem(p, pi, static_cast<std::uint64_t>(t));
      const DimensionReport d = statistical_dimension(tp.true_model);
      auto emit = [&](const char* report, const char* metric, double x) {
        os << report << ',' << v << ',' << t << ',' << metric << ',' << x << '\n';
      };
      emit("dimension", "d_one", static_cast<double>(d.d_one));
      emit("dimension", "d_two", static_cast<double>(d.d_two));
      emit("dimension", "bound_one", static_cast<double>(d.bound_one));
      emit("dimension", "bound_two", static_cast<double>(d.bound_two));
      emit("dimension", "rank_sum", static_cast<double>(d.rank_sum));
      double min_margin = 1.0, mean_corr = 0.0, mean_uncorr = 0.0;
      int pairs = 0;
      const std::size_t n = static_cast<std::size_t>(p.scenario.devices);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = i + 1; k < n; ++k) {
          const SimilarityPair s = cosine_similarity_pair(tp.true_model, i * (1u << p.bits), k * (1u << p.bits));
          min_margin = std::min(min_margin, s.uncorr_value - s.corr_value);
          mean_corr += s.corr_value;
          mean_uncorr += s.uncorr_value;
          ++pairs;
        }
      if (pairs > 0) {
        emit("similarity", "mean_corr", mean_corr / pairs);
        emit("similarity", "mean_uncorr", mean_uncorr / pairs);
        emit("similarity", "min_margin", min_margin);
      }
    }
  }
  if (scan_trials > 0) {
    const ScanReport s = identifiability_scan(scan_trials, plan.seed);
    auto emit = [&](const char* metric, int x) { os << "identifiability_scan,0,0," << metric << ',' << x << '\n'; };
    emit("trials", s.trials);
    emit("violations", s.violations);
    emit("indeterminate", s.indeterminate);
    emit("both_identifiable", s.both_identifiable);
    emit("correlated_only", s.correlated_only);
    emit("neither", s.neither);
  }
}

void run_trace(const Common& c, std::size_t point, std::uint64_t trial, const std::string& solver,
               const std::string& backend) {
  ExperimentPlan plan = resolve(c);
  if (point >= plan.values.size()) throw ConfigError("point index outside the sweep");
  if (!solver.empty()) plan.solver.kind = solver == "exact" ? StepKind::exact : StepKind::inexact;
  const ExperimentPlan p = plan_at(plan, plan.values[point]);
  const TrialProblem tp = make_trial_problem(p, point, trial);
  SolverOptions opts = p.solver;
  opts.seed = trial_seeds(p.seed, point, trial).solver;
  std::unique_ptr<CovarianceBackend> state;
  if (backend == "block") state = std::make_unique<BlockState>(tp.solve_model, build_basis(tp.solve_model), tp.signal.y);
  else state = std::make_unique<FullState>(tp.solve_model, tp.signal.y);
  const SolveResult res = solve(*state, opts);
  Sink out(c.out);
  write_trace_csv(out.stream(), res);
  std::cerr << to_string(res.termination) << " after " << res.sweeps << " sweeps";
  if (!res.message.empty()) std::cerr << ": " << res.message;
  std::cerr << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Activity detection experiments"};
  app.require_subcommand(1);

  Common sim_c, conv_c, an_c, tr_c;
  bool baseline = false;
  std::string curves;
  auto* sim = app.add_subcommand("simulate", "detection error probability per sweep point");
  add_common(sim, sim_c);
  sim->add_flag("--baseline", baseline, "also run the mismatched-model baseline");
  sim->add_option("--curves", curves, "write PM/PF curves to this CSV");

  auto* conv = app.add_subcommand("convergence", "exact versus inexact convergence per sweep point");
  add_common(conv, conv_c);

  int scan_trials = 0;
  auto* an = app.add_subcommand("analyze", "statistical dimensions, similarities and identifiability scan");
  add_common(an, an_c);
  an->add_option("--scan", scan_trials, "random small instances for the identifiability scan")
      ->check(CLI::NonNegativeNumber);

  std::size_t point = 0;
  std::uint64_t trial = 0;
  std::string solver, backend = "full";
  auto* tr = app.add_subcommand("trace", "objective trajectory of one instance");
  add_common(tr, tr_c);
  tr->add_option("--point", point, "index into the sweep values");
  tr->add_option("--trial", trial, "trial index");
  tr->add_option("--solver", solver, "exact or inexact (default: plan)")->check(CLI::IsMember({"exact", "inexact"}));
  tr->add_option("--backend", backend, "full or block")->check(CLI::IsMember({"full", "block"}));

  std::string plan_out;
  auto* pl = app.add_subcommand("plan", "print the default plan");
  pl->add_option("--out", plan_out, "output file (default: stdout)");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*sim) run_simulate(sim_c, baseline, curves);
    else if (*conv) run_convergence(conv_c);
    else if (*an) run_analyze(an_c, scan_trials);
    else if (*tr) run_trace(tr_c, point, trial, solver, backend);
    else if (*pl) {
      Sink out(plan_out);
      out.stream() << plan_to_json_text(ExperimentPlan{}) << '\n';
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "failed: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

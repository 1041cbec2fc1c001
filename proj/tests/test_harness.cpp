// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <random>
#include <sstream>

#include "nfad/harness.hpp"
#include "nfad/plan_io.hpp"

using namespace nfad;

namespace {

ExperimentPlan tiny_plan() {
  ExperimentPlan p;
  p.sweep_variable = "L";
  p.values = {6};
  p.scenario.geometry.antenna_count = 4;
  p.scenario.devices = 10;
  p.scenario.scatterers_per_device = 2;
  p.active = 2;
  p.trials = 5;
  p.seed = 3;
  return p;
}

double interpolate(const std::vector<double>& v, const std::vector<double>& grid, double t) {
  if (t <= grid.front()) return v.front();
  if (t >= grid.back()) return v.back();
  const auto it = std::upper_bound(grid.begin(), grid.end(), t);
  const std::size_t k = static_cast<std::size_t>(it - grid.begin()) - 1;
  const double w = (t - grid[k]) / (grid[k + 1] - grid[k]);
  return v[k] + w * (v[k + 1] - v[k]);
}

}  // namespace

TEST_CASE("threshold grid") {
  const auto g = threshold_grid();
  REQUIRE(g.size() == 512);
  CHECK(g.front() == doctest::Approx(0.5 / 512));
  CHECK(g.back() == doctest::Approx(1.0 - 0.5 / 512));
  CHECK(std::is_sorted(g.begin(), g.end()));
}

TEST_CASE("error probability on closed-form curves") {
  const auto g = threshold_grid(101);
  std::vector<double> flat(g.size(), 0.1);
  const Crossing c0 = error_probability(flat, flat, g);
  CHECK(c0.found);
  CHECK(c0.value == doctest::Approx(0.1));

  std::vector<double> pm(g.size()), pf(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    pm[k] = g[k];
    pf[k] = 1.0 - g[k];
  }
  const Crossing c1 = error_probability(pm, pf, g);
  CHECK(c1.found);
  CHECK(c1.value == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(c1.threshold == doctest::Approx(0.5).epsilon(1e-12));

  std::vector<double> low(g.size(), 0.0), high(g.size(), 0.3);
  const Crossing c2 = error_probability(low, high, g);
  CHECK_FALSE(c2.found);
  CHECK(c2.threshold == g.back());
  CHECK_THROWS_AS(error_probability(low, high, threshold_grid(7)), ConfigError);
}

TEST_CASE("two-proportion test") {
  const double z = two_proportion_z(0.2, 100, 0.1, 100);
  CHECK(z == doctest::Approx(0.1 / std::sqrt(0.15 * 0.85 * 0.02)).epsilon(1e-12));
  CHECK(significantly_greater(0.2, 100, 0.1, 100));
  CHECK_FALSE(significantly_greater(0.1, 100, 0.2, 100));
  CHECK_FALSE(significantly_greater(0.12, 100, 0.1, 100));
  CHECK(two_proportion_z(0.0, 10, 0.0, 10) == 0.0);
}

TEST_CASE("hand counts on a five-trial fixture") {
  const ExperimentPlan plan = plan_at(tiny_plan(), 6);
  const auto grid = threshold_grid(64);
  std::vector<TrialOutcome> outcomes;
  long missed_at = 0, fa_at = 0, actives = 0, inactives = 0;
  const std::size_t probe = 20;  // threshold index checked by hand
  for (std::uint64_t t = 0; t < 5; ++t) {
    const TrialOutcome o = run_trial(plan, 0, t, grid);
    REQUIRE_FALSE(o.diverged);
    const TrialProblem tp = make_trial_problem(plan, 0, t);
    CHECK(o.actives == 2);
    CHECK(o.inactives == 8);
    for (int n = 0; n < 10; ++n) {
      const bool act = std::find(tp.truth.active.begin(), tp.truth.active.end(), n) != tp.truth.active.end();
      const bool said = o.a_hat(n) > grid[probe];
      missed_at += act && !said;
      fa_at += !act && said;
      actives += act;
      inactives += !act;
    }
    outcomes.push_back(o);
  }
  const DetectionReport rep = aggregate(outcomes, grid);
  CHECK(rep.used_trials == 5);
  CHECK(rep.decisions == 50);
  CHECK(rep.pm[probe] == doctest::Approx(static_cast<double>(missed_at) / actives));
  CHECK(rep.pf[probe] == doctest::Approx(static_cast<double>(fa_at) / inactives));
  for (std::size_t k = 1; k < grid.size(); ++k) {
    CHECK(rep.pm[k] >= rep.pm[k - 1]);
    CHECK(rep.pf[k] <= rep.pf[k - 1]);
  }

  // order independence and divergence exclusion
  std::vector<TrialOutcome> shuffled = outcomes;
  std::reverse(shuffled.begin(), shuffled.end());
  std::swap(shuffled[0], shuffled[2]);
  const DetectionReport again = aggregate(shuffled, grid);
  CHECK(again.pm == rep.pm);
  CHECK(again.pf == rep.pf);
  CHECK(again.error_probability == rep.error_probability);
  TrialOutcome bad;
  bad.diverged = true;
  shuffled.push_back(bad);
  const DetectionReport with_bad = aggregate(shuffled, grid);
  CHECK(with_bad.diverged == 1);
  CHECK(with_bad.trials == 6);
  CHECK(with_bad.pm == rep.pm);
}

TEST_CASE("crossing agrees with a dense threshold search") {
  ExperimentPlan p = tiny_plan();
  p.trials = 12;
  p.values = {8};
  const auto reports = run_experiment(p);
  const DetectionReport& r = reports.front();
  REQUIRE(r.crossing_found);
  double best_t = 0.0, best_gap = 1e300;
  for (double t = 0.0; t <= 1.0; t += 1e-4) {
    const double gap = std::abs(interpolate(r.pm, r.thresholds, t) - interpolate(r.pf, r.thresholds, t));
    if (gap < best_gap) {
      best_gap = gap;
      best_t = t;
    }
  }
  CHECK(std::abs(interpolate(r.pm, r.thresholds, r.crossing_threshold) - r.error_probability) < 1e-12);
  CHECK(std::abs(interpolate(r.pf, r.thresholds, r.crossing_threshold) - r.error_probability) < 1e-9);
  CHECK(std::abs(interpolate(r.pm, r.thresholds, best_t) - r.error_probability) < 1e-2);
}

TEST_CASE("noise-only plan") {
  ExperimentPlan p = tiny_plan();
  p.sweep_variable = "K";
  p.values = {0};
  p.trials = 4;
  const DetectionReport r = run_experiment(p).front();
  for (double v : r.pm) CHECK(v == 0.0);
  CHECK(r.pf.back() <= r.pf.front());
  CHECK(r.pf.back() == 0.0);
}

TEST_CASE("easy regime detects perfectly") {
  ExperimentPlan p = tiny_plan();
  p.values = {24};
  p.active = 1;
  p.trials = 6;
  p.scenario.noise_power_mw *= 1e-4;
  const DetectionReport r = run_experiment(p).front();
  CHECK(r.error_probability < 1e-9);
}

TEST_CASE("mismatched baseline on far-field devices") {
  ExperimentPlan p = tiny_plan();
  p.channel_case = ChannelCase::uncorrelated;
  p.trials = 3;
  const DetectionReport a = run_experiment(p).front();
  const DetectionReport b = baseline_mismatched(p).front();
  CHECK(a.pm == b.pm);
  CHECK(a.pf == b.pf);
  CHECK(a.error_probability == b.error_probability);

  const TrialProblem tp = make_trial_problem(plan_at(tiny_plan(), 6), 0, 0);
  const ActivityModel mm = mismatched_model(tp.true_model);
  for (std::size_t c = 0; c < mm.size(); ++c) {
    const CMat r = tp.true_model.coords[c].channel->correlation();
    CHECK(mm.coords[c].channel->large_scale_gain == doctest::Approx(r.diagonal().real().mean()).epsilon(1e-12));
  }
}

TEST_CASE("convergence table on tiny instances") {
  ExperimentPlan p = tiny_plan();
  p.sweep_variable = "scatterers";
  p.values = {1, 2};
  p.trials = 4;
  p.solver.max_sweeps = 200;
  const auto rows = convergence_table(p);
  REQUIRE(rows.size() == 2);
  for (const auto& r : rows) {
    CHECK(r.instances == 4);
    CHECK(r.exact_converged == 4);
    CHECK(r.inexact_converged == 4);
  }
  std::ostringstream os;
  write_convergence_csv(os, p, rows);
  const std::string text = os.str();
  CHECK(text.rfind("sweep,value,instances,exact_converged_fraction,inexact_converged_fraction\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 3);
}

TEST_CASE("reports are deterministic and written as long CSV") {
  ExperimentPlan p = tiny_plan();
  p.values = {4, 6};
  p.trials = 3;
  const auto r1 = run_experiment(p);
  const auto r2 = run_experiment(p);
  std::ostringstream a, b;
  write_detection_csv(a, p, r1);
  write_detection_csv(b, p, r2);
  const std::string text = a.str();
  CHECK(text == b.str());
  CHECK(text.rfind("sweep,value,channel_case,model,J,metric,metric_value\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 1 + 2 * 8);
  CHECK(text.find("L,4,correlated_rayleigh,true_mle,0,error_probability,") != std::string::npos);

  std::ostringstream curves;
  write_curves_csv(curves, r1);
  const std::string curve_text = curves.str();
  CHECK(std::count(curve_text.begin(), curve_text.end(), '\n') == 1 + 2 * 512);

  const TrialProblem tp = make_trial_problem(plan_at(p, 4), 0, 0);
  FullState st(tp.true_model, tp.signal.y);
  const SolveResult res = solve(st, p.solver);
  std::ostringstream trace;
  write_trace_csv(trace, res);
  const std::string trace_text = trace.str();
  CHECK(trace_text.rfind("sweep,objective,v_norm,elapsed_s\n", 0) == 0);
  CHECK(std::count(trace_text.begin(), trace_text.end(), '\n') == 1 + static_cast<long>(res.trace.size()));
}

TEST_CASE("plan sweeps") {
  ExperimentPlan p = tiny_plan();
  p.sweep_variable = "N";
  p.scenario.devices = 50;
  p.active = 5;
  p.keep_active_fraction = true;
  const ExperimentPlan q = plan_at(p, 30);
  CHECK(q.scenario.devices == 30);
  CHECK(q.active == 3);
  p.sweep_variable = "J";
  CHECK(plan_at(p, 2).bits == 2);
  CHECK(plan_at(tiny_plan(), 9).seq_len == 9);

  ExperimentPlan bad = tiny_plan();
  bad.values.clear();
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = tiny_plan();
  bad.trials = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = tiny_plan();
  bad.sweep_variable = "Q";
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = tiny_plan();
  bad.sweep_variable = "K";
  bad.values = {11};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("plan files round trip") {
  ExperimentPlan p = tiny_plan();
  p.sweep_variable = "scatterers";
  p.values = {1, 4, 8};
  p.channel_case = ChannelCase::correlated_rician;
  p.model = ModelKind::mismatched_mle;
  p.solver.kind = StepKind::exact;
  p.solver.roots = RootFinder::companion;
  p.solver.max_sweeps = 77;
  p.solver.exact_rank_limit = 6;
  p.scenario.policy = NearFieldPolicy::first_n_corr;
  p.scenario.n_corr = 3;
  p.fixed_population = true;
  const ExperimentPlan q = plan_from_json_text(plan_to_json_text(p));
  CHECK(plan_to_json_text(q) == plan_to_json_text(p));
  CHECK(q.values == p.values);
  CHECK(q.solver.roots == RootFinder::companion);
  CHECK(q.solver.exact_rank_limit == 6);
  CHECK(q.scenario.n_corr == 3);
  CHECK(q.channel_case == ChannelCase::correlated_rician);

  CHECK_THROWS_AS(plan_from_json_text("{"), ConfigError);
  CHECK_THROWS_AS(plan_from_json_text(R"({"sweep": "L", "values": [6], "seq_len": "ten"})"), ConfigError);
  CHECK_THROWS_AS(plan_from_json_text(R"({"channel_case": "sideways"})"), ConfigError);
  CHECK_THROWS_AS(plan_from_json_text(R"({"solver": {"kind": "magic"}})"), ConfigError);
  CHECK_THROWS_AS(plan_from_json_text(R"({"sweep": "L", "bogus": 1})"), ConfigError);
  CHECK_THROWS_AS(plan_from_json_text(R"({"solver": {"mu": 1, "lambda": 2}})"), ConfigError);
  CHECK_THROWS_AS(plan_from_json_text("[1, 2]"), ConfigError);
  CHECK_THROWS_AS(load_plan("/nonexistent/plan.json"), ConfigError);
  const ExperimentPlan d = plan_from_json_text("{}");
  CHECK(d.sweep_variable == "L");
  CHECK(d.scenario.power_mw == doctest::Approx(dbm_to_mw(-105.1)));
}

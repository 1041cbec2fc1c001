// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "nfad/cd_solvers.hpp"
#include "nfad/data_detection.hpp"
#include "support.hpp"

using namespace nfad;

namespace {

DataDetectionConfig with_bits(int j, double theta = 0.5) {
  DataDetectionConfig c;
  c.bits = j;
  c.threshold = theta;
  return c;
}

DevicePopulation small_population(std::uint64_t seed, int devices = 3, int antennas = 2) {
  std::mt19937_64 rng(seed);
  testing::PopulationSpec spec;
  spec.devices = devices;
  spec.antennas = antennas;
  spec.max_rank = 2;
  spec.noise = 0.6;
  return testing::random_population(rng, spec);
}

}  // namespace

TEST_CASE("one sequence per device is the activity-only model") {
  const DevicePopulation pop = small_population(1);
  const SignatureSet seqs = generate_sequences(3, 4, 1, 9);
  const ActivityModel plain = make_activity_model(pop, seqs);
  const ActivityModel expanded = expand_problem(pop, seqs, with_bits(0));
  REQUIRE(expanded.size() == plain.size());
  CHECK(expanded.per_device == 1);
  for (std::size_t c = 0; c < plain.size(); ++c) {
    CHECK(expanded.coords[c].sequence == plain.coords[c].sequence);
    CHECK(expanded.coords[c].channel->corr_factor == plain.coords[c].channel->corr_factor);
    CHECK(expanded.coords[c].channel->los_mean == plain.coords[c].channel->los_mean);
  }
}

TEST_CASE("two devices with two sequences each") {
  const DevicePopulation pop = small_population(2, 2, 2);
  const SignatureSet seqs = generate_sequences(2, 3, 2, 4);
  const ActivityModel model = expand_problem(pop, seqs, with_bits(1));
  REQUIRE(model.size() == 4);
  CHECK(model.coords[0].channel.get() == model.coords[1].channel.get());
  CHECK(model.coords[2].channel.get() == model.coords[3].channel.get());
  CHECK(model.coords[0].channel.get() != model.coords[2].channel.get());
  CHECK(model.coords[3].device == 1);
  CHECK(model.coords[3].symbol == 1);

  // sigma^2 I + sum_n sum_q a_{n,q} R_n (x) s_{n,q} s_{n,q}^H, entry by entry
  std::mt19937_64 rng(5);
  const RVec a = testing::random_box_point(rng, 4);
  CMat direct = pop.noise_power * CMat::Identity(6, 6);
  for (int n = 0; n < 2; ++n) {
    const CMat r = pop.channels[static_cast<std::size_t>(n)].correlation();
    for (int q = 0; q < 2; ++q) {
      const CVec& s = seqs.at(n, q);
      for (Index i = 0; i < 6; ++i)
        for (Index j = 0; j < 6; ++j) direct(i, j) += a(2 * n + q) * r(i / 3, j / 3) * s(i % 3) * std::conj(s(j % 3));
    }
  }
  CHECK(testing::rel_fro(covariance_matrix(model, a), direct) < 1e-14);
  CHECK_THROWS_AS(expand_problem(pop, seqs, with_bits(2)), ConfigError);
}

TEST_CASE("decoding rule") {
  RVec one_hot = RVec::Zero(8);
  one_hot(5) = 1.0;
  const auto msgs = decode(one_hot, with_bits(2));
  REQUIRE(msgs.size() == 2);
  CHECK_FALSE(msgs[0].active);
  CHECK_FALSE(msgs[0].symbol.has_value());
  CHECK(msgs[1].active);
  CHECK(msgs[1].symbol == 1);

  for (const auto& m : decode(RVec::Zero(6), with_bits(1))) CHECK_FALSE(m.active);

  RVec soft(2);
  soft << 0.6, 0.4;
  const auto one = decode(soft, with_bits(1));
  CHECK(one[0].active);
  CHECK(one[0].symbol == 0);

  soft << 0.7, 0.7;
  CHECK(decode(soft, with_bits(1))[0].symbol == 0);
  soft << 0.5, 0.2;
  CHECK_FALSE(decode(soft, with_bits(1))[0].active);
  CHECK_THROWS_AS(decode(RVec::Zero(3), with_bits(1)), ConfigError);
  CHECK_THROWS_AS(with_bits(1, 1.5).validate(), ConfigError);
}

TEST_CASE("error metrics") {
  ActivityTruth truth;
  truth.active = {1, 3};
  truth.symbol = {2, 0};
  RVec perfect = RVec::Zero(16);
  perfect(1 * 4 + 2) = 0.9;
  perfect(3 * 4 + 0) = 0.8;
  DataErrorReport rep = data_error_metrics(decode(perfect, with_bits(2)), truth);
  CHECK(rep.missed_detection == 0.0);
  CHECK(rep.false_alarm == 0.0);
  CHECK(rep.symbol_error == 0.0);
  CHECK(rep.detected_actives == 2);

  RVec wrong = perfect;
  wrong(1 * 4 + 2) = 0.0;
  wrong(1 * 4 + 1) = 0.9;
  rep = data_error_metrics(decode(wrong, with_bits(2)), truth);
  CHECK(rep.missed_detection == 0.0);
  CHECK(rep.symbol_errors == 1);
  CHECK(rep.symbol_error == doctest::Approx(0.5));

  // hand tallies against random decisions
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep_i = 0; rep_i < 200; ++rep_i) {
    const int n = 6, q = 2;
    const ActivityTruth t = sample_activity(n, 1 + rep_i % 4, q, rng());
    RVec a(n * q);
    for (Index i = 0; i < a.size(); ++i) a(i) = u(rng);
    const auto dec = decode(a, with_bits(1));
    int missed = 0, fa = 0, hits = 0, sym = 0;
    for (int d = 0; d < n; ++d) {
      const auto it = std::find(t.active.begin(), t.active.end(), d);
      const bool act = it != t.active.end();
      const double best = std::max(a(2 * d), a(2 * d + 1));
      const bool said = best > 0.5;
      missed += act && !said;
      fa += !act && said;
      if (act && said) {
        ++hits;
        const int sent = t.symbol[static_cast<std::size_t>(it - t.active.begin())];
        const int got = a(2 * d + 1) > a(2 * d) ? 1 : 0;
        sym += sent != got;
      }
    }
    const DataErrorReport r = data_error_metrics(dec, t);
    const int k = static_cast<int>(t.active.size());
    CHECK(r.missed_detection == doctest::Approx(static_cast<double>(missed) / k));
    CHECK(r.false_alarm == doctest::Approx(static_cast<double>(fa) / (n - k)));
    CHECK(r.detected_actives == hits);
    CHECK(r.symbol_errors == sym);
  }
}

TEST_CASE("combination violation") {
  RVec a(6);
  a << 0.7, 0.6, 0.2, 0.1, 1.0, 1.0;
  const RVec v = combination_violation(a, 2);
  CHECK(v(0) == doctest::Approx(0.3));
  CHECK(v(1) == 0.0);
  CHECK(v(2) == doctest::Approx(1.0));
  CHECK_THROWS_AS(combination_violation(a, 4), ConfigError);
}

TEST_CASE("J = 0 decoding equals the activity-only pipeline") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const DevicePopulation pop = small_population(20 + seed, 8, 3);
    const SignatureSet seqs = generate_sequences(8, 6, 1, seed);
    const ActivityModel plain = make_activity_model(pop, seqs);
    const ActivityModel expanded = expand_problem(pop, seqs, with_bits(0));
    const ActivityTruth truth = sample_activity(8, 3, 1, seed + 50);
    const CVec y = synthesize_signal(plain, truth, seed + 60).y;
    CHECK(synthesize_signal(expanded, truth, seed + 60).y == y);
    SolverOptions o;
    o.seed = seed;
    FullState s1(plain, y), s2(expanded, y);
    const SolveResult r1 = solve(s1, o), r2 = solve(s2, o);
    CHECK(r1.a == r2.a);
    const auto dec = decode(r2.a, with_bits(0));
    for (int d = 0; d < 8; ++d) {
      CHECK(dec[static_cast<std::size_t>(d)].active == (r1.a(d) > 0.5));
      if (dec[static_cast<std::size_t>(d)].active) CHECK(dec[static_cast<std::size_t>(d)].symbol == 0);
    }
  }
}

TEST_CASE("relaxed solution stays in the box") {
  const DevicePopulation pop = small_population(40, 6, 3);
  const SignatureSet seqs = generate_sequences(6, 5, 4, 41);
  const ActivityModel model = expand_problem(pop, seqs, with_bits(2));
  const ActivityTruth truth = sample_activity(6, 2, 4, 42);
  const CVec y = synthesize_signal(model, truth, 43).y;
  FullState st(model, y);
  const SolveResult r = solve(st, SolverOptions{});
  CHECK(r.a.size() == 24);
  CHECK(r.a.minCoeff() >= 0.0);
  CHECK(r.a.maxCoeff() <= 1.0);
  const RVec v = combination_violation(r.a, 4);
  CHECK(v.minCoeff() >= 0.0);
}

// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include <random>

#include "nfad/harness.hpp"
#include "nfad/kernels.hpp"
#include "nfad/lowrank.hpp"

using namespace nfad;

namespace {

CMat random_hermitian(Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  CMat a(n, n);
  for (Index i = 0; i < a.size(); ++i) a.data()[i] = cplx(g(rng), g(rng));
  return a * a.adjoint() + static_cast<double>(n) * CMat::Identity(n, n);
}

CMat random_cmat(Index r, Index c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  CMat a(r, c);
  for (Index i = 0; i < a.size(); ++i) a.data()[i] = cplx(g(rng), g(rng));
  return a;
}

// args: L, M
template <bool Parallel>
void apply_to_sequence(benchmark::State& state) {
  const Index l = state.range(0), m = state.range(1);
  const CMat s = random_hermitian(l * m, 1);
  const CVec seq = random_cmat(l, 1, 2).col(0);
  CMat out;
  for (auto _ : state) {
    if constexpr (Parallel) kernels::apply_to_sequence(s, seq, out);
    else kernels::apply_to_sequence_serial(s, seq, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.counters["threads"] = Parallel ? kernels::thread_count() : 1;
}

// args: n, r
template <bool Parallel>
void hermitian_rank_update(benchmark::State& state) {
  const Index n = state.range(0), r = state.range(1);
  const CMat base = random_hermitian(n, 3);
  const CMat w = random_cmat(n, r, 4) * 1e-3;
  const CMat c = random_hermitian(r, 5);
  CMat s = base;
  for (auto _ : state) {
    if constexpr (Parallel) kernels::hermitian_rank_update(s, w, c);
    else kernels::hermitian_rank_update_serial(s, w, c);
    benchmark::DoNotOptimize(s.data());
  }
  state.counters["threads"] = Parallel ? kernels::thread_count() : 1;
}

struct UpdateFixture {
  TrialProblem tp;
  LowRankBasis basis;

  UpdateFixture() {
    ExperimentPlan p;
    p.scenario.geometry.antenna_count = 64;
    p.scenario.devices = 100;
    p.scenario.scatterers_per_device = 2;
    p.scenario.policy = NearFieldPolicy::first_n_corr;
    p.scenario.n_corr = 4;
    p.active = 10;
    p.seq_len = 8;
    tp = make_trial_problem(plan_at(p, 8), 0, 0);
    basis = build_basis(tp.solve_model);
  }
};

const UpdateFixture& fixture() {
  static const UpdateFixture f;
  return f;
}

// One prepare + commit at M=64, L=8, r' = 8, alternating +d / -d.
template <class Backend>
void coordinate_update(benchmark::State& state) {
  const UpdateFixture& f = fixture();
  const RVec a0 = RVec::Constant(static_cast<Index>(f.tp.solve_model.size()), 0.5);
  std::unique_ptr<CovarianceBackend> st;
  if constexpr (std::is_same_v<Backend, BlockState>) st = std::make_unique<BlockState>(f.tp.solve_model, f.basis, f.tp.signal.y, a0);
  else st = std::make_unique<FullState>(f.tp.solve_model, f.tp.signal.y, a0);
  const auto order = random_permutation(st->size(), 9);
  std::size_t i = 0;
  double sign = 1.0;
  for (auto _ : state) {
    st->prepare(order[i]);
    st->commit(0.1 * sign);
    if (++i == order.size()) {
      i = 0;
      sign = -sign;
    }
  }
  state.counters["r_prime"] = f.basis.r_prime;
}

}  // namespace

BENCHMARK(apply_to_sequence<false>)->Args({8, 16})->Args({8, 64})->Args({20, 64});
BENCHMARK(apply_to_sequence<true>)->Args({8, 16})->Args({8, 64})->Args({20, 64});
BENCHMARK(hermitian_rank_update<false>)->Args({128, 4})->Args({512, 8})->Args({1280, 8});
BENCHMARK(hermitian_rank_update<true>)->Args({128, 4})->Args({512, 8})->Args({1280, 8});
BENCHMARK(coordinate_update<FullState>)->Unit(benchmark::kMicrosecond);
BENCHMARK(coordinate_update<BlockState>)->Unit(benchmark::kMicrosecond);
BENCHMARK_MAIN();

// SPDX-License-Identifier: Apache-2.0
#include "nfad/cd_solvers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

namespace nfad {

SubproblemKernel make_kernel(const StepInputs& in) {
  SubproblemKernel k;
  k.c1 = in.c1;
  k.c2 = in.c2;
  const Index r = in.kernel.rows();
  if (r == 0) {
    k.eigvals.resize(0);
    k.xi_resid.resize(0);
    k.xi_mean.resize(0);
    return k;
  }
  Eigen::SelfAdjointEigenSolver<CMat> es(in.kernel);
  if (es.info() != Eigen::Success) throw DivergenceSignal("kernel eigendecomposition failed", in.coordinate);
  k.eigvals = es.eigenvalues().cwiseMax(0.0);
  k.xi_resid = es.eigenvectors().adjoint() * in.xi_resid;
  k.xi_mean = es.eigenvectors().adjoint() * in.xi_mean;
  return k;
}

RationalForm build_polynomials(const SubproblemKernel& k) {
  const Index r = k.eigvals.size();
  RationalForm rf;
  rf.den = {1.0};
  for (Index i = 0; i < r; ++i) rf.den = poly_mul(rf.den, {1.0, k.eigvals(i)});

  rf.num = poly_mul(rf.den, {0.0, -2.0 * k.c1, k.c2});
  for (Index i = 0; i < r; ++i) {
    Poly others{1.0};
    for (Index j = 0; j < r; ++j)
      if (j != i) others = poly_mul(others, {1.0, k.eigvals(j)});
    const double rr = std::norm(k.xi_resid(i));
    const double ru = (std::conj(k.xi_resid(i)) * k.xi_mean(i)).real();
    const double uu = std::norm(k.xi_mean(i));
    rf.num = poly_add(rf.num, poly_mul(others, {0.0, -rr, 2.0 * ru, -uu}));
  }
  return rf;
}

Poly stationarity_polynomial(const RationalForm& rf) {
  const Poly dden = poly_derivative(rf.den);
  const Poly dnum = poly_derivative(rf.num);
  return poly_sub(poly_add(poly_mul(rf.den, dden), poly_mul(rf.den, dnum)), poly_mul(dden, rf.num));
}

double rational_objective(const RationalForm& rf, double d) {
  const double den = poly_eval(rf.den, d);
  if (!(den > 1e-300)) return std::numeric_limits<double>::infinity();
  const double v = std::log(den) + poly_eval(rf.num, d) / den;
  return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
}

KernelValue kernel_objective(const SubproblemKernel& k, double d) {
  KernelValue out{-2.0 * k.c1 * d + k.c2 * d * d, -2.0 * k.c1 + 2.0 * k.c2 * d, 2.0 * k.c2};
  for (Index i = 0; i < k.eigvals.size(); ++i) {
    const double lam = k.eigvals(i);
    const double t = 1.0 + lam * d;
    if (!(t > 0.0)) return {std::numeric_limits<double>::infinity(), 0.0, 0.0};
    const double rr = std::norm(k.xi_resid(i));
    const double ru = (std::conj(k.xi_resid(i)) * k.xi_mean(i)).real();
    const double uu = std::norm(k.xi_mean(i));
    const double g = ((-uu * d + 2.0 * ru) * d - rr) * d;
    const double g1 = (-3.0 * uu * d + 4.0 * ru) * d - rr;
    const double g2 = -6.0 * uu * d + 4.0 * ru;
    const double q = lam / t;
    out.value += std::log(t) + g / t;
    out.slope += q + g1 / t - g * q / t;
    out.curvature += -q * q + g2 / t - 2.0 * g1 * q / t + 2.0 * g * q * q / t;
  }
  return out;
}

namespace {

double polish(const SubproblemKernel& k, double x, double lo, double hi) {
  for (int it = 0; it < 50; ++it) {
    const KernelValue kv = kernel_objective(k, x);
    if (!std::isfinite(kv.value) || kv.curvature == 0.0) break;
    const double next = std::clamp(x - kv.slope / kv.curvature, lo, hi);
    if (std::abs(next - x) <= 1e-15 * (1.0 + std::abs(x))) return next;
    x = next;
  }
  return x;
}

}  // namespace

StepResult exact_step(const StepInputs& in, RootFinder roots) {
  const SubproblemKernel k = make_kernel(in);
  const RationalForm rf = build_polynomials(k);
  const double lo = in.lower(), hi = in.upper();
  const bool guarded = roots == RootFinder::guarded;

  std::vector<double> cand{lo, hi};
  Poly stat = stationarity_polynomial(rf);
  if (guarded) {
    stat = trim_leading(stat, std::max({1.0, std::abs(lo), std::abs(hi)}));
    for (const cplx& z : complex_roots(stat)) cand.push_back(polish(k, std::clamp(z.real(), lo, hi), lo, hi));
  } else {
    for (double x : real_roots(stat, 1e-9, roots == RootFinder::balanced))
      if (x > lo && x < hi) cand.push_back(x);
  }

  StepResult best;
  best.kind = StepKind::exact;
  best.estimate = std::numeric_limits<double>::infinity();
  for (double d : cand) {
    const double v = guarded ? kernel_objective(k, d).value : rational_objective(rf, d);
    if (v < best.estimate) {
      best.estimate = v;
      best.d = d;
    }
  }
  if (!std::isfinite(best.estimate))
    throw DivergenceSignal("no usable candidate in the exact subproblem", in.coordinate);
  return best;
}

QuarticSurrogate make_surrogate(const StepInputs& in) {
  const CVec k_r = in.kernel * in.xi_resid;
  const CVec k_u = in.kernel * in.xi_mean;
  QuarticSurrogate q;
  q.c1 = in.kernel.trace().real() - 2.0 * in.c1 - in.xi_resid.squaredNorm();
  q.c2 = in.c2 + in.xi_resid.dot(k_r).real() + 2.0 * in.xi_resid.dot(in.xi_mean).real();
  q.c3 = -2.0 * in.xi_resid.dot(k_u).real() - in.xi_mean.squaredNorm();
  q.c4 = in.xi_mean.dot(k_u).real();
  return q;
}

StepResult inexact_step(const StepInputs& in, double mu) {
  if (mu < 0.0) throw ConfigError("mu must be nonnegative");
  const QuarticSurrogate q = make_surrogate(in);
  const double lo = in.lower(), hi = in.upper();
  std::vector<double> cand{lo, hi};
  for (double x : real_cubic_roots(4.0 * q.c4, 3.0 * q.c3, 2.0 * q.c2 + mu, q.c1))
    if (x > lo && x < hi) cand.push_back(x);
  StepResult best;
  best.kind = StepKind::inexact;
  best.estimate = std::numeric_limits<double>::infinity();
  for (double d : cand) {
    const double v = q.eval(d, mu);
    if (v < best.estimate) {
      best.estimate = v;
      best.d = d;
    }
  }
  if (!std::isfinite(best.estimate)) {
    best.d = 0.0;
    best.estimate = 0.0;
  }
  return best;
}

// ---------------------------------------------------------------------------

SweepStats sweep(CovarianceBackend& state, const std::vector<std::size_t>& order, const SolverOptions& options,
                 int sweep_index) {
  SweepStats st;
  st.order = order;
  st.steps.reserve(order.size());
  st.deltas.reserve(order.size());
  st.objective_start = state.objective();
  for (std::size_t c : order) {
    const StepInputs& in = state.prepare(c);
    const bool use_exact = options.kind == StepKind::exact &&
                           static_cast<std::size_t>(in.kernel.rows()) <= options.exact_rank_limit;
    StepResult step;
    try {
      step = use_exact ? exact_step(in, options.roots) : inexact_step(in, options.mu);
    } catch (const DivergenceSignal& e) {
      throw DivergenceSignal(e.what(), c, sweep_index);
    }
    const double delta = subproblem_delta(in, step.d);
    if (!std::isfinite(delta) || !std::isfinite(step.d))
      throw DivergenceSignal("non-finite value in coordinate update", c, sweep_index);
    if (delta > options.divergence_jump)
      throw DivergenceSignal("coordinate update increased the objective", c, sweep_index);
    state.commit(step.d);
    st.steps.push_back(step.d);
    st.deltas.push_back(delta);
    st.max_delta = std::max(st.max_delta, delta);
  }
  st.objective_end = state.objective();
  if (!std::isfinite(st.objective_end))
    throw DivergenceSignal("non-finite objective after sweep", 0, sweep_index);
  if (st.objective_end > st.objective_start + options.divergence_jump)
    throw DivergenceSignal("objective increased over the sweep", 0, sweep_index);
  return st;
}

void replay(CovarianceBackend& state, const std::vector<std::size_t>& order, const std::vector<double>& steps) {
  if (order.size() != steps.size()) throw ConfigError("replay order and steps differ in length");
  for (std::size_t i = 0; i < order.size(); ++i) woodbury_update(state, order[i], steps[i]);
}

std::string to_string(Termination t) {
  switch (t) {
    case Termination::converged: return "converged";
    case Termination::sweep_cap: return "sweep_cap";
    case Termination::diverged: return "diverged";
  }
  return "unknown";
}

std::string to_string(RootFinder r) {
  switch (r) {
    case RootFinder::companion: return "companion";
    case RootFinder::balanced: return "balanced";
    case RootFinder::guarded: return "guarded";
  }
  return "unknown";
}

RootFinder parse_root_finder(const std::string& s) {
  if (s == "companion") return RootFinder::companion;
  if (s == "balanced") return RootFinder::balanced;
  if (s == "guarded") return RootFinder::guarded;
  throw ConfigError("unknown root finder: " + s);
}

std::vector<std::size_t> random_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    std::uniform_int_distribution<std::size_t> u(0, i - 1);
    std::swap(p[i - 1], p[u(rng)]);
  }
  return p;
}

SolveResult solve(CovarianceBackend& state, const SolverOptions& options, bool keep_history) {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(clock::now() - t0).count(); };

  SolveResult res;
  try {
    OptimalityReport opt = optimality_measure(state);
    res.trace.push_back({0, state.objective(), opt.norm, elapsed()});
    if (opt.norm <= options.tol) res.termination = Termination::converged;
    for (int s = 1; s <= options.max_sweeps && !res.converged(); ++s) {
      const auto order = random_permutation(state.size(), derive_seed(options.seed, 0x5eedULL, static_cast<std::uint64_t>(s)));
      SweepStats st = sweep(state, order, options, s);
      res.max_delta = std::max(res.max_delta, st.max_delta);
      opt = optimality_measure(state);
      res.sweeps = s;
      res.trace.push_back({s, st.objective_end, opt.norm, elapsed()});
      if (keep_history) res.history.push_back(std::move(st));
      if (!std::isfinite(opt.norm)) throw DivergenceSignal("non-finite optimality measure", 0, s);
      if (opt.norm <= options.tol) res.termination = Termination::converged;
    }
  } catch (const DivergenceSignal& e) {
    res.termination = Termination::diverged;
    res.message = e.what();
  } catch (const NumericalFailure& e) {
    res.termination = Termination::diverged;
    res.message = e.what();
  }
  res.a = state.activity();
  return res;
}

}  // namespace nfad

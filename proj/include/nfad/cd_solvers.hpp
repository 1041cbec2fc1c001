// SPDX-License-Identifier: Apache-2.0
//
// Coordinate descent on the relaxed ML objective. The exact rule minimises
// the one-dimensional objective through its rational form
//   log p_den(d) + p_num(d) / p_den(d),
// the inexact rule minimises a quartic Taylor surrogate plus mu/2 d^2.
#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "nfad/mle_core.hpp"
#include "nfad/polynomial.hpp"

namespace nfad {

enum class StepKind { exact, inexact };

struct SubproblemKernel {
  RVec eigvals;    // eigenvalues of X^H S^-1 X, clamped at 0
  CVec xi_resid;   // rotated into the eigenbasis
  CVec xi_mean;
  double c1 = 0.0;
  double c2 = 0.0;
};

SubproblemKernel make_kernel(const StepInputs& in);

struct RationalForm {
  Poly den;  // prod (1 + lambda_i d)
  Poly num;  // degree r + 2
};

RationalForm build_polynomials(const SubproblemKernel& k);

/// p_den p_den' + p_den p_num' - p_den' p_num, degree 2r + 1.
Poly stationarity_polynomial(const RationalForm& rf);

/// log p_den(d) + p_num(d) / p_den(d), or +inf when p_den(d) <= 1e-300.
double rational_objective(const RationalForm& rf, double d);

/// The same objective summed term by term in the eigenbasis, with its first two
/// derivatives. +inf (and zero derivatives) when some 1 + lambda_i d <= 0.
struct KernelValue {
  double value, slope, curvature;
};
KernelValue kernel_objective(const SubproblemKernel& k, double d);

struct StepResult {
  double d = 0.0;
  double estimate = 0.0;  // the rule's own model value of f(a + d e_n) - f(a)
  StepKind kind = StepKind::exact;
};

// companion: eigenvalues of the raw companion matrix.
// balanced: the companion matrix is diagonally balanced first.
// guarded: balanced, leading coefficients that stay below rounding on the box
//          are dropped, every eigenvalue's real part is Newton-polished on the
//          eigenbasis form, and candidates are compared with kernel_objective.
enum class RootFinder { companion, balanced, guarded };

StepResult exact_step(const StepInputs& in, RootFinder roots = RootFinder::guarded);

struct QuarticSurrogate {
  double c1 = 0, c2 = 0, c3 = 0, c4 = 0;  // coefficient of d^i
  double eval(double d, double mu) const { return (((c4 * d + c3) * d + c2 + 0.5 * mu) * d + c1) * d; }
};

QuarticSurrogate make_surrogate(const StepInputs& in);
StepResult inexact_step(const StepInputs& in, double mu);

struct SolverOptions {
  StepKind kind = StepKind::inexact;
  double mu = 10.0;
  double tol = 1e-3;
  int max_sweeps = 50;
  // Coordinates with more kernel columns than this use the inexact rule.
  std::size_t exact_rank_limit = std::numeric_limits<std::size_t>::max();
  RootFinder roots = RootFinder::guarded;
  double divergence_jump = 1.0;
  std::uint64_t seed = 0;
};

struct SweepStats {
  std::vector<std::size_t> order;
  std::vector<double> steps;
  std::vector<double> deltas;  // monitored f(a + d e_n) - f(a) per update
  double max_delta = -std::numeric_limits<double>::infinity();
  double objective_start = 0.0;
  double objective_end = 0.0;
};

/// Visits the coordinates in `order`, monitoring every update. Throws
/// DivergenceSignal when an update raises the objective by more than
/// options.divergence_jump, a value turns non-finite, or no step candidate
/// is usable.
SweepStats sweep(CovarianceBackend& state, const std::vector<std::size_t>& order, const SolverOptions& options,
                 int sweep_index = 0);

/// Replays fixed steps in a fixed order; used to compare backends.
void replay(CovarianceBackend& state, const std::vector<std::size_t>& order, const std::vector<double>& steps);

enum class Termination { converged, sweep_cap, diverged };
std::string to_string(Termination t);
std::string to_string(RootFinder r);
RootFinder parse_root_finder(const std::string& s);

struct TraceRow {
  int sweep = 0;
  double objective = 0.0;
  double v_norm = 0.0;
  double elapsed_s = 0.0;
};

struct SolveResult {
  RVec a;
  std::vector<TraceRow> trace;
  Termination termination = Termination::sweep_cap;
  std::string message;
  int sweeps = 0;
  double max_delta = -std::numeric_limits<double>::infinity();
  std::vector<SweepStats> history;  // filled when keep_history is set

  bool converged() const { return termination == Termination::converged; }
};

std::vector<std::size_t> random_permutation(std::size_t n, std::uint64_t seed);

SolveResult solve(CovarianceBackend& state, const SolverOptions& options, bool keep_history = false);

}  // namespace nfad

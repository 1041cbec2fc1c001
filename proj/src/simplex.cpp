// SPDX-License-Identifier: Apache-2.0
#include "nfad/simplex.hpp"

#include <cmath>
#include <vector>

namespace nfad {

std::string to_string(LpStatus s) {
  switch (s) {
    case LpStatus::optimal: return "optimal";
    case LpStatus::infeasible: return "infeasible";
    case LpStatus::unbounded: return "unbounded";
    case LpStatus::iteration_limit: return "iteration_limit";
  }
  return "unknown";
}

namespace {

struct Tableau {
  RMat t;                  // rows: constraints, last column: rhs
  std::vector<Index> basis;
  double tol;

  Index cols() const { return t.cols() - 1; }

  void pivot(Index row, Index col) {
    t.row(row) /= t(row, col);
    for (Index i = 0; i < t.rows(); ++i)
      if (i != row && t(i, col) != 0.0) t.row(i) -= t(i, col) * t.row(row);
    basis[static_cast<std::size_t>(row)] = col;
  }

  // Maximises cost^T over columns with allowed[j]; returns status.
  LpStatus run(const RVec& cost, const std::vector<bool>& allowed, int& iterations, int max_iterations) {
    const Index rows = t.rows();
    while (iterations < max_iterations) {
      Index enter = -1;
      for (Index j = 0; j < cols() && enter < 0; ++j) {
        if (!allowed[static_cast<std::size_t>(j)]) continue;
        double reduced = cost(j);
        for (Index i = 0; i < rows; ++i) reduced -= cost(basis[static_cast<std::size_t>(i)]) * t(i, j);
        if (reduced > tol) enter = j;
      }
      if (enter < 0) return LpStatus::optimal;
      Index leave = -1;
      double best = 0.0;
      for (Index i = 0; i < rows; ++i) {
        const double p = t(i, enter);
        if (p <= tol) continue;
        const double ratio = t(i, cols()) / p;
        if (leave < 0 || ratio < best - tol ||
            (std::abs(ratio - best) <= tol && basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(leave)])) {
          leave = i;
          best = ratio;
        }
      }
      if (leave < 0) return LpStatus::unbounded;
      pivot(leave, enter);
      ++iterations;
    }
    return LpStatus::iteration_limit;
  }
};

}  // namespace

LpResult maximize_boxed(const RVec& c, const RMat& a, const RVec& b, const RVec& upper, double tol,
                        int max_iterations) {
  const Index n = c.size();
  const Index m = a.rows();
  if (a.cols() != n || b.size() != m || upper.size() != n) throw ConfigError("LP dimension mismatch");
  if ((upper.array() < 0.0).any()) throw ConfigError("LP upper bounds must be nonnegative");

  // columns: x [0,n), slack [n,2n), artificial [2n, 2n+m)
  const Index total = 2 * n + m;
  Tableau tab;
  tab.tol = tol;
  tab.t = RMat::Zero(m + n, total + 1);
  tab.basis.resize(static_cast<std::size_t>(m + n));
  for (Index i = 0; i < m; ++i) {
    const double sign = b(i) < 0.0 ? -1.0 : 1.0;
    tab.t.row(i).head(n) = sign * a.row(i);
    tab.t(i, 2 * n + i) = 1.0;
    tab.t(i, total) = sign * b(i);
    tab.basis[static_cast<std::size_t>(i)] = 2 * n + i;
  }
  for (Index j = 0; j < n; ++j) {
    tab.t(m + j, j) = 1.0;
    tab.t(m + j, n + j) = 1.0;
    tab.t(m + j, total) = upper(j);
    tab.basis[static_cast<std::size_t>(m + j)] = n + j;
  }

  LpResult res;
  std::vector<bool> allowed(static_cast<std::size_t>(total), true);
  RVec phase1 = RVec::Zero(total);
  phase1.tail(m).setConstant(-1.0);
  LpStatus st = tab.run(phase1, allowed, res.iterations, max_iterations);
  if (st != LpStatus::optimal) {
    res.status = st;
    return res;
  }
  double infeas = 0.0;
  for (Index i = 0; i < m + n; ++i)
    if (tab.basis[static_cast<std::size_t>(i)] >= 2 * n) infeas += tab.t(i, total);
  if (infeas > tol * (1.0 + b.cwiseAbs().sum())) {
    res.status = LpStatus::infeasible;
    return res;
  }
  // drive zero-level artificials out of the basis where possible
  for (Index i = 0; i < m + n; ++i) {
    if (tab.basis[static_cast<std::size_t>(i)] < 2 * n) continue;
    for (Index j = 0; j < 2 * n; ++j)
      if (std::abs(tab.t(i, j)) > tol) {
        tab.pivot(i, j);
        break;
      }
  }
  for (Index j = 2 * n; j < total; ++j) allowed[static_cast<std::size_t>(j)] = false;

  RVec phase2 = RVec::Zero(total);
  phase2.head(n) = c;
  st = tab.run(phase2, allowed, res.iterations, max_iterations);
  res.status = st;
  if (st != LpStatus::optimal) return res;
  res.x = RVec::Zero(n);
  for (Index i = 0; i < m + n; ++i) {
    const Index v = tab.basis[static_cast<std::size_t>(i)];
    if (v < n) res.x(v) = tab.t(i, total);
  }
  res.x = res.x.cwiseMax(0.0).cwiseMin(upper);
  res.value = c.dot(res.x);
  return res;
}

}  // namespace nfad

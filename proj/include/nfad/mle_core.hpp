// SPDX-License-Identifier: Apache-2.0
//
// Solver state for the relaxed ML problem
//   minimise log|S(a)| + (y - m(a))^H S(a)^-1 (y - m(a)),  a in [0,1]^C,
// with S(a) = sum_c a_c X_c X_c^H + noise I and m(a) = sum_c a_c u_c.
//
// A backend owns S^-1 (in some factored form), log|S|, the residual y - m(a)
// and a. Coordinate c is touched in two phases: prepare(c) produces the
// small quantities every step rule needs, commit(d) applies a_c += d.
#pragma once

#include <cstddef>

#include "nfad/synthesis.hpp"

namespace nfad {

/// Everything about coordinate c that the one-dimensional problem depends on.
/// With r = y - m(a), u = mean (x) s and X = F (x) s:
struct StepInputs {
  CMat kernel;     // X^H S^-1 X
  CVec xi_resid;   // X^H S^-1 r
  CVec xi_mean;    // X^H S^-1 u
  double c1 = 0;   // Re(r^H S^-1 u)
  double c2 = 0;   // u^H S^-1 u
  std::size_t coordinate = 0;
  double a_n = 0;

  double lower() const { return -a_n; }
  double upper() const { return 1.0 - a_n; }
};

class CovarianceBackend {
 public:
  virtual ~CovarianceBackend() = default;

  virtual const StepInputs& prepare(std::size_t c) = 0;
  /// Applies a_c += d to the coordinate last passed to prepare().
  virtual void commit(double d) = 0;
  virtual double objective() const = 0;
  virtual void recompute() = 0;
  virtual const RVec& activity() const = 0;
  virtual std::size_t size() const = 0;
  virtual std::size_t dense_recomputes() const = 0;
};

/// Dense LM x LM inverse covariance.
class FullState final : public CovarianceBackend {
 public:
  FullState(const ActivityModel& model, CVec y);
  FullState(const ActivityModel& model, CVec y, const RVec& a0);

  const StepInputs& prepare(std::size_t c) override;
  void commit(double d) override;
  double objective() const override;
  void recompute() override;
  const RVec& activity() const override { return a_; }
  std::size_t size() const override { return model_->size(); }
  std::size_t dense_recomputes() const override { return recomputes_; }

  const CMat& inverse() const { return sinv_; }
  double logdet() const { return logdet_; }
  const CVec& residual() const { return resid_; }
  const CVec& signal() const { return y_; }

  /// Updates between scheduled dense recomputes (default 10 * size()).
  void set_refresh_interval(std::size_t n) { refresh_ = n; }
  double condition_limit = 1e12;

 private:
  const ActivityModel* model_;
  CVec y_;
  RVec a_;
  CMat sinv_;
  double logdet_ = 0.0;
  CVec resid_;
  std::size_t since_refresh_ = 0;
  std::size_t refresh_ = 0;
  std::size_t recomputes_ = 0;

  bool prepared_ = false;
  StepInputs in_;
  CMat seq_proj_;  // S^-1 (I (x) s)
  CMat w_;         // S^-1 X
};

/// Dense evaluation of the objective at a; the test oracle path.
double dense_objective(const ActivityModel& model, const CVec& y, const RVec& a);

double objective(const CovarianceBackend& state);

/// tr(K) - |xi_resid|^2 - 2 c1, the derivative of f along coordinate c at d = 0.
double gradient_entry(CovarianceBackend& state, std::size_t c);
double gradient_entry(const StepInputs& in);

struct OptimalityReport {
  RVec v;  // |Proj_[0,1](a - grad f) - a|
  double norm = 0.0;
};

OptimalityReport optimality_measure(CovarianceBackend& state);

void woodbury_update(CovarianceBackend& state, std::size_t c, double d);

/// f(a + d e_c) - f(a), evaluated from the r x r quantities through an LDL^T
/// of I + dK. Returns +inf when I + dK is not positive definite.
double subproblem_delta(const StepInputs& in, double d);

/// log|I + dK| and (I + dK)^-1, or false when I + dK is not positive definite.
bool inner_factor(const CMat& kernel, double d, double& logdet, CMat& inv, double* rcond = nullptr);

}  // namespace nfad

// SPDX-License-Identifier: Apache-2.0
#include "nfad/mle_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nfad/kernels.hpp"

namespace nfad {

bool inner_factor(const CMat& kernel, double d, double& logdet, CMat& inv, double* rcond) {
  const Index r = kernel.rows();
  logdet = 0.0;
  if (r == 0) {
    inv.resize(0, 0);
    if (rcond) *rcond = 1.0;
    return true;
  }
  CMat a = CMat::Identity(r, r) + d * kernel;
  Eigen::LLT<CMat> llt(a);
  if (llt.info() != Eigen::Success) return false;
  const auto& l = llt.matrixLLT();
  for (Index i = 0; i < r; ++i) {
    const double li = l(i, i).real();
    if (!(li > 0.0)) return false;
    logdet += 2.0 * std::log(li);
  }
  if (!std::isfinite(logdet)) return false;
  inv = llt.solve(CMat::Identity(r, r));
  if (rcond) *rcond = llt.rcond();
  return true;
}

double subproblem_delta(const StepInputs& in, double d) {
  const Index r = in.kernel.rows();
  double value = -2.0 * d * in.c1 + d * d * in.c2;
  if (r == 0) return value;
  CMat a = CMat::Identity(r, r) + d * in.kernel;
  Eigen::LDLT<CMat> ldlt(a);
  if (ldlt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
  const RVec dvec = ldlt.vectorD().real();
  double logdet = 0.0;
  for (Index i = 0; i < r; ++i) {
    if (!(dvec(i) > 0.0)) return std::numeric_limits<double>::infinity();
    logdet += std::log(dvec(i));
  }
  const CVec g_r = ldlt.solve(in.xi_resid);
  const CVec g_u = ldlt.solve(in.xi_mean);
  value += logdet;
  value -= d * in.xi_resid.dot(g_r).real();
  value += 2.0 * d * d * in.xi_resid.dot(g_u).real();
  value -= d * d * d * in.xi_mean.dot(g_u).real();
  return value;
}

// ---------------------------------------------------------------------------

FullState::FullState(const ActivityModel& model, CVec y)
    : FullState(model, std::move(y), RVec::Zero(static_cast<Index>(model.size()))) {}

FullState::FullState(const ActivityModel& model, CVec y, const RVec& a0)
    : model_(&model), y_(std::move(y)), a_(a0) {
  if (y_.size() != model.dim()) throw ConfigError("signal length differs from L*M");
  if (a_.size() != static_cast<Index>(model.size())) throw ConfigError("activity length mismatch");
  if ((a_.array() < 0.0).any() || (a_.array() > 1.0).any()) throw ConfigError("activity outside [0,1]");
  refresh_ = 10 * model.size();
  if (a_.isZero(0.0)) {
    const Index n = model.dim();
    sinv_ = (1.0 / model.noise_power) * CMat::Identity(n, n);
    logdet_ = static_cast<double>(n) * std::log(model.noise_power);
    resid_ = y_;
  } else {
    recompute();
    recomputes_ = 0;
  }
}

void FullState::recompute() {
  const CMat s = covariance_matrix(*model_, a_);
  Eigen::LLT<CMat> llt(s);
  if (llt.info() != Eigen::Success) throw NumericalFailure("covariance is not positive definite");
  logdet_ = 2.0 * llt.matrixLLT().diagonal().real().array().log().sum();
  sinv_ = llt.solve(CMat::Identity(s.rows(), s.cols()));
  sinv_ = 0.5 * (sinv_ + sinv_.adjoint()).eval();
  resid_ = y_ - mean_vector(*model_, a_);
  since_refresh_ = 0;
  prepared_ = false;
  ++recomputes_;
}

const StepInputs& FullState::prepare(std::size_t c) {
  if (c >= model_->size()) throw ConfigError("coordinate out of range");
  const CoordinateModel& cm = model_->coords[c];
  const ChannelStats& ch = *cm.channel;
  const Index L = model_->seq_len;
  const Index M = model_->antenna_count;

  kernels::apply_to_sequence(sinv_, cm.sequence, seq_proj_);
  // (I (x) s)^H S^-1 (I (x) s)
  CMat z0(M, M);
  for (Index m = 0; m < M; ++m) z0.row(m) = cm.sequence.adjoint() * seq_proj_.middleRows(m * L, L);
  z0 = 0.5 * (z0 + z0.adjoint()).eval();
  const CVec proj_resid = seq_proj_.adjoint() * resid_;  // (I (x) s)^H S^-1 r
  const CVec z0_mean = z0 * ch.los_mean;

  if (cm.scaled_identity()) {
    const double g = ch.large_scale_gain;
    const double sg = std::sqrt(g);
    in_.kernel = g * z0;
    in_.xi_resid = sg * proj_resid;
    in_.xi_mean = sg * z0_mean;
    w_ = sg * seq_proj_;
  } else {
    const CMat& f = ch.corr_factor;
    in_.kernel = f.adjoint() * z0 * f;
    in_.kernel = 0.5 * (in_.kernel + in_.kernel.adjoint()).eval();
    in_.xi_resid = f.adjoint() * proj_resid;
    in_.xi_mean = f.adjoint() * z0_mean;
    w_.noalias() = seq_proj_ * f;
  }
  in_.c1 = proj_resid.dot(ch.los_mean).real();
  in_.c2 = ch.los_mean.dot(z0_mean).real();
  in_.coordinate = c;
  in_.a_n = a_(static_cast<Index>(c));
  prepared_ = true;
  return in_;
}

void FullState::commit(double d) {
  if (!prepared_) throw ConfigError("commit without prepare");
  prepared_ = false;
  if (d == 0.0) return;
  const std::size_t c = in_.coordinate;
  const CoordinateModel& cm = model_->coords[c];

  double ld = 0.0, rc = 0.0;
  CMat g;
  const bool ok = inner_factor(in_.kernel, d, ld, g, &rc);
  a_(static_cast<Index>(c)) = std::clamp(a_(static_cast<Index>(c)) + d, 0.0, 1.0);
  if (!ok || rc * condition_limit < 1.0) {
    recompute();
    return;
  }
  kernels::hermitian_rank_update(sinv_, w_, d * g);
  logdet_ += ld;
  resid_ -= d * kron_mean(cm.channel->los_mean, cm.sequence);
  if (++since_refresh_ >= refresh_) recompute();
}

double FullState::objective() const {
  const double quad = resid_.dot(sinv_ * resid_).real();
  const double f = logdet_ + quad;
  if (!std::isfinite(f)) throw NumericalFailure("non-finite objective");
  return f;
}

// ---------------------------------------------------------------------------

double dense_objective(const ActivityModel& model, const CVec& y, const RVec& a) {
  const CMat s = covariance_matrix(model, a);
  Eigen::LLT<CMat> llt(s);
  if (llt.info() != Eigen::Success) throw NumericalFailure("covariance is not positive definite");
  const CVec r = y - mean_vector(model, a);
  const double logdet = 2.0 * llt.matrixLLT().diagonal().real().array().log().sum();
  return logdet + r.dot(llt.solve(r)).real();
}

double objective(const CovarianceBackend& state) { return state.objective(); }

double gradient_entry(const StepInputs& in) {
  return in.kernel.trace().real() - in.xi_resid.squaredNorm() - 2.0 * in.c1;
}

double gradient_entry(CovarianceBackend& state, std::size_t c) { return gradient_entry(state.prepare(c)); }

OptimalityReport optimality_measure(CovarianceBackend& state) {
  const std::size_t n = state.size();
  OptimalityReport rep;
  rep.v.resize(static_cast<Index>(n));
  for (std::size_t c = 0; c < n; ++c) {
    const double a = state.activity()(static_cast<Index>(c));
    const double g = gradient_entry(state, c);
    rep.v(static_cast<Index>(c)) = std::abs(std::clamp(a - g, 0.0, 1.0) - a);
  }
  rep.norm = rep.v.norm();
  return rep;
}

void woodbury_update(CovarianceBackend& state, std::size_t c, double d) {
  state.prepare(c);
  state.commit(d);
}

}  // namespace nfad

// SPDX-License-Identifier: Apache-2.0
#include "nfad/lowrank.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "nfad/kernels.hpp"

namespace nfad {

namespace {

LowRankBasis eigen_basis(const ActivityModel& model) {
  const Index M = model.antenna_count;
  CMat sum = CMat::Zero(M, M);
  std::set<const ChannelStats*> seen;
  for (const auto& c : model.coords) {
    if (c.scaled_identity() || !seen.insert(c.channel.get()).second) continue;
    sum.noalias() += c.channel->corr_factor * c.channel->corr_factor.adjoint();
  }
  LowRankBasis b;
  if (seen.empty()) {
    b.u = CMat::Identity(M, M);
    b.eigenvalues = RVec::Zero(M);
    return b;
  }
  Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (sum + sum.adjoint()));
  if (es.info() != Eigen::Success) throw NumericalFailure("eigendecomposition of the correlation sum failed");
  b.u = es.eigenvectors().rowwise().reverse();
  b.eigenvalues = es.eigenvalues().reverse();
  return b;
}

}  // namespace

LowRankBasis build_basis(const ActivityModel& model, double rel_tol) {
  LowRankBasis b = eigen_basis(model);
  const double top = b.eigenvalues.size() ? b.eigenvalues(0) : 0.0;
  b.r_prime = 0;
  if (top > 0.0)
    for (Index i = 0; i < b.eigenvalues.size(); ++i)
      if (b.eigenvalues(i) > rel_tol * top) ++b.r_prime;
  if (b.r_prime == model.antenna_count)
    throw ConfigError("summed correlation has full rank; use a truncated basis");
  b.captured_energy = 1.0;
  return b;
}

LowRankBasis truncate_basis(const ActivityModel& model, int keep) {
  if (keep < 0 || keep > model.antenna_count) throw ConfigError("truncation rank out of range");
  LowRankBasis b = eigen_basis(model);
  b.r_prime = keep;
  const double total = b.eigenvalues.cwiseMax(0.0).sum();
  const double kept = b.eigenvalues.head(keep).cwiseMax(0.0).sum();
  b.captured_energy = total > 0.0 ? kept / total : 1.0;
  b.approximate = b.captured_energy < 1.0 - 1e-12;
  return b;
}

CVec transform_signal(const LowRankBasis& basis, const CVec& y, int seq_len) {
  const Index L = seq_len;
  const Index M = basis.u.rows();
  Eigen::Map<const CMat> ymat(y.data(), L, M);
  CVec out(L * M);
  Eigen::Map<CMat>(out.data(), L, M).noalias() = ymat * basis.u.conjugate();
  return out;
}

// ---------------------------------------------------------------------------

BlockState::BlockState(const ActivityModel& model, const LowRankBasis& basis, const CVec& y)
    : BlockState(model, basis, y, RVec::Zero(static_cast<Index>(model.size()))) {}

BlockState::BlockState(const ActivityModel& model, const LowRankBasis& basis, const CVec& y, const RVec& a0)
    : model_(&model), basis_(basis) {
  if (y.size() != model.dim()) throw ConfigError("signal length differs from L*M");
  if (basis.u.rows() != model.antenna_count) throw ConfigError("basis dimension differs from M");
  y_ = transform_signal(basis_, y, model.seq_len);
  refresh_ = 10 * model.size();
  const Index r = basis_.r_prime;
  coords_.resize(model.size());
  for (std::size_t c = 0; c < model.size(); ++c) {
    const auto& cm = model.coords[c];
    Coord& k = coords_[c];
    k.mean = basis_.u.adjoint() * cm.channel->los_mean;
    k.correlated = !cm.scaled_identity();
    k.gain = cm.channel->large_scale_gain;
    if (k.correlated) k.factor = (basis_.u.adjoint() * cm.channel->corr_factor).topRows(r);
  }
  init(a0);
}

void BlockState::init(const RVec& a0) {
  if (a0.size() != static_cast<Index>(model_->size())) throw ConfigError("activity length mismatch");
  a_ = a0;
  if (a_.isZero(0.0)) {
    const Index L = model_->seq_len;
    const Index H = L * basis_.r_prime;
    const double inv = 1.0 / model_->noise_power;
    head_inv_ = inv * CMat::Identity(H, H);
    tail_inv_ = inv * CMat::Identity(L, L);
    logdet_ = static_cast<double>(model_->dim()) * std::log(model_->noise_power);
    resid_ = y_;
  } else {
    recompute();
    recomputes_ = 0;
  }
}

CVec BlockState::rotated_mean(std::size_t c) const { return kron_mean(coords_[c].mean, model_->coords[c].sequence); }

void BlockState::recompute() {
  const Index L = model_->seq_len;
  const Index r = basis_.r_prime;
  const Index M = model_->antenna_count;
  const Index H = L * r;
  CMat head = model_->noise_power * CMat::Identity(H, H);
  CMat tail = model_->noise_power * CMat::Identity(L, L);
  resid_ = y_;
  for (std::size_t c = 0; c < model_->size(); ++c) {
    const double w = a_(static_cast<Index>(c));
    if (w == 0.0) continue;
    const CVec& s = model_->coords[c].sequence;
    const Coord& k = coords_[c];
    if (k.correlated) {
      if (H > 0) {
        const CMat x = kron_factor(k.factor, s);
        head.noalias() += w * x * x.adjoint();
      }
    } else {
      const CMat sst = s * s.adjoint();
      for (Index m = 0; m < r; ++m) head.block(m * L, m * L, L, L) += w * k.gain * sst;
      tail += w * k.gain * sst;
    }
    resid_ -= w * rotated_mean(c);
  }
  logdet_ = 0.0;
  if (H > 0) {
    Eigen::LLT<CMat> llt(head);
    if (llt.info() != Eigen::Success) throw NumericalFailure("head covariance is not positive definite");
    logdet_ += 2.0 * llt.matrixLLT().diagonal().real().array().log().sum();
    head_inv_ = llt.solve(CMat::Identity(H, H));
    head_inv_ = 0.5 * (head_inv_ + head_inv_.adjoint()).eval();
  } else {
    head_inv_.resize(0, 0);
  }
  Eigen::LLT<CMat> llt(tail);
  if (llt.info() != Eigen::Success) throw NumericalFailure("tail covariance is not positive definite");
  logdet_ += static_cast<double>(M - r) * 2.0 * llt.matrixLLT().diagonal().real().array().log().sum();
  tail_inv_ = llt.solve(CMat::Identity(L, L));
  tail_inv_ = 0.5 * (tail_inv_ + tail_inv_.adjoint()).eval();
  since_refresh_ = 0;
  prepared_ = false;
  ++recomputes_;
}

const StepInputs& BlockState::prepare(std::size_t c) {
  if (c >= model_->size()) throw ConfigError("coordinate out of range");
  const Index L = model_->seq_len;
  const Index r = basis_.r_prime;
  const Index M = model_->antenna_count;
  const Index H = L * r;
  const CVec& s = model_->coords[c].sequence;
  const Coord& k = coords_[c];

  CVec proj_resid(r);  // (I (x) s)^H head_inv r_head
  if (r > 0) {
    kernels::apply_to_sequence(head_inv_, s, head_proj_);
    head_z0_.resize(r, r);
    for (Index m = 0; m < r; ++m) head_z0_.row(m) = s.adjoint() * head_proj_.middleRows(m * L, L);
    head_z0_ = 0.5 * (head_z0_ + head_z0_.adjoint()).eval();
    proj_resid = head_proj_.adjoint() * resid_.head(H);
  } else {
    head_proj_.resize(0, 0);
    head_z0_.resize(0, 0);
  }
  tail_t_ = tail_inv_ * s;
  tail_kappa_ = s.dot(tail_t_).real();

  const CVec mean_head = k.mean.head(r);
  const CVec z0_mean = head_z0_ * mean_head;
  // tail antennas m >= r': t^H r_m and the rotated means there
  const Index T = M - r;
  CVec tail_proj(T);
  for (Index m = 0; m < T; ++m) tail_proj(m) = tail_t_.dot(resid_.segment((r + m) * L, L));
  const CVec mean_tail = k.mean.tail(T);

  in_.c1 = proj_resid.dot(mean_head).real() + tail_proj.dot(mean_tail).real();
  in_.c2 = mean_head.dot(z0_mean).real() + tail_kappa_ * mean_tail.squaredNorm();

  if (k.correlated) {
    in_.kernel = k.factor.adjoint() * head_z0_ * k.factor;
    in_.kernel = 0.5 * (in_.kernel + in_.kernel.adjoint()).eval();
    in_.xi_resid = k.factor.adjoint() * proj_resid;
    in_.xi_mean = k.factor.adjoint() * z0_mean;
    if (r > 0) w_.noalias() = head_proj_ * k.factor;
    else w_.resize(0, k.factor.cols());
  } else {
    const double g = k.gain;
    const double sg = std::sqrt(g);
    in_.kernel = CMat::Zero(M, M);
    in_.kernel.topLeftCorner(r, r) = g * head_z0_;
    in_.kernel.bottomRightCorner(T, T).diagonal().setConstant(g * tail_kappa_);
    in_.xi_resid.resize(M);
    in_.xi_resid.head(r) = sg * proj_resid;
    in_.xi_resid.tail(T) = sg * tail_proj;
    in_.xi_mean.resize(M);
    in_.xi_mean.head(r) = sg * z0_mean;
    in_.xi_mean.tail(T) = (sg * tail_kappa_) * mean_tail;
    w_ = sg * head_proj_;
  }
  in_.coordinate = c;
  in_.a_n = a_(static_cast<Index>(c));
  prepared_ = true;
  return in_;
}

void BlockState::commit(double d) {
  if (!prepared_) throw ConfigError("commit without prepare");
  prepared_ = false;
  if (d == 0.0) return;
  const std::size_t c = in_.coordinate;
  const Coord& k = coords_[c];
  const Index r = basis_.r_prime;
  const Index M = model_->antenna_count;
  a_(static_cast<Index>(c)) = std::clamp(a_(static_cast<Index>(c)) + d, 0.0, 1.0);

  double ld = 0.0, rc = 1.0;
  CMat g;
  bool ok = true;
  if (k.correlated) {
    ok = inner_factor(in_.kernel, d, ld, g, &rc);
    if (ok && rc * condition_limit >= 1.0 && r > 0) kernels::hermitian_rank_update(head_inv_, w_, d * g);
  } else {
    const double gain = k.gain;
    const double denom = 1.0 + d * gain * tail_kappa_;
    ok = denom > 0.0 && std::isfinite(denom);
    if (ok && r > 0) ok = inner_factor(in_.kernel.topLeftCorner(r, r), d, ld, g, &rc);
    if (ok && rc * condition_limit >= 1.0 && denom * condition_limit >= 1.0) {
      if (r > 0) kernels::hermitian_rank_update(head_inv_, w_, d * g);
      tail_inv_ -= (d * gain / denom) * tail_t_ * tail_t_.adjoint();
      ld += static_cast<double>(M - r) * std::log(denom);
    } else {
      ok = false;
    }
  }
  if (!ok || rc * condition_limit < 1.0) {
    recompute();
    return;
  }
  logdet_ += ld;
  resid_ -= d * rotated_mean(c);
  if (++since_refresh_ >= refresh_) recompute();
}

double BlockState::objective() const {
  const Index L = model_->seq_len;
  const Index r = basis_.r_prime;
  const Index M = model_->antenna_count;
  const Index H = L * r;
  double quad = 0.0;
  if (H > 0) quad += resid_.head(H).dot(head_inv_ * resid_.head(H)).real();
  Eigen::Map<const CMat> tail(resid_.data() + H, L, M - r);
  quad += (tail.adjoint() * tail_inv_ * tail).trace().real();
  const double f = logdet_ + quad;
  if (!std::isfinite(f)) throw NumericalFailure("non-finite objective");
  return f;
}

cplx BlockState::quadratic_form(const CVec& x, const CVec& z) const {
  const Index L = model_->seq_len;
  const Index r = basis_.r_prime;
  const Index M = model_->antenna_count;
  const Index H = L * r;
  if (x.size() != model_->dim() || z.size() != model_->dim()) throw ConfigError("vector length differs from L*M");
  cplx acc = 0.0;
  if (H > 0) acc += x.head(H).dot(head_inv_ * z.head(H));
  for (Index m = r; m < M; ++m) acc += x.segment(m * L, L).dot(tail_inv_ * z.segment(m * L, L));
  return acc;
}

CMat BlockState::implied_full_inverse() const {
  const Index L = model_->seq_len;
  const Index r = basis_.r_prime;
  const Index M = model_->antenna_count;
  const Index H = L * r;
  CMat out = CMat::Zero(model_->dim(), model_->dim());
  if (H > 0) out.topLeftCorner(H, H) = head_inv_;
  for (Index m = r; m < M; ++m) out.block(m * L, m * L, L, L) = tail_inv_;
  return out;
}

cplx block_quadratic_form(const BlockState& state, const CVec& x, const CVec& z) {
  return state.quadratic_form(x, z);
}

}  // namespace nfad

// SPDX-License-Identifier: Apache-2.0
//
// Block-diagonal solver state for populations where the correlated devices
// share an r'-dimensional subspace and every other device has R = g I.
//
// With U the eigenbasis of the summed correlation matrices, the rotated
// covariance (U^H (x) I_L) S (U (x) I_L) splits into one L r' x L r' head
// block and M - r' identical L x L tail blocks.
#pragma once

#include <vector>

#include "nfad/mle_core.hpp"

namespace nfad {

struct LowRankBasis {
  CMat u;              // M x M unitary, eigenvalues descending
  int r_prime = 0;
  bool approximate = false;
  double captured_energy = 1.0;  // sum of kept eigenvalues / total
  RVec eigenvalues;               // descending
};

/// Exact basis from the correlated channels of the model. Throws ConfigError
/// when the summed correlation has full rank; use truncate_basis instead.
LowRankBasis build_basis(const ActivityModel& model, double rel_tol = 1e-9);

/// Keeps the leading `keep` eigenvectors regardless of rank; flagged approximate
/// when discarded energy is nonzero.
LowRankBasis truncate_basis(const ActivityModel& model, int keep);

/// (U^H (x) I_L) y.
CVec transform_signal(const LowRankBasis& basis, const CVec& y, int seq_len);

class BlockState final : public CovarianceBackend {
 public:
  BlockState(const ActivityModel& model, const LowRankBasis& basis, const CVec& y);
  BlockState(const ActivityModel& model, const LowRankBasis& basis, const CVec& y, const RVec& a0);

  const StepInputs& prepare(std::size_t c) override;
  void commit(double d) override;
  double objective() const override;
  void recompute() override;
  const RVec& activity() const override { return a_; }
  std::size_t size() const override { return model_->size(); }
  std::size_t dense_recomputes() const override { return recomputes_; }

  const CMat& head_inverse() const { return head_inv_; }
  const CMat& tail_inverse() const { return tail_inv_; }
  double logdet() const { return logdet_; }
  const CVec& residual() const { return resid_; }
  int r_prime() const { return basis_.r_prime; }

  /// x^H S'^-1 z for vectors in rotated coordinates.
  cplx quadratic_form(const CVec& x, const CVec& z) const;

  /// Dense rotated inverse; tests only.
  CMat implied_full_inverse() const;

  void set_refresh_interval(std::size_t n) { refresh_ = n; }
  double condition_limit = 1e12;

 private:
  struct Coord {
    CVec mean;    // U^H mean
    CMat factor;  // (U^H F)[0:r', :], correlated only
    bool correlated = true;
    double gain = 0.0;
  };

  const ActivityModel* model_;
  LowRankBasis basis_;
  std::vector<Coord> coords_;
  CVec y_;
  RVec a_;
  CMat head_inv_;
  CMat tail_inv_;
  double logdet_ = 0.0;
  CVec resid_;
  std::size_t since_refresh_ = 0;
  std::size_t refresh_ = 0;
  std::size_t recomputes_ = 0;

  bool prepared_ = false;
  StepInputs in_;
  CMat head_proj_;  // head_inv (I_r' (x) s)
  CMat head_z0_;
  CVec tail_t_;     // tail_inv s
  double tail_kappa_ = 0.0;
  CMat w_;

  void init(const RVec& a0);
  CVec rotated_mean(std::size_t c) const;
};

cplx block_quadratic_form(const BlockState& state, const CVec& x, const CVec& z);

}  // namespace nfad

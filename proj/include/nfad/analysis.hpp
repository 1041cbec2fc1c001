// SPDX-License-Identifier: Apache-2.0
//
// Structural diagnostics of an activity model: statistical dimensions of the
// correlated and trace-matched-identity covariance families, identifiability
// of a true activity pattern, and pairwise cosine similarities.
#pragma once

#include <cstdint>
#include <vector>

#include "nfad/synthesis.hpp"

namespace nfad {

enum class CovarianceCase { correlated, uncorrelated };

enum class DimensionRegime { bound_one_smaller, equal };

struct DimensionReport {
  Index d_one = 0;      // rank of sum_n R_n (x) s s^H
  Index d_two = 0;      // rank of sum_n g_n I (x) s s^H
  Index bound_one = 0;  // min(max_rank * N, LM)
  Index bound_two = 0;  // LM
  Index rank_sum = 0;   // sum_n rank(R_n)
  Index max_rank = 0;
  DimensionRegime regime = DimensionRegime::equal;
};

/// Dense ranks (tolerance 1e-9 of the largest eigenvalue); throws ConfigError
/// above `dense_limit` for LM.
DimensionReport statistical_dimension(const ActivityModel& model, Index dense_limit = 1024);

/// max_rank * N < LM, in integers.
bool regime_rule(Index n_devices, Index seq_len, Index antennas, Index max_rank);

/// Realified equality constraints on x in R^N: the covariance condition
/// sum x_n (R_n or g_n I) (x) s s^H = 0 stacked on sum x_n mean_n (x) s_n = 0,
/// together with the sign of each coordinate allowed by the true activity.
struct IdentifiabilityInstance {
  RMat constraints;         // rows: real and imaginary parts, cols: N
  std::vector<int> cone_signs;  // +1 where inactive, -1 where active
};

IdentifiabilityInstance make_identifiability_instance(const ActivityModel& model, const RVec& truth,
                                                      CovarianceCase which);

enum class Identifiability { identifiable, not_identifiable, indeterminate };

struct IdentifiabilityResult {
  Identifiability status = Identifiability::indeterminate;
  RVec witness;  // nonzero x in the null space and cone, when not identifiable
  double lp_value = 0.0;
};

/// Decides whether the null space meets the sign cone only at zero, by an LP
/// over the box |x| <= 1.
IdentifiabilityResult identifiability_holds(const IdentifiabilityInstance& inst, double value_tol = 1e-7);

/// Orthonormal basis (as rows) of the row space of the constraint matrix.
RMat constraint_row_basis(const RMat& constraints, double rel_tol = 1e-9);

struct SmallInstanceLimits {
  int max_devices = 8;
  int max_seq_len = 4;
  int max_antennas = 4;
};

struct SmallInstance {
  ActivityModel model;
  RVec truth;
};

/// Random correlated-channel instance with random ranks, QPSK sequences and
/// (half of the time) zero means.
SmallInstance random_small_instance(std::uint64_t seed, const SmallInstanceLimits& limits = {});

struct ScanReport {
  int trials = 0;
  int violations = 0;     // uncorrelated identifiable but correlated not
  int indeterminate = 0;
  int both_identifiable = 0;
  int correlated_only = 0;  // the converse direction, tallied only
  int neither = 0;
};

ScanReport identifiability_scan(int trials, std::uint64_t seed, const SmallInstanceLimits& limits = {});

struct SimilarityPair {
  double corr_value = 0.0;
  double uncorr_value = 0.0;
};

/// Cosine similarity of the covariance columns of devices n and k in the
/// correlated and trace-matched-identity models.
SimilarityPair cosine_similarity_pair(const ActivityModel& model, std::size_t n, std::size_t k);

}  // namespace nfad

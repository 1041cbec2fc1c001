// SPDX-License-Identifier: Apache-2.0
//
// Signature sequences, activity patterns, received-signal realisations and
// the activity-weighted mean/covariance of the vectorised received block.
//
// Vectorisation convention: y = vec(Y) with Y of size L x M, so entry
// m*L + l belongs to antenna m and symbol time l, and the contribution of a
// channel h and sequence s is the Kronecker product h (x) s.
#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <vector>

#include "nfad/geometry.hpp"

namespace nfad {

/// The unit-modulus QPSK alphabet (+-1 +- j)/sqrt(2).
const std::array<cplx, 4>& sequence_alphabet();

struct SignatureSet {
  int devices = 0;
  int length = 0;
  int per_device = 1;
  std::vector<CVec> sequences;  // index n * per_device + q

  const CVec& at(int n, int q = 0) const { return sequences[static_cast<std::size_t>(n * per_device + q)]; }
};

SignatureSet generate_sequences(int n_devices, int seq_len, int seqs_per_device, std::uint64_t seed);

struct ActivityTruth {
  std::vector<int> active;  // sorted device indices
  std::vector<int> symbol;  // transmitted sequence per active device

  /// 0/1 indicator over the N*Q coordinates.
  RVec indicator(int n_devices, int per_device = 1) const;
};

/// K distinct devices drawn uniformly, each sending a uniform symbol in [0, Q).
ActivityTruth sample_activity(int n_devices, int n_active, int per_device, std::uint64_t seed);

/// One optimisation coordinate: a (device, sequence) pair sharing the
/// device's channel statistics with its sibling sequences.
struct CoordinateModel {
  std::shared_ptr<const ChannelStats> channel;
  CVec sequence;
  int device = 0;
  int symbol = 0;

  bool scaled_identity() const { return channel->kind == ChannelKind::scaled_identity; }
};

struct ActivityModel {
  int seq_len = 0;        // L
  int antenna_count = 0;  // M
  int per_device = 1;     // Q
  double noise_power = 1.0;
  std::vector<CoordinateModel> coords;

  std::size_t size() const { return coords.size(); }
  Index dim() const { return static_cast<Index>(seq_len) * antenna_count; }
  int devices() const { return static_cast<int>(coords.size()) / per_device; }
};

ActivityModel make_activity_model(const DevicePopulation& pop, const SignatureSet& seqs);

/// Copy of the model with every channel replaced by its trace-matched identity.
ActivityModel mismatched_model(const ActivityModel& model);

CMat kron_factor(const CMat& factor, const CVec& seq);  // F (x) s
CVec kron_mean(const CVec& mean, const CVec& seq);      // h (x) s

struct ReceivedSignal {
  CVec y;
  ActivityTruth truth;
  double noise_power = 1.0;
};

/// y = sum over active (n, q) of h_n (x) s_{n,q} + w with h_n = mean + F z.
ReceivedSignal synthesize_signal(const ActivityModel& model, const ActivityTruth& truth, std::uint64_t seed);

CVec mean_vector(const ActivityModel& model, const RVec& a);

/// Dense reference covariance; only for small problems and tests.
CMat covariance_matrix(const ActivityModel& model, const RVec& a);

}  // namespace nfad

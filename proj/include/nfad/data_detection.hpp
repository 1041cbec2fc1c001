// SPDX-License-Identifier: Apache-2.0
//
// Joint activity and data detection: each device owns Q = 2^J sequences and
// picks one to carry J bits. The relaxed problem has N*Q coordinates that
// share channel statistics per device; the per-device constraint
// sum_q a_{n,q} <= 1 is dropped and only reported.
#pragma once

#include <optional>
#include <vector>

#include "nfad/synthesis.hpp"

namespace nfad {

struct DataDetectionConfig {
  int bits = 0;            // J
  double threshold = 0.5;  // device active iff max_q a_{n,q} > threshold

  int set_size() const { return 1 << bits; }
  void validate() const;
};

/// Population + per-device sequence sets as an N*Q coordinate model.
ActivityModel expand_problem(const DevicePopulation& pop, const SignatureSet& seqs, const DataDetectionConfig& cfg);

struct DecodedMessage {
  int device = 0;
  bool active = false;
  std::optional<int> symbol;
  RVec soft_values;
};

std::vector<DecodedMessage> decode(const RVec& a_hat, const DataDetectionConfig& cfg);

struct DataErrorReport {
  double missed_detection = 0.0;  // missed actives / K
  double false_alarm = 0.0;       // false actives / (N - K)
  double symbol_error = 0.0;      // wrong symbol among detected actives
  int detected_actives = 0;
  int symbol_errors = 0;
};

DataErrorReport data_error_metrics(const std::vector<DecodedMessage>& decoded, const ActivityTruth& truth);

/// Per device: max(0, sum_q a_{n,q} - 1).
RVec combination_violation(const RVec& a_hat, int per_device);

}  // namespace nfad

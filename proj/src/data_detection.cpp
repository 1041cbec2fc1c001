// SPDX-License-Identifier: Apache-2.0
#include "nfad/data_detection.hpp"

#include <algorithm>

namespace nfad {

void DataDetectionConfig::validate() const {
  if (bits < 0 || bits > 16) throw ConfigError("bits per device out of range");
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw ConfigError("threshold outside [0,1]");
}

ActivityModel expand_problem(const DevicePopulation& pop, const SignatureSet& seqs, const DataDetectionConfig& cfg) {
  cfg.validate();
  if (seqs.per_device != cfg.set_size()) throw ConfigError("sequence set size differs from 2^J");
  return make_activity_model(pop, seqs);
}

std::vector<DecodedMessage> decode(const RVec& a_hat, const DataDetectionConfig& cfg) {
  cfg.validate();
  const int q = cfg.set_size();
  if (a_hat.size() % q != 0) throw ConfigError("activity length is not a multiple of 2^J");
  const int n = static_cast<int>(a_hat.size() / q);
  std::vector<DecodedMessage> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    DecodedMessage& msg = out[static_cast<std::size_t>(i)];
    msg.device = i;
    msg.soft_values = a_hat.segment(static_cast<Index>(i) * q, q);
    Index best = 0;
    for (Index k = 1; k < q; ++k)
      if (msg.soft_values(k) > msg.soft_values(best)) best = k;
    msg.active = msg.soft_values(best) > cfg.threshold;
    if (msg.active) msg.symbol = static_cast<int>(best);
  }
  return out;
}

DataErrorReport data_error_metrics(const std::vector<DecodedMessage>& decoded, const ActivityTruth& truth) {
  const int n = static_cast<int>(decoded.size());
  std::vector<int> sent(static_cast<std::size_t>(n), -1);
  for (std::size_t i = 0; i < truth.active.size(); ++i) {
    if (truth.active[i] < 0 || truth.active[i] >= n) throw ConfigError("truth index out of range");
    sent[static_cast<std::size_t>(truth.active[i])] = truth.symbol[i];
  }
  const int k = static_cast<int>(truth.active.size());
  int missed = 0, false_alarms = 0;
  DataErrorReport rep;
  for (int i = 0; i < n; ++i) {
    const auto& msg = decoded[static_cast<std::size_t>(i)];
    const int s = sent[static_cast<std::size_t>(i)];
    if (s >= 0 && !msg.active) ++missed;
    if (s < 0 && msg.active) ++false_alarms;
    if (s >= 0 && msg.active) {
      ++rep.detected_actives;
      if (*msg.symbol != s) ++rep.symbol_errors;
    }
  }
  rep.missed_detection = k > 0 ? static_cast<double>(missed) / k : 0.0;
  rep.false_alarm = n > k ? static_cast<double>(false_alarms) / (n - k) : 0.0;
  rep.symbol_error = rep.detected_actives > 0 ? static_cast<double>(rep.symbol_errors) / rep.detected_actives : 0.0;
  return rep;
}

RVec combination_violation(const RVec& a_hat, int per_device) {
  if (per_device < 1 || a_hat.size() % per_device != 0) throw ConfigError("bad sequence set size");
  const Index n = a_hat.size() / per_device;
  RVec v(n);
  for (Index i = 0; i < n; ++i) v(i) = std::max(0.0, a_hat.segment(i * per_device, per_device).sum() - 1.0);
  return v;
}

}  // namespace nfad

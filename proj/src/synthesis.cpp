// SPDX-License-Identifier: Apache-2.0
#include "nfad/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace nfad {

const std::array<cplx, 4>& sequence_alphabet() {
  static const double h = std::sqrt(0.5);
  static const std::array<cplx, 4> alphabet{cplx(h, h), cplx(-h, h), cplx(-h, -h), cplx(h, -h)};
  return alphabet;
}

SignatureSet generate_sequences(int n_devices, int seq_len, int seqs_per_device, std::uint64_t seed) {
  if (n_devices < 1 || seq_len < 1 || seqs_per_device < 1)
    throw ConfigError("sequence counts must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, 3);
  const auto& alphabet = sequence_alphabet();
  SignatureSet set;
  set.devices = n_devices;
  set.length = seq_len;
  set.per_device = seqs_per_device;
  set.sequences.resize(static_cast<std::size_t>(n_devices) * seqs_per_device);
  for (auto& s : set.sequences) {
    s.resize(seq_len);
    for (int l = 0; l < seq_len; ++l) s(l) = alphabet[static_cast<std::size_t>(pick(rng))];
  }
  return set;
}

RVec ActivityTruth::indicator(int n_devices, int per_device) const {
  RVec a = RVec::Zero(static_cast<Index>(n_devices) * per_device);
  for (std::size_t i = 0; i < active.size(); ++i) a(active[i] * per_device + symbol[i]) = 1.0;
  return a;
}

ActivityTruth sample_activity(int n_devices, int n_active, int per_device, std::uint64_t seed) {
  if (n_active < 0 || n_active > n_devices) throw ConfigError("active count out of range");
  if (per_device < 1) throw ConfigError("sequence set size must be positive");
  std::mt19937_64 rng(seed);
  std::vector<int> idx(static_cast<std::size_t>(n_devices));
  std::iota(idx.begin(), idx.end(), 0);
  // partial Fisher-Yates
  for (int i = 0; i < n_active; ++i) {
    std::uniform_int_distribution<int> u(i, n_devices - 1);
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(u(rng))]);
  }
  ActivityTruth t;
  t.active.assign(idx.begin(), idx.begin() + n_active);
  std::sort(t.active.begin(), t.active.end());
  std::uniform_int_distribution<int> sym(0, per_device - 1);
  for (int i = 0; i < n_active; ++i) t.symbol.push_back(sym(rng));
  return t;
}

ActivityModel make_activity_model(const DevicePopulation& pop, const SignatureSet& seqs) {
  if (static_cast<std::size_t>(seqs.devices) != pop.size())
    throw ConfigError("sequence set and population sizes differ");
  ActivityModel model;
  model.seq_len = seqs.length;
  model.antenna_count = pop.geometry.antenna_count;
  model.per_device = seqs.per_device;
  model.noise_power = pop.noise_power;
  model.coords.reserve(seqs.sequences.size());
  for (int n = 0; n < seqs.devices; ++n) {
    auto ch = std::make_shared<const ChannelStats>(pop.channels[static_cast<std::size_t>(n)]);
    if (ch->los_mean.size() != model.antenna_count) throw ConfigError("channel length differs from M");
    for (int q = 0; q < seqs.per_device; ++q) model.coords.push_back({ch, seqs.at(n, q), n, q});
  }
  return model;
}

ActivityModel mismatched_model(const ActivityModel& model) {
  ActivityModel out = model;
  std::shared_ptr<const ChannelStats> last_src, last_dst;
  for (auto& c : out.coords) {
    if (c.channel != last_src) {
      last_src = c.channel;
      last_dst = std::make_shared<const ChannelStats>(trace_matched_identity(*c.channel));
    }
    c.channel = last_dst;
  }
  return out;
}

CMat kron_factor(const CMat& factor, const CVec& seq) {
  const Index L = seq.size();
  CMat x(factor.rows() * L, factor.cols());
  for (Index j = 0; j < factor.cols(); ++j)
    for (Index m = 0; m < factor.rows(); ++m) x.col(j).segment(m * L, L) = factor(m, j) * seq;
  return x;
}

CVec kron_mean(const CVec& mean, const CVec& seq) {
  const Index L = seq.size();
  CVec u(mean.size() * L);
  for (Index m = 0; m < mean.size(); ++m) u.segment(m * L, L) = mean(m) * seq;
  return u;
}

ReceivedSignal synthesize_signal(const ActivityModel& model, const ActivityTruth& truth, std::uint64_t seed) {
  if (truth.active.size() != truth.symbol.size()) throw ConfigError("truth symbol list length mismatch");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, std::sqrt(0.5));
  auto cn = [&] { return cplx(gauss(rng), gauss(rng)); };

  const Index L = model.seq_len;
  const Index M = model.antenna_count;
  ReceivedSignal out;
  out.truth = truth;
  out.noise_power = model.noise_power;
  out.y = CVec::Zero(L * M);
  for (std::size_t i = 0; i < truth.active.size(); ++i) {
    const int n = truth.active[i];
    const int q = truth.symbol[i];
    if (n < 0 || n >= model.devices() || q < 0 || q >= model.per_device)
      throw ConfigError("active index out of range");
    const CoordinateModel& c = model.coords[static_cast<std::size_t>(n * model.per_device + q)];
    CVec z(c.channel->corr_rank());
    for (Index k = 0; k < z.size(); ++k) z(k) = cn();
    const CVec h = c.channel->los_mean + c.channel->corr_factor * z;
    out.y += kron_mean(h, c.sequence);
  }
  const double sd = std::sqrt(model.noise_power);
  for (Index i = 0; i < out.y.size(); ++i) out.y(i) += sd * cn();
  return out;
}

CVec mean_vector(const ActivityModel& model, const RVec& a) {
  CVec y = CVec::Zero(model.dim());
  for (std::size_t c = 0; c < model.size(); ++c) {
    const double w = a(static_cast<Index>(c));
    if (w != 0.0) y += w * kron_mean(model.coords[c].channel->los_mean, model.coords[c].sequence);
  }
  return y;
}

CMat covariance_matrix(const ActivityModel& model, const RVec& a) {
  CMat s = model.noise_power * CMat::Identity(model.dim(), model.dim());
  for (std::size_t c = 0; c < model.size(); ++c) {
    const double w = a(static_cast<Index>(c));
    if (w == 0.0) continue;
    const CMat x = kron_factor(model.coords[c].channel->corr_factor, model.coords[c].sequence);
    s.noalias() += w * x * x.adjoint();
  }
  return s;
}

}  // namespace nfad

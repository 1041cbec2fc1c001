// SPDX-License-Identifier: Apache-2.0
//
// Random small problems shared by the unit tests. Everything is built from
// Gaussian factors directly so the oracles do not go through the geometry code.
#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "nfad/analysis.hpp"
#include "nfad/synthesis.hpp"

namespace nfad::testing {

inline CVec random_cvec(std::mt19937_64& rng, Index n, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale * std::sqrt(0.5));
  CVec v(n);
  for (Index i = 0; i < n; ++i) v(i) = cplx(g(rng), g(rng));
  return v;
}

inline CMat random_cmat(std::mt19937_64& rng, Index rows, Index cols, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale * std::sqrt(0.5));
  CMat a(rows, cols);
  for (Index i = 0; i < a.size(); ++i) a.data()[i] = cplx(g(rng), g(rng));
  return a;
}

struct PopulationSpec {
  int devices = 6;
  int antennas = 3;
  int max_rank = 3;
  bool with_mean = true;
  double identity_fraction = 0.0;  // share of devices with R = g I
  double noise = 1.0;
  double scale = 1.0;
};

inline DevicePopulation random_population(std::mt19937_64& rng, const PopulationSpec& s) {
  DevicePopulation pop;
  pop.geometry.antenna_count = s.antennas;
  pop.noise_power = s.noise;
  std::uniform_int_distribution<int> rank(1, std::min(s.max_rank, s.antennas));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int n = 0; n < s.devices; ++n) {
    CVec mean = s.with_mean ? random_cvec(rng, s.antennas, s.scale) : CVec::Zero(s.antennas);
    if (u(rng) < s.identity_fraction) {
      pop.channels.push_back(make_scaled_identity(mean, s.scale * s.scale * (0.5 + u(rng)), s.antennas));
    } else {
      pop.channels.push_back(make_correlated(mean, random_cmat(rng, s.antennas, rank(rng), s.scale)));
    }
  }
  return pop;
}

inline ActivityModel random_model(std::uint64_t seed, const PopulationSpec& s, int seq_len, int per_device = 1) {
  std::mt19937_64 rng(seed);
  const DevicePopulation pop = random_population(rng, s);
  return make_activity_model(pop, generate_sequences(s.devices, seq_len, per_device, rng()));
}

inline RVec random_box_point(std::mt19937_64& rng, Index n, double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  RVec a(n);
  for (Index i = 0; i < n; ++i) a(i) = u(rng);
  return a;
}

inline double rel_fro(const CMat& a, const CMat& b) { return (a - b).norm() / std::max(b.norm(), 1e-300); }

// Dense oracles. The covariance is assembled entry by entry from R (x) s s^H
// and factorised by LU, independently of the library's Cholesky path.

inline CMat oracle_covariance(const ActivityModel& model, const RVec& a) {
  const Index L = model.seq_len, M = model.antenna_count;
  CMat s = model.noise_power * CMat::Identity(L * M, L * M);
  for (std::size_t c = 0; c < model.size(); ++c) {
    const CMat r = model.coords[c].channel->correlation();
    const CVec& q = model.coords[c].sequence;
    const CMat ss = q * q.adjoint();
    for (Index m = 0; m < M; ++m)
      for (Index mp = 0; mp < M; ++mp) s.block(m * L, mp * L, L, L) += a(static_cast<Index>(c)) * r(m, mp) * ss;
  }
  return s;
}

inline CVec oracle_mean(const ActivityModel& model, const RVec& a) {
  const Index L = model.seq_len, M = model.antenna_count;
  CVec u = CVec::Zero(L * M);
  for (std::size_t c = 0; c < model.size(); ++c)
    for (Index m = 0; m < M; ++m)
      for (Index l = 0; l < L; ++l)
        u(m * L + l) += a(static_cast<Index>(c)) * model.coords[c].channel->los_mean(m) * model.coords[c].sequence(l);
  return u;
}

inline double oracle_objective(const ActivityModel& model, const CVec& y, const RVec& a) {
  const CMat s = oracle_covariance(model, a);
  const Eigen::PartialPivLU<CMat> lu(s);
  double logdet = 0.0;
  for (Index i = 0; i < s.rows(); ++i) logdet += std::log(std::abs(lu.matrixLU()(i, i)));
  const CVec r = y - oracle_mean(model, a);
  return logdet + r.dot(lu.solve(r)).real();
}

/// tr(S^-1 XX^H) - r^H S^-1 XX^H S^-1 r - 2 Re(r^H S^-1 u) for every coordinate.
inline RVec oracle_gradient(const ActivityModel& model, const CVec& y, const RVec& a) {
  const Index L = model.seq_len, M = model.antenna_count;
  const CMat sinv = oracle_covariance(model, a).inverse();
  const CVec r = y - oracle_mean(model, a);
  const CVec w = sinv * r;
  RVec g(static_cast<Index>(model.size()));
  for (std::size_t c = 0; c < model.size(); ++c) {
    RVec e = RVec::Zero(static_cast<Index>(model.size()));
    e(static_cast<Index>(c)) = 1.0;
    const CMat xx = oracle_covariance(model, e) - model.noise_power * CMat::Identity(L * M, L * M);
    const CVec u = oracle_mean(model, e);
    g(static_cast<Index>(c)) = (sinv * xx).trace().real() - w.dot(xx * w).real() - 2.0 * w.dot(u).real();
  }
  return g;
}

// Extreme rays of {A x = 0, sigma_n x_n >= 0} have a support S on which the
// null space of A_S is one-dimensional with a generator of constant sign
// pattern sigma_S. The cone is nontrivial iff such a support exists.
inline bool brute_force_nontrivial(const IdentifiabilityInstance& inst) {
  const Index n = inst.constraints.cols();
  for (unsigned mask = 1; mask < (1u << n); ++mask) {
    std::vector<Index> cols;
    for (Index j = 0; j < n; ++j)
      if (mask & (1u << j)) cols.push_back(j);
    RMat sub(inst.constraints.rows(), static_cast<Index>(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k) sub.col(static_cast<Index>(k)) = inst.constraints.col(cols[k]);
    Eigen::FullPivLU<RMat> lu(sub);
    lu.setThreshold(1e-9);
    const RMat ker = lu.kernel();
    if (ker.cols() != 1 || ker.norm() == 0.0) continue;
    RVec v = ker.col(0) / ker.col(0).cwiseAbs().maxCoeff();
    bool pos = true, neg = true;
    for (std::size_t k = 0; k < cols.size(); ++k) {
      const double sv = inst.cone_signs[static_cast<std::size_t>(cols[k])] * v(static_cast<Index>(k));
      pos = pos && sv > 1e-7;
      neg = neg && sv < -1e-7;
    }
    if (pos || neg) return true;
  }
  return false;
}

}  // namespace nfad::testing

// SPDX-License-Identifier: Apache-2.0
#include "nfad/analysis.hpp"

#include <cmath>
#include <random>

#include "nfad/simplex.hpp"

namespace nfad {

namespace {

Index psd_rank(const CMat& a, double rel_tol = 1e-9) {
  Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (a + a.adjoint()), Eigen::EigenvaluesOnly);
  const RVec& ev = es.eigenvalues();
  const double top = ev.size() ? ev.maxCoeff() : 0.0;
  if (!(top > 0.0)) return 0;
  Index r = 0;
  for (Index i = 0; i < ev.size(); ++i)
    if (ev(i) > rel_tol * top) ++r;
  return r;
}

CMat identity_factor(const ChannelStats& ch) {
  const Index M = ch.los_mean.size();
  return std::sqrt(ch.trace() / static_cast<double>(M)) * CMat::Identity(M, M);
}

}  // namespace

bool regime_rule(Index n_devices, Index seq_len, Index antennas, Index max_rank) {
  return max_rank * n_devices < seq_len * antennas;
}

DimensionReport statistical_dimension(const ActivityModel& model, Index dense_limit) {
  const Index dim = model.dim();
  if (dim > dense_limit) throw ConfigError("model too large for dense dimension analysis");
  CMat sum_one = CMat::Zero(dim, dim);
  CMat sum_two = CMat::Zero(dim, dim);
  DimensionReport rep;
  for (const auto& c : model.coords) {
    const CMat x1 = kron_factor(c.channel->corr_factor, c.sequence);
    const CMat x2 = kron_factor(identity_factor(*c.channel), c.sequence);
    sum_one.noalias() += x1 * x1.adjoint();
    sum_two.noalias() += x2 * x2.adjoint();
    const Index r = c.scaled_identity() ? static_cast<Index>(model.antenna_count)
                                        : static_cast<Index>(numerical_rank(c.channel->corr_factor));
    rep.rank_sum += r;
    rep.max_rank = std::max(rep.max_rank, r);
  }
  rep.d_one = psd_rank(sum_one);
  rep.d_two = psd_rank(sum_two);
  const Index n = static_cast<Index>(model.size());
  rep.bound_two = dim;
  rep.bound_one = std::min(rep.max_rank * n, dim);
  rep.regime = rep.bound_one < rep.bound_two ? DimensionRegime::bound_one_smaller : DimensionRegime::equal;
  return rep;
}

// ---------------------------------------------------------------------------

IdentifiabilityInstance make_identifiability_instance(const ActivityModel& model, const RVec& truth,
                                                      CovarianceCase which) {
  const Index n = static_cast<Index>(model.size());
  if (truth.size() != n) throw ConfigError("truth length differs from coordinate count");
  const Index dim = model.dim();
  const Index cov_rows = dim * dim;
  RMat a(2 * (cov_rows + dim), n);
  IdentifiabilityInstance inst;
  for (Index j = 0; j < n; ++j) {
    const auto& c = model.coords[static_cast<std::size_t>(j)];
    const CMat f = which == CovarianceCase::correlated ? c.channel->corr_factor : identity_factor(*c.channel);
    const CMat x = kron_factor(f, c.sequence);
    const CMat psi = x * x.adjoint();
    const CVec u = kron_mean(c.channel->los_mean, c.sequence);
    Eigen::Map<const CVec> v(psi.data(), cov_rows);
    a.col(j).segment(0, cov_rows) = v.real();
    a.col(j).segment(cov_rows, cov_rows) = v.imag();
    a.col(j).segment(2 * cov_rows, dim) = u.real();
    a.col(j).segment(2 * cov_rows + dim, dim) = u.imag();
    inst.cone_signs.push_back(truth(j) > 0.5 ? -1 : 1);
  }
  inst.constraints = std::move(a);
  return inst;
}

RMat constraint_row_basis(const RMat& constraints, double rel_tol) {
  Eigen::JacobiSVD<RMat> svd(constraints, Eigen::ComputeFullV);
  const RVec& sv = svd.singularValues();
  Index k = 0;
  if (sv.size() && sv(0) > 0.0)
    for (Index i = 0; i < sv.size(); ++i)
      if (sv(i) > rel_tol * sv(0)) ++k;
  return svd.matrixV().leftCols(k).transpose();
}

IdentifiabilityResult identifiability_holds(const IdentifiabilityInstance& inst, double value_tol) {
  const Index n = inst.constraints.cols();
  const RMat basis = constraint_row_basis(inst.constraints);
  RVec sigma(n);
  for (Index j = 0; j < n; ++j) sigma(j) = inst.cone_signs[static_cast<std::size_t>(j)];
  const RMat a = basis * sigma.asDiagonal();
  const LpResult lp = maximize_boxed(RVec::Ones(n), a, RVec::Zero(a.rows()), RVec::Ones(n));
  IdentifiabilityResult res;
  if (lp.status != LpStatus::optimal) return res;
  res.lp_value = lp.value;
  if (lp.value > value_tol) {
    res.status = Identifiability::not_identifiable;
    res.witness = sigma.cwiseProduct(lp.x);
  } else {
    res.status = Identifiability::identifiable;
  }
  return res;
}

// ---------------------------------------------------------------------------

SmallInstance random_small_instance(std::uint64_t seed, const SmallInstanceLimits& limits) {
  std::mt19937_64 rng(seed);
  auto uniform_int = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  std::normal_distribution<double> gauss(0.0, std::sqrt(0.5));

  const int n = uniform_int(2, limits.max_devices);
  const int l = uniform_int(1, limits.max_seq_len);
  const int m = uniform_int(1, limits.max_antennas);
  const bool zero_mean = uniform_int(0, 1) == 0;

  DevicePopulation pop;
  pop.geometry.antenna_count = m;
  pop.noise_power = 1.0;
  for (int i = 0; i < n; ++i) {
    const int r = uniform_int(1, m);
    CMat f(m, r);
    CVec h(m);
    for (Index a = 0; a < f.size(); ++a) f.data()[a] = cplx(gauss(rng), gauss(rng));
    for (Index a = 0; a < m; ++a) h(a) = zero_mean ? cplx(0.0) : cplx(gauss(rng), gauss(rng));
    pop.channels.push_back(make_correlated(h, f));
  }
  const SignatureSet seqs = generate_sequences(n, l, 1, rng());
  SmallInstance inst{make_activity_model(pop, seqs), RVec::Zero(n)};
  const int k = uniform_int(0, n);
  inst.truth = sample_activity(n, k, 1, rng()).indicator(n);
  return inst;
}

ScanReport identifiability_scan(int trials, std::uint64_t seed, const SmallInstanceLimits& limits) {
  if (trials < 1) throw ConfigError("scan needs at least one trial");
  ScanReport rep;
  for (int t = 0; t < trials; ++t) {
    const SmallInstance s = random_small_instance(derive_seed(seed, static_cast<std::uint64_t>(t)), limits);
    const auto corr = identifiability_holds(make_identifiability_instance(s.model, s.truth, CovarianceCase::correlated));
    const auto uncorr =
        identifiability_holds(make_identifiability_instance(s.model, s.truth, CovarianceCase::uncorrelated));
    ++rep.trials;
    if (corr.status == Identifiability::indeterminate || uncorr.status == Identifiability::indeterminate) {
      ++rep.indeterminate;
      continue;
    }
    const bool ci = corr.status == Identifiability::identifiable;
    const bool ui = uncorr.status == Identifiability::identifiable;
    if (ui && !ci) ++rep.violations;
    else if (ui && ci) ++rep.both_identifiable;
    else if (ci) ++rep.correlated_only;
    else ++rep.neither;
  }
  return rep;
}

SimilarityPair cosine_similarity_pair(const ActivityModel& model, std::size_t n, std::size_t k) {
  if (n == k) throw ConfigError("cosine similarity needs two distinct devices");
  if (n >= model.size() || k >= model.size()) throw ConfigError("device index out of range");
  const auto& a = model.coords[n];
  const auto& b = model.coords[k];
  const CMat ra = a.channel->correlation();
  const CMat rb = b.channel->correlation();
  const double na = ra.norm(), nb = rb.norm();
  const double sa = a.sequence.norm(), sb = b.sequence.norm();
  if (na == 0.0 || nb == 0.0 || sa == 0.0 || sb == 0.0) throw ConfigError("zero-norm input to cosine similarity");
  const double seq = std::abs(a.sequence.dot(b.sequence)) / (sa * sb);
  SimilarityPair p;
  p.uncorr_value = seq * seq;
  p.corr_value = (ra.adjoint() * rb).trace().real() / (na * nb) * p.uncorr_value;
  return p;
}

}  // namespace nfad

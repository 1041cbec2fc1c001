// SPDX-License-Identifier: Apache-2.0
#include "nfad/kernels.hpp"

#ifdef NFAD_HAVE_OPENMP
#include <omp.h>
#endif

namespace nfad::kernels {

namespace {
constexpr Index kPanel = 32;
}

int thread_count() {
#ifdef NFAD_HAVE_OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void apply_to_sequence_serial(const CMat& s, const CVec& seq, CMat& out) {
  const Index L = seq.size();
  const Index M = s.cols() / L;
  out.resize(s.rows(), M);
  for (Index m = 0; m < M; ++m)
    for (Index i = 0; i < s.rows(); ++i) {
      cplx acc = 0.0;
      for (Index l = 0; l < L; ++l) acc += s(i, m * L + l) * seq(l);
      out(i, m) = acc;
    }
}

void apply_to_sequence(const CMat& s, const CVec& seq, CMat& out) {
  const Index L = seq.size();
  const Index M = s.cols() / L;
  out.resize(s.rows(), M);
#ifdef NFAD_HAVE_OPENMP
#pragma omp parallel for schedule(static) if (s.rows() * s.cols() > 16384)
#endif
  for (Index m = 0; m < M; ++m) out.col(m).noalias() = s.middleCols(m * L, L) * seq;
}

void hermitian_rank_update_serial(CMat& s, const CMat& w, const CMat& c) {
  const CMat v = w * c;
  s.noalias() -= v * w.adjoint();
  s = 0.5 * (s + s.adjoint()).eval();
}

void hermitian_rank_update(CMat& s, const CMat& w, const CMat& c) {
  const Index n = s.rows();
  const CMat v = w * c;
  const Index panels = (n + kPanel - 1) / kPanel;
#ifdef NFAD_HAVE_OPENMP
#pragma omp parallel for schedule(dynamic, 1) if (n > 128)
#endif
  for (Index p = 0; p < panels; ++p) {
    const Index j0 = p * kPanel;
    const Index jb = std::min(kPanel, n - j0);
    // diagonal block: only its lower triangle
    s.block(j0, j0, jb, jb).triangularView<Eigen::Lower>() -=
        v.middleRows(j0, jb) * w.middleRows(j0, jb).adjoint();
    const Index below = n - j0 - jb;
    if (below > 0)
      s.block(j0 + jb, j0, below, jb).noalias() -= v.bottomRows(below) * w.middleRows(j0, jb).adjoint();
  }
  for (Index j = 0; j < n; ++j) {
    s(j, j) = cplx(s(j, j).real(), 0.0);
    for (Index i = j + 1; i < n; ++i) s(j, i) = std::conj(s(i, j));
  }
}

}  // namespace nfad::kernels

// SPDX-License-Identifier: Apache-2.0
//
// Dense hot loops of the coordinate updates. Each has an OpenMP version
// used by the solvers and a serial reference used by tests and benchmarks.
// The parallel versions assign every output element to exactly one thread,
// so results do not depend on the thread count.
#pragma once

#include "nfad/types.hpp"

namespace nfad::kernels {

/// out = S (I_M (x) s), i.e. column m is S[:, m*L : (m+1)*L] * s.
void apply_to_sequence(const CMat& s, const CVec& seq, CMat& out);
void apply_to_sequence_serial(const CMat& s, const CVec& seq, CMat& out);

/// S -= W C W^H for Hermitian S and C. Only the lower triangle is computed;
/// the upper triangle is overwritten with its conjugate mirror.
void hermitian_rank_update(CMat& s, const CMat& w, const CMat& c);
void hermitian_rank_update_serial(CMat& s, const CMat& w, const CMat& c);

/// Number of threads the parallel kernels will use (1 without OpenMP).
int thread_count();

}  // namespace nfad::kernels

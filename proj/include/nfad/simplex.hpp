// SPDX-License-Identifier: Apache-2.0
//
// Dense two-phase primal simplex with Bland's rule for small problems
//   maximise c^T x  subject to  A x = b,  0 <= x <= upper.
#pragma once

#include <string>

#include "nfad/types.hpp"

namespace nfad {

enum class LpStatus { optimal, infeasible, unbounded, iteration_limit };
std::string to_string(LpStatus s);

struct LpResult {
  LpStatus status = LpStatus::iteration_limit;
  RVec x;
  double value = 0.0;
  int iterations = 0;
};

LpResult maximize_boxed(const RVec& c, const RMat& a, const RVec& b, const RVec& upper, double tol = 1e-9,
                        int max_iterations = 10000);

}  // namespace nfad

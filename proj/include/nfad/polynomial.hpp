// SPDX-License-Identifier: Apache-2.0
//
// Real polynomials in the coefficient basis, lowest degree first.
#pragma once

#include <complex>
#include <vector>

namespace nfad {

using Poly = std::vector<double>;

Poly poly_add(const Poly& a, const Poly& b);
Poly poly_sub(const Poly& a, const Poly& b);
Poly poly_mul(const Poly& a, const Poly& b);
Poly poly_scale(const Poly& a, double s);
Poly poly_derivative(const Poly& a);
double poly_eval(const Poly& a, double x);  // Horner

/// Degree after dropping exactly-zero leading coefficients (-1 for the zero polynomial).
int poly_degree(const Poly& a);

/// Drops leading coefficients whose term stays below rel_tol * sum |a_i| r^i
/// for |x| <= radius, i.e. below evaluation rounding on that disc.
Poly trim_leading(const Poly& a, double radius, double rel_tol = 1e-14);

/// Real roots from the eigenvalues of the companion matrix, optionally balanced
/// first. A root counts as real when |Im| <= imag_tol * (1 + |Re|). Sorted ascending.
std::vector<double> real_roots(const Poly& a, double imag_tol = 1e-9, bool balanced = true);

/// All roots from the balanced companion matrix.
std::vector<std::complex<double>> complex_roots(const Poly& a);

/// Real roots of c3 x^3 + c2 x^2 + c1 x + c0 by the cubic formula, with
/// lower-degree fallbacks when leading coefficients vanish. Each root is
/// polished by a few Newton steps on the original cubic.
std::vector<double> real_cubic_roots(double c3, double c2, double c1, double c0);

}  // namespace nfad

// SPDX-License-Identifier: Apache-2.0
#include "nfad/polynomial.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>

namespace nfad {

Poly poly_add(const Poly& a, const Poly& b) {
  Poly r(std::max(a.size(), b.size()), 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) r[i] += a[i];
  for (std::size_t i = 0; i < b.size(); ++i) r[i] += b[i];
  return r;
}

Poly poly_sub(const Poly& a, const Poly& b) { return poly_add(a, poly_scale(b, -1.0)); }

Poly poly_mul(const Poly& a, const Poly& b) {
  if (a.empty() || b.empty()) return {};
  Poly r(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) r[i + j] += a[i] * b[j];
  return r;
}

Poly poly_scale(const Poly& a, double s) {
  Poly r(a);
  for (double& x : r) x *= s;
  return r;
}

Poly poly_derivative(const Poly& a) {
  if (a.size() <= 1) return {0.0};
  Poly r(a.size() - 1);
  for (std::size_t i = 1; i < a.size(); ++i) r[i - 1] = static_cast<double>(i) * a[i];
  return r;
}

double poly_eval(const Poly& a, double x) {
  double acc = 0.0;
  for (auto it = a.rbegin(); it != a.rend(); ++it) acc = acc * x + *it;
  return acc;
}

int poly_degree(const Poly& a) {
  int d = static_cast<int>(a.size()) - 1;
  while (d >= 0 && a[static_cast<std::size_t>(d)] == 0.0) --d;
  return d;
}

Poly trim_leading(const Poly& a, double radius, double rel_tol) {
  Poly r = a;
  r.resize(static_cast<std::size_t>(std::max(poly_degree(a), 0) + 1));
  if (r.empty()) return r;
  double scale = 0.0, pw = 1.0;
  for (double c : r) {
    scale += std::abs(c) * pw;
    pw *= radius;
  }
  while (r.size() > 1 && std::abs(r.back()) * std::pow(radius, static_cast<double>(r.size() - 1)) <= rel_tol * scale)
    r.pop_back();
  return r;
}

namespace {

// Parlett-Reinsch diagonal similarity with powers of two, as in LAPACK gebal.
void balance(Eigen::MatrixXd& a) {
  const Eigen::Index n = a.rows();
  constexpr double radix = 2.0;
  bool done = false;
  for (int pass = 0; pass < 100 && !done; ++pass) {
    done = true;
    for (Eigen::Index i = 0; i < n; ++i) {
      double c = 0.0, r = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j == i) continue;
        c += std::abs(a(j, i));
        r += std::abs(a(i, j));
      }
      if (c == 0.0 || r == 0.0) continue;
      const double s = c + r;
      double f = 1.0, g = r / radix;
      while (c < g) {
        f *= radix;
        c *= radix * radix;
      }
      g = r * radix;
      while (c > g) {
        f /= radix;
        c /= radix * radix;
      }
      if ((c + r) / f < 0.95 * s) {
        done = false;
        a.row(i) /= f;
        a.col(i) *= f;
      }
    }
  }
}

}  // namespace

namespace {

std::vector<std::complex<double>> companion_eigenvalues(const Poly& a, bool balanced) {
  const int n = poly_degree(a);
  std::vector<std::complex<double>> out;
  if (n <= 0) return out;
  if (n == 1) {
    out.emplace_back(-a[0] / a[1], 0.0);
    return out;
  }
  const double lead = a[static_cast<std::size_t>(n)];
  Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) comp(i, i - 1) = 1.0;
  for (int i = 0; i < n; ++i) comp(i, n - 1) = -a[static_cast<std::size_t>(i)] / lead;
  if (balanced) balance(comp);
  Eigen::EigenSolver<Eigen::MatrixXd> es(comp, false);
  if (es.info() != Eigen::Success) return out;
  for (int i = 0; i < n; ++i) out.push_back(es.eigenvalues()(i));
  return out;
}

}  // namespace

std::vector<std::complex<double>> complex_roots(const Poly& a) { return companion_eigenvalues(a, true); }

std::vector<double> real_roots(const Poly& a, double imag_tol, bool balanced) {
  std::vector<double> out;
  for (const auto& z : companion_eigenvalues(a, balanced))
    if (std::isfinite(z.real()) && std::abs(z.imag()) <= imag_tol * (1.0 + std::abs(z.real()))) out.push_back(z.real());
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

void newton_polish(double c3, double c2, double c1, double c0, double& x) {
  for (int it = 0; it < 3; ++it) {
    const double f = ((c3 * x + c2) * x + c1) * x + c0;
    const double df = (3.0 * c3 * x + 2.0 * c2) * x + c1;
    if (df == 0.0 || !std::isfinite(df)) return;
    const double nx = x - f / df;
    if (!std::isfinite(nx)) return;
    const double fn = ((c3 * nx + c2) * nx + c1) * nx + c0;
    if (std::abs(fn) >= std::abs(f)) return;
    x = nx;
  }
}

}  // namespace

std::vector<double> real_cubic_roots(double c3, double c2, double c1, double c0) {
  std::vector<double> roots;
  if (c3 == 0.0) {
    if (c2 == 0.0) {
      if (c1 != 0.0) roots.push_back(-c0 / c1);
      return roots;
    }
    const double disc = c1 * c1 - 4.0 * c2 * c0;
    if (disc < 0.0) return roots;
    const double sq = std::sqrt(disc);
    const double q = -0.5 * (c1 + std::copysign(sq, c1));
    if (q != 0.0) {
      roots.push_back(q / c2);
      roots.push_back(c0 / q);
    } else {
      roots.push_back(0.0);
    }
    std::sort(roots.begin(), roots.end());
    return roots;
  }

  const double b = c2 / c3, c = c1 / c3, d = c0 / c3;
  const double p = c - b * b / 3.0;
  const double q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
  const double disc = 0.25 * q * q + p * p * p / 27.0;
  const double shift = -b / 3.0;
  if (disc > 0.0) {
    const double sq = std::sqrt(disc);
    roots.push_back(std::cbrt(-0.5 * q + sq) + std::cbrt(-0.5 * q - sq) + shift);
  } else if (p == 0.0) {
    roots.push_back(shift);
  } else {
    const double m = 2.0 * std::sqrt(-p / 3.0);
    const double arg = std::clamp(3.0 * q / (p * m), -1.0, 1.0);
    const double theta = std::acos(arg) / 3.0;
    for (int k = 0; k < 3; ++k) roots.push_back(m * std::cos(theta - 2.0 * std::numbers::pi * k / 3.0) + shift);
  }
  for (double& x : roots) newton_polish(c3, c2, c1, c0, x);
  std::sort(roots.begin(), roots.end());
  return roots;
}

}  // namespace nfad

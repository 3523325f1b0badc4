#pragma once

#include "spingeom/common.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <vector>

namespace spingeom::testing {

/// Eigenvalues of a unitary matrix by direct dense diagonalization.
inline std::vector<Complex> brute_force_eigenvalues(const CMatrix& u) {
  Eigen::ComplexEigenSolver<CMatrix> es(u);
  std::vector<Complex> out;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) out.push_back(es.eigenvalues()(i));
  return out;
}

/// Greedy multiset match of points on the unit circle; returns the worst distance.
inline double multiset_distance(std::vector<Complex> a, std::vector<Complex> b) {
  if (a.size() != b.size()) return INFINITY;
  double worst = 0.0;
  for (const auto& x : a) {
    auto it = std::min_element(b.begin(), b.end(), [&](const Complex& p, const Complex& q) {
      return std::abs(p - x) < std::abs(q - x);
    });
    worst = std::max(worst, std::abs(*it - x));
    b.erase(it);
  }
  return worst;
}

inline int count_near(const std::vector<Complex>& v, Complex target, double tol) {
  return static_cast<int>(std::count_if(v.begin(), v.end(), [&](const Complex& z) { return std::abs(z - target) <= tol; }));
}

}  // namespace spingeom::testing

#pragma once

// Matrix model of the complex Clifford algebra Cl(n) with e_i^2 = -1, the
// spinor module of Spin(n), and eigenvalues of maximal-torus elements.

#include "spingeom/common.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace spingeom {

struct CliffordOptions {
  int max_dimension = 20;  // k = 2^10 dense complex matrices at the cap
};

namespace detail {

inline CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline CMatrix pauli(int which) {
  const Complex i{0.0, 1.0};
  CMatrix s(2, 2);
  switch (which) {
    case 1: s << 0.0, 1.0, 1.0, 0.0; break;
    case 2: s << 0.0, -i, i, 0.0; break;
    default: s << 1.0, 0.0, 0.0, -1.0; break;
  }
  return s;
}

/// Principal angle in (-pi, pi].
inline double wrap_angle(double theta) {
  double w = std::remainder(theta, 2.0 * kPi);
  if (w <= -kPi) w += 2.0 * kPi;
  return w;
}

}  // namespace detail

/// Skew-adjoint unitary generators gamma_1..gamma_n of Cl(n) acting on C^k,
/// k = 2^floor(n/2). Immutable; copies share storage.
class GammaRep {
 public:
  int dimension() const { return n_; }
  int spinor_dim() const { return k_; }
  int torus_rank() const { return n_ / 2; }

  /// gamma_{i+1}, zero-based.
  const CMatrix& gamma(int i) const { return (*gammas_)[static_cast<std::size_t>(i)]; }
  std::span<const CMatrix> gammas() const { return *gammas_; }

  /// Torus generator A_{j+1} = gamma_{2j+1} gamma_{2j+2}, zero-based j.
  CMatrix torus_generator(int j) const { return gamma(2 * j) * gamma(2 * j + 1); }

  /// max_{i,j} || gamma_i gamma_j + gamma_j gamma_i + 2 delta_ij I ||_max
  double clifford_defect() const {
    double worst = 0.0;
    const CMatrix id = CMatrix::Identity(k_, k_);
    for (int i = 0; i < n_; ++i)
      for (int j = i; j < n_; ++j) {
        CMatrix r = gamma(i) * gamma(j) + gamma(j) * gamma(i);
        if (i == j) r += 2.0 * id;
        worst = std::max(worst, r.cwiseAbs().maxCoeff());
      }
    return worst;
  }

 private:
  GammaRep(int n, std::vector<CMatrix> g)
      : n_(n), k_(spinor_rank(n)), gammas_(std::make_shared<const std::vector<CMatrix>>(std::move(g))) {}

  friend GammaRep build_gamma_rep(int n, const CliffordOptions& opts);

  int n_;
  int k_;
  std::shared_ptr<const std::vector<CMatrix>> gammas_;
};

/// Recursive tensor doubling: the even case 2m+2 is built from 2m as
///   gamma_j (x) sigma_3,  I (x) i sigma_1,  I (x) i sigma_2,
/// and odd n = 2m+1 appends i^{m+1} gamma_1 ... gamma_{2m}.
inline GammaRep build_gamma_rep(int n, const CliffordOptions& opts = {}) {
  if (n < 1) throw InvalidArgument("build_gamma_rep: dimension must be >= 1");
  if (n > opts.max_dimension)
    throw InvalidArgument("build_gamma_rep: dimension " + std::to_string(n) + " exceeds memory cap " +
                          std::to_string(opts.max_dimension));
  const Complex i{0.0, 1.0};
  const int m = n / 2;

  std::vector<CMatrix> g;
  if (m >= 1) {
    g.push_back(i * detail::pauli(1));
    g.push_back(i * detail::pauli(2));
    for (int level = 2; level <= m; ++level) {
      const Eigen::Index k = g.front().rows();
      const CMatrix s3 = detail::pauli(3);
      for (auto& gj : g) gj = detail::kron(gj, s3);
      const CMatrix id = CMatrix::Identity(k, k);
      g.push_back(detail::kron(id, i * detail::pauli(1)));
      g.push_back(detail::kron(id, i * detail::pauli(2)));
    }
  }
  if (n % 2 == 1) {
    const Eigen::Index k = m >= 1 ? g.front().rows() : 1;
    CMatrix omega = CMatrix::Identity(k, k);
    for (const auto& gj : g) omega = omega * gj;
    Complex c{1.0, 0.0};
    for (int p = 0; p < m + 1; ++p) c *= i;
    g.push_back(c * omega);
  }
  return GammaRep(n, std::move(g));
}

/// Unitary element of Spin(n) in the spinor representation.
struct SpinElement {
  GammaRep rep;
  CMatrix matrix;
  std::optional<std::vector<double>> torus_params;  // t_1..t_m when on the standard maximal torus

  /// Wraps an arbitrary unitary; rejects non-unitary input.
  static SpinElement from_matrix(const GammaRep& rep, CMatrix u, double tol = 1e-10) {
    if (u.rows() != rep.spinor_dim() || u.cols() != rep.spinor_dim())
      throw InvalidArgument("SpinElement: matrix size does not match spinor dimension");
    const CMatrix d = u.adjoint() * u - CMatrix::Identity(u.rows(), u.cols());
    if (d.cwiseAbs().maxCoeff() > tol) throw InvalidArgument("SpinElement: matrix is not unitary");
    return SpinElement{rep, std::move(u), std::nullopt};
  }
};

/// prod_j (cos t_j I + sin t_j A_j) = prod_j exp(t_j A_j).
inline SpinElement torus_element(const GammaRep& rep, std::span<const double> t) {
  const int m = rep.torus_rank();
  if (static_cast<int>(t.size()) != m)
    throw InvalidArgument("torus_element: expected " + std::to_string(m) + " angles, got " +
                          std::to_string(t.size()));
  const int k = rep.spinor_dim();
  const CMatrix id = CMatrix::Identity(k, k);
  CMatrix g = id;
  for (int j = 0; j < m; ++j) g = g * (std::cos(t[j]) * id + std::sin(t[j]) * rep.torus_generator(j));
  return SpinElement{rep, std::move(g), std::vector<double>(t.begin(), t.end())};
}

/// An eigenvalue e^{i angle} of a unitary matrix with its multiplicity.
struct UnitEigenvalue {
  double angle;  // principal value in (-pi, pi]
  int multiplicity;
  Complex value() const { return std::polar(1.0, angle); }
};

inline constexpr double kAngularTolerance = 1e-8;

/// The 2^m angles sum_j s_j t_j, one per sign pattern s in {+-1}^m (bit j set = minus).
inline std::vector<double> closed_form_spin_angles(std::span<const double> t) {
  const int m = static_cast<int>(t.size());
  std::vector<double> out;
  out.reserve(std::size_t{1} << m);
  for (unsigned s = 0; s < (1u << m); ++s) {
    double a = 0.0;
    for (int j = 0; j < m; ++j) a += ((s >> j) & 1u) ? -t[j] : t[j];
    out.push_back(detail::wrap_angle(a));
  }
  return out;
}

/// Eigenvalue angles of a unitary matrix by dense diagonalization.
inline std::vector<double> numerical_spin_angles(const CMatrix& u) {
  Eigen::ComplexEigenSolver<CMatrix> es(u, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) throw NumericalFailure("spin_eigenvalues: eigensolver did not converge");
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(u.rows()));
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) out.push_back(std::arg(es.eigenvalues()(i)));
  return out;
}

/// Aggregates angles on the circle into clusters of width tol.
inline std::vector<UnitEigenvalue> cluster_angles(std::vector<double> angles, double tol = kAngularTolerance) {
  std::vector<UnitEigenvalue> out;
  if (angles.empty()) return out;
  for (auto& a : angles) a = detail::wrap_angle(a);
  std::sort(angles.begin(), angles.end());
  double start = angles.front();
  double sum = 0.0;
  int count = 0;
  for (double a : angles) {
    if (count > 0 && a - start > tol) {
      out.push_back({sum / count, count});
      start = a;
      sum = 0.0;
      count = 0;
    }
    sum += a;
    ++count;
  }
  out.push_back({sum / count, count});
  // Clusters straddling the branch cut at +-pi.
  if (out.size() > 1 && (out.front().angle + 2.0 * kPi) - out.back().angle <= tol) {
    out.back().multiplicity += out.front().multiplicity;
    out.back().angle = kPi;
    out.erase(out.begin());
  }
  return out;
}

/// Eigenvalues of g with multiplicities: closed form on torus elements, dense
/// diagonalization otherwise.
inline std::vector<UnitEigenvalue> spin_eigenvalues(const SpinElement& g, double tol = kAngularTolerance) {
  if (g.torus_params) return cluster_angles(closed_form_spin_angles(*g.torus_params), tol);
  return cluster_angles(numerical_spin_angles(g.matrix), tol);
}

struct EigenvalueOneCount {
  int multiplicity = 0;
  bool identity = false;  // g = 1: multiplicity is 2^m and the bound does not apply
  int bound = 0;          // 2^{m-1}
  bool within_bound() const { return identity || multiplicity <= bound; }
};

inline EigenvalueOneCount eigenvalue_one_multiplicity(const SpinElement& g, double tol = kAngularTolerance) {
  const int m = g.rep.torus_rank();
  EigenvalueOneCount out;
  out.bound = m >= 1 ? (1 << (m - 1)) : 0;
  const std::vector<double> angles =
      g.torus_params ? closed_form_spin_angles(*g.torus_params) : numerical_spin_angles(g.matrix);
  for (double a : angles)
    if (std::abs(detail::wrap_angle(a)) <= tol) ++out.multiplicity;
  out.identity = out.multiplicity == g.rep.spinor_dim();
  return out;
}

}  // namespace spingeom

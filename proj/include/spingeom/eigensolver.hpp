#pragma once

// Lowest eigenpairs of a sparse Hermitian matrix by shift-inverted block
// subspace iteration with Rayleigh-Ritz on the original matrix. Every
// returned pair carries its residual ||Av - lambda v|| for unit v.

#include "spingeom/common.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <random>
#include <vector>

namespace spingeom {

using SparseCMatrix = Eigen::SparseMatrix<Complex>;

struct EigensolverOptions {
  double residual_tol = 1e-8;
  int max_iterations = 400;
  std::uint64_t seed = 1;           // starting block
  Eigen::Index dense_threshold = 512;  // sizes up to this use dense diagonalization
  Eigen::Index block_extra = 16;    // guard vectors beyond the requested count
};

struct EigenDecomposition {
  std::vector<double> values;     // ascending
  CMatrix vectors;                // unit columns
  std::vector<double> residuals;  // ||A v - lambda v||
  int iterations = 0;
  std::string method;             // "dense" or "shift-invert subspace"

  double max_residual() const {
    double r = 0.0;
    for (double x : residuals) r = std::max(r, x);
    return r;
  }
};

class EigensolverError : public NumericalFailure {
 public:
  EigensolverError(const std::string& what, std::vector<double> residuals)
      : NumericalFailure(what), residuals_(std::move(residuals)) {}
  const std::vector<double>& residuals() const { return residuals_; }

 private:
  std::vector<double> residuals_;
};

/// max |A - A^*| relative to max |A|.
inline double hermitian_defect(const SparseCMatrix& a) {
  const SparseCMatrix diff = a - SparseCMatrix(a.adjoint());
  double num = 0.0, den = 0.0;
  for (int k = 0; k < diff.outerSize(); ++k)
    for (SparseCMatrix::InnerIterator it(diff, k); it; ++it) num = std::max(num, std::abs(it.value()));
  for (int k = 0; k < a.outerSize(); ++k)
    for (SparseCMatrix::InnerIterator it(a, k); it; ++it) den = std::max(den, std::abs(it.value()));
  return den == 0.0 ? 0.0 : num / den;
}

namespace detail {

inline std::vector<double> column_residuals(const SparseCMatrix& a, const CMatrix& x, const std::vector<double>& theta,
                                            Eigen::Index count) {
  const CMatrix ax = a * x.leftCols(count);
  std::vector<double> out(static_cast<std::size_t>(count));
  for (Eigen::Index j = 0; j < count; ++j)
    out[static_cast<std::size_t>(j)] = (ax.col(j) - theta[static_cast<std::size_t>(j)] * x.col(j)).norm();
  return out;
}

inline EigenDecomposition dense_lowest(const SparseCMatrix& a, Eigen::Index count) {
  const CMatrix dense = CMatrix(a);
  Eigen::SelfAdjointEigenSolver<CMatrix> es(dense);
  if (es.info() != Eigen::Success) throw EigensolverError("dense eigensolver failed", {});
  EigenDecomposition out;
  out.method = "dense";
  out.vectors = es.eigenvectors().leftCols(count);
  for (Eigen::Index j = 0; j < count; ++j) out.values.push_back(es.eigenvalues()(j));
  out.residuals = column_residuals(a, out.vectors, out.values, count);
  return out;
}

// Lower bound on the spectrum from Gershgorin discs.
inline double gershgorin_lower(const SparseCMatrix& a) {
  std::vector<double> diag(static_cast<std::size_t>(a.rows()), 0.0), off(static_cast<std::size_t>(a.rows()), 0.0);
  for (int k = 0; k < a.outerSize(); ++k)
    for (SparseCMatrix::InnerIterator it(a, k); it; ++it) {
      const auto r = static_cast<std::size_t>(it.row());
      if (it.row() == it.col())
        diag[r] = it.value().real();
      else
        off[r] += std::abs(it.value());
    }
  double lo = INFINITY;
  for (std::size_t i = 0; i < diag.size(); ++i) lo = std::min(lo, diag[i] - off[i]);
  return lo;
}

}  // namespace detail

/// The `count` smallest eigenvalues of the Hermitian matrix a, each certified to
/// residual_tol. Throws EigensolverError (with the last residuals) otherwise.
inline EigenDecomposition lowest_eigenpairs(const SparseCMatrix& a, Eigen::Index count,
                                            const EigensolverOptions& opts = {}) {
  const Eigen::Index n = a.rows();
  if (a.cols() != n) throw InvalidArgument("lowest_eigenpairs: matrix must be square");
  if (count < 1 || count > n)
    throw InvalidArgument("lowest_eigenpairs: count " + std::to_string(count) + " outside [1, " + std::to_string(n) + "]");
  if (hermitian_defect(a) > 1e-12) throw InvalidArgument("lowest_eigenpairs: matrix is not Hermitian");

  if (n <= opts.dense_threshold) {
    auto out = detail::dense_lowest(a, count);
    if (out.max_residual() > opts.residual_tol)
      throw EigensolverError("dense eigensolver residual above tolerance", out.residuals);
    return out;
  }

  const Eigen::Index p = std::min(n, count + std::max(opts.block_extra, count));
  double scale = 0.0;
  for (int k = 0; k < a.outerSize(); ++k)
    for (SparseCMatrix::InnerIterator it(a, k); it; ++it)
      if (it.row() == it.col()) scale = std::max(scale, std::abs(it.value()));
  const double shift = std::min(detail::gershgorin_lower(a), 0.0) - 1e-6 * std::max(scale, 1.0);

  SparseCMatrix id(n, n);
  id.setIdentity();
  const SparseCMatrix shifted = a - shift * id;
  Eigen::SimplicialLDLT<SparseCMatrix> ldlt(shifted);
  if (ldlt.info() != Eigen::Success) throw EigensolverError("shifted factorization failed", {});

  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> nd;
  CMatrix x(n, p);
  for (Eigen::Index j = 0; j < p; ++j)
    for (Eigen::Index i = 0; i < n; ++i) x(i, j) = Complex{nd(rng), nd(rng)};

  EigenDecomposition out;
  out.method = "shift-invert subspace";
  std::vector<double> theta(static_cast<std::size_t>(p));
  for (int it = 1; it <= opts.max_iterations; ++it) {
    const CMatrix y = ldlt.solve(x);
    Eigen::HouseholderQR<CMatrix> qr(y);
    x = qr.householderQ() * CMatrix::Identity(n, p);
    CMatrix t = x.adjoint() * (a * x);
    t = 0.5 * (t + t.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<CMatrix> es(t);
    x = x * es.eigenvectors();
    for (Eigen::Index j = 0; j < p; ++j) theta[static_cast<std::size_t>(j)] = es.eigenvalues()(j);
    out.residuals = detail::column_residuals(a, x, theta, count);
    out.iterations = it;
    if (out.max_residual() <= opts.residual_tol) {
      out.values.assign(theta.begin(), theta.begin() + count);
      out.vectors = x.leftCols(count);
      return out;
    }
  }
  throw EigensolverError("subspace iteration did not converge in " + std::to_string(opts.max_iterations) +
                             " iterations (max residual " + std::to_string(out.max_residual()) + ")",
                         out.residuals);
}

}  // namespace spingeom

#pragma once

// Families of r sections of a rank-k complex bundle sampled on a regular mesh,
// their pointwise overlap defect, and pointwise orthonormalization.

#include "spingeom/common.hpp"
#include "spingeom/parallel.hpp"

#include <Eigen/Eigenvalues>
#include <nlohmann/json.hpp>

#include <cmath>
#include <numeric>
#include <vector>

namespace spingeom {

struct SectionFamily {
  std::vector<std::size_t> mesh;  // points per axis, first axis fastest
  std::vector<double> spacing;    // per axis
  std::vector<CMatrix> values;    // per point: k x r, column i is S_i

  Eigen::Index fiber_dim() const { return values.empty() ? 0 : values.front().rows(); }
  Eigen::Index count() const { return values.empty() ? 0 : values.front().cols(); }
  std::size_t points() const { return values.size(); }

  void validate() const {
    if (values.empty()) throw InvalidArgument("SectionFamily: no samples");
    const std::size_t expected =
        std::accumulate(mesh.begin(), mesh.end(), std::size_t{1}, std::multiplies<>());
    if (mesh.empty() || expected != values.size())
      throw InvalidArgument("SectionFamily: mesh does not match the number of samples");
    if (spacing.size() != mesh.size()) throw InvalidArgument("SectionFamily: one spacing per mesh axis required");
    const Eigen::Index k = fiber_dim(), r = count();
    if (r < 1 || r > k) throw InvalidArgument("SectionFamily: need 1 <= r <= k");
    for (const auto& v : values) {
      if (v.rows() != k || v.cols() != r) throw InvalidArgument("SectionFamily: inconsistent fiber shape");
      if (!v.allFinite()) throw InvalidArgument("SectionFamily: non-finite sample");
    }
  }

  /// The same k x r frame at every point of the mesh.
  static SectionFamily constant(const CMatrix& frame, std::vector<std::size_t> mesh, std::vector<double> spacing = {}) {
    SectionFamily f;
    if (spacing.empty()) spacing.assign(mesh.size(), 1.0);
    f.mesh = std::move(mesh);
    f.spacing = std::move(spacing);
    f.values.assign(std::accumulate(f.mesh.begin(), f.mesh.end(), std::size_t{1}, std::multiplies<>()), frame);
    f.validate();
    return f;
  }
};

enum class OrthoMethod { symmetric, gram_schmidt };

inline const char* to_string(OrthoMethod m) { return m == OrthoMethod::symmetric ? "symmetric" : "gram_schmidt"; }

class FrameError : public NumericalFailure {
 public:
  FrameError(const std::string& what, std::size_t point, double min_eigenvalue)
      : NumericalFailure(what), point_(point), min_eigenvalue_(min_eigenvalue) {}
  std::size_t point() const { return point_; }
  double min_eigenvalue() const { return min_eigenvalue_; }

 private:
  std::size_t point_;
  double min_eigenvalue_;
};

/// max over points and (i, j) of |<S_i, S_j> - delta_ij|.
inline double overlap_defect(const SectionFamily& f) {
  f.validate();
  double d = 0.0;
  for (const auto& v : f.values) {
    const CMatrix g = v.adjoint() * v - CMatrix::Identity(v.cols(), v.cols());
    d = std::max(d, g.cwiseAbs().maxCoeff());
  }
  return d;
}

namespace detail {

inline CMatrix gram_schmidt(const CMatrix& s) {
  CMatrix q = s;
  for (Eigen::Index i = 0; i < q.cols(); ++i) {
    for (int pass = 0; pass < 2; ++pass)
      for (Eigen::Index j = 0; j < i; ++j) q.col(i) -= q.col(j).dot(q.col(i)) * q.col(j);
    q.col(i) /= q.col(i).norm();
  }
  return q;
}

inline CMatrix inverse_sqrt_frame(const CMatrix& s, const Eigen::SelfAdjointEigenSolver<CMatrix>& es) {
  const Eigen::VectorXd inv = es.eigenvalues().cwiseSqrt().cwiseInverse();
  return s * (es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().adjoint());
}

}  // namespace detail

/// Pointwise orthonormalization. Requires the smallest Gram eigenvalue to be >= 0.1
/// at every point; otherwise throws FrameError naming the worst point.
inline SectionFamily orthonormalize(const SectionFamily& f, OrthoMethod method = OrthoMethod::symmetric) {
  f.validate();
  const std::size_t n = f.points();
  std::vector<double> lam(n);
  SectionFamily out = f;
  parallel_for(n, [&](std::size_t p) {
    const CMatrix& s = f.values[p];
    CMatrix g = s.adjoint() * s;
    g = 0.5 * (g + g.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<CMatrix> es(g);
    lam[p] = es.eigenvalues()(0);
    if (lam[p] < 0.1) return;
    out.values[p] = method == OrthoMethod::symmetric ? detail::inverse_sqrt_frame(s, es) : detail::gram_schmidt(s);
  });
  const auto worst = static_cast<std::size_t>(std::min_element(lam.begin(), lam.end()) - lam.begin());
  if (lam[worst] < 0.1)
    throw FrameError("orthonormalize: Gram matrix near-singular at point " + std::to_string(worst) +
                         " (smallest eigenvalue " + std::to_string(lam[worst]) + " < 0.1)",
                     worst, lam[worst]);
  return out;
}

/// max over points and sections of |out_i - in_i|.
inline double displacement(const SectionFamily& in, const SectionFamily& out) {
  if (in.points() != out.points()) throw InvalidArgument("displacement: families differ in size");
  double d = 0.0;
  for (std::size_t p = 0; p < in.points(); ++p)
    d = std::max(d, (out.values[p] - in.values[p]).colwise().norm().maxCoeff());
  return d;
}

namespace detail {

template <class Field>
double max_difference_quotient(const SectionFamily& f, Field&& field) {
  if (f.mesh.empty() || f.spacing.size() != f.mesh.size()) throw InvalidArgument("difference quotient: irregular grid");
  for (double h : f.spacing)
    if (!(h > 0.0)) throw InvalidArgument("difference quotient: irregular grid (non-positive spacing)");
  double q = 0.0;
  std::size_t stride = 1;
  for (std::size_t axis = 0; axis < f.mesh.size(); ++axis) {
    const std::size_t len = f.mesh[axis];
    for (std::size_t p = 0; p < f.points(); ++p) {
      if ((p / stride) % len + 1 >= len) continue;
      q = std::max(q, field(p + stride, p) / f.spacing[axis]);
    }
    stride *= len;
  }
  return q;
}

}  // namespace detail

/// Largest mesh difference quotient of out - in (fiber norm, worst section).
inline double smoothness_of_output(const SectionFamily& in, const SectionFamily& out) {
  if (in.points() != out.points() || in.mesh != out.mesh) throw InvalidArgument("smoothness_of_output: meshes differ");
  in.validate();
  return detail::max_difference_quotient(in, [&](std::size_t p, std::size_t q) {
    const CMatrix dp = out.values[p] - in.values[p], dq = out.values[q] - in.values[q];
    return (dp - dq).colwise().norm().maxCoeff();
  });
}

/// Largest mesh difference quotient of the Gram field (max entry).
inline double gram_difference_quotient(const SectionFamily& f) {
  f.validate();
  return detail::max_difference_quotient(f, [&](std::size_t p, std::size_t q) {
    const CMatrix gp = f.values[p].adjoint() * f.values[p], gq = f.values[q].adjoint() * f.values[q];
    return (gp - gq).cwiseAbs().maxCoeff();
  });
}

/// S -> S u (recombining the sections by a constant r x r matrix).
inline SectionFamily recombine(const SectionFamily& f, const CMatrix& u) {
  SectionFamily out = f;
  for (auto& v : out.values) v = v * u;
  return out;
}

/// S -> u S (a constant k x k fiber transformation).
inline SectionFamily transform_fibers(const SectionFamily& f, const CMatrix& u) {
  SectionFamily out = f;
  for (auto& v : out.values) v = u * v;
  return out;
}

/// max over points of |a - b| (entrywise).
inline double max_difference(const SectionFamily& a, const SectionFamily& b) {
  if (a.points() != b.points()) throw InvalidArgument("max_difference: families differ in size");
  double d = 0.0;
  for (std::size_t p = 0; p < a.points(); ++p) d = std::max(d, (a.values[p] - b.values[p]).cwiseAbs().maxCoeff());
  return d;
}

/// {"fiber_dim", "count", "mesh", "spacing", "values"}: values[p][i] is section i at
/// point p as [re_0, im_0, re_1, im_1, ...].
inline nlohmann::json to_json(const SectionFamily& f) {
  nlohmann::json vals = nlohmann::json::array();
  for (const auto& v : f.values) {
    nlohmann::json pt = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.cols(); ++i) {
      std::vector<double> col;
      for (Eigen::Index c = 0; c < v.rows(); ++c) {
        col.push_back(v(c, i).real());
        col.push_back(v(c, i).imag());
      }
      pt.push_back(col);
    }
    vals.push_back(pt);
  }
  return {{"fiber_dim", f.fiber_dim()}, {"count", f.count()}, {"mesh", f.mesh}, {"spacing", f.spacing}, {"values", vals}};
}

inline SectionFamily section_family_from_json(const nlohmann::json& j) {
  for (const char* key : {"fiber_dim", "count", "mesh", "spacing", "values"})
    if (!j.contains(key)) throw InvalidArgument(std::string("SectionFamily JSON: missing key ") + key);
  SectionFamily f;
  const auto k = j.at("fiber_dim").get<Eigen::Index>();
  const auto r = j.at("count").get<Eigen::Index>();
  f.mesh = j.at("mesh").get<std::vector<std::size_t>>();
  f.spacing = j.at("spacing").get<std::vector<double>>();
  for (const auto& pt : j.at("values")) {
    if (!pt.is_array() || static_cast<Eigen::Index>(pt.size()) != r)
      throw InvalidArgument("SectionFamily JSON: each point needs `count` sections");
    CMatrix m(k, r);
    for (Eigen::Index i = 0; i < r; ++i) {
      const auto col = pt[static_cast<std::size_t>(i)].get<std::vector<double>>();
      if (static_cast<Eigen::Index>(col.size()) != 2 * k)
        throw InvalidArgument("SectionFamily JSON: each section needs 2 * fiber_dim reals");
      for (Eigen::Index c = 0; c < k; ++c)
        m(c, i) = Complex{col[static_cast<std::size_t>(2 * c)], col[static_cast<std::size_t>(2 * c + 1)]};
    }
    f.values.push_back(std::move(m));
  }
  f.validate();
  return f;
}

}  // namespace spingeom

#pragma once

// Lie-algebra stabilizers of subspaces and fixing dimensions of the
// spinor representation of Spin(n) and the standard representations of
// U(n), SU(n).
//
// For a compact group a subspace W has finite stabilizer iff no nonzero X in
// the Lie algebra annihilates W. Hence the fixing dimension equals
// 1 + max { dim ker rho(X) : X != 0 }, and the maximum can be taken over a
// maximal torus, where ker rho(X) is spanned by the zero weights of X.

#include "spingeom/clifford.hpp"

#include <Eigen/SVD>
#include <nlohmann/json.hpp>

#include <random>
#include <string>
#include <vector>

namespace spingeom {

enum class RepKind { spin, u_standard, su_standard };

inline const char* to_string(RepKind k) {
  switch (k) {
    case RepKind::spin: return "spin";
    case RepKind::u_standard: return "u_standard";
    case RepKind::su_standard: return "su_standard";
  }
  return "?";
}

struct RepresentationSpec {
  RepKind kind;
  int n;
  int dim_rep;
  std::vector<CMatrix> lie_generators;   // real basis of the image of the Lie algebra, skew-adjoint
  std::vector<CMatrix> torus_generators; // basis of a maximal torus subalgebra
  std::optional<GammaRep> gamma;         // spin only
};

inline RepresentationSpec spin_representation(int n, const CliffordOptions& opts = {}) {
  if (n < 2) throw InvalidArgument("spin_representation: n must be >= 2");
  GammaRep rep = build_gamma_rep(n, opts);
  RepresentationSpec out{RepKind::spin, n, rep.spinor_dim(), {}, {}, rep};
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) out.lie_generators.push_back(rep.gamma(i) * rep.gamma(j));
  for (int j = 0; j < rep.torus_rank(); ++j) out.torus_generators.push_back(rep.torus_generator(j));
  return out;
}

namespace detail {

inline std::vector<CMatrix> skew_hermitian_basis(int n, bool traceless) {
  const Complex i{0.0, 1.0};
  std::vector<CMatrix> out;
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) {
      CMatrix re = CMatrix::Zero(n, n);
      re(a, b) = 1.0;
      re(b, a) = -1.0;
      CMatrix im = CMatrix::Zero(n, n);
      im(a, b) = i;
      im(b, a) = i;
      out.push_back(std::move(re));
      out.push_back(std::move(im));
    }
  if (traceless) {
    for (int a = 0; a + 1 < n; ++a) {
      CMatrix x = CMatrix::Zero(n, n);
      x(a, a) = i;
      x(a + 1, a + 1) = -i;
      out.push_back(std::move(x));
    }
  } else {
    for (int a = 0; a < n; ++a) {
      CMatrix x = CMatrix::Zero(n, n);
      x(a, a) = i;
      out.push_back(std::move(x));
    }
  }
  return out;
}

}  // namespace detail

inline RepresentationSpec u_standard(int n) {
  if (n < 1) throw InvalidArgument("u_standard: n must be >= 1");
  RepresentationSpec out{RepKind::u_standard, n, n, detail::skew_hermitian_basis(n, false), {}, std::nullopt};
  for (int a = 0; a < n; ++a) {
    CMatrix x = CMatrix::Zero(n, n);
    x(a, a) = Complex{0.0, 1.0};
    out.torus_generators.push_back(std::move(x));
  }
  return out;
}

inline RepresentationSpec su_standard(int n) {
  if (n < 2) throw InvalidArgument("su_standard: n must be >= 2");
  RepresentationSpec out{RepKind::su_standard, n, n, detail::skew_hermitian_basis(n, true), {}, std::nullopt};
  for (int a = 0; a + 1 < n; ++a) {
    CMatrix x = CMatrix::Zero(n, n);
    x(a, a) = Complex{0.0, 1.0};
    x(a + 1, a + 1) = Complex{0.0, -1.0};
    out.torus_generators.push_back(std::move(x));
  }
  return out;
}

/// Orthonormal basis (columns) of an r-dimensional subspace.
class SubspaceBasis {
 public:
  /// Validates that the columns are orthonormal to 1e-12.
  static SubspaceBasis from_orthonormal(CMatrix vectors) {
    const CMatrix g = vectors.adjoint() * vectors;
    if ((g - CMatrix::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff() > 1e-12)
      throw InvalidArgument("SubspaceBasis: vectors are not orthonormal");
    return SubspaceBasis(std::move(vectors));
  }

  /// Orthonormalizes the span of the given columns; rejects rank deficiency.
  static SubspaceBasis span_of(const CMatrix& vectors) {
    Eigen::HouseholderQR<CMatrix> qr(vectors);
    const CMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    const double scale = vectors.norm();
    for (Eigen::Index j = 0; j < vectors.cols(); ++j)
      if (std::abs(r(j, j)) <= 1e-12 * scale) throw InvalidArgument("SubspaceBasis: vectors are linearly dependent");
    CMatrix q = qr.householderQ() * CMatrix::Identity(vectors.rows(), vectors.cols());
    return SubspaceBasis(std::move(q));
  }

  /// Orthonormalized standard complex Gaussian frame.
  template <class Rng>
  static SubspaceBasis random(int dim, int r, Rng& rng) {
    std::normal_distribution<double> nd;
    CMatrix v(dim, r);
    for (Eigen::Index j = 0; j < r; ++j)
      for (Eigen::Index i = 0; i < dim; ++i) v(i, j) = Complex{nd(rng), nd(rng)};
    return span_of(v);
  }

  const CMatrix& vectors() const { return v_; }
  int ambient_dim() const { return static_cast<int>(v_.rows()); }
  int dim() const { return static_cast<int>(v_.cols()); }

 private:
  explicit SubspaceBasis(CMatrix v) : v_(std::move(v)) {}
  CMatrix v_;
};

inline constexpr double kRankThreshold = 1e-9;

/// Real linear system { c : sum_a c_a X_a w = 0  for all w in W } with one
/// column per generator; real and imaginary parts stacked.
inline Eigen::MatrixXd stabilizer_system(const RepresentationSpec& rep, const SubspaceBasis& w) {
  if (w.ambient_dim() != rep.dim_rep)
    throw InvalidArgument("lie_stabilizer_dimension: subspace lives in C^" + std::to_string(w.ambient_dim()) +
                          ", representation space is C^" + std::to_string(rep.dim_rep));
  const Eigen::Index d = rep.dim_rep;
  const Eigen::Index r = w.dim();
  Eigen::MatrixXd a(2 * d * r, static_cast<Eigen::Index>(rep.lie_generators.size()));
  for (std::size_t g = 0; g < rep.lie_generators.size(); ++g) {
    const CMatrix xw = rep.lie_generators[g] * w.vectors();
    for (Eigen::Index j = 0; j < r; ++j) {
      a.col(static_cast<Eigen::Index>(g)).segment(2 * d * j, d) = xw.col(j).real();
      a.col(static_cast<Eigen::Index>(g)).segment(2 * d * j + d, d) = xw.col(j).imag();
    }
  }
  return a;
}

/// Nullity of a real matrix by SVD; singular values below rel * sigma_max count as zero.
inline int svd_nullity(const Eigen::MatrixXd& a, double rel = kRankThreshold) {
  if (a.cols() == 0) return 0;
  if (a.rows() == 0) return static_cast<int>(a.cols());
  Eigen::BDCSVD<Eigen::MatrixXd> svd(a);
  const Eigen::VectorXd& s = svd.singularValues();
  const double smax = s.size() > 0 ? s(0) : 0.0;
  int rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > rel * smax && smax > 0.0) ++rank;
  return static_cast<int>(a.cols()) - rank;
}

inline int lie_stabilizer_dimension(const RepresentationSpec& rep, const SubspaceBasis& w,
                                    double rel = kRankThreshold) {
  return svd_nullity(stabilizer_system(rep, w), rel);
}

/// 2^{m-1}-dimensional subspace fixed by g_s = exp(s A_1) exp(-s A_2): the
/// kernel of A_1 - A_2, i.e. the joint eigenvectors whose first two weights cancel.
inline SubspaceBasis witness_subspace(const RepresentationSpec& rep) {
  if (rep.kind != RepKind::spin) throw InvalidArgument("witness_subspace: spin representation required");
  if (rep.n < 4) throw InvalidArgument("witness_subspace: no witness for n < 4 (fixing dimension is 1)");
  const CMatrix h = Complex{0.0, 1.0} * (rep.torus_generators[0] - rep.torus_generators[1]);
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
  std::vector<Eigen::Index> zero;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
    if (std::abs(es.eigenvalues()(i)) < 1e-9) zero.push_back(i);
  CMatrix v(rep.dim_rep, static_cast<Eigen::Index>(zero.size()));
  for (std::size_t c = 0; c < zero.size(); ++c) v.col(static_cast<Eigen::Index>(c)) = es.eigenvectors().col(zero[c]);
  return SubspaceBasis::span_of(v);
}

/// Closed-form fixing dimension of the spinor representation.
inline int spin_fixing_dimension(int n) {
  if (n < 2) throw InvalidArgument("spin_fixing_dimension: n must be >= 2");
  return n <= 3 ? 1 : (1 << (n / 2 - 1)) + 1;
}

struct FixingCertificate {
  RepKind kind;
  int n = 0;
  int r = 0;

  // Lower bound: an (r-1)-dimensional subspace with positive-dimensional stabilizer.
  int max_torus_kernel = 0;
  std::vector<int> maximizing_weight;  // torus coefficients attaining the kernel
  std::optional<SubspaceBasis> witness;
  int witness_stabilizer_dimension = 0;
  std::string lower_bound;

  // Upper bound.
  std::string upper_bound;
  bool probabilistic = false;
  int trials = 0;
  int max_sampled_multiplicity = 0;  // spin: eigenvalue-1 multiplicity over random torus elements
  int multiplicity_bound = 0;
  bool saturating_attained = false;
  int random_subspaces = 0;
  int random_subspaces_with_stabilizer = 0;
  int full_space_stabilizer_dimension = -1;

  bool consistent() const {
    const bool lower = r == 1 || (witness && witness->dim() == r - 1 && witness_stabilizer_dimension >= 1);
    const bool upper = random_subspaces_with_stabilizer == 0 && max_sampled_multiplicity <= multiplicity_bound &&
                       (kind != RepKind::spin || n < 4 || saturating_attained);
    return lower && upper;
  }
};

namespace detail {

/// Weights of the torus action: rep(sum_j c_j T_j) has eigenvalues i <weight, c>.
inline std::vector<std::vector<int>> torus_weights(const RepresentationSpec& rep) {
  std::vector<std::vector<int>> w;
  const int rank = static_cast<int>(rep.torus_generators.size());
  if (rep.kind == RepKind::spin) {
    for (unsigned s = 0; s < (1u << rank); ++s) {
      std::vector<int> v(static_cast<std::size_t>(rank));
      for (int j = 0; j < rank; ++j) v[static_cast<std::size_t>(j)] = ((s >> j) & 1u) ? -1 : 1;
      w.push_back(std::move(v));
    }
  } else if (rep.kind == RepKind::u_standard) {
    for (int a = 0; a < rep.n; ++a) {
      std::vector<int> v(static_cast<std::size_t>(rank), 0);
      v[static_cast<std::size_t>(a)] = 1;
      w.push_back(std::move(v));
    }
  } else {
    // Generator T_a = i(E_aa - E_{a+1,a+1}); basis vector e_b has weight (delta_ab - delta_{a+1,b}).
    for (int b = 0; b < rep.n; ++b) {
      std::vector<int> v(static_cast<std::size_t>(rank), 0);
      if (b < rank) v[static_cast<std::size_t>(b)] += 1;
      if (b >= 1) v[static_cast<std::size_t>(b - 1)] -= 1;
      w.push_back(std::move(v));
    }
  }
  return w;
}

}  // namespace detail

/// Computes the fixing dimension with a two-sided certificate.
///
/// The lower bound scans torus elements with coefficients in {-1,0,1} for the
/// largest kernel; its kernel is the witness. The upper bound is
/// (spin) the eigenvalue-1 multiplicity bound on `trials` random torus elements
/// plus the saturating element, together with random subspaces of dimension r;
/// (u, su) explicit linear algebra on coordinate and random subspaces.
inline FixingCertificate fixing_dimension(const RepresentationSpec& rep, int trials, std::uint64_t seed = 1) {
  if (trials < 1) throw InvalidArgument("fixing_dimension: trials must be >= 1");
  const int rank = static_cast<int>(rep.torus_generators.size());
  if (rank > 12) throw InvalidArgument("fixing_dimension: torus rank too large for the weight scan");

  FixingCertificate cert;
  cert.kind = rep.kind;
  cert.n = rep.n;
  cert.trials = trials;

  const auto weights = detail::torus_weights(rep);
  std::vector<int> coeff(static_cast<std::size_t>(rank), -1);
  long long total = 1;
  for (int j = 0; j < rank; ++j) total *= 3;
  for (long long code = 0; code < total; ++code) {
    long long c = code;
    bool nonzero = false;
    for (int j = 0; j < rank; ++j) {
      coeff[static_cast<std::size_t>(j)] = static_cast<int>(c % 3) - 1;
      nonzero = nonzero || coeff[static_cast<std::size_t>(j)] != 0;
      c /= 3;
    }
    if (!nonzero) continue;
    int ker = 0;
    for (const auto& w : weights) {
      int dot = 0;
      for (int j = 0; j < rank; ++j) dot += w[static_cast<std::size_t>(j)] * coeff[static_cast<std::size_t>(j)];
      if (dot == 0) ++ker;
    }
    if (ker > cert.max_torus_kernel || cert.maximizing_weight.empty()) {
      cert.max_torus_kernel = ker;
      cert.maximizing_weight = coeff;
    }
  }
  cert.r = cert.max_torus_kernel + 1;

  if (cert.max_torus_kernel >= 1) {
    if (rep.kind == RepKind::spin) {
      cert.witness = witness_subspace(rep);
    } else {
      CMatrix x = CMatrix::Zero(rep.dim_rep, rep.dim_rep);
      for (int j = 0; j < rank; ++j) x += double(cert.maximizing_weight[static_cast<std::size_t>(j)]) * rep.torus_generators[static_cast<std::size_t>(j)];
      std::vector<Eigen::Index> cols;
      for (Eigen::Index a = 0; a < rep.dim_rep; ++a)
        if (std::abs(x(a, a)) == 0.0) cols.push_back(a);
      CMatrix v = CMatrix::Zero(rep.dim_rep, static_cast<Eigen::Index>(cols.size()));
      for (std::size_t c = 0; c < cols.size(); ++c) v(cols[c], static_cast<Eigen::Index>(c)) = 1.0;
      cert.witness = SubspaceBasis::from_orthonormal(v);
    }
    cert.witness_stabilizer_dimension = lie_stabilizer_dimension(rep, *cert.witness);
    cert.lower_bound = "witness subspace of dimension " + std::to_string(cert.witness->dim()) +
                       " with Lie stabilizer dimension " + std::to_string(cert.witness_stabilizer_dimension);
  } else {
    cert.lower_bound = "r = 1: the zero subspace is fixed by the whole group, no witness needed";
  }

  std::mt19937_64 rng(seed);
  if (rep.kind == RepKind::spin) {
    const GammaRep& g = *rep.gamma;
    const int m = g.torus_rank();
    cert.multiplicity_bound = m >= 1 ? (1 << (m - 1)) : 0;
    std::uniform_real_distribution<double> angle(0.0, 2.0 * kPi);
    std::vector<double> t(static_cast<std::size_t>(m));
    for (int trial = 0; trial < trials;) {
      for (auto& x : t) x = angle(rng);
      const auto c = eigenvalue_one_multiplicity(torus_element(g, t));
      if (c.identity) continue;
      cert.max_sampled_multiplicity = std::max(cert.max_sampled_multiplicity, c.multiplicity);
      ++trial;
    }
    if (m >= 2) {
      std::vector<double> sat(static_cast<std::size_t>(m), 0.0);
      sat[0] = sat[1] = kPi / 2.0;
      const auto c = eigenvalue_one_multiplicity(torus_element(g, sat));
      cert.max_sampled_multiplicity = std::max(cert.max_sampled_multiplicity, c.multiplicity);
      cert.saturating_attained = c.multiplicity == cert.multiplicity_bound;
    }
    cert.probabilistic = true;
    cert.upper_bound =
        "theorem: every g != 1 fixes at most 2^{m-1} dimensions; sampled on random torus elements and the "
        "saturating element t = (pi/2, pi/2, 0, ...); random subspaces of dimension r have zero Lie stabilizer";
  } else {
    cert.multiplicity_bound = cert.r - 1;
    cert.max_sampled_multiplicity = cert.max_torus_kernel;
    CMatrix id = CMatrix::Identity(rep.dim_rep, rep.dim_rep);
    cert.full_space_stabilizer_dimension = lie_stabilizer_dimension(rep, SubspaceBasis::from_orthonormal(id));
    // Every coordinate subspace of dimension r.
    if (cert.r <= rep.dim_rep) {
      std::vector<int> pick(static_cast<std::size_t>(cert.r));
      std::vector<bool> mask(static_cast<std::size_t>(rep.dim_rep), false);
      std::fill(mask.begin(), mask.begin() + cert.r, true);
      do {
        CMatrix v = CMatrix::Zero(rep.dim_rep, cert.r);
        Eigen::Index col = 0;
        for (Eigen::Index a = 0; a < rep.dim_rep; ++a)
          if (mask[static_cast<std::size_t>(a)]) v(a, col++) = 1.0;
        ++cert.random_subspaces;
        if (lie_stabilizer_dimension(rep, SubspaceBasis::from_orthonormal(v)) > 0) ++cert.random_subspaces_with_stabilizer;
      } while (std::prev_permutation(mask.begin(), mask.end()));
    }
    cert.probabilistic = false;
    cert.upper_bound = rep.kind == RepKind::u_standard
                           ? "linear algebra: r = n is the whole space, whose stabilizer is trivial (faithful)"
                           : "linear algebra: an X in su(n) vanishing on an (n-1)-dimensional W is "
                             "i*alpha*P_{W-perp}, and trace zero forces alpha = 0";
  }
  const int samples = std::min(trials, 200);
  if (cert.r <= rep.dim_rep) {
    for (int s = 0; s < samples; ++s) {
      const auto w = SubspaceBasis::random(rep.dim_rep, cert.r, rng);
      ++cert.random_subspaces;
      if (lie_stabilizer_dimension(rep, w) > 0) ++cert.random_subspaces_with_stabilizer;
    }
  }
  return cert;
}

inline nlohmann::json to_json(const FixingCertificate& c) {
  nlohmann::json j{{"rep", to_string(c.kind)},
                   {"n", c.n},
                   {"r", c.r},
                   {"lower_bound", {{"argument", c.lower_bound},
                                    {"max_torus_kernel", c.max_torus_kernel},
                                    {"maximizing_weight", c.maximizing_weight},
                                    {"witness_dim", c.witness ? c.witness->dim() : 0},
                                    {"witness_stabilizer_dimension", c.witness_stabilizer_dimension}}},
                   {"upper_bound", {{"argument", c.upper_bound},
                                    {"probabilistic", c.probabilistic},
                                    {"trials", c.trials},
                                    {"max_sampled_multiplicity", c.max_sampled_multiplicity},
                                    {"multiplicity_bound", c.multiplicity_bound},
                                    {"saturating_attained", c.saturating_attained},
                                    {"random_subspaces", c.random_subspaces},
                                    {"random_subspaces_with_stabilizer", c.random_subspaces_with_stabilizer}}},
                   {"consistent", c.consistent()}};
  return j;
}

}  // namespace spingeom

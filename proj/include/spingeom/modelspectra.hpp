#pragma once

// Exact Dirac and connection-Laplacian spectra of flat tori with any of the
// 2^n spin structures, round spheres, and eigenvalue trajectories along
// collapsing torus families.
//
// On T^n = R^n / B Z^n with spin structure d in {0, 1/2}^n (relative to the
// columns of B), D^2 = nabla^* nabla has eigenvalues 4 pi^2 |B^{-T}(m + d)|^2,
// m in Z^n, each with multiplicity 2^floor(n/2).

#include "spingeom/spectrum.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>

#include <cmath>
#include <functional>
#include <map>
#include <span>

namespace spingeom {

class FlatTorusSpec {
 public:
  FlatTorusSpec(Eigen::MatrixXd basis, std::vector<double> twist) : basis_(std::move(basis)), twist_(std::move(twist)) {
    const Eigen::Index n = basis_.rows();
    if (n < 1 || basis_.cols() != n) throw InvalidArgument("FlatTorusSpec: basis must be a non-empty square matrix");
    if (static_cast<Eigen::Index>(twist_.size()) != n)
      throw InvalidArgument("FlatTorusSpec: twist has " + std::to_string(twist_.size()) + " entries, expected " +
                            std::to_string(n));
    for (double d : twist_)
      if (d != 0.0 && d != 0.5) throw InvalidArgument("FlatTorusSpec: twist entries must be exactly 0 or 1/2");
    if (!basis_.allFinite()) throw InvalidArgument("FlatTorusSpec: basis has non-finite entries");
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(basis_);
    const auto& s = svd.singularValues();
    if (s(n - 1) <= 1e-14 * s(0) || s(0) == 0.0) throw InvalidArgument("FlatTorusSpec: degenerate lattice basis");
    condition_ = s(0) / s(n - 1);
  }

  static FlatTorusSpec rectangular(std::span<const double> lengths, std::vector<double> twist) {
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(lengths.size()),
                                              static_cast<Eigen::Index>(lengths.size()));
    for (std::size_t i = 0; i < lengths.size(); ++i) {
      if (!(lengths[i] > 0.0)) throw InvalidArgument("FlatTorusSpec: side lengths must be positive");
      b(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = lengths[i];
    }
    return FlatTorusSpec(std::move(b), std::move(twist));
  }

  int dimension() const { return static_cast<int>(basis_.rows()); }
  const Eigen::MatrixXd& basis() const { return basis_; }
  const std::vector<double>& twist() const { return twist_; }
  double condition_number() const { return condition_; }
  double volume() const { return std::abs(basis_.determinant()); }

  bool trivial_spin_structure() const {
    return std::all_of(twist_.begin(), twist_.end(), [](double d) { return d == 0.0; });
  }

  bool orthogonal_basis() const {
    const Eigen::MatrixXd g = basis_.transpose() * basis_;
    for (Eigen::Index i = 0; i < g.rows(); ++i)
      for (Eigen::Index j = 0; j < g.cols(); ++j)
        if (i != j && std::abs(g(i, j)) > 1e-14 * std::sqrt(g(i, i) * g(j, j))) return false;
    return true;
  }

  /// Column lengths |b_i|.
  std::vector<double> side_lengths() const {
    std::vector<double> out;
    for (Eigen::Index i = 0; i < basis_.cols(); ++i) out.push_back(basis_.col(i).norm());
    return out;
  }

  /// Intrinsic diameter; closed form only for orthogonal bases (half the box diagonal).
  double diameter() const {
    if (!orthogonal_basis()) throw InvalidArgument("FlatTorusSpec::diameter: only orthogonal bases are supported");
    double s = 0.0;
    for (double l : side_lengths()) s += l * l;
    return 0.5 * std::sqrt(s);
  }

  std::vector<std::vector<double>> basis_rows() const {
    std::vector<std::vector<double>> rows;
    for (Eigen::Index i = 0; i < basis_.rows(); ++i) {
      std::vector<double> r;
      for (Eigen::Index j = 0; j < basis_.cols(); ++j) r.push_back(basis_(i, j));
      rows.push_back(std::move(r));
    }
    return rows;
  }

 private:
  Eigen::MatrixXd basis_;
  std::vector<double> twist_;
  double condition_ = 1.0;
};

struct EnumerationOptions {
  long long point_budget = 50'000'000;  // lattice points visited in the validation box
  double cluster_rel_tol = 1e-10;       // coincidence tolerance when the basis is not rational
};

namespace detail {

/// Exact inverse Gram matrix (B^T B)^{-1} = N / den with integer N, when the basis is rational.
struct ExactGramInverse {
  std::vector<std::vector<BigInt>> numer;
  BigInt den;
};

inline std::optional<ExactGramInverse> exact_gram_inverse(const Eigen::MatrixXd& b) {
  const auto n = static_cast<std::size_t>(b.rows());
  std::vector<std::vector<Rational>> bq(n, std::vector<Rational>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      auto q = rationalize(b(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
      if (!q) return std::nullopt;
      bq[i][j] = *q;
    }
  // Gram G = B^T B, then Gauss-Jordan on [G | I].
  std::vector<std::vector<Rational>> a(n, std::vector<Rational>(2 * n, Rational(0)));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k) a[i][j] += bq[k][i] * bq[k][j];
    a[i][n + i] = 1;
  }
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    while (piv < n && a[piv][c] == 0) ++piv;
    if (piv == n) return std::nullopt;
    std::swap(a[c], a[piv]);
    const Rational inv = Rational(1) / a[c][c];
    for (auto& x : a[c]) x *= inv;
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c || a[r][c] == 0) continue;
      const Rational f = a[r][c];
      for (std::size_t k = 0; k < 2 * n; ++k) a[r][k] -= f * a[c][k];
    }
  }
  ExactGramInverse out;
  out.den = 1;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out.den = boost::multiprecision::lcm(out.den, boost::multiprecision::denominator(a[i][n + j]));
  out.numer.assign(n, std::vector<BigInt>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const Rational v = a[i][n + j] * Rational(out.den);
      out.numer[i][j] = boost::multiprecision::numerator(v);
    }
  return out;
}

/// Visits every m in the integer box [lo_i, hi_i].
template <class Fn>
void for_each_in_box(std::span<const long long> lo, std::span<const long long> hi, Fn&& fn) {
  const std::size_t n = lo.size();
  std::vector<long long> m(lo.begin(), lo.end());
  for (std::size_t i = 0; i < n; ++i)
    if (lo[i] > hi[i]) return;
  while (true) {
    fn(std::span<const long long>(m));
    std::size_t i = 0;
    while (i < n) {
      if (++m[i] <= hi[i]) break;
      m[i] = lo[i];
      ++i;
    }
    if (i == n) return;
  }
}

inline BigInt to_bigint(__int128 v) {
  const bool neg = v < 0;
  const unsigned __int128 u = neg ? static_cast<unsigned __int128>(0) - static_cast<unsigned __int128>(v)
                                  : static_cast<unsigned __int128>(v);
  BigInt out = (BigInt(static_cast<unsigned long long>(u >> 64)) << 64) + BigInt(static_cast<unsigned long long>(u));
  return neg ? BigInt(-out) : out;
}

struct ShiftedPoint {
  double q;          // |B^{-T}(m + d)|^2
  __int128 key = 0;  // exact a^T N a with a = 2(m + d), when available
  BigInt big_key;    // fallback when the fast path would overflow
};

}  // namespace detail

/// Enumerates {4 pi^2 |B^{-T}(m + d)|^2 <= cutoff}. The box radius on m_i is
/// |b_i| sqrt(q_max), since (m + d)_i = b_i . y with |y|^2 = q; a box one unit
/// larger is scanned as well and must contribute nothing new below the cutoff.
inline SpectrumReport torus_dirac_squared_spectrum(const FlatTorusSpec& spec, double cutoff,
                                                   const EnumerationOptions& opts = {},
                                                   OperatorTag op = OperatorTag::dirac_squared) {
  if (!(cutoff > 0.0) || !std::isfinite(cutoff)) throw InvalidArgument("torus spectrum: cutoff must be positive");
  const int n = spec.dimension();
  const auto nn = static_cast<std::size_t>(n);
  const Eigen::MatrixXd binv_t = spec.basis().inverse().transpose();
  const double qmax = cutoff / (4.0 * kPi * kPi);
  const auto& d = spec.twist();

  std::vector<long long> lo(nn), hi(nn), vlo(nn), vhi(nn);
  long double box_points = 1.0L;
  for (std::size_t i = 0; i < nn; ++i) {
    const double radius = spec.basis().col(static_cast<Eigen::Index>(i)).norm() * std::sqrt(qmax);
    lo[i] = static_cast<long long>(std::ceil(-radius - d[i]));
    hi[i] = static_cast<long long>(std::floor(radius - d[i]));
    vlo[i] = lo[i] - 1;
    vhi[i] = hi[i] + 1;
    box_points *= static_cast<long double>(vhi[i] - vlo[i] + 1);
  }
  if (box_points > static_cast<long double>(opts.point_budget))
    throw InvalidArgument("torus spectrum: cutoff requires " + std::to_string(static_cast<double>(box_points)) +
                          " lattice points, over the budget of " + std::to_string(opts.point_budget));

  const auto exact = detail::exact_gram_inverse(spec.basis());
  bool fast = false;
  std::vector<std::vector<__int128>> n128;
  if (exact) {
    // a_i = 2(m_i + d_i) is bounded by 2(|m|max + 1); check sum |N_ij| a^2 < 2^120.
    long long amax = 0;
    for (std::size_t i = 0; i < nn; ++i) amax = std::max({amax, std::abs(2 * vlo[i] + 1), std::abs(2 * vhi[i] + 1)});
    BigInt bound = 0;
    bool entries_fit = true;
    for (const auto& row : exact->numer)
      for (const auto& x : row) {
        bound += boost::multiprecision::abs(x);
        entries_fit = entries_fit && boost::multiprecision::abs(x) < (BigInt(1) << 62);
      }
    bound *= BigInt(amax) * BigInt(amax);
    fast = entries_fit && bound < (BigInt(1) << 120);
    if (fast) {
      n128.assign(nn, std::vector<__int128>(nn));
      for (std::size_t i = 0; i < nn; ++i)
        for (std::size_t j = 0; j < nn; ++j) n128[i][j] = static_cast<__int128>(exact->numer[i][j].convert_to<long long>());
    }
  }

  std::vector<detail::ShiftedPoint> points;
  long long outer_count = 0;
  Eigen::VectorXd md(n);
  std::vector<long long> a(nn);
  detail::for_each_in_box(vlo, vhi, [&](std::span<const long long> m) {
    for (std::size_t i = 0; i < nn; ++i) md(static_cast<Eigen::Index>(i)) = static_cast<double>(m[i]) + d[i];
    const double q = (binv_t * md).squaredNorm();
    if (q > qmax * (1.0 + 1e-12)) return;
    bool inner = true;
    for (std::size_t i = 0; i < nn; ++i) inner = inner && m[i] >= lo[i] && m[i] <= hi[i];
    if (!inner) {
      ++outer_count;
      return;
    }
    detail::ShiftedPoint p{q};
    if (exact) {
      for (std::size_t i = 0; i < nn; ++i) a[i] = 2 * m[i] + (d[i] == 0.5 ? 1 : 0);
      if (fast) {
        __int128 s = 0;
        for (std::size_t i = 0; i < nn; ++i)
          for (std::size_t j = 0; j < nn; ++j) s += n128[i][j] * a[i] * a[j];
        p.key = s;
      } else {
        BigInt s = 0;
        for (std::size_t i = 0; i < nn; ++i)
          for (std::size_t j = 0; j < nn; ++j) s += exact->numer[i][j] * a[i] * a[j];
        p.big_key = s;
      }
    }
    points.push_back(std::move(p));
  });
  if (outer_count != 0)
    throw NumericalFailure("torus spectrum: enumeration box was not complete (" + std::to_string(outer_count) +
                           " points found outside the certified radius)");

  const long long mult = spinor_rank(n);
  SpectrumReport rep;
  rep.op = op;
  rep.space = n == 1 ? "circle" : "torus";
  rep.dimension = n;
  rep.twist = d;
  rep.basis = spec.basis_rows();
  rep.cutoff = cutoff;
  rep.provenance = Provenance::closed_form;

  if (exact) {
    // D^2 value = 4 pi^2 key / (4 den) = pi^2 key / den.
    rep.exact_unit = "pi^2";
    if (fast) {
      std::map<__int128, long long> agg;
      for (const auto& p : points) agg[p.key] += mult;
      for (const auto& [key, count] : agg) {
        Rational c(detail::to_bigint(key), exact->den);
        rep.pairs.push_back({kPi * kPi * to_double(c), count, c});
      }
    } else {
      std::map<BigInt, long long> agg;
      for (const auto& p : points) agg[p.big_key] += mult;
      for (const auto& [key, count] : agg) {
        Rational c(key, exact->den);
        rep.pairs.push_back({kPi * kPi * to_double(c), count, c});
      }
    }
  } else {
    std::vector<double> qs;
    qs.reserve(points.size());
    for (const auto& p : points) qs.push_back(p.q);
    std::sort(qs.begin(), qs.end());
    std::size_t i = 0;
    while (i < qs.size()) {
      std::size_t j = i;
      double sum = 0.0;
      while (j < qs.size() && qs[j] - qs[i] <= opts.cluster_rel_tol * std::max(qs[i], 1e-300)) sum += qs[j++];
      const double q = sum / static_cast<double>(j - i);
      rep.pairs.push_back({4.0 * kPi * kPi * q, static_cast<long long>(j - i) * mult, std::nullopt});
      i = j;
    }
  }
  return rep;
}

/// nabla^* nabla on a flat torus: identical to D^2 since scal = 0.
inline SpectrumReport torus_connection_laplacian_spectrum(const FlatTorusSpec& spec, double cutoff,
                                                          const EnumerationOptions& opts = {}) {
  return torus_dirac_squared_spectrum(spec, cutoff, opts, OperatorTag::connection_laplacian);
}

/// Smallest cutoff (by doubling) listing at least `count` eigenvalues with multiplicity.
inline SpectrumReport torus_lowest(const FlatTorusSpec& spec, long long count, const EnumerationOptions& opts = {}) {
  if (count < 1) throw InvalidArgument("torus_lowest: count must be >= 1");
  double cutoff = 1.0;
  for (int iter = 0; iter < 200; ++iter) {
    auto rep = torus_dirac_squared_spectrum(spec, cutoff, opts);
    if (rep.total_multiplicity() >= count) return rep;
    cutoff *= 2.0;
  }
  throw NumericalFailure("torus_lowest: no cutoff reached the requested count");
}

/// dim ker D on a flat torus.
inline long long torus_kernel_dimension(const FlatTorusSpec& spec) {
  const auto rep = torus_dirac_squared_spectrum(spec, 1e-9);
  long long k = 0;
  for (const auto& p : rep.pairs)
    if (p.value == 0.0) k += p.multiplicity;
  return k;
}

/// Weyl asymptotics 2^floor(n/2) omega_n vol Lambda^{n/2} / (2 pi)^n for the counting function of D^2.
inline double weyl_count(int n, double volume, double lambda) {
  const double omega = std::pow(kPi, 0.5 * n) / std::tgamma(0.5 * n + 1.0);
  return spinor_rank(n) * omega * volume * std::pow(lambda, 0.5 * n) / std::pow(2.0 * kPi, n);
}

namespace detail {

inline BigInt binomial(long long n, long long k) {
  BigInt r = 1;
  for (long long i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace detail

/// Signed Dirac eigenvalue of the round unit S^n with multiplicity.
struct SignedEigenvalue {
  Rational value;
  long long multiplicity;
};

/// D on the unit S^n: +-(n/2 + k), each with multiplicity 2^floor(n/2) C(k+n-1, k), for |D| <= max_abs.
inline std::vector<SignedEigenvalue> sphere_dirac_eigenvalues(int n, double max_abs) {
  if (n < 2) throw InvalidArgument("sphere spectrum: n must be >= 2");
  std::vector<SignedEigenvalue> out;
  for (long long k = 0;; ++k) {
    const Rational v(BigInt(n + 2 * k), BigInt(2));
    if (to_double(v) > max_abs) break;
    const long long mult = static_cast<long long>(spinor_rank(n)) * detail::binomial(k + n - 1, k).convert_to<long long>();
    out.push_back({Rational(-v), mult});
    out.push_back({v, mult});
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.value < b.value; });
  return out;
}

/// D^2 on the unit S^n: (n/2 + k)^2 with multiplicity 2 * 2^floor(n/2) C(k+n-1, k).
inline SpectrumReport sphere_dirac_spectrum(int n, double cutoff) {
  if (n < 2) throw InvalidArgument("sphere spectrum: n must be >= 2");
  SpectrumReport rep;
  rep.op = OperatorTag::dirac_squared;
  rep.space = "sphere";
  rep.dimension = n;
  rep.cutoff = cutoff;
  rep.provenance = Provenance::literature_closed_form;
  rep.exact_unit = "1";
  for (long long k = 0;; ++k) {
    const Rational v(BigInt((n + 2 * k) * (n + 2 * k)), BigInt(4));
    if (to_double(v) > cutoff) break;
    const long long mult = 2LL * spinor_rank(n) * detail::binomial(k + n - 1, k).convert_to<long long>();
    rep.pairs.push_back({to_double(v), mult, v});
  }
  return rep;
}

/// nabla^* nabla on the unit S^n: (n/2 + k)^2 - n(n-1)/4, same multiplicities as D^2.
inline SpectrumReport sphere_connection_laplacian_spectrum(int n, double cutoff) {
  if (n < 2) throw InvalidArgument("sphere spectrum: n must be >= 2");
  SpectrumReport rep;
  rep.op = OperatorTag::connection_laplacian;
  rep.space = "sphere";
  rep.dimension = n;
  rep.cutoff = cutoff;
  rep.provenance = Provenance::literature_closed_form;
  rep.exact_unit = "1";
  const Rational shift(BigInt(n * (n - 1)), BigInt(4));
  for (long long k = 0;; ++k) {
    const Rational v = Rational(BigInt((n + 2 * k) * (n + 2 * k)), BigInt(4)) - shift;
    if (to_double(v) > cutoff) break;
    const long long mult = 2LL * spinor_rank(n) * detail::binomial(k + n - 1, k).convert_to<long long>();
    rep.pairs.push_back({to_double(v), mult, v});
  }
  return rep;
}

struct TrajectoryPoint {
  double parameter;
  double lambda_k;
  std::optional<Rational> exact_k;  // coefficient of pi^2
  std::vector<double> lowest;       // lambda_1 .. lambda_count with multiplicity
};

/// lambda_k(D^2) along a family of flat tori.
inline std::vector<TrajectoryPoint> collapse_trajectory(std::span<const double> parameters,
                                                        const std::function<FlatTorusSpec(double)>& family,
                                                        long long k, long long count = 0,
                                                        const EnumerationOptions& opts = {}) {
  if (parameters.empty()) throw InvalidArgument("collapse_trajectory: empty family");
  if (k < 1) throw InvalidArgument("collapse_trajectory: index must be >= 1");
  const long long need = std::max(k, count);
  std::vector<TrajectoryPoint> out;
  for (double p : parameters) {
    const auto rep = torus_lowest(family(p), need, opts);
    const auto& pk = rep.at(k);
    TrajectoryPoint tp{p, pk.value, pk.exact, {}};
    auto flat = rep.flattened();
    flat.resize(static_cast<std::size_t>(std::min<long long>(static_cast<long long>(flat.size()), std::max(count, k))));
    tp.lowest = std::move(flat);
    out.push_back(std::move(tp));
  }
  return out;
}

}  // namespace spingeom

#pragma once

// Numerical spectra of the spinor connection Laplacian (and, for flat
// metrics, the Dirac operator) on S^1 and on 2-tori with conformally flat
// metrics e^{2u} * flat.
//
// Two discretizations:
//   spectral          Fourier modes |k_i| <= N_i/2 of the flat operator; exact
//                     on every retained mode. Flat metrics only.
//   finite_difference second-order link discretization of the quadratic form
//                     int |nabla psi|^2 dvol with mass int |psi|^2 dvol.
//                     The spin structure enters as the phase e^{2 pi i d_i} on
//                     links that wrap around cycle i.
//
// For g = e^{2u} flat on T^2 the spinor bundle splits into half-spinor lines
// on which nabla = d + i A with A = +-(u_y dx - u_x dy)/2. The Dirichlet term
// is conformally invariant in dimension 2, so only the mass carries e^{2u}.
// On S^1 the form is int e^{-u}|psi'|^2 dx with mass e^{u} dx.
//
// The stored matrix is M^{-1/2} K M^{-1/2} (Hermitian, unknowns ordered
// component-major).

#include "spingeom/clifford.hpp"
#include "spingeom/eigensolver.hpp"
#include "spingeom/modelspectra.hpp"

#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

namespace spingeom {

enum class DiscreteOperator { dirac, connection_laplacian };
enum class Discretization { automatic, spectral, finite_difference };

inline const char* to_string(DiscreteOperator op) {
  return op == DiscreteOperator::dirac ? "D" : "connection_laplacian";
}

inline const char* to_string(Discretization d) {
  switch (d) {
    case Discretization::automatic: return "automatic";
    case Discretization::spectral: return "spectral";
    case Discretization::finite_difference: return "finite_difference";
  }
  return "?";
}

struct DiscretizedOperator {
  std::vector<int> grid;                 // points (or modes) per dimension, first index fastest
  std::vector<double> twist;             // phase parameters d_i
  std::vector<double> conformal_factor;  // u per grid point; empty for the flat metric
  DiscreteOperator operator_tag = DiscreteOperator::connection_laplacian;
  Discretization method = Discretization::spectral;
  SparseCMatrix matrix;                  // D or nabla^* nabla
  std::vector<double> mass;              // volume weight per grid point (finite differences)
  std::vector<double> spacing;           // h_i (finite differences)
  int spinor_rank = 1;
  double reliability_cutoff = 0.0;       // eigenvalues below this are resolved by the mesh

  int dimension() const { return static_cast<int>(grid.size()); }
  Eigen::Index grid_size() const {
    return std::accumulate(grid.begin(), grid.end(), Eigen::Index{1}, std::multiplies<>());
  }
};

namespace detail {

inline void check_grid(std::span<const int> grid, int n) {
  if (n != 1 && n != 2) throw InvalidArgument("discrete: only n = 1 and n = 2 are supported, got n = " + std::to_string(n));
  if (static_cast<int>(grid.size()) != n)
    throw InvalidArgument("discrete: grid has " + std::to_string(grid.size()) + " sizes for dimension " + std::to_string(n));
  for (int g : grid)
    if (g < 8) throw InvalidArgument("discrete: grid sizes must be >= 8");
}

inline bool is_zero(const std::vector<double>& u) {
  return std::all_of(u.begin(), u.end(), [](double x) { return x == 0.0; });
}

inline SparseCMatrix spectral_flat(const Eigen::MatrixXd& basis, std::span<const double> twist, std::span<const int> grid,
                                   DiscreteOperator op, double& reliability) {
  const int n = static_cast<int>(basis.rows());
  const auto rep = build_gamma_rep(n);
  const int k = rep.spinor_dim();
  const Eigen::MatrixXd binv_t = basis.inverse().transpose();
  const Eigen::Index pts = grid.size() == 1 ? grid[0] : static_cast<Eigen::Index>(grid[0]) * grid[1];
  std::vector<Eigen::Triplet<Complex>> trip;
  for (Eigen::Index p = 0; p < pts; ++p) {
    Eigen::Index rest = p;
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      const int g = grid[static_cast<std::size_t>(i)];
      const int m = static_cast<int>(rest % g) - g / 2;
      rest /= g;
      y(i) = m + twist[static_cast<std::size_t>(i)];
    }
    const Eigen::VectorXd xi = binv_t * y;
    if (op == DiscreteOperator::connection_laplacian) {
      const double v = 4.0 * kPi * kPi * xi.squaredNorm();
      for (int c = 0; c < k; ++c) trip.emplace_back(c * pts + p, c * pts + p, v);
    } else {
      CMatrix block = CMatrix::Zero(k, k);
      for (int j = 0; j < n; ++j) block += Complex(0.0, 2.0 * kPi * xi(j)) * rep.gamma(j);
      for (int r = 0; r < k; ++r)
        for (int c = 0; c < k; ++c)
          if (block(r, c) != 0.0) trip.emplace_back(r * pts + p, c * pts + p, block(r, c));
    }
  }
  // Retained modes are m_i in [lo, hi]; an omitted mode has m_i outside in
  // some direction i, and |B^{-T} y| >= |y_i| / |b_i|.
  reliability = INFINITY;
  for (int i = 0; i < n; ++i) {
    const int g = grid[static_cast<std::size_t>(i)];
    const int lo = -(g / 2), hi = g - 1 - g / 2;
    const double d = twist[static_cast<std::size_t>(i)];
    const double y = std::min(std::abs(hi + 1 + d), std::abs(lo - 1 + d));
    reliability = std::min(reliability, 4.0 * kPi * kPi * y * y / basis.col(i).squaredNorm());
  }
  SparseCMatrix a(k * pts, k * pts);
  a.setFromTriplets(trip.begin(), trip.end());
  return a;
}

// Adds w |T psi_q - psi_p|^2 to the form psi^H K psi.
inline void add_link(std::vector<Eigen::Triplet<Complex>>& trip, Eigen::Index p, Eigen::Index q, double w, Complex t) {
  trip.emplace_back(p, p, w);
  trip.emplace_back(q, q, w);
  trip.emplace_back(p, q, -w * t);
  trip.emplace_back(q, p, -w * std::conj(t));
}

inline SparseCMatrix finite_difference(const std::vector<double>& lengths, std::span<const double> twist,
                                       std::span<const int> grid, const std::vector<double>& u,
                                       std::vector<double>& mass, std::vector<double>& spacing) {
  const int n = static_cast<int>(grid.size());
  std::vector<Eigen::Triplet<Complex>> trip;
  spacing.clear();
  for (int i = 0; i < n; ++i) spacing.push_back(lengths[static_cast<std::size_t>(i)] / grid[static_cast<std::size_t>(i)]);
  auto uat = [&](Eigen::Index p) { return u.empty() ? 0.0 : u[static_cast<std::size_t>(p)]; };
  auto wrap_phase = [&](int i) { return std::polar(1.0, 2.0 * kPi * twist[static_cast<std::size_t>(i)]); };

  if (n == 1) {
    const int g = grid[0];
    const double h = spacing[0];
    mass.resize(static_cast<std::size_t>(g));
    for (int i = 0; i < g; ++i) {
      const int j = (i + 1) % g;
      const double w = std::exp(-0.5 * (uat(i) + uat(j))) / h;
      add_link(trip, i, j, w, j == 0 ? wrap_phase(0) : Complex(1.0));
      mass[static_cast<std::size_t>(i)] = std::exp(uat(i)) * h;
    }
    SparseCMatrix k(g, g);
    k.setFromTriplets(trip.begin(), trip.end());
    return k;
  }

  const int gx = grid[0], gy = grid[1];
  const double hx = spacing[0], hy = spacing[1];
  const Eigen::Index pts = static_cast<Eigen::Index>(gx) * gy;
  auto at = [&](int i, int j) { return static_cast<Eigen::Index>(((i % gx) + gx) % gx) + gx * static_cast<Eigen::Index>(((j % gy) + gy) % gy); };
  std::vector<double> ux(static_cast<std::size_t>(pts), 0.0), uy(static_cast<std::size_t>(pts), 0.0);
  mass.resize(static_cast<std::size_t>(pts));
  for (int j = 0; j < gy; ++j)
    for (int i = 0; i < gx; ++i) {
      const auto p = static_cast<std::size_t>(at(i, j));
      ux[p] = (uat(at(i + 1, j)) - uat(at(i - 1, j))) / (2.0 * hx);
      uy[p] = (uat(at(i, j + 1)) - uat(at(i, j - 1))) / (2.0 * hy);
      mass[p] = std::exp(2.0 * uat(at(i, j))) * hx * hy;
    }
  for (int c = 0; c < 2; ++c) {
    const double s = c == 0 ? 0.5 : -0.5;
    const Eigen::Index off = c * pts;
    for (int j = 0; j < gy; ++j)
      for (int i = 0; i < gx; ++i) {
        const Eigen::Index p = at(i, j);
        const Eigen::Index qx = at(i + 1, j), qy = at(i, j + 1);
        const double ax = s * 0.5 * (uy[static_cast<std::size_t>(p)] + uy[static_cast<std::size_t>(qx)]);
        const double ay = -s * 0.5 * (ux[static_cast<std::size_t>(p)] + ux[static_cast<std::size_t>(qy)]);
        Complex tx = std::polar(1.0, ax * hx), ty = std::polar(1.0, ay * hy);
        if (i == gx - 1) tx *= wrap_phase(0);
        if (j == gy - 1) ty *= wrap_phase(1);
        add_link(trip, off + p, off + qx, hy / hx, tx);
        add_link(trip, off + p, off + qy, hx / hy, ty);
      }
  }
  SparseCMatrix k(2 * pts, 2 * pts);
  k.setFromTriplets(trip.begin(), trip.end());
  return k;
}

}  // namespace detail

/// Assembles the operator with arbitrary real phase parameters d_i (d and
/// d + 1 describe the same spin structure).
inline DiscretizedOperator assemble_with_phases(const Eigen::MatrixXd& basis, std::vector<double> phases,
                                                std::vector<double> u, DiscreteOperator op, std::vector<int> grid,
                                                Discretization method = Discretization::automatic) {
  const int n = static_cast<int>(basis.rows());
  detail::check_grid(grid, n);
  if (static_cast<int>(phases.size()) != n) throw InvalidArgument("discrete: twist size does not match the dimension");
  DiscretizedOperator out;
  out.grid = grid;
  out.twist = phases;
  out.operator_tag = op;
  out.spinor_rank = spinor_rank(n);
  const Eigen::Index pts = out.grid_size();
  if (!u.empty()) {
    if (static_cast<Eigen::Index>(u.size()) != pts)
      throw InvalidArgument("discrete: conformal factor has " + std::to_string(u.size()) + " samples, expected " +
                            std::to_string(pts));
    for (double x : u)
      if (!std::isfinite(x)) throw InvalidArgument("discrete: conformal factor has non-finite samples");
    if (detail::is_zero(u)) u.clear();
  }
  if (method == Discretization::automatic)
    method = u.empty() ? Discretization::spectral : Discretization::finite_difference;
  if (method == Discretization::spectral && !u.empty())
    throw InvalidArgument("discrete: the spectral discretization covers flat metrics only");
  if (op == DiscreteOperator::dirac && method != Discretization::spectral)
    throw InvalidArgument("discrete: D is discretized only for flat metrics, spectrally");
  out.method = method;
  out.conformal_factor = u;

  if (method == Discretization::spectral) {
    out.matrix = detail::spectral_flat(basis, phases, grid, op, out.reliability_cutoff);
    return out;
  }
  const Eigen::MatrixXd g = basis.transpose() * basis;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (i != j && std::abs(g(i, j)) > 1e-14 * std::sqrt(g(i, i) * g(j, j)))
        throw InvalidArgument("discrete: finite differences require an orthogonal lattice basis");
  std::vector<double> lengths;
  for (Eigen::Index i = 0; i < n; ++i) lengths.push_back(basis.col(i).norm());
  const SparseCMatrix k = detail::finite_difference(lengths, phases, grid, u, out.mass, out.spacing);
  Eigen::VectorXcd scale(k.rows());
  for (Eigen::Index r = 0; r < k.rows(); ++r) scale(r) = 1.0 / std::sqrt(out.mass[static_cast<std::size_t>(r % pts)]);
  out.matrix = scale.asDiagonal() * k * scale.asDiagonal();
  out.matrix.makeCompressed();
  // Modes with at least eight points per wavelength on every axis.
  const double hmax = *std::max_element(out.spacing.begin(), out.spacing.end());
  out.reliability_cutoff = std::pow(2.0 * kPi / (8.0 * hmax), 2);
  return out;
}

inline DiscretizedOperator assemble(const FlatTorusSpec& spec, std::vector<double> u, DiscreteOperator op,
                                    std::vector<int> grid, Discretization method = Discretization::automatic) {
  return assemble_with_phases(spec.basis(), spec.twist(), std::move(u), op, std::move(grid), method);
}

/// Samples u at the grid points sum_i (j_i / N_i) b_i (Cartesian coordinates).
inline std::vector<double> sample_on_grid(const FlatTorusSpec& spec, std::span<const int> grid,
                                          const std::function<double(std::span<const double>)>& u) {
  const int n = spec.dimension();
  detail::check_grid(grid, n);
  Eigen::Index pts = 1;
  for (int g : grid) pts *= g;
  std::vector<double> out(static_cast<std::size_t>(pts));
  std::vector<double> x(static_cast<std::size_t>(n));
  for (Eigen::Index p = 0; p < pts; ++p) {
    Eigen::Index rest = p;
    Eigen::VectorXd frac(n);
    for (int i = 0; i < n; ++i) {
      const int g = grid[static_cast<std::size_t>(i)];
      frac(i) = static_cast<double>(rest % g) / g;
      rest /= g;
    }
    const Eigen::VectorXd c = spec.basis() * frac;
    for (int i = 0; i < n; ++i) x[static_cast<std::size_t>(i)] = c(i);
    out[static_cast<std::size_t>(p)] = u(x);
  }
  return out;
}

/// Lowest eigenpairs. For the D tag the values are those of D^2.
inline EigenDecomposition eigenvalues_lowest(const DiscretizedOperator& op, Eigen::Index count,
                                             const EigensolverOptions& opts = {}) {
  if (count < 1 || count > op.matrix.rows())
    throw InvalidArgument("eigenvalues_lowest: count must lie in [1, matrix size]");
  if (op.operator_tag == DiscreteOperator::dirac) {
    const SparseCMatrix sq = op.matrix * op.matrix;
    return lowest_eigenpairs(sq, count, opts);
  }
  return lowest_eigenpairs(op.matrix, count, opts);
}

/// Groups computed eigenvalues into a SpectrumReport; values within rel_tol
/// (relative to the largest |value|) are merged. The top cluster may be
/// truncated, so the cutoff is set to the last complete one.
inline SpectrumReport discrete_report(const DiscretizedOperator& op, const FlatTorusSpec& spec,
                                      const std::vector<double>& values, double rel_tol = 1e-8) {
  SpectrumReport rep;
  rep.op = op.operator_tag == DiscreteOperator::dirac ? OperatorTag::dirac_squared : OperatorTag::connection_laplacian;
  rep.space = op.dimension() == 1 ? "circle" : "torus";
  rep.dimension = op.dimension();
  rep.twist = op.twist;
  rep.basis = spec.basis_rows();
  rep.provenance = Provenance::discretized;
  double top = 1.0;
  for (double v : values) top = std::max(top, std::abs(v));
  for (double v : values) {
    if (!rep.pairs.empty() && std::abs(v - rep.pairs.back().value) <= rel_tol * top) {
      ++rep.pairs.back().multiplicity;
    } else {
      rep.pairs.push_back({v, 1, std::nullopt});
    }
  }
  rep.cutoff = rep.pairs.size() >= 2 ? rep.pairs[rep.pairs.size() - 2].value : (rep.pairs.empty() ? 0.0 : rep.pairs[0].value);
  return rep;
}

/// Eigenvectors of a finite-difference operator as sections on the grid:
/// result[p] is the rank x count matrix of spinor values at point p, scaled by
/// sqrt(volume) so that a unit-L^2 section of constant length has length 1.
inline std::vector<CMatrix> grid_sections(const DiscretizedOperator& op, const CMatrix& vectors) {
  if (op.method != Discretization::finite_difference)
    throw InvalidArgument("grid_sections: only finite-difference operators carry nodal values");
  const Eigen::Index pts = op.grid_size();
  const double vol = std::accumulate(op.mass.begin(), op.mass.end(), 0.0);
  std::vector<CMatrix> out(static_cast<std::size_t>(pts), CMatrix(op.spinor_rank, vectors.cols()));
  for (Eigen::Index p = 0; p < pts; ++p) {
    const double s = std::sqrt(vol / op.mass[static_cast<std::size_t>(p)]);
    for (int c = 0; c < op.spinor_rank; ++c) out[static_cast<std::size_t>(p)].row(c) = s * vectors.row(c * pts + p);
  }
  return out;
}

struct ConvergenceRow {
  int points = 0;  // per dimension
  double h = 0.0;
  long long k = 0;
  double value = 0.0;
  double reference = 0.0;
  double error = 0.0;
};

struct ConvergenceStudy {
  std::vector<ConvergenceRow> rows;
  std::vector<double> slopes;  // least-squares log-log slope per index k with nonzero error

  double min_slope() const { return slopes.empty() ? NAN : *std::min_element(slopes.begin(), slopes.end()); }
  double max_slope() const { return slopes.empty() ? NAN : *std::max_element(slopes.begin(), slopes.end()); }

  std::string to_csv() const {
    std::ostringstream os;
    os.precision(17);
    os << "grid,k,eigenvalue,error\n";
    for (const auto& r : rows) os << r.points << ',' << r.k << ',' << r.value << ',' << r.error << '\n';
    return os.str();
  }
};

/// Lowest `count` eigenvalues of the flat operator on each grid against the
/// closed form. Indices whose reference is 0 (parallel spinors) are excluded
/// from the slope fit.
inline ConvergenceStudy convergence_study(const FlatTorusSpec& spec, const std::vector<int>& points, long long count,
                                          Discretization method = Discretization::finite_difference,
                                          const EigensolverOptions& opts = {}) {
  if (points.size() < 2) throw InvalidArgument("convergence_study: need at least two grids");
  const auto exact = torus_lowest(spec, count).flattened();
  ConvergenceStudy out;
  std::vector<std::vector<ConvergenceRow>> by_k(static_cast<std::size_t>(count));
  for (int g : points) {
    const std::vector<int> grid(static_cast<std::size_t>(spec.dimension()), g);
    const auto op = assemble(spec, {}, DiscreteOperator::connection_laplacian, grid, method);
    const auto dec = eigenvalues_lowest(op, count, opts);
    const double h = spec.side_lengths()[0] / g;
    for (long long k = 0; k < count; ++k) {
      const auto ku = static_cast<std::size_t>(k);
      ConvergenceRow r{g, h, k + 1, dec.values[ku], exact[ku], std::abs(dec.values[ku] - exact[ku])};
      out.rows.push_back(r);
      by_k[ku].push_back(r);
    }
  }
  for (const auto& series : by_k) {
    if (series.front().reference == 0.0) continue;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double m = static_cast<double>(series.size());
    for (const auto& r : series) {
      const double x = std::log(r.h), y = std::log(r.error);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    out.slopes.push_back((m * sxy - sx * sy) / (m * sxx - sx * sx));
  }
  return out;
}

struct PerturbationReport {
  double norm_2u = 0.0;          // ||2u||_inf
  double gradient_norm = 0.0;    // ||du||_inf
  double connection_bound = 0.0; // sqrt(3n - 2) ||du||_inf
  double delta = 0.0;
  std::vector<double> lambda_flat;       // lambda_k(g), g flat
  std::vector<double> lambda_perturbed;  // lambda_k(e^{2u} g)
  std::vector<double> ratios;            // lambda_k(g) / lambda_k(e^{2u} g); NaN where the latter is 0
  double tau_hat = 0.0;
  double tau_budget = 0.0;
  bool pass = false;
  std::string connection_formula = "|nabla - nabla~| <= sqrt(3n-2) * max|du|";
  std::string budget_formula = "5 * delta * (1 + lambda_kmax(g))";
};

/// Two-sided comparison of nabla^* nabla spectra for g and e^{2u} g on the same
/// finite-difference grid: the smallest tau with
///   e^{-1.001 delta} lambda_k(g~) - tau <= lambda_k(g) <= e^{1.001 delta} lambda_k(g~) + tau
/// for all k <= k_max, compared against the budget 5 delta (1 + lambda_kmax(g)).
inline PerturbationReport perturbation_check(const FlatTorusSpec& spec, const std::vector<double>& u, long long k_max,
                                             std::vector<int> grid, const EigensolverOptions& opts = {}) {
  const int n = spec.dimension();
  detail::check_grid(grid, n);
  if (k_max < 1) throw InvalidArgument("perturbation_check: k_max must be >= 1");
  PerturbationReport rep;
  for (double x : u) rep.norm_2u = std::max(rep.norm_2u, 2.0 * std::abs(x));
  if (!(rep.norm_2u <= 0.2))
    throw InvalidArgument("perturbation_check: ||2u||_inf = " + std::to_string(rep.norm_2u) +
                          " is outside the admissible regime (<= 0.2)");

  const auto flat = assemble(spec, {}, DiscreteOperator::connection_laplacian, grid, Discretization::finite_difference);
  const auto pert = assemble(spec, u, DiscreteOperator::connection_laplacian, grid, Discretization::finite_difference);
  if (u.empty()) throw InvalidArgument("perturbation_check: conformal factor samples are required");

  // max |du| by centered differences.
  const auto& h = flat.spacing;
  const Eigen::Index pts = flat.grid_size();
  for (Eigen::Index p = 0; p < pts; ++p) {
    double s = 0.0;
    Eigen::Index stride = 1;
    for (int i = 0; i < n; ++i) {
      const auto g = static_cast<Eigen::Index>(grid[static_cast<std::size_t>(i)]);
      const Eigen::Index ci = (p / stride) % g;
      const Eigen::Index base = p - ci * stride;
      const Eigen::Index fwd = base + ((ci + 1) % g) * stride;
      const Eigen::Index bwd = base + ((ci + g - 1) % g) * stride;
      const double d = (u[static_cast<std::size_t>(fwd)] - u[static_cast<std::size_t>(bwd)]) / (2.0 * h[static_cast<std::size_t>(i)]);
      s += d * d;
      stride *= g;
    }
    rep.gradient_norm = std::max(rep.gradient_norm, std::sqrt(s));
  }
  rep.connection_bound = std::sqrt(3.0 * n - 2.0) * rep.gradient_norm;
  rep.delta = std::max(rep.norm_2u, rep.connection_bound);

  rep.lambda_flat = eigenvalues_lowest(flat, k_max, opts).values;
  rep.lambda_perturbed = eigenvalues_lowest(pert, k_max, opts).values;
  const double up = std::exp(1.001 * rep.delta), down = std::exp(-1.001 * rep.delta);
  for (std::size_t k = 0; k < rep.lambda_flat.size(); ++k) {
    const double a = rep.lambda_flat[k], b = rep.lambda_perturbed[k];
    rep.ratios.push_back(b == 0.0 ? NAN : a / b);
    rep.tau_hat = std::max({rep.tau_hat, down * b - a, a - up * b});
  }
  rep.tau_budget = 5.0 * rep.delta * (1.0 + rep.lambda_flat.back());
  rep.pass = rep.tau_hat <= rep.tau_budget;
  return rep;
}

}  // namespace spingeom

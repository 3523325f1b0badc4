#pragma once

// Warped metrics dt^2 + phi(t)^2 h on (-(a+rho), a+rho) x S^3 (h the unit
// round metric) whose ends are exactly Euclidean annuli and whose scalar
// curvature stays above -eps.
//
// Profile family, in s = |t| and with a = R:
//   core   s <= a - 2 ell   phi = sqrt(s^2 + b^2)          (scal = 0)
//   blend  a - 2 ell <= s <= a
//          phi = s + W(tau) e(s),  e = sqrt(s^2 + b^2) - s,  W = 1 - S,
//          S the quintic smoothstep, tau = (s - a + 2 ell) / (2 ell)
//   end    a <= s <= a + rho    phi = s - a + R               (flat)
// S has vanishing first and second derivatives at both ends, so phi is C^2.
//
// scal = 6 (1 - phi'^2) / phi^2 - 6 phi'' / phi.

#include "spingeom/common.hpp"
#include "spingeom/parallel.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <sstream>
#include <vector>

namespace spingeom {

/// Analytic member of the catenoid-plus-blend family.
struct NeckShape {
  double R = 1.0;
  double rho = 1.0;
  double b = 0.1;
  double ell = 0.1;

  double a() const { return R; }

  struct Jet {
    double phi, dphi, ddphi, scal;
  };

  /// phi and its derivatives at t, with scal evaluated without cancellation.
  Jet jet(double t) const {
    const double s = std::abs(t);
    const double sign = t < 0.0 ? -1.0 : 1.0;
    const double core_end = a() - 2.0 * ell;
    if (s >= a()) return {s - a() + R, sign, 0.0, 0.0};
    const double pc = std::hypot(s, b);
    if (s <= core_end) return {pc, sign * s / pc, b * b / (pc * pc * pc), 0.0};
    const double tau = (s - core_end) / (2.0 * ell);
    const double sp = 30.0 * tau * tau * (1.0 - tau) * (1.0 - tau);
    const double spp = 60.0 * tau * (1.0 - tau) * (1.0 - 2.0 * tau);
    const double w = 1.0 - tau * tau * tau * (10.0 - 15.0 * tau + 6.0 * tau * tau);
    const double wt = -sp / (2.0 * ell), wtt = -spp / (4.0 * ell * ell);
    const double e = b * b / (pc + s);
    const double e1 = -e / pc, e2 = b * b / (pc * pc * pc);
    const double phi = s + w * e;
    const double delta = w * e1 + wt * e;  // phi' - 1
    const double ddphi = w * e2 + 2.0 * wt * e1 + wtt * e;
    const double q = -delta * (2.0 + delta) - phi * ddphi;
    return {phi, sign * (1.0 + delta), ddphi, 6.0 * q / (phi * phi)};
  }

  double phi(double t) const { return jet(t).phi; }
};

struct WarpProfile {
  std::vector<double> t;
  std::vector<double> phi;
  std::vector<std::size_t> junctions;  // first sample of each analytic piece after the first
  double eps = 0.0;
  double R = 0.0, rho = 0.0, a = 0.0;
  std::optional<NeckShape> shape;     // set for profiles built by construct_neck
  std::function<double(double)> model;  // phi as a function, when known

  double spacing() const { return t.size() < 2 ? 0.0 : (t.back() - t.front()) / static_cast<double>(t.size() - 1); }

  /// Samples fn on n points of [t0, t1]; breaks are the t-values where analytic pieces meet.
  static WarpProfile sample(const std::function<double(double)>& fn, double t0, double t1, std::size_t n,
                            const std::vector<double>& breaks = {}, double eps = 0.0) {
    if (n < 8 || !(t1 > t0)) throw InvalidArgument("WarpProfile::sample: need at least 8 samples on a non-empty interval");
    WarpProfile p;
    p.eps = eps;
    p.model = fn;
    p.t.resize(n);
    const double h = (t1 - t0) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) p.t[i] = t0 + h * static_cast<double>(i);
    // Mirror the grid exactly when it is symmetric about 0.
    if (t0 == -t1)
      for (std::size_t i = 0; i < n / 2; ++i) p.t[n - 1 - i] = -p.t[i];
    p.phi.resize(n);
    for (std::size_t i = 0; i < n; ++i) p.phi[i] = fn(p.t[i]);
    for (double br : breaks) {
      std::size_t j = 0;
      while (j < n && p.t[j] < br) ++j;
      if (j > 0 && j < n) p.junctions.push_back(j);
    }
    std::sort(p.junctions.begin(), p.junctions.end());
    p.junctions.erase(std::unique(p.junctions.begin(), p.junctions.end()), p.junctions.end());
    return p;
  }
};

namespace detail {

// Fornberg's weights for derivatives 0..2 at z on the given nodes.
inline std::array<std::vector<double>, 3> fornberg(double z, const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::array<std::vector<double>, 3> c;
  for (auto& v : c) v.assign(n, 0.0);
  double c1 = 1.0, c4 = x[0] - z;
  c[0][0] = 1.0;
  for (std::size_t i = 1; i < n; ++i) {
    const std::size_t mn = std::min<std::size_t>(i, 2);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = x[i] - z;
    for (std::size_t j = 0; j < i; ++j) {
      const double c3 = x[i] - x[j];
      c2 *= c3;
      if (j == i - 1) {
        for (std::size_t k = mn; k >= 1; --k)
          c[k][i] = c1 * (static_cast<double>(k) * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
        c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
      }
      for (std::size_t k = mn; k >= 1; --k) c[k][j] = (c4 * c[k][j] - static_cast<double>(k) * c[k - 1][j]) / c3;
      c[0][j] = c4 * c[0][j] / c3;
    }
    c1 = c2;
  }
  return c;
}

// First and second derivative at sample i from a window of `width` nodes
// inside [lo, hi], centered when possible.
inline std::pair<double, double> window_derivatives(const WarpProfile& p, std::size_t i, std::size_t lo, std::size_t hi,
                                                    std::size_t width) {
  const std::size_t len = hi - lo + 1;
  if (len < width) throw InvalidArgument("scal_of_profile: grid too coarse (a piece has fewer than " +
                                         std::to_string(width) + " samples)");
  std::size_t start = i >= lo + width / 2 ? i - width / 2 : lo;
  if (start + width - 1 > hi) start = hi + 1 - width;
  std::vector<double> x(p.t.begin() + static_cast<std::ptrdiff_t>(start),
                        p.t.begin() + static_cast<std::ptrdiff_t>(start + width));
  const auto w = fornberg(p.t[i], x);
  double d1 = 0.0, d2 = 0.0;
  for (std::size_t k = 0; k < width; ++k) {
    d1 += w[1][k] * p.phi[start + k];
    d2 += w[2][k] * p.phi[start + k];
  }
  return {d1, d2};
}

inline double warped_scal(double phi, double dphi, double ddphi) {
  return 6.0 * (1.0 - dphi * dphi) / (phi * phi) - 6.0 * ddphi / phi;
}

}  // namespace detail

struct ScalSamples {
  std::vector<double> scal;
  double noise = 0.0;  // max |fourth-order - second-order| over samples
  double min() const { return *std::min_element(scal.begin(), scal.end()); }
};

/// scal(t) per sample from fourth-order finite differences that never straddle a junction.
/// Throws when phi <= 0 or when the stencil noise estimate exceeds eps / 10.
inline ScalSamples scal_of_profile(const WarpProfile& p) {
  if (p.t.size() != p.phi.size() || p.t.size() < 8) throw InvalidArgument("scal_of_profile: malformed profile");
  for (double v : p.phi)
    if (!(v > 0.0)) throw InvalidArgument("scal_of_profile: phi must be positive");
  std::vector<std::size_t> cuts{0};
  cuts.insert(cuts.end(), p.junctions.begin(), p.junctions.end());
  cuts.push_back(p.t.size());
  ScalSamples out;
  out.scal.resize(p.t.size());
  for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
    const std::size_t lo = cuts[s], hi = cuts[s + 1] - 1;
    for (std::size_t i = lo; i <= hi; ++i) {
      const bool interior = i >= lo + 2 && i + 2 <= hi;
      const auto [d1, d2] = detail::window_derivatives(p, i, lo, hi, interior ? 5 : 6);
      const auto [e1, e2] = detail::window_derivatives(p, i, lo, hi, interior ? 3 : 4);
      out.scal[i] = detail::warped_scal(p.phi[i], d1, d2);
      out.noise = std::max(out.noise, std::abs(out.scal[i] - detail::warped_scal(p.phi[i], e1, e2)));
    }
  }
  if (p.eps > 0.0 && out.noise > 0.1 * p.eps)
    throw InvalidArgument("scal_of_profile: grid too coarse (stencil noise " + std::to_string(out.noise) +
                          " exceeds eps/10 = " + std::to_string(0.1 * p.eps) + ")");
  return out;
}

namespace detail {

using Mat4 = std::array<std::array<double, 4>, 4>;
using Chr = std::array<Mat4, 4>;  // Gamma[k][i][j]

inline Mat4 inverse_diagonal_tolerant(const Mat4& g) {
  // Gauss-Jordan on a 4x4; the metric is positive definite.
  Mat4 a = g, inv{};
  for (int i = 0; i < 4; ++i) inv[i][i] = 1.0;
  for (int c = 0; c < 4; ++c) {
    int piv = c;
    for (int r = c + 1; r < 4; ++r)
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    std::swap(a[c], a[piv]);
    std::swap(inv[c], inv[piv]);
    const double d = a[c][c];
    for (int k = 0; k < 4; ++k) {
      a[c][k] /= d;
      inv[c][k] /= d;
    }
    for (int r = 0; r < 4; ++r) {
      if (r == c) continue;
      const double f = a[r][c];
      for (int k = 0; k < 4; ++k) {
        a[r][k] -= f * a[c][k];
        inv[r][k] -= f * inv[c][k];
      }
    }
  }
  return inv;
}

template <class F>
auto central5(F&& f, const std::array<double, 4>& x, int dir, double h) {
  auto at = [&](double s) {
    auto y = x;
    y[static_cast<std::size_t>(dir)] += s * h;
    return f(y);
  };
  const auto m2 = at(-2), m1 = at(-1), p1 = at(1), p2 = at(2);
  auto out = m2;
  using T = std::decay_t<decltype(m2)>;
  if constexpr (std::is_same_v<T, Mat4>) {
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) out[i][j] = (m2[i][j] - 8.0 * m1[i][j] + 8.0 * p1[i][j] - p2[i][j]) / (12.0 * h);
  } else {
    for (int k = 0; k < 4; ++k)
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
          out[k][i][j] = (m2[k][i][j] - 8.0 * m1[k][i][j] + 8.0 * p1[k][i][j] - p2[k][i][j]) / (12.0 * h);
  }
  return out;
}

}  // namespace detail

/// Scalar curvature of dt^2 + phi(t)^2 (dchi^2 + sin^2 chi (dtheta^2 + sin^2 theta dpsi^2))
/// at (t, chi, theta, psi) computed from the metric components alone: Christoffel
/// symbols by finite differences of g, Ricci by finite differences of the symbols.
inline double finite_difference_curvature_oracle(const WarpProfile& p, double t,
                                                 std::array<double, 3> angles = {1.1, 0.7, 0.3}) {
  if (!p.model) throw InvalidArgument("curvature oracle: profile has no analytic model");
  if (p.t.empty() || !(t > p.t.front() && t < p.t.back())) throw InvalidArgument("curvature oracle: t must be interior");
  const double phi0 = p.model(t);
  if (!(phi0 > 0.0)) throw InvalidArgument("curvature oracle: phi must be positive");
  using detail::Mat4;
  using detail::Chr;
  auto metric = [&](const std::array<double, 4>& x) {
    Mat4 g{};
    const double f = p.model(x[0]);
    const double s1 = std::sin(x[1]), s2 = std::sin(x[2]);
    g[0][0] = 1.0;
    g[1][1] = f * f;
    g[2][2] = f * f * s1 * s1;
    g[3][3] = f * f * s1 * s1 * s2 * s2;
    return g;
  };
  const std::array<double, 4> steps{2e-3 * phi0, 2e-3, 2e-3, 2e-3};
  auto christoffel = [&](const std::array<double, 4>& x) {
    const Mat4 g = metric(x), gi = detail::inverse_diagonal_tolerant(g);
    std::array<Mat4, 4> dg;
    for (int l = 0; l < 4; ++l) dg[static_cast<std::size_t>(l)] = detail::central5(metric, x, l, steps[static_cast<std::size_t>(l)]);
    Chr c{};
    for (int k = 0; k < 4; ++k)
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
          double s = 0.0;
          for (int l = 0; l < 4; ++l) s += gi[k][l] * (dg[i][j][l] + dg[j][i][l] - dg[l][i][j]);
          c[k][i][j] = 0.5 * s;
        }
    return c;
  };
  const std::array<double, 4> x{t, angles[0], angles[1], angles[2]};
  const Chr c = christoffel(x);
  std::array<Chr, 4> dc;
  for (int m = 0; m < 4; ++m) dc[static_cast<std::size_t>(m)] = detail::central5(christoffel, x, m, steps[static_cast<std::size_t>(m)]);
  const Mat4 gi = detail::inverse_diagonal_tolerant(metric(x));
  double scal = 0.0;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      double ric = 0.0;
      for (int k = 0; k < 4; ++k) {
        ric += dc[k][k][i][j] - dc[j][k][i][k];
        for (int l = 0; l < 4; ++l) ric += c[k][k][l] * c[l][i][j] - c[k][j][l] * c[l][i][k];
      }
      scal += gi[i][j] * ric;
    }
  return scal;
}

struct NeckOptions {
  std::size_t samples = 10000;
  std::optional<double> length_budget;  // cap on a + rho; default (6 - pi)(R + rho)/2
  int ell_steps = 9;                    // ell in {0.45 R j / ell_steps}
  int bisection_steps = 60;
  double margin = 0.1;  // search targets scal >= -(1 - margin) eps, leaving room for stencil noise
};

struct NeckDiagnostics {
  double scal_min = 0.0;        // analytic, over the samples
  double end_value_error = 0.0; // |phi(a) - R|
  double end_slope_error = 0.0; // |phi'(a-) - 1|
  double diam_estimate = 0.0;   // 2(a + rho) + pi max phi
  double diam_cap = 0.0;        // 6(R + rho)
  double length_cap = 0.0;
  double phi_min = 0.0;
  std::optional<double> fd_scal_min;  // when the sample grid resolves the core
  std::string fd_status;
  std::vector<std::string> violated;
};

struct NeckResult {
  bool feasible = false;
  WarpProfile profile;
  NeckShape shape;
  NeckDiagnostics diagnostics;
};

namespace detail {

inline double sampled_scal_min(const NeckShape& s, const std::vector<double>& t) {
  double m = INFINITY;
  for (std::size_t i = t.size() / 2; i < t.size(); ++i) m = std::min(m, s.jet(t[i]).scal);
  return m;
}

inline std::vector<double> symmetric_grid(double half, std::size_t n) {
  std::vector<double> t(n);
  const double h = 2.0 * half / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) t[i] = -half + h * static_cast<double>(i);
  for (std::size_t i = 0; i < n / 2; ++i) t[n - 1 - i] = -t[i];
  if (n % 2 == 1) t[n / 2] = 0.0;
  return t;
}

}  // namespace detail

/// Searches (b, ell) for the largest core parameter b meeting scal >= -(1 - margin) eps at every
/// sample, then verifies the chosen profile against -eps, also by finite differences.
/// An infeasible request returns the best candidate with its violated constraints listed.
inline NeckResult construct_neck(double eps, double R, double rho, const NeckOptions& opts = {}) {
  if (!(eps > 0.0) || !(R > 0.0) || !(rho > 0.0)) throw InvalidArgument("construct_neck: eps, R and rho must be positive");
  if (opts.samples < 16) throw InvalidArgument("construct_neck: at least 16 samples are required");
  if (opts.ell_steps < 1 || opts.bisection_steps < 1) throw InvalidArgument("construct_neck: search sizes must be positive");
  if (!(opts.margin >= 0.0 && opts.margin < 1.0)) throw InvalidArgument("construct_neck: margin must lie in [0, 1)");
  const double target = -(1.0 - opts.margin) * eps;
  const double a = R;
  const double length_cap = opts.length_budget.value_or((6.0 - kPi) * (R + rho) / 2.0);
  const auto t = detail::symmetric_grid(a + rho, opts.samples);

  struct Candidate {
    NeckShape shape;
    double scal_min = -INFINITY;
    bool ok = false;
  };
  std::vector<Candidate> cands(static_cast<std::size_t>(opts.ell_steps));
  parallel_for(cands.size(), [&](std::size_t j) {
    NeckShape s{R, rho, R, 0.45 * R * static_cast<double>(j + 1) / opts.ell_steps};
    auto feasible = [&](double b) {
      s.b = b;
      return detail::sampled_scal_min(s, t) >= target;
    };
    double lo = 1e-12 * R, hi = R;
    Candidate c;
    if (feasible(hi)) {
      lo = hi;
    } else if (!feasible(lo)) {
      s.b = lo;
      c.shape = s;
      c.scal_min = detail::sampled_scal_min(s, t);
      cands[j] = c;
      return;
    } else {
      for (int it = 0; it < opts.bisection_steps; ++it) {
        const double mid = std::sqrt(lo * hi);
        (feasible(mid) ? lo : hi) = mid;
      }
    }
    s.b = lo;
    c.shape = s;
    c.scal_min = detail::sampled_scal_min(s, t);
    c.ok = c.scal_min >= target;
    cands[j] = c;
  });

  const Candidate* best = &cands.front();
  for (const auto& c : cands) {
    if (c.ok != best->ok) {
      if (c.ok) best = &c;
      continue;
    }
    if (c.ok ? c.shape.b > best->shape.b : c.scal_min > best->scal_min) best = &c;
  }

  NeckResult res;
  res.shape = best->shape;
  const NeckShape shape = best->shape;
  res.profile = WarpProfile::sample([shape](double x) { return shape.phi(x); }, -(a + rho), a + rho, opts.samples,
                                    {-a, -(a - 2.0 * shape.ell), a - 2.0 * shape.ell, a}, eps);
  res.profile.t = t;
  for (std::size_t i = 0; i < t.size(); ++i) res.profile.phi[i] = shape.phi(t[i]);
  res.profile.R = R;
  res.profile.rho = rho;
  res.profile.a = a;
  res.profile.shape = shape;

  auto& d = res.diagnostics;
  d.scal_min = detail::sampled_scal_min(shape, t);
  const auto end = shape.jet(a);
  const auto left = shape.jet(std::nextafter(a, 0.0));
  d.end_value_error = std::abs(end.phi - R);
  d.end_slope_error = std::abs(left.dphi - 1.0);
  d.phi_min = *std::min_element(res.profile.phi.begin(), res.profile.phi.end());
  d.diam_estimate = 2.0 * (a + rho) + kPi * *std::max_element(res.profile.phi.begin(), res.profile.phi.end());
  d.diam_cap = 6.0 * (R + rho);
  d.length_cap = length_cap;
  try {
    d.fd_scal_min = scal_of_profile(res.profile).min();
    d.fd_status = "resolved";
  } catch (const InvalidArgument& e) {
    d.fd_status = e.what();
  }
  if (d.scal_min < -eps) d.violated.push_back("scal_min " + std::to_string(d.scal_min) + " < -eps");
  if (d.end_value_error > 1e-8) d.violated.push_back("phi(a) != R");
  if (d.end_slope_error > 1e-8) d.violated.push_back("phi'(a-) != 1");
  if (d.diam_estimate > d.diam_cap) d.violated.push_back("diameter estimate above 6(R + rho)");
  if (a + rho > length_cap) d.violated.push_back("a + rho above the length budget");
  if (!(d.phi_min > 0.0)) d.violated.push_back("phi not positive");
  if (d.fd_scal_min && *d.fd_scal_min < -eps) d.violated.push_back("finite-difference scal below -eps");
  res.feasible = d.violated.empty();
  return res;
}

struct FrontierRow {
  double eps;
  bool feasible;
  double b;
  double ell;
  double scal_min;
};

/// construct_neck over a list of eps values (sorted ascending in the output).
inline std::vector<FrontierRow> feasibility_frontier(std::vector<double> eps_values, double R, double rho,
                                                     const NeckOptions& opts = {}) {
  std::sort(eps_values.begin(), eps_values.end());
  std::vector<FrontierRow> rows;
  for (double e : eps_values) {
    const auto r = construct_neck(e, R, rho, opts);
    rows.push_back({e, r.feasible, r.shape.b, r.shape.ell, r.diagnostics.scal_min});
  }
  return rows;
}

/// Feasibility never lost and b never decreasing as eps grows.
inline bool frontier_monotone(const std::vector<FrontierRow>& rows) {
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i - 1].feasible && !rows[i].feasible) return false;
    if (rows[i - 1].feasible && rows[i].b < rows[i - 1].b) return false;
  }
  return true;
}

inline nlohmann::json to_json(const NeckResult& r, bool include_samples = true) {
  const auto& d = r.diagnostics;
  nlohmann::json j{{"eps", r.profile.eps},           {"R", r.profile.R},
                   {"rho", r.profile.rho},           {"a", r.profile.a},
                   {"b", r.shape.b},                 {"ell", r.shape.ell},
                   {"scal_min", d.scal_min},         {"diam_estimate", d.diam_estimate},
                   {"diam_cap", d.diam_cap},         {"end_value_error", d.end_value_error},
                   {"end_slope_error", d.end_slope_error},
                   {"fd_status", d.fd_status},       {"violated", d.violated},
                   {"verdict", r.feasible ? "FEASIBLE" : "INFEASIBLE"}};
  j["fd_scal_min"] = d.fd_scal_min ? nlohmann::json(*d.fd_scal_min) : nlohmann::json(nullptr);
  if (include_samples) {
    j["t"] = r.profile.t;
    j["phi"] = r.profile.phi;
  }
  return j;
}

/// t, phi, scal per sample (analytic scal).
inline std::string to_csv(const NeckResult& r) {
  std::ostringstream os;
  os.precision(17);
  os << "t,phi,scal\n";
  for (std::size_t i = 0; i < r.profile.t.size(); ++i)
    os << r.profile.t[i] << ',' << r.profile.phi[i] << ',' << r.shape.jet(r.profile.t[i]).scal << '\n';
  return os.str();
}

}  // namespace spingeom

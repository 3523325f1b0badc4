#pragma once

// Closed-form eigenvalue inequalities and their comparison against the
// computed spectra.

#include "spingeom/fixing.hpp"
#include "spingeom/modelspectra.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <functional>

namespace spingeom {

struct GeomData {
  int n = 2;
  double volume = 0.0;  // area when n = 2
  double diam = 0.0;
  double sec_bound = 0.0;
  double min_scal = 0.0;
  std::optional<long long> a_hat;

  void validate() const {
    if (n < 2) throw InvalidArgument("GeomData: n must be >= 2");
    if (!(volume > 0.0)) throw InvalidArgument("GeomData: volume must be positive");
    if (!(diam > 0.0)) throw InvalidArgument("GeomData: diameter must be positive");
    if (sec_bound < 0.0) throw InvalidArgument("GeomData: sectional curvature bound must be >= 0");
  }
};

/// lambda_1(D^2) >= 4 pi / area on a 2-sphere.
inline double baer_bound(double area) {
  if (!(area > 0.0)) throw InvalidArgument("baer_bound: area must be positive");
  return 4.0 * kPi / area;
}

/// 2 delta^2 / (cosh(delta diam) - 1), written as delta^2 / sinh^2(delta diam / 2)
/// so that the delta -> 0 limit 4 / diam^2 is reached without cancellation.
inline double baer_curvature_form(double delta, double diam) {
  if (!(delta > 0.0) || !(diam > 0.0)) throw InvalidArgument("baer_curvature_form: delta and diam must be positive");
  const double s = std::sinh(0.5 * delta * diam);
  return delta * delta / (s * s);
}

/// pi^2 / (4 diam^2) e^{-4 S} for a flat-conformal 2-torus with nontrivial spin structure.
inline double torus_conformal_bound(double diam, double s_value) {
  if (!(diam > 0.0)) throw InvalidArgument("torus_conformal_bound: diam must be positive");
  if (!(s_value >= 0.0)) throw InvalidArgument("torus_conformal_bound: S must be >= 0");
  return kPi * kPi / (4.0 * diam * diam) * std::exp(-4.0 * s_value);
}

/// Same bound with a caller-supplied spread function S(K, D); S(0, D) = 0 is enforced.
inline double torus_conformal_bound(double diam, double sec_bound, const std::function<double(double, double)>& spread) {
  if (spread(0.0, diam) != 0.0) throw InvalidArgument("torus_conformal_bound: S(0, D) must vanish");
  return torus_conformal_bound(diam, spread(sec_bound, diam));
}

/// The bound at S = 0 as an exact coefficient of pi^2, from diam^2.
inline Rational torus_conformal_bound_exact(const Rational& diam_squared) {
  if (diam_squared <= 0) throw InvalidArgument("torus_conformal_bound_exact: diam^2 must be positive");
  return Rational(1) / (Rational(4) * diam_squared);
}

/// lambda_k(nabla^* nabla) + min_scal / 4, a lower bound for lambda_k(D^2).
inline std::vector<double> lichnerowicz_shift(const std::vector<double>& nabla_spectrum, double min_scal) {
  if (!std::is_sorted(nabla_spectrum.begin(), nabla_spectrum.end()))
    throw InvalidArgument("lichnerowicz_shift: spectrum must be ascending");
  std::vector<double> out;
  out.reserve(nabla_spectrum.size());
  for (double v : nabla_spectrum) out.push_back(v + 0.25 * min_scal);
  return out;
}

struct LichnerowiczCheck {
  bool exact = false;        // every pair differs by exactly scal / 4
  std::size_t compared = 0;
  double max_deviation = 0.0;  // in floating point, for information
};

/// With constant scal, spectrum(D^2) = spectrum(nabla^* nabla) + scal / 4 pair by pair.
/// scal is given in the reports' exact unit.
inline LichnerowiczCheck lichnerowicz_exact(const SpectrumReport& dirac_sq, const SpectrumReport& nabla,
                                            const Rational& scal) {
  if (dirac_sq.op != OperatorTag::dirac_squared || nabla.op != OperatorTag::connection_laplacian)
    throw InvalidArgument("lichnerowicz_exact: expected a D^2 report and a connection-Laplacian report");
  if (dirac_sq.exact_unit != nabla.exact_unit) throw InvalidArgument("lichnerowicz_exact: exact units differ");
  LichnerowiczCheck out;
  out.exact = dirac_sq.pairs.size() == nabla.pairs.size() && !dirac_sq.pairs.empty();
  const Rational shift = scal / 4;
  const double shift_d = to_double(shift) * (dirac_sq.exact_unit == "pi^2" ? kPi * kPi : 1.0);
  for (std::size_t i = 0; i < std::min(dirac_sq.pairs.size(), nabla.pairs.size()); ++i) {
    const auto& a = dirac_sq.pairs[i];
    const auto& b = nabla.pairs[i];
    ++out.compared;
    out.max_deviation = std::max(out.max_deviation, std::abs(a.value - b.value - shift_d));
    out.exact = out.exact && a.multiplicity == b.multiplicity && a.exact && b.exact && *a.exact - *b.exact == shift;
  }
  return out;
}

enum class IndexVerdict { obstructed, no_conclusion };

inline const char* to_string(IndexVerdict v) { return v == IndexVerdict::obstructed ? "OBSTRUCTED" : "NO_CONCLUSION"; }

struct IndexObstruction {
  IndexVerdict verdict = IndexVerdict::no_conclusion;
  int r = 0;
  long long a_hat = 0;
  long long kernel_lower_bound = 0;  // dim ker D >= |A-hat|
};

/// |A-hat| >= r(n) rules out metrics in the almost non-negative scalar curvature class.
inline IndexObstruction index_obstruction(long long a_hat, int n) {
  if (n < 2 || n % 2 != 0) throw InvalidArgument("index_obstruction: n must be even and >= 2");
  IndexObstruction out;
  out.r = spin_fixing_dimension(n);
  out.a_hat = a_hat;
  out.kernel_lower_bound = a_hat < 0 ? -a_hat : a_hat;
  out.verdict = out.kernel_lower_bound >= out.r ? IndexVerdict::obstructed : IndexVerdict::no_conclusion;
  return out;
}

/// n rho / 2 + eps.
inline double friedrich_threshold(int n, double killing_rho, double eps) {
  if (n < 2) throw InvalidArgument("friedrich_threshold: n must be >= 2");
  if (!(killing_rho > 0.0)) throw InvalidArgument("friedrich_threshold: rho must be positive");
  if (!(eps >= 0.0)) throw InvalidArgument("friedrich_threshold: eps must be >= 0");
  return 0.5 * n * killing_rho + eps;
}

struct FriedrichCheck {
  double threshold = 0.0;
  Rational smallest_abs;       // smallest |D| on the unit S^n
  long long count_below = 0;   // |D| eigenvalues in [0, threshold), with multiplicity
  long long count_at_smallest = 0;
  int r = 0;
  bool qualifies = false;      // at least r(n) eigenvalues in [0, threshold]
};

/// The round unit S^n against the threshold n/2 + eps (rho = 1).
inline FriedrichCheck friedrich_sphere_check(int n, double eps) {
  FriedrichCheck out;
  out.threshold = friedrich_threshold(n, 1.0, eps);
  out.r = spin_fixing_dimension(n);
  const auto ev = sphere_dirac_eigenvalues(n, out.threshold + 1.0);
  out.smallest_abs = Rational(n, 2);
  for (const auto& e : ev) {
    const Rational a = e.value < 0 ? Rational(-e.value) : e.value;
    if (to_double(a) < out.threshold) out.count_below += e.multiplicity;
    if (a == out.smallest_abs) out.count_at_smallest += e.multiplicity;
  }
  out.qualifies = out.count_at_smallest >= out.r && to_double(out.smallest_abs) <= out.threshold;
  return out;
}

inline nlohmann::json to_json(const IndexObstruction& o) {
  return {{"a_hat", o.a_hat}, {"r", o.r}, {"verdict", to_string(o.verdict)}, {"kernel_lower_bound", o.kernel_lower_bound}};
}

inline nlohmann::json to_json(const FriedrichCheck& f) {
  return {{"threshold", f.threshold},      {"smallest_abs", to_string(f.smallest_abs)},
          {"count_below", f.count_below},  {"count_at_smallest", f.count_at_smallest},
          {"r", f.r},                      {"qualifies", f.qualifies}};
}

inline nlohmann::json to_json(const LichnerowiczCheck& c) {
  return {{"exact", c.exact}, {"compared", c.compared}, {"max_deviation", c.max_deviation}};
}

}  // namespace spingeom

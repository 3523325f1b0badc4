#pragma once

// The ten acceptance criteria. Each runs self-contained and reports pass/fail
// with the measured quantities; `spingeom verify` and the acceptance test
// binary both call run_acceptance().

#include "spingeom/bounds.hpp"
#include "spingeom/clifford.hpp"
#include "spingeom/discrete.hpp"
#include "spingeom/fixing.hpp"
#include "spingeom/frames.hpp"
#include "spingeom/modelspectra.hpp"
#include "spingeom/neck.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <functional>
#include <random>
#include <sstream>

namespace spingeom {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

struct AcceptanceOptions {
  std::uint64_t seed = 1;
};

namespace acceptance {

class Checker {
 public:
  void require(bool cond, const std::string& what) {
    if (!cond) {
      ok_ = false;
      failures_ << (failures_.tellp() > 0 ? "; " : "") << what;
    }
  }
  template <class T>
  void note(const std::string& key, const T& value) {
    notes_ << (notes_.tellp() > 0 ? ", " : "") << key << '=' << value;
  }
  bool ok() const { return ok_; }
  std::string detail() const {
    return ok_ ? notes_.str() : "FAILED: " + failures_.str() + (notes_.str().empty() ? "" : " | " + notes_.str());
  }

 private:
  bool ok_ = true;
  std::ostringstream failures_, notes_;
};

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline CMatrix random_unitary(Eigen::Index k, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  CMatrix g(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j) g(i, j) = Complex{nd(rng), nd(rng)};
  Eigen::HouseholderQR<CMatrix> qr(g);
  return qr.householderQ() * CMatrix::Identity(k, k);
}

// r orthonormal sections on `pts` points, each entry moved by at most eta.
inline SectionFamily perturbed_family(Eigen::Index k, Eigen::Index r, std::size_t pts, double eta, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ud(-1.0, 1.0);
  SectionFamily f;
  f.mesh = {pts};
  f.spacing = {1.0 / static_cast<double>(pts)};
  for (std::size_t p = 0; p < pts; ++p) {
    CMatrix s = random_unitary(k, rng).leftCols(r);
    for (Eigen::Index i = 0; i < k; ++i)
      for (Eigen::Index j = 0; j < r; ++j) s(i, j) += eta * Complex{ud(rng), ud(rng)} / std::sqrt(2.0);
    f.values.push_back(std::move(s));
  }
  return f;
}

inline void fixing_table(Checker& c, const AcceptanceOptions& o) {
  const auto t0 = std::chrono::steady_clock::now();
  const int expected[] = {1, 1, 3, 3, 5, 5, 9};
  std::ostringstream table;
  for (int n = 2; n <= 8; ++n) {
    const auto cert = fixing_dimension(spin_representation(n), 100, o.seed + static_cast<std::uint64_t>(n));
    table << (n > 2 ? " " : "") << '(' << n << ',' << cert.r << ')';
    c.require(cert.r == expected[n - 2], "n=" + std::to_string(n) + " gave r=" + std::to_string(cert.r));
    c.require(cert.consistent(), "certificate for n=" + std::to_string(n) + " inconsistent");
    if (cert.r > 1)
      c.require(cert.witness && cert.witness->dim() == cert.r - 1 && cert.witness_stabilizer_dimension >= 1,
                "witness for n=" + std::to_string(n) + " lacks a stabilizer");
  }
  const double secs = seconds_since(t0);
  c.require(secs < 30.0, "runtime above 30 s");
  c.note("table", table.str());
}

inline void multiplicity_bound(Checker& c, const AcceptanceOptions& o) {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(o.seed);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * kPi);
  std::uniform_int_distribution<int> quarter(0, 3), coin(0, 1);
  int checked = 0, max_ratio_hits = 0;
  for (int n = 2; n <= 8; ++n) {
    const auto rep = build_gamma_rep(n);
    const int bound = 1 << (n / 2 - 1);
    int accepted = 0;
    while (accepted < 1000) {
      std::vector<double> t(static_cast<std::size_t>(n / 2));
      for (auto& x : t) x = coin(rng) ? quarter(rng) * kPi / 2 : angle(rng);
      const auto g = torus_element(rep, t);
      const auto closed = eigenvalue_one_multiplicity(g);
      if (closed.identity) continue;
      const auto numeric = eigenvalue_one_multiplicity(SpinElement::from_matrix(rep, g.matrix));
      c.require(numeric.multiplicity == closed.multiplicity, "closed form and matrix disagree at n=" + std::to_string(n));
      c.require(closed.multiplicity <= bound, "bound exceeded at n=" + std::to_string(n));
      max_ratio_hits += closed.multiplicity == bound;
      ++accepted;
      ++checked;
    }
    if (n >= 4) {
      std::vector<double> t(static_cast<std::size_t>(n / 2), 0.0);
      t[0] = t[1] = kPi / 2;
      const auto g = torus_element(rep, t);
      const auto e = eigenvalue_one_multiplicity(SpinElement::from_matrix(rep, g.matrix));
      c.require(e.multiplicity == bound, "t = (pi/2, pi/2, 0, ...) misses equality at n=" + std::to_string(n));
    }
  }
  c.require(seconds_since(t0) < 60.0, "runtime above 60 s");
  c.note("elements", checked);
  c.note("random elements at equality", max_ratio_hits);
}

inline void baer(Checker& c, const AcceptanceOptions&) {
  const double b = baer_bound(4.0 * kPi);
  const auto s2 = sphere_dirac_spectrum(2, 5.0);
  c.require(std::abs(b - 1.0) <= 1e-12, "baer_bound(4 pi) != 1");
  c.require(s2.at(1).exact && *s2.at(1).exact == 1, "lambda_1(D^2) on unit S^2 != 1 exactly");
  c.require(std::abs(b - s2.at(1).value) <= 1e-12, "bound and eigenvalue differ");
  double worst = 0.0;
  for (double d : {0.5, 1.0, 2.0, 5.0}) {
    const double ref = 4.0 / (d * d);
    worst = std::max(worst, std::abs(baer_curvature_form(1e-4, d) - ref) / ref);
  }
  c.require(worst <= 1e-6, "curvature form limit off");
  c.note("baer_bound(4pi)", b);
  c.note("limit rel err at delta=1e-4", worst);
}

inline void collapse(Checker& c, const AcceptanceOptions&) {
  const auto t0 = std::chrono::steady_clock::now();
  for (double l2 : {1.0, 0.5, 0.1, 0.01}) {
    const std::string tag = " at L2=" + std::to_string(l2);
    const Rational inv_sq = 1 / (*rationalize(l2) * *rationalize(l2));
    const auto a = torus_lowest(FlatTorusSpec::rectangular(std::vector<double>{1.0, l2}, {0.5, 0.0}), 1);
    c.require(a.exact_unit == "pi^2" && a.at(1).exact && *a.at(1).exact == 1, "twist (1/2,0): lambda_1 != pi^2" + tag);
    const auto z = torus_lowest(FlatTorusSpec::rectangular(std::vector<double>{1.0, l2}, {0.0, 0.0}), 2);
    c.require(z.at(2).exact && *z.at(2).exact == 0, "twist (0,0): lambda_2 != 0" + tag);
    const auto g = torus_lowest(FlatTorusSpec::rectangular(std::vector<double>{1.0, l2}, {0.0, 0.5}), 1);
    c.require(g.at(1).exact && *g.at(1).exact == inv_sq, "twist (0,1/2): lambda_1 != pi^2/L2^2" + tag);
    if (l2 == 0.01) c.note("twist (0,1/2) lambda_1/pi^2 at L2=0.01", to_string(*g.at(1).exact));
  }
  c.require(seconds_since(t0) < 5.0, "runtime above 5 s");
}

inline void conformal_torus(Checker& c, const AcceptanceOptions&) {
  for (double l : {1.0, 0.5, 2.0, 0.1}) {
    const auto spec = FlatTorusSpec::rectangular(std::vector<double>{l, l}, {0.5, 0.5});
    const double bound = torus_conformal_bound(l / std::sqrt(2.0), 0.0);
    const auto lam = torus_lowest(spec, 1).at(1);
    const std::string tag = " at L=" + std::to_string(l);
    c.require(std::abs(bound - kPi * kPi / (2 * l * l)) <= 1e-14 * bound, "bound != pi^2/(2L^2)" + tag);
    c.require(bound <= lam.value, "bound above lambda_1" + tag);
    const Rational lr = *rationalize(l);
    c.require(lam.exact && *lam.exact == 2 / (lr * lr), "lambda_1 != 2 pi^2/L^2" + tag);
    c.require(lam.exact && *lam.exact / torus_conformal_bound_exact(lr * lr / 2) == 4, "slack != 4 exactly" + tag);
  }
  c.note("slack", 4);
}

inline void discretization(Checker& c, const AcceptanceOptions&) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto circle = FlatTorusSpec::rectangular(std::vector<double>{2.0 * kPi}, {0.5});
  const auto square = FlatTorusSpec::rectangular(std::vector<double>{1.0, 1.0}, {0.5, 0.5});
  double circle_err = 0.0;
  for (auto m : {Discretization::spectral, Discretization::finite_difference}) {
    const auto v = eigenvalues_lowest(assemble(circle, {}, DiscreteOperator::connection_laplacian, {512}, m), 1).values[0];
    circle_err = std::max(circle_err, std::abs(v - 0.25));
  }
  c.require(circle_err <= 1e-3, "circle lowest eigenvalue off 0.25 by more than 1e-3");
  const auto fd = eigenvalues_lowest(
      assemble(square, {}, DiscreteOperator::connection_laplacian, {64, 64}, Discretization::finite_difference), 8);
  const double target = 2.0 * kPi * kPi;
  double sq_err = 0.0;
  for (double v : fd.values) sq_err = std::max(sq_err, std::abs(v - target) / target);
  c.require(sq_err <= 0.01, "64^2 torus off the closed form by more than 1%");
  const auto s1 = convergence_study(circle, {64, 128, 256}, 6);
  const auto s2 = convergence_study(square, {16, 32, 64}, 10);
  const double lo = std::min(s1.min_slope(), s2.min_slope()), hi = std::max(s1.max_slope(), s2.max_slope());
  c.require(lo >= 1.8 && hi <= 2.2, "convergence slope outside 2.0 +- 0.2");
  const double secs = seconds_since(t0);
  c.require(secs < 60.0, "runtime above 60 s");
  c.note("circle err", circle_err);
  c.note("torus rel err", sq_err);
  c.note("slopes", "[" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
}

inline void continuity(Checker& c, const AcceptanceOptions&) {
  const auto square = FlatTorusSpec::rectangular(std::vector<double>{1.0, 1.0}, {0.5, 0.5});
  const std::vector<int> grid{32, 32};
  const auto u = sample_on_grid(square, grid, [](std::span<const double> x) { return 0.05 * std::cos(2 * kPi * x[0]); });
  const auto r = perturbation_check(square, u, 10, grid);
  c.require(r.pass, "tau_hat above the budget");
  c.note("tau_hat", r.tau_hat);
  c.note("budget", r.tau_budget);
  double worst = 0.0;
  const double k = 0.07;
  const auto circle = FlatTorusSpec::rectangular(std::vector<double>{2.0 * kPi}, {0.5});
  for (const auto& [spec, g] : {std::pair{circle, std::vector<int>{256}}, std::pair{square, std::vector<int>{24, 24}}}) {
    const std::size_t pts = g.size() == 1 ? 256u : 576u;
    const auto rc = perturbation_check(spec, std::vector<double>(pts, k), 8, g);
    for (double q : rc.ratios) worst = std::max(worst, std::abs(q - std::exp(2 * k)) / std::exp(2 * k));
  }
  c.require(worst <= 1e-10, "constant rescaling off e^{2c} by more than 1e-10");
  c.note("rescaling rel err", worst);
}

inline void neck(Checker& c, const AcceptanceOptions&) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto res = construct_neck(0.5, 1.0, 1.0);
  const auto& d = res.diagnostics;
  c.require(res.feasible, "construct_neck(0.5, 1, 1) infeasible");
  c.require(res.profile.t.size() == 10000, "not 10^4 samples");
  c.require(d.scal_min >= -0.5, "sampled scal below -0.5");
  c.require(d.fd_scal_min && *d.fd_scal_min >= -0.5, "finite-difference scal below -0.5");
  c.require(d.end_value_error <= 1e-8 && d.end_slope_error <= 1e-8, "end matching off");
  c.require(d.diam_estimate <= 12.0, "diameter estimate above 12");
  const auto& s = res.shape;
  const double core = s.a() - 2.0 * s.ell;
  double worst = 0.0;
  for (double t : {0.5 * core, core + 0.5 * s.ell, core + s.ell, core + 1.5 * s.ell, s.a() + 0.5 * s.rho}) {
    const auto j = s.jet(t);
    const double scale = std::max(std::abs(j.scal), 6.0 / (j.phi * j.phi));
    worst = std::max(worst, std::abs(finite_difference_curvature_oracle(res.profile, t) - j.scal) / scale);
  }
  c.require(worst <= 1e-6, "oracle and closed form differ by more than 1e-6");
  const double secs = seconds_since(t0);
  c.require(secs < 60.0, "runtime above 60 s");
  const auto rows = feasibility_frontier({0.5, 0.1, 0.01}, 1.0, 1.0);
  c.require(frontier_monotone(rows), "feasibility frontier not monotone");
  std::ostringstream fr;
  for (const auto& r : rows) fr << (fr.tellp() > 0 ? " " : "") << r.eps << ':' << (r.feasible ? "ok" : "no") << "/b=" << r.b;
  c.note("b", s.b);
  c.note("ell", s.ell);
  c.note("scal_min", d.scal_min);
  c.note("diam", d.diam_estimate);
  c.note("oracle rel err", worst);
  c.note("frontier", fr.str());
}

inline void frames(Checker& c, const AcceptanceOptions& o) {
  std::mt19937_64 rng(o.seed);
  std::uniform_real_distribution<double> eta_dist(0.001, 0.0125);
  int trials = 0;
  double worst_defect = 0.0, worst_ratio = 0.0;
  while (trials < 1000) {
    const Eigen::Index k = 2 + trials % 5, r = 1 + trials % k;
    const double eta = eta_dist(rng);
    const auto f = perturbed_family(k, r, 8, eta, rng);
    const double d = overlap_defect(f);
    if (d > 0.05) continue;
    ++trials;
    for (auto m : {OrthoMethod::symmetric, OrthoMethod::gram_schmidt}) {
      const auto out = orthonormalize(f, m);
      worst_defect = std::max(worst_defect, overlap_defect(out));
      worst_ratio = std::max(worst_ratio, displacement(f, out) / (3.0 * static_cast<double>(r) * eta));
    }
  }
  c.require(worst_defect <= 1e-12, "post-orthonormalization defect above 1e-12");
  c.require(worst_ratio <= 1.0, "displacement above 3 r eta");
  double idem = 0.0, equi = 0.0;
  for (int t = 0; t < 50; ++t) {
    const auto f = perturbed_family(4, 3, 8, 0.02, rng);
    for (auto m : {OrthoMethod::symmetric, OrthoMethod::gram_schmidt}) {
      const auto once = orthonormalize(f, m);
      idem = std::max(idem, max_difference(orthonormalize(once, m), once));
      const CMatrix v = random_unitary(4, rng);
      equi = std::max(equi, max_difference(orthonormalize(transform_fibers(f, v), m), transform_fibers(once, v)));
    }
    const CMatrix u = random_unitary(3, rng);
    equi = std::max(equi, max_difference(orthonormalize(recombine(f, u)), recombine(orthonormalize(f), u)));
  }
  c.require(idem <= 1e-12, "not idempotent to 1e-12");
  c.require(equi <= 1e-12, "not unitarily equivariant to 1e-12");
  c.note("families", trials);
  c.note("max defect", worst_defect);
  c.note("max displacement/(3 r eta)", worst_ratio);
  c.note("idempotence", idem);
  c.note("equivariance", equi);
}

inline void lichnerowicz(Checker& c, const AcceptanceOptions&) {
  const auto s2 = lichnerowicz_exact(sphere_dirac_spectrum(2, 200.0), sphere_connection_laplacian_spectrum(2, 199.5), Rational(2));
  c.require(s2.exact, "unit S^2 not exact");
  std::size_t compared = s2.compared;
  for (const auto& [lengths, twist] :
       {std::pair{std::vector<double>{1.0, 1.0}, std::vector<double>{0.5, 0.5}},
        std::pair{std::vector<double>{1.0, 0.5}, std::vector<double>{0.0, 0.0}},
        std::pair{std::vector<double>{1.0, 0.7, 1.2}, std::vector<double>{0.5, 0.0, 0.5}}}) {
    const auto spec = FlatTorusSpec::rectangular(lengths, twist);
    const auto chk = lichnerowicz_exact(torus_dirac_squared_spectrum(spec, 400.0),
                                        torus_connection_laplacian_spectrum(spec, 400.0), Rational(0));
    c.require(chk.exact, "flat torus not exact");
    compared += chk.compared;
  }
  c.note("eigenvalue clusters compared", compared);
}

struct Criterion {
  int id;
  const char* name;
  void (*run)(Checker&, const AcceptanceOptions&);
};

inline const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all{
      {1, "fixing-dimension table", fixing_table},
      {2, "eigenvalue-1 multiplicity bound", multiplicity_bound},
      {3, "Baer equality on the round sphere", baer},
      {4, "collapsing torus family", collapse},
      {5, "conformal torus bound slack", conformal_torus},
      {6, "discretization oracle", discretization},
      {7, "conformal perturbation continuity", continuity},
      {8, "warped neck construction", neck},
      {9, "frames suite", frames},
      {10, "Lichnerowicz exactness", lichnerowicz},
  };
  return all;
}

}  // namespace acceptance

inline CriterionResult run_criterion(int id, const AcceptanceOptions& opts = {}) {
  for (const auto& c : acceptance::criteria()) {
    if (c.id != id) continue;
    CriterionResult out;
    out.id = c.id;
    out.name = c.name;
    const auto t0 = std::chrono::steady_clock::now();
    acceptance::Checker chk;
    try {
      c.run(chk, opts);
    } catch (const std::exception& e) {
      chk.require(false, std::string("exception: ") + e.what());
    }
    out.seconds = acceptance::seconds_since(t0);
    out.pass = chk.ok();
    out.detail = chk.detail();
    return out;
  }
  throw InvalidArgument("run_criterion: no criterion " + std::to_string(id));
}

inline std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opts = {}) {
  std::vector<CriterionResult> out;
  for (const auto& c : acceptance::criteria()) out.push_back(run_criterion(c.id, opts));
  return out;
}

/// One line: "PASS criterion N (name): detail".
inline std::string format_line(const CriterionResult& r) {
  return std::string(r.pass ? "PASS" : "FAIL") + " criterion " + std::to_string(r.id) + " (" + r.name + "): " + r.detail;
}

inline nlohmann::json to_json(const CriterionResult& r) {
  return {{"id", r.id}, {"name", r.name}, {"pass", r.pass}, {"detail", r.detail}};
}

}  // namespace spingeom

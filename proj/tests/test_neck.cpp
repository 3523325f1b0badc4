#include "spingeom/neck.hpp"

#include <catch_amalgamated.hpp>

#include <chrono>

using namespace spingeom;

namespace {

// Independent second derivative by Richardson-extrapolated central differences.
double d2_richardson(const std::function<double(double)>& f, double t, double h) {
  auto c = [&](double s) { return (f(t + s) - 2.0 * f(t) + f(t - s)) / (s * s); };
  return (4.0 * c(h / 2) - c(h)) / 3.0;
}

}  // namespace

TEST_CASE("scal of simple profiles", "[neck]") {
  SECTION("cylinder") {
    for (double c : {0.5, 1.0, 2.0}) {
      const auto p = WarpProfile::sample([c](double) { return c; }, -1.0, 1.0, 200);
      const auto s = scal_of_profile(p);
      for (double v : s.scal) CHECK(std::abs(v - 6.0 / (c * c)) <= 1e-9 * 6.0 / (c * c));
    }
  }
  SECTION("cone") {
    const auto p = WarpProfile::sample([](double t) { return t; }, 0.5, 3.0, 500);
    for (double v : scal_of_profile(p).scal) CHECK(std::abs(v) <= 1e-8);
  }
  SECTION("catenoid for several b") {
    // scal scales like 1/b^2, so the tolerance is taken relative to that.
    for (double b : {0.3, 1.0, 4.0}) {
      const auto p = WarpProfile::sample([b](double t) { return std::hypot(t, b); }, -2.0 * b, 2.0 * b, 1001);
      for (double v : scal_of_profile(p).scal) CHECK(std::abs(v) <= 1e-8 * std::max(1.0, 1.0 / (b * b)));
    }
  }
  SECTION("errors") {
    CHECK_THROWS_AS(scal_of_profile(WarpProfile::sample([](double t) { return t; }, -1.0, 1.0, 100)), InvalidArgument);
    // A sharp core on a coarse grid trips the noise check.
    const auto coarse = WarpProfile::sample([](double t) { return std::hypot(t, 0.01); }, -1.0, 1.0, 101, {}, 0.01);
    CHECK_THROWS_WITH(scal_of_profile(coarse), Catch::Matchers::ContainsSubstring("too coarse"));
  }
}

TEST_CASE("curvature oracle", "[neck]") {
  const auto cyl = WarpProfile::sample([](double) { return 2.0; }, -1.0, 1.0, 50);
  CHECK(std::abs(finite_difference_curvature_oracle(cyl, 0.2) - 1.5) <= 1e-6);
  const auto cat = WarpProfile::sample([](double t) { return std::hypot(t, 1.0); }, -2.0, 2.0, 50);
  CHECK(std::abs(finite_difference_curvature_oracle(cat, 0.5)) <= 1e-6);
  const auto flat = WarpProfile::sample([](double t) { return t; }, 0.5, 3.0, 50);
  CHECK(std::abs(finite_difference_curvature_oracle(flat, 1.7)) <= 1e-6);
  SECTION("non-trivial profile against the warped formula") {
    auto f = [](double t) { return 1.5 + 0.3 * std::sin(2.0 * t) + 0.1 * t * t; };
    const auto p = WarpProfile::sample(f, -2.0, 2.0, 50);
    for (double t : {-1.3, -0.2, 0.4, 1.1}) {
      const double h = 1e-5;
      const double d1 = (f(t + h) - f(t - h)) / (2 * h);
      const double d2 = d2_richardson(f, t, 1e-3);
      const double expected = 6.0 * (1.0 - d1 * d1) / (f(t) * f(t)) - 6.0 * d2 / f(t);
      CHECK(std::abs(finite_difference_curvature_oracle(p, t) - expected) <= 1e-6 * std::max(1.0, std::abs(expected)));
    }
  }
  CHECK_THROWS_AS(finite_difference_curvature_oracle(cyl, 1.0), InvalidArgument);
}

TEST_CASE("neck shape jets", "[neck]") {
  const NeckShape s{1.0, 1.0, 0.2, 0.3};
  SECTION("C^2 across the junctions") {
    for (double j : {s.a() - 2.0 * s.ell, s.a()}) {
      const auto l = s.jet(j - 1e-12), r = s.jet(j + 1e-12);
      CHECK(std::abs(l.phi - r.phi) <= 1e-10);
      CHECK(std::abs(l.dphi - r.dphi) <= 1e-9);
      CHECK(std::abs(l.ddphi - r.ddphi) <= 1e-8);
    }
  }
  SECTION("analytic jet matches finite differences of phi") {
    auto f = [&](double t) { return s.phi(t); };
    for (double t : {0.05, 0.5, 0.62, 0.8, 0.95, 1.5}) {
      const auto jt = s.jet(t);
      CHECK(jt.dphi == Catch::Approx((f(t + 1e-6) - f(t - 1e-6)) / 2e-6).margin(1e-7));
      CHECK(jt.ddphi == Catch::Approx(d2_richardson(f, t, 2e-3)).margin(1e-5));
    }
  }
  SECTION("closed-form scal against the coordinate oracle on each smooth piece") {
    const auto p = WarpProfile::sample([&](double t) { return s.phi(t); }, -2.0, 2.0, 100);
    for (double t : {0.1, 0.3, 0.5, 0.6, 0.75, 0.9, 1.3}) {
      const auto jt = s.jet(t);
      const double scale = std::max(std::abs(jt.scal), 6.0 / (jt.phi * jt.phi));
      CHECK(std::abs(finite_difference_curvature_oracle(p, t) - jt.scal) <= 1e-6 * scale);
    }
  }
  CHECK(s.jet(-0.7).scal == s.jet(0.7).scal);
  CHECK(s.jet(-0.7).dphi == -s.jet(0.7).dphi);
}

TEST_CASE("construct_neck at eps = 0.5, R = rho = 1", "[neck]") {
  const auto t0 = std::chrono::steady_clock::now();
  const auto res = construct_neck(0.5, 1.0, 1.0);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  INFO("b = " << res.shape.b << ", ell = " << res.shape.ell);
  REQUIRE(res.feasible);
  const auto& p = res.profile;
  CHECK(p.t.size() == 10000);
  CHECK(res.diagnostics.scal_min >= -0.5);
  CHECK(res.diagnostics.end_value_error <= 1e-8);
  CHECK(res.diagnostics.end_slope_error <= 1e-8);
  CHECK(res.diagnostics.diam_estimate <= 12.0);
  CHECK(secs < 60.0);
  SECTION("finite-difference scal agrees") {
    REQUIRE(res.diagnostics.fd_scal_min);
    CHECK(*res.diagnostics.fd_scal_min >= -0.5);
    const auto s = scal_of_profile(p);
    for (std::size_t i = 0; i < p.t.size(); ++i) CHECK(std::abs(s.scal[i] - res.shape.jet(p.t[i]).scal) <= 0.05);
  }
  SECTION("exact evenness and annular ends") {
    for (std::size_t i = 0; i < p.t.size(); ++i) {
      CHECK(p.t[i] == -p.t[p.t.size() - 1 - i]);
      CHECK(p.phi[i] == p.phi[p.t.size() - 1 - i]);
      if (std::abs(p.t[i]) >= p.a) CHECK(std::abs(p.phi[i] - (std::abs(p.t[i]) - p.a + p.R)) <= 1e-10);
      CHECK(p.phi[i] > 0.0);
    }
  }
  SECTION("junctions separate the analytic pieces") {
    REQUIRE(p.junctions.size() == 4);
    CHECK(p.t[p.junctions[0] - 1] < -p.a);
    CHECK(p.t[p.junctions[0]] >= -p.a);
  }
}

TEST_CASE("thin necks", "[neck]") {
  const double eps = 1e-6, R = 0.1;
  const auto res = construct_neck(eps, R, R);
  REQUIRE(res.feasible);
  const double scale = std::sqrt(eps) * R * R;
  INFO("b / (sqrt(eps) R^2) = " << res.shape.b / scale);
  CHECK(res.shape.b <= scale);
  CHECK(res.shape.b >= 1e-3 * scale);
  CHECK(res.diagnostics.scal_min >= -eps);
  SECTION("b is the largest feasible core within the tested family") {
    NeckShape bigger = res.shape;
    bigger.b *= 1.01;
    const auto t = detail::symmetric_grid(R + R, 10000);
    CHECK(detail::sampled_scal_min(bigger, t) < -0.9 * eps);
  }
}

TEST_CASE("feasibility frontier", "[neck]") {
  const auto rows = feasibility_frontier({0.01, 0.5, 0.1}, 1.0, 1.0);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].eps == 0.01);
  for (const auto& r : rows) CHECK(r.feasible);
  CHECK(frontier_monotone(rows));
  CHECK(rows[0].b < rows[2].b);
  std::vector<FrontierRow> bad{{0.1, true, 0.2, 0.1, 0.0}, {0.5, false, 0.0, 0.1, -1.0}};
  CHECK_FALSE(frontier_monotone(bad));
}

TEST_CASE("infeasible requests are structured", "[neck]") {
  NeckOptions o;
  o.length_budget = 1.0;
  const auto res = construct_neck(0.5, 1.0, 1.0, o);
  CHECK_FALSE(res.feasible);
  REQUIRE_FALSE(res.diagnostics.violated.empty());
  CHECK(to_json(res)["verdict"] == "INFEASIBLE");
  CHECK_THROWS_AS(construct_neck(0.0, 1.0, 1.0), InvalidArgument);
  CHECK_THROWS_AS(construct_neck(0.5, -1.0, 1.0), InvalidArgument);
}

TEST_CASE("neck serialization", "[neck]") {
  NeckOptions o;
  o.samples = 200;
  const auto res = construct_neck(0.5, 1.0, 1.0, o);
  const auto j = to_json(res);
  for (const char* key : {"eps", "R", "rho", "a", "b", "ell", "t", "phi", "scal_min", "diam_estimate", "verdict"})
    CHECK(j.contains(key));
  CHECK(j["t"].size() == 200);
  const auto csv = to_csv(res);
  CHECK(csv.rfind("t,phi,scal\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 201);
}

#include "spingeom/modelspectra.hpp"

#include <catch_amalgamated.hpp>

#include <random>

using namespace spingeom;

namespace {

// Brute-force oracle: every shifted dual-lattice point in a generous box.
std::vector<double> brute_force_values(const Eigen::MatrixXd& basis, const std::vector<double>& twist, int box,
                                       double cutoff) {
  const int n = static_cast<int>(basis.rows());
  const Eigen::MatrixXd binv_t = basis.inverse().transpose();
  std::vector<double> out;
  std::vector<int> m(static_cast<std::size_t>(n), -box);
  while (true) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = m[static_cast<std::size_t>(i)] + twist[static_cast<std::size_t>(i)];
    const double val = 4.0 * kPi * kPi * (binv_t * v).squaredNorm();
    if (val <= cutoff) out.insert(out.end(), static_cast<std::size_t>(spinor_rank(n)), val);
    int i = 0;
    while (i < n && ++m[static_cast<std::size_t>(i)] > box) m[static_cast<std::size_t>(i++)] = -box;
    if (i == n) break;
  }
  std::sort(out.begin(), out.end());
  return out;
}

void check_same_values(const std::vector<double>& a, const std::vector<double>& b, double rel) {
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) <= rel * std::max(1.0, std::abs(b[i])));
}

const std::vector<double> kZero1{0.0};
const std::vector<double> kHalf1{0.5};

}  // namespace

TEST_CASE("flat torus spec validation", "[modelspectra]") {
  CHECK_THROWS_AS(FlatTorusSpec::rectangular(std::vector<double>{1.0, 1.0}, {0.3, 0.0}), InvalidArgument);
  CHECK_THROWS_AS(FlatTorusSpec::rectangular(std::vector<double>{1.0}, {0.0, 0.0}), InvalidArgument);
  Eigen::MatrixXd deg(2, 2);
  deg << 1.0, 2.0, 2.0, 4.0;
  CHECK_THROWS_AS(FlatTorusSpec(deg, {0.0, 0.0}), InvalidArgument);
  Eigen::MatrixXd skew(2, 2);
  skew << 1.0, 0.5, 0.0, 1.0;
  const FlatTorusSpec s(skew, {0.5, 0.0});
  CHECK(s.condition_number() > 1.0);
  CHECK_FALSE(s.orthogonal_basis());
  CHECK_THROWS_AS(s.diameter(), InvalidArgument);
}

TEST_CASE("circle spectra", "[modelspectra]") {
  SECTION("L = 2 pi, trivial structure: k^2 with one kernel spinor") {
    const auto spec = FlatTorusSpec::rectangular(std::vector<double>{2.0 * kPi}, {0.0});
    const auto rep = torus_dirac_squared_spectrum(spec, 10.0);
    CHECK(rep.space == "circle");
    REQUIRE(rep.pairs.size() == 4);
    CHECK(rep.pairs[0].value == 0.0);
    CHECK(rep.pairs[0].multiplicity == 1);
    for (int k = 1; k <= 3; ++k) {
      CHECK(rep.pairs[static_cast<std::size_t>(k)].value == Catch::Approx(k * k).epsilon(1e-14));
      CHECK(rep.pairs[static_cast<std::size_t>(k)].multiplicity == 2);
    }
    CHECK(torus_kernel_dimension(spec) == 1);
    check_same_values(rep.flattened(), brute_force_values(spec.basis(), kZero1, 20, 10.0), 1e-13);
  }
  SECTION("L = 2 pi, twist 1/2: (k + 1/2)^2, lambda_1 = 1/4") {
    const auto spec = FlatTorusSpec::rectangular(std::vector<double>{2.0 * kPi}, {0.5});
    const auto rep = torus_dirac_squared_spectrum(spec, 13.0);
    CHECK(rep.at(1).value == Catch::Approx(0.25).epsilon(1e-14));
    CHECK(rep.pairs[0].multiplicity == 2);
    CHECK(rep.pairs[1].value == Catch::Approx(2.25).epsilon(1e-14));
    CHECK(torus_kernel_dimension(spec) == 0);
    check_same_values(rep.flattened(), brute_force_values(spec.basis(), kHalf1, 20, 13.0), 1e-13);
  }
}

TEST_CASE("square torus with the (1/2, 1/2) structure", "[modelspectra]") {
  for (double side : {1.0, 0.5, 3.0}) {
    const auto spec = FlatTorusSpec::rectangular(std::vector<double>{side, side}, {0.5, 0.5});
    const auto rep = torus_lowest(spec, 1);
    const auto brute = brute_force_values(spec.basis(), {0.5, 0.5}, 6, 1e9);
    CHECK(rep.at(1).value == Catch::Approx(brute.front()).epsilon(1e-13));
    CHECK(rep.at(1).value == Catch::Approx(2.0 * kPi * kPi / (side * side)).epsilon(1e-13));
    CHECK(rep.at(1).multiplicity == 8);  // four shortest shifted vectors times rank 2
    REQUIRE(rep.at(1).exact);
    CHECK(*rep.at(1).exact == Rational(2) / (Rational(*rationalize(side)) * Rational(*rationalize(side))));
  }
}

TEST_CASE("sphere spectra", "[modelspectra]") {
  const auto s2 = sphere_dirac_spectrum(2, 10.0);
  CHECK(s2.at(1).value == 1.0);
  CHECK(s2.at(1).multiplicity == 4);
  const auto signed3 = sphere_dirac_eigenvalues(3, 2.0);
  Rational smallest = boost::multiprecision::abs(signed3.front().value);
  for (const auto& e : signed3) smallest = std::min(smallest, Rational(boost::multiprecision::abs(e.value)));
  CHECK(smallest == Rational(3, 2));
  for (int n = 2; n <= 9; ++n) {
    const auto ev = sphere_dirac_eigenvalues(n, 0.5 * n);
    REQUIRE(ev.size() == 2);
    CHECK(ev[0].multiplicity == spinor_rank(n));
    CHECK(ev[1].multiplicity == spinor_rank(n));
  }
  CHECK_THROWS_AS(sphere_dirac_spectrum(1, 1.0), InvalidArgument);
}

TEST_CASE("sphere Weyl consistency", "[modelspectra]") {
  // N(Lambda) ~ 2^floor(n/2) omega_n vol(S^n) Lambda^{n/2} / (2 pi)^n.
  for (int n : {2, 3}) {
    const double vol = n == 2 ? 4.0 * kPi : 2.0 * kPi * kPi;
    const double lambda = 4.0e4;
    const auto rep = sphere_dirac_spectrum(n, lambda);
    const double ratio = static_cast<double>(rep.count_upto(lambda)) / weyl_count(n, vol, lambda);
    CHECK(std::abs(ratio - 1.0) < 0.02);
  }
}

TEST_CASE("collapsing two-torus", "[modelspectra]") {
  const std::vector<double> lengths{1.0, 0.1, 0.01};
  auto family = [](std::vector<double> twist) {
    return [twist](double l2) { return FlatTorusSpec::rectangular(std::vector<double>{1.0, l2}, twist); };
  };
  SECTION("trivial structure keeps two parallel spinors") {
    const auto traj = collapse_trajectory(lengths, family({0.0, 0.0}), 2);
    for (const auto& p : traj) CHECK(p.lambda_k == 0.0);
  }
  SECTION("twist on the collapsing cycle: pi^2 / L2^2") {
    const auto traj = collapse_trajectory(lengths, family({0.0, 0.5}), 1);
    const double expected[] = {kPi * kPi, 100.0 * kPi * kPi, 10000.0 * kPi * kPi};
    for (std::size_t i = 0; i < traj.size(); ++i) {
      CHECK(traj[i].lambda_k == Catch::Approx(expected[i]).epsilon(1e-13));
      REQUIRE(traj[i].exact_k);
      const Rational inv = Rational(1) / *rationalize(lengths[i]);
      CHECK(*traj[i].exact_k == inv * inv);
    }
  }
  SECTION("twist on the long cycle: pi^2 at every parameter") {
    const auto traj = collapse_trajectory(lengths, family({0.5, 0.0}), 1, 4);
    for (const auto& p : traj) {
      REQUIRE(p.exact_k);
      CHECK(*p.exact_k == 1);
      CHECK(p.lowest.size() == 4);
    }
  }
  CHECK_THROWS_AS(collapse_trajectory(std::vector<double>{}, family({0.0, 0.0}), 1), InvalidArgument);
}

TEST_CASE("errors", "[modelspectra]") {
  const auto spec = FlatTorusSpec::rectangular(std::vector<double>{1.0, 1.0}, {0.0, 0.0});
  CHECK_THROWS_AS(torus_dirac_squared_spectrum(spec, 0.0), InvalidArgument);
  CHECK_THROWS_AS(torus_dirac_squared_spectrum(spec, 1e12, EnumerationOptions{1000}), InvalidArgument);
}

TEST_CASE("enumeration properties", "[modelspectra][property]") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> unif(-0.6, 0.6);
  std::uniform_int_distribution<int> coin(0, 1);

  SECTION("doubling the search box adds nothing below the cutoff") {
    for (int trial = 0; trial < 50; ++trial) {
      const int n = 1 + trial % 4;
      Eigen::MatrixXd b = Eigen::MatrixXd::Identity(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) b(i, j) += unif(rng);
      std::vector<double> d(static_cast<std::size_t>(n));
      for (auto& x : d) x = 0.5 * coin(rng);
      const FlatTorusSpec spec(b, d);
      const double cutoff = 4.0 * kPi * kPi * 6.0;
      const auto rep = torus_dirac_squared_spectrum(spec, cutoff);
      // Radius used by the library is |b_i| sqrt(q); scan twice the largest one.
      double rmax = 0.0;
      for (int i = 0; i < n; ++i) rmax = std::max(rmax, b.col(i).norm() * std::sqrt(6.0));
      const int box = 2 * static_cast<int>(std::ceil(rmax)) + 2;
      check_same_values(rep.flattened(), brute_force_values(b, d, box, cutoff), 1e-9);
    }
  }

  SECTION("unimodular change of basis leaves the spectrum unchanged") {
    std::uniform_int_distribution<int> small(-9, 9);
    std::uniform_int_distribution<int> pick(0, 2);
    for (int trial = 0; trial < 12; ++trial) {
      const int n = 2 + trial % 2;
      Eigen::MatrixXd b(n, n);
      do {
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) b(i, j) = (i == j ? 1.0 : 0.0) + small(rng) / 16.0;
      } while (std::abs(b.determinant()) < 0.3);
      // Unimodular U as a product of elementary shears.
      Eigen::MatrixXi u = Eigen::MatrixXi::Identity(n, n);
      for (int s = 0; s < 4; ++s) {
        const int i = pick(rng) % n;
        const int j = (i + 1 + pick(rng) % (n - 1)) % n;
        Eigen::MatrixXi e = Eigen::MatrixXi::Identity(n, n);
        e(i, j) = coin(rng) ? 1 : -1;
        u = u * e;
      }
      std::vector<double> d(static_cast<std::size_t>(n));
      for (auto& x : d) x = 0.5 * coin(rng);
      // d' = U^T d mod 1.
      std::vector<double> d2(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) {
        int twice = 0;
        for (int k = 0; k < n; ++k) twice += u(k, i) * static_cast<int>(2 * d[static_cast<std::size_t>(k)]);
        d2[static_cast<std::size_t>(i)] = (((twice % 2) + 2) % 2) * 0.5;
      }
      const FlatTorusSpec a(b, d);
      const FlatTorusSpec c(b * u.cast<double>(), d2);
      const double cutoff = 4.0 * kPi * kPi * 5.0;
      const auto ra = torus_dirac_squared_spectrum(a, cutoff);
      const auto rc = torus_dirac_squared_spectrum(c, cutoff);
      REQUIRE(ra.pairs.size() == rc.pairs.size());
      for (std::size_t i = 0; i < ra.pairs.size(); ++i) {
        REQUIRE(ra.pairs[i].exact);
        REQUIRE(rc.pairs[i].exact);
        CHECK(*ra.pairs[i].exact == *rc.pairs[i].exact);
        CHECK(ra.pairs[i].multiplicity == rc.pairs[i].multiplicity);
      }
    }
  }

  SECTION("scaling the basis by c scales eigenvalues by c^{-2}") {
    const auto base = FlatTorusSpec::rectangular(std::vector<double>{1.0, 0.7, 1.3}, {0.5, 0.0, 0.5});
    const auto scaled = FlatTorusSpec::rectangular(std::vector<double>{1.5, 1.05, 1.95}, {0.5, 0.0, 0.5});
    const auto r1 = torus_dirac_squared_spectrum(base, 400.0);
    const auto r2 = torus_dirac_squared_spectrum(scaled, 400.0 / 2.25);
    REQUIRE(r1.pairs.size() == r2.pairs.size());
    for (std::size_t i = 0; i < r1.pairs.size(); ++i) {
      CHECK(*r2.pairs[i].exact == *r1.pairs[i].exact * Rational(4, 9));
      CHECK(r2.pairs[i].multiplicity == r1.pairs[i].multiplicity);
    }
  }

  SECTION("kernel dichotomy") {
    for (int n = 1; n <= 4; ++n)
      for (unsigned mask = 0; mask < (1u << n); ++mask) {
        std::vector<double> d(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) d[static_cast<std::size_t>(i)] = ((mask >> i) & 1u) ? 0.5 : 0.0;
        std::vector<double> sides(static_cast<std::size_t>(n), 1.0);
        const auto spec = FlatTorusSpec::rectangular(sides, d);
        CHECK(torus_kernel_dimension(spec) == (mask == 0 ? spinor_rank(n) : 0));
      }
  }

  SECTION("Weyl law within 10% once 10^4 lattice points are listed") {
    for (int n : {2, 3}) {
      Eigen::MatrixXd b = Eigen::MatrixXd::Identity(n, n);
      b(0, 1) = 0.3;
      const FlatTorusSpec spec(b, std::vector<double>(static_cast<std::size_t>(n), 0.5));
      const double lambda = n == 2 ? 2.0e5 : 4.0e4;
      const auto rep = torus_dirac_squared_spectrum(spec, lambda);
      CHECK(rep.total_multiplicity() / spinor_rank(n) >= 10000);
      const double ratio = static_cast<double>(rep.count_upto(lambda)) / weyl_count(n, spec.volume(), lambda);
      CHECK(std::abs(ratio - 1.0) < 0.10);
    }
  }

  SECTION("connection Laplacian equals D^2 on flat tori") {
    const auto spec = FlatTorusSpec::rectangular(std::vector<double>{1.0, 2.0}, {0.5, 0.0});
    const auto d2 = torus_dirac_squared_spectrum(spec, 300.0);
    const auto nab = torus_connection_laplacian_spectrum(spec, 300.0);
    REQUIRE(d2.pairs.size() == nab.pairs.size());
    for (std::size_t i = 0; i < d2.pairs.size(); ++i) CHECK(*d2.pairs[i].exact == *nab.pairs[i].exact);
  }
}

TEST_CASE("serialization", "[modelspectra]") {
  const auto spec = FlatTorusSpec::rectangular(std::vector<double>{1.0, 1.0}, {0.5, 0.5});
  const auto rep = torus_dirac_squared_spectrum(spec, 100.0);
  const auto j = to_json(rep);
  CHECK(j["space"] == "torus");
  CHECK(j["operator"] == "D^2");
  CHECK(j["provenance"] == "closed-form");
  CHECK(j["pairs"][0][1] == 8);
  CHECK(j["pairs"][0][0].get<double>() == Catch::Approx(2.0 * kPi * kPi));
  CHECK(j["exact"]["unit"] == "pi^2");
  CHECK(j["exact"]["values"][0] == "2");
  const std::string csv = to_csv(rep);
  CHECK(csv.rfind("value,multiplicity\n", 0) == 0);
}

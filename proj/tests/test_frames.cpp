#include "spingeom/discrete.hpp"
#include "spingeom/frames.hpp"

#include <catch_amalgamated.hpp>

#include <random>

using namespace spingeom;

namespace {

CMatrix random_unitary(Eigen::Index k, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  CMatrix g(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j) g(i, j) = Complex{nd(rng), nd(rng)};
  Eigen::HouseholderQR<CMatrix> qr(g);
  return qr.householderQ() * CMatrix::Identity(k, k);
}

// Each entry moved by at most eta in modulus.
CMatrix perturb(const CMatrix& s, double eta, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ud(-1.0, 1.0);
  CMatrix out = s;
  for (Eigen::Index i = 0; i < s.rows(); ++i)
    for (Eigen::Index j = 0; j < s.cols(); ++j) out(i, j) += eta * Complex{ud(rng), ud(rng)} / std::sqrt(2.0);
  return out;
}

SectionFamily random_family(Eigen::Index k, Eigen::Index r, std::size_t pts, double eta, std::mt19937_64& rng) {
  SectionFamily f;
  f.mesh = {pts};
  f.spacing = {1.0 / static_cast<double>(pts)};
  for (std::size_t p = 0; p < pts; ++p) f.values.push_back(perturb(random_unitary(k, rng).leftCols(r), eta, rng));
  return f;
}

}  // namespace

TEST_CASE("overlap defect", "[frames]") {
  const auto ortho = SectionFamily::constant(CMatrix::Identity(4, 3), {5, 4});
  CHECK(overlap_defect(ortho) == 0.0);
  CMatrix dup(3, 2);
  dup.col(0) = CVector::Unit(3, 0);
  dup.col(1) = CVector::Unit(3, 0);
  CHECK(overlap_defect(SectionFamily::constant(dup, {6})) == 1.0);
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto f = random_family(4, 4, 16, 0.03, rng);
    const double d = overlap_defect(f);
    CHECK(d > 0.0);
    CHECK(d <= 0.1);
  }
  SectionFamily bad;
  bad.mesh = {2};
  bad.spacing = {1.0};
  bad.values = {CMatrix::Identity(2, 3), CMatrix::Identity(2, 3)};
  CHECK_THROWS_AS(overlap_defect(bad), InvalidArgument);
}

TEST_CASE("orthonormalization fixed points and closed forms", "[frames]") {
  std::mt19937_64 rng(5);
  SectionFamily f;
  f.mesh = {10};
  f.spacing = {0.1};
  for (int p = 0; p < 10; ++p) f.values.push_back(random_unitary(5, rng).leftCols(3));
  for (auto m : {OrthoMethod::symmetric, OrthoMethod::gram_schmidt}) CHECK(max_difference(orthonormalize(f, m), f) <= 1e-14);

  CMatrix s(2, 2);
  s << 1.0, 0.05, 0.0, 1.0;
  const auto gs = orthonormalize(SectionFamily::constant(s, {3}), OrthoMethod::gram_schmidt);
  CHECK((gs.values[0] - CMatrix::Identity(2, 2)).cwiseAbs().maxCoeff() <= 1e-15);
  CHECK(overlap_defect(gs) <= 1e-15);
  // The symmetric result is the polar factor; for this s it is a rotation by -atan(0.025).
  const auto sym = orthonormalize(SectionFamily::constant(s, {3}));
  const double th = std::atan(0.025);
  CMatrix rot(2, 2);
  rot << std::cos(th), std::sin(th), -std::sin(th), std::cos(th);
  CHECK((sym.values[0] - rot).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("random families", "[frames]") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> eta_dist(0.001, 0.0125);
  int trials = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Eigen::Index k = 2 + trial % 5, r = 1 + trial % k;
    const double eta = eta_dist(rng);
    auto f = random_family(k, r, 8, eta, rng);
    const double d = overlap_defect(f);
    if (d > 0.05) continue;
    ++trials;
    for (auto m : {OrthoMethod::symmetric, OrthoMethod::gram_schmidt}) {
      const auto out = orthonormalize(f, m);
      CHECK(overlap_defect(out) <= 1e-12);
      CHECK(displacement(f, out) <= 3.0 * static_cast<double>(r) * std::min(d, eta));
    }
  }
  CHECK(trials >= 900);
  SECTION("eta = 0.05 per entry") {
    for (int trial = 0; trial < 1000; ++trial) {
      const Eigen::Index k = 2 + trial % 5, r = 1 + trial % k;
      auto f = random_family(k, r, 4, 0.05, rng);
      for (auto m : {OrthoMethod::symmetric, OrthoMethod::gram_schmidt})
        CHECK(displacement(f, orthonormalize(f, m)) <= 3.0 * static_cast<double>(r) * 0.05);
    }
  }
}

TEST_CASE("defect contraction up to 0.5", "[frames]") {
  CMatrix s(3, 2);
  const double c = std::sqrt(0.5);
  s.col(0) = CVector::Unit(3, 0);
  s.col(1) = 0.5 * CVector::Unit(3, 0) + c * CVector::Unit(3, 1) + std::sqrt(1.0 - 0.25 - 0.5) * CVector::Unit(3, 2);
  const auto f = SectionFamily::constant(s, {4});
  CHECK(overlap_defect(f) == Catch::Approx(0.5));
  for (auto m : {OrthoMethod::symmetric, OrthoMethod::gram_schmidt}) CHECK(overlap_defect(orthonormalize(f, m)) <= 1e-12);
}

TEST_CASE("near-singular Gram is refused", "[frames]") {
  auto f = SectionFamily::constant(CMatrix::Identity(3, 2), {7});
  f.values[4].col(1) = f.values[4].col(0) * Complex{0.0, 1.0};
  try {
    orthonormalize(f);
    FAIL("expected FrameError");
  } catch (const FrameError& e) {
    CHECK(e.point() == 4);
    CHECK(e.min_eigenvalue() < 0.1);
    CHECK_THAT(e.what(), Catch::Matchers::ContainsSubstring("point 4"));
  }
}

TEST_CASE("idempotence and equivariance", "[frames]") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index k = 4, r = 3;
    const auto f = random_family(k, r, 12, 0.02, rng);
    for (auto m : {OrthoMethod::symmetric, OrthoMethod::gram_schmidt}) {
      const auto once = orthonormalize(f, m);
      CHECK(max_difference(orthonormalize(once, m), once) <= 1e-12);
      const CMatrix v = random_unitary(k, rng);
      CHECK(max_difference(orthonormalize(transform_fibers(f, v), m), transform_fibers(once, v)) <= 1e-12);
    }
    const CMatrix u = random_unitary(r, rng);
    CHECK(max_difference(orthonormalize(recombine(f, u)), recombine(orthonormalize(f), u)) <= 1e-12);
  }
}

TEST_CASE("smoothness of the output", "[frames]") {
  const std::size_t n = 64;
  const double h = 1.0 / static_cast<double>(n);
  SECTION("constant family") {
    CMatrix s(2, 2);
    s << 1.0, 0.02, 0.0, 1.0;
    const auto f = SectionFamily::constant(s, {n}, {h});
    CHECK(smoothness_of_output(f, orthonormalize(f)) == 0.0);
  }
  SECTION("pure gauge rotation of an orthonormal family") {
    SectionFamily f;
    f.mesh = {n};
    f.spacing = {h};
    for (std::size_t p = 0; p < n; ++p) {
      const double a = 2.0 * kPi * static_cast<double>(p) * h;
      CMatrix g(2, 2);
      g << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
      f.values.push_back(g * std::polar(1.0, 3.0 * a));
    }
    const auto out = orthonormalize(f);
    CHECK(max_difference(out, f) <= 1e-14);
    CHECK(smoothness_of_output(f, out) <= 1e-12);
  }
  SECTION("slowly varying Gram field") {
    SectionFamily f;
    f.mesh = {n};
    f.spacing = {h};
    for (std::size_t p = 0; p < n; ++p) {
      const double x = static_cast<double>(p) * h;
      CMatrix s(3, 2);
      s.setZero();
      s(0, 0) = 1.0;
      s(1, 1) = 1.0;
      s(0, 1) = 0.02 * std::cos(0.25 * x);  // off-diagonal Gram entry, Lipschitz 0.005
      s(2, 0) = 0.05 * std::sin(2.0 * kPi * x);
      f.values.push_back(s);
    }
    const double d = overlap_defect(f), lip = gram_difference_quotient(f);
    INFO("defect " << d << ", Gram quotient " << lip);
    CHECK(d <= 0.03);
    CHECK(lip <= 0.02);
    for (auto m : {OrthoMethod::symmetric, OrthoMethod::gram_schmidt})
      CHECK(smoothness_of_output(f, orthonormalize(f, m)) <= 10.0 * 2.0 * (d + lip));
  }
  SECTION("irregular grid") {
    auto f = SectionFamily::constant(CMatrix::Identity(2, 2), {4}, {0.0});
    CHECK_THROWS_AS(smoothness_of_output(f, f), InvalidArgument);
  }
}

TEST_CASE("discrete kernel sections on the trivially spun torus", "[frames]") {
  const auto spec = FlatTorusSpec::rectangular(std::vector<double>{1.0, 1.3}, {0.0, 0.0});
  const std::vector<int> grid{16, 16};
  const auto op = assemble(spec, {}, DiscreteOperator::connection_laplacian, grid, Discretization::finite_difference);
  const auto eig = eigenvalues_lowest(op, spinor_rank(2));
  SectionFamily f;
  f.mesh = {16, 16};
  f.spacing = {1.0 / 16, 1.3 / 16};
  f.values = grid_sections(op, eig.vectors);
  CHECK(f.count() == 2);
  CHECK(overlap_defect(f) <= 1e-10);
}

TEST_CASE("section family JSON", "[frames]") {
  std::mt19937_64 rng(23);
  const auto f = random_family(3, 2, 5, 0.01, rng);
  const auto j = to_json(f);
  CHECK(j["values"].size() == 5);
  CHECK(j["values"][0].size() == 2);
  CHECK(j["values"][0][0].size() == 6);
  const auto back = section_family_from_json(nlohmann::json::parse(j.dump()));
  CHECK(max_difference(back, f) == 0.0);
  auto broken = j;
  broken["values"][1][0] = std::vector<double>{1.0, 2.0};
  CHECK_THROWS_AS(section_family_from_json(broken), InvalidArgument);
}

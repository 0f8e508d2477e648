#include <doctest.h>

#include <cmath>

#include "cvmdi/gaussian.hpp"
#include "test_helpers.hpp"

using namespace cvmdi;
using cvmdi::testing::random_physical_state;

TEST_CASE("epr state") {
  CovarianceMatrix vac = epr_state(1.0, "a", "b");
  CHECK(vac.entries().isApprox(Eigen::MatrixXd::Identity(4, 4), 1e-15));

  CovarianceMatrix g = epr_state(61.0, "a", "b");
  double zeta = std::sqrt(61.0 * 61.0 - 1.0);
  CHECK(g.entries()(0, 2) == doctest::Approx(zeta).epsilon(1e-14));
  CHECK(g.entries()(1, 3) == doctest::Approx(-zeta).epsilon(1e-14));
  CHECK(zeta == doctest::Approx(60.991802727907626));

  auto nu = symplectic_eigenvalues(epr_state(5.0, "a", "b"));
  REQUIRE(nu.size() == 2);
  CHECK(nu[0] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(nu[1] == doctest::Approx(1.0).epsilon(1e-9));

  CHECK_THROWS_AS(epr_state(0.5, "a", "b"), DomainError);
}

TEST_CASE("thermal state") {
  CHECK(thermal_state(1.0, "m").entries().isApprox(Eigen::Matrix2d::Identity(), 1e-15));
  CovarianceMatrix t3 = thermal_state(3.0, "m");
  CHECK(t3.var_x("m") == 3.0);
  CHECK(t3.var_p("m") == 3.0);
  auto nu = symplectic_eigenvalues(t3);
  REQUIRE(nu.size() == 1);
  CHECK(nu[0] == doctest::Approx(3.0).epsilon(1e-12));
  CHECK_THROWS_AS(thermal_state(0.99, "m"), DomainError);
}

TEST_CASE("beamsplitter") {
  CovarianceMatrix g = direct_sum(thermal_state(3.0, "a"), vacuum_state("b"));
  CHECK(apply_beamsplitter(g, "a", "b", 1.0).entries().isApprox(g.entries(), 1e-14));

  CovarianceMatrix swapped = apply_beamsplitter(g, "a", "b", 0.0);
  CHECK(swapped.var_x("a") == doctest::Approx(1.0));
  CHECK(swapped.var_x("b") == doctest::Approx(3.0));
  CHECK(min_symplectic_eigenvalue(swapped) >= 1.0 - 1e-9);

  CovarianceMatrix half = apply_beamsplitter(g, "a", "b", 0.5);
  CHECK(half.var_x("a") == doctest::Approx(2.0).epsilon(1e-13));
  CHECK(half.var_x("b") == doctest::Approx(2.0).epsilon(1e-13));
  CHECK(half.var_p("b") == doctest::Approx(2.0).epsilon(1e-13));

  CHECK_THROWS_AS(apply_beamsplitter(g, "a", "b", 1.5), DomainError);
  CHECK_THROWS_AS(apply_beamsplitter(g, "a", "a", 0.5), DomainError);
}

TEST_CASE("symplectic eigenvalues") {
  auto nu = symplectic_eigenvalues(direct_sum(thermal_state(2.0, "a"), thermal_state(5.0, "b")));
  REQUIRE(nu.size() == 2);
  CHECK(nu[0] == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(nu[1] == doctest::Approx(2.0).epsilon(1e-12));

  auto pure = symplectic_eigenvalues(epr_state(60.0, "a", "b"));
  CHECK(pure[0] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(pure[1] == doctest::Approx(1.0).epsilon(1e-9));

  // Single squeezed-like mode: nu = sqrt(det).
  Eigen::Matrix2d d = Eigen::Vector2d(4.0, 1.0).asDiagonal();
  auto sq = symplectic_eigenvalues(CovarianceMatrix({"m"}, d));
  CHECK(sq[0] == doctest::Approx(std::sqrt(4.0 * 1.0)).epsilon(1e-12));

  Eigen::Matrix2d bad;
  bad << 1, 0.5, 0, 1;
  CHECK_THROWS_AS(CovarianceMatrix({"m"}, bad), DomainError);
}

TEST_CASE("g_entropy") {
  CHECK(g_entropy(0.0) == 0.0);
  CHECK(g_entropy(1.0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(g_entropy(0.5) == doctest::Approx(1.3774437510817343).epsilon(1e-14));
  CHECK(g_entropy(-5e-13) == 0.0);
  CHECK_THROWS_AS(g_entropy(-1e-6), DomainError);
}

TEST_CASE("gaussian entropy") {
  CHECK(gaussian_entropy(epr_state(40.0, "a", "b")) == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(gaussian_entropy(thermal_state(3.0, "m")) == doctest::Approx(2.0).epsilon(1e-12));
  CovarianceMatrix two = direct_sum(thermal_state(2.0, "a"), thermal_state(2.0, "b"));
  CHECK(gaussian_entropy(two) == doctest::Approx(2.0 * 1.3774437510817343).epsilon(1e-12));
  Eigen::Matrix2d half = 0.5 * Eigen::Matrix2d::Identity();
  CHECK_THROWS_AS(gaussian_entropy(CovarianceMatrix({"m"}, half)), NumericalError);
}

TEST_CASE("homodyne conditioning") {
  CovarianceMatrix g = epr_state(2.0, "a", "b");
  CovarianceMatrix c = condition_homodyne(g, "a", Quadrature::X);
  REQUIRE(c.num_modes() == 1);
  CHECK(c.var_x("b") == doctest::Approx(0.5).epsilon(1e-13));
  CHECK(c.var_p("b") == doctest::Approx(2.0).epsilon(1e-13));

  // Conditioning an uncorrelated mode leaves the rest untouched.
  CovarianceMatrix iso = direct_sum(epr_state(4.0, "a", "b"), thermal_state(2.5, "m"));
  CovarianceMatrix rest = condition_homodyne(iso, "m", Quadrature::P);
  CHECK(rest.entries().isApprox(epr_state(4.0, "a", "b").entries(), 1e-13));

  Pcg32 rng(11, 1);
  for (int k = 0; k < 300; ++k) {
    CovarianceMatrix s = random_physical_state(rng);
    if (s.num_modes() < 2) continue;
    CovarianceMatrix out = condition_homodyne(s, s.labels()[0], Quadrature::X);
    CHECK(min_symplectic_eigenvalue(out) >= 1.0 - 1e-9);
  }
}

TEST_CASE("heterodyne conditioning") {
  // EPR closed form: V - (V^2-1)/(V+1) = 1 for every V.
  for (double v : {1.5, 3.0, 20.0}) {
    CovarianceMatrix c = condition_heterodyne(epr_state(v, "a", "b"), "a");
    CHECK(c.var_x("b") == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(c.var_p("b") == doctest::Approx(1.0).epsilon(1e-12));
  }
  CovarianceMatrix iso = direct_sum(epr_state(4.0, "a", "b"), thermal_state(2.5, "m"));
  CHECK(condition_heterodyne(iso, "m").entries().isApprox(epr_state(4.0, "a", "b").entries(),
                                                          1e-13));

  Pcg32 rng(12, 1);
  int done = 0;
  while (done < 1000) {
    CovarianceMatrix s = random_physical_state(rng);
    if (s.num_modes() < 2) continue;
    ++done;
    CovarianceMatrix out = condition_heterodyne(s, s.labels()[0]);
    CHECK(min_symplectic_eigenvalue(out) >= 1.0 - 1e-9);
    // Monotonicity: conditioning never increases the covariance.
    std::vector<ModeLabel> keep(s.labels().begin() + 1, s.labels().end());
    Eigen::MatrixXd diff = partial_trace(s, keep).entries() - out.entries();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(diff);
    CHECK(es.eigenvalues().minCoeff() >= -1e-9);
  }
}

TEST_CASE("register plumbing") {
  CovarianceMatrix g = direct_sum(epr_state(7.0, "a", "b"), thermal_state(2.0, "m"));
  CHECK(g.dim() == 6);
  CovarianceMatrix r = reorder(g, {"m", "b", "a"});
  CovarianceMatrix back = reorder(r, {"a", "b", "m"});
  CHECK(back.entries().isApprox(g.entries(), 1e-15));

  CovarianceMatrix marg = partial_trace(epr_state(7.0, "a", "b"), {"a"});
  CHECK(marg.entries().isApprox(thermal_state(7.0, "a").entries(), 1e-15));

  CovarianceMatrix big = direct_sum(g, direct_sum(epr_state(2.0, "c", "d"), vacuum_state("e")));
  CHECK(big.dim() == 12);

  CHECK_THROWS_AS(partial_trace(g, {"zz"}), DomainError);
  CHECK_THROWS_AS(partial_trace(g, {"a", "a"}), DomainError);
  CHECK_THROWS_AS(direct_sum(g, thermal_state(2.0, "a")), DomainError);
}

TEST_CASE("symplectic invariance under passive transforms") {
  Pcg32 rng(13, 1);
  for (int k = 0; k < 100; ++k) {
    CovarianceMatrix s = random_physical_state(rng);
    if (s.num_modes() < 2) continue;
    auto before = symplectic_eigenvalues(s);
    CovarianceMatrix mixed = apply_beamsplitter(s, s.labels()[0], s.labels()[1], rng.uniform());
    auto after = symplectic_eigenvalues(mixed);
    std::vector<ModeLabel> rev(s.labels().rbegin(), s.labels().rend());
    auto rot = symplectic_eigenvalues(reorder(s, rev));
    for (std::size_t i = 0; i < before.size(); ++i) {
      CHECK(after[i] == doctest::Approx(before[i]).epsilon(1e-9));
      CHECK(rot[i] == doctest::Approx(before[i]).epsilon(1e-9));
    }
  }
}

TEST_CASE("g is increasing and bounded below by log2(x+1)") {
  double prev = 0.0;
  for (double x = 0.05; x < 30.0; x += 0.37) {
    double g = g_entropy(x);
    CHECK(g > prev);
    CHECK(g >= std::log2(x + 1.0));
    prev = g;
  }
}

TEST_CASE("pure-state entropy across the variance range") {
  for (double v : {1.0, 1.5, 8.0, 120.0, 1000.0}) {
    CHECK(gaussian_entropy(epr_state(v, "a", "b")) == doctest::Approx(0.0).epsilon(1e-9));
  }
}

TEST_CASE("epr homodyne conditional variance is 1/V") {
  for (double v : {1.0, 2.0, 17.0, 400.0, 1000.0}) {
    CovarianceMatrix c = condition_homodyne(epr_state(v, "a", "b"), "a", Quadrature::X);
    CHECK(std::abs(c.var_x("b") - 1.0 / v) <= 1e-12);
    CHECK(c.var_p("b") == doctest::Approx(v).epsilon(1e-12));
  }
}

TEST_CASE("physicality closure under random circuits") {
  Pcg32 rng(14, 1);
  for (int k = 0; k < 2000; ++k) {
    CovarianceMatrix s = random_physical_state(rng);
    CHECK(min_symplectic_eigenvalue(s) >= 1.0 - 1e-9);
  }
}

TEST_CASE("williamson and purification") {
  Pcg32 rng(15, 1);
  for (int k = 0; k < 50; ++k) {
    CovarianceMatrix s = random_physical_state(rng, 3);
    WilliamsonForm wf = williamson(s);
    auto nu = symplectic_eigenvalues(s);
    REQUIRE(wf.nu.size() == nu.size());
    for (std::size_t i = 0; i < nu.size(); ++i)
      CHECK(wf.nu[i] == doctest::Approx(nu[i]).epsilon(1e-8));

    CovarianceMatrix pure = purify(s, "anc");
    CHECK(gaussian_entropy(pure) == doctest::Approx(0.0).epsilon(1e-7));
    CovarianceMatrix red = partial_trace(pure, s.labels());
    CHECK(cvmdi::testing::max_abs_diff(red.entries(), s.entries()) <= 1e-8);
  }
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "dtebounds/makarov.hpp"

using dte::MarginalDistribution;

namespace {

// Independent oracle: brute grid sup of F1(y) - F0(y-delta) with 10^4 points.
double grid_sup(const MarginalDistribution& f0, const MarginalDistribution& f1, double delta,
                bool maximize) {
  double lo = std::min(f1.support_lo(), f0.support_lo() + delta) - 0.5;
  double hi = std::max(f1.support_hi(), f0.support_hi() + delta) + 0.5;
  double best = maximize ? -2.0 : 2.0;
  for (int i = 0; i <= 10000; ++i) {
    double y = lo + (hi - lo) * i / 10000.0;
    double v = f1.cdf(y) - f0.cdf(y - delta);
    best = maximize ? std::max(best, v) : std::min(best, v);
  }
  return best;
}

}  // namespace

TEST_CASE("makarov_lower: closed-form and oracle checks") {
  auto u01 = MarginalDistribution::uniform(0, 1);
  auto u12 = MarginalDistribution::uniform(1, 2);
  auto n01 = MarginalDistribution::normal(0, 1);

  CHECK(dte::makarov_lower(u01, u01, 0.0).value == doctest::Approx(0.0).epsilon(1e-12));

  auto r = dte::makarov_lower(u01, u12, 1.5);
  CHECK(r.value == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(r.value == doctest::Approx(std::max(grid_sup(u01, u12, 1.5, true), 0.0)).epsilon(1e-4));

  auto rn = dte::makarov_lower(n01, n01, 1.0);
  double expected = 2.0 * 0.5 * std::erfc(-0.5 / std::sqrt(2.0)) - 1.0;  // 2 Phi(0.5) - 1
  CHECK(rn.value == doctest::Approx(expected).epsilon(1e-9));
  CHECK(rn.arg == doctest::Approx(0.5).epsilon(1e-5));  // symmetry: maximizer at delta/2
  CHECK(rn.value == doctest::Approx(grid_sup(n01, n01, 1.0, true)).epsilon(1e-6));
}

TEST_CASE("makarov_upper: closed-form and oracle checks") {
  auto u01 = MarginalDistribution::uniform(0, 1);
  auto u05 = MarginalDistribution::uniform(0.5, 1.5);

  CHECK(dte::makarov_upper(u01, u01, 0.0).value == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(dte::makarov_upper(u01, u05, 0.25).value == doctest::Approx(0.75).epsilon(1e-9));
  CHECK(dte::makarov_upper(u01, u05, 0.5).value == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(dte::makarov_upper(u01, u05, 0.25).value ==
        doctest::Approx(1.0 + std::min(grid_sup(u01, u05, 0.25, false), 0.0)).epsilon(1e-4));
}

TEST_CASE("makarov bounds on step CDFs hit the jumps") {
  // Empirical-style marginals: the sup lives exactly at a jump.
  Eigen::VectorXd p0(2), v0(2), p1(2), v1(2);
  p0 << 0.0, 1.0;
  v0 << 0.5, 1.0;
  p1 << 0.5, 1.5;
  v1 << 0.5, 1.0;
  auto f0 = MarginalDistribution::step_cdf(p0, v0);
  auto f1 = MarginalDistribution::step_cdf(p1, v1);
  // delta=0.4: F1(y)-F0(y-0.4): at y=0.5: 0.5 - F0(0.1) = 0.5-0.5 = 0;
  // at y just below 1.4: 0.5 - 0.5 = 0; at y=1.5: 1 - 1 = 0; best at y=0.5-:
  // F1(0.4...)=0 ... compute directly over candidates:
  double best = 0.0;
  for (double y : {0.4999999, 0.5, 1.0, 1.399999, 1.4, 1.5})
    best = std::max(best, f1.cdf(y) - f0.cdf(y - 0.4));
  auto r = dte::makarov_lower(f0, f1, 0.4);
  CHECK(r.value == doctest::Approx(best).epsilon(1e-12));
}

TEST_CASE("frechet_rectangle") {
  auto [l1, u1] = dte::frechet_rectangle(1.0, 0.3);
  CHECK(l1 == doctest::Approx(0.3));
  CHECK(u1 == doctest::Approx(0.3));
  auto [l2, u2] = dte::frechet_rectangle(0.5, 0.5);
  CHECK(l2 == doctest::Approx(0.0));
  CHECK(u2 == doctest::Approx(0.5));
  auto [l3, u3] = dte::frechet_rectangle(0.9, 0.8);
  CHECK(l3 == doctest::Approx(0.7));
  CHECK(u3 == doctest::Approx(0.8));
  CHECK_THROWS_AS(dte::frechet_rectangle(-0.1, 0.5), std::domain_error);
  CHECK_THROWS_AS(dte::frechet_rectangle(0.5, 1.1), std::domain_error);
}

TEST_CASE("attaining copulas: branch definitions") {
  // s=1: the first branch covers the whole square -> min(u,v).
  for (double u : {0.0, 0.3, 0.7, 1.0})
    for (double v : {0.0, 0.4, 0.9, 1.0})
      CHECK(dte::attaining_copula_upper(1.0, u, v) == doctest::Approx(std::min(u, v)));
  CHECK(dte::attaining_copula_upper(0.0, 0.7, 0.6) == doctest::Approx(0.3));
  CHECK(dte::attaining_copula_upper(0.5, 0.8, 0.4) == doctest::Approx(0.3));

  for (double u : {0.0, 0.3, 0.7, 1.0})
    for (double v : {0.0, 0.4, 0.9, 1.0})
      CHECK(dte::attaining_copula_lower(0.0, u, v) == doctest::Approx(std::min(u, v)));
  CHECK(dte::attaining_copula_lower(1.0, 0.7, 0.6) == doctest::Approx(0.3));
  CHECK(dte::attaining_copula_lower(0.5, 0.3, 0.9) == doctest::Approx(0.3));

  CHECK_THROWS_AS(dte::attaining_copula_upper(0.5, -0.1, 0.5), std::domain_error);
  CHECK_THROWS_AS(dte::attaining_copula_lower(1.5, 0.5, 0.5), std::domain_error);
}

TEST_CASE("copulas are 2-increasing and grounded on a grid") {
  for (double par : {0.0, 0.3, 0.8, 1.0}) {
    for (int i = 0; i < 20; ++i) {
      for (int j = 0; j < 20; ++j) {
        double u1 = i / 20.0, u2 = (i + 1) / 20.0;
        double v1 = j / 20.0, v2 = (j + 1) / 20.0;
        double m_up = dte::attaining_copula_upper(par, u2, v2) -
                      dte::attaining_copula_upper(par, u1, v2) -
                      dte::attaining_copula_upper(par, u2, v1) +
                      dte::attaining_copula_upper(par, u1, v1);
        double m_lo = dte::attaining_copula_lower(par, u2, v2) -
                      dte::attaining_copula_lower(par, u1, v2) -
                      dte::attaining_copula_lower(par, u2, v1) +
                      dte::attaining_copula_lower(par, u1, v1);
        CHECK(m_up >= -1e-12);
        CHECK(m_lo >= -1e-12);
      }
    }
    CHECK(dte::attaining_copula_upper(par, 0.0, 0.37) == doctest::Approx(0.0));
    CHECK(dte::attaining_copula_upper(par, 0.37, 1.0) == doctest::Approx(0.37));
  }
}

TEST_CASE("dte_under_copula: canonical couplings of uniforms") {
  auto u01 = MarginalDistribution::uniform(0, 1);
  auto indep = [](double u, double v) { return u * v; };
  auto comono = [](double u, double v) { return std::min(u, v); };
  auto counter = [](double u, double v) { return std::max(u + v - 1.0, 0.0); };
  CHECK(dte::dte_under_copula(u01, u01, indep, 0.0, 400) == doctest::Approx(0.5).epsilon(0.02));
  CHECK(dte::dte_under_copula(u01, u01, comono, 0.0, 400) == doctest::Approx(1.0).epsilon(0.02));
  CHECK(dte::dte_under_copula(u01, u01, counter, 0.0, 400) == doctest::Approx(0.5).epsilon(0.02));
  CHECK_THROWS_AS(dte::dte_under_copula(u01, u01, indep, 0.0, 50), std::invalid_argument);
  auto not_copula = [](double u, double v) { return std::max(u, v); };
  CHECK_THROWS_AS(dte::dte_under_copula(u01, u01, not_copula, 0.0, 150), std::invalid_argument);
}

TEST_CASE("attaining copulas reproduce the Makarov bounds") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> mu(-1.0, 1.0), s2(0.5, 2.0);
  for (int rep = 0; rep < 3; ++rep) {
    auto f0 = MarginalDistribution::normal(mu(rng), s2(rng));
    auto f1 = MarginalDistribution::normal(mu(rng), s2(rng));
    for (double delta : {0.0, 0.5}) {
      double upper = dte::makarov_upper(f0, f1, delta).value;
      auto cu = [upper](double u, double v) { return dte::attaining_copula_upper(upper, u, v); };
      CHECK(dte::dte_under_copula(f0, f1, cu, delta, 400) == doctest::Approx(upper).epsilon(0.03));

      // Lower bound is attained at the left limit.
      double lower = dte::makarov_lower(f0, f1, delta - 1e-6).value;
      auto cl = [lower](double u, double v) { return dte::attaining_copula_lower(lower, u, v); };
      CHECK(dte::dte_under_copula(f0, f1, cl, delta - 1e-6, 400) ==
            doctest::Approx(lower).epsilon(0.03));
    }
  }
}

TEST_CASE("makarov bounds: ordering, monotonicity, translation equivariance") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> mu(-1.0, 1.0), s2(0.5, 2.0);
  for (int rep = 0; rep < 3; ++rep) {
    auto f0 = MarginalDistribution::normal(mu(rng), s2(rng));
    double m1 = mu(rng), v1 = s2(rng);
    auto f1 = MarginalDistribution::normal(m1, v1);
    double prev_lo = -1, prev_hi = -1;
    for (double delta = -1.0; delta <= 2.0; delta += 0.25) {
      double lo = dte::makarov_lower(f0, f1, delta).value;
      double hi = dte::makarov_upper(f0, f1, delta).value;
      CHECK(lo <= hi + 1e-12);
      CHECK(lo >= prev_lo - 1e-9);
      CHECK(hi >= prev_hi - 1e-9);
      prev_lo = lo;
      prev_hi = hi;
    }
    // Shifting F1 by c shifts the bound curves: bound(delta; F1+c) = bound(delta-c; F1).
    double c = 0.75;
    auto f1_shift = MarginalDistribution::normal(m1 + c, v1);
    for (double delta : {0.0, 0.5, 1.25}) {
      CHECK(dte::makarov_lower(f0, f1_shift, delta).value ==
            doctest::Approx(dte::makarov_lower(f0, f1, delta - c).value).epsilon(1e-6));
      CHECK(dte::makarov_upper(f0, f1_shift, delta).value ==
            doctest::Approx(dte::makarov_upper(f0, f1, delta - c).value).epsilon(1e-6));
    }
  }
}

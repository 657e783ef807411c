#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "dtebounds/mtr.hpp"

using dte::MarginalDistribution;
using dte::MtrOptions;
using dte::TriangleSequence;
using Eigen::VectorXd;

namespace {

MtrOptions fast_opts() {
  MtrOptions o;
  o.multistarts = 8;
  return o;
}

// Enumeration oracle for the equal-spacing ladder value at a given offset.
double ladder_sum(const MarginalDistribution& f0, const MarginalDistribution& f1, double delta,
                  double y, int k_lo, int k_hi) {
  double acc = 0;
  for (int k = k_lo; k <= k_hi; ++k)
    acc += std::max(f1.cdf(y + (k + 1) * delta) - f0.cdf(y + k * delta), 0.0);
  return acc;
}

}  // namespace

TEST_CASE("smooth_max") {
  CHECK(dte::smooth_max(0.0, 0.05) == doctest::Approx(0.0));
  CHECK(std::fabs(dte::smooth_max(1.0, 0.01) - 1.0) < 1e-40);
  CHECK(std::fabs(dte::smooth_max(-1.0, 0.01)) < 1e-40);
  CHECK_THROWS_AS(dte::smooth_max(1.0, 0.0), std::domain_error);
  CHECK_THROWS_AS(dte::smooth_max(1.0, -0.1), std::domain_error);
  // Approximation quality (h=0.05 panel): |sm(x,h) - max(x,0)| <= h ln(2)-ish scale.
  for (double x = -2.0; x <= 2.0; x += 0.01)
    CHECK(std::fabs(dte::smooth_max(x, 0.05) - std::max(x, 0.0)) < 0.05);
}

TEST_CASE("equal_spacing_value: telescoping and uniform pairs") {
  auto n01 = MarginalDistribution::normal(0, 1);
  auto u01 = MarginalDistribution::uniform(0, 1);
  auto u05 = MarginalDistribution::uniform(0.5, 1.5);

  CHECK(dte::equal_spacing_value(n01, n01, 1.0).value == doctest::Approx(1.0).epsilon(1e-6));

  auto r = dte::equal_spacing_value(u01, u05, 0.75);
  CHECK(r.value == doctest::Approx(0.5).epsilon(1e-6));
  // y* = 0 attains it (0.75 lands on the same orbit).
  CHECK(ladder_sum(u01, u05, 0.75, r.y_star, -5, 5) == doctest::Approx(r.value).epsilon(1e-9));
  CHECK(r.y_star >= 0.0);
  CHECK(r.y_star <= 0.75);

  CHECK(dte::equal_spacing_value(u01, u05, 0.5).value == doctest::Approx(0.0).epsilon(1e-9));
  CHECK_THROWS_AS(dte::equal_spacing_value(u01, u05, 0.0), std::domain_error);
}

TEST_CASE("truncation_K") {
  auto u01 = MarginalDistribution::uniform(0, 1);
  auto u05 = MarginalDistribution::uniform(0.5, 1.5);
  auto n01 = MarginalDistribution::normal(0, 1);

  // Uniform pair, delta=0.75, y*=0: nonzero terms at k in {0,1}, so the best
  // 3-term window at K=1 already captures V exactly.
  double v_full = ladder_sum(u01, u05, 0.75, 0.0, -10, 10);
  double v_k1 = ladder_sum(u01, u05, 0.75, 0.0, -1, 1);
  CHECK(v_full == doctest::Approx(0.5));
  CHECK(v_k1 == doctest::Approx(v_full));
  CHECK(dte::truncation_K(u01, u05, 0.75, 0.0, 1e-5) == 1);

  // Equal normals, delta=1: the tail bound 2 Phi(-K) pins K=5 at eps=1e-5.
  CHECK(dte::truncation_K(n01, n01, 1.0, 0.0, 1e-5) == 5);

  // eps=1 is satisfied by the empty window.
  CHECK(dte::truncation_K(n01, n01, 1.0, 0.0, 1.0) == 0);
  CHECK(dte::truncation_K(u01, u05, 0.75, 0.0, 1.0) == 0);

  CHECK_THROWS_AS(dte::truncation_K(n01, n01, 1.0, 0.0, 0.0), std::domain_error);
}

TEST_CASE("refine_sequence") {
  auto n01 = MarginalDistribution::normal(0, 1);
  auto u01 = MarginalDistribution::uniform(0, 1);
  auto u05 = MarginalDistribution::uniform(0.5, 1.5);

  SUBCASE("equal normals: equal spacing is already optimal") {
    int J = 5, K = 5;
    TriangleSequence start;
    start.delta = 1.0;
    start.window = J;
    start.base_points = VectorXd::LinSpaced(2 * J + 1, -J, J);
    auto r = dte::refine_sequence(n01, n01, 1.0, K, J, start, fast_opts());
    CHECK(r.value >= 1.0 - 1e-6);
    CHECK(r.value <= 1.0 + 1e-12);
    CHECK(r.seq.satisfies_constraints(1e-9));
  }

  SUBCASE("uniform pair: no multistart beats equal spacing") {
    int J = 2, K = 2;
    TriangleSequence start;
    start.delta = 0.75;
    start.window = J;
    start.base_points = VectorXd::LinSpaced(2 * J + 1, -2 * 0.75, 2 * 0.75);
    auto r = dte::refine_sequence(u01, u05, 0.75, K, J, start, fast_opts());
    CHECK(r.value == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(r.value <= 0.5 + 1e-12);  // LP-sharp value
  }

  SUBCASE("infeasible start is rejected") {
    TriangleSequence bad;
    bad.delta = 0.75;
    bad.window = 2;
    bad.base_points.resize(5);
    bad.base_points << 0, 1.0, 1.2, 1.9, 2.6;  // first step exceeds delta
    CHECK_THROWS_AS(dte::refine_sequence(u01, u05, 0.75, 2, 2, bad, fast_opts()),
                    std::invalid_argument);
    CHECK_THROWS_AS(dte::refine_sequence(u01, u05, 0.75, 2, 5, bad, fast_opts()),
                    std::invalid_argument);  // J > 2K
  }
}

TEST_CASE("mtr_lower: corollary cases") {
  auto n01 = MarginalDistribution::normal(0, 1);
  auto u01 = MarginalDistribution::uniform(0, 1);

  SUBCASE("negative delta") {
    auto r = dte::mtr_lower(n01, n01, -0.5, fast_opts());
    CHECK(r.value == 0.0);
    CHECK(dte::mtr_upper(n01, n01, -1.0) == 0.0);
  }

  SUBCASE("telescoping at equal marginals") {
    for (double delta : {0.1, 0.5, 2.0}) {
      auto r = dte::mtr_lower(n01, n01, delta, fast_opts());
      CHECK(r.value == doctest::Approx(1.0).epsilon(1e-6));
      CHECK_FALSE(r.dominance_warning);
    }
    auto ru = dte::mtr_lower(u01, u01, 0.5, fast_opts());
    CHECK(ru.value == doctest::Approx(1.0).epsilon(1e-6));
  }

  SUBCASE("section-4 style pair brackets") {
    auto f1 = MarginalDistribution::chi2_normal_convolution(1, 1.0);
    auto r = dte::mtr_lower(n01, f1, 2.0, fast_opts());
    double true_dte = 0.8427007929497151;  // chi2(1) CDF at 2
    double makarov = dte::makarov_lower(n01, f1, 2.0).value;
    CHECK(r.value >= makarov - 1e-9);
    CHECK(r.value <= true_dte + 1e-6);
    // Frozen scan oracle for the warm start at this delta.
    CHECK(r.value >= 0.5570336 - 1e-4);
    CHECK_FALSE(r.dominance_warning);
  }

  SUBCASE("dominance warning fires when MTR is incompatible") {
    auto f0 = MarginalDistribution::normal(0.5, 1.0);
    auto f1 = MarginalDistribution::normal(0.0, 1.0);
    CHECK(dte::mtr_lower(f0, f1, 1.0, fast_opts()).dominance_warning);
    CHECK_FALSE(dte::mtr_lower(f1, f0, 1.0, fast_opts()).dominance_warning);
  }
}

TEST_CASE("mtr_upper matches the Makarov upper bound for delta >= 0") {
  auto u01 = MarginalDistribution::uniform(0, 1);
  auto u05 = MarginalDistribution::uniform(0.5, 1.5);
  CHECK(dte::mtr_upper(u01, u01, 0.1) == doctest::Approx(1.0));
  CHECK(dte::mtr_upper(u01, u05, 0.25) == doctest::Approx(0.75).epsilon(1e-9));
}

TEST_CASE("mtr invariants on seeded mixture pairs") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> mu(-0.5, 0.5), s2(0.3, 1.5), gap(0.2, 1.5);
  MtrOptions opts = fast_opts();
  for (int rep = 0; rep < 3; ++rep) {
    // F1 stochastically dominates F0 by a positive shift, so MTR is coherent.
    double m0 = mu(rng), v0 = s2(rng), shift = gap(rng);
    VectorXd w(2), mm(2), vv(2);
    w << 0.5, 0.5;
    mm << m0 + shift, m0 + shift + gap(rng);
    vv << v0, v0;
    auto f0 = MarginalDistribution::normal(m0, v0);
    auto f1 = MarginalDistribution::normal_mixture(w, mm, vv);
    double prev = -1;
    for (double delta : {0.3, 0.8, 1.5, 2.5}) {
      auto r = dte::mtr_lower(f0, f1, delta, opts);
      double mk = dte::makarov_lower(f0, f1, delta).value;
      double mu_up = dte::makarov_upper(f0, f1, delta).value;
      CHECK(r.value >= mk - 1e-9);            // improvement over one rectangle
      CHECK(r.value <= mu_up + 1e-9);         // testable implication under dominance
      CHECK(r.value >= prev - 1e-6);          // monotone in delta (scan wobble tolerance)
      CHECK(r.value >= 0.0);
      CHECK(r.value <= 1.0);
      CHECK(r.seq.satisfies_constraints(1e-9));
      CHECK(dte::mtr_objective(f0, f1, r.seq) == doctest::Approx(r.value).epsilon(1e-9));
      CHECK_FALSE(r.dominance_warning);
      prev = r.value;
    }
  }
}

TEST_CASE("truncated window value is nondecreasing in K") {
  auto n01 = MarginalDistribution::normal(0, 1);
  auto f1 = MarginalDistribution::normal(0.8, 1.3);
  double delta = 0.6;
  auto es = dte::equal_spacing_value(n01, f1, delta);
  double prev = -1;
  for (int K = 0; K <= 8; ++K) {
    // Window value oracle: best (2K+1)-term re-anchored window.
    double best = 0;
    for (int c = -12; c <= 12; ++c) best = std::max(best, ladder_sum(n01, f1, delta, es.y_star, c - K, c + K));
    CHECK(best >= prev - 1e-12);
    prev = best;
  }
  CHECK(prev == doctest::Approx(es.value).epsilon(1e-5));
}

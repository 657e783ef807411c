#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "dtebounds/distribution.hpp"
#include "dtebounds/special.hpp"

using dte::MarginalDistribution;
using Eigen::VectorXd;

namespace {

// Shared fixtures: the convolution table is built once.
const MarginalDistribution& conv11() {
  static const MarginalDistribution d = MarginalDistribution::chi2_normal_convolution(1, 1.0);
  return d;
}

// Composite Simpson integration of the chi-square density; test-side oracle
// independent of the library's gamma_p path.
double chi2_cdf_by_density_quadrature(double y, int k, int n = 200001) {
  auto density = [k](double t) {
    if (t <= 0.0) return 0.0;
    double a = 0.5 * k;
    return std::exp((a - 1.0) * std::log(t) - 0.5 * t - a * std::log(2.0) - std::lgamma(a));
  };
  double h = y / (n - 1);
  double acc = density(1e-300) + density(y);
  for (int i = 1; i < n - 1; ++i) acc += density(i * h) * (i % 2 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

double phi(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace

TEST_CASE("normal cdf and quantile") {
  auto d = MarginalDistribution::normal(0.0, 1.0);
  CHECK(d.cdf(0.0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(d.quantile(0.5) == doctest::Approx(0.0).epsilon(1e-12));
  auto d2 = MarginalDistribution::normal(2.0, 4.0);
  CHECK(d2.cdf(2.0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(d2.cdf(4.0) == doctest::Approx(phi(1.0)).epsilon(1e-13));
}

TEST_CASE("chi-square cdf against independent oracles") {
  auto d1 = MarginalDistribution::chi_square(1);
  CHECK(d1.cdf(0.0) == 0.0);
  CHECK(d1.cdf(-1.0) == 0.0);
  // P(Z^2 <= 1) = P(|Z| <= 1) = 2*Phi(1) - 1.
  CHECK(d1.cdf(1.0) == doctest::Approx(2.0 * phi(1.0) - 1.0).epsilon(1e-12));
  CHECK(d1.cdf(1.0) == doctest::Approx(0.6826894921370859).epsilon(1e-12));
  // chi^2(2) is exponential(1/2).
  auto d2 = MarginalDistribution::chi_square(2);
  CHECK(d2.cdf(3.0) == doctest::Approx(1.0 - std::exp(-1.5)).epsilon(1e-13));
  // Density quadrature cross-checks.
  auto d3 = MarginalDistribution::chi_square(3);
  CHECK(d3.cdf(2.5) == doctest::Approx(chi2_cdf_by_density_quadrature(2.5, 3)).epsilon(1e-8));
  auto d5 = MarginalDistribution::chi_square(5);
  CHECK(d5.cdf(4.2) == doctest::Approx(chi2_cdf_by_density_quadrature(4.2, 5)).epsilon(1e-8));
}

TEST_CASE("uniform") {
  auto u = MarginalDistribution::uniform(0.0, 1.0);
  CHECK(u.quantile(0.25) == doctest::Approx(0.25));
  CHECK(u.cdf(0.3) == doctest::Approx(0.3));
  CHECK(u.cdf(-0.1) == 0.0);
  CHECK(u.cdf(1.1) == 1.0);
}

TEST_CASE("chi2-normal convolution: frozen quadrature oracles") {
  const auto& d = conv11();
  // Frozen from high-accuracy quadrature of int G(y-x;1) dPhi(x).
  CHECK(d.cdf(0.0) == doctest::Approx(0.28098521692539297).epsilon(5e-8));
  CHECK(d.cdf(1.0) == doctest::Approx(0.5748614972464494).epsilon(5e-8));
  CHECK(d.cdf(2.0) == doctest::Approx(0.7896505471733535).epsilon(5e-8));
  CHECK(d.cdf(40.0) >= 1.0 - 1e-6);  // CDF limit
  CHECK(d.cdf(0.0) > 0.0);
  CHECK(d.cdf(0.0) < 0.5);
  // Median round trip at the quantile tolerance.
  double med = d.quantile(0.5);
  CHECK(std::fabs(d.cdf(med) - 0.5) < 1e-8);
}

TEST_CASE("chi2-normal convolution matches Monte Carlo within 3 standard errors") {
  const auto cases = std::vector<std::tuple<int, double, double>>{
      {1, 1.0, 2.0}, {5, 10.0, 5.0}};
  for (auto [k1, k2, y] : cases) {
    MarginalDistribution d = (k1 == 1 && k2 == 1.0)
                                 ? conv11()
                                 : MarginalDistribution::chi2_normal_convolution(k1, k2);
    std::mt19937_64 rng(20240615);
    const int n = 1'000'000;
    int count = 0;
    std::uniform_real_distribution<double> unif(1e-300, 1.0);
    for (int i = 0; i < n; ++i) {
      // Box-Muller; chi^2(k1) as a sum of squared normals.
      double draw = 0.0;
      for (int j = 0; j < k1; ++j) {
        double z = std::sqrt(-2.0 * std::log(unif(rng))) *
                   std::cos(2.0 * M_PI * unif(rng));
        draw += z * z;
      }
      double eps = std::sqrt(-2.0 * std::log(unif(rng))) *
                   std::sin(2.0 * M_PI * unif(rng)) * std::sqrt(k2);
      if (draw + eps <= y) ++count;
    }
    double p_hat = static_cast<double>(count) / n;
    double se = std::sqrt(p_hat * (1.0 - p_hat) / n);
    CHECK(std::fabs(d.cdf(y) - p_hat) <= 3.0 * se);
  }
}

TEST_CASE("convolution rejects degenerate noise") {
  CHECK_THROWS_AS(MarginalDistribution::chi2_normal_convolution(1, 0.0), std::domain_error);
  CHECK_THROWS_AS(MarginalDistribution::chi2_normal_convolution(1, -1.0), std::domain_error);
  CHECK_THROWS_AS(MarginalDistribution::chi2_normal_convolution(0, 1.0), std::domain_error);
}

TEST_CASE("cdf monotone on random grids, all kinds") {
  std::mt19937_64 rng(7);
  std::vector<MarginalDistribution> kinds;
  kinds.push_back(MarginalDistribution::normal(0.3, 2.0));
  kinds.push_back(MarginalDistribution::chi_square(3));
  kinds.push_back(conv11());
  kinds.push_back(MarginalDistribution::uniform(-1.0, 2.0));
  {
    VectorXd w(2), m(2), v(2);
    w << 0.3, 0.7;
    m << -1.0, 2.0;
    v << 0.5, 1.5;
    kinds.push_back(MarginalDistribution::normal_mixture(w, m, v));
  }
  {
    VectorXd p(3), q(3);
    p << 0.0, 1.0, 2.5;
    q << 0.2, 0.7, 1.0;
    kinds.push_back(MarginalDistribution::step_cdf(p, q));
  }
  for (const auto& d : kinds) {
    std::uniform_real_distribution<double> u(d.support_lo() - 3.0, d.support_hi() + 3.0);
    std::vector<double> ys(1000);
    for (auto& y : ys) y = u(rng);
    std::sort(ys.begin(), ys.end());
    for (size_t i = 1; i < ys.size(); ++i) CHECK(d.cdf(ys[i]) >= d.cdf(ys[i - 1]));
    CHECK(d.cdf(d.support_lo() - 10.0 * d.scale()) <= 1e-9);
    if (!d.is_step()) CHECK(d.cdf(d.support_hi() + 10.0 * d.scale()) >= 1.0 - 1e-9);
  }
}

TEST_CASE("cdf-quantile round trip for continuous kinds") {
  std::vector<MarginalDistribution> kinds;
  kinds.push_back(MarginalDistribution::normal(0.0, 1.0));
  kinds.push_back(MarginalDistribution::chi_square(4));
  kinds.push_back(conv11());
  kinds.push_back(MarginalDistribution::uniform(0.0, 1.0));
  {
    VectorXd w(2), m(2), v(2);
    w << 0.5, 0.5;
    m << 0.0, 3.0;
    v << 1.0, 0.25;
    kinds.push_back(MarginalDistribution::normal_mixture(w, m, v));
  }
  for (const auto& d : kinds) {
    for (int i = 1; i <= 99; ++i) {
      double q = i / 100.0;
      CHECK(std::fabs(d.cdf(d.quantile(q)) - q) <= 1e-7);
    }
  }
  CHECK_THROWS_AS(kinds[0].quantile(0.0), std::domain_error);
  CHECK_THROWS_AS(kinds[0].quantile(1.0), std::domain_error);
  CHECK_THROWS_AS(kinds[0].quantile(-0.2), std::domain_error);
}

TEST_CASE("normal mixture validation") {
  VectorXd w(2), m(2), v(2);
  w << 0.6, 0.5;
  m << 0.0, 1.0;
  v << 1.0, 1.0;
  CHECK_THROWS_AS(MarginalDistribution::normal_mixture(w, m, v), std::domain_error);
  w << -0.1, 1.1;
  CHECK_THROWS_AS(MarginalDistribution::normal_mixture(w, m, v), std::domain_error);
  w << 0.5, 0.5;
  v << 1.0, 0.0;
  CHECK_THROWS_AS(MarginalDistribution::normal_mixture(w, m, v), std::domain_error);
}

TEST_CASE("step cdf validation and evaluation") {
  VectorXd p(3), v(3);
  p << 1.0, 1.0, 2.0;
  v << 0.2, 0.5, 1.0;
  CHECK_THROWS(MarginalDistribution::step_cdf(p, v));
  p << 1.0, 2.0, 3.0;
  v << 0.5, 0.2, 1.0;
  CHECK_THROWS(MarginalDistribution::step_cdf(p, v));
  v << 0.25, 0.5, 1.0;
  auto d = MarginalDistribution::step_cdf(p, v);
  CHECK(d.cdf(0.5) == 0.0);
  CHECK(d.cdf(1.0) == doctest::Approx(0.25));   // right-continuous
  CHECK(d.cdf(1.5) == doctest::Approx(0.25));
  CHECK(d.cdf(2.0) == doctest::Approx(0.5));
  CHECK(d.cdf(10.0) == doctest::Approx(1.0));
  CHECK(d.quantile(0.5) == doctest::Approx(2.0));
  CHECK(d.quantile(0.3) == doctest::Approx(2.0));
  CHECK(d.quantile(0.25) == doctest::Approx(1.0));
}

TEST_CASE("rearrange_monotone") {
  CHECK(dte::rearrange_monotone({3, 1, 2}) == std::vector<double>{1, 2, 3});
  CHECK(dte::rearrange_monotone({1, 2, 3}) == std::vector<double>{1, 2, 3});
  CHECK(dte::rearrange_monotone({2, 2, 1}) == std::vector<double>{1, 2, 2});
  CHECK_THROWS_AS(dte::rearrange_monotone({}), std::invalid_argument);

  // Property: output is a nondecreasing permutation of the input.
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-5, 5);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> in(1 + rep % 37);
    for (auto& x : in) x = u(rng);
    auto out = dte::rearrange_monotone(in);
    CHECK(std::is_sorted(out.begin(), out.end()));
    auto a = in, b = out;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    CHECK(a == b);
  }
}

TEST_CASE("step_cdf_from_quantiles") {
  VectorXd q(3), x(3);
  q << 0.25, 0.5, 0.75;
  x << 1.0, 2.0, 3.0;
  auto d = dte::step_cdf_from_quantiles(q, x);
  CHECK(d.cdf(2.0) == doctest::Approx(0.5));

  x << 1.0, 1.0, 3.0;  // tie keeps the largest q
  auto d2 = dte::step_cdf_from_quantiles(q, x);
  CHECK(d2.cdf(1.0) == doctest::Approx(0.5));

  x << 3.0, 1.0, 2.0;
  CHECK_THROWS_AS(dte::step_cdf_from_quantiles(q, x), std::invalid_argument);

  VectorXd q2(2);
  q2 << 0.2, 0.4;
  CHECK_THROWS_AS(dte::step_cdf_from_quantiles(q2, x), std::invalid_argument);
}

TEST_CASE("fit_normal_mixture: exact family member") {
  auto target = MarginalDistribution::normal(0.0, 1.0);
  VectorXd grid = VectorXd::LinSpaced(101, -4.0, 4.0);
  auto fit = dte::fit_normal_mixture(target, grid, 3, 0.01);
  CHECK(fit.order == 1);
  CHECK(fit.sup_distance < 1e-6);
}

TEST_CASE("fit_normal_mixture: convolution accepted at low order") {
  const auto& target = conv11();
  VectorXd grid = VectorXd::LinSpaced(201, target.support_lo(), target.support_hi());
  auto fit = dte::fit_normal_mixture(target, grid, 3, 0.005);
  CHECK(fit.order <= 3);
  CHECK(fit.sup_distance < 0.005);
}

TEST_CASE("fit_normal_mixture: single normal cannot match a uniform to 1e-6") {
  auto target = MarginalDistribution::uniform(0.0, 1.0);
  VectorXd grid = VectorXd::LinSpaced(101, -0.5, 1.5);
  CHECK_THROWS_AS(dte::fit_normal_mixture(target, grid, 1, 1e-6), dte::FitError);

  // Grid-search oracle: the best single-normal sup distance is far above 1e-6.
  double best = 1.0;
  for (double mu = 0.40; mu <= 0.60; mu += 0.01) {
    for (double s = 0.05; s <= 1.0; s += 0.01) {
      double sup = 0.0;
      for (int i = 0; i < grid.size(); ++i) {
        double t = target.cdf(grid[i]);
        sup = std::max(sup, std::fabs(phi((grid[i] - mu) / s) - t));
      }
      best = std::min(best, sup);
    }
  }
  CHECK(best > 1e-3);
}

TEST_CASE("fit_normal_mixture precondition checks") {
  auto target = MarginalDistribution::normal(0.0, 1.0);
  VectorXd small = VectorXd::LinSpaced(10, -4.0, 4.0);
  CHECK_THROWS_AS(dte::fit_normal_mixture(target, small, 2, 0.01), std::invalid_argument);
  VectorXd grid = VectorXd::LinSpaced(101, -4.0, 4.0);
  CHECK_THROWS_AS(dte::fit_normal_mixture(target, grid, 0, 0.01), std::invalid_argument);
}

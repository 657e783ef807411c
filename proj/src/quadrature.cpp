#include "dtebounds/quadrature.hpp"

#include <array>
#include <cmath>

namespace dte {

std::pair<std::vector<double>, std::vector<double>> gauss_legendre_rule(int n) {
  std::vector<double> nodes(n), weights(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    // Newton iteration on the Legendre polynomial from the Chebyshev guess.
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      pp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / pp;
      x -= dx;
      if (std::fabs(dx) < 1e-15) break;
    }
    nodes[i] = -x;
    nodes[n - 1 - i] = x;
    double w = 2.0 / ((1.0 - x * x) * pp * pp);
    weights[i] = w;
    weights[n - 1 - i] = w;
  }
  return {nodes, weights};
}

namespace {

constexpr int kOrder = 20;

struct GaussRule {
  std::array<double, kOrder> nodes;
  std::array<double, kOrder> weights;
};

const GaussRule& rule() {
  static const GaussRule r = [] {
    GaussRule out{};
    auto [n, w] = gauss_legendre_rule(kOrder);
    for (int i = 0; i < kOrder; ++i) {
      out.nodes[i] = n[i];
      out.weights[i] = w[i];
    }
    return out;
  }();
  return r;
}

double gauss_panel(const std::function<double(double)>& f, double a, double b) {
  const GaussRule& r = rule();
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double sum = 0.0;
  for (int i = 0; i < kOrder; ++i) sum += r.weights[i] * f(mid + half * r.nodes[i]);
  return sum * half;
}

double adapt(const std::function<double(double)>& f, double a, double b, double whole,
             double tol, int depth) {
  const double mid = 0.5 * (a + b);
  const double left = gauss_panel(f, a, mid);
  const double right = gauss_panel(f, mid, b);
  const double err = std::fabs(left + right - whole);
  if (err < tol || depth <= 0) return left + right;
  return adapt(f, a, mid, left, 0.5 * tol, depth - 1) +
         adapt(f, mid, b, right, 0.5 * tol, depth - 1);
}

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b,
                 double abs_tol, int max_depth) {
  if (a == b) return 0.0;
  return adapt(f, a, b, gauss_panel(f, a, b), abs_tol, max_depth);
}

}  // namespace dte

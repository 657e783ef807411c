#include "dtebounds/makarov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace dte {

namespace {

// Maximizes f on [a,b] by golden-section search; assumes local unimodality
// within the bracket (one scan cell wide in practice).
SupResult golden_max(const std::function<double(double)>& f, double a, double b, int iters) {
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - gr * (b - a), d = a + gr * (b - a);
  double fc = f(c), fd = f(d);
  for (int i = 0; i < iters && (b - a) > 1e-12 * (1.0 + std::fabs(a)); ++i) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - gr * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + gr * (b - a);
      fd = f(d);
    }
  }
  double mid = 0.5 * (a + b);
  return {f(mid), mid};
}

void append_step_candidates(const MarginalDistribution& f0, const MarginalDistribution& f1,
                            double delta, std::vector<double>& ys, bool for_lower) {
  // For the sup of F1(y)-F0(y-delta) the interesting points are the F1 jumps
  // (right-continuity puts the jump into F1(y)) and points just below
  // F0-jump + delta; for the inf the roles flip.
  if (f1.is_step()) {
    const auto& p = f1.step_points();
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      ys.push_back(for_lower ? p[i]
                             : std::nextafter(p[i], -std::numeric_limits<double>::infinity()));
    }
  }
  if (f0.is_step()) {
    const auto& p = f0.step_points();
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      double y = p[i] + delta;
      ys.push_back(for_lower ? std::nextafter(y, -std::numeric_limits<double>::infinity()) : y);
    }
  }
}

SupResult scan_extremum(const MarginalDistribution& f0, const MarginalDistribution& f1,
                        double delta, int grid_n, bool maximize) {
  auto g = [&](double y) {
    double v = f1.cdf(y) - f0.cdf(y - delta);
    return maximize ? v : -v;
  };
  const double lo = std::min(f1.support_lo(), f0.support_lo() + delta);
  const double hi = std::max(f1.support_hi(), f0.support_hi() + delta);
  const double pad = 0.02 * (hi - lo) + 1e-9;
  const double a = lo - pad, b = hi + pad;
  if (grid_n < 3) grid_n = 3;

  double best = g(a), best_y = a;
  const double step = (b - a) / (grid_n - 1);
  for (int i = 1; i < grid_n; ++i) {
    double y = a + step * i;
    double v = g(y);
    if (v > best) {
      best = v;
      best_y = y;
    }
  }
  std::vector<double> extra;
  append_step_candidates(f0, f1, delta, extra, maximize);
  for (double y : extra) {
    double v = g(y);
    if (v > best) {
      best = v;
      best_y = y;
    }
  }
  if (!f0.is_step() && !f1.is_step()) {
    auto refined = golden_max(g, std::max(a, best_y - step), std::min(b, best_y + step), 200);
    if (refined.value > best) {
      best = refined.value;
      best_y = refined.arg;
    }
  }
  return {best, best_y};
}

}  // namespace

SupResult makarov_lower(const MarginalDistribution& f0, const MarginalDistribution& f1,
                        double delta, int grid_n) {
  SupResult r = scan_extremum(f0, f1, delta, grid_n, true);
  return {std::max(r.value, 0.0), r.arg};
}

SupResult makarov_upper(const MarginalDistribution& f0, const MarginalDistribution& f1,
                        double delta, int grid_n) {
  SupResult r = scan_extremum(f0, f1, delta, grid_n, false);
  return {1.0 + std::min(-r.value, 0.0), r.arg};
}

std::pair<double, double> frechet_rectangle(double p0, double p1) {
  if (!(p0 >= 0.0 && p0 <= 1.0 && p1 >= 0.0 && p1 <= 1.0))
    throw std::domain_error("frechet_rectangle: probabilities must lie in [0,1]");
  return {std::max(p0 + p1 - 1.0, 0.0), std::min(p0, p1)};
}

namespace {
void check_unit_cube(double s, double u, double v, const char* who) {
  if (!(s >= 0 && s <= 1 && u >= 0 && u <= 1 && v >= 0 && v <= 1))
    throw std::domain_error(std::string(who) + ": arguments must lie in [0,1]");
}
}  // namespace

double attaining_copula_upper(double s, double u, double v) {
  check_unit_cube(s, u, v, "attaining_copula_upper");
  if (u >= 1.0 - s && v <= s) return std::min(u + s - 1.0, v);
  return std::max(u + v - 1.0, 0.0);
}

double attaining_copula_lower(double t, double u, double v) {
  check_unit_cube(t, u, v, "attaining_copula_lower");
  if (u <= 1.0 - t && v >= t) return std::min(u, v - t);
  return std::max(u + v - 1.0, 0.0);
}

double dte_under_copula(const MarginalDistribution& f0, const MarginalDistribution& f1,
                        const std::function<double(double, double)>& copula, double delta,
                        int n) {
  if (n < 100) throw std::invalid_argument("dte_under_copula: grid size must be >= 100");
  const double q_eps = 1e-12;
  std::vector<double> q0(n + 1), q1(n + 1);
  for (int i = 0; i <= n; ++i) {
    double u = std::min(std::max(static_cast<double>(i) / n, q_eps), 1.0 - q_eps);
    q0[i] = f0.quantile(u);
    q1[i] = f1.quantile(u);
  }
  // Copula values on the corner grid, row-major in u.
  std::vector<double> c((n + 1) * (n + 1));
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j <= n; ++j)
      c[i * (n + 1) + j] = copula(static_cast<double>(i) / n, static_cast<double>(j) / n);

  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      double mass = c[(i + 1) * (n + 1) + (j + 1)] - c[i * (n + 1) + (j + 1)] -
                    c[(i + 1) * (n + 1) + j] + c[i * (n + 1) + j];
      if (mass < -1e-10)
        throw std::invalid_argument("dte_under_copula: negative cell mass; not a copula");
      if (mass <= 0.0) continue;
      double y0_lo = q0[i], y0_hi = q0[i + 1];
      double y1_lo = q1[j], y1_hi = q1[j + 1];
      if (y1_hi - y0_lo <= delta) {
        acc += mass;  // rectangle fully inside {y1 - y0 <= delta}
      } else if (y1_lo - y0_hi > delta) {
        // fully outside
      } else if (0.5 * (y1_lo + y1_hi) - 0.5 * (y0_lo + y0_hi) <= delta) {
        acc += mass;  // boundary cell, midpoint rule
      }
    }
  }
  return acc;
}

}  // namespace dte

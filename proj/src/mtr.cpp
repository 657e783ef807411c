#include "dtebounds/mtr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dtebounds/ladder.hpp"

namespace dte {

namespace {

ladder::Problem mtr_problem(const MarginalDistribution& f0, const MarginalDistribution& f1,
                            double delta) {
  ladder::Problem p;
  p.hi = {&f1, 1.0, 0.0};
  p.lo = {&f0, 1.0, 0.0};
  p.geom = {1.0, delta};
  return p;
}

ladder::Options to_ladder(const MtrOptions& o) {
  return {o.epsilon_K, o.smoothing_h, o.multistarts, o.rng_seed, o.y_grid, o.refine_max_window};
}

// Anchor candidates beyond the uniform scan: the Makarov witness (so the
// single-rectangle bound is always dominated) and step-CDF jump locations.
std::vector<double> anchor_candidates(const MarginalDistribution& f0,
                                      const MarginalDistribution& f1, double delta) {
  std::vector<double> extras;
  extras.push_back(makarov_lower(f0, f1, delta).arg);
  auto add_jumps = [&extras](const MarginalDistribution& d, double shift, bool from_below) {
    if (!d.is_step()) return;
    const auto& pts = d.step_points();
    const auto n = pts.size();
    const Eigen::Index stride = std::max<Eigen::Index>(1, n / 2048);
    for (Eigen::Index i = 0; i < n; i += stride) {
      double x = pts[i] + shift;
      for (int b = 0; b < 2; ++b)
        x = from_below ? std::nextafter(x, -std::numeric_limits<double>::infinity())
                       : std::nextafter(x, std::numeric_limits<double>::infinity());
      extras.push_back(x);
    }
  };
  add_jumps(f1, 0.0, false);       // rung lands on an F1 jump (right-continuous)
  add_jumps(f0, 0.0, true);        // rung just below an F0 jump
  return extras;
}

TriangleSequence to_sequence(const std::vector<double>& rungs, double delta) {
  TriangleSequence seq;
  seq.delta = delta;
  seq.base_points = Eigen::Map<const VectorXd>(rungs.data(), static_cast<Eigen::Index>(rungs.size()));
  seq.window = static_cast<int>(rungs.size() - 1) / 2;
  return seq;
}

}  // namespace

bool TriangleSequence::satisfies_constraints(double tol) const {
  const auto n = base_points.size();
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    double d = base_points[i + 1] - base_points[i];
    if (d < -tol || d > delta + tol) return false;
  }
  for (Eigen::Index i = 0; i + 2 < n; ++i)
    if (base_points[i + 2] - base_points[i] < delta - tol) return false;
  return true;
}

double smooth_max(double x, double h) { return ladder::smooth_max(x, h); }

EqualSpacingResult equal_spacing_value(const MarginalDistribution& f0,
                                       const MarginalDistribution& f1, double delta,
                                       int y_grid) {
  if (!(delta > 0)) throw std::domain_error("equal_spacing_value: delta must be positive");
  ladder::Problem p = mtr_problem(f0, f1, delta);
  auto extras = anchor_candidates(f0, f1, delta);
  ladder::Orbit o = ladder::best_orbit(p, y_grid, extras);
  return {o.value, o.anchor};
}

int truncation_K(const MarginalDistribution& f0, const MarginalDistribution& f1, double delta,
                 double y_star, double epsilon_K) {
  if (!(epsilon_K > 0)) throw std::domain_error("truncation_K: epsilon_K must be positive");
  ladder::Problem p = mtr_problem(f0, f1, delta);
  ladder::Orbit o = ladder::orbit_through(p, y_star);
  return ladder::truncate(o, epsilon_K).K;
}

RefineResult refine_sequence(const MarginalDistribution& f0, const MarginalDistribution& f1,
                             double delta, int K, int J, const TriangleSequence& start,
                             const MtrOptions& opts) {
  if (J < K || J > 2 * K)
    throw std::invalid_argument("refine_sequence: need K <= J <= 2K");
  if (start.base_points.size() != 2 * J + 1)
    throw std::invalid_argument("refine_sequence: start must have 2J+1 base points");
  if (!start.satisfies_constraints(1e-9))
    throw std::invalid_argument("refine_sequence: infeasible start");

  ladder::Problem p = mtr_problem(f0, f1, delta);
  const double yhat = start.base_points[J];
  const double window_lo = yhat - K * delta, window_hi = yhat + K * delta;
  std::vector<double> start_rungs(start.base_points.data(),
                                  start.base_points.data() + start.base_points.size());
  if (!ladder::feasible(p, start_rungs, window_lo, window_hi, 1e-9))
    throw std::invalid_argument("refine_sequence: start violates the K-window");

  double start_value = ladder::exact_objective(p, start_rungs);
  ladder::Refined r = ladder::refine_window(p, yhat, K, J, to_ladder(opts), &start_rungs);
  if (r.value > start_value) return {r.value, to_sequence(r.rungs, delta)};
  return {start_value, start};
}

MtrResult mtr_lower(const MarginalDistribution& f0, const MarginalDistribution& f1, double delta,
                    const MtrOptions& opts) {
  MtrResult out;
  out.dominance_warning = makarov_lower(f0, f1, 0.0).value > 1e-6;
  if (delta < 0) return out;
  if (delta == 0) {
    // Constant sequences only; the single Frechet rectangle at delta = 0.
    SupResult m = makarov_lower(f0, f1, 0.0);
    out.value = m.value;
    out.seq.delta = 0;
    out.seq.base_points = VectorXd::Constant(1, m.arg);
    return out;
  }
  ladder::Problem p = mtr_problem(f0, f1, delta);
  auto extras = anchor_candidates(f0, f1, delta);
  ladder::Solution sol = ladder::solve(p, to_ladder(opts), extras);
  out.value = std::min(sol.value, 1.0);
  out.warm_value = sol.warm_value;
  out.K = sol.K;
  out.seq = to_sequence(sol.rungs, delta);
  return out;
}

double mtr_upper(const MarginalDistribution& f0, const MarginalDistribution& f1, double delta) {
  if (delta < 0) return 0.0;
  return makarov_upper(f0, f1, delta).value;
}

double mtr_objective(const MarginalDistribution& f0, const MarginalDistribution& f1,
                     const TriangleSequence& seq) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i + 1 < seq.base_points.size(); ++i)
    acc += std::max(f1.cdf(seq.base_points[i + 1]) - f0.cdf(seq.base_points[i]), 0.0);
  return acc;
}

}  // namespace dte

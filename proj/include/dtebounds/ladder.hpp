#ifndef DTEBOUNDS_LADDER_HPP_
#define DTEBOUNDS_LADDER_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "dtebounds/distribution.hpp"

namespace dte::ladder {

// The restricted-support dual bounds all share one shape: maximize
//   sum_k max(hi(x_{k+1}) - lo(x_k), 0)
// over monotone sequences {x_k} whose steps are capped by an affine map,
//   x_k <= x_{k+1} <= step(x_k),  step(x) = alpha*x + beta.
// Monotone treatment response uses step(x) = x + delta; the concave/convex
// and Roy variants swap in other affine maps and composed CDF sides.

// One side of a term: x -> F(a*x + b), a > 0.
struct Side {
  const MarginalDistribution* dist = nullptr;
  double a = 1.0, b = 0.0;

  double operator()(double x) const { return dist->cdf(a * x + b); }
  double slope(double x) const { return a * dist->cdf_derivative(a * x + b); }
  bool has_slope() const { return dist->has_cdf_derivative(); }
  bool is_step() const { return dist->is_step(); }
  double support_lo() const { return (dist->support_lo() - b) / a; }
  double support_hi() const { return (dist->support_hi() - b) / a; }
};

struct Geometry {
  double alpha = 1.0;
  double beta = 0.0;

  double step(double x) const { return alpha * x + beta; }
  double inv_step(double x) const { return (x - beta) / alpha; }
  bool translation() const { return alpha == 1.0; }
  double fixed_point() const { return beta / (1.0 - alpha); }
};

struct Problem {
  Side hi, lo;
  Geometry geom;
};

struct Options {
  double epsilon_K = 1e-5;
  double smoothing_h = 0.05;
  int multistarts = 100;
  std::uint64_t rng_seed = 0;
  int y_grid = 512;
  // Refinement is skipped when the truncation window exceeds this many rungs;
  // the warm start then stands on its own.
  int refine_max_window = 16;
};

// A maximal-step ladder through an anchor, truncated where the tails can no
// longer contribute more than 1e-12.
struct Orbit {
  std::vector<double> rungs;  // increasing
  std::vector<double> terms;  // terms[j] pairs (rungs[j], rungs[j+1])
  double value = 0.0;
  double anchor = 0.0;
};

Orbit orbit_through(const Problem& p, double anchor, int max_rungs = 500000);

// Warm-start scan over one fundamental domain of anchors, plus caller-supplied
// anchor candidates (folded into the domain), plus golden refinement for
// continuous marginals.
Orbit best_orbit(const Problem& p, int y_grid, std::span<const double> extra_anchors);

// Smallest K with V - (best re-anchored window of 2K+1 terms) < eps.
struct Truncation {
  int K = 0;
  double window_value = 0.0;
  double center = 0.0;  // rung at the center of the best window
};
Truncation truncate(const Orbit& orbit, double eps);

// Local refinement of the 2J+1 rungs inside the window [step^-K(center),
// step^+K(center)]: multistart projected ascent on the smoothed objective,
// exact objective reported at the repaired final point.
struct Refined {
  double value = 0.0;
  std::vector<double> rungs;
};
Refined refine_window(const Problem& p, double center, int K, int J, const Options& opt,
                      const std::vector<double>* start_rungs);

// Exact objective of a finite rung sequence.
double exact_objective(const Problem& p, std::span<const double> rungs);

// Constraint check: monotone steps within the cap, spacing-pruning, window box.
bool feasible(const Problem& p, std::span<const double> rungs, double window_lo,
              double window_hi, double tol);

// Full pipeline: warm scan, truncation, refinement for J = K..2K, reported
// value = max(warm value, refinements).
struct Solution {
  double value = 0.0;
  std::vector<double> rungs;  // witness
  double warm_value = 0.0;
  double anchor = 0.0;
  int K = 0;
};
Solution solve(const Problem& p, const Options& opt, std::span<const double> extra_anchors);

double smooth_max(double x, double h);

}  // namespace dte::ladder

#endif

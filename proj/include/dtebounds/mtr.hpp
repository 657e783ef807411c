#ifndef DTEBOUNDS_MTR_HPP_
#define DTEBOUNDS_MTR_HPP_

#include <cstdint>

#include "dtebounds/distribution.hpp"
#include "dtebounds/makarov.hpp"

namespace dte {

struct MtrOptions {
  double epsilon_K = 1e-5;
  double smoothing_h = 0.05;
  int multistarts = 100;
  std::uint64_t rng_seed = 0;
  int y_grid = 512;
  // Refinement windows wider than this many rungs are not worth the local
  // searches; the warm start stands (its value is a valid bound on its own).
  int refine_max_window = 16;
};

// Base points a_{-J..J} of the sequence of dual sets A_k = (a_k, inf).
struct TriangleSequence {
  double delta = 0;
  VectorXd base_points;  // nondecreasing, steps in [0, delta]
  int window = 0;        // J

  bool satisfies_constraints(double tol = 1e-9) const;
};

double smooth_max(double x, double h);

struct EqualSpacingResult {
  double value = 0;   // V(delta)
  double y_star = 0;  // maximizing offset in [0, delta]
};

// V(delta) = sup_{0<=y<=delta} sum_k max(F1(y+(k+1)delta) - F0(y+k delta), 0).
EqualSpacingResult equal_spacing_value(const MarginalDistribution& f0,
                                       const MarginalDistribution& f1, double delta,
                                       int y_grid = 512);

// Smallest K >= 0 whose best re-anchored (2K+1)-term window of the
// equal-spacing ladder at y_star comes within epsilon_K of V(delta).
int truncation_K(const MarginalDistribution& f0, const MarginalDistribution& f1, double delta,
                 double y_star, double epsilon_K);

struct RefineResult {
  double value = 0;
  TriangleSequence seq;
};

// Multistart smoothed local search over sequences a_{-J..J} within the
// window [yhat - K delta, yhat + K delta], yhat taken from the start's
// center rung. Never reports below the start's exact objective.
RefineResult refine_sequence(const MarginalDistribution& f0, const MarginalDistribution& f1,
                             double delta, int K, int J, const TriangleSequence& start,
                             const MtrOptions& opts);

struct MtrResult {
  double value = 0;
  TriangleSequence seq;
  double warm_value = 0;  // V(delta)
  int K = 0;
  bool dominance_warning = false;  // F1 > F0 + 1e-6 somewhere: MTR incompatible
};

// Sharp lower bound under monotone treatment response; 0 for delta < 0.
MtrResult mtr_lower(const MarginalDistribution& f0, const MarginalDistribution& f1,
                    double delta, const MtrOptions& opts = {});

// Sharp upper bound under MTR: the Makarov upper bound for delta >= 0, 0 below.
double mtr_upper(const MarginalDistribution& f0, const MarginalDistribution& f1, double delta);

// Exact ladder objective of a sequence.
double mtr_objective(const MarginalDistribution& f0, const MarginalDistribution& f1,
                     const TriangleSequence& seq);

}  // namespace dte

#endif

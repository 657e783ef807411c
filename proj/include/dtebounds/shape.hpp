#ifndef DTEBOUNDS_SHAPE_HPP_
#define DTEBOUNDS_SHAPE_HPP_

#include <span>

#include "dtebounds/mtr.hpp"

namespace dte {

// Treatment-intensity context for concave/convex response, conditional on
// the pre-treatment outcome W = w. The support boundary through (w,w) has
// slope S1 = (t1-tW)/(t0-tW); the binding step recursion uses T0, T1.
struct ShapeContext {
  double w = 0;
  double t_w = 0, t0 = 1, t1 = 2;

  double T1() const { return (t1 - t0) / (t1 - t_w); }
  double T0() const { return 1.0 - T1(); }
  double S1() const { return (t1 - t_w) / (t0 - t_w); }
  double S0() const { return (t0 - t_w) / (t1 - t0); }
  // y1 on the boundary line above y0.
  double boundary(double y0) const { return S1() * y0 + (1.0 - S1()) * w; }

  void validate() const;
};

struct WMixture {
  VectorXd atoms;
  VectorXd weights;

  void validate() const;
};

struct ShapeBounds {
  double lower = 0, upper = 0;
  TriangleSequence lower_seq;   // witness for the lower bound
  VectorXd upper_seq;           // witness rungs for the upper bound
};

// Corollary-2 bounds for the conditional marginals at W = w.
ShapeBounds concave_bounds(const MarginalDistribution& f0w, const MarginalDistribution& f1w,
                           double delta, const ShapeContext& ctx, const MtrOptions& opts = {});
ShapeBounds convex_bounds(const MarginalDistribution& f0w, const MarginalDistribution& f1w,
                          double delta, const ShapeContext& ctx, const MtrOptions& opts = {});

// Weighted average of per-atom bound values.
double mix_over_w(std::span<const double> per_w, const WMixture& mix);

// Gauss-Legendre atoms approximating a continuous W distribution on [lo,hi].
WMixture gauss_legendre_atoms(const MarginalDistribution& fw, int n = 32);

}  // namespace dte

#endif

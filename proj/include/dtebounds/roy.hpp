#ifndef DTEBOUNDS_ROY_HPP_
#define DTEBOUNDS_ROY_HPP_

#include <optional>
#include <vector>

#include "dtebounds/mtr.hpp"

namespace dte {

// Extended Roy model: D = 1{Y1 - Y0 >= m_C(Z)} with deterministic cost.
// One entry per instrument value z; the four conditional marginals
// F_{d1}(.|d2,z) are already identified and supplied by the caller.
struct RoyPoint {
  double z = 0;
  double m_c = 0;
  double p = 0;  // Pr(D=1 | Z=z)
  // marginal[d1][d2]: distribution of Y_{d1} given D=d2.
  std::optional<MarginalDistribution> marginal[2][2];

  const MarginalDistribution& get(int d1, int d2) const;
};

struct RoyContext {
  std::vector<RoyPoint> points;

  const RoyPoint& at_z(double z) const;  // exact match; throws unknown-z
  void validate() const;
};

// Conditional DTE bounds given D=d, Z=z (Corollary 3 piecewise formulas).
std::pair<double, double> roy_conditional_bounds(const RoyContext& ctx, int d, double z,
                                                 double delta, const MtrOptions& opts = {});

struct RoyBounds {
  double lower = 0, upper = 0;
  bool crossed = false;  // lower > upper beyond tolerance: inconsistent inputs
};

// Intersection bounds across instrument values: max of weighted lowers,
// min of weighted uppers.
RoyBounds roy_bounds(const RoyContext& ctx, double delta, const MtrOptions& opts = {});

}  // namespace dte

#endif

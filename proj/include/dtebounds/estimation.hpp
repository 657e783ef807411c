#ifndef DTEBOUNDS_ESTIMATION_HPP_
#define DTEBOUNDS_ESTIMATION_HPP_

#include <span>
#include <utility>
#include <vector>

#include "dtebounds/bounds_curve.hpp"
#include "dtebounds/mtr.hpp"
#include "dtebounds/oracle.hpp"

namespace dte {

// Observed (Y, D) rows with optional nonnegative weights.
struct SampleData {
  VectorXd y;
  Eigen::VectorXi d;
  VectorXd weights;  // empty means unweighted

  void validate() const;
};

// Weighted empirical CDFs of Y within the D=0 and D=1 arms.
std::pair<MarginalDistribution, MarginalDistribution> empirical_marginals(const SampleData& data);

// Bound curves evaluated at estimated marginals. Step CDFs keep the triangle
// sums finite automatically; only None and Mtr restrictions apply here.
BoundsCurve plugin_bounds(const MarginalDistribution& f0_hat, const MarginalDistribution& f1_hat,
                          const RestrictionSpec& restriction, const VectorXd& delta_grid,
                          const MtrOptions& opts = {});

// 2 * full - mean(subsamples); intentionally unclamped.
double subsample_bias_adjust(double full_estimate, std::span<const double> subsample_estimates);

struct SubsampleConfig {
  int b = 0;
  int q = 1;
  std::uint64_t seed = 0;
};

// q draws of b distinct indices out of n, deterministic given the seed.
std::vector<std::vector<int>> draw_subsamples(int n, const SubsampleConfig& cfg);

}  // namespace dte

#endif

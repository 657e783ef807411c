#ifndef DTEBOUNDS_BOUNDS_CURVE_HPP_
#define DTEBOUNDS_BOUNDS_CURVE_HPP_

#include <cmath>
#include <string>
#include <vector>

#include "dtebounds/distribution.hpp"

namespace dte {

// A grid of delta values with lower/upper bound values per method; the
// primary output of every bound computation.
struct BoundsCurve {
  VectorXd deltas;
  VectorXd lower;
  VectorXd upper;
  std::string method;  // makarov | mtr | concave | convex | roy

  struct Witness {
    double lower_arg = std::nan("");  // maximizer y* where applicable
    double upper_arg = std::nan("");
    VectorXd lower_seq;  // triangle sequence where applicable
  };
  std::vector<Witness> witnesses;

  // Both curves are CDF bounds, hence nondecreasing in delta. The running
  // max-from-the-left of a valid lower bound is still a valid lower bound
  // (and likewise min-from-the-right for the upper), so tightening and
  // monotonizing coincide.
  void enforce_monotone() {
    for (Eigen::Index i = 1; i < lower.size(); ++i)
      lower[i] = std::max(lower[i], lower[i - 1]);
    for (Eigen::Index i = upper.size() - 1; i > 0; --i)
      upper[i - 1] = std::min(upper[i - 1], upper[i]);
  }
};

}  // namespace dte

#endif

#ifndef DTEBOUNDS_MAKAROV_HPP_
#define DTEBOUNDS_MAKAROV_HPP_

#include <functional>
#include <utility>

#include "dtebounds/distribution.hpp"

namespace dte {

struct SupResult {
  double value = 0;
  double arg = 0;  // witness y*
};

// sup_y max(F1(y) - F0(y - delta), 0): dense grid scan over the union of the
// effective supports plus local refinement; step-CDF jump locations enter the
// candidate set directly.
SupResult makarov_lower(const MarginalDistribution& f0, const MarginalDistribution& f1,
                        double delta, int grid_n = 2001);

// 1 + inf_y min(F1(y) - F0(y - delta), 0), same scan machinery.
SupResult makarov_upper(const MarginalDistribution& f0, const MarginalDistribution& f1,
                        double delta, int grid_n = 2001);

// Frechet bounds for Pr(A0 x A1) from the rectangle probabilities.
std::pair<double, double> frechet_rectangle(double p0, double p1);

// Copulas attaining the Makarov bounds at s = F^U(delta), t = F^L(delta-).
double attaining_copula_upper(double s, double u, double v);
double attaining_copula_lower(double t, double u, double v);

// Pr(Y1 - Y0 <= delta) when (Y0,Y1) has the given copula and marginals,
// computed by discretizing the copula measure on an n x n grid; boundary
// cells are classified by their midpoint.
double dte_under_copula(const MarginalDistribution& f0, const MarginalDistribution& f1,
                        const std::function<double(double, double)>& copula, double delta,
                        int n);

}  // namespace dte

#endif

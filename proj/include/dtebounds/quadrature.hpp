#ifndef DTEBOUNDS_QUADRATURE_HPP_
#define DTEBOUNDS_QUADRATURE_HPP_

#include <functional>
#include <utility>
#include <vector>

namespace dte {

// Adaptive quadrature on [a,b]: 20-point Gauss-Legendre panels, bisected
// until |GL(panel) - GL(left) - GL(right)| meets the tolerance budget.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double abs_tol = 1e-11, int max_depth = 40);

// Gauss-Legendre nodes and weights on [-1,1], generated by Newton iteration.
std::pair<std::vector<double>, std::vector<double>> gauss_legendre_rule(int n);

}  // namespace dte

#endif

#ifndef DTEBOUNDS_SPECIAL_HPP_
#define DTEBOUNDS_SPECIAL_HPP_

namespace dte::special {

// Standard normal CDF / PDF.
double normal_cdf(double x);
double normal_pdf(double x);

// Inverse of normal_cdf on (0,1), accurate to ~1e-15 after polishing.
double normal_quantile(double p);

// Regularized lower incomplete gamma P(a,x), a > 0, x >= 0.
// Series expansion for x < a+1, continued fraction otherwise.
double gamma_p(double a, double x);

// Chi-square CDF with k degrees of freedom: P(k/2, y/2).
double chi_square_cdf(double y, double k);

}  // namespace dte::special

#endif

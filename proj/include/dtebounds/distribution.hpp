#ifndef DTEBOUNDS_DISTRIBUTION_HPP_
#define DTEBOUNDS_DISTRIBUTION_HPP_

#include <Eigen/Dense>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace dte {

using Eigen::VectorXd;

// One-dimensional distribution function used as a fixed marginal of the
// bound computations. Values are immutable after construction; all member
// functions are const and safe to call concurrently.
class MarginalDistribution {
 public:
  enum class Kind { Normal, ChiSquare, Chi2NormalConvolution, NormalMixture, Uniform, StepCdf };

  static MarginalDistribution normal(double mu, double sigma2);
  static MarginalDistribution chi_square(int k);
  // F(y) = Pr(B + E <= y) with B ~ chi^2(k1), E ~ N(0,k2) independent.
  // Evaluated by adaptive quadrature over the +-8*sqrt(k2) window and cached
  // on a dense grid at construction.
  static MarginalDistribution chi2_normal_convolution(int k1, double k2);
  static MarginalDistribution normal_mixture(VectorXd weights, VectorXd means,
                                             VectorXd variances);
  static MarginalDistribution uniform(double a, double b);
  // Right-continuous step function: F(y) = values[i] for points[i] <= y < points[i+1],
  // 0 below the first breakpoint.
  static MarginalDistribution step_cdf(VectorXd points, VectorXd values);

  Kind kind() const { return kind_; }
  bool is_step() const { return kind_ == Kind::StepCdf; }

  // F(y); clamps to {0,1} outside the effective support.
  double cdf(double y) const;

  // inf{y : F(y) >= q} for q in (0,1). Analytic where available, otherwise
  // bracketed bisection on the CDF.
  double quantile(double q) const;

  // Effective support and a characteristic length scale (used for scan grids).
  double support_lo() const { return support_lo_; }
  double support_hi() const { return support_hi_; }
  double scale() const { return scale_; }

  // Step-kind accessors (throw for other kinds).
  const VectorXd& step_points() const;
  const VectorXd& step_values() const;

  // NormalMixture parameter accessors (throw for other kinds).
  const VectorXd& mixture_weights() const;
  const VectorXd& mixture_means() const;
  VectorXd mixture_variances() const;

  // Mixture parameters; valid for Normal (one component), Uniform and
  // NormalMixture kinds. Used internally for analytic CDF slopes.
  bool has_cdf_derivative() const;
  double cdf_derivative(double y) const;

  std::string describe() const;

 private:
  MarginalDistribution() = default;

  Kind kind_ = Kind::Normal;
  double support_lo_ = 0, support_hi_ = 0, scale_ = 1;
  // Normal / Uniform parameters.
  double p0_ = 0, p1_ = 1;
  // ChiSquare / convolution.
  int k1_ = 1;
  double k2_ = 0;
  // Mixture.
  VectorXd weights_, means_, sigmas_;
  // Step CDF.
  VectorXd points_, values_;
  // Cached convolution table on [table_lo_, table_hi_], uniform spacing.
  std::shared_ptr<const VectorXd> table_;
  double table_lo_ = 0, table_step_ = 0;

  double raw_cdf(double y) const;
};

// Thrown when a requested mixture fit cannot reach the acceptance threshold.
class FitError : public std::runtime_error {
 public:
  explicit FitError(const std::string& what) : std::runtime_error(what) {}
};

struct MixtureFit {
  MarginalDistribution mixture;
  double sup_distance = 0;
  int order = 0;
};

// Least-squares normal-mixture approximation of `target` on `eval_grid`,
// accepted at the smallest order whose sup-distance on the grid is below
// `ks_threshold`. Throws FitError when no order <= max_components passes.
MixtureFit fit_normal_mixture(const MarginalDistribution& target, const VectorXd& eval_grid,
                              int max_components, double ks_threshold);

// Sorts values in nondecreasing order (monotone rearrangement of estimated
// quantile curves). Throws on empty input.
std::vector<double> rearrange_monotone(const std::vector<double>& values);

// Inverts a monotonized quantile curve into a right-continuous step CDF.
// Duplicate quantile values keep the largest q.
MarginalDistribution step_cdf_from_quantiles(const VectorXd& q_grid,
                                             const VectorXd& monotone_quantiles);

}  // namespace dte

#endif

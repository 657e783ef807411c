#include "dtebounds/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dtebounds/parallel.hpp"
#include "dtebounds/quadrature.hpp"
#include "dtebounds/special.hpp"

namespace dte {

namespace {

constexpr double kTailSigmas = 8.0;
constexpr int kConvolutionTableSize = 1 << 16;

double chi_square_tail_quantile(int k, double q) {
  // Upper quantile by bisection; cheap enough for construction-time use.
  double lo = 0.0, hi = k + 10.0;
  while (special::chi_square_cdf(hi, k) < q) hi *= 2.0;
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    (special::chi_square_cdf(mid, k) < q ? lo : hi) = mid;
    if (hi - lo < 1e-12 * (1.0 + hi)) break;
  }
  return hi;
}

}  // namespace

MarginalDistribution MarginalDistribution::normal(double mu, double sigma2) {
  if (!(sigma2 > 0)) throw std::domain_error("normal: sigma2 must be positive");
  MarginalDistribution d;
  d.kind_ = Kind::Normal;
  d.p0_ = mu;
  d.p1_ = std::sqrt(sigma2);
  d.scale_ = d.p1_;
  d.support_lo_ = mu - kTailSigmas * d.p1_;
  d.support_hi_ = mu + kTailSigmas * d.p1_;
  return d;
}

MarginalDistribution MarginalDistribution::chi_square(int k) {
  if (k < 1) throw std::domain_error("chi_square: k must be >= 1");
  MarginalDistribution d;
  d.kind_ = Kind::ChiSquare;
  d.k1_ = k;
  d.scale_ = std::sqrt(2.0 * k);
  d.support_lo_ = 0.0;
  d.support_hi_ = chi_square_tail_quantile(k, 1.0 - 1e-13);
  return d;
}

MarginalDistribution MarginalDistribution::chi2_normal_convolution(int k1, double k2) {
  if (k1 < 1) throw std::domain_error("chi2_normal_convolution: k1 must be >= 1");
  if (!(k2 > 0)) throw std::domain_error("chi2_normal_convolution: k2 must be positive");
  MarginalDistribution d;
  d.kind_ = Kind::Chi2NormalConvolution;
  d.k1_ = k1;
  d.k2_ = k2;
  const double s = std::sqrt(k2);
  const double chi_hi = chi_square_tail_quantile(k1, 1.0 - 1e-13);
  d.support_lo_ = -kTailSigmas * s;
  d.support_hi_ = chi_hi + kTailSigmas * s;
  d.scale_ = std::sqrt(2.0 * k1 + k2);

  // F(y) = int G(y-x;k1) dPhi(x/sqrt(k2)) over x in [-8s, min(y, 8s)];
  // the integrand vanishes for x > y.
  auto eval = [k1, s](double y) {
    const double a = -kTailSigmas * s;
    const double b = std::min(y, kTailSigmas * s);
    if (b <= a) return 0.0;
    auto f = [k1, s, y](double x) {
      return special::chi_square_cdf(y - x, k1) * special::normal_pdf(x / s) / s;
    };
    return integrate(f, a, b, 1e-12);
  };

  auto table = std::make_shared<VectorXd>(kConvolutionTableSize);
  d.table_lo_ = d.support_lo_;
  d.table_step_ = (d.support_hi_ - d.support_lo_) / (kConvolutionTableSize - 1);
  {
    VectorXd& t = *table;
    const double lo = d.table_lo_, step = d.table_step_;
    parallel_for(kConvolutionTableSize, [&](int i) { t[i] = eval(lo + step * i); });
    // Wash out quadrature wobble at the 1e-12 level; the CDF must be monotone.
    for (int i = 1; i < kConvolutionTableSize; ++i) t[i] = std::max(t[i], t[i - 1]);
    for (int i = 0; i < kConvolutionTableSize; ++i) t[i] = std::min(std::max(t[i], 0.0), 1.0);
  }
  d.table_ = std::move(table);
  return d;
}

MarginalDistribution MarginalDistribution::normal_mixture(VectorXd weights, VectorXd means,
                                                          VectorXd variances) {
  const auto n = weights.size();
  if (n == 0 || means.size() != n || variances.size() != n)
    throw std::invalid_argument("normal_mixture: component arrays must have equal nonzero size");
  if ((weights.array() < -1e-15).any())
    throw std::domain_error("normal_mixture: weights must be nonnegative");
  if (std::fabs(weights.sum() - 1.0) > 1e-12)
    throw std::domain_error("normal_mixture: weights must sum to 1");
  if ((variances.array() <= 0).any())
    throw std::domain_error("normal_mixture: variances must be positive");
  MarginalDistribution d;
  d.kind_ = Kind::NormalMixture;
  d.weights_ = std::move(weights);
  d.means_ = std::move(means);
  d.sigmas_ = variances.array().sqrt();
  d.support_lo_ = (d.means_.array() - kTailSigmas * d.sigmas_.array()).minCoeff();
  d.support_hi_ = (d.means_.array() + kTailSigmas * d.sigmas_.array()).maxCoeff();
  const double mean = d.weights_.dot(d.means_);
  const double second = (d.weights_.array() *
                         (d.sigmas_.array().square() + d.means_.array().square()))
                            .sum();
  d.scale_ = std::sqrt(std::max(second - mean * mean, 1e-30));
  return d;
}

MarginalDistribution MarginalDistribution::uniform(double a, double b) {
  if (!(a < b)) throw std::domain_error("uniform: need a < b");
  MarginalDistribution d;
  d.kind_ = Kind::Uniform;
  d.p0_ = a;
  d.p1_ = b;
  d.support_lo_ = a;
  d.support_hi_ = b;
  d.scale_ = b - a;
  return d;
}

MarginalDistribution MarginalDistribution::step_cdf(VectorXd points, VectorXd values) {
  const auto n = points.size();
  if (n == 0 || values.size() != n)
    throw std::invalid_argument("step_cdf: points/values must have equal nonzero size");
  for (Eigen::Index i = 1; i < n; ++i)
    if (!(points[i] > points[i - 1]))
      throw std::invalid_argument("step_cdf: breakpoints must be strictly increasing");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (values[i] < -1e-12 || values[i] > 1.0 + 1e-12)
      throw std::invalid_argument("step_cdf: values must lie in [0,1]");
    if (i > 0 && values[i] < values[i - 1] - 1e-12)
      throw std::invalid_argument("step_cdf: values must be nondecreasing");
  }
  MarginalDistribution d;
  d.kind_ = Kind::StepCdf;
  d.points_ = std::move(points);
  d.values_ = std::move(values);
  d.values_ = d.values_.cwiseMax(0.0).cwiseMin(1.0);
  for (Eigen::Index i = 1; i < n; ++i) d.values_[i] = std::max(d.values_[i], d.values_[i - 1]);
  d.support_lo_ = d.points_[0];
  d.support_hi_ = d.points_[n - 1];
  d.scale_ = n > 1 ? d.support_hi_ - d.support_lo_ : std::max(1.0, std::fabs(d.points_[0]));
  if (d.scale_ <= 0) d.scale_ = 1.0;
  return d;
}

double MarginalDistribution::raw_cdf(double y) const {
  switch (kind_) {
    case Kind::Normal:
      return special::normal_cdf((y - p0_) / p1_);
    case Kind::ChiSquare:
      return special::chi_square_cdf(y, k1_);
    case Kind::Chi2NormalConvolution: {
      const VectorXd& t = *table_;
      if (y <= table_lo_) return 0.0;
      const double pos = (y - table_lo_) / table_step_;
      const auto i = static_cast<Eigen::Index>(pos);
      if (i >= t.size() - 1) return 1.0;
      const double frac = pos - static_cast<double>(i);
      return t[i] + frac * (t[i + 1] - t[i]);
    }
    case Kind::NormalMixture: {
      double acc = 0.0;
      for (Eigen::Index i = 0; i < weights_.size(); ++i)
        acc += weights_[i] * special::normal_cdf((y - means_[i]) / sigmas_[i]);
      return acc;
    }
    case Kind::Uniform:
      return (y - p0_) / (p1_ - p0_);
    case Kind::StepCdf: {
      // Last breakpoint <= y (right-continuous).
      const double* begin = points_.data();
      const double* end = begin + points_.size();
      const double* it = std::upper_bound(begin, end, y);
      if (it == begin) return 0.0;
      return values_[static_cast<Eigen::Index>(it - begin) - 1];
    }
  }
  return 0.0;
}

double MarginalDistribution::cdf(double y) const {
  if (!std::isfinite(y)) throw std::domain_error("cdf: y must be finite");
  if (kind_ == Kind::StepCdf) return raw_cdf(y);
  if (y <= support_lo_) return 0.0;
  if (y >= support_hi_) return 1.0;
  return std::min(std::max(raw_cdf(y), 0.0), 1.0);
}

double MarginalDistribution::quantile(double q) const {
  if (!(q > 0.0 && q < 1.0)) throw std::domain_error("quantile: q must be in (0,1)");
  switch (kind_) {
    case Kind::Normal:
      return p0_ + p1_ * special::normal_quantile(q);
    case Kind::Uniform:
      return p0_ + (p1_ - p0_) * q;
    case Kind::StepCdf: {
      // inf{y : F(y) >= q}: first breakpoint whose value reaches q.
      for (Eigen::Index i = 0; i < values_.size(); ++i)
        if (values_[i] >= q) return points_[i];
      return points_[points_.size() - 1];
    }
    default: {
      double lo = support_lo_, hi = support_hi_;
      // Bisection on a monotone CDF converges unconditionally.
      for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        (cdf(mid) < q ? lo : hi) = mid;
        if (hi - lo < 1e-13 * (1.0 + std::fabs(hi))) break;
      }
      return 0.5 * (lo + hi);
    }
  }
}

const VectorXd& MarginalDistribution::step_points() const {
  if (kind_ != Kind::StepCdf) throw std::logic_error("step_points: not a step CDF");
  return points_;
}

const VectorXd& MarginalDistribution::step_values() const {
  if (kind_ != Kind::StepCdf) throw std::logic_error("step_values: not a step CDF");
  return values_;
}

const VectorXd& MarginalDistribution::mixture_weights() const {
  if (kind_ != Kind::NormalMixture) throw std::logic_error("mixture_weights: not a mixture");
  return weights_;
}

const VectorXd& MarginalDistribution::mixture_means() const {
  if (kind_ != Kind::NormalMixture) throw std::logic_error("mixture_means: not a mixture");
  return means_;
}

VectorXd MarginalDistribution::mixture_variances() const {
  if (kind_ != Kind::NormalMixture) throw std::logic_error("mixture_variances: not a mixture");
  return sigmas_.array().square();
}

bool MarginalDistribution::has_cdf_derivative() const { return kind_ != Kind::StepCdf; }

double MarginalDistribution::cdf_derivative(double y) const {
  switch (kind_) {
    case Kind::Normal:
      return special::normal_pdf((y - p0_) / p1_) / p1_;
    case Kind::Uniform:
      return (y >= p0_ && y <= p1_) ? 1.0 / (p1_ - p0_) : 0.0;
    case Kind::NormalMixture: {
      double acc = 0.0;
      for (Eigen::Index i = 0; i < weights_.size(); ++i)
        acc += weights_[i] * special::normal_pdf((y - means_[i]) / sigmas_[i]) / sigmas_[i];
      return acc;
    }
    case Kind::ChiSquare: {
      if (y <= 0.0) return 0.0;
      const double a = 0.5 * k1_;
      return std::exp((a - 1.0) * std::log(y) - 0.5 * y - a * std::log(2.0) - std::lgamma(a));
    }
    case Kind::Chi2NormalConvolution: {
      // Slope of the interpolant, consistent with cdf().
      if (y <= table_lo_ || y >= support_hi_) return 0.0;
      const VectorXd& t = *table_;
      const auto i = std::min<Eigen::Index>(static_cast<Eigen::Index>((y - table_lo_) / table_step_),
                                            t.size() - 2);
      return (t[i + 1] - t[i]) / table_step_;
    }
    case Kind::StepCdf:
      throw std::logic_error("cdf_derivative: step CDF has no density");
  }
  return 0.0;
}

std::string MarginalDistribution::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case Kind::Normal:
      os << "normal(mu=" << p0_ << ", sigma2=" << p1_ * p1_ << ")";
      break;
    case Kind::ChiSquare:
      os << "chi_square(k=" << k1_ << ")";
      break;
    case Kind::Chi2NormalConvolution:
      os << "chi2_normal_convolution(k1=" << k1_ << ", k2=" << k2_ << ")";
      break;
    case Kind::NormalMixture:
      os << "normal_mixture(" << weights_.size() << " components)";
      break;
    case Kind::Uniform:
      os << "uniform(" << p0_ << ", " << p1_ << ")";
      break;
    case Kind::StepCdf:
      os << "step_cdf(" << points_.size() << " points)";
      break;
  }
  return os.str();
}

std::vector<double> rearrange_monotone(const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("rearrange_monotone: empty input");
  std::vector<double> out = values;
  std::sort(out.begin(), out.end());
  return out;
}

MarginalDistribution step_cdf_from_quantiles(const VectorXd& q_grid,
                                             const VectorXd& monotone_quantiles) {
  const auto n = q_grid.size();
  if (n == 0 || monotone_quantiles.size() != n)
    throw std::invalid_argument("step_cdf_from_quantiles: shape mismatch");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(q_grid[i] > 0.0 && q_grid[i] < 1.0))
      throw std::domain_error("step_cdf_from_quantiles: q_grid must lie in (0,1)");
    if (i > 0 && !(q_grid[i] > q_grid[i - 1]))
      throw std::invalid_argument("step_cdf_from_quantiles: q_grid must be strictly increasing");
    if (i > 0 && monotone_quantiles[i] < monotone_quantiles[i - 1])
      throw std::invalid_argument(
          "step_cdf_from_quantiles: quantiles not monotone; rearrange first");
  }
  // Ties keep the largest q.
  std::vector<double> pts, vals;
  pts.reserve(n);
  vals.reserve(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!pts.empty() && monotone_quantiles[i] == pts.back()) {
      vals.back() = q_grid[i];
    } else {
      pts.push_back(monotone_quantiles[i]);
      vals.push_back(q_grid[i]);
    }
  }
  return MarginalDistribution::step_cdf(
      Eigen::Map<VectorXd>(pts.data(), static_cast<Eigen::Index>(pts.size())),
      Eigen::Map<VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size())));
}

namespace {

// Mixture CDF residuals on a grid, parameterized without constraints:
// weights by softmax (last logit pinned at 0), variances by log.
struct MixtureParams {
  VectorXd logits;     // size m-1
  VectorXd means;      // size m
  VectorXd log_vars;   // size m

  int order() const { return static_cast<int>(means.size()); }

  VectorXd weights() const {
    const int m = order();
    VectorXd e(m);
    double mx = 0.0;
    for (int i = 0; i < m - 1; ++i) mx = std::max(mx, logits[i]);
    double sum = 0.0;
    for (int i = 0; i < m; ++i) {
      e[i] = std::exp((i < m - 1 ? logits[i] : 0.0) - mx);
      sum += e[i];
    }
    return e / sum;
  }

  static MixtureParams from_vector(const VectorXd& x, int m) {
    MixtureParams p;
    p.logits = x.head(m - 1);
    p.means = x.segment(m - 1, m);
    p.log_vars = x.tail(m);
    return p;
  }

  VectorXd to_vector() const {
    const int m = order();
    VectorXd x(3 * m - 1);
    x.head(m - 1) = logits;
    x.segment(m - 1, m) = means;
    x.tail(m) = log_vars;
    return x;
  }
};

double mixture_cdf_at(const MixtureParams& p, const VectorXd& w, double y) {
  double acc = 0.0;
  for (int i = 0; i < p.order(); ++i) {
    double s = std::exp(0.5 * p.log_vars[i]);
    acc += w[i] * special::normal_cdf((y - p.means[i]) / s);
  }
  return acc;
}

// Levenberg-Marquardt on the CDF residuals with an analytic Jacobian.
MixtureParams lm_fit(const VectorXd& grid, const VectorXd& target, MixtureParams p) {
  const int m = p.order();
  const auto n = grid.size();
  const int dim = 3 * m - 1;
  double lambda = 1e-3;
  VectorXd x = p.to_vector();

  auto residuals = [&](const VectorXd& xv, VectorXd& r) {
    MixtureParams q = MixtureParams::from_vector(xv, m);
    VectorXd w = q.weights();
    for (Eigen::Index j = 0; j < n; ++j) r[j] = mixture_cdf_at(q, w, grid[j]) - target[j];
  };

  VectorXd r(n), r_new(n);
  residuals(x, r);
  double cost = r.squaredNorm();
  Eigen::MatrixXd jac(n, dim);

  for (int iter = 0; iter < 400; ++iter) {
    MixtureParams q = MixtureParams::from_vector(x, m);
    VectorXd w = q.weights();
    VectorXd comp(m), sig(m);
    for (int i = 0; i < m; ++i) sig[i] = std::exp(0.5 * q.log_vars[i]);
    for (Eigen::Index j = 0; j < n; ++j) {
      double fj = 0.0;
      for (int i = 0; i < m; ++i) {
        double z = (grid[j] - q.means[i]) / sig[i];
        comp[i] = special::normal_cdf(z);
        fj += w[i] * comp[i];
        double phi = special::normal_pdf(z);
        jac(j, (m - 1) + i) = -w[i] * phi / sig[i];      // d/d mean
        jac(j, (2 * m - 1) + i) = -0.5 * w[i] * phi * z; // d/d log_var
      }
      for (int i = 0; i < m - 1; ++i) jac(j, i) = w[i] * (comp[i] - fj);  // d/d logit
    }
    Eigen::MatrixXd jtj = jac.transpose() * jac;
    VectorXd g = jac.transpose() * r;
    bool stepped = false;
    for (int tries = 0; tries < 12; ++tries) {
      Eigen::MatrixXd a = jtj;
      a.diagonal().array() += lambda;
      VectorXd step = a.ldlt().solve(-g);
      VectorXd x_new = x + step;
      residuals(x_new, r_new);
      double cost_new = r_new.squaredNorm();
      if (cost_new < cost) {
        x = x_new;
        r = r_new;
        double drop = cost - cost_new;
        cost = cost_new;
        lambda = std::max(lambda * 0.3, 1e-12);
        stepped = true;
        if (drop < 1e-16 * (1.0 + cost)) iter = 400;
        break;
      }
      lambda *= 6.0;
    }
    if (!stepped) break;
  }
  return MixtureParams::from_vector(x, m);
}

}  // namespace

MixtureFit fit_normal_mixture(const MarginalDistribution& target, const VectorXd& eval_grid,
                              int max_components, double ks_threshold) {
  if (eval_grid.size() < 50)
    throw std::invalid_argument("fit_normal_mixture: eval_grid needs >= 50 points");
  if (max_components < 1)
    throw std::invalid_argument("fit_normal_mixture: max_components must be >= 1");
  VectorXd grid = eval_grid;
  std::sort(grid.data(), grid.data() + grid.size());
  VectorXd tgt(grid.size());
  for (Eigen::Index i = 0; i < grid.size(); ++i) tgt[i] = target.cdf(grid[i]);

  double best_sup = std::numeric_limits<double>::infinity();
  for (int m = 1; m <= max_components; ++m) {
    // Deterministic initialization: means at target quantiles, spread scales.
    MixtureParams init;
    init.logits = VectorXd::Zero(m - 1);
    init.means.resize(m);
    init.log_vars.resize(m);
    for (int i = 0; i < m; ++i) {
      double q = (i + 0.5) / m;
      init.means[i] = target.quantile(q);
    }
    double s0 = std::max(target.scale() / (m + 1), 1e-6);
    for (int i = 0; i < m; ++i) init.log_vars[i] = 2.0 * std::log(s0);

    MixtureParams fitted = lm_fit(grid, tgt, init);
    VectorXd w = fitted.weights();
    double sup = 0.0;
    for (Eigen::Index j = 0; j < grid.size(); ++j)
      sup = std::max(sup, std::fabs(mixture_cdf_at(fitted, w, grid[j]) - tgt[j]));
    best_sup = std::min(best_sup, sup);
    if (sup < ks_threshold) {
      VectorXd vars = fitted.log_vars.array().exp();
      MixtureFit out{MarginalDistribution::normal_mixture(w, fitted.means, vars), sup, m};
      return out;
    }
  }
  std::ostringstream os;
  os << "fit_normal_mixture: no order <= " << max_components << " reaches sup-distance "
     << ks_threshold << " (best " << best_sup << ")";
  throw FitError(os.str());
}

}  // namespace dte

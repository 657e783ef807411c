#include "dtebounds/estimation.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "dtebounds/parallel.hpp"

namespace dte {

void SampleData::validate() const {
  if (y.size() == 0) throw std::invalid_argument("SampleData: empty sample");
  if (d.size() != y.size()) throw std::invalid_argument("SampleData: y/d size mismatch");
  for (Eigen::Index i = 0; i < d.size(); ++i)
    if (d[i] != 0 && d[i] != 1) throw std::invalid_argument("SampleData: d must be 0 or 1");
  if (weights.size() != 0) {
    if (weights.size() != y.size())
      throw std::invalid_argument("SampleData: weights size mismatch");
    if ((weights.array() < 0).any())
      throw std::invalid_argument("SampleData: weights must be nonnegative");
    if (!(weights.sum() > 0)) throw std::invalid_argument("SampleData: weights sum to zero");
  }
}

namespace {

MarginalDistribution arm_cdf(const SampleData& data, int arm) {
  std::vector<std::pair<double, double>> yw;  // (y, weight)
  for (Eigen::Index i = 0; i < data.y.size(); ++i) {
    if (data.d[i] != arm) continue;
    double w = data.weights.size() ? data.weights[i] : 1.0;
    if (w > 0) yw.push_back({data.y[i], w});
  }
  if (yw.empty()) throw std::invalid_argument("empirical_marginals: empty treatment arm");
  std::sort(yw.begin(), yw.end());
  double total = 0;
  for (auto& [y, w] : yw) total += w;
  std::vector<double> pts, vals;
  double acc = 0;
  for (auto& [y, w] : yw) {
    acc += w;
    if (!pts.empty() && pts.back() == y)
      vals.back() = acc / total;
    else {
      pts.push_back(y);
      vals.push_back(acc / total);
    }
  }
  vals.back() = 1.0;  // guard against weight-sum rounding
  return MarginalDistribution::step_cdf(
      Eigen::Map<VectorXd>(pts.data(), static_cast<Eigen::Index>(pts.size())),
      Eigen::Map<VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size())));
}

}  // namespace

std::pair<MarginalDistribution, MarginalDistribution> empirical_marginals(
    const SampleData& data) {
  data.validate();
  return {arm_cdf(data, 0), arm_cdf(data, 1)};
}

BoundsCurve plugin_bounds(const MarginalDistribution& f0_hat, const MarginalDistribution& f1_hat,
                          const RestrictionSpec& restriction, const VectorXd& delta_grid,
                          const MtrOptions& opts) {
  if (restriction.kind != RestrictionSpec::Kind::None &&
      restriction.kind != RestrictionSpec::Kind::Mtr)
    throw std::invalid_argument(
        "plugin_bounds: only None and Mtr apply to unconditional marginals");
  const auto n = delta_grid.size();
  BoundsCurve out;
  out.deltas = delta_grid;
  out.lower.resize(n);
  out.upper.resize(n);
  out.witnesses.resize(n);
  out.method = restriction.kind == RestrictionSpec::Kind::Mtr ? "mtr" : "makarov";

  parallel_for(static_cast<int>(n), [&](int i) {
    double delta = delta_grid[i];
    if (restriction.kind == RestrictionSpec::Kind::Mtr) {
      MtrResult r = mtr_lower(f0_hat, f1_hat, delta, opts);
      out.lower[i] = r.value;
      out.upper[i] = mtr_upper(f0_hat, f1_hat, delta);
      out.witnesses[i].lower_seq = r.seq.base_points;
    } else {
      SupResult lo = makarov_lower(f0_hat, f1_hat, delta);
      SupResult hi = makarov_upper(f0_hat, f1_hat, delta);
      out.lower[i] = lo.value;
      out.upper[i] = hi.value;
      out.witnesses[i].lower_arg = lo.arg;
      out.witnesses[i].upper_arg = hi.arg;
    }
  });
  out.enforce_monotone();
  return out;
}

double subsample_bias_adjust(double full_estimate, std::span<const double> subsample_estimates) {
  if (subsample_estimates.empty())
    throw std::invalid_argument("subsample_bias_adjust: empty subsample list");
  double mean = std::accumulate(subsample_estimates.begin(), subsample_estimates.end(), 0.0) /
                static_cast<double>(subsample_estimates.size());
  return 2.0 * full_estimate - mean;
}

std::vector<std::vector<int>> draw_subsamples(int n, const SubsampleConfig& cfg) {
  if (cfg.b < 1 || cfg.b >= n)
    throw std::invalid_argument("draw_subsamples: need 1 <= b < n");
  if (cfg.q < 1) throw std::invalid_argument("draw_subsamples: need q >= 1");
  std::vector<std::vector<int>> out(cfg.q);
  std::vector<int> indices(n);
  for (int j = 0; j < cfg.q; ++j) {
    std::seed_seq seq{static_cast<std::uint64_t>(cfg.seed), static_cast<std::uint64_t>(j)};
    std::mt19937_64 rng(seq);
    std::iota(indices.begin(), indices.end(), 0);
    // Partial Fisher-Yates: the first b entries are a uniform b-subset.
    for (int i = 0; i < cfg.b; ++i) {
      std::uniform_int_distribution<int> pick(i, n - 1);
      std::swap(indices[i], indices[pick(rng)]);
    }
    out[j].assign(indices.begin(), indices.begin() + cfg.b);
  }
  return out;
}

}  // namespace dte

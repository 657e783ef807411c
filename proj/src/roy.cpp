#include "dtebounds/roy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dtebounds/ladder.hpp"

namespace dte {

namespace {

ladder::Options to_ladder(const MtrOptions& o) {
  return {o.epsilon_K, o.smoothing_h, o.multistarts, o.rng_seed, o.y_grid, o.refine_max_window};
}

std::vector<double> side_jump_anchors(const ladder::Problem& p) {
  std::vector<double> out;
  auto add = [&out](const ladder::Side& s, bool from_below) {
    if (!s.is_step()) return;
    const auto& pts = s.dist->step_points();
    const auto n = pts.size();
    const Eigen::Index stride = std::max<Eigen::Index>(1, n / 2048);
    for (Eigen::Index i = 0; i < n; i += stride) {
      double x = (pts[i] - s.b) / s.a;
      for (int b = 0; b < 2; ++b)
        x = from_below ? std::nextafter(x, -std::numeric_limits<double>::infinity())
                       : std::nextafter(x, std::numeric_limits<double>::infinity());
      out.push_back(x);
    }
  };
  add(p.hi, false);
  add(p.lo, true);
  return out;
}

}  // namespace

const MarginalDistribution& RoyPoint::get(int d1, int d2) const {
  if (d1 < 0 || d1 > 1 || d2 < 0 || d2 > 1 || !marginal[d1][d2])
    throw std::invalid_argument("RoyPoint: missing conditional marginal");
  return *marginal[d1][d2];
}

const RoyPoint& RoyContext::at_z(double z) const {
  for (const auto& pt : points)
    if (pt.z == z) return pt;
  throw std::invalid_argument("RoyContext: unknown instrument value z");
}

void RoyContext::validate() const {
  if (points.empty()) throw std::invalid_argument("RoyContext: empty instrument support");
  for (const auto& pt : points) {
    if (!(pt.p >= 0.0 && pt.p <= 1.0))
      throw std::domain_error("RoyContext: propensity must lie in [0,1]");
    for (int d1 = 0; d1 < 2; ++d1)
      for (int d2 = 0; d2 < 2; ++d2)
        if (!pt.marginal[d1][d2])
          throw std::invalid_argument("RoyContext: missing conditional marginal");
  }
}

std::pair<double, double> roy_conditional_bounds(const RoyContext& ctx, int d, double z,
                                                 double delta, const MtrOptions& opts) {
  const RoyPoint& pt = ctx.at_z(z);
  const double m = pt.m_c;
  if (d == 1) {
    if (delta < m) return {0.0, 0.0};
    const MarginalDistribution& f0 = pt.get(0, 1);
    const MarginalDistribution& f1 = pt.get(1, 1);
    double upper = makarov_upper(f0, f1, delta).value;
    if (delta - m <= 1e-12 * (1.0 + std::fabs(m))) return {0.0, upper};
    // Shifted triangle sum: terms F1(a_{k+1} + m | 1,z) - F0(a_k | 1,z) with
    // steps capped at delta - m.
    ladder::Problem p;
    p.hi = {&f1, 1.0, m};
    p.lo = {&f0, 1.0, 0.0};
    p.geom = {1.0, delta - m};
    ladder::Solution sol = ladder::solve(p, to_ladder(opts), side_jump_anchors(p));
    return {std::min(std::max(sol.value, 0.0), 1.0), upper};
  }
  if (d != 0) throw std::invalid_argument("roy_conditional_bounds: d must be 0 or 1");
  if (delta >= m) return {1.0, 1.0};
  const MarginalDistribution& f0 = pt.get(0, 0);
  const MarginalDistribution& f1 = pt.get(1, 0);
  double lower = makarov_lower(f0, f1, delta).value;
  // Upper: 1 + inf over decreasing {b_k} with b_k + delta - m <= b_{k+1} <= b_k
  // of sum min(F1(b_{k+1} + m | 0,z) - F0(b_k | 0,z), 0).
  ladder::Problem p;
  p.hi = {&f0, 1.0, 0.0};
  p.lo = {&f1, 1.0, m};
  p.geom = {1.0, m - delta};
  ladder::Solution sol = ladder::solve(p, to_ladder(opts), side_jump_anchors(p));
  double upper = 1.0 - sol.value;
  // The plain Makarov upper bound stays valid; keep the tighter one.
  upper = std::min(upper, makarov_upper(f0, f1, delta).value);
  return {lower, std::min(std::max(upper, 0.0), 1.0)};
}

RoyBounds roy_bounds(const RoyContext& ctx, double delta, const MtrOptions& opts) {
  ctx.validate();
  RoyBounds out;
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
  for (const auto& pt : ctx.points) {
    auto [l1, u1] = roy_conditional_bounds(ctx, 1, pt.z, delta, opts);
    auto [l0, u0] = roy_conditional_bounds(ctx, 0, pt.z, delta, opts);
    lower = std::max(lower, l1 * pt.p + l0 * (1.0 - pt.p));
    upper = std::min(upper, u1 * pt.p + u0 * (1.0 - pt.p));
  }
  out.crossed = lower > upper + 1e-9;
  out.lower = std::min(std::max(lower, 0.0), 1.0);
  out.upper = std::min(std::max(upper, 0.0), 1.0);
  return out;
}

}  // namespace dte

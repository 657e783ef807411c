#include "dtebounds/shape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dtebounds/ladder.hpp"
#include "dtebounds/quadrature.hpp"

namespace dte {

void ShapeContext::validate() const {
  if (!(t_w < t0 && t0 < t1))
    throw std::domain_error("ShapeContext: need t_w < t0 < t1");
}

void WMixture::validate() const {
  if (atoms.size() == 0 || atoms.size() != weights.size())
    throw std::invalid_argument("WMixture: atoms/weights must have equal nonzero size");
  if ((weights.array() < -1e-15).any())
    throw std::domain_error("WMixture: weights must be nonnegative");
  if (std::fabs(weights.sum() - 1.0) > 1e-12)
    throw std::domain_error("WMixture: weights must sum to 1");
}

namespace {

void check_support(const MarginalDistribution& f0w, const ShapeContext& ctx) {
  double probe = ctx.w - 1e-9 * (1.0 + std::fabs(ctx.w));
  if (f0w.cdf(probe) > 1e-6)
    throw std::domain_error("shape bounds: F0(.|w) has mass below w");
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

ladder::Options to_ladder(const MtrOptions& o) {
  return {o.epsilon_K, o.smoothing_h, o.multistarts, o.rng_seed, o.y_grid, o.refine_max_window};
}

VectorXd to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

ShapeBounds concave_bounds(const MarginalDistribution& f0w, const MarginalDistribution& f1w,
                           double delta, const ShapeContext& ctx, const MtrOptions& opts) {
  ctx.validate();
  check_support(f0w, ctx);
  ShapeBounds out;
  if (delta < 0) return out;

  // Lower bound: identical machinery to the MTR lower bound.
  MtrResult lower = mtr_lower(f0w, f1w, delta, opts);
  out.lower = lower.value;
  out.lower_seq = lower.seq;

  if (delta == 0) {
    out.upper = makarov_upper(f0w, f1w, 0.0).value;
    return out;
  }

  // Upper bound: 1 - sup over decreasing {b_k} with
  //   T0(b_k + delta) + T1 w <= b_{k+1} <= b_k
  // of sum max(F0(b_k) - F1(S1 b_{k+1} + (1-S1) w), 0), solved in increasing
  // index order with the inverted step map.
  const double T0 = ctx.T0(), T1v = ctx.T1(), S1 = ctx.S1();
  ladder::Problem p;
  p.hi = {&f0w, 1.0, 0.0};
  p.lo = {&f1w, S1, (1.0 - S1) * ctx.w};
  p.geom = {1.0 / T0, -T1v * ctx.w / T0 - delta};
  ladder::Solution sol = ladder::solve(p, to_ladder(opts), side_jump_anchors(p));
  double upper = 1.0 - sol.value;
  // The Makarov upper bound stays valid under concavity; keep the tighter one.
  out.upper = std::min(upper, makarov_upper(f0w, f1w, delta).value);
  out.upper = std::min(std::max(out.upper, 0.0), 1.0);
  out.upper_seq = to_eigen(sol.rungs);
  return out;
}

ShapeBounds convex_bounds(const MarginalDistribution& f0w, const MarginalDistribution& f1w,
                          double delta, const ShapeContext& ctx, const MtrOptions& opts) {
  ctx.validate();
  check_support(f0w, ctx);
  ShapeBounds out;
  if (delta < 0) return out;

  // Upper bound: the Makarov form survives under convexity.
  out.upper = makarov_upper(f0w, f1w, delta).value;

  if (delta == 0) {
    out.lower = makarov_lower(f0w, f1w, 0.0).value;
    return out;
  }

  // Lower bound: sup over increasing {a_k} with
  //   a_k <= a_{k+1} <= T0(a_k + delta) + T1 w
  // of sum max(F1(S1 a_{k+1} + (1-S1) w) - F0(a_k), 0).
  const double T0 = ctx.T0(), T1v = ctx.T1(), S1 = ctx.S1();
  ladder::Problem p;
  p.hi = {&f1w, S1, (1.0 - S1) * ctx.w};
  p.lo = {&f0w, 1.0, 0.0};
  p.geom = {T0, T0 * delta + T1v * ctx.w};
  ladder::Solution sol = ladder::solve(p, to_ladder(opts), side_jump_anchors(p));
  // The plain MTR lower bound stays valid on the smaller support.
  MtrResult mtr = mtr_lower(f0w, f1w, delta, opts);
  if (sol.value >= mtr.value) {
    out.lower = std::min(sol.value, 1.0);
    out.lower_seq.delta = delta;
    out.lower_seq.base_points = to_eigen(sol.rungs);
    out.lower_seq.window = static_cast<int>(sol.rungs.size() - 1) / 2;
  } else {
    out.lower = mtr.value;
    out.lower_seq = mtr.seq;
  }
  return out;
}

double mix_over_w(std::span<const double> per_w, const WMixture& mix) {
  mix.validate();
  if (static_cast<Eigen::Index>(per_w.size()) != mix.atoms.size())
    throw std::invalid_argument("mix_over_w: one value per atom required");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < mix.weights.size(); ++i) acc += mix.weights[i] * per_w[i];
  return acc;
}

WMixture gauss_legendre_atoms(const MarginalDistribution& fw, int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre_atoms: n must be >= 1");
  // Quadrature in the probability domain: int g dF = int_0^1 g(F^{-1}(u)) du.
  auto [nodes, weights] = gauss_legendre_rule(n);
  WMixture mix;
  mix.atoms.resize(n);
  mix.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    double u = 0.5 * (nodes[i] + 1.0);
    u = std::min(std::max(u, 1e-12), 1.0 - 1e-12);
    mix.atoms[i] = fw.quantile(u);
    mix.weights[i] = 0.5 * weights[i];
  }
  mix.weights /= mix.weights.sum();
  return mix;
}

}  // namespace dte

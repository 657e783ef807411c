#include "dtebounds/ladder.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <random>

#include "dtebounds/parallel.hpp"

namespace dte::ladder {

namespace {

constexpr double kTailTol = 1e-12;
constexpr double kPruneEps = 1e-9;

double fold_translation(double x, double beta) {
  double u = x - beta * std::floor(x / beta);
  if (u >= beta) u -= beta;
  if (u < 0) u = 0;
  return u;
}

}  // namespace

double smooth_max(double x, double h) {
  if (!(h > 0)) throw std::domain_error("smooth_max: h must be positive");
  const double t = x / h;
  if (t > 500.0) return x;
  if (t < -500.0) return 0.0;
  return x / (1.0 + std::exp(-t));
}

Orbit orbit_through(const Problem& p, double anchor, int max_rungs) {
  const Geometry& g = p.geom;
  const double sup_hi = std::max(p.hi.support_hi(), p.lo.support_hi());
  const double sup_lo = std::min(p.hi.support_lo(), p.lo.support_lo());
  const bool has_fp = !g.translation();
  const double fp = has_fp ? g.fixed_point() : 0.0;
  const double lo_at_fp = (has_fp && g.alpha < 1.0) ? p.lo(fp) : 1.0;
  const double hi_at_fp = (has_fp && g.alpha > 1.0) ? p.hi(fp) : 0.0;

  std::deque<double> rungs{anchor};
  // Forward: steps shrink toward the fixed point when alpha < 1, so stop once
  // the remaining lo-mass envelope is exhausted.
  double x = anchor;
  while (static_cast<int>(rungs.size()) < max_rungs) {
    if (x >= sup_hi) break;  // clamped CDFs make all further terms zero
    double xn = g.step(x);
    if (!(xn > x)) break;
    rungs.push_back(xn);
    if (g.alpha < 1.0) {
      if (xn - x < 1e-14 * (1.0 + std::fabs(xn))) break;
      if (lo_at_fp - p.lo(xn) <= kTailTol) break;
    }
    x = xn;
  }
  // Backward, mirrored.
  x = anchor;
  while (static_cast<int>(rungs.size()) < max_rungs) {
    if (x <= sup_lo) break;
    double xp = g.inv_step(x);
    if (!(xp < x)) break;
    if (g.alpha > 1.0 && xp <= fp) break;
    rungs.push_front(xp);
    if (g.alpha > 1.0) {
      if (x - xp < 1e-14 * (1.0 + std::fabs(x))) break;
      if (p.hi(xp) - hi_at_fp <= kTailTol) break;
    }
    x = xp;
  }

  Orbit out;
  out.anchor = anchor;
  out.rungs.assign(rungs.begin(), rungs.end());
  const auto n = out.rungs.size();
  out.terms.resize(n > 0 ? n - 1 : 0);
  for (size_t j = 0; j + 1 < n; ++j) {
    double t = p.hi(out.rungs[j + 1]) - p.lo(out.rungs[j]);
    out.terms[j] = std::max(t, 0.0);
    out.value += out.terms[j];
  }
  return out;
}

namespace {

// Anchor parameterization over one fundamental domain: every maximal-step
// orbit passes through it exactly once.
struct AnchorDomain {
  const Problem* p;
  double base = 0, span = 0;   // translation: anchors = base + u*span
  double fp = 0, s = 0;        // alpha != 1: distance scale from the fixed point

  double at(double u) const {
    const Geometry& g = p->geom;
    if (g.translation()) return base + u * span;
    if (g.alpha > 1.0) return fp + s * std::pow(g.alpha, u - 1.0);
    return fp - s * std::pow(g.alpha, u);
  }

  // Maps an arbitrary point onto the anchor parameter of its orbit; returns
  // false when the point lies on the wrong side of the fixed point.
  bool fold(double x, double* u) const {
    const Geometry& g = p->geom;
    if (g.translation()) {
      *u = fold_translation(x, g.beta) / span;
      return true;
    }
    double r = g.alpha > 1.0 ? x - fp : fp - x;
    if (!(r > 0) || !(s > 0)) return false;
    // anchor distance in (s/alpha, s] for alpha>1, [s*alpha, s) for alpha<1
    double la = std::log(g.alpha);
    double k = std::log(r / s) / la;
    double frac = k - std::floor(k);
    if (g.alpha > 1.0) {
      *u = frac == 0.0 ? 1.0 : frac;  // u in (0,1]
    } else {
      *u = frac;
    }
    return std::isfinite(*u);
  }
};

AnchorDomain make_domain(const Problem& p) {
  AnchorDomain d;
  d.p = &p;
  const Geometry& g = p.geom;
  const double hi_edge = std::max(p.hi.support_hi(), p.lo.support_hi());
  const double lo_edge = std::min(p.hi.support_lo(), p.lo.support_lo());
  if (g.translation()) {
    if (!(g.beta > 0)) throw std::logic_error("ladder: translation step must be positive");
    d.base = 0.0;
    d.span = g.beta;
    return d;
  }
  d.fp = g.fixed_point();
  if (g.alpha > 1.0) {
    double top = std::max(hi_edge, d.fp) + 0.01 * (hi_edge - lo_edge) + 1e-9;
    d.s = top - d.fp;
  } else {
    double bottom = std::min(lo_edge, d.fp) - 0.01 * (hi_edge - lo_edge) - 1e-9;
    d.s = d.fp - bottom;
  }
  return d;
}

}  // namespace

Orbit best_orbit(const Problem& p, int y_grid, std::span<const double> extra_anchors) {
  AnchorDomain dom = make_domain(p);
  if (y_grid < 2) y_grid = 2;

  auto value_at = [&](double u) { return orbit_through(p, dom.at(u)); };

  Orbit best;
  best.value = -1.0;
  double best_u = 0.0;
  for (int i = 0; i < y_grid; ++i) {
    double u = static_cast<double>(i) / (y_grid - 1);
    Orbit o = value_at(u);
    if (o.value > best.value) {
      best = std::move(o);
      best_u = u;
    }
  }
  for (double x : extra_anchors) {
    double u;
    if (!dom.fold(x, &u)) continue;
    Orbit o = value_at(u);
    if (o.value > best.value) {
      best = std::move(o);
      best_u = u;
    }
  }
  if (!p.hi.is_step() && !p.lo.is_step()) {
    // Golden refinement of the anchor parameter around the best grid cell.
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = std::max(0.0, best_u - 1.0 / (y_grid - 1));
    double b = std::min(1.0, best_u + 1.0 / (y_grid - 1));
    double c = b - gr * (b - a), d2 = a + gr * (b - a);
    double fc = value_at(c).value, fd = value_at(d2).value;
    for (int it = 0; it < 60 && b - a > 1e-12; ++it) {
      if (fc > fd) {
        b = d2;
        d2 = c;
        fd = fc;
        c = b - gr * (b - a);
        fc = value_at(c).value;
      } else {
        a = c;
        c = d2;
        fc = fd;
        d2 = a + gr * (b - a);
        fd = value_at(d2).value;
      }
    }
    Orbit o = value_at(0.5 * (a + b));
    if (o.value > best.value) best = std::move(o);
  }
  return best;
}

Truncation truncate(const Orbit& orbit, double eps) {
  const auto n = static_cast<int>(orbit.terms.size());
  Truncation out;
  if (n == 0) {
    out.center = orbit.anchor;
    return out;
  }
  std::vector<double> prefix(n + 1, 0.0);
  for (int i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + orbit.terms[i];
  const double total = prefix[n];

  auto window_best = [&](int k, int* center) {
    // Best sum of 2k+1 consecutive terms; center reported as a rung index.
    const int w = std::min(2 * k + 1, n);
    double best = -1.0;
    for (int s = 0; s + w <= n; ++s) {
      double v = prefix[s + w] - prefix[s];
      if (v > best) {
        best = v;
        *center = s + k + 1;  // rung above the k-th term of the window
      }
    }
    if (*center > n) *center = n;
    return best;
  };

  int lo = 0, hi = (n + 1) / 2 + 1;
  int center = 0;
  // Smallest K with total - bestwindow(K) < eps; window value is monotone in K.
  while (lo < hi) {
    int mid = lo + (hi - lo) / 2;
    int c;
    double v = window_best(mid, &c);
    if (total - v < eps)
      hi = mid;
    else
      lo = mid + 1;
  }
  out.K = lo;
  out.window_value = window_best(lo, &center);
  out.center = orbit.rungs[std::min<size_t>(center, orbit.rungs.size() - 1)];
  return out;
}

double exact_objective(const Problem& p, std::span<const double> rungs) {
  double acc = 0.0;
  for (size_t j = 0; j + 1 < rungs.size(); ++j)
    acc += std::max(p.hi(rungs[j + 1]) - p.lo(rungs[j]), 0.0);
  return acc;
}

bool feasible(const Problem& p, std::span<const double> rungs, double window_lo,
              double window_hi, double tol) {
  if (rungs.empty()) return false;
  if (rungs.front() < window_lo - tol) return false;
  if (rungs.back() > window_hi + tol) return false;
  for (size_t i = 0; i + 1 < rungs.size(); ++i) {
    if (rungs[i + 1] < rungs[i] - tol) return false;
    if (rungs[i + 1] > p.geom.step(rungs[i]) + tol) return false;
  }
  for (size_t i = 0; i + 2 < rungs.size(); ++i)
    if (rungs[i + 2] < p.geom.step(rungs[i]) - tol) return false;
  return true;
}

namespace {

struct SmoothObjective {
  const Problem* p;
  double h;

  double operator()(std::span<const double> x) const {
    double acc = 0.0;
    for (size_t j = 0; j + 1 < x.size(); ++j)
      acc += smooth_max(p->hi(x[j + 1]) - p->lo(x[j]), h);
    return acc;
  }

  // d smooth_max(z)/dz at z.
  double dsm(double z) const {
    double t = z / h;
    if (t > 500.0) return 1.0;
    if (t < -500.0) return 0.0;
    double s = 1.0 / (1.0 + std::exp(-t));
    return s + z * s * (1.0 - s) / h;
  }

  void gradient(std::span<const double> x, std::vector<double>& g) const {
    const auto n = x.size();
    g.assign(n, 0.0);
    for (size_t j = 0; j + 1 < n; ++j) {
      double z = p->hi(x[j + 1]) - p->lo(x[j]);
      double d = dsm(z);
      g[j + 1] += d * p->hi.slope(x[j + 1]);
      g[j] -= d * p->lo.slope(x[j]);
    }
  }
};

// Quadratic penalty on the linear coupling constraints; the window box is
// enforced by direct clamping.
struct Penalty {
  const Geometry* g;

  double value(std::span<const double> x) const {
    double acc = 0.0;
    for (size_t i = 0; i + 1 < x.size(); ++i) {
      double v1 = std::max(0.0, x[i] - x[i + 1]);
      double v2 = std::max(0.0, x[i + 1] - g->step(x[i]));
      acc += v1 * v1 + v2 * v2;
    }
    for (size_t i = 0; i + 2 < x.size(); ++i) {
      double v3 = std::max(0.0, g->step(x[i]) + kPruneEps - x[i + 2]);
      acc += v3 * v3;
    }
    return acc;
  }

  void add_gradient(std::span<const double> x, double mu, std::vector<double>& grad) const {
    for (size_t i = 0; i + 1 < x.size(); ++i) {
      double v1 = std::max(0.0, x[i] - x[i + 1]);
      if (v1 > 0) {
        grad[i] -= 2 * mu * v1;
        grad[i + 1] += 2 * mu * v1;
      }
      double v2 = std::max(0.0, x[i + 1] - g->step(x[i]));
      if (v2 > 0) {
        grad[i + 1] -= 2 * mu * v2;
        grad[i] += 2 * mu * v2 * g->alpha;
      }
    }
    for (size_t i = 0; i + 2 < x.size(); ++i) {
      double v3 = std::max(0.0, g->step(x[i]) + kPruneEps - x[i + 2]);
      if (v3 > 0) {
        grad[i] -= 2 * mu * v3 * g->alpha;
        grad[i + 2] += 2 * mu * v3;
      }
    }
  }
};

// Minimal reachable endpoint after `steps` further moves from state
// (prev, cur): stall until the pruning constraint forces a move.
double min_completion(const Geometry& g, double prev, double cur, int steps) {
  for (int t = 0; t < steps; ++t) {
    double nxt = std::max(cur, std::isfinite(prev) ? g.step(prev) + kPruneEps
                                                   : -std::numeric_limits<double>::infinity());
    nxt = std::max(nxt, cur);
    prev = cur;
    cur = nxt;
  }
  return cur;
}

// Draws a feasible start by sampling each step uniformly inside its feasible
// interval, shrunk so that the remaining rungs can still fit the window.
bool sample_start(const Problem& p, double window_lo, double window_hi, int n,
                  std::mt19937_64& rng, std::vector<double>& x) {
  const Geometry& g = p.geom;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  x.assign(n, 0.0);
  for (int attempt = 0; attempt < 50; ++attempt) {
    // Upper bound for x0 such that completion can stay below window_hi.
    double lo0 = window_lo, hi0 = window_hi;
    if (min_completion(g, -std::numeric_limits<double>::infinity(), hi0, n - 1) > window_hi) {
      // Bisect the largest admissible x0.
      double a = lo0, b = hi0;
      if (min_completion(g, -std::numeric_limits<double>::infinity(), a, n - 1) > window_hi)
        continue;  // window too tight for this J
      for (int it = 0; it < 60; ++it) {
        double m = 0.5 * (a + b);
        (min_completion(g, -std::numeric_limits<double>::infinity(), m, n - 1) > window_hi ? b
                                                                                           : a) = m;
      }
      hi0 = a;
    }
    if (hi0 < lo0) continue;
    x[0] = lo0 + unif(rng) * (hi0 - lo0);
    bool ok = true;
    for (int i = 1; i < n && ok; ++i) {
      double prev2 = i >= 2 ? x[i - 2] : -std::numeric_limits<double>::infinity();
      double lb = std::max(x[i - 1], std::isfinite(prev2)
                                         ? g.step(prev2) + kPruneEps
                                         : -std::numeric_limits<double>::infinity());
      double ub = g.step(x[i - 1]);
      // Shrink ub so the remaining steps can finish inside the window.
      int rem = n - 1 - i;
      if (min_completion(g, x[i - 1], ub, rem) > window_hi) {
        double a = lb, b = ub;
        if (min_completion(g, x[i - 1], a, rem) > window_hi) {
          ok = false;
          break;
        }
        for (int it = 0; it < 60; ++it) {
          double m = 0.5 * (a + b);
          (min_completion(g, x[i - 1], m, rem) > window_hi ? b : a) = m;
        }
        ub = a;
      }
      if (ub < lb) {
        ok = false;
        break;
      }
      x[i] = lb + unif(rng) * (ub - lb);
    }
    if (ok && x[n - 1] <= window_hi + 1e-12) return true;
  }
  return false;
}

// Forward repair sweep onto the constraint set; returns false when the
// configuration cannot be repaired.
bool repair(const Problem& p, double window_lo, double window_hi, std::vector<double>& x) {
  const Geometry& g = p.geom;
  const auto n = x.size();
  x[0] = std::min(std::max(x[0], window_lo), window_hi);
  for (size_t i = 1; i < n; ++i) {
    double lb = x[i - 1];
    if (i >= 2) lb = std::max(lb, g.step(x[i - 2]) + kPruneEps);
    double ub = g.step(x[i - 1]);
    if (lb > ub) return false;
    x[i] = std::min(std::max(x[i], lb), ub);
  }
  return x[n - 1] <= window_hi + 1e-9;
}

}  // namespace

Refined refine_window(const Problem& p, double center, int K, int J, const Options& opt,
                      const std::vector<double>* start_rungs) {
  const Geometry& g = p.geom;
  double window_lo = center, window_hi = center;
  for (int i = 0; i < K; ++i) {
    window_lo = g.inv_step(window_lo);
    window_hi = g.step(window_hi);
  }
  const int n = 2 * J + 1;
  const bool gradient_capable = p.hi.has_slope() && p.lo.has_slope();

  SmoothObjective smooth{&p, opt.smoothing_h};
  Penalty penalty{&g};

  auto local_search = [&](std::vector<double> x) -> Refined {
    if (gradient_capable) {
      std::vector<double> grad;
      for (double mu : {1e2, 1e4, 1e6}) {
        for (int iter = 0; iter < 60; ++iter) {
          smooth.gradient(x, grad);
          penalty.add_gradient(x, mu, grad);
          double gnorm2 = 0.0;
          for (double v : grad) gnorm2 += v * v;
          if (gnorm2 < 1e-18) break;
          double f0 = smooth(x) - mu * penalty.value(x);
          double t = 1.0;
          std::vector<double> xn(n);
          bool accepted = false;
          for (int bt = 0; bt < 40; ++bt) {
            for (int i = 0; i < n; ++i) xn[i] = x[i] + t * grad[i];
            xn[0] = std::max(xn[0], window_lo);
            xn[n - 1] = std::min(xn[n - 1], window_hi);
            double f1 = smooth(xn) - mu * penalty.value(xn);
            if (f1 > f0 + 1e-4 * t * gnorm2) {
              x = xn;
              accepted = true;
              break;
            }
            t *= 0.5;
          }
          if (!accepted) break;
        }
      }
    }
    if (!repair(p, window_lo, window_hi, x) || !feasible(p, x, window_lo, window_hi, 1e-9))
      return {-1.0, {}};
    return {exact_objective(p, x), std::move(x)};
  };

  // Candidate starts: the caller's, the binding ladder, and seeded random
  // draws; each multistart owns an RNG stream keyed by (seed, J, index).
  std::vector<std::vector<double>> starts;
  if (start_rungs && static_cast<int>(start_rungs->size()) == n) starts.push_back(*start_rungs);
  {
    std::vector<double> bind(n);
    bind[0] = window_lo;
    for (int i = 1; i < n; ++i) bind[i] = g.step(bind[i - 1]);
    if (bind[n - 1] <= window_hi + 1e-12) starts.push_back(std::move(bind));
  }
  for (int s = 0; s < opt.multistarts; ++s) {
    std::seed_seq seq{static_cast<std::uint64_t>(opt.rng_seed), static_cast<std::uint64_t>(J),
                      static_cast<std::uint64_t>(s)};
    std::mt19937_64 rng(seq);
    std::vector<double> x;
    if (sample_start(p, window_lo, window_hi, n, rng, x)) starts.push_back(std::move(x));
  }

  std::vector<Refined> results(starts.size());
  parallel_for(static_cast<int>(starts.size()),
               [&](int i) { results[i] = local_search(starts[i]); });

  Refined best{-1.0, {}};
  for (auto& r : results)
    if (r.value > best.value) best = std::move(r);
  return best;
}

Solution solve(const Problem& p, const Options& opt, std::span<const double> extra_anchors) {
  Orbit orbit = best_orbit(p, opt.y_grid, extra_anchors);
  Truncation tr = truncate(orbit, opt.epsilon_K);

  Solution out;
  out.warm_value = orbit.value;
  out.anchor = orbit.anchor;
  out.K = tr.K;
  out.value = orbit.value;

  // Witness: orbit rungs trimmed to the span of nonzero terms.
  {
    size_t first = 0, last = orbit.terms.size();
    while (first < orbit.terms.size() && orbit.terms[first] == 0.0) ++first;
    while (last > first && orbit.terms[last - 1] == 0.0) --last;
    if (first >= last) {
      out.rungs.assign(1, orbit.rungs.empty() ? orbit.anchor : orbit.rungs.front());
    } else {
      out.rungs.assign(orbit.rungs.begin() + first, orbit.rungs.begin() + last + 1);
    }
  }

  if (tr.K <= opt.refine_max_window) {
    for (int J = tr.K; J <= 2 * tr.K; ++J) {
      std::vector<double> start;
      const std::vector<double>* start_ptr = nullptr;
      if (J == tr.K && tr.K > 0) {
        // The truncated warm window is the canonical start at J = K.
        start.resize(2 * J + 1);
        start[0] = tr.center;
        for (int i = 0; i < J; ++i) start[0] = p.geom.inv_step(start[0]);
        for (int i = 1; i < 2 * J + 1; ++i) start[i] = p.geom.step(start[i - 1]);
        start_ptr = &start;
      }
      Refined r = refine_window(p, tr.center, tr.K, J, opt, start_ptr);
      if (r.value > out.value) {
        out.value = r.value;
        out.rungs = std::move(r.rungs);
      }
    }
  }
  return out;
}

}  // namespace dte::ladder

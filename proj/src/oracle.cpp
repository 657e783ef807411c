#include "dtebounds/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <queue>
#include <sstream>
#include <vector>

namespace dte {

namespace {

constexpr std::int64_t kMassScale = 1'000'000'000;

// Integer units summing exactly to kMassScale; the remainder after flooring
// goes to the largest fractional residuals first.
std::vector<std::int64_t> to_units(const VectorXd& masses) {
  const auto n = masses.size();
  std::vector<std::int64_t> units(n);
  std::vector<std::pair<double, Eigen::Index>> residual(n);
  std::int64_t assigned = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double exact = masses[i] * kMassScale;
    units[i] = static_cast<std::int64_t>(std::floor(exact));
    if (units[i] < 0) units[i] = 0;
    assigned += units[i];
    residual[i] = {exact - std::floor(exact), i};
  }
  std::sort(residual.begin(), residual.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::int64_t leftover = kMassScale - assigned;
  for (std::int64_t k = 0; k < leftover; ++k) units[residual[k % n].second] += 1;
  return units;
}

// ---------------------------------------------------------------------------
// Dinic max-flow for the feasibility check (integer capacities).

struct Dinic {
  struct Edge {
    int to;
    std::int64_t cap;
    int rev;
  };
  std::vector<std::vector<Edge>> g;
  std::vector<int> level, iter;

  explicit Dinic(int n) : g(n), level(n), iter(n) {}

  void add_edge(int from, int to, std::int64_t cap) {
    g[from].push_back({to, cap, static_cast<int>(g[to].size())});
    g[to].push_back({from, 0, static_cast<int>(g[from].size()) - 1});
  }

  bool bfs(int s, int t) {
    std::fill(level.begin(), level.end(), -1);
    std::queue<int> q;
    level[s] = 0;
    q.push(s);
    while (!q.empty()) {
      int v = q.front();
      q.pop();
      for (const Edge& e : g[v]) {
        if (e.cap > 0 && level[e.to] < 0) {
          level[e.to] = level[v] + 1;
          q.push(e.to);
        }
      }
    }
    return level[t] >= 0;
  }

  std::int64_t dfs(int v, int t, std::int64_t f) {
    if (v == t) return f;
    for (int& i = iter[v]; i < static_cast<int>(g[v].size()); ++i) {
      Edge& e = g[v][i];
      if (e.cap > 0 && level[v] < level[e.to]) {
        std::int64_t d = dfs(e.to, t, std::min(f, e.cap));
        if (d > 0) {
          e.cap -= d;
          g[e.to][e.rev].cap += d;
          return d;
        }
      }
    }
    return 0;
  }

  std::int64_t max_flow(int s, int t) {
    std::int64_t flow = 0;
    while (bfs(s, t)) {
      std::fill(iter.begin(), iter.end(), 0);
      std::int64_t f;
      while ((f = dfs(s, t, std::numeric_limits<std::int64_t>::max())) > 0) flow += f;
    }
    return flow;
  }

  // After a max-flow: nodes reachable from s in the residual graph.
  std::vector<bool> min_cut_side(int s) {
    std::vector<bool> vis(g.size(), false);
    std::queue<int> q;
    vis[s] = true;
    q.push(s);
    while (!q.empty()) {
      int v = q.front();
      q.pop();
      for (const Edge& e : g[v])
        if (e.cap > 0 && !vis[e.to]) {
          vis[e.to] = true;
          q.push(e.to);
        }
    }
    return vis;
  }
};

bool looks_like_mtr_mask(const VectorXd& p0, const VectorXd& p1, const Mask& mask) {
  double tol = 1e-12 * (1.0 + std::max(std::fabs(p0[p0.size() - 1]), std::fabs(p1[p1.size() - 1])));
  for (Eigen::Index i = 0; i < p0.size(); ++i)
    for (Eigen::Index j = 0; j < p1.size(); ++j)
      if (mask(i, j) != (p1[j] >= p0[i] - tol)) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Network simplex for the uncapacitated transportation problem with an
// artificial root basis. Nodes: suppliers, consumers, then the root. The
// cycle created by an entering arc e runs e.from -> e.to across e, then back
// through the tree; a tree arc on the e.to side traversed child->parent
// gains flow when it points child->parent, while the mirrored arcs on the
// e.from side lose flow.

class NetworkSimplex {
 public:
  explicit NetworkSimplex(int node_count) : node_count_(node_count) {}

  void add_arc(int from, int to, std::int64_t cost) {
    arcs_.push_back({from, to, cost, 0, false});
  }

  // supplies: positive for suppliers, negative for consumers, summing to 0
  // over the non-root nodes. Returns false when feasibility requires
  // artificial flow.
  bool solve(const std::vector<std::int64_t>& supply) {
    const int root = node_count_ - 1;
    first_artificial_ = static_cast<int>(arcs_.size());
    const std::int64_t big = node_count_ + 2;
    tree_arcs_.clear();
    for (int v = 0; v < root; ++v) {
      if (supply[v] >= 0)
        arcs_.push_back({v, root, big, supply[v], true});
      else
        arcs_.push_back({root, v, big, -supply[v], true});
      tree_arcs_.push_back(first_artificial_ + v);
    }
    const int m = static_cast<int>(arcs_.size());
    parent_.assign(node_count_, -1);
    parent_arc_.assign(node_count_, -1);
    depth_.assign(node_count_, 0);
    pi_.assign(node_count_, 0);
    rebuild_tree();

    const int block = std::max(64, static_cast<int>(std::sqrt(static_cast<double>(m))));
    int scan_pos = 0;
    const long long pivot_cap = 300LL * m + 10000;
    for (long long pivots = 0;; ++pivots) {
      if (pivots > pivot_cap) throw std::runtime_error("network simplex: pivot cap exceeded");
      int entering = -1;
      std::int64_t best = 0;
      int checked = 0;
      while (checked < m) {
        int limit = std::min(block, m - checked);
        for (int t = 0; t < limit; ++t) {
          int a = (scan_pos + checked + t) % m;
          const Arc& arc = arcs_[a];
          if (arc.in_tree) continue;
          std::int64_t rc = arc.cost + pi_[arc.from] - pi_[arc.to];
          if (rc < best) {
            best = rc;
            entering = a;
          }
        }
        checked += limit;
        if (entering >= 0) break;
      }
      if (entering < 0) break;  // optimal
      scan_pos = (scan_pos + checked) % m;
      pivot(entering);
    }
    for (int a = first_artificial_; a < m; ++a)
      if (arcs_[a].flow > 0) return false;
    return true;
  }

  std::int64_t flow(int arc_index) const { return arcs_[arc_index].flow; }

  std::int64_t total_cost_real() const {
    std::int64_t acc = 0;
    for (int a = 0; a < first_artificial_; ++a) acc += arcs_[a].cost * arcs_[a].flow;
    return acc;
  }

 private:
  struct Arc {
    int from, to;
    std::int64_t cost;
    std::int64_t flow;
    bool in_tree;
  };

  void rebuild_tree() {
    const int root = node_count_ - 1;
    std::vector<std::vector<int>> adj(node_count_);
    for (int a : tree_arcs_) {
      adj[arcs_[a].from].push_back(a);
      adj[arcs_[a].to].push_back(a);
    }
    std::fill(parent_.begin(), parent_.end(), -1);
    std::fill(parent_arc_.begin(), parent_arc_.end(), -1);
    parent_[root] = root;
    depth_[root] = 0;
    pi_[root] = 0;
    std::queue<int> q;
    q.push(root);
    while (!q.empty()) {
      int v = q.front();
      q.pop();
      for (int a : adj[v]) {
        const Arc& arc = arcs_[a];
        int other = arc.from == v ? arc.to : arc.from;
        if (parent_[other] != -1) continue;
        parent_[other] = v;
        parent_arc_[other] = a;
        depth_[other] = depth_[v] + 1;
        // Tree arcs have zero reduced cost: cost + pi[from] - pi[to] = 0.
        pi_[other] = arc.from == v ? pi_[v] + arc.cost : pi_[v] - arc.cost;
        q.push(other);
      }
    }
    parent_[root] = -1;
  }

  void pivot(int entering) {
    Arc& e = arcs_[entering];
    int u = e.from, v = e.to;
    struct Step {
      int arc;
      int sign;  // +1 flow increases around the cycle, -1 decreases
    };
    std::vector<Step> steps;
    while (u != v) {
      if (depth_[u] >= depth_[v]) {
        int a = parent_arc_[u];
        steps.push_back({a, arcs_[a].from == u ? -1 : +1});
        u = parent_[u];
      } else {
        int a = parent_arc_[v];
        steps.push_back({a, arcs_[a].from == v ? +1 : -1});
        v = parent_[v];
      }
    }
    std::int64_t theta = std::numeric_limits<std::int64_t>::max();
    int leaving = -1;
    for (const Step& s : steps) {
      if (s.sign > 0) continue;
      std::int64_t f = arcs_[s.arc].flow;
      if (f < theta || (f == theta && (leaving < 0 || s.arc < leaving))) {
        theta = f;
        leaving = s.arc;
      }
    }
    if (leaving < 0) throw std::runtime_error("network simplex: unbounded pivot");

    e.flow += theta;
    for (const Step& s : steps) arcs_[s.arc].flow += s.sign * theta;
    arcs_[leaving].in_tree = false;
    e.in_tree = true;
    for (int& a : tree_arcs_) {
      if (a == leaving) {
        a = entering;
        break;
      }
    }
    rebuild_tree();
  }

  int node_count_;
  int first_artificial_ = 0;
  std::vector<Arc> arcs_;
  std::vector<int> tree_arcs_;
  std::vector<int> parent_, parent_arc_, depth_;
  std::vector<std::int64_t> pi_;
};

}  // namespace

DiscreteMarginal discretize(const MarginalDistribution& f, int n, double lo, double hi) {
  if (n < 2) throw std::invalid_argument("discretize: n must be >= 2");
  if (!(lo < hi)) throw std::invalid_argument("discretize: need lo < hi");
  double missed = f.cdf(lo) + (1.0 - f.cdf(hi));
  if (missed > 1e-4) {
    std::ostringstream os;
    os << "discretize: [" << lo << "," << hi << "] misses " << missed << " of the mass";
    throw std::invalid_argument(os.str());
  }
  DiscreteMarginal out;
  out.points.resize(n);
  out.masses.resize(n);
  const double width = (hi - lo) / n;
  double prev = f.cdf(lo);
  for (int i = 0; i < n; ++i) {
    double right = f.cdf(lo + width * (i + 1));
    out.points[i] = lo + width * (i + 0.5);
    out.masses[i] = right - prev;
    prev = right;
  }
  out.masses[0] += f.cdf(lo);
  out.masses[n - 1] += 1.0 - f.cdf(hi);
  return out;
}

Mask build_mask(const VectorXd& points0, const VectorXd& points1, const RestrictionSpec& r) {
  const auto n0 = points0.size(), n1 = points1.size();
  Mask mask(n0, n1);
  const double span = std::max({1.0, std::fabs(points0[n0 - 1]), std::fabs(points1[n1 - 1])});
  const double tol = 1e-12 * span;
  for (Eigen::Index i = 0; i < n0; ++i) {
    const double y0 = points0[i];
    for (Eigen::Index j = 0; j < n1; ++j) {
      const double y1 = points1[j];
      bool ok = true;
      switch (r.kind) {
        case RestrictionSpec::Kind::None:
          break;
        case RestrictionSpec::Kind::Mtr:
          ok = y1 >= y0 - tol;
          break;
        case RestrictionSpec::Kind::Concave:
          ok = y1 >= y0 - tol && y0 >= r.shape.w - tol &&
               y1 <= r.shape.boundary(y0) + tol;
          break;
        case RestrictionSpec::Kind::Convex:
          ok = y1 >= y0 - tol && y0 >= r.shape.w - tol &&
               y1 >= r.shape.boundary(y0) - tol;
          break;
        case RestrictionSpec::Kind::Roy:
          ok = r.roy_d == 1 ? (y1 - y0 >= r.roy_m_c - tol) : (y1 - y0 < r.roy_m_c + tol);
          break;
      }
      mask(i, j) = ok;
    }
  }
  return mask;
}

Feasibility check_feasibility(const DiscreteMarginal& mu0, const DiscreteMarginal& mu1,
                              const Mask& mask) {
  const int n0 = static_cast<int>(mu0.points.size());
  const int n1 = static_cast<int>(mu1.points.size());
  auto u0 = to_units(mu0.masses);
  auto u1 = to_units(mu1.masses);
  Dinic dinic(n0 + n1 + 2);
  const int src = n0 + n1, dst = n0 + n1 + 1;
  for (int i = 0; i < n0; ++i)
    if (u0[i] > 0) dinic.add_edge(src, i, u0[i]);
  for (int j = 0; j < n1; ++j)
    if (u1[j] > 0) dinic.add_edge(n0 + j, dst, u1[j]);
  for (int i = 0; i < n0; ++i)
    for (int j = 0; j < n1; ++j)
      if (mask(i, j) && u0[i] > 0 && u1[j] > 0)
        dinic.add_edge(i, n0 + j, std::numeric_limits<std::int64_t>::max() / 4);
  std::int64_t flow = dinic.max_flow(src, dst);
  if (flow >= kMassScale) return {true, ""};

  std::ostringstream os;
  if (looks_like_mtr_mask(mu0.points, mu1.points, mask)) {
    // Dominance certificate: a threshold t with Pr(Y1 <= t) > Pr(Y0 <= t).
    double c0 = 0, c1 = 0;
    Eigen::Index i = 0;
    for (Eigen::Index j = 0; j < mu1.points.size(); ++j) {
      c1 += mu1.masses[j];
      while (i < mu0.points.size() && mu0.points[i] <= mu1.points[j]) c0 += mu0.masses[i++];
      if (c1 > c0 + 1e-9) {
        os << "dominance violated at t=" << mu1.points[j] << ": Pr(Y1<=t)=" << c1
           << " > Pr(Y0<=t)=" << c0;
        return {false, os.str()};
      }
    }
  }
  auto cut = dinic.min_cut_side(src);
  double stranded = static_cast<double>(kMassScale - flow) / kMassScale;
  os << "violated cut: " << stranded << " of mu0 mass on {";
  int listed = 0;
  for (int i = 0; i < n0 && listed < 8; ++i)
    if (cut[i]) {
      os << (listed++ ? "," : "") << "y0=" << mu0.points[i];
    }
  os << (listed == 8 ? ",...}" : "}") << " cannot reach its allowed y1 cells";
  return {false, os.str()};
}

TransportSolution solve_transport_lp(const DiscreteMarginal& mu0, const DiscreteMarginal& mu1,
                                     const Mask& mask, double delta, Direction direction) {
  Feasibility feas = check_feasibility(mu0, mu1, mask);
  if (!feas.feasible) throw InfeasibleError(feas.certificate);

  const int n0 = static_cast<int>(mu0.points.size());
  const int n1 = static_cast<int>(mu1.points.size());
  auto u0 = to_units(mu0.masses);
  auto u1 = to_units(mu1.masses);

  NetworkSimplex simplex(n0 + n1 + 1);
  std::vector<std::pair<int, int>> arc_cells;
  for (int i = 0; i < n0; ++i) {
    for (int j = 0; j < n1; ++j) {
      if (!mask(i, j)) continue;  // lambda = inf: forbidden arcs deleted
      double gap = mu1.points[j] - mu0.points[i];
      std::int64_t cost;
      if (direction == Direction::MinBelow)
        cost = gap < delta ? 1 : 0;
      else
        cost = gap > delta ? 1 : 0;
      simplex.add_arc(i, n0 + j, cost);
      arc_cells.push_back({i, j});
    }
  }
  std::vector<std::int64_t> supply(n0 + n1 + 1, 0);
  for (int i = 0; i < n0; ++i) supply[i] = u0[i];
  for (int j = 0; j < n1; ++j) supply[n0 + j] = -u1[j];

  if (!simplex.solve(supply))
    throw InfeasibleError("artificial flow remained after optimization");

  TransportSolution out;
  out.coupling = Eigen::MatrixXd::Zero(n0, n1);
  for (int a = 0; a < static_cast<int>(arc_cells.size()); ++a) {
    auto [i, j] = arc_cells[a];
    out.coupling(i, j) = static_cast<double>(simplex.flow(a)) / kMassScale;
  }
  double raw = static_cast<double>(simplex.total_cost_real()) / kMassScale;
  out.value = direction == Direction::MinBelow ? raw : 1.0 - raw;
  return out;
}

}  // namespace dte

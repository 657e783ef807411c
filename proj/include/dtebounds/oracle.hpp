#ifndef DTEBOUNDS_ORACLE_HPP_
#define DTEBOUNDS_ORACLE_HPP_

#include <string>

#include "dtebounds/distribution.hpp"
#include "dtebounds/shape.hpp"

namespace dte {

struct DiscreteMarginal {
  VectorXd points;  // strictly increasing
  VectorXd masses;  // nonnegative, sum 1
};

// n equal-width cells on [lo,hi]; point = midpoint, mass = CDF increment,
// tail mass folded into the end cells. Throws when [lo,hi] misses more than
// 1e-4 of mass.
DiscreteMarginal discretize(const MarginalDistribution& f, int n, double lo, double hi);

// Tagged description of the support set C.
struct RestrictionSpec {
  enum class Kind { None, Mtr, Concave, Convex, Roy };
  Kind kind = Kind::None;
  ShapeContext shape;  // Concave / Convex
  double roy_m_c = 0;  // Roy: cost threshold at the conditioning z
  int roy_d = 1;       // Roy: treated (1) or untreated (0) region

  static RestrictionSpec none() { return {}; }
  static RestrictionSpec mtr() { return {Kind::Mtr, {}, 0, 1}; }
  static RestrictionSpec concave(const ShapeContext& c) { return {Kind::Concave, c, 0, 1}; }
  static RestrictionSpec convex(const ShapeContext& c) { return {Kind::Convex, c, 0, 1}; }
  static RestrictionSpec roy(double m_c, int d) { return {Kind::Roy, {}, m_c, d}; }
};

using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

// mask(i,j) true iff (points0[i], points1[j]) lies in C.
Mask build_mask(const VectorXd& points0, const VectorXd& points1, const RestrictionSpec& r);

struct Feasibility {
  bool feasible = false;
  std::string certificate;  // violated cut / dominance threshold when false
};

// A coupling exists iff max-flow on the allowed bipartite graph moves the
// whole unit mass.
Feasibility check_feasibility(const DiscreteMarginal& mu0, const DiscreteMarginal& mu1,
                              const Mask& mask);

class InfeasibleError : public std::runtime_error {
 public:
  explicit InfeasibleError(const std::string& certificate)
      : std::runtime_error("transport problem infeasible: " + certificate),
        certificate_(certificate) {}
  const std::string& certificate() const { return certificate_; }

 private:
  std::string certificate_;
};

enum class Direction { MinBelow, MaxBelow };

struct TransportSolution {
  double value = 0;
  Eigen::MatrixXd coupling;  // pi[i][j], zero on forbidden cells
};

// Exact optimum of the {0,1,inf}-cost primal on the masked transportation
// polytope: forbidden cells are deleted, masses are scaled to integer units
// (1e9), and the LP is solved by network simplex.
//   MinBelow: min Pr(Y1 - Y0 < delta)
//   MaxBelow: max Pr(Y1 - Y0 <= delta), returned as 1 - min complementary cost.
TransportSolution solve_transport_lp(const DiscreteMarginal& mu0, const DiscreteMarginal& mu1,
                                     const Mask& mask, double delta, Direction direction);

}  // namespace dte

#endif

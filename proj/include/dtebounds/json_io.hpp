#ifndef DTEBOUNDS_JSON_IO_HPP_
#define DTEBOUNDS_JSON_IO_HPP_

#include <json.hpp>
#include <optional>
#include <string>

#include "dtebounds/estimation.hpp"
#include "dtebounds/roy.hpp"
#include "dtebounds/shape.hpp"

namespace dte {

// {"kind": "normal", "mu": 0.0, "sigma2": 1.0} and friends.
MarginalDistribution distribution_from_json(const nlohmann::json& j);

// Full restriction block: {"type": "none" | "mtr"} |
// {"type": "concave"|"convex", "w":., "t_w":., "t0":., "t1":.} |
// {"type": "roy", "z": [...], "m_c": [...], "p": [...],
//  "marginals": [{"f00":{...},"f10":{...},"f01":{...},"f11":{...}}, ...]}
struct RestrictionConfig {
  RestrictionSpec::Kind kind = RestrictionSpec::Kind::None;
  ShapeContext shape;
  RoyContext roy;
};
RestrictionConfig restriction_from_json(const nlohmann::json& j);

struct RunConfig {
  MarginalDistribution f0, f1;
  RestrictionConfig restriction;
  double delta_min = 0, delta_max = 1;
  int steps = 2;
  MtrOptions opts;
  std::string out_path;  // optional; --out overrides
};
RunConfig run_config_from_json(const nlohmann::json& j);

}  // namespace dte

#endif

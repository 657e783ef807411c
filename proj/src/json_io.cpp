#include "dtebounds/json_io.hpp"

namespace dte {

using nlohmann::json;

namespace {

VectorXd vector_from_json(const json& j) {
  if (!j.is_array()) throw std::invalid_argument("config: expected an array of numbers");
  VectorXd v(j.size());
  for (size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

}  // namespace

MarginalDistribution distribution_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "normal")
    return MarginalDistribution::normal(j.at("mu").get<double>(), j.at("sigma2").get<double>());
  if (kind == "chi_square") return MarginalDistribution::chi_square(j.at("k").get<int>());
  if (kind == "chi2_normal_convolution")
    return MarginalDistribution::chi2_normal_convolution(j.at("k1").get<int>(),
                                                         j.at("k2").get<double>());
  if (kind == "normal_mixture")
    return MarginalDistribution::normal_mixture(vector_from_json(j.at("weights")),
                                                vector_from_json(j.at("means")),
                                                vector_from_json(j.at("variances")));
  if (kind == "uniform")
    return MarginalDistribution::uniform(j.at("a").get<double>(), j.at("b").get<double>());
  if (kind == "step_cdf") {
    const json& pts = j.at("points");
    VectorXd y(pts.size()), f(pts.size());
    for (size_t i = 0; i < pts.size(); ++i) {
      y[static_cast<Eigen::Index>(i)] = pts[i].at(0).get<double>();
      f[static_cast<Eigen::Index>(i)] = pts[i].at(1).get<double>();
    }
    return MarginalDistribution::step_cdf(y, f);
  }
  throw std::invalid_argument("config: unknown distribution kind '" + kind + "'");
}

RestrictionConfig restriction_from_json(const json& j) {
  RestrictionConfig out;
  const std::string type = j.at("type").get<std::string>();
  if (type == "none") {
    out.kind = RestrictionSpec::Kind::None;
  } else if (type == "mtr") {
    out.kind = RestrictionSpec::Kind::Mtr;
  } else if (type == "concave" || type == "convex") {
    out.kind = type == "concave" ? RestrictionSpec::Kind::Concave : RestrictionSpec::Kind::Convex;
    out.shape.w = j.at("w").get<double>();
    out.shape.t_w = j.at("t_w").get<double>();
    out.shape.t0 = j.at("t0").get<double>();
    out.shape.t1 = j.at("t1").get<double>();
    out.shape.validate();
  } else if (type == "roy") {
    out.kind = RestrictionSpec::Kind::Roy;
    VectorXd z = vector_from_json(j.at("z"));
    VectorXd m_c = vector_from_json(j.at("m_c"));
    VectorXd p = vector_from_json(j.at("p"));
    const json& marg = j.at("marginals");
    if (z.size() != m_c.size() || z.size() != p.size() ||
        static_cast<size_t>(z.size()) != marg.size())
      throw std::invalid_argument("config: roy arrays must have one entry per z");
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      RoyPoint pt;
      pt.z = z[i];
      pt.m_c = m_c[i];
      pt.p = p[i];
      const json& m = marg[static_cast<size_t>(i)];
      pt.marginal[0][0] = distribution_from_json(m.at("f00"));
      pt.marginal[1][0] = distribution_from_json(m.at("f10"));
      pt.marginal[0][1] = distribution_from_json(m.at("f01"));
      pt.marginal[1][1] = distribution_from_json(m.at("f11"));
      out.roy.points.push_back(std::move(pt));
    }
    out.roy.validate();
  } else {
    throw std::invalid_argument("config: unknown restriction type '" + type + "'");
  }
  return out;
}

RunConfig run_config_from_json(const json& j) {
  RunConfig cfg;
  cfg.f0 = distribution_from_json(j.at("f0"));
  cfg.f1 = distribution_from_json(j.at("f1"));
  cfg.restriction = j.contains("restriction") ? restriction_from_json(j.at("restriction"))
                                              : RestrictionConfig{};
  cfg.delta_min = j.at("delta_min").get<double>();
  cfg.delta_max = j.at("delta_max").get<double>();
  cfg.steps = j.at("steps").get<int>();
  if (!(cfg.delta_min < cfg.delta_max))
    throw std::invalid_argument("config: need delta_min < delta_max");
  if (cfg.steps < 2) throw std::invalid_argument("config: need steps >= 2");
  if (j.contains("epsilon_k")) cfg.opts.epsilon_K = j.at("epsilon_k").get<double>();
  if (j.contains("smoothing_h")) cfg.opts.smoothing_h = j.at("smoothing_h").get<double>();
  if (j.contains("multistarts")) cfg.opts.multistarts = j.at("multistarts").get<int>();
  if (j.contains("seed")) cfg.opts.rng_seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("y_grid")) cfg.opts.y_grid = j.at("y_grid").get<int>();
  if (j.contains("refine_max_window"))
    cfg.opts.refine_max_window = j.at("refine_max_window").get<int>();
  if (j.contains("out")) cfg.out_path = j.at("out").get<std::string>();
  if (!(cfg.opts.epsilon_K > 0) || !(cfg.opts.smoothing_h > 0) || cfg.opts.multistarts < 1)
    throw std::invalid_argument("config: invalid mtr options");
  return cfg;
}

}  // namespace dte

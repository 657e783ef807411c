// Command-line surface: compute DTE bound curves under support restrictions,
// verify the dual formulas against the discrete transport oracle, replicate
// the synthetic chi-square/normal study, and fit normal-mixture CDFs.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "dtebounds/estimation.hpp"
#include "dtebounds/json_io.hpp"
#include "dtebounds/parallel.hpp"
#include "dtebounds/roy.hpp"
#include "dtebounds/shape.hpp"
#include "dtebounds/special.hpp"

namespace {

using dte::MarginalDistribution;
using nlohmann::json;

constexpr int kExitConfig = 2;
constexpr int kExitComputation = 3;
constexpr int kExitInfeasible = 4;

std::string g12(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  json j;
  in >> j;
  return j;
}

Eigen::VectorXd delta_grid(double lo, double hi, int steps) {
  return Eigen::VectorXd::LinSpaced(steps, lo, hi);
}

json sequence_to_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

struct RowBounds {
  double restricted_lower = 0, restricted_upper = 0;
  json witness;
};

// ---------------------------------------------------------------------------

int cmd_bounds(const dte::RunConfig& cfg, const std::string& out_path) {
  const Eigen::VectorXd deltas = delta_grid(cfg.delta_min, cfg.delta_max, cfg.steps);
  const auto n = deltas.size();

  dte::BoundsCurve makarov;
  makarov.deltas = deltas;
  makarov.lower.resize(n);
  makarov.upper.resize(n);
  makarov.witnesses.resize(n);
  dte::parallel_for(static_cast<int>(n), [&](int i) {
    auto lo = dte::makarov_lower(cfg.f0, cfg.f1, deltas[i]);
    auto hi = dte::makarov_upper(cfg.f0, cfg.f1, deltas[i]);
    makarov.lower[i] = lo.value;
    makarov.upper[i] = hi.value;
    makarov.witnesses[i].lower_arg = lo.arg;
    makarov.witnesses[i].upper_arg = hi.arg;
  });
  makarov.enforce_monotone();

  std::vector<RowBounds> restricted(n);
  using Kind = dte::RestrictionSpec::Kind;
  dte::parallel_for(static_cast<int>(n), [&](int i) {
    const double d = deltas[i];
    RowBounds row;
    switch (cfg.restriction.kind) {
      case Kind::None: {
        row.restricted_lower = makarov.lower[i];
        row.restricted_upper = makarov.upper[i];
        break;
      }
      case Kind::Mtr: {
        dte::MtrResult r = dte::mtr_lower(cfg.f0, cfg.f1, d, cfg.opts);
        row.restricted_lower = r.value;
        row.restricted_upper = dte::mtr_upper(cfg.f0, cfg.f1, d);
        row.witness["triangle_sequence"] = sequence_to_json(r.seq.base_points);
        row.witness["warm_value"] = r.warm_value;
        row.witness["K"] = r.K;
        if (r.dominance_warning) row.witness["dominance_warning"] = true;
        break;
      }
      case Kind::Convex:
      case Kind::Concave: {
        const bool concave = cfg.restriction.kind == Kind::Concave;
        auto eval_one = [&](const MarginalDistribution& f0w, const MarginalDistribution& f1w,
                            double w) {
          dte::ShapeContext ctx = cfg.restriction.shape;
          ctx.w = w;
          return concave ? dte::concave_bounds(f0w, f1w, d, ctx, cfg.opts)
                         : dte::convex_bounds(f0w, f1w, d, ctx, cfg.opts);
        };
        dte::ShapeBounds b = eval_one(cfg.f0, cfg.f1, cfg.restriction.shape.w);
        row.restricted_lower = b.lower;
        row.restricted_upper = b.upper;
        row.witness["lower_sequence"] = sequence_to_json(b.lower_seq.base_points);
        row.witness["upper_sequence"] = sequence_to_json(b.upper_seq);
        break;
      }
      case Kind::Roy: {
        dte::RoyBounds b = dte::roy_bounds(cfg.restriction.roy, d, cfg.opts);
        row.restricted_lower = b.lower;
        row.restricted_upper = b.upper;
        if (b.crossed) row.witness["crossed"] = true;
        break;
      }
    }
    restricted[i] = std::move(row);
  });
  // Restricted curves inherit CDF monotonicity.
  for (Eigen::Index i = 1; i < n; ++i)
    restricted[i].restricted_lower =
        std::max(restricted[i].restricted_lower, restricted[i - 1].restricted_lower);
  for (Eigen::Index i = n - 1; i > 0; --i)
    restricted[i - 1].restricted_upper =
        std::min(restricted[i - 1].restricted_upper, restricted[i].restricted_upper);

  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot open output file: " + out_path);
  out << "delta,makarov_lower,makarov_upper,restricted_lower,restricted_upper\n";
  for (Eigen::Index i = 0; i < n; ++i) {
    out << g12(deltas[i]) << ',' << g12(makarov.lower[i]) << ',' << g12(makarov.upper[i]) << ','
        << g12(restricted[i].restricted_lower) << ',' << g12(restricted[i].restricted_upper)
        << '\n';
  }
  out.close();

  json sidecar;
  sidecar["options"] = {{"epsilon_k", cfg.opts.epsilon_K},
                        {"smoothing_h", cfg.opts.smoothing_h},
                        {"multistarts", cfg.opts.multistarts},
                        {"seed", cfg.opts.rng_seed},
                        {"y_grid", cfg.opts.y_grid},
                        {"refine_max_window", cfg.opts.refine_max_window}};
  json rows = json::array();
  for (Eigen::Index i = 0; i < n; ++i) {
    json r;
    r["delta"] = deltas[i];
    r["makarov_lower_y"] = makarov.witnesses[i].lower_arg;
    r["makarov_upper_y"] = makarov.witnesses[i].upper_arg;
    if (!restricted[i].witness.is_null()) r["restricted"] = restricted[i].witness;
    rows.push_back(std::move(r));
  }
  sidecar["rows"] = std::move(rows);
  std::ofstream side(out_path + ".witnesses.json");
  side << sidecar.dump(2) << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

struct OracleCase {
  std::string label;
  MarginalDistribution f0, f1;
  dte::RestrictionSpec mask_spec;
  // formula bounds at a given delta
  std::function<std::pair<double, double>(double)> formula;
};

int cmd_oracle_check(const dte::RunConfig& cfg, const std::vector<int>& grid_sizes,
                     double tolerance, const std::string& out_path) {
  using Kind = dte::RestrictionSpec::Kind;
  const Eigen::VectorXd deltas = delta_grid(cfg.delta_min, cfg.delta_max, cfg.steps);

  std::vector<OracleCase> cases;
  switch (cfg.restriction.kind) {
    case Kind::None:
      cases.push_back({"none", cfg.f0, cfg.f1, dte::RestrictionSpec::none(),
                       [&](double d) {
                         return std::make_pair(dte::makarov_lower(cfg.f0, cfg.f1, d).value,
                                               dte::makarov_upper(cfg.f0, cfg.f1, d).value);
                       }});
      break;
    case Kind::Mtr:
      cases.push_back({"mtr", cfg.f0, cfg.f1, dte::RestrictionSpec::mtr(),
                       [&](double d) {
                         return std::make_pair(dte::mtr_lower(cfg.f0, cfg.f1, d, cfg.opts).value,
                                               dte::mtr_upper(cfg.f0, cfg.f1, d));
                       }});
      break;
    case Kind::Concave:
    case Kind::Convex: {
      const bool concave = cfg.restriction.kind == Kind::Concave;
      dte::RestrictionSpec spec = concave
                                      ? dte::RestrictionSpec::concave(cfg.restriction.shape)
                                      : dte::RestrictionSpec::convex(cfg.restriction.shape);
      cases.push_back({concave ? "concave" : "convex", cfg.f0, cfg.f1, spec,
                       [&cfg, concave](double d) {
                         dte::ShapeBounds b =
                             concave ? dte::concave_bounds(cfg.f0, cfg.f1, d,
                                                           cfg.restriction.shape, cfg.opts)
                                     : dte::convex_bounds(cfg.f0, cfg.f1, d,
                                                          cfg.restriction.shape, cfg.opts);
                         return std::make_pair(b.lower, b.upper);
                       }});
      break;
    }
    case Kind::Roy: {
      for (const auto& pt : cfg.restriction.roy.points) {
        for (int d2 = 0; d2 < 2; ++d2) {
          std::ostringstream label;
          label << "roy d=" << d2 << " z=" << pt.z;
          const auto& ctx = cfg.restriction.roy;
          double z = pt.z;
          cases.push_back({label.str(), pt.get(0, d2), pt.get(1, d2),
                           dte::RestrictionSpec::roy(pt.m_c, d2),
                           [&ctx, d2, z, &cfg](double d) {
                             return dte::roy_conditional_bounds(ctx, d2, z, d, cfg.opts);
                           }});
        }
      }
      break;
    }
  }

  std::ofstream csv;
  if (!out_path.empty()) {
    csv.open(out_path);
    csv << "case,n,delta,side,formula,lp,gap\n";
  }
  bool pass = true;
  const int largest_n = *std::max_element(grid_sizes.begin(), grid_sizes.end());
  for (const auto& oc : cases) {
    const double lo = std::min(oc.f0.support_lo(), oc.f1.support_lo());
    const double hi = std::max(oc.f0.support_hi(), oc.f1.support_hi());
    for (int gn : grid_sizes) {
      dte::DiscreteMarginal mu0 = dte::discretize(oc.f0, gn, lo, hi);
      dte::DiscreteMarginal mu1 = dte::discretize(oc.f1, gn, lo, hi);
      dte::Mask mask = dte::build_mask(mu0.points, mu1.points, oc.mask_spec);
      dte::Feasibility feas = dte::check_feasibility(mu0, mu1, mask);
      if (!feas.feasible) {
        std::cerr << "infeasible (" << oc.label << ", n=" << gn << "): " << feas.certificate
                  << "\n";
        return kExitInfeasible;
      }
      for (Eigen::Index i = 0; i < deltas.size(); ++i) {
        double d = deltas[i];
        auto [f_lo, f_hi] = oc.formula(d);
        double lp_lo =
            dte::solve_transport_lp(mu0, mu1, mask, d, dte::Direction::MinBelow).value;
        double lp_hi =
            dte::solve_transport_lp(mu0, mu1, mask, d, dte::Direction::MaxBelow).value;
        double gap_lo = std::fabs(f_lo - lp_lo);
        double gap_hi = std::fabs(f_hi - lp_hi);
        std::cout << oc.label << " n=" << gn << " delta=" << g12(d) << " lower: formula="
                  << g12(f_lo) << " lp=" << g12(lp_lo) << " gap=" << g12(gap_lo)
                  << " | upper: formula=" << g12(f_hi) << " lp=" << g12(lp_hi)
                  << " gap=" << g12(gap_hi) << "\n";
        if (csv.is_open()) {
          csv << oc.label << ',' << gn << ',' << g12(d) << ",lower," << g12(f_lo) << ','
              << g12(lp_lo) << ',' << g12(gap_lo) << '\n';
          csv << oc.label << ',' << gn << ',' << g12(d) << ",upper," << g12(f_hi) << ','
              << g12(lp_hi) << ',' << g12(gap_hi) << '\n';
        }
        if (gn == largest_n && (gap_lo > tolerance || gap_hi > tolerance)) pass = false;
      }
    }
  }
  std::cout << (pass ? "oracle-check: PASS" : "oracle-check: FAIL") << " (tolerance " << tolerance
            << " at n=" << largest_n << ")\n";
  return pass ? 0 : kExitComputation;
}

// ---------------------------------------------------------------------------

int cmd_replicate_section4(const std::string& out_dir, std::uint64_t seed) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  dte::MtrOptions opts;
  opts.rng_seed = seed;
  opts.multistarts = 8;  // refinement never beats the warm start here

  for (int k1 : {1, 5, 10}) {
    for (double k2 : {1.0, 10.0, 40.0}) {
      MarginalDistribution f0 = MarginalDistribution::normal(0.0, k2);
      MarginalDistribution f1 = MarginalDistribution::chi2_normal_convolution(k1, k2);
      // Grid to the 0.999 quantile of the treatment-effect distribution.
      MarginalDistribution effect = MarginalDistribution::chi_square(k1);
      Eigen::VectorXd deltas = delta_grid(0.0, effect.quantile(0.999), 81);

      const auto n = deltas.size();
      Eigen::VectorXd mk_lo(n), mk_hi(n), mtr_lo(n), truth(n);
      dte::parallel_for(static_cast<int>(n), [&](int i) {
        double d = deltas[i];
        truth[i] = effect.cdf(d);
        mk_lo[i] = dte::makarov_lower(f0, f1, d).value;
        mk_hi[i] = dte::makarov_upper(f0, f1, d).value;
        mtr_lo[i] = dte::mtr_lower(f0, f1, d, opts).value;
      });
      for (Eigen::Index i = 1; i < n; ++i) {
        mk_lo[i] = std::max(mk_lo[i], mk_lo[i - 1]);
        mtr_lo[i] = std::max(mtr_lo[i], mtr_lo[i - 1]);
      }
      for (Eigen::Index i = n - 1; i > 0; --i) mk_hi[i - 1] = std::min(mk_hi[i - 1], mk_hi[i]);

      for (Eigen::Index i = 0; i < n; ++i) {
        const double slack = 1e-6;
        if (mk_lo[i] > mtr_lo[i] + slack || mtr_lo[i] > truth[i] + slack ||
            truth[i] > mk_hi[i] + slack) {
          std::cerr << "sandwich violation at k1=" << k1 << " k2=" << k2
                    << " delta=" << deltas[i] << ": " << g12(mk_lo[i]) << " <= "
                    << g12(mtr_lo[i]) << " <= " << g12(truth[i]) << " <= " << g12(mk_hi[i])
                    << "\n";
          return kExitComputation;
        }
      }

      std::ostringstream name;
      name << "section4_k1_" << k1 << "_k2_" << static_cast<int>(k2) << ".csv";
      std::ofstream out(fs::path(out_dir) / name.str());
      out << "delta,true_dte,makarov_lower,makarov_upper,mtr_lower\n";
      for (Eigen::Index i = 0; i < n; ++i)
        out << g12(deltas[i]) << ',' << g12(truth[i]) << ',' << g12(mk_lo[i]) << ','
            << g12(mk_hi[i]) << ',' << g12(mtr_lo[i]) << '\n';
      std::cout << "wrote " << (fs::path(out_dir) / name.str()).string() << "\n";
    }
  }
  return 0;
}

// ---------------------------------------------------------------------------

int cmd_fit_mixture(const json& config, const std::string& out_path) {
  MarginalDistribution target = dte::distribution_from_json(config.at("target"));
  int max_components = config.value("max_components", 3);
  double threshold = config.value("ks_threshold", 0.01);
  int grid_points = config.value("grid_points", 201);
  Eigen::VectorXd grid =
      Eigen::VectorXd::LinSpaced(grid_points, target.support_lo(), target.support_hi());
  dte::MixtureFit fit = dte::fit_normal_mixture(target, grid, max_components, threshold);
  std::cout << "fitted " << fit.order << "-component mixture, sup distance "
            << g12(fit.sup_distance) << "\n";
  json spec;
  spec["kind"] = "normal_mixture";
  spec["weights"] = sequence_to_json(fit.mixture.mixture_weights());
  spec["means"] = sequence_to_json(fit.mixture.mixture_means());
  spec["variances"] = sequence_to_json(fit.mixture.mixture_variances());
  spec["sup_distance"] = fit.sup_distance;
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    out << spec.dump(2) << '\n';
  } else {
    std::cout << spec.dump(2) << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sharp bounds on the distribution of treatment effects under support restrictions"};
  app.require_subcommand(1);

  std::string config_path, out_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  double tolerance = 0.02;
  std::vector<int> grid_sizes{50, 100, 200};

  auto* bounds = app.add_subcommand("bounds", "Compute bound curves and write CSV");
  bounds->add_option("--config", config_path, "RunConfig JSON path")->required();
  bounds->add_option("--out", out_path, "Output CSV path");
  bounds->add_option("--seed", seed, "RNG seed override")->each([&](const std::string&) {
    seed_set = true;
  });

  auto* oracle = app.add_subcommand("oracle-check", "Compare dual formulas with the LP oracle");
  oracle->add_option("--config", config_path, "RunConfig JSON path")->required();
  oracle->add_option("--out", out_path, "Report CSV path");
  oracle->add_option("--tolerance", tolerance, "Gap tolerance at the largest grid");
  oracle->add_option("--grid", grid_sizes, "Discretization sizes")->delimiter(',');
  oracle->add_option("--seed", seed, "RNG seed override")->each([&](const std::string&) {
    seed_set = true;
  });

  auto* sec4 = app.add_subcommand("replicate-section4", "Synthetic chi-square/normal study");
  sec4->add_option("--out", out_path, "Output directory");
  sec4->add_option("--seed", seed, "RNG seed");

  auto* fitm = app.add_subcommand("fit-mixture", "Fit a normal-mixture CDF approximation");
  fitm->add_option("--config", config_path, "Fit config JSON path")->required();
  fitm->add_option("--out", out_path, "Output spec path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (bounds->parsed() || oracle->parsed()) {
      dte::RunConfig cfg;
      try {
        cfg = dte::run_config_from_json(load_config(config_path));
      } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
      }
      if (seed_set) cfg.opts.rng_seed = seed;
      std::string out = !out_path.empty() ? out_path
                        : !cfg.out_path.empty() ? cfg.out_path
                                                : "bounds.csv";
      if (bounds->parsed()) return cmd_bounds(cfg, out);
      for (int gn : grid_sizes)
        if (gn > 500 || gn < 2) {
          std::cerr << "config error: grid sizes must lie in [2,500]\n";
          return kExitConfig;
        }
      return cmd_oracle_check(cfg, grid_sizes, tolerance, out_path);
    }
    if (sec4->parsed()) {
      return cmd_replicate_section4(out_path.empty() ? "." : out_path, seed);
    }
    if (fitm->parsed()) {
      json config;
      try {
        config = load_config(config_path);
      } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
      }
      return cmd_fit_mixture(config, out_path);
    }
  } catch (const dte::InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitComputation;
  }
  return 0;
}

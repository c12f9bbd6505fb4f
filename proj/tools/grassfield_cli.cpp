// grassfield: adaptive sampling of parametric fields by subspace distance.
//
// Exit codes: 0 success (budget exhaustion included), 1 internal error,
// 2 configuration or input error, 3 model failure, 4 point outside the mesh.

#include "grassfield/campaign_io.hpp"
#include "grassfield/compare.hpp"
#include "grassfield/config.hpp"
#include "grassfield/grassfield.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <iostream>
#include <sstream>

namespace gf = grassfield;

namespace {

int exit_code(const gf::Error& e, bool model_context) {
  switch (e.code()) {
    case gf::ErrorCode::ConfigError:
    case gf::ErrorCode::AmbientMismatch:
    case gf::ErrorCode::RankMismatch:
    case gf::ErrorCode::DomainError:
    case gf::ErrorCode::DimensionUnsupported:
    case gf::ErrorCode::IoError:
      return 2;
    case gf::ErrorCode::ModelFailure:
    case gf::ErrorCode::ExchangeTimeout:
      return 3;
    case gf::ErrorCode::MalformedSnapshot:
      return model_context ? 3 : 2;
    case gf::ErrorCode::OutsideSimplex:
      return 4;
    default:
      return model_context ? 3 : 1;
  }
}

int report(const gf::Error& e, bool model_context) {
  std::cerr << "error [" << gf::to_string(e.code()) << "]: " << e.what() << '\n';
  return exit_code(e, model_context);
}

gf::ParamPoint parse_point(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(cell, &used));
      if (used != cell.size()) throw std::invalid_argument(cell);
    } catch (const std::exception&) {
      throw gf::Error(gf::ErrorCode::ConfigError, "bad coordinate '" + cell + "' in --xi");
    }
  }
  if (v.empty()) throw gf::Error(gf::ErrorCode::ConfigError, "--xi is empty");
  return Eigen::Map<const gf::Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::string angles_line(const gf::PrincipalAngleSet& a) {
  std::string s;
  for (double t : a.angles) s += (s.empty() ? "" : " ") + gf::io::fmt(t);
  return s;
}

struct RunArgs {
  std::string config;
  std::vector<std::string> overrides;
  unsigned jobs = 0;
  std::string out;
};

gf::RunConfig resolve(const RunArgs& a) {
  auto overrides = a.overrides;
  if (a.jobs > 0) overrides.push_back("campaign.jobs=" + std::to_string(a.jobs));
  if (!a.out.empty()) overrides.push_back("output=" + nlohmann::json(a.out).dump());
  return gf::load_run_config(a.config, overrides);
}

int cmd_run(const RunArgs& a) {
  gf::RunConfig rc;
  try {
    rc = resolve(a);
  } catch (const gf::Error& e) {
    return report(e, false);
  }
  try {
    const auto model = gf::make_model(rc.model);
    const auto res = gf::run_campaign(*model, rc.campaign);
    gf::io::write_results(rc.output, res, rc.resolved);
    std::cout << "status " << gf::to_string(res.status) << "\n"
              << "evaluations " << res.evaluations() << "\n"
              << "levels " << res.levels.size() << "\n"
              << "mean_distance " << gf::io::fmt(res.levels.front().mean_distance) << " -> "
              << gf::io::fmt(res.levels.back().mean_distance) << "\n"
              << "results " << rc.output.string() << "\n";
    return 0;
  } catch (const gf::Error& e) {
    return report(e, true);
  }
}

int cmd_distance(const std::string& file_a, const std::string& file_b, const std::string& metric_name,
                 int rank, bool all) {
  try {
    const auto metric = gf::parse_metric(metric_name);
    const auto sa = gf::io::read_snapshot(file_a);
    const auto sb = gf::io::read_snapshot(file_b);
    if (sa.field.rows() != sb.field.rows()) {
      throw gf::Error(gf::ErrorCode::AmbientMismatch, "fields have " + std::to_string(sa.field.rows()) +
                                                          " and " + std::to_string(sb.field.rows()) + " rows");
    }
    gf::RankPolicy policy = gf::ToleranceRank{};
    if (rank > 0) policy = gf::GlobalRank{rank};
    const auto da = gf::decompose(sa, policy);
    const auto db = gf::decompose(sb, policy);
    const auto angles = gf::principal_angles(da.left, db.left);
    const bool equal = da.rank() == db.rank();
    std::cout << "ranks " << da.rank() << ' ' << db.rank() << "\n"
              << "principal_angles " << angles_line(angles) << "\n";
    if (!all) {
      const double d = equal ? gf::distance_equidim(metric, da.left, db.left) : gf::distance_infinite(metric, da.left, db.left);
      std::cout << gf::to_string(metric) << ' ' << gf::io::fmt(d) << "\n";
      return 0;
    }
    for (auto m : {gf::MetricKind::Grassmann, gf::MetricKind::Chordal, gf::MetricKind::Procrustes}) {
      std::cout << gf::to_string(m) << " equidim "
                << (equal ? gf::io::fmt(gf::distance_equidim(m, da.left, db.left)) : std::string("n/a"))
                << " infinite " << gf::io::fmt(gf::distance_infinite(m, da.left, db.left)) << "\n";
    }
    if (equal) {
      std::cout << "procrustes factor2 "
                << gf::io::fmt(gf::distance_equidim(gf::MetricKind::Procrustes, da.left, db.left,
                                                    gf::ProcrustesConvention::Factor2))
                << "\n";
    }
    return 0;
  } catch (const gf::Error& e) {
    return report(e, false);
  }
}

int cmd_interpolate(const std::string& dir, const std::string& xi_text, const std::string& out, bool verify) {
  gf::io::StoredCampaign sc;
  gf::ParamPoint xi;
  try {
    sc = gf::io::read_results(dir);
    xi = parse_point(xi_text);
    if (xi.size() != sc.mesh.dims()) {
      throw gf::Error(gf::ErrorCode::ConfigError, "--xi has " + std::to_string(xi.size()) + " coordinates, mesh has " +
                                                      std::to_string(sc.mesh.dims()));
    }
    for (Eigen::Index i = 0; i < xi.size(); ++i)
      if (!(xi(i) >= 0.0 && xi(i) <= 1.0)) throw gf::Error(gf::ErrorCode::ConfigError, "--xi lies outside [0, 1]^d");
  } catch (const gf::Error& e) {
    return report(e, false);
  }
  try {
    const auto k = sc.mesh.locate(xi);
    if (!k) throw gf::Error(gf::ErrorCode::OutsideSimplex, "xi " + gf::ModelError::format(xi) + " is outside every simplex");
    const auto& s = sc.mesh.simplices()[*k];
    const auto& cfg = sc.config.campaign;
    const auto predicted = gf::predict_in_element(sc.mesh, s, sc.decompositions, xi, cfg.singular_mode, cfg.tolerances);
    gf::FieldSnapshot field{gf::reconstruct(predicted), xi};
    if (std::filesystem::path(out).extension() == ".csv") {
      gf::io::write_snapshot_csv(out, field);
    } else {
      gf::io::write_snapshot(out, field);
    }
    std::cout << "element " << *k << "\n"
              << "rank " << predicted.rank() << "\n"
              << "written " << out << "\n";
    if (verify) {
      const auto model = gf::make_model(sc.config.model);
      const auto actual = model->evaluate(xi);
      const auto exact = gf::decompose(actual, cfg.rank_policy);
      const double theta = gf::vertex_error(exact, predicted, cfg.metric, cfg.rank_policy);
      const double err = (actual.field - field.field).norm();
      std::cout << "theta " << gf::io::fmt(theta) << "\n"
                << "frobenius_error " << gf::io::fmt(err) << "\n"
                << "relative_frobenius_error " << gf::io::fmt(err / std::max(actual.field.norm(), 1e-300)) << "\n";
    }
    return 0;
  } catch (const gf::Error& e) {
    return report(e, verify);
  }
}

int cmd_compare(const RunArgs& a, std::size_t budget) {
  gf::RunConfig rc;
  try {
    rc = resolve(a);
    if (budget < (std::size_t{1} << rc.campaign.dims) + 1) {
      throw gf::Error(gf::ErrorCode::ConfigError, "--budget must cover the initial design");
    }
  } catch (const gf::Error& e) {
    return report(e, false);
  }
  try {
    const auto model = gf::make_model(rc.model);
    const auto rep = gf::compare_random(*model, rc.campaign, budget);
    gf::io::write_comparison(rc.output, rep, rc.resolved);
    const auto line = [](const char* name, const gf::DesignEvaluation& d) {
      std::cout << name << " points " << d.mesh.points().size() << " elements " << d.rows.size() << " mean_theta "
                << gf::io::fmt(d.summary.mean_theta) << " std_theta " << gf::io::fmt(d.summary.std_theta)
                << " mean_frobenius " << gf::io::fmt(d.summary.mean_frobenius) << " std_frobenius "
                << gf::io::fmt(d.summary.std_frobenius) << "\n";
    };
    line("adaptive", rep.adaptive_errors);
    line("random", rep.random_errors);
    std::cout << "results " << rc.output.string() << "\n";
    return 0;
  } catch (const gf::Error& e) {
    return report(e, true);
  }
}

int cmd_export_mesh(const std::string& results, int initial, const std::string& out) {
  try {
    if (results.empty() == (initial == 0)) {
      throw gf::Error(gf::ErrorCode::ConfigError, "give exactly one of --results or --initial");
    }
    const auto mesh = results.empty() ? gf::initial_design(initial) : gf::io::read_mesh(results);
    gf::io::write_mesh(out, mesh);
    std::cout << "points " << mesh.points().size() << "\n"
              << "simplices " << mesh.simplices().size() << "\n"
              << "written " << out << "\n";
    return 0;
  } catch (const gf::Error& e) {
    return report(e, false);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive parameter-space sampling driven by subspace distances"};
  app.require_subcommand(1);

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "Run an adaptive campaign");
  run->add_option("config", run_args.config, "JSON config file")->required()->check(CLI::ExistingFile);
  run->add_option("--set", run_args.overrides, "Override a config key, e.g. --set alpha=0.7");
  run->add_option("--jobs", run_args.jobs, "Parallel model evaluations");
  run->add_option("--out", run_args.out, "Results directory (overrides config output)");

  std::string file_a, file_b, metric = "grassmann";
  int rank = 0;
  bool all = false;
  auto* dist = app.add_subcommand("distance", "Principal angles and distance between two snapshots");
  dist->add_option("a", file_a, "First snapshot (.gfld or .csv)")->required()->check(CLI::ExistingFile);
  dist->add_option("b", file_b, "Second snapshot (.gfld or .csv)")->required()->check(CLI::ExistingFile);
  dist->add_option("--metric", metric, "grassmann, chordal or procrustes");
  dist->add_option("--rank", rank, "Truncate both to this rank (default: tolerance rank)")->check(CLI::PositiveNumber);
  dist->add_flag("--all", all, "Print every metric in both forms");

  std::string results_dir, xi_text, interp_out = "interpolated.gfld";
  bool verify = false;
  auto* interp = app.add_subcommand("interpolate", "Interpolate a field from a finished campaign");
  interp->add_option("results", results_dir, "Results directory")->required()->check(CLI::ExistingDirectory);
  interp->add_option("--xi", xi_text, "Comma-separated point in [0,1]^d")->required();
  interp->add_option("--out", interp_out, "Output snapshot (.gfld or .csv)");
  interp->add_flag("--verify", verify, "Evaluate the model and print the errors");

  RunArgs cmp_args;
  std::size_t budget = 300;
  auto* cmp = app.add_subcommand("compare-random", "Compare adaptive and uniform-random designs");
  cmp->add_option("config", cmp_args.config, "JSON config file")->required()->check(CLI::ExistingFile);
  cmp->add_option("--budget", budget, "Evaluations per design");
  cmp->add_option("--set", cmp_args.overrides, "Override a config key");
  cmp->add_option("--jobs", cmp_args.jobs, "Parallel model evaluations");
  cmp->add_option("--out", cmp_args.out, "Report directory (overrides config output)");

  std::string export_results, export_out = "mesh";
  int initial = 0;
  auto* exp = app.add_subcommand("export-mesh", "Write points.csv and simplices.csv");
  exp->add_option("--results", export_results, "Results directory to read the mesh from");
  exp->add_option("--initial", initial, "Write the initial design for this n_d instead");
  exp->add_option("--out", export_out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  if (*run) return cmd_run(run_args);
  if (*dist) return cmd_distance(file_a, file_b, metric, rank, all);
  if (*interp) return cmd_interpolate(results_dir, xi_text, interp_out, verify);
  if (*cmp) return cmd_compare(cmp_args, budget);
  if (*exp) return cmd_export_mesh(export_results, initial, export_out);
  return 2;
}

#pragma once

// Results directory of a campaign:
//
//   samples.csv       id,level,parent,rank,theta,xi_0..xi_{d-1}
//   points.csv        index,x_0..x_{d-1}          (final mesh)
//   simplices.csv     index,v_0..v_d              (final mesh)
//   scores.csv        level,element,v_0..v_d,total,converged,refined,d_i_j...
//   errors.csv        point,level,theta           (refinement samples only)
//   convergence.csv   level,n_points,n_elements,mean_distance
//   audit.ndjson      one JSON record per level
//   summary.json      status and totals, "schema_version": 1
//   config.json       effective configuration
//   snapshots/snap_<id>.gfld
//
// Reals are written with 17 significant digits; empty cells mean "none".

#include "grassfield/compare.hpp"
#include "grassfield/config.hpp"
#include "grassfield/refinement.hpp"
#include "grassfield/snapshot_io.hpp"

#include "json.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace grassfield::io {

inline constexpr int kSummarySchemaVersion = 1;

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {

inline std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  return out;
}

inline std::string coord_header(const char* prefix, Eigen::Index n) {
  std::string s;
  for (Eigen::Index i = 0; i < n; ++i) s += std::string(",") + prefix + std::to_string(i);
  return s;
}

inline std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(cell);
    if (!line.empty() && line.back() == ',') row.emplace_back();
    rows.push_back(std::move(row));
  }
  return rows;
}

inline nlohmann::json vec_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

}  // namespace detail

inline void write_points(const std::filesystem::path& path, const SimplexMesh& mesh) {
  auto out = detail::open_out(path);
  out << "index" << detail::coord_header("x_", mesh.dims()) << '\n';
  for (std::size_t i = 0; i < mesh.points().size(); ++i) {
    out << i;
    const auto& p = mesh.point(i);
    for (Eigen::Index j = 0; j < p.size(); ++j) out << ',' << fmt(p(j));
    out << '\n';
  }
}

inline void write_simplices(const std::filesystem::path& path, const SimplexMesh& mesh) {
  auto out = detail::open_out(path);
  out << "index" << detail::coord_header("v_", mesh.dims() + 1) << '\n';
  for (std::size_t k = 0; k < mesh.simplices().size(); ++k) {
    out << k;
    for (auto v : mesh.simplices()[k].vertices) out << ',' << v;
    out << '\n';
  }
}

inline void write_mesh(const std::filesystem::path& dir, const SimplexMesh& mesh) {
  std::filesystem::create_directories(dir);
  write_points(dir / "points.csv", mesh);
  write_simplices(dir / "simplices.csv", mesh);
}

inline SimplexMesh read_mesh(const std::filesystem::path& dir) {
  const auto pts = detail::read_csv(dir / "points.csv");
  const auto sims = detail::read_csv(dir / "simplices.csv");
  if (pts.size() < 2 || sims.size() < 2) throw Error(ErrorCode::IoError, "empty mesh tables in " + dir.string());
  const auto dims = static_cast<int>(pts[0].size()) - 1;
  try {
    std::vector<ParamPoint> points;
    for (std::size_t i = 1; i < pts.size(); ++i) {
      if (pts[i].size() != pts[0].size()) throw Error(ErrorCode::IoError, "ragged points.csv");
      ParamPoint p(dims);
      for (int j = 0; j < dims; ++j) p(j) = std::stod(pts[i][static_cast<std::size_t>(j) + 1]);
      points.push_back(p);
    }
    std::vector<Simplex> simplices;
    for (std::size_t i = 1; i < sims.size(); ++i) {
      if (sims[i].size() != static_cast<std::size_t>(dims) + 2) throw Error(ErrorCode::IoError, "ragged simplices.csv");
      Simplex s;
      for (std::size_t j = 1; j < sims[i].size(); ++j) s.vertices.push_back(std::stoull(sims[i][j]));
      simplices.push_back(std::move(s));
    }
    return SimplexMesh::from_triangulation(dims, std::move(points), std::move(simplices));
  } catch (const std::logic_error& e) {
    throw Error(ErrorCode::IoError, std::string("bad number in mesh tables: ") + e.what());
  }
}

inline std::filesystem::path snapshot_path(const std::filesystem::path& dir, std::size_t id) {
  return dir / "snapshots" / ("snap_" + std::to_string(id) + ".gfld");
}

inline void write_samples(const std::filesystem::path& path, const CampaignResult& res) {
  auto out = detail::open_out(path);
  out << "id,level,parent,rank,theta" << detail::coord_header("xi_", res.mesh.dims()) << '\n';
  for (const auto& s : res.samples) {
    out << s.id << ',' << s.level << ',';
    if (s.parent) out << *s.parent;
    out << ',' << s.rank << ',';
    if (s.theta) out << fmt(*s.theta);
    for (Eigen::Index j = 0; j < s.xi.size(); ++j) out << ',' << fmt(s.xi(j));
    out << '\n';
  }
}

inline void write_scores(const std::filesystem::path& path, const CampaignResult& res) {
  auto out = detail::open_out(path);
  const int nv = res.mesh.dims() + 1;
  out << "level,element" << detail::coord_header("v_", nv) << ",total,converged,refined";
  for (int i = 0; i < nv; ++i)
    for (int j = i + 1; j < nv; ++j) out << ",d_" << i << '_' << j;
  out << '\n';
  for (const auto& lvl : res.levels) {
    std::vector<char> refined(lvl.elements.size(), 0);
    for (auto k : lvl.refined) refined[k] = 1;
    for (std::size_t k = 0; k < lvl.elements.size(); ++k) {
      out << lvl.level << ',' << k;
      for (auto v : lvl.elements[k].vertices) out << ',' << v;
      out << ',' << fmt(lvl.scores[k].total) << ',' << int(lvl.converged[k]) << ',' << int(refined[k]);
      for (double d : lvl.scores[k].pairwise) out << ',' << fmt(d);
      out << '\n';
    }
  }
}

inline void write_errors(const std::filesystem::path& path, const CampaignResult& res) {
  auto out = detail::open_out(path);
  out << "point,level,theta\n";
  for (const auto& s : res.samples)
    if (s.theta) out << s.id << ',' << s.level << ',' << fmt(*s.theta) << '\n';
}

inline void write_convergence(const std::filesystem::path& path, const CampaignResult& res) {
  auto out = detail::open_out(path);
  out << "level,n_points,n_elements,mean_distance\n";
  for (const auto& l : res.levels)
    out << l.level << ',' << l.n_points << ',' << l.n_elements << ',' << fmt(l.mean_distance) << '\n';
}

inline void write_audit(const std::filesystem::path& path, const CampaignResult& res) {
  auto out = detail::open_out(path);
  for (const auto& l : res.levels) {
    nlohmann::json j;
    j["level"] = l.level;
    j["n_elements"] = l.n_elements;
    j["n_points"] = l.n_points;
    j["mean_distance"] = l.mean_distance;
    j["refined"] = l.refined;
    j["fallback_selection"] = l.fallback_selection;
    auto pts = nlohmann::json::array();
    for (auto id : l.new_points) {
      const auto& s = res.samples[id];
      pts.push_back({{"id", id}, {"xi", detail::vec_json(s.xi)},
                     {"theta", s.theta ? nlohmann::json(*s.theta) : nlohmann::json()}});
    }
    j["new_points"] = pts;
    out << j.dump() << '\n';
  }
}

inline nlohmann::json summary_json(const CampaignResult& res) {
  nlohmann::json j;
  j["schema_version"] = kSummarySchemaVersion;
  j["status"] = std::string(to_string(res.status));
  j["budget_exhausted"] = res.status == CampaignStatus::BudgetExhausted;
  j["evaluations"] = res.evaluations();
  j["levels"] = res.levels.size();
  j["n_points"] = res.mesh.points().size();
  j["n_elements"] = res.mesh.simplices().size();
  j["mean_distance_first"] = res.levels.front().mean_distance;
  j["mean_distance_final"] = res.levels.back().mean_distance;
  j["log"] = res.log;
  return j;
}

/// Writes every result table plus the snapshots into `dir`.
inline void write_results(const std::filesystem::path& dir, const CampaignResult& res, const nlohmann::json& config) {
  std::filesystem::create_directories(dir / "snapshots");
  write_samples(dir / "samples.csv", res);
  write_mesh(dir, res.mesh);
  write_scores(dir / "scores.csv", res);
  write_errors(dir / "errors.csv", res);
  write_convergence(dir / "convergence.csv", res);
  write_audit(dir / "audit.ndjson", res);
  detail::open_out(dir / "summary.json") << summary_json(res).dump(2) << '\n';
  detail::open_out(dir / "config.json") << config.dump(2) << '\n';
  for (std::size_t i = 0; i < res.snapshots.size(); ++i) write_snapshot(snapshot_path(dir, i), res.snapshots[i]);
}

/// What `interpolate` needs from a finished run.
struct StoredCampaign {
  RunConfig config;
  SimplexMesh mesh{1};
  std::vector<FieldSnapshot> snapshots;
  std::vector<SnapshotDecomposition> decompositions;
};

inline StoredCampaign read_results(const std::filesystem::path& dir) {
  StoredCampaign sc;
  sc.config = parse_run_config(load_json(dir / "config.json"), nullptr);
  sc.mesh = read_mesh(dir);
  for (std::size_t i = 0; i < sc.mesh.points().size(); ++i) {
    sc.snapshots.push_back(read_snapshot_binary(snapshot_path(dir, i)));
    sc.decompositions.push_back(decompose(sc.snapshots.back(), sc.config.campaign.rank_policy));
  }
  return sc;
}

inline void write_centroid_errors(const std::filesystem::path& path, const std::vector<CentroidError>& rows) {
  auto out = detail::open_out(path);
  const auto d = rows.empty() ? 0 : rows.front().centroid.size();
  out << "element" << detail::coord_header("xi_", d) << ",theta,frobenius,chart_failed\n";
  for (const auto& r : rows) {
    out << r.simplex;
    for (Eigen::Index j = 0; j < r.centroid.size(); ++j) out << ',' << fmt(r.centroid(j));
    out << ',' << fmt(r.theta) << ',' << fmt(r.frobenius) << ',' << int(r.chart_failed) << '\n';
  }
}

inline nlohmann::json summary_json(const ErrorSummary& s, std::size_t points, std::size_t elements) {
  return {{"points", points},          {"elements", elements},
          {"mean_theta", s.mean_theta}, {"std_theta", s.std_theta},
          {"mean_frobenius", s.mean_frobenius}, {"std_frobenius", s.std_frobenius}};
}

inline void write_comparison(const std::filesystem::path& dir, const ComparisonReport& rep, const nlohmann::json& config) {
  write_results(dir / "adaptive", rep.adaptive, config);
  write_mesh(dir / "random", rep.random_errors.mesh);
  write_centroid_errors(dir / "adaptive_errors.csv", rep.adaptive_errors.rows);
  write_centroid_errors(dir / "random_errors.csv", rep.random_errors.rows);
  nlohmann::json j;
  j["schema_version"] = kSummarySchemaVersion;
  j["budget"] = rep.budget;
  j["adaptive"] = summary_json(rep.adaptive_errors.summary, rep.adaptive_errors.mesh.points().size(),
                               rep.adaptive_errors.rows.size());
  j["random"] = summary_json(rep.random_errors.summary, rep.random_errors.mesh.points().size(),
                             rep.random_errors.rows.size());
  j["adaptive_status"] = std::string(to_string(rep.adaptive.status));
  detail::open_out(dir / "comparison.json") << j.dump(2) << '\n';
}

}  // namespace grassfield::io

#pragma once

// Adaptive versus uniform-random designs of equal size, judged by the
// interpolation error at every simplex centroid of each design's mesh.

#include "grassfield/refinement.hpp"

#include <cmath>
#include <numbers>
#include <vector>

namespace grassfield {

struct CentroidError {
  std::size_t simplex = 0;
  ParamPoint centroid;
  double theta = 0.0;
  double frobenius = 0.0;
  bool chart_failed = false;
};

struct ErrorSummary {
  double mean_theta = 0.0;
  double std_theta = 0.0;
  double mean_frobenius = 0.0;
  double std_frobenius = 0.0;
};

inline ErrorSummary summarize(const std::vector<CentroidError>& rows) {
  ErrorSummary s;
  if (rows.empty()) return s;
  const double n = static_cast<double>(rows.size());
  for (const auto& r : rows) {
    s.mean_theta += r.theta / n;
    s.mean_frobenius += r.frobenius / n;
  }
  for (const auto& r : rows) {
    s.std_theta += (r.theta - s.mean_theta) * (r.theta - s.mean_theta);
    s.std_frobenius += (r.frobenius - s.mean_frobenius) * (r.frobenius - s.mean_frobenius);
  }
  s.std_theta = std::sqrt(s.std_theta / n);
  s.std_frobenius = std::sqrt(s.std_frobenius / n);
  return s;
}

struct DesignEvaluation {
  SimplexMesh mesh{1};
  std::vector<SnapshotDecomposition> decompositions;
  std::vector<CentroidError> rows;
  ErrorSummary summary;
};

struct ComparisonReport {
  CampaignResult adaptive;
  DesignEvaluation adaptive_errors;
  DesignEvaluation random_errors;
  std::size_t budget = 0;
};

/// Corners, the centroid, then uniform points until `count` points exist.
inline SimplexMesh random_design(int dims, std::size_t count, std::uint64_t seed) {
  auto mesh = initial_design(dims);
  Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
  while (mesh.points().size() < count) {
    ParamPoint p(dims);
    for (int i = 0; i < dims; ++i) p(i) = rng.uniform();
    try {
      mesh.insert(p);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DuplicatePoint) throw;
    }
  }
  return mesh;
}

/// Interpolation error at the centroid of every simplex of `mesh`.
inline std::vector<CentroidError> centroid_errors(const Model& model, const SimplexMesh& mesh,
                                                  const std::vector<SnapshotDecomposition>& decomps,
                                                  const CampaignConfig& cfg) {
  const auto& simplices = mesh.simplices();
  return parallel_map<CentroidError>(simplices.size(), cfg.jobs, [&](std::size_t k) {
    CentroidError row;
    row.simplex = k;
    const auto& s = simplices[k];
    row.centroid = ParamPoint::Zero(mesh.dims());
    for (auto v : s.vertices) row.centroid += mesh.point(v);
    row.centroid /= static_cast<double>(s.vertices.size());

    FieldSnapshot actual = model.evaluate(row.centroid);
    actual.validate();
    const auto exact = decompose(actual, cfg.rank_policy);
    try {
      const auto predicted = predict_in_element(mesh, s, decomps, row.centroid, cfg.singular_mode,
                                                cfg.tolerances);
      row.theta = vertex_error(exact, predicted, cfg.metric, cfg.rank_policy);
      row.frobenius = (actual.field - reconstruct(predicted)).norm();
    } catch (const Error& e) {
      if (e.code() != ErrorCode::SingularProduct && e.code() != ErrorCode::NonPositiveSingular) throw;
      std::vector<SnapshotDecomposition> verts;
      for (auto v : s.vertices) verts.push_back(decomps[v]);
      row.chart_failed = true;
      row.theta = std::numbers::pi / 2;
      row.frobenius = (actual.field - reconstruct(verts[default_origin(verts)])).norm();
    }
    return row;
  });
}

inline DesignEvaluation evaluate_design(const Model& model, SimplexMesh mesh, const CampaignConfig& cfg,
                                        std::vector<SnapshotDecomposition> decomps = {}) {
  DesignEvaluation out;
  if (decomps.empty()) {
    auto evals = detail::evaluate_all(model, mesh.points(), cfg.rank_policy, cfg.jobs);
    for (auto& e : evals) decomps.push_back(std::move(e.decomposition));
  }
  out.rows = centroid_errors(model, mesh, decomps, cfg);
  out.summary = summarize(out.rows);
  out.mesh = std::move(mesh);
  out.decompositions = std::move(decomps);
  return out;
}

/// Runs the adaptive campaign with the given budget, then a random design
/// with as many points as the campaign actually used.
inline ComparisonReport compare_random(const Model& model, CampaignConfig cfg, std::size_t budget) {
  cfg.budget = budget;
  ComparisonReport rep;
  rep.budget = budget;
  rep.adaptive = run_campaign(model, cfg);
  rep.adaptive_errors = evaluate_design(model, rep.adaptive.mesh, cfg, rep.adaptive.decompositions);
  rep.random_errors =
      evaluate_design(model, random_design(cfg.dims, rep.adaptive.evaluations(), cfg.seed), cfg);
  return rep;
}

}  // namespace grassfield

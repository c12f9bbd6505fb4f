#pragma once

// Adaptive refinement driven by subspace distances between the vertices of
// each element. One level: score every element, pick the high-score
// elements that are not yet converged, draw one new sample in each, measure
// how well the element interpolant predicted it, then insert the samples.

#include "grassfield/errors.hpp"
#include "grassfield/grassmann.hpp"
#include "grassfield/interpolation.hpp"
#include "grassfield/mesh.hpp"
#include "grassfield/models.hpp"
#include "grassfield/parallel.hpp"
#include "grassfield/random.hpp"
#include "grassfield/snapshot.hpp"

#include <cmath>
#include <numbers>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace grassfield {

struct CampaignConfig {
  int dims = 2;
  MetricKind metric = MetricKind::Grassmann;
  RankPolicy rank_policy = ToleranceRank{};
  double alpha = 0.80;
  double theta_ref = std::numbers::pi / 15.0;
  int max_levels = 100;
  std::uint64_t seed = 1;
  std::size_t budget = 200;
  unsigned jobs = 1;
  SamplingOptions sampling{};
  SingularValueMode singular_mode = SingularValueMode::AlignedCore;
  GeometryTolerances tolerances{};

  void validate() const {
    if (dims < 1 || dims > kMaxMeshDims) {
      throw Error(ErrorCode::ConfigError, "n_d must lie in [1, 6]");
    }
    if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::ConfigError, "alpha must lie in (0, 1)");
    if (!(theta_ref >= 0.0 && theta_ref <= std::numbers::pi / 2)) {
      throw Error(ErrorCode::ConfigError, "theta_ref must lie in [0, pi/2]");
    }
    if (max_levels < 1) throw Error(ErrorCode::ConfigError, "max_levels must be >= 1");
    if (budget < (std::size_t{1} << dims) + 1) {
      throw Error(ErrorCode::ConfigError, "budget is smaller than the initial design");
    }
    if (const auto* g = std::get_if<GlobalRank>(&rank_policy); g && g->rank < 1) {
      throw Error(ErrorCode::ConfigError, "global rank must be >= 1");
    }
    if (const auto* t = std::get_if<ToleranceRank>(&rank_policy); t && !(t->scale > 0.0)) {
      throw Error(ErrorCode::ConfigError, "tolerance scale must be positive");
    }
    if (!(sampling.boundary_probability >= 0.0 && sampling.boundary_probability <= 1.0)) {
      throw Error(ErrorCode::ConfigError, "boundary_probability must lie in [0, 1]");
    }
  }
};

/// Subspace distance between two vertices: fixed-rank metric under a global
/// rank, the unequal-rank metric under a tolerance.
inline double pair_distance(const SubspacePoint& a, const SubspacePoint& b, MetricKind metric,
                            const RankPolicy& policy) {
  return uses_global_rank(policy) ? distance_equidim(metric, a, b) : distance_infinite(metric, a, b);
}

struct ElementScore {
  std::size_t simplex = 0;
  std::vector<double> pairwise;  // (0,1), (0,2), ..., (1,2), ... each unordered pair once
  double total = 0.0;
};

/// Sum over unordered vertex pairs; each pair is counted once.
inline ElementScore score_from_pairs(std::vector<double> pairwise, std::size_t simplex = 0) {
  ElementScore s;
  s.simplex = simplex;
  s.pairwise = std::move(pairwise);
  for (double d : s.pairwise) s.total += d;
  return s;
}

inline ElementScore element_score(std::span<const SnapshotDecomposition> vertices, MetricKind metric,
                                  const RankPolicy& policy, std::size_t simplex = 0) {
  std::vector<double> pairs;
  for (std::size_t i = 0; i < vertices.size(); ++i)
    for (std::size_t j = i + 1; j < vertices.size(); ++j)
      pairs.push_back(pair_distance(vertices[i].left, vertices[j].left, metric, policy));
  return score_from_pairs(std::move(pairs), simplex);
}

/// Average total distance per element.
inline double mean_element_distance(std::span<const ElementScore> scores) {
  if (scores.empty()) throw Error(ErrorCode::DomainError, "no elements");
  double sum = 0.0;
  for (const auto& s : scores) sum += s.total;
  return sum / static_cast<double>(scores.size());
}

/// alpha-quantile of the scores by nearest rank: the value at zero-based
/// position floor(alpha * n) of the ascending order (clamped to n - 1). For
/// ten distinct scores and alpha = 0.8 that is the ninth smallest, so the
/// top two clear the threshold.
inline double quantile_threshold(std::vector<double> scores, double alpha) {
  if (scores.empty()) throw Error(ErrorCode::DomainError, "no scores");
  std::sort(scores.begin(), scores.end());
  const auto n = scores.size();
  const auto k = std::min(static_cast<std::size_t>(std::floor(alpha * static_cast<double>(n))), n - 1);
  return scores[k];
}

/// Elements not flagged converged whose score reaches the alpha-quantile of
/// all scores. Returned ids ascend.
inline std::vector<std::size_t> select_for_refinement(std::span<const double> scores, double alpha,
                                                      std::span<const char> converged) {
  if (scores.size() != converged.size()) {
    throw Error(ErrorCode::DomainError, "scores and flags differ in length");
  }
  if (std::all_of(converged.begin(), converged.end(), [](char c) { return c != 0; })) {
    throw Error(ErrorCode::NothingToRefine, "every element is converged");
  }
  const double threshold = quantile_threshold({scores.begin(), scores.end()}, alpha);
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < scores.size(); ++k)
    if (!converged[k] && scores[k] >= threshold) out.push_back(k);
  return out;
}

/// Error indicator at a new sample: sqrt(delta(actual, predicted) / min(r, r~)).
inline double vertex_error(const SnapshotDecomposition& actual, const SnapshotDecomposition& predicted,
                           MetricKind metric, const RankPolicy& policy) {
  const double delta = uses_global_rank(policy) && actual.rank() == predicted.rank()
                           ? distance_equidim(metric, actual.left, predicted.left)
                           : distance_infinite(metric, actual.left, predicted.left);
  const auto r = std::min(actual.rank(), predicted.rank());
  return std::sqrt(delta / static_cast<double>(r));
}

struct VertexErrorRecord {
  std::size_t point = 0;
  double theta = 0.0;
  int level = 0;
};

/// True when at least d of the d + 1 vertices carry theta <= theta_ref.
/// Points without a record never count.
inline bool element_converged(const Simplex& s, std::span<const std::optional<double>> theta_by_point,
                              double theta_ref) {
  std::size_t good = 0;
  for (auto v : s.vertices)
    if (v < theta_by_point.size() && theta_by_point[v] && *theta_by_point[v] <= theta_ref) ++good;
  return good + 1 >= s.vertices.size();
}

/// Convergence flags with persistence: an element (identified by its vertex
/// set) that was flagged once stays flagged in every later level.
class ConvergenceTracker {
 public:
  std::vector<char> update(const SimplexMesh& mesh, std::span<const std::optional<double>> theta_by_point,
                           double theta_ref) {
    std::vector<char> flags(mesh.simplices().size(), 0);
    for (std::size_t k = 0; k < flags.size(); ++k) {
      const auto& s = mesh.simplices()[k];
      if (flagged_.count(s.vertices) || element_converged(s, theta_by_point, theta_ref)) {
        flagged_.insert(s.vertices);
        flags[k] = 1;
      }
    }
    return flags;
  }

  void mark(const Simplex& s) { flagged_.insert(s.vertices); }
  bool contains(const Simplex& s) const { return flagged_.count(s.vertices) > 0; }

 private:
  std::set<std::vector<std::size_t>> flagged_;
};

inline std::vector<char> mark_convergence(const SimplexMesh& mesh,
                                          std::span<const std::optional<double>> theta_by_point,
                                          double theta_ref) {
  ConvergenceTracker t;
  return t.update(mesh, theta_by_point, theta_ref);
}

enum class CampaignStatus { Converged, BudgetExhausted, MaxLevels };

inline std::string_view to_string(CampaignStatus s) {
  switch (s) {
    case CampaignStatus::Converged: return "converged";
    case CampaignStatus::BudgetExhausted: return "budget_exhausted";
    case CampaignStatus::MaxLevels: return "max_levels";
  }
  return "unknown";
}

struct SampleRecord {
  std::size_t id = 0;
  int level = 0;  // level at which the sample was drawn; 0 for the initial design
  ParamPoint xi;
  Eigen::Index rank = 0;
  std::optional<double> theta;
  std::optional<std::size_t> parent;  // index of the refined element in its level
};

struct LevelRecord {
  int level = 0;
  std::size_t n_points = 0;
  std::size_t n_elements = 0;
  double mean_distance = 0.0;
  std::vector<Simplex> elements;
  std::vector<ElementScore> scores;
  std::vector<char> converged;
  std::vector<std::size_t> refined;  // element indices within this level
  std::vector<std::size_t> new_points;
  bool fallback_selection = false;
};

struct CampaignResult {
  CampaignStatus status = CampaignStatus::Converged;
  SimplexMesh mesh{1};
  std::vector<SampleRecord> samples;
  std::vector<FieldSnapshot> snapshots;
  std::vector<SnapshotDecomposition> decompositions;
  std::vector<LevelRecord> levels;
  std::vector<std::string> log;

  std::size_t evaluations() const noexcept { return samples.size(); }
};

/// Prediction of the decomposition at p from the vertices of s.
inline SnapshotDecomposition predict_in_element(const SimplexMesh& mesh, const Simplex& s,
                                                std::span<const SnapshotDecomposition> decomps,
                                                const ParamPoint& p, SingularValueMode mode,
                                                const GeometryTolerances& tol = {}) {
  std::vector<SnapshotDecomposition> verts;
  for (auto v : s.vertices) verts.push_back(decomps[v]);
  const auto chart = build_chart(verts, tol);
  return interpolate_decomposition(chart, barycentric_weights(mesh, s, p), mode, tol);
}

namespace detail {

struct Evaluated {
  FieldSnapshot snapshot;
  SnapshotDecomposition decomposition;
};

inline std::vector<Evaluated> evaluate_all(const Model& model, const std::vector<ParamPoint>& xs,
                                           const RankPolicy& policy, unsigned jobs) {
  return parallel_map<Evaluated>(xs.size(), jobs, [&](std::size_t i) {
    FieldSnapshot s;
    try {
      s = model.evaluate(xs[i]);
      s.validate();
    } catch (const ModelError&) {
      throw;
    } catch (const std::exception& e) {
      throw ModelError(xs[i], e.what());
    }
    auto d = decompose(s, policy);
    return Evaluated{std::move(s), std::move(d)};
  });
}

}  // namespace detail

/// Adaptive sampling loop. Terminates when every element is converged, the
/// evaluation budget is spent, or max_levels scoring passes have run.
inline CampaignResult run_campaign(const Model& model, const CampaignConfig& cfg) {
  cfg.validate();
  if (model.dims() != cfg.dims) {
    throw Error(ErrorCode::ConfigError, "model dimension " + std::to_string(model.dims()) +
                                            " differs from n_d " + std::to_string(cfg.dims));
  }
  CampaignResult res;
  res.mesh = initial_design(cfg.dims);
  Rng rng(cfg.seed);

  auto add_samples = [&](const std::vector<ParamPoint>& xs, int level) {
    auto evals = detail::evaluate_all(model, xs, cfg.rank_policy, cfg.jobs);
    std::vector<std::size_t> ids;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      SampleRecord rec;
      rec.id = res.samples.size();
      rec.level = level;
      rec.xi = xs[i];
      rec.rank = evals[i].decomposition.rank();
      ids.push_back(rec.id);
      res.samples.push_back(std::move(rec));
      res.snapshots.push_back(std::move(evals[i].snapshot));
      res.decompositions.push_back(std::move(evals[i].decomposition));
    }
    return ids;
  };

  add_samples(res.mesh.points(), 0);

  ConvergenceTracker tracker;
  for (int level = 1;; ++level) {
    const auto& mesh = res.mesh;
    LevelRecord rec;
    rec.level = level;
    rec.n_points = mesh.points().size();
    rec.n_elements = mesh.simplices().size();
    rec.elements = mesh.simplices();

    std::vector<double> totals;
    for (std::size_t k = 0; k < mesh.simplices().size(); ++k) {
      std::vector<SnapshotDecomposition> verts;
      for (auto v : mesh.simplices()[k].vertices) verts.push_back(res.decompositions[v]);
      rec.scores.push_back(element_score(verts, cfg.metric, cfg.rank_policy, k));
      totals.push_back(rec.scores.back().total);
    }
    rec.mean_distance = mean_element_distance(rec.scores);

    std::vector<std::optional<double>> theta_by_point;
    for (const auto& s : res.samples) theta_by_point.push_back(s.theta);
    rec.converged = tracker.update(mesh, theta_by_point, cfg.theta_ref);
    // A model with no subspace variation anywhere never produces a
    // refinement signal; treat it as converged outright.
    if (std::all_of(totals.begin(), totals.end(), [](double d) { return d < 1e-12; })) {
      for (std::size_t k = 0; k < rec.converged.size(); ++k) {
        rec.converged[k] = 1;
        tracker.mark(mesh.simplices()[k]);
      }
    }

    const bool all_done =
        std::all_of(rec.converged.begin(), rec.converged.end(), [](char c) { return c != 0; });
    const std::size_t remaining = cfg.budget > res.evaluations() ? cfg.budget - res.evaluations() : 0;
    if (all_done || remaining == 0 || level >= cfg.max_levels) {
      res.status = all_done         ? CampaignStatus::Converged
                   : remaining == 0 ? CampaignStatus::BudgetExhausted
                                    : CampaignStatus::MaxLevels;
      res.levels.push_back(std::move(rec));
      break;
    }

    auto selected = select_for_refinement(totals, cfg.alpha, rec.converged);
    if (selected.empty()) {
      // The quantile was set by converged elements; fall back to the
      // quantile among the remaining candidates.
      std::vector<double> cand;
      for (std::size_t k = 0; k < totals.size(); ++k)
        if (!rec.converged[k]) cand.push_back(totals[k]);
      const double th = quantile_threshold(cand, cfg.alpha);
      for (std::size_t k = 0; k < totals.size(); ++k)
        if (!rec.converged[k] && totals[k] >= th) selected.push_back(k);
      rec.fallback_selection = true;
    }
    if (selected.size() > remaining) {
      std::stable_sort(selected.begin(), selected.end(),
                       [&](std::size_t a, std::size_t b) { return totals[a] > totals[b]; });
      selected.resize(remaining);
      std::sort(selected.begin(), selected.end());
    }

    std::vector<ParamPoint> xs;
    for (auto k : selected) xs.push_back(sample_refinement_point(mesh, mesh.simplices()[k], rng, cfg.sampling));
    const std::size_t first_new = res.samples.size();
    add_samples(xs, level);

    for (std::size_t i = 0; i < selected.size(); ++i) {
      auto& sample = res.samples[first_new + i];
      sample.parent = selected[i];
      const auto& s = mesh.simplices()[selected[i]];
      try {
        const auto predicted = predict_in_element(mesh, s, res.decompositions, sample.xi,
                                                  cfg.singular_mode, cfg.tolerances);
        sample.theta = vertex_error(res.decompositions[sample.id], predicted, cfg.metric, cfg.rank_policy);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::SingularProduct && e.code() != ErrorCode::NonPositiveSingular) throw;
        sample.theta = std::numbers::pi / 2;
        res.log.push_back("level " + std::to_string(level) + ": element " + std::to_string(selected[i]) +
                          " chart failed (" + e.what() + "); theta set to pi/2");
      }
    }

    rec.refined = selected;
    std::size_t inserted = 0;
    for (std::size_t i = 0; i < selected.size(); ++i) {
      const auto id = first_new + i;
      try {
        const auto pid = res.mesh.insert(res.samples[id].xi);
        if (pid != id) throw Error(ErrorCode::DomainError, "mesh and sample tables out of step");
        rec.new_points.push_back(id);
        ++inserted;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::DuplicatePoint) throw;
        throw Error(ErrorCode::DuplicatePoint, "refinement sample duplicates an existing point");
      }
    }
    res.levels.push_back(std::move(rec));
  }
  return res;
}

}  // namespace grassfield

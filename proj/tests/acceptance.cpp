// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include "grassfield/campaign_io.hpp"
#include "grassfield/compare.hpp"
#include "grassfield/grassfield.hpp"

#include <Eigen/Dense>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

using namespace grassfield;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void check(bool ok, const std::string& what) {
    if (ok) return;
    if (pass) detail << "first failure: " << what << "; ";
    pass = false;
  }
};

std::mt19937_64 rng_for(std::uint64_t seed) { return std::mt19937_64(seed); }

Matrix gaussian(std::mt19937_64& eng, Eigen::Index r, Eigen::Index c) {
  std::normal_distribution<double> g;
  Matrix m(r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = g(eng);
  return m;
}

SubspacePoint random_subspace(std::mt19937_64& eng, Eigen::Index n, Eigen::Index r) {
  return SubspacePoint::from_span(gaussian(eng, n, r));
}

int uniform_int(std::mt19937_64& eng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(eng); }

// ---------------------------------------------------------------------------

Outcome table_consistency() {
  Outcome o;
  struct Row {
    const char* name;
    double d01, d02, d12, total;
  };
  const std::vector<std::pair<const char*, std::vector<Row>>> columns{
      {"grassmann",
       {{"element 0", 8.46, 7.32, 10.79, 26.59}, {"element 1", 10.79, 4.06, 11.04, 25.90},
        {"element 2", 11.04, 18.65, 15.86, 45.55}, {"element 3", 15.86, 7.32, 17.40, 40.59}}},
      {"chordal",
       {{"element 0", 5.46, 4.72, 6.94, 17.13}, {"element 1", 6.94, 2.70, 7.09, 16.73},
        {"element 2", 7.09, 11.91, 10.29, 29.30}, {"element 3", 10.29, 4.72, 11.21, 26.23}}},
      {"procrustes",
       {{"element 0", 5.40, 4.67, 6.88, 16.96}, {"element 1", 6.88, 2.60, 7.04, 16.53},
        {"element 2", 7.04, 11.87, 10.13, 29.05}, {"element 3", 10.13, 4.67, 11.10, 25.91}}},
  };
  // The inputs are two-decimal numbers; 1e-9 absorbs their binary representation.
  const double tol = 0.01 + 1e-9;
  double worst = 0.0;
  std::string worst_at;
  for (const auto& [metric, rows] : columns) {
    for (const auto& r : rows) {
      const double got = score_from_pairs({r.d01, r.d02, r.d12}).total;
      const double gap = std::abs(got - r.total);
      if (gap > worst) {
        worst = gap;
        worst_at = std::string(metric) + " " + r.name;
      }
      char buf[160];
      std::snprintf(buf, sizeof buf, "%s %s: score %.4f vs %.2f", metric, r.name, got, r.total);
      o.check(gap <= tol, buf);
    }
  }
  std::vector<ElementScore> totals;
  for (const auto& r : columns[0].second) totals.push_back(score_from_pairs({r.total}));
  const double mean = mean_element_distance(totals);
  o.check(std::abs(mean - 34.6575) <= tol, "mean element distance " + std::to_string(mean));
  o.detail << "max |score - printed total| " << worst << " at " << worst_at << ", mean " << mean;
  return o;
}

Outcome reduction() {
  Outcome o;
  auto eng = rng_for(2);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const int r = uniform_int(eng, 1, 5);
    const auto a = random_subspace(eng, 30, r), b = random_subspace(eng, 30, r);
    for (auto m : {MetricKind::Grassmann, MetricKind::Chordal, MetricKind::Procrustes}) {
      const double gap = std::abs(distance_infinite(m, a, b) - distance_equidim(m, a, b));
      worst = std::max(worst, gap);
      o.check(gap <= 1e-12, std::string(to_string(m)) + " pair " + std::to_string(t));
    }
  }
  o.detail << "max gap " << worst << " over 100 pairs x 3 metrics";
  return o;
}

Outcome geometry() {
  Outcome o;
  auto eng = rng_for(3);
  double worst_roundtrip = 0.0, worst_end = 0.0, worst_mid = 0.0, worst_axiom = 0.0;
  const auto gap = [](const SubspacePoint& a, const SubspacePoint& b) {
    return (a.basis() * a.basis().transpose() - b.basis() * b.basis().transpose()).norm();
  };
  for (int t = 0; t < 100; ++t) {
    const int n = uniform_int(eng, 6, 20), r = uniform_int(eng, 1, std::min(4, n / 2));
    const auto a = random_subspace(eng, n, r), b = random_subspace(eng, n, r), c = random_subspace(eng, n, r);
    const Matrix rot = Eigen::HouseholderQR<Matrix>(gaussian(eng, n, n)).householderQ() * Matrix::Identity(n, n);
    const Matrix mix = Eigen::HouseholderQR<Matrix>(gaussian(eng, r, r)).householderQ() * Matrix::Identity(r, r);
    for (auto m : {MetricKind::Grassmann, MetricKind::Chordal, MetricKind::Procrustes}) {
      const double ab = distance_equidim(m, a, b), ba = distance_equidim(m, b, a);
      const double ac = distance_equidim(m, a, c), bc = distance_equidim(m, b, c);
      const double aa = distance_equidim(m, a, SubspacePoint(Matrix(a.basis() * mix)));
      const double rotated =
          distance_equidim(m, SubspacePoint(Matrix(rot * a.basis())), SubspacePoint(Matrix(rot * b.basis())));
      worst_axiom = std::max({worst_axiom, aa, std::abs(ab - ba), std::abs(rotated - ab)});
      o.check(ab >= 0.0 && aa <= 1e-7 && std::abs(ab - ba) <= 1e-12, "identity/symmetry, instance " + std::to_string(t));
      o.check(ac <= ab + bc + 1e-12, "triangle inequality, instance " + std::to_string(t));
      o.check(std::abs(rotated - ab) <= 1e-10, "rotation invariance, instance " + std::to_string(t));
    }
    // Keep the pair inside the injectivity radius for the chart checks.
    const auto near = SubspacePoint::from_span(a.basis() + 0.3 * gaussian(eng, n, r));
    const auto back = exp_map(a, log_map(a, near));
    const double rt = gap(back, near);
    const double e0 = gap(geodesic(a, near, 0.0), a), e1 = gap(geodesic(a, near, 1.0), near);
    const auto mid = geodesic(a, near, 0.5);
    const double half = distance_equidim(MetricKind::Grassmann, a, near) / 2;
    const double mg = std::max(std::abs(distance_equidim(MetricKind::Grassmann, a, mid) - half),
                               std::abs(distance_equidim(MetricKind::Grassmann, mid, near) - half));
    worst_roundtrip = std::max(worst_roundtrip, rt);
    worst_end = std::max({worst_end, e0, e1});
    worst_mid = std::max(worst_mid, mg);
    o.check(rt < 1e-8, "exp(log) roundtrip, instance " + std::to_string(t));
    o.check(e0 < 1e-8 && e1 < 1e-8, "geodesic endpoints, instance " + std::to_string(t));
    o.check(mg < 1e-8, "midpoint bisection, instance " + std::to_string(t));
  }
  o.detail << "roundtrip " << worst_roundtrip << ", endpoints " << worst_end << ", midpoint " << worst_mid
           << ", axioms " << worst_axiom;
  return o;
}

// Empty-circumsphere check by direct linear solve, independent of the mesh code.
std::size_t brute_force_violations(const SimplexMesh& mesh) {
  const int d = mesh.dims();
  std::size_t bad = 0;
  for (const auto& s : mesh.simplices()) {
    Matrix a(d, d);
    Vector rhs(d);
    const ParamPoint& p0 = mesh.point(s.vertices[0]);
    for (int i = 0; i < d; ++i) {
      const ParamPoint& pi = mesh.point(s.vertices[i + 1]);
      a.row(i) = 2.0 * (pi - p0).transpose();
      rhs(i) = pi.squaredNorm() - p0.squaredNorm();
    }
    const Vector center = a.fullPivLu().solve(rhs);
    const double radius = (center - p0).norm();
    for (std::size_t k = 0; k < mesh.points().size(); ++k) {
      if (std::find(s.vertices.begin(), s.vertices.end(), k) != s.vertices.end()) continue;
      if ((mesh.point(k) - center).norm() < radius * (1.0 - 1e-9)) ++bad;
    }
  }
  return bad;
}

Outcome mesh_counts() {
  Outcome o;
  const auto m2 = initial_design(2), m3 = initial_design(3);
  o.check(m2.points().size() == 5 && m2.simplices().size() == 4, "initial_design(2) counts");
  o.check(m3.points().size() == 9 && m3.simplices().size() == 12, "initial_design(3) counts");
  double worst_volume = 0.0;
  std::size_t violations = 0;
  for (int d : {2, 3}) {
    auto eng = rng_for(40 + d);
    std::uniform_real_distribution<double> u;
    auto mesh = initial_design(d);
    std::size_t inserted = 0;
    while (inserted < 500) {
      ParamPoint p(d);
      for (int i = 0; i < d; ++i) p(i) = u(eng);
      mesh.insert(p);
      ++inserted;
      worst_volume = std::max(worst_volume, std::abs(total_volume(mesh) - 1.0));
      if (mesh.points().size() == 100 || mesh.points().size() == 200) violations += brute_force_violations(mesh);
    }
  }
  // Boundary-heavy and cospherical inputs: a regular grid.
  auto grid = initial_design(2);
  for (int i = 0; i <= 10; ++i)
    for (int j = 0; j <= 10; ++j) {
      ParamPoint p(2);
      p << i / 10.0, j / 10.0;
      try {
        grid.insert(p);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::DuplicatePoint) throw;
      }
    }
  violations += brute_force_violations(grid);
  worst_volume = std::max(worst_volume, std::abs(total_volume(grid) - 1.0));
  o.check(worst_volume <= 1e-9, "volume drift " + std::to_string(worst_volume));
  o.check(violations == 0, std::to_string(violations) + " circumsphere violations");
  o.detail << "max volume drift " << worst_volume << ", circumsphere violations " << violations;
  return o;
}

SimplexMesh uniform_mesh(int cells) {
  std::vector<ParamPoint> pts;
  for (int i = 0; i <= cells; ++i)
    for (int j = 0; j <= cells; ++j) {
      ParamPoint p(2);
      p << static_cast<double>(i) / cells, static_cast<double>(j) / cells;
      pts.push_back(p);
    }
  const auto id = [cells](int i, int j) { return static_cast<std::size_t>(i * (cells + 1) + j); };
  std::vector<Simplex> simplices;
  for (int i = 0; i < cells; ++i)
    for (int j = 0; j < cells; ++j) {
      simplices.push_back(Simplex{{id(i, j), id(i + 1, j), id(i + 1, j + 1)}});
      simplices.push_back(Simplex{{id(i, j), id(i, j + 1), id(i + 1, j + 1)}});
    }
  return SimplexMesh::from_triangulation(2, std::move(pts), std::move(simplices));
}

Outcome interpolation_fidelity() {
  Outcome o;
  auto eng = rng_for(5);
  double worst_vertex = 0.0;
  for (int t = 0; t < 20; ++t) {
    std::vector<SnapshotDecomposition> verts;
    std::vector<Matrix> fields;
    const int r = uniform_int(eng, 1, 3);
    const Matrix base = gaussian(eng, 25, r) * gaussian(eng, r, 12);
    for (int k = 0; k < 3; ++k) {
      fields.push_back(base + 0.2 * gaussian(eng, 25, r) * gaussian(eng, r, 12));
      verts.push_back(decompose({fields.back(), Vector()}, GlobalRank{r}));
    }
    const auto chart = build_chart(verts);
    for (int k = 0; k < 3; ++k) {
      const Matrix truncated = reconstruct(verts[k]);
      const double rel = (interpolate_field(chart, Vector::Unit(3, k)) - truncated).norm() / truncated.norm();
      worst_vertex = std::max(worst_vertex, rel);
    }
  }
  o.check(worst_vertex <= 1e-8, "vertex reproduction " + std::to_string(worst_vertex));

  const SyntheticModel model(2, SyntheticParams::smooth_defaults());
  CampaignConfig cfg;
  std::vector<double> errors;
  for (int cells : {2, 4, 8, 16}) {
    const auto ev = evaluate_design(model, uniform_mesh(cells), cfg);
    errors.push_back(ev.summary.mean_frobenius);
  }
  o.detail << "vertex reproduction " << worst_vertex << ", mean centroid error by h=1/2..1/16:";
  for (double e : errors) o.detail << ' ' << e;
  o.detail << ", orders:";
  for (std::size_t i = 1; i < errors.size(); ++i) {
    const double order = std::log2(errors[i - 1] / errors[i]);
    o.detail << ' ' << order;
    o.check(order >= 0.9, "order " + std::to_string(order) + " at halving " + std::to_string(i));
  }
  return o;
}

struct TransitionRuns {
  std::vector<CampaignResult> results;
  std::vector<double> density_ratio;
};

TransitionRuns transition_runs() {
  TransitionRuns out;
  const SyntheticModel model(2, SyntheticParams::transition_defaults());
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    CampaignConfig cfg;
    cfg.seed = seed;
    cfg.budget = 200;
    cfg.alpha = 0.8;
    cfg.theta_ref = kPi / 15;
    out.results.push_back(run_campaign(model, cfg));
    std::size_t in = 0, outside = 0;
    for (const auto& s : out.results.back().samples) (model.in_transition_band(s.xi) ? in : outside)++;
    // Band area 0.2, the rest 0.8.
    const double ratio = (static_cast<double>(in) / 0.2) / (static_cast<double>(std::max<std::size_t>(outside, 1)) / 0.8);
    out.density_ratio.push_back(ratio);
  }
  return out;
}

Outcome adaptive_targeting(const TransitionRuns& runs) {
  Outcome o;
  o.detail << "density ratio inside/outside per seed:";
  for (std::size_t i = 0; i < runs.results.size(); ++i) {
    o.detail << ' ' << runs.density_ratio[i];
    o.check(runs.results[i].evaluations() == 200, "seed " + std::to_string(i + 1) + " used " +
                                                      std::to_string(runs.results[i].evaluations()) + " evaluations");
    o.check(runs.density_ratio[i] >= 2.0, "seed " + std::to_string(i + 1));
  }
  return o;
}

Outcome convergence_trend(const TransitionRuns& runs) {
  Outcome o;
  o.detail << "per seed (first -> final d~, nonincreasing fraction):";
  for (std::size_t i = 0; i < runs.results.size(); ++i) {
    const auto& lv = runs.results[i].levels;
    std::size_t pairs = 0, good = 0;
    for (std::size_t k = 1; k < lv.size(); ++k) {
      ++pairs;
      good += lv[k].mean_distance <= lv[k - 1].mean_distance;
    }
    const double frac = pairs ? static_cast<double>(good) / static_cast<double>(pairs) : 1.0;
    o.detail << " [" << lv.front().mean_distance << " -> " << lv.back().mean_distance << ", " << good << "/" << pairs
             << "]";
    o.check(lv.size() >= 2 && lv.back().mean_distance < lv.front().mean_distance,
            "seed " + std::to_string(i + 1) + " final not below first");
    o.check(frac >= 0.8, "seed " + std::to_string(i + 1) + " trend " + std::to_string(frac));
  }
  return o;
}

std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = (static_cast<double>(i + j) / 2.0) + 1.0;
    i = j + 1;
  }
  return ranks;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  const auto ra = average_ranks(a), rb = average_ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n, mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0 || sbb == 0) return saa == sbb ? 1.0 : 0.0;
  return sab / std::sqrt(saa * sbb);
}

Outcome metric_robustness() {
  Outcome o;
  const SyntheticModel model(2, SyntheticParams::transition_defaults());
  std::vector<std::vector<double>> scores;
  std::vector<std::vector<Simplex>> elements;
  const std::vector<MetricKind> metrics{MetricKind::Grassmann, MetricKind::Chordal, MetricKind::Procrustes};
  for (auto m : metrics) {
    CampaignConfig cfg;
    cfg.metric = m;
    cfg.seed = 1;
    cfg.budget = 200;
    const auto res = run_campaign(model, cfg);
    std::vector<double> s;
    for (const auto& e : res.levels.front().scores) s.push_back(e.total);
    scores.push_back(std::move(s));
    elements.push_back(res.levels.front().elements);
  }
  o.detail << "level-1 elements " << scores[0].size() << ", spearman:";
  for (std::size_t i = 0; i < metrics.size(); ++i)
    for (std::size_t j = i + 1; j < metrics.size(); ++j) {
      o.check(elements[i] == elements[j], "level-1 meshes differ");
      const double rho = spearman(scores[i], scores[j]);
      o.detail << ' ' << to_string(metrics[i]) << '/' << to_string(metrics[j]) << '=' << rho;
      o.check(rho >= 0.9, std::string(to_string(metrics[i])) + "/" + std::string(to_string(metrics[j])));
    }
  return o;
}

Outcome adaptive_vs_random() {
  Outcome o;
  const SyntheticModel model(2, SyntheticParams::transition_defaults());
  o.detail << "per seed (adaptive/random mean theta, mean frobenius):";
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    CampaignConfig cfg;
    cfg.seed = seed;
    const auto rep = compare_random(model, cfg, 300);
    const auto& a = rep.adaptive_errors.summary;
    const auto& r = rep.random_errors.summary;
    o.detail << " [" << a.mean_theta << '/' << r.mean_theta << ", " << a.mean_frobenius << '/' << r.mean_frobenius
             << "]";
    o.check(a.mean_frobenius <= r.mean_frobenius, "seed " + std::to_string(seed) + " frobenius");
    o.check(a.mean_theta <= r.mean_theta, "seed " + std::to_string(seed) + " theta");
  }
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

Outcome determinism() {
  Outcome o;
  const SyntheticModel model(2, SyntheticParams::transition_defaults());
  CampaignConfig cfg;
  cfg.seed = 21;
  cfg.budget = 200;
  const auto root = fs::temp_directory_path() / "grassfield_acceptance_determinism";
  fs::remove_all(root);
  io::write_results(root / "a", run_campaign(model, cfg), nlohmann::json::object());
  cfg.jobs = 4;
  io::write_results(root / "b", run_campaign(model, cfg), nlohmann::json::object());
  for (const auto* f : {"samples.csv", "scores.csv", "convergence.csv"}) {
    const auto a = slurp(root / "a" / f), b = slurp(root / "b" / f);
    o.check(!a.empty() && a == b, std::string(f) + " differs");
  }
  o.detail << "samples.csv, scores.csv, convergence.csv compared (second run with 4 jobs)";
  fs::remove_all(root);
  return o;
}

}  // namespace

int main() {
  int failures = 0;
  const auto run = [&](int id, const char* name, double limit_seconds, const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = body();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "exception: " << e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (limit_seconds > 0 && secs > limit_seconds) {
      o.pass = false;
      o.detail << "; runtime " << secs << " s exceeds " << limit_seconds << " s";
    }
    std::printf("%s criterion %d %s (%.1f s): %s\n", o.pass ? "PASS" : "FAIL", id, name, secs, o.detail.str().c_str());
    std::fflush(stdout);
    failures += !o.pass;
  };

  run(1, "reference-score-table", 1, table_consistency);
  run(2, "infinite-reduces-to-equidim", 5, reduction);
  run(3, "geometry-kernel", 30, geometry);
  run(4, "mesh", 60, mesh_counts);
  run(5, "interpolation-fidelity", 120, interpolation_fidelity);

  TransitionRuns runs;
  run(6, "adaptive-targeting", 300, [&] {
    runs = transition_runs();
    return adaptive_targeting(runs);
  });
  run(7, "convergence-trend", 0, [&] { return convergence_trend(runs); });
  run(8, "metric-robustness", 0, metric_robustness);
  run(9, "adaptive-vs-random", 600, adaptive_vs_random);
  run(10, "determinism", 0, determinism);

  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}

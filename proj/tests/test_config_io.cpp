#include "grassfield/campaign_io.hpp"
#include "grassfield/config.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

using namespace grassfield;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("grassfield_cfg_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string config_error(const json& doc) {
  try {
    parse_run_config(doc, nullptr);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ConfigError);
    return e.what();
  }
  ADD_FAILURE() << "no error for " << doc.dump();
  return {};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST(Config, DefaultsFromEmptyDocument) {
  const auto rc = parse_run_config(json::object(), nullptr);
  EXPECT_EQ(rc.campaign.dims, 2);
  EXPECT_EQ(rc.campaign.alpha, 0.8);
  EXPECT_EQ(rc.campaign.budget, 200u);
  EXPECT_EQ(rc.campaign.metric, MetricKind::Grassmann);
  EXPECT_EQ(rc.model.kind, ModelKind::SyntheticTransition);
  EXPECT_EQ(rc.output, fs::path("results"));
}

TEST(Config, ReadsFields) {
  const auto rc = parse_run_config(
      json::parse(R"({"campaign": {"n_d": 3, "metric": "procrustes", "rank_policy": "global", "global_rank": 2,
                      "alpha": 0.6, "budget": 90, "singular_values": "direct_mean"},
                      "model": {"kind": "synthetic_smooth", "n_f": 12, "m_f": 8, "modes": 2},
                      "output": "out/x"})"),
      nullptr);
  EXPECT_EQ(rc.campaign.dims, 3);
  EXPECT_EQ(rc.campaign.metric, MetricKind::Procrustes);
  ASSERT_TRUE(std::holds_alternative<GlobalRank>(rc.campaign.rank_policy));
  EXPECT_EQ(std::get<GlobalRank>(rc.campaign.rank_policy).rank, 2);
  EXPECT_EQ(rc.campaign.alpha, 0.6);
  EXPECT_EQ(rc.campaign.singular_mode, SingularValueMode::DirectMean);
  EXPECT_EQ(rc.model.synthetic.n_f, 12);
  EXPECT_EQ(rc.model.dims, 3);
  EXPECT_EQ(rc.output, fs::path("out/x"));
}

TEST(Config, ErrorsNameTheKey) {
  EXPECT_NE(config_error(json::parse(R"({"campaign": {"alpha": 1.5}})")).find("campaign.alpha"), std::string::npos);
  EXPECT_NE(config_error(json::parse(R"({"campaign": {"alpah": 0.5}})")).find("campaign.alpah"), std::string::npos);
  EXPECT_NE(config_error(json::parse(R"({"campaign": {"metric": "euclid"}})")).find("campaign.metric"),
            std::string::npos);
  EXPECT_NE(config_error(json::parse(R"({"model": {"kind": "fem"}})")).find("model.kind"), std::string::npos);
  EXPECT_NE(config_error(json::parse(R"({"modle": {}})")).find("modle"), std::string::npos);
  EXPECT_NE(config_error(json::parse(R"({"campaign": {"budget": "many"}})")).find("campaign.budget"),
            std::string::npos);
  EXPECT_NE(config_error(json::parse(R"({"model": {"kind": "external_exchange"}})")).find("model.directory"),
            std::string::npos);
  EXPECT_NE(config_error(json::parse(R"({"model": {"directory": "x"}})")).find("model.directory"),
            std::string::npos);
}

TEST(Config, ExchangeModelWithParamMap) {
  const auto rc = parse_run_config(json::parse(R"({"model": {"kind": "external_exchange", "directory": "ex",
      "n_f": 20, "m_f": 5, "param_map": {"lo": [500, 0], "hi": [700, 0.1]}}})"),
                                   nullptr);
  EXPECT_EQ(rc.model.kind, ModelKind::ExternalExchange);
  EXPECT_EQ(rc.model.exchange.directory, fs::path("ex"));
  EXPECT_EQ(rc.model.exchange.n_f, 20);
  ASSERT_TRUE(rc.model.exchange.param_map.has_value());
  EXPECT_NE(config_error(json::parse(R"({"model": {"kind": "external_exchange", "directory": "ex",
      "param_map": {"lo": [1, 0, 0], "hi": [2, 1, 1]}}})"))
                .find("param_map"),
            std::string::npos);
}

TEST(Config, OverridesAndShorthand) {
  json doc = json::parse(R"({"campaign": {"alpha": 0.8}})");
  apply_override(doc, "campaign.alpha=0.7");
  apply_override(doc, "budget=55");
  apply_override(doc, "model.kind=synthetic_smooth");
  apply_override(doc, "output=some/where");
  EXPECT_EQ(doc["campaign"]["alpha"], 0.7);
  EXPECT_EQ(doc["campaign"]["budget"], 55);
  EXPECT_EQ(doc["model"]["kind"], "synthetic_smooth");
  EXPECT_EQ(doc["output"], "some/where");
  EXPECT_THROW(apply_override(doc, "novalue"), Error);
  EXPECT_THROW(apply_override(doc, "campaign..alpha=1"), Error);
}

TEST(Config, SeedPrecedence) {
  const auto dir = scratch("seed");
  std::ofstream(dir / "c.json") << R"({"campaign": {"seed": 5}})";
  EXPECT_EQ(load_run_config(dir / "c.json", {}, nullptr).campaign.seed, 5u);
  EXPECT_EQ(load_run_config(dir / "c.json", {}, "11").campaign.seed, 11u);
  EXPECT_EQ(load_run_config(dir / "c.json", {"seed=13"}, "11").campaign.seed, 13u);
  EXPECT_EQ(load_run_config(dir / "c.json", {"campaign.seed=14"}, "11").campaign.seed, 14u);
  EXPECT_THROW(load_run_config(dir / "c.json", {}, "abc"), Error);
  EXPECT_THROW(load_run_config(dir / "missing.json", {}, nullptr), Error);
  std::ofstream(dir / "bad.json") << "{ not json";
  EXPECT_THROW(load_run_config(dir / "bad.json", {}, nullptr), Error);
}

TEST(Config, ShippedConfigsParse) {
  for (const auto& name : {"transition.json", "smooth.json", "constant.json", "exchange.json"}) {
    EXPECT_NO_THROW(load_run_config(fs::path(GRASSFIELD_CONFIGS) / name, {}, nullptr)) << name;
  }
}

TEST(Config, MakeModel) {
  auto rc = parse_run_config(json::parse(R"({"model": {"kind": "synthetic_smooth"}})"), nullptr);
  const auto model = make_model(rc.model);
  EXPECT_EQ(model->dims(), 2);
  const auto snap = model->evaluate(ParamPoint::Constant(2, 0.3));
  EXPECT_EQ(snap.field.rows(), 40);
  EXPECT_EQ(snap.field.cols(), 30);
}

TEST(ResultsIo, WriteReadRoundtrip) {
  const auto rc = parse_run_config(json::parse(R"({"campaign": {"budget": 30, "seed": 4}})"), nullptr);
  const auto model = make_model(rc.model);
  const auto res = run_campaign(*model, rc.campaign);
  const auto dir = scratch("results");
  io::write_results(dir, res, rc.resolved);

  for (const auto* f : {"samples.csv", "points.csv", "simplices.csv", "scores.csv", "errors.csv", "convergence.csv",
                        "audit.ndjson", "summary.json", "config.json"})
    EXPECT_TRUE(fs::exists(dir / f)) << f;

  const auto summary = json::parse(slurp(dir / "summary.json"));
  EXPECT_EQ(summary["schema_version"], 1);
  EXPECT_EQ(summary["evaluations"], res.evaluations());
  EXPECT_EQ(summary["status"], std::string(to_string(res.status)));
  EXPECT_EQ(summary["n_elements"], res.mesh.simplices().size());

  const auto stored = io::read_results(dir);
  ASSERT_EQ(stored.mesh.points().size(), res.mesh.points().size());
  for (std::size_t i = 0; i < res.mesh.points().size(); ++i) {
    EXPECT_EQ(stored.mesh.point(i), res.mesh.point(i));
    EXPECT_EQ(stored.snapshots[i].field, res.snapshots[i].field);
  }
  EXPECT_EQ(stored.mesh.simplices(), res.mesh.simplices());
  EXPECT_EQ(stored.config.campaign.seed, 4u);

  std::ifstream conv(dir / "convergence.csv");
  std::string line;
  std::getline(conv, line);
  EXPECT_EQ(line, "level,n_points,n_elements,mean_distance");
  std::size_t rows = 0;
  while (std::getline(conv, line)) ++rows;
  EXPECT_EQ(rows, res.levels.size());

  std::ifstream samples(dir / "samples.csv");
  std::getline(samples, line);
  EXPECT_EQ(line.rfind("id,level,parent,rank,theta", 0), 0u);
  rows = 0;
  while (std::getline(samples, line)) ++rows;
  EXPECT_EQ(rows, res.samples.size());
}

TEST(ResultsIo, RereadingAnotherDirectoryIsByteIdentical) {
  const auto rc = parse_run_config(json::parse(R"({"campaign": {"budget": 25, "seed": 9}})"), nullptr);
  const auto model = make_model(rc.model);
  const auto a = scratch("det_a"), b = scratch("det_b");
  io::write_results(a, run_campaign(*model, rc.campaign), rc.resolved);
  io::write_results(b, run_campaign(*model, rc.campaign), rc.resolved);
  for (const auto* f : {"samples.csv", "scores.csv", "convergence.csv", "summary.json"})
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
}

TEST(ResultsIo, FormatKeepsFullPrecision) {
  EXPECT_EQ(std::stod(io::fmt(0.1)), 0.1);
  EXPECT_EQ(std::stod(io::fmt(std::numbers::pi)), std::numbers::pi);
}

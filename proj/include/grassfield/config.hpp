#pragma once

// Run configuration: JSON file plus dotted `key=value` overrides.
//
//   {
//     "campaign": { "n_d": 2, "metric": "grassmann", "rank_policy": "tolerance",
//                   "alpha": 0.8, "theta_ref": 0.2094, "budget": 200, ... },
//     "model":    { "kind": "synthetic_transition", "n_f": 40, "m_f": 30, ... },
//     "output":   "results/run"
//   }
//
// Unknown keys are rejected by name. Every error is ErrorCode::ConfigError.

#include "grassfield/errors.hpp"
#include "grassfield/exchange.hpp"
#include "grassfield/models.hpp"
#include "grassfield/refinement.hpp"

#include "json.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <set>
#include <string>

namespace grassfield {

enum class ModelKind { SyntheticSmooth, SyntheticTransition, ExternalExchange };

inline std::string_view to_string(ModelKind k) {
  switch (k) {
    case ModelKind::SyntheticSmooth: return "synthetic_smooth";
    case ModelKind::SyntheticTransition: return "synthetic_transition";
    case ModelKind::ExternalExchange: return "external_exchange";
  }
  return "unknown";
}

struct ModelSpec {
  ModelKind kind = ModelKind::SyntheticTransition;
  int dims = 2;
  SyntheticParams synthetic = SyntheticParams::transition_defaults();
  ExchangeParams exchange{};
};

struct RunConfig {
  CampaignConfig campaign{};
  ModelSpec model{};
  std::filesystem::path output = "results";
  nlohmann::json resolved;  // the effective configuration, echoed into results
};

inline const std::set<std::string>& campaign_keys() {
  static const std::set<std::string> keys{
      "n_d", "metric", "rank_policy", "global_rank", "tolerance_scale", "alpha", "theta_ref",
      "max_levels", "seed", "budget", "jobs", "boundary_probability", "singular_values",
      "orthonormality_tol", "singularity_tol", "tangency_tol"};
  return keys;
}

namespace config_detail {

using nlohmann::json;

[[noreturn]] inline void fail(const std::string& key, const std::string& what) {
  throw Error(ErrorCode::ConfigError, "config key '" + key + "': " + what);
}

inline void reject_unknown(const json& obj, const std::string& prefix, const std::set<std::string>& known) {
  if (!obj.is_object()) fail(prefix, "expected an object");
  for (const auto& [k, v] : obj.items())
    if (!known.count(k)) fail(prefix.empty() ? k : prefix + "." + k, "unknown key");
}

template <typename T>
void read(const json& obj, const std::string& prefix, const char* key, T& out) {
  const auto it = obj.find(key);
  if (it == obj.end()) return;
  const std::string name = prefix + "." + key;
  try {
    if constexpr (std::is_floating_point_v<T>) {
      if (!it->is_number()) fail(name, "expected a number");
    } else if constexpr (std::is_integral_v<T>) {
      if (!it->is_number_integer() && !it->is_number_unsigned()) fail(name, "expected an integer");
      if constexpr (std::is_unsigned_v<T>) {
        if (it->is_number_integer() && it->template get<long long>() < 0) fail(name, "must be nonnegative");
      }
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!it->is_string()) fail(name, "expected a string");
    }
    out = it->template get<T>();
  } catch (const json::exception& e) {
    fail(name, e.what());
  }
}

inline Vector read_vector(const json& v, const std::string& name) {
  if (!v.is_array()) fail(name, "expected an array of numbers");
  Vector out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) fail(name, "expected an array of numbers");
    out(static_cast<Eigen::Index>(i)) = v[i].get<double>();
  }
  return out;
}

inline CampaignConfig parse_campaign(const json& c) {
  const std::string p = "campaign";
  reject_unknown(c, p, campaign_keys());
  CampaignConfig cfg;
  read(c, p, "n_d", cfg.dims);
  std::string metric = "grassmann";
  read(c, p, "metric", metric);
  try {
    cfg.metric = parse_metric(metric);
  } catch (const Error&) {
    fail(p + ".metric", "expected grassmann, chordal or procrustes, got '" + metric + "'");
  }
  std::string policy = "tolerance";
  read(c, p, "rank_policy", policy);
  if (policy == "tolerance") {
    ToleranceRank t;
    read(c, p, "tolerance_scale", t.scale);
    if (!(t.scale > 0.0)) fail(p + ".tolerance_scale", "must be positive");
    cfg.rank_policy = t;
  } else if (policy == "global") {
    GlobalRank g{3};
    read(c, p, "global_rank", g.rank);
    if (g.rank < 1) fail(p + ".global_rank", "must be >= 1");
    cfg.rank_policy = g;
  } else {
    fail(p + ".rank_policy", "expected 'tolerance' or 'global', got '" + policy + "'");
  }
  read(c, p, "alpha", cfg.alpha);
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) fail(p + ".alpha", "must lie in (0, 1)");
  read(c, p, "theta_ref", cfg.theta_ref);
  if (!(cfg.theta_ref >= 0.0 && cfg.theta_ref <= std::numbers::pi / 2)) {
    fail(p + ".theta_ref", "must lie in [0, pi/2]");
  }
  read(c, p, "max_levels", cfg.max_levels);
  if (cfg.max_levels < 1) fail(p + ".max_levels", "must be >= 1");
  read(c, p, "seed", cfg.seed);
  read(c, p, "budget", cfg.budget);
  read(c, p, "jobs", cfg.jobs);
  if (cfg.jobs < 1) fail(p + ".jobs", "must be >= 1");
  read(c, p, "boundary_probability", cfg.sampling.boundary_probability);
  if (!(cfg.sampling.boundary_probability >= 0.0 && cfg.sampling.boundary_probability <= 1.0)) {
    fail(p + ".boundary_probability", "must lie in [0, 1]");
  }
  std::string mode = "aligned_core";
  read(c, p, "singular_values", mode);
  if (mode == "aligned_core") {
    cfg.singular_mode = SingularValueMode::AlignedCore;
  } else if (mode == "direct_mean") {
    cfg.singular_mode = SingularValueMode::DirectMean;
  } else {
    fail(p + ".singular_values", "expected 'aligned_core' or 'direct_mean', got '" + mode + "'");
  }
  read(c, p, "orthonormality_tol", cfg.tolerances.orthonormality);
  read(c, p, "singularity_tol", cfg.tolerances.singularity);
  read(c, p, "tangency_tol", cfg.tolerances.tangency);
  if (cfg.dims < 1 || cfg.dims > kMaxMeshDims) fail(p + ".n_d", "must lie in [1, 6]");
  if (cfg.budget < (std::size_t{1} << cfg.dims) + 1) {
    fail(p + ".budget", "must cover the initial design of " + std::to_string((1 << cfg.dims) + 1) + " points");
  }
  return cfg;
}

inline ModelSpec parse_model(const json& m, int dims) {
  const std::string p = "model";
  reject_unknown(m, p,
                 {"kind", "n_f", "m_f", "modes", "amplitude", "amplitude_slope", "drift", "jump", "width",
                  "curve_intercept", "curve_slope", "band_half_width", "directory", "timeout_seconds",
                  "poll_interval_seconds", "param_map"});
  ModelSpec spec;
  spec.dims = dims;
  std::string kind = "synthetic_transition";
  read(m, p, "kind", kind);
  if (kind == "synthetic_smooth") {
    spec.kind = ModelKind::SyntheticSmooth;
    spec.synthetic = SyntheticParams::smooth_defaults();
  } else if (kind == "synthetic_transition") {
    spec.kind = ModelKind::SyntheticTransition;
    spec.synthetic = SyntheticParams::transition_defaults();
  } else if (kind == "external_exchange") {
    spec.kind = ModelKind::ExternalExchange;
  } else {
    fail(p + ".kind", "expected synthetic_smooth, synthetic_transition or external_exchange, got '" + kind + "'");
  }

  auto& s = spec.synthetic;
  read(m, p, "n_f", s.n_f);
  read(m, p, "m_f", s.m_f);
  if (s.n_f < 1) fail(p + ".n_f", "must be positive");
  if (s.m_f < 1) fail(p + ".m_f", "must be positive");
  read(m, p, "modes", s.modes);
  read(m, p, "amplitude", s.amplitude);
  read(m, p, "amplitude_slope", s.amplitude_slope);
  read(m, p, "drift", s.drift);
  read(m, p, "jump", s.jump);
  read(m, p, "width", s.width);
  read(m, p, "curve_intercept", s.curve_intercept);
  read(m, p, "curve_slope", s.curve_slope);
  read(m, p, "band_half_width", s.band_half_width);

  if (spec.kind == ModelKind::ExternalExchange) {
    auto& e = spec.exchange;
    std::string dir;
    read(m, p, "directory", dir);
    if (dir.empty()) fail(p + ".directory", "required for external_exchange");
    e.directory = dir;
    read(m, p, "timeout_seconds", e.timeout_seconds);
    if (!(e.timeout_seconds > 0.0)) fail(p + ".timeout_seconds", "must be positive");
    read(m, p, "poll_interval_seconds", e.poll_interval_seconds);
    if (!(e.poll_interval_seconds > 0.0)) fail(p + ".poll_interval_seconds", "must be positive");
    if (m.contains("n_f")) e.n_f = s.n_f;
    if (m.contains("m_f")) e.m_f = s.m_f;
    if (const auto it = m.find("param_map"); it != m.end()) {
      reject_unknown(*it, p + ".param_map", {"lo", "hi"});
      if (!it->contains("lo") || !it->contains("hi")) fail(p + ".param_map", "needs both lo and hi");
      const auto lo = read_vector(it->at("lo"), p + ".param_map.lo");
      const auto hi = read_vector(it->at("hi"), p + ".param_map.hi");
      if (lo.size() != dims) fail(p + ".param_map.lo", "length must equal n_d");
      try {
        e.param_map.emplace(lo, hi);
      } catch (const Error& err) {
        fail(p + ".param_map", err.what());
      }
    }
  } else {
    for (const char* k : {"directory", "timeout_seconds", "poll_interval_seconds", "param_map"})
      if (m.contains(k)) fail(p + "." + k, "only valid for external_exchange");
    try {
      s.validate();
    } catch (const Error& err) {
      fail(p, err.what());
    }
    if (s.jump != 0.0 && dims < 2) fail(p + ".jump", "a transition curve needs n_d >= 2");
  }
  return spec;
}

inline json parse_value(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception&) {
    return json(text);
  }
}

}  // namespace config_detail

/// Applies "a.b.c=value" to the document. A bare campaign field name
/// ("alpha=0.7") is shorthand for "campaign.alpha". The value is read as
/// JSON when it parses, otherwise as a string.
inline void apply_override(nlohmann::json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw Error(ErrorCode::ConfigError, "override '" + assignment + "' is not key=value");
  }
  std::string key = assignment.substr(0, eq);
  if (key.find('.') == std::string::npos && campaign_keys().count(key)) key = "campaign." + key;
  nlohmann::json* node = &doc;
  std::size_t start = 0;
  for (;;) {
    const auto dot = key.find('.', start);
    const auto part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw Error(ErrorCode::ConfigError, "config key '" + key + "': empty path segment");
    if (!node->is_object()) {
      if (!node->is_null()) throw Error(ErrorCode::ConfigError, "config key '" + key + "': not an object");
      *node = nlohmann::json::object();
    }
    node = &(*node)[part];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  *node = config_detail::parse_value(assignment.substr(eq + 1));
}

/// Builds the run configuration from a JSON document. GRASSFIELD_SEED,
/// when set, replaces campaign.seed unless `seed_env` is null.
inline RunConfig parse_run_config(nlohmann::json doc, const char* seed_env = std::getenv("GRASSFIELD_SEED")) {
  using config_detail::fail;
  if (!doc.is_object()) fail("", "top level must be an object");
  config_detail::reject_unknown(doc, "", {"campaign", "model", "output"});
  if (!doc.contains("campaign")) doc["campaign"] = nlohmann::json::object();
  if (!doc.contains("model")) doc["model"] = nlohmann::json::object();
  if (seed_env && *seed_env) {
    try {
      std::size_t used = 0;
      const auto seed = std::stoull(seed_env, &used);
      if (used != std::string(seed_env).size()) throw std::invalid_argument("trailing characters");
      doc["campaign"]["seed"] = seed;
    } catch (const std::exception&) {
      throw Error(ErrorCode::ConfigError, std::string("GRASSFIELD_SEED '") + seed_env + "' is not an integer");
    }
  }
  RunConfig rc;
  rc.campaign = config_detail::parse_campaign(doc["campaign"]);
  rc.model = config_detail::parse_model(doc["model"], rc.campaign.dims);
  if (const auto it = doc.find("output"); it != doc.end()) {
    if (!it->is_string()) fail("output", "expected a string");
    rc.output = it->get<std::string>();
  }
  rc.resolved = doc;
  return rc;
}

inline nlohmann::json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open config " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigError, "config " + path.string() + " is not valid JSON: " + e.what());
  }
}

inline RunConfig load_run_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {},
                                 const char* seed_env = std::getenv("GRASSFIELD_SEED")) {
  auto doc = load_json(path);
  // Overrides win over both the file and the environment.
  std::optional<std::string> env;
  if (seed_env && *seed_env) env = seed_env;
  for (const auto& o : overrides) {
    const auto key = o.substr(0, o.find('='));
    if (key == "seed" || key == "campaign.seed") env.reset();
  }
  for (const auto& o : overrides) apply_override(doc, o);
  return parse_run_config(std::move(doc), env ? env->c_str() : nullptr);
}

inline std::unique_ptr<Model> make_model(const ModelSpec& spec) {
  switch (spec.kind) {
    case ModelKind::SyntheticSmooth:
    case ModelKind::SyntheticTransition:
      return std::make_unique<SyntheticModel>(spec.dims, spec.synthetic);
    case ModelKind::ExternalExchange:
      return std::make_unique<ExchangeModel>(spec.dims, spec.exchange);
  }
  throw Error(ErrorCode::ConfigError, "unknown model kind");
}

}  // namespace grassfield

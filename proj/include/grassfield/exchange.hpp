#pragma once

// File-polling coupling to an external batch solver.
//
// For evaluation number <id> the engine writes
//     <dir>/req_<id>.json        {"id": <id>, "xi": [ ... ], "physical": [ ... ]}
// ("physical" only when a parameter map is configured)
// and waits for the solver to deposit
//     <dir>/resp_<id>.gfld       (GFLD snapshot, see snapshot_io.hpp)
// Both sides must publish files atomically (write to a temporary name,
// then rename). Ids increase monotonically per directory; several requests
// may be in flight at once.

#include "grassfield/models.hpp"
#include "grassfield/snapshot_io.hpp"

#include "json.hpp"

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <optional>
#include <regex>
#include <thread>

namespace grassfield {

struct ExchangeParams {
  std::filesystem::path directory;
  double timeout_seconds = 3600.0;
  double poll_interval_seconds = 0.05;
  Eigen::Index n_f = 0;  // 0 accepts any shape
  Eigen::Index m_f = 0;
  std::optional<ParamMap> param_map;  // adds "physical" to each request
};

class ExchangeModel final : public Model {
 public:
  ExchangeModel(int dims, ExchangeParams params) : dims_(dims), p_(std::move(params)) {
    if (p_.directory.empty()) throw Error(ErrorCode::ConfigError, "exchange directory is empty");
    std::filesystem::create_directories(p_.directory);
    next_id_ = first_free_id();
  }

  int dims() const override { return dims_; }
  const ExchangeParams& params() const noexcept { return p_; }

  static std::filesystem::path request_path(const std::filesystem::path& dir, std::uint64_t id) {
    return dir / ("req_" + std::to_string(id) + ".json");
  }
  static std::filesystem::path response_path(const std::filesystem::path& dir, std::uint64_t id) {
    return dir / ("resp_" + std::to_string(id) + ".gfld");
  }

  FieldSnapshot evaluate(const ParamPoint& xi) const override {
    if (xi.size() != dims_) throw ModelError(xi, "wrong parameter dimension");
    const std::uint64_t id = next_id_.fetch_add(1);
    write_request(id, xi);

    const auto resp = response_path(p_.directory, id);
    const auto deadline = std::chrono::steady_clock::now() +
                          std::chrono::duration<double>(p_.timeout_seconds);
    while (!std::filesystem::exists(resp)) {
      if (std::chrono::steady_clock::now() >= deadline) {
        throw Error(ErrorCode::ExchangeTimeout, "no response " + resp.string() + " for xi = " +
                                                    ModelError::format(xi));
      }
      std::this_thread::sleep_for(std::chrono::duration<double>(p_.poll_interval_seconds));
    }

    FieldSnapshot s = io::read_snapshot_binary(resp);
    if ((p_.n_f > 0 && s.field.rows() != p_.n_f) || (p_.m_f > 0 && s.field.cols() != p_.m_f)) {
      throw Error(ErrorCode::MalformedSnapshot,
                  resp.string() + " has shape " + std::to_string(s.field.rows()) + "x" +
                      std::to_string(s.field.cols()));
    }
    s.params = xi;
    return s;
  }

 private:
  std::uint64_t first_free_id() const {
    static const std::regex pattern(R"(req_(\d+)\.json)");
    std::uint64_t next = 0;
    for (const auto& entry : std::filesystem::directory_iterator(p_.directory)) {
      std::smatch m;
      const auto name = entry.path().filename().string();
      if (std::regex_match(name, m, pattern)) next = std::max<std::uint64_t>(next, std::stoull(m[1]) + 1);
    }
    return next;
  }

  void write_request(std::uint64_t id, const ParamPoint& xi) const {
    nlohmann::json j;
    j["id"] = id;
    j["xi"] = std::vector<double>(xi.data(), xi.data() + xi.size());
    if (p_.param_map) {
      const Vector phys = map_params(*p_.param_map, xi);
      j["physical"] = std::vector<double>(phys.data(), phys.data() + phys.size());
    }
    const auto target = request_path(p_.directory, id);
    auto tmp = target;
    tmp += ".tmp";
    {
      std::ofstream out(tmp, std::ios::trunc);
      if (!out) throw Error(ErrorCode::IoError, "cannot write " + tmp.string());
      out << j.dump() << '\n';
    }
    std::filesystem::rename(tmp, target);
  }

  int dims_;
  ExchangeParams p_;
  mutable std::atomic<std::uint64_t> next_id_{0};
};

}  // namespace grassfield

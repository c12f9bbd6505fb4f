#pragma once

// Snapshot files exchanged with external solvers.
//
// Binary layout (all little-endian):
//   char[4] magic = "GFLD"
//   u32 version   = 1
//   u32 n_f, u32 m_f, u32 n_d
//   f64 xi[n_d]
//   f64 field[n_f * m_f]   (row-major)
//
// CSV alternative: a plain numeric matrix, one row per line, with a sidecar
// "<file>.meta.json" holding {"xi": [...]}. A missing sidecar means n_d = 0.

#include "grassfield/errors.hpp"
#include "grassfield/snapshot.hpp"

#include "json.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace grassfield::io {

inline constexpr std::array<char, 4> kSnapshotMagic{'G', 'F', 'L', 'D'};
inline constexpr std::uint32_t kSnapshotVersion = 1;

namespace detail {

template <typename T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    std::array<unsigned char, sizeof(T)> b;
    std::memcpy(b.data(), &v, sizeof(T));
    std::reverse(b.begin(), b.end());
    std::memcpy(&v, b.data(), sizeof(T));
  }
  return v;
}

template <typename T>
void put(std::string& out, T v) {
  v = to_little(v);
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T take(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) {
    throw Error(ErrorCode::MalformedSnapshot, "truncated snapshot payload");
  }
  T v;
  std::memcpy(&v, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return to_little(v);
}

inline std::string read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace detail

inline std::string encode_snapshot(const FieldSnapshot& s) {
  std::string out;
  out.reserve(20 + 8 * static_cast<std::size_t>(s.params.size() + s.field.size()));
  out.append(kSnapshotMagic.data(), kSnapshotMagic.size());
  detail::put<std::uint32_t>(out, kSnapshotVersion);
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(s.field.rows()));
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(s.field.cols()));
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(s.params.size()));
  for (Eigen::Index i = 0; i < s.params.size(); ++i) detail::put<double>(out, s.params(i));
  for (Eigen::Index i = 0; i < s.field.rows(); ++i)
    for (Eigen::Index j = 0; j < s.field.cols(); ++j) detail::put<double>(out, s.field(i, j));
  return out;
}

inline FieldSnapshot decode_snapshot(const std::string& bytes) {
  if (bytes.size() < 20 || std::memcmp(bytes.data(), kSnapshotMagic.data(), 4) != 0) {
    throw Error(ErrorCode::MalformedSnapshot, "missing GFLD magic");
  }
  std::size_t pos = 4;
  const auto version = detail::take<std::uint32_t>(bytes, pos);
  if (version != kSnapshotVersion) {
    throw Error(ErrorCode::MalformedSnapshot, "unsupported version " + std::to_string(version));
  }
  const auto n_f = detail::take<std::uint32_t>(bytes, pos);
  const auto m_f = detail::take<std::uint32_t>(bytes, pos);
  const auto n_d = detail::take<std::uint32_t>(bytes, pos);
  const std::size_t expected = 20 + 8 * (static_cast<std::size_t>(n_d) +
                                         static_cast<std::size_t>(n_f) * m_f);
  if (bytes.size() != expected) {
    throw Error(ErrorCode::MalformedSnapshot, "payload is " + std::to_string(bytes.size()) +
                                                  " bytes, header implies " +
                                                  std::to_string(expected));
  }
  FieldSnapshot s;
  s.params.resize(n_d);
  for (std::uint32_t i = 0; i < n_d; ++i) s.params(i) = detail::take<double>(bytes, pos);
  s.field.resize(n_f, m_f);
  for (std::uint32_t i = 0; i < n_f; ++i)
    for (std::uint32_t j = 0; j < m_f; ++j) s.field(i, j) = detail::take<double>(bytes, pos);
  s.validate();
  return s;
}

inline void write_snapshot(const std::filesystem::path& path, const FieldSnapshot& s) {
  const auto bytes = encode_snapshot(s);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoError, "short write to " + path.string());
}

inline FieldSnapshot read_snapshot_binary(const std::filesystem::path& path) {
  return decode_snapshot(detail::read_all(path));
}

inline std::filesystem::path csv_sidecar(const std::filesystem::path& csv) {
  return std::filesystem::path(csv.string() + ".meta.json");
}

inline FieldSnapshot read_snapshot_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        throw Error(ErrorCode::MalformedSnapshot, "non-numeric CSV cell '" + cell + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw Error(ErrorCode::MalformedSnapshot, "ragged CSV row in " + path.string());
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(ErrorCode::MalformedSnapshot, "empty CSV " + path.string());

  FieldSnapshot s;
  s.field.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      s.field(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];

  const auto meta = csv_sidecar(path);
  if (std::filesystem::exists(meta)) {
    try {
      const auto j = nlohmann::json::parse(detail::read_all(meta));
      const auto xi = j.at("xi").get<std::vector<double>>();
      s.params = Eigen::Map<const Vector>(xi.data(), static_cast<Eigen::Index>(xi.size()));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::MalformedSnapshot, "bad sidecar " + meta.string() + ": " + e.what());
    }
  }
  s.validate();
  return s;
}

inline void write_snapshot_csv(const std::filesystem::path& path, const FieldSnapshot& s) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out.precision(17);
  for (Eigen::Index i = 0; i < s.field.rows(); ++i) {
    for (Eigen::Index j = 0; j < s.field.cols(); ++j) {
      if (j) out << ',';
      out << s.field(i, j);
    }
    out << '\n';
  }
  nlohmann::json meta;
  meta["xi"] = std::vector<double>(s.params.data(), s.params.data() + s.params.size());
  std::ofstream(csv_sidecar(path), std::ios::trunc) << meta.dump() << '\n';
}

/// Dispatches on extension: ".csv" is text, anything else is GFLD binary.
inline FieldSnapshot read_snapshot(const std::filesystem::path& path) {
  if (path.extension() == ".csv") return read_snapshot_csv(path);
  return read_snapshot_binary(path);
}

}  // namespace grassfield::io

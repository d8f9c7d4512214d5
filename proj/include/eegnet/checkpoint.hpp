#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <zlib.h>

#include <nlohmann/json.hpp>

#include "eegnet/error.hpp"
#include "eegnet/io.hpp"
#include "eegnet/model.hpp"

namespace eegnet {

// One training stage in a checkpoint's history, oldest first.
struct StageRecord {
  std::string subset;  // "raw", "theta", ...
  std::size_t epochs = 0;
  std::uint64_t seed = 0;
  std::string data_hash;

  bool operator==(const StageRecord&) const = default;
};

struct Checkpoint {
  ModelParams<float> params;
  std::vector<StageRecord> provenance;

  const ModelConfig& config() const { return params.config; }
};

inline void to_json(nlohmann::json& j, const StageRecord& s) {
  j = {{"subset", s.subset}, {"epochs", s.epochs}, {"seed", s.seed}, {"data_hash", s.data_hash}};
}
inline void from_json(const nlohmann::json& j, StageRecord& s) {
  s.subset = j.at("subset").get<std::string>();
  s.epochs = j.at("epochs").get<std::size_t>();
  s.seed = j.at("seed").get<std::uint64_t>();
  s.data_hash = j.at("data_hash").get<std::string>();
}

// File layout (all integers little-endian):
//   "NCKP" | u16 version | u32 header length | JSON header | float32 tensor data
// The header carries the model config, the tensor table (name, shape, byte
// offset into the data region), the provenance chain and a CRC-32 of the data.
inline constexpr char kCheckpointMagic[4] = {'N', 'C', 'K', 'P'};
inline constexpr std::uint16_t kCheckpointVersion = 1;

namespace detail {

inline void put_le(std::string& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline std::uint64_t get_le(const unsigned char* p, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

inline std::uint32_t crc32_of(const std::string& bytes) {
  return static_cast<std::uint32_t>(
      ::crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size())));
}

}  // namespace detail

inline std::string serialize_checkpoint(const Checkpoint& ckpt) {
  std::string data;
  nlohmann::json table = nlohmann::json::array();
  ckpt.params.for_each_tensor([&](const std::string& name, const Tensor<float>& t) {
    table.push_back({{"name", name}, {"shape", t.shape}, {"offset", data.size()}});
    for (float v : t.data) detail::put_le(data, std::bit_cast<std::uint32_t>(v), 4);
  });
  nlohmann::json header = {{"config", ckpt.params.config},
                           {"tensors", table},
                           {"provenance", ckpt.provenance},
                           {"data_bytes", data.size()},
                           {"crc32", detail::crc32_of(data)}};
  const std::string header_text = header.dump();

  std::string out(kCheckpointMagic, 4);
  detail::put_le(out, kCheckpointVersion, 2);
  detail::put_le(out, header_text.size(), 4);
  out += header_text;
  out += data;
  return out;
}

inline Checkpoint deserialize_checkpoint(const std::string& bytes) {
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (bytes.size() < 10 || std::memcmp(bytes.data(), kCheckpointMagic, 4) != 0)
    throw FormatError("checkpoint: bad magic");
  const auto version = detail::get_le(p + 4, 2);
  if (version != kCheckpointVersion)
    throw FormatError("checkpoint: unsupported version " + std::to_string(version));
  const auto header_len = detail::get_le(p + 6, 4);
  if (10 + header_len > bytes.size()) throw FormatError("checkpoint: truncated header");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(10, header_len));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint: unreadable header: ") + e.what());
  }
  const auto data_bytes = header.at("data_bytes").get<std::size_t>();
  const std::size_t data_start = 10 + header_len;
  if (bytes.size() != data_start + data_bytes) throw FormatError("checkpoint: truncated or oversized tensor data");
  const std::string data = bytes.substr(data_start);
  if (detail::crc32_of(data) != header.at("crc32").get<std::uint32_t>())
    throw FormatError("checkpoint: checksum mismatch in tensor data");

  ModelConfig cfg;
  try {
    cfg = header.at("config").get<ModelConfig>();
  } catch (const ConfigError& e) {
    throw FormatError(std::string("checkpoint: invalid model config: ") + e.what());
  }
  Checkpoint ckpt;
  ckpt.params = ModelParams<float>(cfg);
  ckpt.provenance = header.at("provenance").get<std::vector<StageRecord>>();

  const auto& table = header.at("tensors");
  std::size_t idx = 0;
  ckpt.params.for_each_tensor([&](const std::string& name, Tensor<float>& t) {
    if (idx >= table.size()) throw FormatError("checkpoint: tensor table is missing " + name);
    const auto& entry = table[idx++];
    if (entry.at("name").get<std::string>() != name || entry.at("shape").get<Shape>() != t.shape)
      throw FormatError("checkpoint: tensor table entry " + entry.at("name").get<std::string>() +
                        " is inconsistent with the model config (expected " + name + " " + shape_string(t.shape) +
                        ")");
    const auto offset = entry.at("offset").get<std::size_t>();
    if (offset + 4 * t.size() > data.size()) throw FormatError("checkpoint: tensor " + name + " runs past the data");
    const auto* src = reinterpret_cast<const unsigned char*>(data.data()) + offset;
    for (std::size_t i = 0; i < t.size(); ++i)
      t[i] = std::bit_cast<float>(static_cast<std::uint32_t>(detail::get_le(src + 4 * i, 4)));
  });
  if (idx != table.size()) throw FormatError("checkpoint: tensor table has extra entries");
  return ckpt;
}

/// Atomic write: the file appears complete under its final name or not at all.
inline void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  detail::write_text_atomic(path, serialize_checkpoint(ckpt));
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return deserialize_checkpoint(detail::read_text(path));
}

// Also refuses checkpoints whose model config differs from `expected`.
inline Checkpoint load_checkpoint(const std::filesystem::path& path, const ModelConfig& expected) {
  auto ckpt = load_checkpoint(path);
  if (ckpt.config() != expected)
    throw CheckpointMismatch("checkpoint " + path.string() + " was trained with model config " +
                             nlohmann::json(ckpt.config()).dump() + ", expected " + nlohmann::json(expected).dump());
  return ckpt;
}

}  // namespace eegnet

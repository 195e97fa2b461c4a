#pragma once

#include <string>

#include <json.hpp>

#include "qgen/nn/graph.hpp"

namespace qgen::model {

// Checkpoint container shared by the QG/QPC/QA models. Layout:
//   magic (4 bytes) | u32 version | u64 header length | header JSON (UTF-8)
//   | u32 tensor count | per tensor: u32 name length, name, u32 ndim,
//     u32 dims..., f32 little-endian values.
// Tensors are written in name order; loading and re-saving a file is
// byte-identical.
inline constexpr uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::string magic;  // "QGCK", "QPCK", "QACK"
  uint32_t version = kCheckpointVersion;
  nlohmann::json header;
  nn::ParameterSet params;
};

void write_checkpoint(const std::string& path, const std::string& magic,
                      const nlohmann::json& header, const nn::ParameterSet& params);

Checkpoint read_checkpoint(const std::string& path, const std::string& expected_magic);

}  // namespace qgen::model

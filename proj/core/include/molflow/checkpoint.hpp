#pragma once

#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

#include "molflow/param_vector.hpp"

namespace molflow {

// Flat little-endian float64 parameter array preceded by a versioned JSON
// header carrying the model kind, configuration, step count and the named
// slice table.
inline constexpr uint32_t kCheckpointVersion = 1;

struct CheckpointHeader {
  std::string kind;  // "teacher", "student-affine", "student-non-affine"
  int64_t step = 0;
  nlohmann::json config;
};

void save_checkpoint(const std::string& path, const CheckpointHeader& header,
                     const ParamVector& params);

// Reads and validates the header only.
CheckpointHeader load_checkpoint_header(const std::string& path);

// Loads parameters into an already-built ParamVector whose slice table must
// match the stored one exactly.
CheckpointHeader load_checkpoint(const std::string& path, ParamVector& params);

}  // namespace molflow

#pragma once

// Model checkpoint layout:
//
//   CONSEG-BILSTM-v1\n
//   <one-line JSON header: dimensions, training config, tensor table>\n
//   <every tensor in declared order as little-endian float64, column-major>

#include "conseg/train.hpp"

#include <filesystem>
#include <string>
#include <string_view>

namespace conseg {

inline constexpr std::string_view kCheckpointMagic = "CONSEG-BILSTM-v1";

std::string serialize_model(const BoundaryModel& model);

/// Throws ValidationError on a bad magic string, malformed header, tensor
/// table that disagrees with the dimensions, truncated payload or
/// non-finite weights.
BoundaryModel deserialize_model(std::string_view bytes);

void save_model(const BoundaryModel& model, const std::filesystem::path& path);
BoundaryModel load_model(const std::filesystem::path& path);

}  // namespace conseg

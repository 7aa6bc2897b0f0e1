#pragma once

#include <string>

#include "ccafuse/harness.hpp"

namespace ccafuse {

/// File layout: the line "CCAFUSE1", then a JSON document holding the format
/// version, the method tag and every fitted parameter. Doubles round-trip
/// exactly.
inline constexpr const char* kModelMagic = "CCAFUSE1";
inline constexpr int kModelVersion = 1;

void save_pipeline(const Pipeline& pipeline, const std::string& path);
Pipeline load_pipeline(const std::string& path);

Json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j);

}  // namespace ccafuse

#pragma once

#include <string>

#include "stopwise/runtime.hpp"

namespace stopwise {

/// Current on-disk model format version.
inline constexpr int kModelFormatVersion = 1;

/// Write the model as self-describing JSON (floats at shortest round-trip
/// precision).
void save_model(const PolicyModel& m, const std::string& path);

/// Read a model back; throws on unknown version, malformed or truncated
/// files, and dimension inconsistencies. Never returns a partial model.
PolicyModel load_model(const std::string& path);

/// In-memory variants, exposed for round-trip testing.
std::string model_to_json(const PolicyModel& m);
PolicyModel model_from_json(const std::string& text);

} // namespace stopwise

#pragma once

#include <string>

#include "abstain/model.hpp"

namespace abstain {

/// Model files: JSON header (kind, dims, clamp, training provenance,
/// format version, checksum) plus the parameters as a row-major decimal
/// text block printed at full precision, so round trips are bit-exact.
void save_model(const std::string& path, const Model& model);
Model load_model(const std::string& path);

}  // namespace abstain

#pragma once

#include "evc/loss.hpp"
#include "evc/metrics.hpp"
#include "evc/voxel.hpp"

#include <json.hpp>

namespace evc {

// Flat objects with lowercase keys. Non-finite values are written as null.
nlohmann::json to_json(const VoxelStats& stats);
nlohmann::json to_json(const VoxelMetrics& metrics);
nlohmann::json to_json(const StreamMetrics& metrics);
nlohmann::json to_json(const LossReport& report);

} // namespace evc

#pragma once

#include "evc/event.hpp"

#include <cstddef>
#include <filesystem>
#include <optional>

namespace evc {

/// Reads a `t_us,x,y,p` CSV file. Without an explicit geometry the sensor is
/// sized to the largest coordinates seen (at least 1x1).
EventStream read_events_csv(const std::filesystem::path& path,
                            std::optional<SensorGeometry> geometry = std::nullopt);
void write_events_csv(const EventStream& stream, const std::filesystem::path& path);

/// EVS1 little-endian binary container.
EventStream read_events_binary(const std::filesystem::path& path);
void write_events_binary(const EventStream& stream, const std::filesystem::path& path);

/// Writes `x,y,t_us,p` rows, keeping every k-th event with k = ceil(N / max_points).
void export_point_cloud(const EventStream& stream, std::size_t max_points, const std::filesystem::path& path);

/// Formats a timestamp so it parses back to the same double and has at least
/// three fractional digits.
std::string format_timestamp(double t);

} // namespace evc

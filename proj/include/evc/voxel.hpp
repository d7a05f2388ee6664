#pragma once

#include "evc/event.hpp"

#include <cstddef>
#include <filesystem>
#include <vector>

namespace evc {

/// Number of bins per frame interval used throughout the toolkit.
inline constexpr int kDefaultBinsPerInterval = 10;

/// Dense event voxel grid with layout [L][P=2][C][H][W]; channel 0 is ON.
///
/// Bins are globally contiguous in time: global bin g = l * C + c covers
/// [t0 + g * delta, t0 + (g + 1) * delta).
class VoxelGrid {
public:
    VoxelGrid() = default;
    VoxelGrid(SensorGeometry geometry, int intervals, int bins, double t0, double delta);

    const SensorGeometry& geometry() const { return geometry_; }
    int width() const { return geometry_.width; }
    int height() const { return geometry_.height; }
    int intervals() const { return intervals_; }
    int bins() const { return bins_; }
    /// Total number of time bins, L * C.
    int time_bins() const { return intervals_ * bins_; }
    double t0() const { return t0_; }
    double delta() const { return delta_; }
    double t_end() const { return t0_ + static_cast<double>(time_bins()) * delta_; }

    std::size_t index(int global_bin, int channel, int y, int x) const
    {
        const int l = global_bin / bins_;
        const int c = global_bin % bins_;
        return ((static_cast<std::size_t>(l) * 2 + channel) * bins_ + c) * geometry_.pixels()
            + static_cast<std::size_t>(y) * geometry_.width + x;
    }

    double& at(int global_bin, int channel, int y, int x) { return data_[index(global_bin, channel, y, x)]; }
    double at(int global_bin, int channel, int y, int x) const { return data_[index(global_bin, channel, y, x)]; }

    /// Stride between consecutive global bins of the same series is not
    /// uniform across interval seams, so series access goes through these.
    std::vector<double> series(int channel, int y, int x) const;
    void set_series(int channel, int y, int x, const std::vector<double>& values);

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool same_shape(const VoxelGrid& other) const;

    friend bool operator==(const VoxelGrid&, const VoxelGrid&) = default;

private:
    SensorGeometry geometry_;
    int intervals_ = 0;
    int bins_ = 0;
    double t0_ = 0.0;
    double delta_ = 1.0;
    std::vector<double> data_;
};

/// Step-signal voxelization. An event at relative offset r inside global bin k
/// adds (1 - r/delta) to bin k and r/delta to bin k + 1; spill past the last
/// bin is dropped. Events outside [t0, t0 + L * interval) are ignored.
VoxelGrid voxelize(const EventStream& stream, double t0, double interval, int intervals,
                   int bins = kDefaultBinsPerInterval, unsigned threads = 1);

struct VoxelStats {
    double nonzero_fraction = 0.0;
    double above_one_fraction_of_nonzero = 0.0;
    double total_mass = 0.0;
    double max_value = 0.0;
};

VoxelStats voxel_stats(const VoxelGrid& grid, double zero_eps = 1e-9);

/// VOXG container. Values are stored as f32.
VoxelGrid read_voxels(const std::filesystem::path& path);
void write_voxels(const VoxelGrid& grid, const std::filesystem::path& path);

} // namespace evc

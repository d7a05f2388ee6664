#pragma once

#include "evc/event.hpp"
#include "evc/voxel.hpp"

#include <filesystem>
#include <vector>

namespace evc {

/// Grayscale frames with intensities in [0, 1], row-major H x W each.
struct FrameSequence {
    SensorGeometry geometry;
    std::vector<std::vector<double>> frames;
    std::vector<double> timestamps; // us, strictly increasing
};

struct FrontendConfig {
    double theta_on = 0.2;
    double theta_off = 0.2;
    double log_eps = 1.0 / 255.0;
};

/// Throws ValidationError if the sequence or config is unusable.
void validate(const FrameSequence& seq);
void validate(const FrontendConfig& cfg);

/// Log-intensity threshold-crossing event generation with per-pixel linear
/// interpolation of ln(max(I, log_eps)) between frames.
EventStream simulate(const FrameSequence& seq, const FrontendConfig& cfg = {});

/// simulate() followed by voxelize() with one interval per frame pair.
/// Requires uniform frame spacing.
VoxelGrid simulate_to_voxels(const FrameSequence& seq, const FrontendConfig& cfg = {},
                             int bins = kDefaultBinsPerInterval);

/// Directory of P5 PGM files (lexical order) plus a text file with one
/// timestamp per line.
FrameSequence read_pgm_sequence(const std::filesystem::path& directory, const std::filesystem::path& timestamps);
void write_pgm(const std::vector<double>& frame, SensorGeometry geometry, const std::filesystem::path& path);

/// FRMS raw frame stack.
FrameSequence read_frame_stack(const std::filesystem::path& path);
void write_frame_stack(const FrameSequence& seq, const std::filesystem::path& path);

} // namespace evc

#pragma once

#include "evc/event.hpp"
#include "evc/voxel.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

namespace evc {

inline constexpr double kBinarizeThreshold = 0.001;

/// Mean squared error after k x k x k average pooling (kernel = stride = k)
/// over (time, y, x), per polarity. Partial windows at the edges are dropped;
/// if no full window fits the result is 0.
double pmse(const VoxelGrid& gt, const VoxelGrid& pred, int k);

enum class CollapseMode { Raw, Time, TimePolarity };

struct BinaryMap {
    /// Raw: 2 * L * C maps, Time: 2 maps, TimePolarity: 1 map; each H x W.
    int maps = 0;
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> values;
};

/// Collapses the requested axes by summation, then marks cells strictly
/// greater than the threshold.
BinaryMap collapse_binarize(const VoxelGrid& grid, CollapseMode mode, double threshold = kBinarizeThreshold);

struct BinaryScores {
    double accuracy = 0.0;
    double f1 = 0.0;
};

/// Accuracy and micro-averaged F1 (positive class = 1). F1 is 0 when there are
/// no true positives.
BinaryScores binary_scores(const BinaryMap& gt, const BinaryMap& pred);

struct VoxelMetrics {
    double pmse2 = 0.0;
    double pmse4 = 0.0;
    double tpacc = 0.0;
    double tacc = 0.0;
    double racc = 0.0;
    double tpf1 = 0.0;
    double tf1 = 0.0;
    double rf1 = 0.0;
};

VoxelMetrics voxel_metrics(const VoxelGrid& gt, const VoxelGrid& pred);

struct StreamMetrics {
    double mete = 0.0;     // us
    std::size_t noe = 0;
    double gper = 0.0;     // +inf when pred is empty and gt is not
    std::optional<double> c_mete;
    std::optional<double> c_noe;

    bool gper_infinite() const;
};

/// Per ground-truth event: distance to the nearest predicted event at the same
/// (x, y, polarity), capped at 3 * delta. Events without a candidate within
/// 3 * delta count towards NOE.
StreamMetrics stream_metrics(const EventStream& gt, const EventStream& pred, double delta);

} // namespace evc

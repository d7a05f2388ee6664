#pragma once

#include "evc/voxel.hpp"

#include <vector>

namespace evc {

struct PoolLevel {
    int kernel = 2;
    int stride = 2;
    double weight = 1.0;
};

struct PyramidConfig {
    std::vector<PoolLevel> levels{{2, 2, 1.0}, {4, 4, 1.0}, {8, 8, 1.0}};
};

struct LossConfig {
    PyramidConfig pyramid;
    double beta = 0.01;
    double alpha_stp = 1.0;
    double alpha_tp = 1.0;
    double alpha_ef = 1.0;
    double alpha_bc = 1.0;
};

/// The adversarial term needs a trained discriminator and is never computed;
/// `adversarial_included` is always false.
struct LossReport {
    double stp = 0.0;
    double tp = 0.0;
    double ef = 0.0;
    double bc = 0.0;
    double combined = 0.0;
    bool adversarial_included = false;
};

/// Weighted sum over pyramid levels of the squared L2 distance between 3D
/// average-pooled (time, y, x) volumes, summed over both polarities.
double stp_measure(const VoxelGrid& gt, const VoxelGrid& pred, const PyramidConfig& cfg);

/// As stp_measure, pooling along the time axis only.
double tp_measure(const VoxelGrid& gt, const VoxelGrid& pred, const PyramidConfig& cfg);

/// Squared distance between per-interval and whole-sequence event frames,
/// both with and without polarity.
double ef_measure(const VoxelGrid& gt, const VoxelGrid& pred);

/// Mean of voxel values strictly above beta; 0 if none qualify.
double mean_brightness(const VoxelGrid& grid, double beta);

double bc_measure(const VoxelGrid& gt, const VoxelGrid& pred, double beta);

LossReport combined_measure(const VoxelGrid& gt, const VoxelGrid& pred, const LossConfig& cfg = {});

} // namespace evc

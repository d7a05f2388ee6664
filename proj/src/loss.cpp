#include "evc/loss.hpp"

#include "evc/error.hpp"
#include "pooling.hpp"

#include <cmath>

namespace evc {

namespace {

void require_same_shape(const VoxelGrid& gt, const VoxelGrid& pred)
{
    if (!gt.same_shape(pred)) throw ValidationError("voxel grids have different dimensions");
}

void validate(const PyramidConfig& cfg)
{
    for (const auto& level : cfg.levels) {
        if (level.kernel < 1 || level.stride < 1) throw ValidationError("pooling kernel and stride must be >= 1");
        if (!std::isfinite(level.weight)) throw ValidationError("pyramid weights must be finite");
    }
}

template <typename PoolFn>
double pyramid_distance(const VoxelGrid& gt, const VoxelGrid& pred, const PyramidConfig& cfg, PoolFn pool)
{
    require_same_shape(gt, pred);
    validate(cfg);
    double total = 0.0;
    for (const auto& level : cfg.levels) {
        const detail::Window w{level.kernel, level.stride};
        double level_sum = 0.0;
        for (int ch = 0; ch < 2; ++ch) level_sum += detail::squared_distance(pool(gt, ch, w), pool(pred, ch, w));
        total += level.weight * level_sum;
    }
    return total;
}

// Per-interval event frames, layout [L][channel][pixel].
std::vector<double> interval_frames(const VoxelGrid& grid)
{
    const std::size_t plane = grid.geometry().pixels();
    std::vector<double> frames(static_cast<std::size_t>(grid.intervals()) * 2 * plane, 0.0);
    for (int l = 0; l < grid.intervals(); ++l)
        for (int ch = 0; ch < 2; ++ch)
            for (int c = 0; c < grid.bins(); ++c) {
                const int g = l * grid.bins() + c;
                double* frame = frames.data() + (static_cast<std::size_t>(l) * 2 + ch) * plane;
                for (int y = 0; y < grid.height(); ++y)
                    for (int x = 0; x < grid.width(); ++x)
                        frame[static_cast<std::size_t>(y) * grid.width() + x] += grid.at(g, ch, y, x);
            }
    return frames;
}

} // namespace

double stp_measure(const VoxelGrid& gt, const VoxelGrid& pred, const PyramidConfig& cfg)
{
    return pyramid_distance(gt, pred, cfg, [](const VoxelGrid& g, int ch, detail::Window w) {
        return detail::average_pool(g, ch, w, w, w);
    });
}

double tp_measure(const VoxelGrid& gt, const VoxelGrid& pred, const PyramidConfig& cfg)
{
    return pyramid_distance(gt, pred, cfg, [](const VoxelGrid& g, int ch, detail::Window w) {
        return detail::average_pool(g, ch, w, detail::Window{}, detail::Window{});
    });
}

double ef_measure(const VoxelGrid& gt, const VoxelGrid& pred)
{
    require_same_shape(gt, pred);
    const std::size_t plane = gt.geometry().pixels();
    const int intervals = gt.intervals();
    const auto a = interval_frames(gt);
    const auto b = interval_frames(pred);

    double per_interval = 0.0;          // S_C, polarized
    double per_interval_merged = 0.0;   // S_C, polarities summed
    std::vector<double> seq_diff(2 * plane, 0.0); // S_LC difference per channel
    for (int l = 0; l < intervals; ++l)
        for (std::size_t px = 0; px < plane; ++px) {
            double merged = 0.0;
            for (int ch = 0; ch < 2; ++ch) {
                const std::size_t i = (static_cast<std::size_t>(l) * 2 + ch) * plane + px;
                const double d = a[i] - b[i];
                per_interval += d * d;
                merged += d;
                seq_diff[ch * plane + px] += d;
            }
            per_interval_merged += merged * merged;
        }

    double sequence = 0.0;
    double sequence_merged = 0.0;
    for (std::size_t px = 0; px < plane; ++px) {
        const double on = seq_diff[px];
        const double off = seq_diff[plane + px];
        sequence += on * on + off * off;
        sequence_merged += (on + off) * (on + off);
    }
    return per_interval + sequence + per_interval_merged + sequence_merged;
}

double mean_brightness(const VoxelGrid& grid, double beta)
{
    if (!(beta >= 0.0)) throw ValidationError("beta must be >= 0");
    double sum = 0.0;
    std::size_t count = 0;
    for (double v : grid.data())
        if (v > beta) {
            sum += v;
            ++count;
        }
    return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

double bc_measure(const VoxelGrid& gt, const VoxelGrid& pred, double beta)
{
    const double d = mean_brightness(gt, beta) - mean_brightness(pred, beta);
    return d * d;
}

LossReport combined_measure(const VoxelGrid& gt, const VoxelGrid& pred, const LossConfig& cfg)
{
    for (double a : {cfg.alpha_stp, cfg.alpha_tp, cfg.alpha_ef, cfg.alpha_bc})
        if (!(a >= 0.0) || !std::isfinite(a)) throw ValidationError("loss weights must be finite and >= 0");

    LossReport r;
    r.stp = stp_measure(gt, pred, cfg.pyramid);
    r.tp = tp_measure(gt, pred, cfg.pyramid);
    r.ef = ef_measure(gt, pred);
    r.bc = bc_measure(gt, pred, cfg.beta);
    r.combined = cfg.alpha_stp * r.stp + cfg.alpha_tp * r.tp + cfg.alpha_ef * r.ef + cfg.alpha_bc * r.bc;
    return r;
}

} // namespace evc

#pragma once

#include "evc/voxel.hpp"

#include <cstddef>
#include <vector>

namespace evc::detail {

struct Window {
    int kernel = 1;
    int stride = 1;
};

inline int pooled_size(int size, Window w)
{
    return size < w.kernel ? 0 : (size - w.kernel) / w.stride + 1;
}

/// Average pooling of one polarity channel over (time, y, x). The result is
/// laid out [time][y][x] with the pooled sizes.
inline std::vector<double> average_pool(const VoxelGrid& grid, int channel, Window wt, Window wy, Window wx)
{
    const int nt = pooled_size(grid.time_bins(), wt);
    const int ny = pooled_size(grid.height(), wy);
    const int nx = pooled_size(grid.width(), wx);
    std::vector<double> out(static_cast<std::size_t>(nt) * ny * nx, 0.0);
    const double norm = 1.0 / (static_cast<double>(wt.kernel) * wy.kernel * wx.kernel);

    std::size_t o = 0;
    for (int pt = 0; pt < nt; ++pt)
        for (int py = 0; py < ny; ++py)
            for (int px = 0; px < nx; ++px, ++o) {
                double sum = 0.0;
                for (int t = pt * wt.stride; t < pt * wt.stride + wt.kernel; ++t)
                    for (int y = py * wy.stride; y < py * wy.stride + wy.kernel; ++y)
                        for (int x = px * wx.stride; x < px * wx.stride + wx.kernel; ++x)
                            sum += grid.at(t, channel, y, x);
                out[o] = sum * norm;
            }
    return out;
}

inline double squared_distance(const std::vector<double>& a, const std::vector<double>& b)
{
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        sum += d * d;
    }
    return sum;
}

} // namespace evc::detail

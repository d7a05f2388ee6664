#include "evc/metrics.hpp"

#include "evc/error.hpp"
#include "pooling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace evc {

namespace {

void require_same_shape(const VoxelGrid& gt, const VoxelGrid& pred)
{
    if (!gt.same_shape(pred)) throw ValidationError("voxel grids have different dimensions");
}

} // namespace

double pmse(const VoxelGrid& gt, const VoxelGrid& pred, int k)
{
    require_same_shape(gt, pred);
    if (k < 1) throw ValidationError("pooling size must be >= 1");
    const detail::Window w{k, k};
    double sum = 0.0;
    std::size_t cells = 0;
    for (int ch = 0; ch < 2; ++ch) {
        const auto a = detail::average_pool(gt, ch, w, w, w);
        const auto b = detail::average_pool(pred, ch, w, w, w);
        sum += detail::squared_distance(a, b);
        cells += a.size();
    }
    return cells == 0 ? 0.0 : sum / static_cast<double>(cells);
}

BinaryMap collapse_binarize(const VoxelGrid& grid, CollapseMode mode, double threshold)
{
    if (!(threshold >= 0.0)) throw ValidationError("threshold must be >= 0");
    const int h = grid.height();
    const int w = grid.width();
    const std::size_t plane = grid.geometry().pixels();

    BinaryMap map;
    map.height = h;
    map.width = w;
    switch (mode) {
    case CollapseMode::Raw: {
        map.maps = 2 * grid.time_bins();
        map.values.resize(grid.data().size());
        std::transform(grid.data().begin(), grid.data().end(), map.values.begin(),
                       [threshold](double v) { return static_cast<std::uint8_t>(v > threshold); });
        break;
    }
    case CollapseMode::Time:
    case CollapseMode::TimePolarity: {
        const bool merge = mode == CollapseMode::TimePolarity;
        map.maps = merge ? 1 : 2;
        std::vector<double> sums(plane * map.maps, 0.0);
        for (int ch = 0; ch < 2; ++ch)
            for (int g = 0; g < grid.time_bins(); ++g)
                for (int y = 0; y < h; ++y)
                    for (int x = 0; x < w; ++x)
                        sums[(merge ? 0 : ch) * plane + static_cast<std::size_t>(y) * w + x] += grid.at(g, ch, y, x);
        map.values.resize(sums.size());
        std::transform(sums.begin(), sums.end(), map.values.begin(),
                       [threshold](double v) { return static_cast<std::uint8_t>(v > threshold); });
        break;
    }
    }
    return map;
}

BinaryScores binary_scores(const BinaryMap& gt, const BinaryMap& pred)
{
    if (gt.values.size() != pred.values.size()) throw ValidationError("binary maps have different sizes");
    std::size_t tp = 0, fp = 0, fn = 0, agree = 0;
    for (std::size_t i = 0; i < gt.values.size(); ++i) {
        const bool g = gt.values[i] != 0;
        const bool p = pred.values[i] != 0;
        agree += g == p;
        tp += g && p;
        fp += !g && p;
        fn += g && !p;
    }
    BinaryScores s;
    s.accuracy = gt.values.empty() ? 0.0 : static_cast<double>(agree) / static_cast<double>(gt.values.size());
    s.f1 = tp == 0 ? 0.0 : 2.0 * tp / static_cast<double>(2 * tp + fp + fn);
    return s;
}

VoxelMetrics voxel_metrics(const VoxelGrid& gt, const VoxelGrid& pred)
{
    require_same_shape(gt, pred);
    VoxelMetrics m;
    m.pmse2 = pmse(gt, pred, 2);
    m.pmse4 = pmse(gt, pred, 4);

    const auto score = [&](CollapseMode mode) {
        return binary_scores(collapse_binarize(gt, mode), collapse_binarize(pred, mode));
    };
    const auto raw = score(CollapseMode::Raw);
    const auto time = score(CollapseMode::Time);
    const auto tp = score(CollapseMode::TimePolarity);
    m.racc = raw.accuracy;
    m.rf1 = raw.f1;
    m.tacc = time.accuracy;
    m.tf1 = time.f1;
    m.tpacc = tp.accuracy;
    m.tpf1 = tp.f1;
    return m;
}

bool StreamMetrics::gper_infinite() const { return std::isinf(gper); }

StreamMetrics stream_metrics(const EventStream& gt, const EventStream& pred, double delta)
{
    if (!(delta > 0.0) || !std::isfinite(delta)) throw ValidationError("bin width must be finite and > 0");
    if (gt.geometry != pred.geometry) throw ValidationError("streams have different sensor geometry");

    const int width = gt.geometry.width;
    const auto key = [width](const Event& e) {
        return (static_cast<std::size_t>(e.y) * width + e.x) * 2 + polarity_channel(e.p);
    };

    // Predicted timestamps bucketed by (pixel, polarity), sorted within each bucket.
    const std::size_t n_keys = gt.geometry.pixels() * 2;
    std::vector<std::size_t> start(n_keys + 1, 0);
    for (const Event& e : pred.events) ++start[key(e) + 1];
    for (std::size_t i = 0; i < n_keys; ++i) start[i + 1] += start[i];
    std::vector<double> times(pred.size());
    {
        auto fill = start;
        for (const Event& e : pred.events) times[fill[key(e)]++] = e.t;
    }
    for (std::size_t k = 0; k < n_keys; ++k)
        if (start[k + 1] - start[k] > 1) std::sort(times.begin() + start[k], times.begin() + start[k + 1]);

    const double cap = 3.0 * delta;
    StreamMetrics m;
    double total = 0.0;
    for (const Event& e : gt.events) {
        const std::size_t k = key(e);
        const auto first = times.begin() + start[k];
        const auto last = times.begin() + start[k + 1];
        double best = std::numeric_limits<double>::infinity();
        auto it = std::lower_bound(first, last, e.t);
        if (it != last) best = *it - e.t;
        if (it != first) best = std::min(best, e.t - *std::prev(it));
        if (best > cap) {
            ++m.noe;
            best = cap;
        }
        total += best;
    }

    const auto n_gt = static_cast<double>(gt.size());
    const auto n_pred = static_cast<double>(pred.size());
    m.mete = gt.empty() ? 0.0 : total / n_gt;
    if (gt.empty()) {
        m.gper = pred.empty() ? 1.0 : 0.0;
    } else if (pred.empty()) {
        m.gper = std::numeric_limits<double>::infinity();
        return m;
    } else {
        m.gper = n_gt / n_pred;
    }
    const double scale = std::max(m.gper, 1.0);
    m.c_mete = m.mete * scale;
    m.c_noe = static_cast<double>(m.noe) * scale;
    return m;
}

} // namespace evc

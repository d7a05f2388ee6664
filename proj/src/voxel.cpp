#include "evc/voxel.hpp"

#include "binary_io.hpp"
#include "evc/error.hpp"
#include "parallel.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace evc {

namespace {

constexpr std::string_view kVoxelMagic = "VOXG";
constexpr std::uint32_t kVoxelVersion = 1;

// Keeps the dense tensor within what a size_t index and an allocation can hold.
constexpr double kMaxVoxels = static_cast<double>(std::size_t{1} << 40);

} // namespace

VoxelGrid::VoxelGrid(SensorGeometry geometry, int intervals, int bins, double t0, double delta)
    : geometry_(geometry), intervals_(intervals), bins_(bins), t0_(t0), delta_(delta)
{
    if (!geometry.valid()) throw ValidationError("invalid sensor geometry");
    if (intervals < 1) throw ValidationError("interval count must be >= 1");
    if (bins < 1) throw ValidationError("bins per interval must be >= 1");
    if (!std::isfinite(t0)) throw ValidationError("grid origin must be finite");
    if (!(delta > 0.0) || !std::isfinite(delta)) throw ValidationError("bin width must be finite and > 0");
    const double total = static_cast<double>(intervals) * 2.0 * bins * static_cast<double>(geometry.pixels());
    if (total > kMaxVoxels || static_cast<double>(intervals) * bins > std::numeric_limits<int>::max())
        throw ValidationError("voxel grid too large");
    data_.assign(static_cast<std::size_t>(total), 0.0);
}

std::vector<double> VoxelGrid::series(int channel, int y, int x) const
{
    std::vector<double> out(static_cast<std::size_t>(time_bins()));
    for (int g = 0; g < time_bins(); ++g) out[g] = at(g, channel, y, x);
    return out;
}

void VoxelGrid::set_series(int channel, int y, int x, const std::vector<double>& values)
{
    if (values.size() != static_cast<std::size_t>(time_bins())) throw ValidationError("series length mismatch");
    for (int g = 0; g < time_bins(); ++g) at(g, channel, y, x) = values[g];
}

bool VoxelGrid::same_shape(const VoxelGrid& other) const
{
    return geometry_ == other.geometry_ && intervals_ == other.intervals_ && bins_ == other.bins_;
}

VoxelGrid voxelize(const EventStream& stream, double t0, double interval, int intervals, int bins, unsigned threads)
{
    if (!(interval > 0.0) || !std::isfinite(interval)) throw ValidationError("interval must be finite and > 0");
    if (bins < 1) throw ValidationError("bins per interval must be >= 1");
    VoxelGrid grid(stream.geometry, intervals, bins, t0, interval / bins);

    const double delta = grid.delta();
    const int total_bins = grid.time_bins();
    const auto& events = stream.events;

    // Each worker owns a band of rows and walks the events in stream order, so
    // every voxel sees its contributions in the same sequence for any thread count.
    detail::parallel_chunks(static_cast<std::size_t>(grid.height()), threads,
                            [&](std::size_t, std::size_t row_begin, std::size_t row_end) {
        for (const Event& e : events) {
            if (e.y < row_begin || e.y >= row_end) continue;
            if (e.x >= grid.width() || !(e.t >= t0)) continue;
            const double rel = (e.t - t0) / delta;
            const double g = std::floor(rel);
            if (!(g < static_cast<double>(total_bins))) continue;
            const int bin = static_cast<int>(g);
            const double frac = rel - g;
            const int ch = polarity_channel(e.p);
            grid.at(bin, ch, e.y, e.x) += 1.0 - frac;
            if (bin + 1 < total_bins) grid.at(bin + 1, ch, e.y, e.x) += frac;
        }
    });
    return grid;
}

VoxelStats voxel_stats(const VoxelGrid& grid, double zero_eps)
{
    VoxelStats s;
    std::size_t nonzero = 0;
    std::size_t above_one = 0;
    for (double v : grid.data()) {
        if (v > zero_eps) ++nonzero;
        if (v > 1.0) ++above_one;
        s.total_mass += v;
        if (v > s.max_value) s.max_value = v;
    }
    const auto total = grid.data().size();
    s.nonzero_fraction = total == 0 ? 0.0 : static_cast<double>(nonzero) / static_cast<double>(total);
    s.above_one_fraction_of_nonzero = nonzero == 0 ? 0.0 : static_cast<double>(above_one) / static_cast<double>(nonzero);
    return s;
}

VoxelGrid read_voxels(const std::filesystem::path& path)
{
    const std::string data = detail::read_file(path);
    detail::ByteReader r(data);
    if (r.remaining() < 4 || r.bytes(4, "magic") != kVoxelMagic) throw FormatError("bad magic in '" + path.string() + "'");
    const auto version = r.get<std::uint32_t>("version");
    if (version != kVoxelVersion) throw FormatError("unsupported VOXG version " + std::to_string(version));

    SensorGeometry g;
    g.width = r.get<std::uint16_t>("width");
    g.height = r.get<std::uint16_t>("height");
    const int bins = r.get<std::uint16_t>("bins");
    const int intervals = r.get<std::uint16_t>("intervals");
    const double t0 = r.get<double>("t0");
    const double delta = r.get<double>("delta");

    VoxelGrid grid(g, intervals, bins, t0, delta);
    auto& values = grid.data();
    if (r.remaining() != values.size() * sizeof(float))
        throw FormatError("size mismatch: header implies " + std::to_string(values.size()) + " values, payload holds "
                          + std::to_string(r.remaining() / sizeof(float)) + (r.remaining() % sizeof(float) ? "+" : ""));
    for (auto& v : values) {
        const float f = r.get<float>("voxel");
        if (!std::isfinite(f) || f < 0.0f) throw ValidationError("voxel values must be finite and >= 0");
        v = f;
    }
    return grid;
}

void write_voxels(const VoxelGrid& grid, const std::filesystem::path& path)
{
    if (grid.bins() > 65535 || grid.intervals() > 65535) throw ValidationError("grid dimensions exceed VOXG limits");
    detail::ByteWriter w;
    w.reserve(32 + grid.data().size() * sizeof(float));
    w.bytes(kVoxelMagic);
    w.put<std::uint32_t>(kVoxelVersion);
    w.put(static_cast<std::uint16_t>(grid.width()));
    w.put(static_cast<std::uint16_t>(grid.height()));
    w.put(static_cast<std::uint16_t>(grid.bins()));
    w.put(static_cast<std::uint16_t>(grid.intervals()));
    w.put(grid.t0());
    w.put(grid.delta());
    for (double v : grid.data()) w.put(static_cast<float>(v));
    detail::write_file(path, w.buffer());
}

} // namespace evc

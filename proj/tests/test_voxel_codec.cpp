#include "evc/error.hpp"
#include "evc/voxel.hpp"
#include "synthetic.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <numeric>
#include <random>

namespace evc {
namespace {

using testing::TempDir;

double sum_channel(const VoxelGrid& g, int ch)
{
    double s = 0.0;
    for (int t = 0; t < g.time_bins(); ++t)
        for (int y = 0; y < g.height(); ++y)
            for (int x = 0; x < g.width(); ++x) s += g.at(t, ch, y, x);
    return s;
}

TEST(Voxelize, SplitsEventBetweenAdjacentBins)
{
    const auto s = make_stream({1, 1}, {{3400.0, 0, 0, Polarity::On}});
    const auto g = voxelize(s, 0.0, 10000.0, 1, 10);
    for (int k = 0; k < 10; ++k) {
        const double expected = k == 3 ? 0.6 : k == 4 ? 0.4 : 0.0;
        EXPECT_NEAR(g.at(k, 0, 0, 0), expected, 1e-12) << k;
        EXPECT_EQ(g.at(k, 1, 0, 0), 0.0);
    }
}

TEST(Voxelize, EventOnBinBoundaryFillsOneBin)
{
    const auto g = voxelize(make_stream({1, 1}, {{2000.0, 0, 0, Polarity::Off}}), 0.0, 10000.0, 1, 10);
    EXPECT_EQ(g.at(2, 1, 0, 0), 1.0);
    EXPECT_EQ(g.at(3, 1, 0, 0), 0.0);
    EXPECT_EQ(sum_channel(g, 1), 1.0);
}

TEST(Voxelize, TwoEventsInOneBin)
{
    const auto g = voxelize(make_stream({1, 1}, {{200.0, 0, 0, Polarity::On}, {800.0, 0, 0, Polarity::On}}), 0.0,
                            10000.0, 1, 10);
    EXPECT_NEAR(g.at(0, 0, 0, 0), 1.0, 1e-12);
    EXPECT_NEAR(g.at(1, 0, 0, 0), 1.0, 1e-12);
}

TEST(Voxelize, WindowIsHalfOpenAndSpillIsDropped)
{
    const auto s = make_stream({2, 1}, {{-1.0, 0, 0, Polarity::On},
                                        {9500.0, 0, 0, Polarity::On},
                                        {10000.0, 1, 0, Polarity::On}});
    const auto g = voxelize(s, 0.0, 10000.0, 1, 10);
    EXPECT_NEAR(g.at(9, 0, 0, 0), 0.5, 1e-12);
    EXPECT_NEAR(sum_channel(g, 0), 0.5, 1e-12);
}

TEST(Voxelize, SpillCrossesIntervalSeam)
{
    const auto g = voxelize(make_stream({1, 1}, {{9750.0, 0, 0, Polarity::On}}), 0.0, 10000.0, 2, 10);
    EXPECT_NEAR(g.at(9, 0, 0, 0), 0.25, 1e-12);
    EXPECT_NEAR(g.at(10, 0, 0, 0), 0.75, 1e-12);
}

TEST(Voxelize, RejectsBadParameters)
{
    const auto s = make_stream({1, 1}, {});
    EXPECT_THROW(voxelize(s, 0.0, 0.0, 1, 10), ValidationError);
    EXPECT_THROW(voxelize(s, 0.0, 1000.0, 0, 10), ValidationError);
    EXPECT_THROW(voxelize(s, 0.0, 1000.0, 1, 0), ValidationError);
    EXPECT_THROW(voxelize(s, std::nan(""), 1000.0, 1, 10), ValidationError);
}

TEST(VoxelizeProperty, MassEqualsEventsFullyInsideWindow)
{
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto s = testing::uniform_stream({16, 12}, 2000, -5000.0, 50000.0, seed);
        const double t0 = 0.0;
        const int L = 4;
        const double interval = 10000.0;
        const auto g = voxelize(s, t0, interval, L, 10);
        const double delta = interval / 10;
        const double last_full = t0 + L * interval - delta;
        // Events in the last bin lose their spill; count full and partial mass separately.
        double expected = 0.0;
        for (const auto& e : s.events) {
            if (e.t < t0 || e.t >= t0 + L * interval) continue;
            expected += e.t < last_full ? 1.0 : 1.0 - (e.t - last_full) / delta;
        }
        const double mass = std::accumulate(g.data().begin(), g.data().end(), 0.0);
        EXPECT_NEAR(mass, expected, 1e-9 * s.size()) << seed;
    }
}

TEST(VoxelizeProperty, LinearInDisjointUnion)
{
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto a = testing::uniform_stream({8, 8}, 400, 0.0, 30000.0, seed);
        const auto b = testing::uniform_stream({8, 8}, 400, 0.0, 30000.0, seed + 100);
        std::vector<Event> both = a.events;
        both.insert(both.end(), b.events.begin(), b.events.end());
        const auto ga = voxelize(a, 0.0, 10000.0, 3, 10);
        const auto gb = voxelize(b, 0.0, 10000.0, 3, 10);
        const auto gab = voxelize(make_stream({8, 8}, both), 0.0, 10000.0, 3, 10);
        for (std::size_t i = 0; i < gab.data().size(); ++i)
            ASSERT_NEAR(gab.data()[i], ga.data()[i] + gb.data()[i], 1e-12);
    }
}

TEST(VoxelizeProperty, ShiftByWholeBinsShiftsGrid)
{
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 10; ++trial) {
        // Integer timestamps keep the fractional split exact under shifting.
        std::vector<Event> ev;
        std::uniform_int_distribution<int> t(0, 19999);
        for (int i = 0; i < 300; ++i)
            ev.push_back({static_cast<double>(t(rng)), static_cast<std::uint16_t>(i % 5), static_cast<std::uint16_t>(i % 3),
                          i % 2 ? Polarity::On : Polarity::Off});
        const auto s = make_stream({5, 3}, ev);
        const int m = 1 + trial % 4;
        for (auto& e : ev) e.t += m * 1000.0;
        const auto shifted = make_stream({5, 3}, ev);
        const auto g = voxelize(s, 0.0, 10000.0, 4, 10);
        const auto gs = voxelize(shifted, 0.0, 10000.0, 4, 10);
        for (int k = 0; k + m < g.time_bins(); ++k)
            for (int ch = 0; ch < 2; ++ch)
                for (int y = 0; y < 3; ++y)
                    for (int x = 0; x < 5; ++x) ASSERT_NEAR(gs.at(k + m, ch, y, x), g.at(k, ch, y, x), 1e-12);
    }
}

TEST(VoxelizeProperty, ThreadCountDoesNotChangeResult)
{
    const auto s = testing::uniform_stream({40, 30}, 20000, 0.0, 40000.0, 3);
    const auto g1 = voxelize(s, 0.0, 10000.0, 4, 10, 1);
    for (unsigned threads : {2u, 3u, 8u}) EXPECT_EQ(voxelize(s, 0.0, 10000.0, 4, 10, threads), g1);
}

TEST(VoxelStats, NonzeroAndAboveOneFractions)
{
    VoxelGrid g({2, 1}, 1, 2, 0.0, 1.0); // 8 voxels
    g.at(0, 0, 0, 0) = 0.5;
    g.at(1, 0, 0, 0) = 2.5;
    const auto st = voxel_stats(g);
    EXPECT_DOUBLE_EQ(st.nonzero_fraction, 0.25);
    EXPECT_DOUBLE_EQ(st.above_one_fraction_of_nonzero, 0.5);
    EXPECT_DOUBLE_EQ(st.total_mass, 3.0);
    EXPECT_DOUBLE_EQ(st.max_value, 2.5);
}

TEST(VoxelStats, AllZeroGrid)
{
    const auto st = voxel_stats(VoxelGrid({3, 3}, 2, 5, 0.0, 1.0));
    EXPECT_EQ(st.nonzero_fraction, 0.0);
    EXPECT_EQ(st.above_one_fraction_of_nonzero, 0.0);
    EXPECT_EQ(st.total_mass, 0.0);
}

TEST(VoxelStats, ZeroEpsilonIgnoresResidue)
{
    VoxelGrid g({1, 1}, 1, 1, 0.0, 1.0);
    g.at(0, 0, 0, 0) = 1e-12;
    EXPECT_EQ(voxel_stats(g).nonzero_fraction, 0.0);
    EXPECT_EQ(voxel_stats(g, 0.0).nonzero_fraction, 0.5);
}

TEST(VoxelGridShape, LayoutAndSeries)
{
    VoxelGrid g({3, 2}, 2, 4, 100.0, 50.0);
    EXPECT_EQ(g.data().size(), 2u * 2 * 4 * 6);
    EXPECT_EQ(g.t_end(), 100.0 + 8 * 50.0);
    // [L][P][C][H][W]
    EXPECT_EQ(g.index(5, 1, 1, 2), ((1u * 2 + 1) * 4 + 1) * 6 + 1 * 3 + 2);
    std::vector<double> s(8);
    std::iota(s.begin(), s.end(), 1.0);
    g.set_series(1, 1, 2, s);
    EXPECT_EQ(g.series(1, 1, 2), s);
    EXPECT_EQ(g.at(7, 1, 1, 2), 8.0);
    EXPECT_THROW(VoxelGrid({3, 2}, 1, 1, 0.0, 0.0), ValidationError);
    EXPECT_THROW(VoxelGrid({0, 2}, 1, 1, 0.0, 1.0), ValidationError);
}

TEST(VoxelFile, RoundTripOfFloatRepresentableValues)
{
    TempDir dir;
    VoxelGrid g({7, 5}, 3, 10, 1234.5, 1000.0);
    std::mt19937 rng(1);
    for (auto& v : g.data()) v = static_cast<double>(static_cast<float>(std::uniform_real_distribution<float>(0, 4)(rng)));
    write_voxels(g, dir / "g.voxg");
    EXPECT_EQ(read_voxels(dir / "g.voxg"), g);
    EXPECT_EQ(std::filesystem::file_size(dir / "g.voxg"), 32u + 4u * g.data().size());
}

TEST(VoxelFile, RejectsCorruptFiles)
{
    TempDir dir;
    VoxelGrid g({4, 4}, 1, 10, 0.0, 1000.0);
    write_voxels(g, dir / "g.voxg");
    const std::string full = testing::read_text(dir / "g.voxg");

    testing::write_text(dir / "short.voxg", full.substr(0, full.size() - 4));
    EXPECT_THROW(read_voxels(dir / "short.voxg"), FormatError);

    testing::write_text(dir / "long.voxg", full + "abcd");
    EXPECT_THROW(read_voxels(dir / "long.voxg"), FormatError);

    std::string magic = full;
    magic[0] = 'Z';
    testing::write_text(dir / "magic.voxg", magic);
    EXPECT_THROW(read_voxels(dir / "magic.voxg"), FormatError);

    std::string zero_delta = full;
    std::fill(zero_delta.begin() + 24, zero_delta.begin() + 32, '\0');
    testing::write_text(dir / "delta.voxg", zero_delta);
    EXPECT_THROW(read_voxels(dir / "delta.voxg"), ValidationError);

    EXPECT_THROW(read_voxels(dir / "missing.voxg"), IoError);
}

} // namespace
} // namespace evc

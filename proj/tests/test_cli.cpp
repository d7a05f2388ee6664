#include "cli.hpp"
#include "evc/event_io.hpp"
#include "evc/frontend.hpp"
#include "evc/voxel.hpp"
#include "synthetic.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <sstream>

namespace evc {
namespace {

using testing::TempDir;

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args)
{
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

nlohmann::json json_of(const Result& r)
{
    return nlohmann::json::parse(r.out);
}

std::vector<std::string> keys(const nlohmann::json& j)
{
    std::vector<std::string> k;
    for (auto it = j.begin(); it != j.end(); ++it) k.push_back(it.key());
    std::sort(k.begin(), k.end());
    return k;
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override
    {
        testing::BurstConfig cfg;
        cfg.geometry = {16, 12};
        cfg.t_end = 50000.0;
        stream = testing::burst_stream(cfg, 3);
        events = (dir / "gt.csv").string();
        write_events_csv(stream, events);
    }

    std::string path(const std::string& name) const { return (dir / name).string(); }

    TempDir dir;
    EventStream stream;
    std::string events;
};

TEST_F(CliTest, VoxelizeThenSampleConservesCount)
{
    auto r = run({"voxelize", "--events", events, "--interval-us", "10000", "--width", "16", "--height", "12", "--out",
                  path("g.voxg"), "--json"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(keys(json_of(r)),
              (std::vector<std::string>{"above_one_fraction_of_nonzero", "max_value", "nonzero_fraction", "total_mass"}));
    EXPECT_EQ(r.out.find('\n'), r.out.size() - 1);

    r = run({"sample", "--voxels", path("g.voxg"), "--method", "ldati", "--out", path("p.evs"), "--json"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(json_of(r)["events"], stream.size());
    EXPECT_EQ(json_of(r)["method"], "ldati");
    EXPECT_EQ(read_events_binary(path("p.evs")).size(), stream.size());
}

TEST_F(CliTest, AutoWindowCoversEveryEvent)
{
    ASSERT_EQ(run({"voxelize", "--events", events, "--interval-us", "7000", "--width", "16", "--height", "12", "--out",
                   path("g.voxg")}).code,
              0);
    const auto g = read_voxels(path("g.voxg"));
    EXPECT_LE(g.t0(), stream.events.front().t);
    EXPECT_GT(g.t_end(), stream.events.back().t);
}

TEST_F(CliTest, SameSeedGivesIdenticalBytes)
{
    ASSERT_EQ(run({"voxelize", "--events", events, "--interval-us", "10000", "--out", path("g.voxg")}).code, 0);
    for (const char* method : {"ldati", "ldati-random", "random", "even"}) {
        ASSERT_EQ(run({"sample", "--voxels", path("g.voxg"), "--method", method, "--seed", "9", "--out", path("a.evs")}).code, 0);
        ASSERT_EQ(run({"sample", "--voxels", path("g.voxg"), "--method", method, "--seed", "9", "--threads", "3", "--out",
                       path("b.evs")}).code,
                  0);
        EXPECT_EQ(testing::read_text(path("a.evs")), testing::read_text(path("b.evs"))) << method;
    }
}

TEST_F(CliTest, AllZeroGridSamplesToEmptyFile)
{
    write_voxels(VoxelGrid({4, 4}, 1, 10, 0.0, 100.0), path("z.voxg"));
    const auto r = run({"sample", "--voxels", path("z.voxg"), "--out", path("z.csv"), "--json"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(json_of(r)["events"], 0);
    EXPECT_EQ(testing::read_text(path("z.csv")), "t_us,x,y,p\n");
}

TEST_F(CliTest, EvalVoxelsIdentity)
{
    ASSERT_EQ(run({"voxelize", "--events", events, "--interval-us", "10000", "--out", path("g.voxg")}).code, 0);
    const auto r = run({"eval-voxels", "--gt", path("g.voxg"), "--pred", path("g.voxg"), "--json"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = json_of(r);
    EXPECT_EQ(keys(j), (std::vector<std::string>{"pmse2", "pmse4", "racc", "rf1", "tacc", "tf1", "tpacc", "tpf1"}));
    EXPECT_EQ(j["pmse2"], 0.0);
    EXPECT_EQ(j["tpf1"], 1.0);
}

TEST_F(CliTest, EvalEventsAndLoss)
{
    auto r = run({"eval-events", "--gt", events, "--pred", events, "--delta-us", "1000", "--json"});
    ASSERT_EQ(r.code, 0) << r.err;
    auto j = json_of(r);
    EXPECT_EQ(keys(j), (std::vector<std::string>{"c_mete", "c_noe", "gper", "mete", "noe"}));
    EXPECT_EQ(j["mete"], 0.0);
    EXPECT_EQ(j["gper"], 1.0);

    ASSERT_EQ(run({"voxelize", "--events", events, "--interval-us", "10000", "--out", path("g.voxg")}).code, 0);
    r = run({"loss", "--gt", path("g.voxg"), "--pred", path("g.voxg"), "--json"});
    ASSERT_EQ(r.code, 0) << r.err;
    j = json_of(r);
    EXPECT_EQ(keys(j), (std::vector<std::string>{"adv", "bc", "combined", "ef", "stp", "tp"}));
    EXPECT_EQ(j["combined"], 0.0);
    EXPECT_TRUE(j["adv"].is_null());
}

TEST_F(CliTest, RoundtripOnIsolatedEventsIsExactForLdati)
{
    const auto iso = testing::isolated_stream({10, 8}, 2000.0, 0.0, 60000.0, 8, 0.8, 5);
    write_events_csv(iso, path("iso.csv"));
    auto r = run({"roundtrip", "--events", path("iso.csv"), "--interval-us", "10000", "--json"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = json_of(r);
    EXPECT_EQ(j["events"], iso.size());
    ASSERT_EQ(j["methods"].size(), 4u);
    const auto& ldati = j["methods"][3];
    EXPECT_EQ(ldati["method"], "ldati");
    EXPECT_LT(ldati["mete"].get<double>(), 1e-6);
    EXPECT_EQ(ldati["noe"], 0);
    EXPECT_EQ(ldati["gper"], 1.0);

    r = run({"roundtrip", "--events", path("iso.csv"), "--interval-us", "10000"});
    ASSERT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("ldati-random"), std::string::npos);
}

TEST_F(CliTest, SimulateStatsAndCloud)
{
    FrameSequence seq{{3, 2}, {std::vector<double>(6, 0.5), std::vector<double>(6, 0.5)}, {0.0, 1000.0}};
    write_frame_stack(seq, path("v.frms"));
    auto r = run({"simulate", "--frames", path("v.frms"), "--out", path("sim.csv"), "--json"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(testing::read_text(path("sim.csv")), "t_us,x,y,p\n");

    write_voxels(VoxelGrid({4, 4}, 1, 10, 0.0, 100.0), path("z.voxg"));
    r = run({"stats", "--voxels", path("z.voxg"), "--json"});
    ASSERT_EQ(r.code, 0);
    EXPECT_EQ(json_of(r)["nonzero_fraction"], 0.0);

    write_events_csv(testing::uniform_stream({8, 8}, 100, 0.0, 1000.0, 1), path("u.csv"));
    r = run({"export-cloud", "--events", path("u.csv"), "--max-points", "10", "--out", path("cloud.csv")});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto text = testing::read_text(path("cloud.csv"));
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 11);
}

TEST_F(CliTest, ExitCodes)
{
    EXPECT_EQ(run({"voxelize", "--events", events, "--interval-us", "0", "--out", path("g.voxg")}).code, 2);
    EXPECT_EQ(run({"voxelize", "--events", path("missing.csv"), "--interval-us", "10", "--out", path("g.voxg")}).code, 1);
    EXPECT_EQ(run({"no-such-command"}).code, 2);
    EXPECT_EQ(run({"voxelize", "--bogus-flag"}).code, 2);
    EXPECT_EQ(run({}).code, 2);

    ASSERT_EQ(run({"voxelize", "--events", events, "--interval-us", "10000", "--out", path("g.voxg")}).code, 0);
    EXPECT_EQ(run({"sample", "--voxels", path("g.voxg"), "--method", "nearest", "--out", path("p.csv")}).code, 2);
    EXPECT_EQ(run({"eval-voxels", "--gt", path("g.voxg"), "--pred", path("missing.voxg")}).code, 1);

    write_voxels(VoxelGrid({4, 4}, 1, 10, 0.0, 100.0), path("other.voxg"));
    EXPECT_EQ(run({"eval-voxels", "--gt", path("g.voxg"), "--pred", path("other.voxg")}).code, 2);

    testing::write_text(path("bad.csv"), "t_us,x,y,p\nabc,1,2,1\n");
    const auto r = run({"voxelize", "--events", path("bad.csv"), "--interval-us", "10", "--out", path("g.voxg")});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find(":2:"), std::string::npos);
    EXPECT_TRUE(r.out.empty());

    EXPECT_EQ(run({"--help"}).code, 0);
}

TEST_F(CliTest, ConfigFileFillsMissingFlags)
{
    testing::write_text(path("cfg.json"), R"({"interval-us": 10000, "bins": 5, "seed": 3})");
    auto r = run({"--config", path("cfg.json"), "voxelize", "--events", events, "--out", path("g.voxg")});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(read_voxels(path("g.voxg")).bins(), 5);

    r = run({"--config", path("cfg.json"), "voxelize", "--events", events, "--bins", "4", "--out", path("g.voxg")});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(read_voxels(path("g.voxg")).bins(), 4);

    testing::write_text(path("broken.json"), "{not json");
    EXPECT_NE(run({"--config", path("broken.json"), "stats", "--voxels", path("g.voxg")}).code, 0);
}

} // namespace
} // namespace evc

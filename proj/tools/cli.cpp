#include "cli.hpp"

#include "evc/error.hpp"
#include "evc/event_io.hpp"
#include "evc/frontend.hpp"
#include "evc/json.hpp"
#include "evc/loss.hpp"
#include "evc/metrics.hpp"
#include "evc/sampling.hpp"
#include "evc/voxel.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

namespace evc::cli {

namespace fs = std::filesystem;

namespace {

// Sampling from f32 voxel files needs a coarser snap than in-memory grids.
constexpr double kFileSnapTolerance = 1e-4;

struct Globals {
    std::uint64_t seed = 42;
    bool json = false;
    unsigned threads = 1;
    std::string out;
    std::string config;
    std::string format;
};

struct GeometryFlags {
    int width = 0;
    int height = 0;

    std::optional<SensorGeometry> get() const
    {
        if (width == 0 && height == 0) return std::nullopt;
        SensorGeometry g{width, height};
        if (!g.valid()) throw ValidationError("--width and --height must both be in [1, 65535]");
        return g;
    }
};

enum class EventFormat { Csv, Binary };

EventFormat event_format(const fs::path& path, const std::string& override_format)
{
    const std::string f = override_format.empty() ? path.extension().string() : "." + override_format;
    if (f == ".csv") return EventFormat::Csv;
    if (f == ".evs") return EventFormat::Binary;
    throw ValidationError("cannot infer event file format of '" + path.string() + "'; use --format csv|evs");
}

EventStream load_events(const fs::path& path, const std::string& format, std::optional<SensorGeometry> geometry)
{
    const EventFormat fmt = event_format(path, format);
    EventStream s = fmt == EventFormat::Csv ? read_events_csv(path, geometry) : read_events_binary(path);
    if (geometry && s.geometry != *geometry)
        throw ValidationError("'" + path.string() + "' has geometry " + std::to_string(s.geometry.width) + "x"
                              + std::to_string(s.geometry.height) + ", expected " + std::to_string(geometry->width)
                              + "x" + std::to_string(geometry->height));
    const auto report = validate_stream(s);
    if (!report.empty())
        throw ValidationError("'" + path.string() + "': " + report.front().message
                              + (report.size() > 1 ? " (and " + std::to_string(report.size() - 1) + " more)" : ""));
    return s;
}

void save_events(const EventStream& s, const fs::path& path, const std::string& format)
{
    if (event_format(path, format) == EventFormat::Csv) write_events_csv(s, path);
    else write_events_binary(s, path);
}

void emit(std::ostream& out, const nlohmann::json& j, bool compact)
{
    out << (compact ? j.dump() : j.dump(2)) << '\n';
}

void require(bool cond, const std::string& message)
{
    if (!cond) throw ValidationError(message);
}

// Appends `--key value` for every config entry whose flag is not already on
// the command line, so explicit flags win.
std::vector<std::string> merge_config(const std::vector<std::string>& args)
{
    std::optional<std::string> path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
        else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
    }
    if (!path) return args;

    std::ifstream in(*path);
    if (!in) throw IoError("cannot open config '" + *path + "'");
    nlohmann::json cfg;
    try {
        in >> cfg;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("config '" + *path + "': " + e.what());
    }
    if (!cfg.is_object()) throw FormatError("config '" + *path + "' must hold a JSON object");

    auto merged = args;
    for (const auto& [key, value] : cfg.items()) {
        const std::string flag = "--" + key;
        const bool present = std::any_of(args.begin(), args.end(), [&](const std::string& a) {
            return a == flag || a.rfind(flag + "=", 0) == 0;
        });
        if (present || key == "config") continue;
        if (value.is_boolean()) {
            if (value.get<bool>()) merged.push_back(flag);
        } else if (value.is_string()) {
            merged.push_back(flag);
            merged.push_back(value.get<std::string>());
        } else if (value.is_number()) {
            merged.push_back(flag);
            merged.push_back(value.dump());
        } else {
            throw FormatError("config key '" + key + "' must be a scalar");
        }
    }
    return merged;
}

std::string fixed(double v, int digits)
{
    std::ostringstream s;
    s << std::fixed << std::setprecision(digits) << v;
    return s.str();
}

} // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err)
{
    Globals g;
    CLI::App app{"Event stream / voxel grid conversion toolkit", "evc"};
    app.require_subcommand(1);
    app.option_defaults()->always_capture_default();
    app.add_option("--seed", g.seed, "Master seed for every random draw");
    app.add_flag("--json", g.json, "Emit a single compact JSON object on stdout");
    app.add_option("--threads", g.threads, "Worker threads (results do not depend on it)")->check(CLI::Range(1u, 1024u));
    app.add_option("--out", g.out, "Output path");
    app.add_option("--config", g.config, "JSON file whose keys mirror flag names");
    app.add_option("--format", g.format, "Event file format override")->check(CLI::IsMember({"csv", "evs"}));

    std::function<void()> action;

    // voxelize
    struct {
        std::string events;
        GeometryFlags geo;
        std::string t0 = "auto";
        double interval = 0.0;
        int bins = kDefaultBinsPerInterval;
        std::string intervals = "auto";
    } vox;
    auto* c_vox = app.add_subcommand("voxelize", "Convert an event file to a VOXG voxel grid");
    c_vox->add_option("--events", vox.events, "Input events (.csv or .evs)");
    c_vox->add_option("--width", vox.geo.width);
    c_vox->add_option("--height", vox.geo.height);
    c_vox->add_option("--t0", vox.t0, "Grid origin in us, or 'auto'");
    c_vox->add_option("--interval-us", vox.interval, "Frame interval length in us");
    c_vox->add_option("--bins", vox.bins, "Bins per interval");
    c_vox->add_option("--intervals", vox.intervals, "Interval count, or 'auto'");
    c_vox->callback([&] {
        action = [&] {
            require(!vox.events.empty(), "--events is required");
            require(!g.out.empty(), "--out is required");
            require(vox.interval > 0.0 && std::isfinite(vox.interval), "--interval-us must be > 0");
            require(vox.bins >= 1 && vox.bins <= 65535, "--bins must be in [1, 65535]");
            std::optional<double> t0;
            if (vox.t0 != "auto") {
                try {
                    t0 = std::stod(vox.t0);
                } catch (const std::exception&) {
                    throw ValidationError("--t0 must be a number or 'auto'");
                }
                require(std::isfinite(*t0), "--t0 must be finite");
            }
            std::optional<int> intervals;
            if (vox.intervals != "auto") {
                try {
                    intervals = std::stoi(vox.intervals);
                } catch (const std::exception&) {
                    throw ValidationError("--intervals must be an integer or 'auto'");
                }
                require(*intervals >= 1 && *intervals <= 65535, "--intervals must be in [1, 65535]");
            }
            const auto geometry = vox.geo.get();

            const EventStream s = load_events(vox.events, g.format, geometry);
            const double origin = t0.value_or(s.empty() ? 0.0 : std::floor(s.events.front().t / vox.interval) * vox.interval);
            int count = 1;
            if (intervals) {
                count = *intervals;
            } else if (!s.empty()) {
                const double span = std::floor((s.events.back().t - origin) / vox.interval) + 1.0;
                require(span <= 65535.0, "stream needs more than 65535 intervals; pass --intervals");
                count = std::max(1, static_cast<int>(span));
            }
            const VoxelGrid grid = voxelize(s, origin, vox.interval, count, vox.bins, g.threads);
            write_voxels(grid, g.out);
            err << "wrote " << grid.width() << "x" << grid.height() << " grid, L=" << grid.intervals()
                << " C=" << grid.bins() << " to " << g.out << '\n';
            emit(out, to_json(voxel_stats(grid)), g.json);
        };
    });

    // sample
    struct {
        std::string voxels;
        std::string method = "ldati";
        double theta_emit = 0.0;
        double snap = kFileSnapTolerance;
    } smp;
    auto* c_smp = app.add_subcommand("sample", "Convert a VOXG grid to an event stream");
    c_smp->add_option("--voxels", smp.voxels, "Input VOXG file");
    c_smp->add_option("--method", smp.method, "ldati | ldati-random | random | even");
    c_smp->add_option("--theta-emit", smp.theta_emit, "Emission threshold on decoupled values");
    c_smp->add_option("--snap-tolerance", smp.snap, "Snap decoupled values this close to an integer");
    c_smp->callback([&] {
        action = [&] {
            require(!smp.voxels.empty(), "--voxels is required");
            require(!g.out.empty(), "--out is required");
            SamplerConfig cfg;
            cfg.method = parse_sampler_method(smp.method);
            cfg.seed = g.seed;
            cfg.theta_emit = smp.theta_emit;
            cfg.snap_tolerance = smp.snap;
            cfg.threads = g.threads;
            require(cfg.theta_emit >= 0.0 && cfg.theta_emit < 1.0, "--theta-emit must be in [0, 1)");
            require(cfg.snap_tolerance >= 0.0 && cfg.snap_tolerance < 0.5, "--snap-tolerance must be in [0, 0.5)");
            event_format(g.out, g.format);

            const VoxelGrid grid = read_voxels(smp.voxels);
            const EventStream s = sample(grid, cfg);
            save_events(s, g.out, g.format);
            err << "wrote " << s.size() << " events to " << g.out << '\n';
            emit(out, {{"method", std::string(to_string(cfg.method))}, {"events", s.size()}}, g.json);
        };
    });

    // eval-voxels
    struct {
        std::string gt, pred;
    } evx;
    auto* c_evx = app.add_subcommand("eval-voxels", "Voxel-level metrics between two VOXG grids");
    c_evx->add_option("--gt", evx.gt);
    c_evx->add_option("--pred", evx.pred);
    c_evx->callback([&] {
        action = [&] {
            require(!evx.gt.empty() && !evx.pred.empty(), "--gt and --pred are required");
            emit(out, to_json(voxel_metrics(read_voxels(evx.gt), read_voxels(evx.pred))), g.json);
        };
    });

    // eval-events
    struct {
        std::string gt, pred;
        double delta = 0.0;
        GeometryFlags geo;
    } eve;
    auto* c_eve = app.add_subcommand("eval-events", "Stream-level metrics between two event files");
    c_eve->add_option("--gt", eve.gt);
    c_eve->add_option("--pred", eve.pred);
    c_eve->add_option("--delta-us", eve.delta, "Bin width used for the 3*delta cap");
    c_eve->add_option("--width", eve.geo.width);
    c_eve->add_option("--height", eve.geo.height);
    c_eve->callback([&] {
        action = [&] {
            require(!eve.gt.empty() && !eve.pred.empty(), "--gt and --pred are required");
            require(eve.delta > 0.0 && std::isfinite(eve.delta), "--delta-us must be > 0");
            const auto geometry = eve.geo.get();
            EventStream gt = load_events(eve.gt, g.format, geometry);
            EventStream pred = load_events(eve.pred, g.format, geometry);
            // CSV inputs without explicit geometry are sized to their own content.
            if (!geometry && gt.geometry != pred.geometry) {
                const bool csv = event_format(eve.gt, g.format) == EventFormat::Csv
                    && event_format(eve.pred, g.format) == EventFormat::Csv;
                require(csv, "event files have different sensor geometry");
                const SensorGeometry joint{std::max(gt.geometry.width, pred.geometry.width),
                                           std::max(gt.geometry.height, pred.geometry.height)};
                gt.geometry = pred.geometry = joint;
            }
            emit(out, to_json(stream_metrics(gt, pred, eve.delta)), g.json);
        };
    });

    // loss
    struct {
        std::string gt, pred;
        double beta = 0.01;
    } los;
    auto* c_los = app.add_subcommand("loss", "Loss-style distance measures between two VOXG grids");
    c_los->add_option("--gt", los.gt);
    c_los->add_option("--pred", los.pred);
    c_los->add_option("--beta", los.beta, "Brightness threshold");
    c_los->callback([&] {
        action = [&] {
            require(!los.gt.empty() && !los.pred.empty(), "--gt and --pred are required");
            require(los.beta >= 0.0, "--beta must be >= 0");
            LossConfig cfg;
            cfg.beta = los.beta;
            emit(out, to_json(combined_measure(read_voxels(los.gt), read_voxels(los.pred), cfg)), g.json);
        };
    });

    // roundtrip
    struct {
        std::string events;
        double interval = 0.0;
        int bins = kDefaultBinsPerInterval;
        GeometryFlags geo;
    } rt;
    auto* c_rt = app.add_subcommand("roundtrip", "Voxelize events, resample with every method, and score against the input");
    c_rt->add_option("--events", rt.events);
    c_rt->add_option("--interval-us", rt.interval);
    c_rt->add_option("--bins", rt.bins);
    c_rt->add_option("--width", rt.geo.width);
    c_rt->add_option("--height", rt.geo.height);
    c_rt->callback([&] {
        action = [&] {
            require(!rt.events.empty(), "--events is required");
            require(rt.interval > 0.0 && std::isfinite(rt.interval), "--interval-us must be > 0");
            require(rt.bins >= 1 && rt.bins <= 65535, "--bins must be in [1, 65535]");
            const EventStream gt = load_events(rt.events, g.format, rt.geo.get());
            const double origin = gt.empty() ? 0.0 : std::floor(gt.events.front().t / rt.interval) * rt.interval;
            const int count = gt.empty() ? 1 : static_cast<int>(std::floor((gt.events.back().t - origin) / rt.interval)) + 1;
            const VoxelGrid grid = voxelize(gt, origin, rt.interval, count, rt.bins, g.threads);

            nlohmann::json rows = nlohmann::json::array();
            for (auto method : {SamplerMethod::Even, SamplerMethod::Random, SamplerMethod::LdatiRandom, SamplerMethod::LdatiSlope}) {
                SamplerConfig cfg;
                cfg.method = method;
                cfg.seed = g.seed;
                cfg.threads = g.threads;
                auto row = to_json(stream_metrics(gt, sample(grid, cfg), grid.delta()));
                row["method"] = std::string(to_string(method));
                rows.push_back(row);
            }
            nlohmann::json report{{"events", gt.size()}, {"delta_us", grid.delta()}, {"methods", rows}};
            if (g.json) {
                emit(out, report, true);
                return;
            }
            out << std::left << std::setw(14) << "method" << std::setw(14) << "c_mete" << std::setw(10) << "c_noe"
                << "gper\n";
            for (const auto& row : rows) {
                const auto num = [&](const char* key, int digits) {
                    return row[key].is_null() ? std::string("n/a") : fixed(row[key].get<double>(), digits);
                };
                out << std::left << std::setw(14) << row["method"].get<std::string>() << std::setw(14) << num("c_mete", 3)
                    << std::setw(10) << num("c_noe", 0) << num("gper", 3) << '\n';
            }
        };
    });

    // simulate
    struct {
        std::string frames, timestamps;
        double theta = 0.2;
        std::optional<double> theta_on, theta_off;
        double log_eps = 1.0 / 255.0;
    } sim;
    auto* c_sim = app.add_subcommand("simulate", "Generate events from grayscale frames");
    c_sim->add_option("--frames", sim.frames, "Directory of P5 PGM files, or an FRMS stack");
    c_sim->add_option("--timestamps", sim.timestamps, "One timestamp (us) per line; required for PGM directories");
    c_sim->add_option("--theta", sim.theta, "Contrast threshold for both polarities");
    c_sim->add_option("--theta-on", sim.theta_on);
    c_sim->add_option("--theta-off", sim.theta_off);
    c_sim->add_option("--log-eps", sim.log_eps);
    c_sim->callback([&] {
        action = [&] {
            require(!sim.frames.empty(), "--frames is required");
            require(!g.out.empty(), "--out is required");
            FrontendConfig cfg;
            cfg.theta_on = sim.theta_on.value_or(sim.theta);
            cfg.theta_off = sim.theta_off.value_or(sim.theta);
            cfg.log_eps = sim.log_eps;
            validate(cfg);
            event_format(g.out, g.format);
            const bool dir = fs::is_directory(sim.frames);
            require(!dir || !sim.timestamps.empty(), "--timestamps is required with a frame directory");
            const FrameSequence seq = dir ? read_pgm_sequence(sim.frames, sim.timestamps) : read_frame_stack(sim.frames);
            const EventStream s = simulate(seq, cfg);
            save_events(s, g.out, g.format);
            err << "wrote " << s.size() << " events to " << g.out << '\n';
            emit(out, {{"events", s.size()}}, g.json);
        };
    });

    // stats
    struct {
        std::string voxels;
        double zero_eps = 1e-9;
    } st;
    auto* c_st = app.add_subcommand("stats", "Sparsity statistics of a VOXG grid");
    c_st->add_option("--voxels", st.voxels);
    c_st->add_option("--zero-eps", st.zero_eps);
    c_st->callback([&] {
        action = [&] {
            require(!st.voxels.empty(), "--voxels is required");
            emit(out, to_json(voxel_stats(read_voxels(st.voxels), st.zero_eps)), g.json);
        };
    });

    // export-cloud
    struct {
        std::string events;
        long long max_points = 10000;
        GeometryFlags geo;
    } cloud;
    auto* c_cloud = app.add_subcommand("export-cloud", "Write a subsampled x,y,t point cloud CSV");
    c_cloud->add_option("--events", cloud.events);
    c_cloud->add_option("--max-points", cloud.max_points);
    c_cloud->add_option("--width", cloud.geo.width);
    c_cloud->add_option("--height", cloud.geo.height);
    c_cloud->callback([&] {
        action = [&] {
            require(!cloud.events.empty(), "--events is required");
            require(!g.out.empty(), "--out is required");
            require(cloud.max_points >= 1, "--max-points must be >= 1");
            const EventStream s = load_events(cloud.events, g.format, cloud.geo.get());
            export_point_cloud(s, static_cast<std::size_t>(cloud.max_points), g.out);
            const std::size_t n = s.size();
            const auto limit = static_cast<std::size_t>(cloud.max_points);
            const std::size_t stride = n <= limit ? 1 : (n + limit - 1) / limit;
            const std::size_t rows = n == 0 ? 0 : (n - 1) / stride + 1;
            err << "wrote " << rows << " points to " << g.out << '\n';
            emit(out, {{"points", rows}}, g.json);
        };
    });

    for (auto* sub : app.get_subcommands({})) sub->fallthrough();

    try {
        const auto args = merge_config(raw_args);
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
        if (action) action();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << app.help();
            return kExitOk;
        }
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const IoError& e) {
        err << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitIo;
    }
}

} // namespace evc::cli

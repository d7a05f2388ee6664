#include "evc/frontend.hpp"

#include "binary_io.hpp"
#include "evc/error.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

namespace evc {

namespace {

constexpr std::string_view kStackMagic = "FRMS";
constexpr std::uint32_t kStackVersion = 1;

// Log-domain slack when testing whether a threshold level was reached; absorbs
// rounding in ln() so a ramp that ends exactly on a level still fires.
constexpr double kLevelTolerance = 1e-9;

} // namespace

void validate(const FrameSequence& seq)
{
    if (!seq.geometry.valid()) throw ValidationError("invalid sensor geometry");
    if (seq.frames.size() < 2) throw ValidationError("at least two frames are required");
    if (seq.timestamps.size() != seq.frames.size()) throw ValidationError("frame and timestamp counts differ");
    for (std::size_t i = 0; i < seq.timestamps.size(); ++i) {
        if (!std::isfinite(seq.timestamps[i])) throw ValidationError("non-finite frame timestamp");
        if (i > 0 && !(seq.timestamps[i] > seq.timestamps[i - 1]))
            throw ValidationError("frame timestamps must be strictly increasing (index " + std::to_string(i) + ")");
    }
    for (const auto& f : seq.frames) {
        if (f.size() != seq.geometry.pixels()) throw ValidationError("frame size does not match geometry");
        for (double v : f)
            if (!std::isfinite(v) || v < 0.0 || v > 1.0) throw ValidationError("intensities must lie in [0, 1]");
    }
}

void validate(const FrontendConfig& cfg)
{
    if (!(cfg.theta_on > 0.0) || !(cfg.theta_off > 0.0) || !std::isfinite(cfg.theta_on) || !std::isfinite(cfg.theta_off))
        throw ValidationError("contrast thresholds must be finite and > 0");
    if (!(cfg.log_eps > 0.0) || !std::isfinite(cfg.log_eps)) throw ValidationError("log_eps must be finite and > 0");
}

EventStream simulate(const FrameSequence& seq, const FrontendConfig& cfg)
{
    validate(seq);
    validate(cfg);

    const std::size_t n_frames = seq.frames.size();
    const int width = seq.geometry.width;
    std::vector<Event> events;
    std::vector<double> level(n_frames);

    for (std::size_t px = 0; px < seq.geometry.pixels(); ++px) {
        for (std::size_t i = 0; i < n_frames; ++i) level[i] = std::log(std::max(seq.frames[i][px], cfg.log_eps));
        const auto x = static_cast<std::uint16_t>(px % width);
        const auto y = static_cast<std::uint16_t>(px / width);

        double ref = level[0];
        for (std::size_t i = 0; i + 1 < n_frames; ++i) {
            const double a = level[i];
            const double b = level[i + 1];
            const double ta = seq.timestamps[i];
            const double tb = seq.timestamps[i + 1];
            const auto crossing_time = [&](double target) {
                const double frac = std::clamp((target - a) / (b - a), 0.0, 1.0);
                return ta + frac * (tb - ta);
            };
            if (b > a) {
                while (b >= ref + cfg.theta_on - kLevelTolerance) {
                    ref += cfg.theta_on;
                    events.push_back({crossing_time(ref), x, y, Polarity::On});
                }
            } else if (b < a) {
                while (b <= ref - cfg.theta_off + kLevelTolerance) {
                    ref -= cfg.theta_off;
                    events.push_back({crossing_time(ref), x, y, Polarity::Off});
                }
            }
        }
    }
    return make_stream(seq.geometry, std::move(events), seq.timestamps.front(), seq.timestamps.back());
}

VoxelGrid simulate_to_voxels(const FrameSequence& seq, const FrontendConfig& cfg, int bins)
{
    validate(seq);
    const auto n = seq.timestamps.size();
    const double interval = (seq.timestamps.back() - seq.timestamps.front()) / static_cast<double>(n - 1);
    for (std::size_t i = 1; i < n; ++i) {
        const double spacing = seq.timestamps[i] - seq.timestamps[i - 1];
        if (std::abs(spacing - interval) > 1e-6 * interval)
            throw ValidationError("frame spacing is not uniform (pair " + std::to_string(i - 1) + ")");
    }
    return voxelize(simulate(seq, cfg), seq.timestamps.front(), interval, static_cast<int>(n - 1), bins);
}

namespace {

std::vector<double> parse_pgm(const std::string& data, const std::filesystem::path& path, SensorGeometry& geometry)
{
    std::size_t pos = 0;
    const auto skip_space = [&] {
        while (pos < data.size()) {
            if (data[pos] == '#') {
                while (pos < data.size() && data[pos] != '\n') ++pos;
            } else if (std::isspace(static_cast<unsigned char>(data[pos]))) {
                ++pos;
            } else {
                break;
            }
        }
    };
    const auto token = [&]() -> int {
        skip_space();
        int value = 0;
        auto [ptr, ec] = std::from_chars(data.data() + pos, data.data() + data.size(), value);
        if (ec != std::errc{}) throw FormatError("malformed PGM header in '" + path.string() + "'");
        pos = static_cast<std::size_t>(ptr - data.data());
        return value;
    };

    if (data.size() < 2 || data.compare(0, 2, "P5") != 0) throw FormatError("'" + path.string() + "' is not a binary PGM (P5)");
    pos = 2;
    const int w = token();
    const int h = token();
    const int maxval = token();
    if (w < 1 || h < 1 || w > 65535 || h > 65535) throw FormatError("bad PGM dimensions in '" + path.string() + "'");
    if (maxval < 1 || maxval > 255) throw FormatError("unsupported PGM maxval in '" + path.string() + "'");
    ++pos; // single whitespace after maxval

    geometry = {w, h};
    const std::size_t n = static_cast<std::size_t>(w) * h;
    if (pos > data.size() || data.size() - pos < n) throw FormatError("truncated PGM '" + path.string() + "'");
    std::vector<double> frame(n);
    for (std::size_t i = 0; i < n; ++i)
        frame[i] = static_cast<unsigned char>(data[pos + i]) / static_cast<double>(maxval);
    return frame;
}

std::vector<double> read_timestamps(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    std::vector<double> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const auto last = line.find_last_not_of(" \t\r");
        double t = 0.0;
        auto [ptr, ec] = std::from_chars(line.data() + first, line.data() + last + 1, t);
        if (ec != std::errc{} || ptr != line.data() + last + 1)
            throw FormatError(path.string() + ":" + std::to_string(line_no) + ": bad timestamp");
        out.push_back(t);
    }
    return out;
}

} // namespace

FrameSequence read_pgm_sequence(const std::filesystem::path& directory, const std::filesystem::path& timestamps)
{
    std::error_code ec;
    if (!std::filesystem::is_directory(directory, ec)) throw IoError("'" + directory.string() + "' is not a directory");
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(directory))
        if (entry.is_regular_file() && entry.path().extension() == ".pgm") files.push_back(entry.path());
    std::sort(files.begin(), files.end());

    FrameSequence seq;
    seq.timestamps = read_timestamps(timestamps);
    if (seq.timestamps.size() != files.size())
        throw ValidationError(std::to_string(files.size()) + " frames but " + std::to_string(seq.timestamps.size()) + " timestamps");
    for (std::size_t i = 0; i < files.size(); ++i) {
        SensorGeometry g;
        seq.frames.push_back(parse_pgm(detail::read_file(files[i]), files[i], g));
        if (i == 0) seq.geometry = g;
        else if (g != seq.geometry) throw ValidationError("frame '" + files[i].string() + "' has different dimensions");
    }
    return seq;
}

void write_pgm(const std::vector<double>& frame, SensorGeometry geometry, const std::filesystem::path& path)
{
    if (frame.size() != geometry.pixels()) throw ValidationError("frame size does not match geometry");
    std::string out = "P5\n" + std::to_string(geometry.width) + " " + std::to_string(geometry.height) + "\n255\n";
    for (double v : frame) out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0))));
    detail::write_file(path, out);
}

FrameSequence read_frame_stack(const std::filesystem::path& path)
{
    const std::string data = detail::read_file(path);
    detail::ByteReader r(data);
    if (r.remaining() < 4 || r.bytes(4, "magic") != kStackMagic) throw FormatError("bad magic in '" + path.string() + "'");
    const auto version = r.get<std::uint32_t>("version");
    if (version != kStackVersion) throw FormatError("unsupported FRMS version " + std::to_string(version));

    FrameSequence seq;
    seq.geometry.width = r.get<std::uint16_t>("width");
    seq.geometry.height = r.get<std::uint16_t>("height");
    const auto count = r.get<std::uint32_t>("frame count");
    if (!seq.geometry.valid()) throw FormatError("bad frame dimensions in '" + path.string() + "'");
    const std::size_t plane = seq.geometry.pixels();
    if (r.remaining() != static_cast<std::size_t>(count) * (sizeof(double) + plane))
        throw FormatError("size mismatch in '" + path.string() + "'");

    seq.timestamps.resize(count);
    for (auto& t : seq.timestamps) t = r.get<double>("timestamp");
    seq.frames.assign(count, std::vector<double>(plane));
    for (auto& f : seq.frames) {
        const auto raw = r.bytes(plane, "frame");
        for (std::size_t i = 0; i < plane; ++i) f[i] = static_cast<unsigned char>(raw[i]) / 255.0;
    }
    return seq;
}

void write_frame_stack(const FrameSequence& seq, const std::filesystem::path& path)
{
    validate(seq);
    detail::ByteWriter w;
    w.bytes(kStackMagic);
    w.put<std::uint32_t>(kStackVersion);
    w.put(static_cast<std::uint16_t>(seq.geometry.width));
    w.put(static_cast<std::uint16_t>(seq.geometry.height));
    w.put(static_cast<std::uint32_t>(seq.frames.size()));
    for (double t : seq.timestamps) w.put(t);
    for (const auto& f : seq.frames)
        for (double v : f) w.put(static_cast<std::uint8_t>(std::lround(v * 255.0)));
    detail::write_file(path, w.buffer());
}

} // namespace evc

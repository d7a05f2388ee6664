#include "evc/event_io.hpp"

#include "binary_io.hpp"
#include "evc/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <string>
#include <string_view>
#include <system_error>

namespace evc {

namespace {

constexpr std::string_view kCsvHeader = "t_us,x,y,p";
constexpr std::string_view kBinaryMagic = "EVS1";
constexpr std::uint32_t kBinaryVersion = 1;
constexpr std::size_t kBinaryRecordSize = 16;

[[noreturn]] void csv_error(const std::filesystem::path& path, std::size_t line, const std::string& what)
{
    throw FormatError(path.string() + ":" + std::to_string(line) + ": " + what);
}

template <typename T>
bool parse_field(std::string_view s, T& out)
{
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc{} && ptr == last;
}

} // namespace

std::string format_timestamp(double t)
{
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), t, std::chars_format::fixed);
    if (ec != std::errc{}) {
        // Only very large magnitudes fail to fit; fall back to the general form.
        auto r = std::to_chars(buf, buf + sizeof(buf), t);
        return std::string(buf, r.ptr);
    }
    std::string s(buf, ptr);
    auto dot = s.find('.');
    if (dot == std::string::npos) {
        s += ".000";
    } else {
        const auto frac = s.size() - dot - 1;
        if (frac < 3) s.append(3 - frac, '0');
    }
    return s;
}

EventStream read_events_csv(const std::filesystem::path& path, std::optional<SensorGeometry> geometry)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");

    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    std::vector<Event> events;
    int max_x = 0;
    int max_y = 0;

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!header_seen) {
            if (line != kCsvHeader) csv_error(path, line_no, "missing header '" + std::string(kCsvHeader) + "'");
            header_seen = true;
            continue;
        }
        if (line.empty()) continue;

        std::string_view row(line);
        std::string_view fields[4];
        std::size_t count = 0;
        while (count < 4) {
            auto comma = row.find(',');
            fields[count++] = row.substr(0, comma);
            if (comma == std::string_view::npos) {
                row = {};
                break;
            }
            row.remove_prefix(comma + 1);
            if (count == 4) csv_error(path, line_no, "too many fields");
        }
        if (count != 4) csv_error(path, line_no, "expected 4 fields");

        Event e;
        unsigned x = 0;
        unsigned y = 0;
        unsigned p = 0;
        if (!parse_field(fields[0], e.t)) csv_error(path, line_no, "bad timestamp '" + std::string(fields[0]) + "'");
        if (!parse_field(fields[1], x) || x > 65535) csv_error(path, line_no, "bad x '" + std::string(fields[1]) + "'");
        if (!parse_field(fields[2], y) || y > 65535) csv_error(path, line_no, "bad y '" + std::string(fields[2]) + "'");
        if (!parse_field(fields[3], p) || p > 1) csv_error(path, line_no, "bad polarity '" + std::string(fields[3]) + "'");
        e.x = static_cast<std::uint16_t>(x);
        e.y = static_cast<std::uint16_t>(y);
        e.p = p == 1 ? Polarity::On : Polarity::Off;
        max_x = std::max(max_x, static_cast<int>(x));
        max_y = std::max(max_y, static_cast<int>(y));
        events.push_back(e);
    }
    if (in.bad()) throw IoError("read failure on '" + path.string() + "'");
    if (!header_seen) csv_error(path, 1, "missing header '" + std::string(kCsvHeader) + "'");

    SensorGeometry g = geometry.value_or(SensorGeometry{std::min(max_x + 1, 65535), std::min(max_y + 1, 65535)});
    return make_stream(g, std::move(events));
}

void write_events_csv(const EventStream& stream, const std::filesystem::path& path)
{
    std::string out;
    out.reserve(32 * (stream.size() + 1));
    out.append(kCsvHeader);
    out.push_back('\n');
    for (const Event& e : stream.events) {
        out += format_timestamp(e.t);
        out.push_back(',');
        out += std::to_string(e.x);
        out.push_back(',');
        out += std::to_string(e.y);
        out.push_back(',');
        out.push_back(e.p == Polarity::On ? '1' : '0');
        out.push_back('\n');
    }
    detail::write_file(path, out);
}

EventStream read_events_binary(const std::filesystem::path& path)
{
    const std::string data = detail::read_file(path);
    detail::ByteReader r(data);
    if (r.remaining() < 4 || r.bytes(4, "magic") != kBinaryMagic) throw FormatError("bad magic in '" + path.string() + "'");
    const auto version = r.get<std::uint32_t>("version");
    if (version != kBinaryVersion) throw FormatError("unsupported EVS version " + std::to_string(version));

    EventStream s;
    s.geometry.width = r.get<std::uint16_t>("width");
    s.geometry.height = r.get<std::uint16_t>("height");
    const auto count = r.get<std::uint64_t>("record count");
    s.t_start = r.get<double>("t_start");
    s.t_end = r.get<double>("t_end");

    if (r.remaining() / kBinaryRecordSize < count)
        throw FormatError("truncated file: header declares " + std::to_string(count) + " records, "
                          + std::to_string(r.remaining() / kBinaryRecordSize) + " present");
    if (r.remaining() != count * kBinaryRecordSize)
        throw FormatError("record count mismatch: " + std::to_string(r.remaining()) + " payload bytes for "
                          + std::to_string(count) + " records");

    s.events.resize(count);
    for (auto& e : s.events) {
        e.t = r.get<double>("t_us");
        e.x = r.get<std::uint16_t>("x");
        e.y = r.get<std::uint16_t>("y");
        const auto p = r.get<std::uint8_t>("p");
        if (p > 1) throw FormatError("bad polarity byte " + std::to_string(p));
        e.p = p == 1 ? Polarity::On : Polarity::Off;
        r.bytes(3, "padding");
    }
    return s;
}

void write_events_binary(const EventStream& stream, const std::filesystem::path& path)
{
    if (!stream.geometry.valid()) throw ValidationError("invalid sensor geometry");
    detail::ByteWriter w;
    w.reserve(36 + stream.size() * kBinaryRecordSize);
    w.bytes(kBinaryMagic);
    w.put<std::uint32_t>(kBinaryVersion);
    w.put(static_cast<std::uint16_t>(stream.geometry.width));
    w.put(static_cast<std::uint16_t>(stream.geometry.height));
    w.put<std::uint64_t>(stream.size());
    w.put(stream.t_start);
    w.put(stream.t_end);
    for (const Event& e : stream.events) {
        w.put(e.t);
        w.put(e.x);
        w.put(e.y);
        w.put<std::uint8_t>(e.p == Polarity::On ? 1 : 0);
        w.zeros(3);
    }
    detail::write_file(path, w.buffer());
}

void export_point_cloud(const EventStream& stream, std::size_t max_points, const std::filesystem::path& path)
{
    if (max_points < 1) throw ValidationError("max_points must be >= 1");
    const std::size_t n = stream.size();
    const std::size_t stride = n <= max_points ? 1 : (n + max_points - 1) / max_points;

    std::string out = "x,y,t_us,p\n";
    for (std::size_t i = 0; i < n; i += stride) {
        const Event& e = stream.events[i];
        out += std::to_string(e.x);
        out.push_back(',');
        out += std::to_string(e.y);
        out.push_back(',');
        out += format_timestamp(e.t);
        out.push_back(',');
        out.push_back(e.p == Polarity::On ? '1' : '0');
        out.push_back('\n');
    }
    detail::write_file(path, out);
}

} // namespace evc

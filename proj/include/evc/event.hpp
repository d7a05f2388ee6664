#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace evc {

enum class Polarity : std::uint8_t { Off = 0, On = 1 };

/// Channel index used by voxel grids: 0 = ON, 1 = OFF.
constexpr int polarity_channel(Polarity p) { return p == Polarity::On ? 0 : 1; }
constexpr Polarity channel_polarity(int channel) { return channel == 0 ? Polarity::On : Polarity::Off; }

struct SensorGeometry {
    int width = 1;
    int height = 1;

    std::size_t pixels() const { return static_cast<std::size_t>(width) * static_cast<std::size_t>(height); }
    bool valid() const { return width >= 1 && height >= 1 && width <= 65535 && height <= 65535; }
    bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }

    friend bool operator==(const SensorGeometry&, const SensorGeometry&) = default;
};

struct Event {
    double t = 0.0; // microseconds
    std::uint16_t x = 0;
    std::uint16_t y = 0;
    Polarity p = Polarity::On;

    friend bool operator==(const Event&, const Event&) = default;
};

/// Canonical stream order: timestamp, then (y, x, p).
struct EventOrder {
    bool operator()(const Event& a, const Event& b) const
    {
        if (a.t != b.t) return a.t < b.t;
        if (a.y != b.y) return a.y < b.y;
        if (a.x != b.x) return a.x < b.x;
        return a.p < b.p;
    }
};

struct EventStream {
    SensorGeometry geometry;
    std::vector<Event> events;
    double t_start = 0.0;
    double t_end = 0.0;

    std::size_t size() const { return events.size(); }
    bool empty() const { return events.empty(); }

    friend bool operator==(const EventStream&, const EventStream&) = default;
};

/// Sorts events into canonical order and sets the span to [first t, last t]
/// (or [0, 0] when empty). Throws ValidationError on invalid geometry.
EventStream make_stream(SensorGeometry geometry, std::vector<Event> events);

/// Same as make_stream but with an explicit span; the span is widened if an
/// event falls outside it.
EventStream make_stream(SensorGeometry geometry, std::vector<Event> events, double t_start, double t_end);

enum class ViolationKind {
    InvalidGeometry,
    XOutOfBounds,
    YOutOfBounds,
    NonFiniteTime,
    NegativeTime,
    Ordering,
    OutsideSpan,
};

struct Violation {
    std::size_t index = 0;
    ViolationKind kind = ViolationKind::Ordering;
    std::string message;
};

using ValidationReport = std::vector<Violation>;

/// Reports every invariant violation in the stream. Never throws.
ValidationReport validate_stream(const EventStream& stream);

std::string to_string(ViolationKind kind);

} // namespace evc

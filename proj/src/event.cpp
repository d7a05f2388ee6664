#include "evc/event.hpp"

#include "evc/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace evc {

EventStream make_stream(SensorGeometry geometry, std::vector<Event> events)
{
    if (!geometry.valid()) throw ValidationError("invalid sensor geometry");
    // EventOrder compares every field, so equal keys are identical events and
    // an unstable sort gives the same result.
    if (!std::is_sorted(events.begin(), events.end(), EventOrder{})) std::sort(events.begin(), events.end(), EventOrder{});
    EventStream s{geometry, std::move(events), 0.0, 0.0};
    if (!s.events.empty()) {
        s.t_start = s.events.front().t;
        s.t_end = s.events.back().t;
    }
    return s;
}

EventStream make_stream(SensorGeometry geometry, std::vector<Event> events, double t_start, double t_end)
{
    auto s = make_stream(geometry, std::move(events));
    if (!s.events.empty()) {
        t_start = std::min(t_start, s.t_start);
        t_end = std::max(t_end, s.t_end);
    }
    s.t_start = t_start;
    s.t_end = t_end;
    return s;
}

std::string to_string(ViolationKind kind)
{
    switch (kind) {
    case ViolationKind::InvalidGeometry: return "invalid geometry";
    case ViolationKind::XOutOfBounds: return "x out of bounds";
    case ViolationKind::YOutOfBounds: return "y out of bounds";
    case ViolationKind::NonFiniteTime: return "non-finite timestamp";
    case ViolationKind::NegativeTime: return "negative timestamp";
    case ViolationKind::Ordering: return "ordering violation";
    case ViolationKind::OutsideSpan: return "outside stream span";
    }
    return "unknown";
}

ValidationReport validate_stream(const EventStream& stream)
{
    ValidationReport report;
    auto add = [&](std::size_t i, ViolationKind kind, const std::string& detail) {
        std::ostringstream msg;
        msg << to_string(kind) << " at index " << i;
        if (!detail.empty()) msg << ": " << detail;
        report.push_back({i, kind, msg.str()});
    };

    const auto& g = stream.geometry;
    if (!g.valid())
        add(0, ViolationKind::InvalidGeometry,
            std::to_string(g.width) + "x" + std::to_string(g.height));

    const auto& ev = stream.events;
    for (std::size_t i = 0; i < ev.size(); ++i) {
        const Event& e = ev[i];
        if (e.x >= g.width) add(i, ViolationKind::XOutOfBounds, "x=" + std::to_string(e.x));
        if (e.y >= g.height) add(i, ViolationKind::YOutOfBounds, "y=" + std::to_string(e.y));
        if (!std::isfinite(e.t)) {
            add(i, ViolationKind::NonFiniteTime, "");
            continue;
        }
        if (e.t < 0.0) add(i, ViolationKind::NegativeTime, "t=" + std::to_string(e.t));
        if (e.t < stream.t_start || e.t > stream.t_end) add(i, ViolationKind::OutsideSpan, "t=" + std::to_string(e.t));
        if (i > 0 && std::isfinite(ev[i - 1].t) && EventOrder{}(e, ev[i - 1]))
            add(i, ViolationKind::Ordering, "precedes index " + std::to_string(i - 1));
    }
    return report;
}

} // namespace evc

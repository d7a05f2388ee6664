#include "evc/sampling.hpp"

#include "evc/error.hpp"
#include "parallel.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <string>
#include <type_traits>

namespace evc {

namespace {

// Stream tags keep the RNG substreams of different samplers disjoint.
constexpr std::uint64_t kTagType2 = 0x4c444154; // Type2 offsets in LDATI
constexpr std::uint64_t kTagRound = 0x524f554e; // Bernoulli rounding (baselines)

// Upper bound on a single decoupled value; keeps per-bin event counts in int range.
constexpr double kMaxBinValue = 1e9;

struct SeriesId {
    int channel;
    int y;
    int x;
};

// Visits every (pixel, polarity) series with its values. Rows are gathered
// plane by plane so reads follow memory order; chunks are bands of rows.
template <typename Fn>
void for_each_series(const VoxelGrid& grid, std::size_t n_chunks, Fn&& fn)
{
    const int k_total = grid.time_bins();
    const int width = grid.width();
    detail::parallel_chunks(static_cast<std::size_t>(grid.height()), static_cast<unsigned>(n_chunks),
                            [&](std::size_t c, std::size_t begin, std::size_t end) {
        std::vector<double> row(static_cast<std::size_t>(k_total) * 2 * width);
        for (std::size_t y = begin; y < end; ++y) {
            for (int g = 0; g < k_total; ++g)
                for (int ch = 0; ch < 2; ++ch) {
                    const double* src = grid.data().data() + grid.index(g, ch, static_cast<int>(y), 0);
                    for (int x = 0; x < width; ++x) row[(static_cast<std::size_t>(x) * 2 + ch) * k_total + g] = src[x];
                }
            for (int x = 0; x < width; ++x)
                for (int ch = 0; ch < 2; ++ch) {
                    const std::span<const double> values(row.data() + (static_cast<std::size_t>(x) * 2 + ch) * k_total,
                                                         static_cast<std::size_t>(k_total));
                    fn(c, SeriesId{ch, static_cast<int>(y), x}, values);
                }
        }
    });
}

std::size_t chunk_count(const VoxelGrid& grid, unsigned threads)
{
    return std::max<std::size_t>(1, std::min<std::size_t>(std::max(threads, 1u), static_cast<std::size_t>(grid.height())));
}

Event make_event(const VoxelGrid& grid, const SeriesId& id, int bin, double offset)
{
    return Event{grid.t0() + bin * grid.delta() + offset, static_cast<std::uint16_t>(id.x),
                 static_cast<std::uint16_t>(id.y), channel_polarity(id.channel)};
}

std::vector<double> uniform_offsets(int n, double delta, CounterRng& rng)
{
    std::vector<double> out(static_cast<std::size_t>(n));
    const double top = std::nextafter(delta, 0.0);
    for (auto& t : out) t = std::min(rng.uniform() * delta, top);
    std::sort(out.begin(), out.end());
    return out;
}

// Concatenates chunk outputs in canonical order: a counting sort by time bin,
// then a sort inside each bin. make_stream re-sorts if rounding at a bin edge
// left the result out of order.
// Sizes chunk outputs from the grid mass, which is close to the event count.
void reserve_chunks(const VoxelGrid& grid, std::vector<std::vector<Event>>& chunks)
{
    double mass = 0.0;
    for (double v : grid.data()) mass += v;
    const double per_chunk = 1.1 * mass / static_cast<double>(chunks.size()) + 64.0;
    if (!(per_chunk < 1e9)) return;
    for (auto& c : chunks) c.reserve(static_cast<std::size_t>(per_chunk));
}

EventStream finish(const VoxelGrid& grid, std::vector<std::vector<Event>>& chunks)
{
    const int k_total = grid.time_bins();
    const auto bin_of = [&](const Event& e) {
        const double k = std::floor((e.t - grid.t0()) / grid.delta());
        return static_cast<std::size_t>(std::clamp(k, 0.0, static_cast<double>(k_total - 1)));
    };
    std::vector<std::size_t> start(static_cast<std::size_t>(k_total) + 1, 0);
    for (const auto& c : chunks)
        for (const Event& e : c) ++start[bin_of(e) + 1];
    for (int k = 0; k < k_total; ++k) start[k + 1] += start[k];

    std::vector<Event> events(start.back());
    std::vector<std::size_t> fill(start.begin(), start.end() - 1);
    for (auto& c : chunks) {
        for (const Event& e : c) events[fill[bin_of(e)]++] = e;
        std::vector<Event>().swap(c);
    }
    for (int k = 0; k < k_total; ++k) std::sort(events.begin() + start[k], events.begin() + start[k + 1], EventOrder{});
    return make_stream(grid.geometry(), std::move(events), grid.t0(), grid.t_end());
}

void check_snap(double snap_tolerance)
{
    if (!(snap_tolerance >= 0.0 && snap_tolerance < 0.5)) throw ValidationError("snap tolerance must be in [0, 0.5)");
}

void check_threshold(double theta_emit)
{
    if (!(theta_emit >= 0.0 && theta_emit < 1.0)) throw ValidationError("theta_emit must lie in [0, 1)");
}

} // namespace

namespace {

// chain_decouple into a reused buffer; the caller validates delta and options.
void decouple_into(std::span<const double> series, double delta, const DecoupleOptions& options,
                   std::vector<DecoupledBin>& out)
{
    out.resize(series.size());
    double carry = 0.0;
    for (std::size_t k = 0; k < series.size(); ++k) {
        const double v = series[k];
        if (!(v >= 0.0 && v <= kMaxBinValue)) {
            if (!std::isfinite(v) || v < 0.0)
                throw ValidationError("voxel value at bin " + std::to_string(k) + " is negative or non-finite");
            throw ValidationError("voxel value at bin " + std::to_string(k) + " is too large");
        }

        DecoupledBin& bin = out[k];
        bin.offsets.clear();
        bin.bin_index = static_cast<int>(k);
        bin.v = v;
        if (v == 0.0 && carry == 0.0) {
            bin.v_prime = 0.0;
            bin.kind = BinKind::Empty;
            bin.n = 0;
            bin.carry_out = 0.0;
            continue;
        }

        double vp = v - carry;
        const double nearest = std::round(vp);
        if (std::abs(vp - nearest) <= options.snap_tolerance) vp = nearest;
        vp = std::max(vp, 0.0);
        bin.v_prime = vp;

        if (vp <= options.theta_emit) {
            bin.kind = BinKind::Empty;
            bin.n = 0;
            bin.carry_out = 0.0;
        } else if (vp <= 1.0) {
            bin.kind = BinKind::Type1;
            bin.n = 1;
            bin.carry_out = 1.0 - vp;
            bin.offsets.push_back(bin.carry_out * delta);
        } else {
            bin.kind = BinKind::Type2;
            const double n = std::ceil(vp);
            bin.n = static_cast<int>(n);
            bin.carry_out = n - vp;
        }
        carry = bin.carry_out;
    }
}

} // namespace

std::vector<DecoupledBin> chain_decouple(std::span<const double> series, double delta, const DecoupleOptions& options)
{
    if (!(delta > 0.0) || !std::isfinite(delta)) throw ValidationError("bin width must be finite and > 0");
    check_threshold(options.theta_emit);
    check_snap(options.snap_tolerance);
    std::vector<DecoupledBin> out;
    decouple_into(series, delta, options, out);
    return out;
}

SlopeParams slope_params(double prev, double current, double next, double delta)
{
    if (!(delta > 0.0) || !std::isfinite(delta)) throw ValidationError("bin width must be finite and > 0");
    if (!(prev >= 0.0) || !(next >= 0.0) || !std::isfinite(prev) || !std::isfinite(next) || !std::isfinite(current))
        throw ValidationError("neighbour values must be finite and >= 0");
    const double mass = prev + current + next;
    if (!(mass > 0.0)) throw ValidationError("neighbourhood mass must be > 0");

    SlopeParams p;
    p.delta = delta;
    p.slope = (next - prev) / (2.0 * delta * delta * mass);
    p.intercept = 1.0 / delta - delta * p.slope / 2.0;
    return p;
}

double slope_inverse_cdf(const SlopeParams& params, double w)
{
    // Solves slope/2 * t^2 + intercept * t = w in the rationalized form, which
    // stays accurate as slope -> 0.
    const double disc = params.intercept * params.intercept + 2.0 * params.slope * w;
    assert(disc > 0.0);
    const double t = 2.0 * w / (params.intercept + std::sqrt(std::max(disc, 0.0)));
    return std::clamp(t, 0.0, std::nextafter(params.delta, 0.0));
}

std::vector<double> sample_slope(const SlopeParams& params, int n, CounterRng& rng)
{
    std::vector<double> out(static_cast<std::size_t>(std::max(n, 0)));
    for (auto& t : out) t = slope_inverse_cdf(params, rng.uniform());
    std::sort(out.begin(), out.end());
    return out;
}

int stochastic_round(double v, CounterRng& rng)
{
    const double whole = std::floor(v);
    const double frac = v - whole;
    return static_cast<int>(whole) + (rng.uniform() < frac ? 1 : 0);
}

std::string_view to_string(SamplerMethod method)
{
    switch (method) {
    case SamplerMethod::LdatiSlope: return "ldati";
    case SamplerMethod::LdatiRandom: return "ldati-random";
    case SamplerMethod::Random: return "random";
    case SamplerMethod::Even: return "even";
    }
    return "unknown";
}

SamplerMethod parse_sampler_method(std::string_view name)
{
    std::string key(name);
    std::replace(key.begin(), key.end(), '_', '-');
    if (key == "ldati" || key == "ldati-slope") return SamplerMethod::LdatiSlope;
    if (key == "ldati-random") return SamplerMethod::LdatiRandom;
    if (key == "random") return SamplerMethod::Random;
    if (key == "even") return SamplerMethod::Even;
    throw ValidationError("unknown sampling method '" + std::string(name) + "'");
}

EventStream ldati(const VoxelGrid& grid, const SamplerConfig& config, LdatiDiagnostics* diagnostics)
{
    if (config.method != SamplerMethod::LdatiSlope && config.method != SamplerMethod::LdatiRandom)
        throw ValidationError("ldati requires method ldati or ldati-random");
    check_threshold(config.theta_emit);
    check_snap(config.snap_tolerance);

    const bool slope = config.method == SamplerMethod::LdatiSlope;
    const double delta = grid.delta();
    const DecoupleOptions options{config.theta_emit, config.snap_tolerance};
    const std::size_t n_chunks = chunk_count(grid, config.threads);

    std::vector<std::vector<Event>> chunk_events(n_chunks);
    reserve_chunks(grid, chunk_events);
    std::vector<std::vector<DecoupledBin>> scratch(n_chunks);
    std::vector<LdatiDiagnostics> chunk_diag(n_chunks);
    for (auto& d : chunk_diag) d.min_pdf_endpoint = d.min_pdf_endpoint_scaled = std::numeric_limits<double>::infinity();

    for_each_series(grid, n_chunks, [&](std::size_t c, const SeriesId& id, std::span<const double> values) {
        auto& events = chunk_events[c];
        auto& diag = chunk_diag[c];
        if (std::all_of(values.begin(), values.end(), [](double v) { return v == 0.0; })) {
            diag.empty_bins += values.size();
            return;
        }
        auto& bins = scratch[c];
        decouple_into(values, delta, options, bins);
        const int k_total = static_cast<int>(bins.size());
        for (auto& bin : bins) {
            const int k = bin.bin_index;
            switch (bin.kind) {
            case BinKind::Empty: ++diag.empty_bins; continue;
            case BinKind::Type1: ++diag.type1_bins; break;
            case BinKind::Type2: {
                ++diag.type2_bins;
                CounterRng rng(config.seed, {kTagType2, static_cast<std::uint64_t>(id.x), static_cast<std::uint64_t>(id.y),
                                             static_cast<std::uint64_t>(id.channel), static_cast<std::uint64_t>(k)});
                if (slope) {
                    const double prev = k > 0 ? values[k - 1] : 0.0;
                    const double next = k + 1 < k_total ? values[k + 1] : 0.0;
                    const SlopeParams params = slope_params(prev, values[k], next, delta);
                    const double lo = std::min(params.pdf(0.0), params.pdf(delta));
                    assert(lo >= 0.0);
                    diag.min_pdf_endpoint = std::min(diag.min_pdf_endpoint, lo);
                    diag.min_pdf_endpoint_scaled = std::min(diag.min_pdf_endpoint_scaled, lo * delta);
                    bin.offsets = sample_slope(params, bin.n, rng);
                } else {
                    bin.offsets = uniform_offsets(bin.n, delta, rng);
                }
                break;
            }
            }
            for (double offset : bin.offsets) events.push_back(make_event(grid, id, k, offset));
        }
    });

    if (diagnostics) {
        LdatiDiagnostics total;
        total.min_pdf_endpoint = total.min_pdf_endpoint_scaled = std::numeric_limits<double>::infinity();
        for (const auto& d : chunk_diag) {
            total.empty_bins += d.empty_bins;
            total.type1_bins += d.type1_bins;
            total.type2_bins += d.type2_bins;
            total.min_pdf_endpoint = std::min(total.min_pdf_endpoint, d.min_pdf_endpoint);
            total.min_pdf_endpoint_scaled = std::min(total.min_pdf_endpoint_scaled, d.min_pdf_endpoint_scaled);
        }
        *diagnostics = total;
    }
    return finish(grid, chunk_events);
}

namespace {

CounterRng rounding_rng(std::uint64_t seed, const SeriesId& id, int bin)
{
    return CounterRng(seed, {kTagRound, static_cast<std::uint64_t>(id.x), static_cast<std::uint64_t>(id.y),
                             static_cast<std::uint64_t>(id.channel), static_cast<std::uint64_t>(bin)});
}

void check_values(std::span<const double> values)
{
    for (double v : values)
        if (!std::isfinite(v) || v < 0.0 || v > kMaxBinValue) throw ValidationError("voxel values must be finite and >= 0");
}

// Runs fn(state, id, bin, rounded_count, rng) for every voxel with a nonzero
// value; rng is positioned just after the rounding draw. One State per chunk.
template <typename State, typename Fn>
std::vector<State> for_each_rounded(const VoxelGrid& grid, const SamplerConfig& config, Fn&& fn)
{
    std::vector<State> states(chunk_count(grid, config.threads));
    if constexpr (std::is_same_v<State, std::vector<Event>>) reserve_chunks(grid, states);
    for_each_series(grid, states.size(), [&](std::size_t c, const SeriesId& id, std::span<const double> values) {
        check_values(values);
        for (int k = 0; k < static_cast<int>(values.size()); ++k) {
            if (values[k] == 0.0) continue;
            CounterRng rng = rounding_rng(config.seed, id, k);
            const int n = stochastic_round(values[k], rng);
            fn(states[c], id, k, n, rng);
        }
    });
    return states;
}

} // namespace

EventStream sample_random(const VoxelGrid& grid, const SamplerConfig& config)
{
    const double delta = grid.delta();
    auto chunks = for_each_rounded<std::vector<Event>>(
        grid, config, [&](std::vector<Event>& out, const SeriesId& id, int k, int n, CounterRng& rng) {
            for (double offset : uniform_offsets(n, delta, rng)) out.push_back(make_event(grid, id, k, offset));
        });
    return finish(grid, chunks);
}

EventStream sample_even(const VoxelGrid& grid, const SamplerConfig& config)
{
    // The largest rounded count anywhere in the grid sets the sub-bin width,
    // so counts are collected first and events emitted afterwards.
    struct Rounded {
        SeriesId id;
        int bin;
        int n;
    };
    const auto counts = for_each_rounded<std::vector<Rounded>>(
        grid, config, [](std::vector<Rounded>& out, const SeriesId& id, int k, int n, CounterRng&) {
            if (n > 0) out.push_back({id, k, n});
        });
    int max_count = 0;
    for (const auto& chunk : counts)
        for (const auto& r : chunk) max_count = std::max(max_count, r.n);
    const double step = max_count > 0 ? grid.delta() / max_count : 0.0;

    std::vector<std::vector<Event>> chunks(counts.size());
    for (std::size_t c = 0; c < counts.size(); ++c)
        for (const auto& r : counts[c])
            for (int i = 0; i < r.n; ++i) chunks[c].push_back(make_event(grid, r.id, r.bin, i * step));
    return finish(grid, chunks);
}

EventStream sample(const VoxelGrid& grid, const SamplerConfig& config)
{
    switch (config.method) {
    case SamplerMethod::LdatiSlope:
    case SamplerMethod::LdatiRandom: return ldati(grid, config);
    case SamplerMethod::Random: return sample_random(grid, config);
    case SamplerMethod::Even: return sample_even(grid, config);
    }
    throw ValidationError("unknown sampling method");
}

} // namespace evc

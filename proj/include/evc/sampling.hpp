#pragma once

#include "evc/event.hpp"
#include "evc/rng.hpp"
#include "evc/voxel.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace evc {

enum class BinKind { Empty, Type1, Type2 };

/// Result of chain decoupling for one time bin of one (pixel, polarity) series.
struct DecoupledBin {
    int bin_index = 0;
    double v = 0.0;       // raw voxel value
    double v_prime = 0.0; // value after removing the carry from the previous bin
    BinKind kind = BinKind::Empty;
    int n = 0;
    double carry_out = 0.0;
    /// Relative times in [0, delta). Filled for Type1; left empty for Type2
    /// until a sampler fills it.
    std::vector<double> offsets;
};

struct DecoupleOptions {
    double theta_emit = 0.0;
    /// Decoupled values within this distance of an integer are snapped to it,
    /// absorbing rounding residue from the carry chain.
    double snap_tolerance = 1e-9;
};

/// Sequentially inverts the step-signal carry chain of one series.
/// Throws ValidationError on negative or non-finite values.
std::vector<DecoupledBin> chain_decouple(std::span<const double> series, double delta,
                                         const DecoupleOptions& options = {});

/// Linear in-bin density f(t) = slope * t + intercept on [0, delta].
struct SlopeParams {
    double slope = 0.0;     // k_p, 1/us^2
    double intercept = 0.0; // b, 1/us
    double delta = 1.0;

    double pdf(double t) const { return slope * t + intercept; }
    double cdf(double t) const { return 0.5 * slope * t * t + intercept * t; }
};

/// Density from the raw values of the previous, current and next bins.
/// Missing neighbours at series boundaries are passed as 0.
SlopeParams slope_params(double prev, double current, double next, double delta);

/// Inverse-CDF transform of a uniform variate w in [0, 1); cancellation-free.
double slope_inverse_cdf(const SlopeParams& params, double w);

/// Draws n sorted offsets in [0, delta) from the slope density.
std::vector<double> sample_slope(const SlopeParams& params, int n, CounterRng& rng);

/// floor(v) + Bernoulli(v - floor(v)).
int stochastic_round(double v, CounterRng& rng);

enum class SamplerMethod { LdatiSlope, LdatiRandom, Random, Even };

std::string_view to_string(SamplerMethod method);
/// Accepts "ldati", "ldati-slope", "ldati-random", "random", "even"
/// (underscores are accepted in place of dashes). Throws ValidationError.
SamplerMethod parse_sampler_method(std::string_view name);

struct SamplerConfig {
    SamplerMethod method = SamplerMethod::LdatiSlope;
    std::uint64_t seed = 42;
    double theta_emit = 0.0;
    double snap_tolerance = 1e-9;
    unsigned threads = 1;
};

/// Counters collected while running LDATI.
struct LdatiDiagnostics {
    std::size_t empty_bins = 0;
    std::size_t type1_bins = 0;
    std::size_t type2_bins = 0;
    /// Smallest density value at either end of any Type2 bin (+inf if none).
    double min_pdf_endpoint = 0.0;
    /// Density endpoints scaled by delta, so the value is dimensionless.
    double min_pdf_endpoint_scaled = 0.0;
};

/// Chain decoupling plus Type2 offset sampling over every (pixel, polarity)
/// series. Output is globally sorted and independent of `config.threads`.
EventStream ldati(const VoxelGrid& grid, const SamplerConfig& config, LdatiDiagnostics* diagnostics = nullptr);

/// Baseline: Bernoulli-rounded count per voxel, offsets uniform in the bin.
EventStream sample_random(const VoxelGrid& grid, const SamplerConfig& config);

/// Baseline: Bernoulli-rounded count per voxel, event i at i * delta / M where
/// M is the largest rounded count in the grid.
EventStream sample_even(const VoxelGrid& grid, const SamplerConfig& config);

/// Dispatches on config.method.
EventStream sample(const VoxelGrid& grid, const SamplerConfig& config);

} // namespace evc

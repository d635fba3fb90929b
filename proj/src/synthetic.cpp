#include "axsym/synthetic.hpp"

#include <cmath>
#include <numbers>

#include "axsym/error.hpp"
#include "axsym/simulate.hpp"

namespace axsym {

namespace {

double radians(double deg) { return deg * std::numbers::pi / 180.0; }

std::vector<double> with_history(std::size_t history, std::size_t n_years,
                                 double (*log_ratio)(double)) {
    std::vector<double> co2(history + n_years, kPreindustrialCo2);
    for (std::size_t t = 1; t <= n_years; ++t) {
        const double x = static_cast<double>(t) / static_cast<double>(n_years);
        co2[history + t - 1] = kPreindustrialCo2 * std::exp(log_ratio(x));
    }
    return co2;
}

double drop_shape(double x) {
    const double peak = std::log(4.0);
    const double floor = std::log(2.0);
    if (x <= 0.35) return peak * x / 0.35;
    if (x <= 0.5) return peak + (floor - peak) * (x - 0.35) / 0.15;
    return floor;
}

double slow_shape(double x) { return std::log(2.5) * std::min(x / 0.8, 1.0); }

} // namespace

std::vector<double> band_centres(std::size_t n_lat, double lat_max) {
    std::vector<double> lat(n_lat);
    for (std::size_t m = 0; m < n_lat; ++m) {
        lat[m] = -lat_max + 2.0 * lat_max * (static_cast<double>(m) + 0.5) /
                                static_cast<double>(n_lat);
    }
    return lat;
}

GridGeometry synthetic_geometry(std::size_t n_lat, std::size_t n_lon) {
    const auto lat = band_centres(n_lat);
    std::vector<std::uint8_t> mask(n_lat * n_lon, 0);
    for (std::size_t n = 0; n < n_lon; ++n) {
        const double lon = regular_longitude(n, n_lon);
        for (std::size_t m = 0; m < n_lat; ++m) {
            const bool a = lon >= 20.0 && lon < 120.0 && lat[m] > 0.0 && lat[m] < 70.0;
            const bool b = lon >= 250.0 && lon < 310.0 && lat[m] > -50.0 && lat[m] < 50.0;
            mask[n * n_lat + m] = (a || b) ? 1 : 0;
        }
    }
    return GridGeometry(lat, n_lon, std::move(mask));
}

CovarianceParams reference_params(const GridGeometry& g) {
    CovarianceParams p;
    for (double lat : g.latitudes()) {
        const double x = lat / 90.0;
        BandSpectrum b;
        b.phi = 0.6 + 0.5 * x * x;
        b.alpha = 0.45 + 0.2 * std::cos(std::numbers::pi * x);
        b.nu = 1.0 + 0.6 * x * x;
        p.bands.push_back(b);
    }
    p.coherence = {0.97, 0.21};
    p.ar = {0.11, 0.10};
    return p;
}

ForcingSeries drop_forcing(std::size_t n_years, std::size_t history) {
    return ForcingSeries(with_history(history, n_years, drop_shape), n_years);
}

ForcingSeries slow_forcing(std::size_t n_years, std::size_t history) {
    return ForcingSeries(with_history(history, n_years, slow_shape), n_years);
}

ForcingSeries control_forcing(std::size_t n_years) {
    return ForcingSeries(std::vector<double>(n_years, kPreindustrialCo2), n_years);
}

MeanModelParams reference_mean(const GridGeometry& g, const RegionMap& regions, double lambda) {
    MeanModelParams p;
    p.geometry = g;
    p.regions = regions;
    p.lambda = lambda;
    const std::size_t M = g.n_lat();
    const std::size_t N = g.n_lon();
    const std::size_t C = regions.n_regions();
    const double base = std::log(kPreindustrialCo2);
    p.beta2.resize(C);
    for (std::size_t c = 0; c < C; ++c) {
        p.beta2[c] = 1.0 + 0.5 * std::sin(1.7 * static_cast<double>(c));
    }
    p.beta0.resize(M * N);
    p.beta1.resize(M * N);
    for (std::size_t n = 0; n < N; ++n)
        for (std::size_t m = 0; m < M; ++m) {
            const std::size_t q = g.pixel(n, m);
            const double lat = radians(g.latitudes()[m]);
            const double lon = radians(g.longitudes()[n]);
            p.beta1[q] = 0.8 + 0.4 * std::sin(lat) + 0.2 * std::cos(lon);
            p.beta0[q] = -(p.beta1[q] + p.beta2[regions.region_of(q)]) * base;
        }
    return p;
}

Standardization reference_standardization(const GridGeometry& g, const CovarianceParams& p) {
    const auto lags = synthesize_lags(SpectralBlocks::build(p, g));
    Standardization s;
    const std::size_t M = g.n_lat();
    s.mean.resize(g.n_pixels());
    s.sd.resize(g.n_pixels());
    for (std::size_t n = 0; n < g.n_lon(); ++n)
        for (std::size_t m = 0; m < M; ++m) {
            const std::size_t q = g.pixel(n, m);
            s.mean[q] = 288.0 - 30.0 * std::pow(std::sin(radians(g.latitudes()[m])), 2.0) +
                        (g.is_land(n, m) ? 2.0 : 0.0);
            s.sd[q] = std::sqrt(lags.lags[0](m, m));
        }
    return s;
}

std::vector<std::string> synthetic_preset_names() { return {"tiny", "small", "large"}; }

SyntheticPreset synthetic_preset(const std::string& name) {
    if (name == "tiny") return {"tiny", 4, 8, 40, 3, 60, 40};
    if (name == "small") return {"small", 8, 16, 120, 5, 200, 120};
    if (name == "large") return {"large", 20, 96, 200, 5, 300, 200};
    std::string known;
    for (const auto& n : synthetic_preset_names()) known += (known.empty() ? "" : ", ") + n;
    throw UsageError("unknown preset '" + name + "' (known: " + known + ")");
}

SyntheticBundle generate_synthetic(const SyntheticPreset& preset, std::uint64_t seed,
                                   int workers) {
    SyntheticBundle b;
    b.geometry = synthetic_geometry(preset.n_lat, preset.n_lon);
    b.regions = RegionMap::blocks(b.geometry);
    b.params = reference_params(b.geometry);
    b.mean = reference_mean(b.geometry, b.regions);
    b.mean.standardization = reference_standardization(b.geometry, b.params);
    b.training_forcing = drop_forcing(preset.n_time);
    b.heldout_forcing = slow_forcing(preset.heldout_time);

    auto draw = [&](const ForcingSeries& f, std::size_t R, std::uint64_t s, const char* id) {
        SimulationSpec spec;
        spec.geometry = b.geometry;
        spec.params = b.params;
        spec.n_time = f.n_years();
        spec.n_real = R;
        spec.seed = s;
        spec.mean = b.mean;
        spec.forcing = f;
        spec.scenario_id = id;
        return sample(spec, workers);
    };
    b.training = draw(b.training_forcing, preset.n_real, seed, "drop");
    b.control = draw(control_forcing(preset.control_time), 1, seed + 1, "control");
    b.heldout = draw(b.heldout_forcing, preset.n_real, seed + 2, "slow");
    return b;
}

} // namespace axsym

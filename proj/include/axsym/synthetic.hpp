#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "axsym/grid.hpp"
#include "axsym/mean_model.hpp"
#include "axsym/params.hpp"

namespace axsym {

// Preindustrial CO2 (ppm).
inline constexpr double kPreindustrialCo2 = 280.0;

/// Latitudes evenly spaced in (-lat_max, lat_max) at band centres.
std::vector<double> band_centres(std::size_t n_lat, double lat_max = 80.0);

/// Band centres plus two rectangular land masses.
GridGeometry synthetic_geometry(std::size_t n_lat, std::size_t n_lon);

/// Band triples that vary smoothly with latitude, with
/// xi = 0.97, tau = 0.21, phi0 = 0.11, phi1 = 0.10.
CovarianceParams reference_params(const GridGeometry& g);

/// Drop scenario: rise to 4x preindustrial by 0.35 T, fall to 2x by 0.5 T, then flat.
ForcingSeries drop_forcing(std::size_t n_years, std::size_t history = 100);
/// Slow scenario: log-linear rise to 2.5x preindustrial by 0.8 T, then flat.
ForcingSeries slow_forcing(std::size_t n_years, std::size_t history = 100);
/// Constant preindustrial forcing.
ForcingSeries control_forcing(std::size_t n_years);

/// Standardized-unit mean model with lambda = 0.95. The intercept makes
/// the preindustrial mean zero.
MeanModelParams reference_mean(const GridGeometry& g, const RegionMap& regions,
                               double lambda = 0.95);

/// Raw-unit standardization used by the generator: base climate per
/// latitude and the model's marginal noise sd.
Standardization reference_standardization(const GridGeometry& g, const CovarianceParams& p);

struct SyntheticPreset {
    std::string name;
    std::size_t n_lat = 8;
    std::size_t n_lon = 16;
    std::size_t n_time = 120;
    std::size_t n_real = 5;
    std::size_t control_time = 200;
    std::size_t heldout_time = 120;
};

// "tiny", "small", "large".
SyntheticPreset synthetic_preset(const std::string& name);
std::vector<std::string> synthetic_preset_names();

struct SyntheticBundle {
    GridGeometry geometry;
    RegionMap regions;
    CovarianceParams params;
    MeanModelParams mean; // truth, standardization filled in
    ForcingSeries training_forcing;
    ForcingSeries heldout_forcing;
    EnsembleTensor training; // drop scenario, raw units
    EnsembleTensor control;  // constant forcing, one realization
    EnsembleTensor heldout;  // slow scenario
};

/// Streams: training uses seed, control seed + 1, held-out seed + 2.
SyntheticBundle generate_synthetic(const SyntheticPreset& preset, std::uint64_t seed,
                                   int workers = 1);

} // namespace axsym

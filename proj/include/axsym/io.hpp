#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <vector>

#include <json.hpp>

#include "axsym/estimation.hpp"
#include "axsym/grid.hpp"
#include "axsym/mean_model.hpp"
#include "axsym/params.hpp"
#include "axsym/simulate.hpp"

namespace axsym {

using Json = nlohmann::json;
namespace fs = std::filesystem;

/**
 * Tensor file: "AXS1" | u32 M | u32 N | u32 T | u32 R | f64[M] latitudes |
 * f64[N] longitudes | u8[M*N] mask | f64[R*T*N*M] values, little-endian.
 * Metadata (scenario_id, co2, units) lives in the sidecar "<stem>.meta.json".
 */
void write_tensor(const EnsembleTensor& e, const fs::path& path, bool with_sidecar = true);
// A missing sidecar leaves scenario_id empty, co2 empty and units "K".
EnsembleTensor read_tensor(const fs::path& path, bool with_sidecar = true);
fs::path sidecar_path(const fs::path& tensor_path);

Json geometry_to_json(const GridGeometry& g);
GridGeometry geometry_from_json(const Json& j);

Json params_to_json(const CovarianceParams& p);
CovarianceParams params_from_json(const Json& j);
void write_params(const CovarianceParams& p, const fs::path& path,
                  const FitReport* report = nullptr);
CovarianceParams read_params(const fs::path& path);

Json band_fits_to_json(const std::vector<BandFit>& fits);
void write_band_fits(const std::vector<BandFit>& fits, const fs::path& path);
// Throws NumericalError when any band is marked failed.
std::vector<BandSpectrum> read_band_spectra(const fs::path& path);

Json mean_to_json(const MeanModelParams& p);
MeanModelParams mean_from_json(const Json& j);
void write_mean(const MeanModelParams& p, const fs::path& path);
MeanModelParams read_mean(const fs::path& path);

/// CSV with header lat_index,lon_index,region_id; all 1-based.
void write_regions(const RegionMap& regions, const fs::path& path);
RegionMap read_regions(const fs::path& path, const GridGeometry& g);

/// {"co2": [...], "T": model years}. Without "T", default_years is used;
/// default_years = 0 means every entry is a model year.
void write_forcing(const ForcingSeries& f, const fs::path& path);
ForcingSeries read_forcing(const fs::path& path, std::size_t default_years = 0);

/**
 * {"geometry": {...}, "params": {...}, "T", "R", "seed", "scenario_id",
 *  "mean": "<mean.json>", "co2": [...]}. Relative mean paths resolve against
 * the spec file's directory; "co2" needs at least T entries.
 */
SimulationSpec read_simulation_spec(const fs::path& path);

Json read_json(const fs::path& path);
void write_json(const Json& j, const fs::path& path);

} // namespace axsym

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace axsym {

/**
 * Regular latitude/longitude grid on the sphere.
 *
 * Longitudes are always 360*n/N degrees so that every latitude circle is
 * a cyclic group and covariances along it are circulant. Latitudes only
 * need to be strictly increasing and away from the poles.
 */
class GridGeometry {
public:
    GridGeometry() = default;
    GridGeometry(std::vector<double> latitudes, std::size_t n_lon,
                 std::vector<std::uint8_t> land_mask);

    // Ocean everywhere.
    static GridGeometry uniform_ocean(std::vector<double> latitudes, std::size_t n_lon);

    std::size_t n_lat() const { return latitudes_.size(); }
    std::size_t n_lon() const { return longitudes_.size(); }
    std::size_t n_pixels() const { return latitudes_.size() * longitudes_.size(); }

    const std::vector<double>& latitudes() const { return latitudes_; }
    const std::vector<double>& longitudes() const { return longitudes_; }
    const std::vector<std::uint8_t>& land_mask() const { return land_mask_; }

    // Pixel index inside one time slice: latitude fastest.
    std::size_t pixel(std::size_t n, std::size_t m) const { return n * n_lat() + m; }
    bool is_land(std::size_t n, std::size_t m) const { return land_mask_[pixel(n, m)] != 0; }

    // Single-band geometry (mask cleared), used by per-band fits.
    GridGeometry band(std::size_t m) const;

    bool operator==(const GridGeometry&) const = default;

private:
    std::vector<double> latitudes_;
    std::vector<double> longitudes_;
    std::vector<std::uint8_t> land_mask_;
};

// Exact longitude formula used for validation: 360*n/N.
double regular_longitude(std::size_t n, std::size_t n_lon);

/**
 * R replicated realizations of a T x N x M field under one scenario.
 *
 * Flattened index is ((r*T + t)*N + n)*M + m. The CO2 series is either
 * empty (unknown forcing) or at least T long; its last T entries line up
 * with model years 1..T and anything earlier is pre-run history.
 */
struct EnsembleTensor {
    GridGeometry geometry;
    std::size_t n_time = 0;
    std::size_t n_real = 0;
    std::vector<double> values;
    std::vector<double> co2;
    std::string scenario_id;
    std::string units = "K";

    EnsembleTensor() = default;
    EnsembleTensor(GridGeometry g, std::size_t t, std::size_t r);

    std::size_t field_size() const { return geometry.n_pixels(); }
    std::size_t realization_size() const { return n_time * field_size(); }

    std::size_t index(std::size_t r, std::size_t t, std::size_t n, std::size_t m) const {
        return ((r * n_time + t) * geometry.n_lon() + n) * geometry.n_lat() + m;
    }
    double& at(std::size_t r, std::size_t t, std::size_t n, std::size_t m) {
        return values[index(r, t, n, m)];
    }
    double at(std::size_t r, std::size_t t, std::size_t n, std::size_t m) const {
        return values[index(r, t, n, m)];
    }

    std::span<double> field(std::size_t r, std::size_t t) {
        return {values.data() + (r * n_time + t) * field_size(), field_size()};
    }
    std::span<const double> field(std::size_t r, std::size_t t) const {
        return {values.data() + (r * n_time + t) * field_size(), field_size()};
    }
    std::span<const double> realization(std::size_t r) const {
        return {values.data() + r * realization_size(), realization_size()};
    }

    // Throws DataError when shape, finiteness or co2 length is off.
    void validate() const;
};

/**
 * Pixel -> region assignment for the long-term mean coefficient.
 * Region ids are 1-based and every region must own at least one pixel.
 */
class RegionMap {
public:
    RegionMap() = default;
    RegionMap(std::size_t n_lat, std::size_t n_lon, std::vector<int> region_ids);

    // Rectangular blocks: lat_blocks x lon_blocks, clipped to the grid size.
    static RegionMap blocks(const GridGeometry& g, std::size_t lat_blocks = 6,
                            std::size_t lon_blocks = 8);

    std::size_t n_regions() const { return n_regions_; }
    std::size_t n_lat() const { return n_lat_; }
    std::size_t n_lon() const { return n_lon_; }
    // 0-based region of a canonical pixel index.
    std::size_t region_of(std::size_t pixel) const {
        return static_cast<std::size_t>(ids_[pixel] - 1);
    }
    const std::vector<int>& ids() const { return ids_; }

    void check_matches(const GridGeometry& g) const;

    bool operator==(const RegionMap&) const = default;

private:
    std::size_t n_lat_ = 0;
    std::size_t n_lon_ = 0;
    std::size_t n_regions_ = 0;
    std::vector<int> ids_;
};

} // namespace axsym

#include "axsym/grid.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "axsym/error.hpp"

namespace axsym {

double regular_longitude(std::size_t n, std::size_t n_lon) {
    return 360.0 * static_cast<double>(n) / static_cast<double>(n_lon);
}

GridGeometry::GridGeometry(std::vector<double> latitudes, std::size_t n_lon,
                           std::vector<std::uint8_t> land_mask)
    : latitudes_(std::move(latitudes)), land_mask_(std::move(land_mask)) {
    if (latitudes_.empty()) throw_data("geometry: need at least one latitude band");
    if (n_lon < 2) throw_data("geometry: need at least two longitudes");
    for (std::size_t m = 0; m < latitudes_.size(); ++m) {
        const double lat = latitudes_[m];
        if (!std::isfinite(lat) || std::abs(lat) >= 90.0)
            throw_data("geometry: latitude " + std::to_string(lat) + " outside (-90, 90)");
        if (m > 0 && !(lat > latitudes_[m - 1]))
            throw_data("geometry: latitudes must be strictly increasing");
    }
    longitudes_.resize(n_lon);
    for (std::size_t n = 0; n < n_lon; ++n) longitudes_[n] = regular_longitude(n, n_lon);
    if (land_mask_.size() != latitudes_.size() * n_lon)
        throw_data("geometry: land mask has " + std::to_string(land_mask_.size()) +
                   " entries, expected " + std::to_string(latitudes_.size() * n_lon));
    for (auto& q : land_mask_) {
        if (q > 1) throw_data("geometry: land mask entries must be 0 or 1");
    }
}

GridGeometry GridGeometry::uniform_ocean(std::vector<double> latitudes, std::size_t n_lon) {
    const std::size_t count = latitudes.size() * n_lon;
    return GridGeometry(std::move(latitudes), n_lon, std::vector<std::uint8_t>(count, 0));
}

GridGeometry GridGeometry::band(std::size_t m) const {
    return uniform_ocean({latitudes_.at(m)}, n_lon());
}

EnsembleTensor::EnsembleTensor(GridGeometry g, std::size_t t, std::size_t r)
    : geometry(std::move(g)), n_time(t), n_real(r), values(t * r * geometry.n_pixels(), 0.0) {}

void EnsembleTensor::validate() const {
    if (geometry.n_lat() == 0 || geometry.n_lon() == 0 || n_time == 0 || n_real == 0)
        throw_data("tensor: zero dimension");
    if (values.size() != n_real * n_time * geometry.n_pixels())
        throw_data("tensor: payload length mismatch");
    for (double v : values) {
        if (!std::isfinite(v)) throw_data("tensor: non-finite value");
    }
    if (!co2.empty()) {
        if (co2.size() < n_time)
            throw_data("tensor: co2 series shorter than the number of years");
        for (double c : co2) {
            if (!(c > 0.0) || !std::isfinite(c)) throw_data("tensor: co2 values must be positive");
        }
    }
}

RegionMap::RegionMap(std::size_t n_lat, std::size_t n_lon, std::vector<int> region_ids)
    : n_lat_(n_lat), n_lon_(n_lon), ids_(std::move(region_ids)) {
    if (ids_.size() != n_lat * n_lon)
        throw_data("regions: expected " + std::to_string(n_lat * n_lon) + " pixels, got " +
                   std::to_string(ids_.size()));
    int max_id = 0;
    for (int id : ids_) {
        if (id < 1) throw_data("regions: region ids are 1-based; pixel left unassigned");
        max_id = std::max(max_id, id);
    }
    std::vector<bool> seen(static_cast<std::size_t>(max_id), false);
    for (int id : ids_) seen[static_cast<std::size_t>(id - 1)] = true;
    for (std::size_t k = 0; k < seen.size(); ++k) {
        if (!seen[k]) throw_data("regions: region " + std::to_string(k + 1) + " is empty");
    }
    n_regions_ = static_cast<std::size_t>(max_id);
}

RegionMap RegionMap::blocks(const GridGeometry& g, std::size_t lat_blocks,
                            std::size_t lon_blocks) {
    const std::size_t M = g.n_lat();
    const std::size_t N = g.n_lon();
    lat_blocks = std::clamp<std::size_t>(lat_blocks, 1, M);
    lon_blocks = std::clamp<std::size_t>(lon_blocks, 1, N);
    std::vector<int> ids(M * N);
    for (std::size_t n = 0; n < N; ++n) {
        for (std::size_t m = 0; m < M; ++m) {
            const std::size_t lb = m * lat_blocks / M;
            const std::size_t ob = n * lon_blocks / N;
            ids[g.pixel(n, m)] = static_cast<int>(lb * lon_blocks + ob + 1);
        }
    }
    return RegionMap(M, N, std::move(ids));
}

void RegionMap::check_matches(const GridGeometry& g) const {
    if (n_lat_ != g.n_lat() || n_lon_ != g.n_lon())
        throw_data("regions: map is " + std::to_string(n_lat_) + "x" + std::to_string(n_lon_) +
                   " but grid is " + std::to_string(g.n_lat()) + "x" + std::to_string(g.n_lon()));
}

} // namespace axsym

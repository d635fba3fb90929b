#include "axsym/params.hpp"

#include <cmath>
#include <string>

#include "axsym/error.hpp"
#include "axsym/grid.hpp"

namespace axsym {

namespace {
bool positive_finite(double v) { return std::isfinite(v) && v > 0.0; }
} // namespace

void BandSpectrum::validate() const {
    if (!positive_finite(phi)) throw_data("band spectrum: phi must be > 0");
    if (!(std::isfinite(alpha) && alpha >= kAlphaMin))
        throw_data("band spectrum: alpha must be >= " + std::to_string(kAlphaMin));
    if (!(positive_finite(nu) && nu <= kNuMax))
        throw_data("band spectrum: nu must lie in (0, " + std::to_string(kNuMax) + "]");
}

void CoherenceParams::validate() const {
    if (!(std::isfinite(xi) && xi > 0.0 && xi < 1.0))
        throw_data("coherence: xi must lie strictly inside (0, 1), got " + std::to_string(xi));
    if (!positive_finite(tau)) throw_data("coherence: tau must be > 0, got " + std::to_string(tau));
}

void ARCoefficients::validate() const {
    for (double p : {phi_ocean, phi_land}) {
        if (!(std::isfinite(p) && std::abs(p) < 1.0))
            throw_data("ar: coefficients must lie strictly inside (-1, 1), got " + std::to_string(p));
    }
}

std::vector<double> ARCoefficients::expand(const GridGeometry& g) const {
    std::vector<double> out(g.n_pixels());
    const auto& mask = g.land_mask();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = for_mask(mask[i]);
    return out;
}

void CovarianceParams::validate() const {
    for (const auto& b : bands) b.validate();
    coherence.validate();
    ar.validate();
}

void CovarianceParams::validate_for(const GridGeometry& g) const {
    if (bands.size() != g.n_lat())
        throw_data("params: " + std::to_string(bands.size()) + " band triples for a grid with " +
                   std::to_string(g.n_lat()) + " latitudes");
    validate();
}

} // namespace axsym

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace axsym {

class GridGeometry;

// Lower bound on the inverse range parameter; keeps the c = 0 spectrum finite.
inline constexpr double kAlphaMin = 1e-6;
// Upper bound on the smoothness exponent; larger values underflow at high wavenumbers.
inline constexpr double kNuMax = 20.0;

/// Circular Matern spectrum of one latitude band.
struct BandSpectrum {
    double phi = 1.0;   // overall level of variation
    double alpha = 1.0; // inverse range
    double nu = 1.0;    // decay rate at high wavenumbers

    void validate() const;
    bool operator==(const BandSpectrum&) const = default;
};

/// Cross-band coherence (xi / (1 + 4 sin^2(c pi / N))^tau)^|dL|, dL in degrees.
struct CoherenceParams {
    double xi = 0.9;
    double tau = 0.2;

    void validate() const;
    bool operator==(const CoherenceParams&) const = default;
};

/// Land/ocean AR(1) coefficients.
struct ARCoefficients {
    double phi_ocean = 0.0; // phi_0
    double phi_land = 0.0;  // phi_1

    void validate() const;
    double for_mask(std::uint8_t land) const { return land ? phi_land : phi_ocean; }
    // Per-pixel coefficient vector in canonical (latitude fastest) order.
    std::vector<double> expand(const GridGeometry& g) const;
    bool operator==(const ARCoefficients&) const = default;
};

struct CovarianceParams {
    std::vector<BandSpectrum> bands;
    CoherenceParams coherence;
    ARCoefficients ar;

    void validate() const;
    // Additionally requires exactly one band triple per latitude of g.
    void validate_for(const GridGeometry& g) const;
    bool operator==(const CovarianceParams&) const = default;
};

} // namespace axsym

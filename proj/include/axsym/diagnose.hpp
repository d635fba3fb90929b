#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "axsym/grid.hpp"
#include "axsym/params.hpp"

namespace axsym {

struct ContrastRow {
    double latitude = 0.0;
    std::string name; // east_west, north_south, band_variance, laplacian
    double empirical = 0.0;
    double model = 0.0;
};

/**
 * Per-latitude variances of four contrasts of the normalized whitened
 * contrasts sqrt(R/(R-1)) H, next to their closed-form model values:
 *   east_west      H(m, n) - H(m, n-1)
 *   north_south    H(m, n) - H(m-1, n)                      (m >= 1)
 *   band_variance  H(m, n)
 *   laplacian      4H(m,n) - H(m,n-1) - H(m,n+1) - H(m-1,n) - H(m+1,n)  (0 < m < M-1)
 * Longitude wraps around; latitude does not.
 */
struct ContrastReport {
    std::vector<ContrastRow> rows;
};

ContrastReport contrast_variances(const EnsembleTensor& e, const CovarianceParams& p);

/// Model side only, from the synthesized lag covariances.
ContrastReport model_contrast_variances(const GridGeometry& g, const CovarianceParams& p);

enum class PeriodogramKind {
    per_time,      // mean over t, r of |X_c(H_t)|^2 / N; expectation f(c)
    time_averaged, // mean over r of |X_c(mean_t H_t)|^2 / N; expectation f(c) / T
};

/// Half-spectrum periodogram (c = 0..N/2) of band m of the normalized
/// whitened contrasts.
std::vector<double> band_periodogram(const EnsembleTensor& e, std::size_t m,
                                     const ARCoefficients& ar,
                                     PeriodogramKind kind = PeriodogramKind::per_time);

} // namespace axsym

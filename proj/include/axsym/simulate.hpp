#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include "axsym/grid.hpp"
#include "axsym/mean_model.hpp"
#include "axsym/params.hpp"
#include "axsym/random.hpp"
#include "axsym/spectral.hpp"

namespace axsym {

/**
 * Everything needed to draw an ensemble. Noise is in the units of the
 * covariance parameters; when a mean model and forcing are given, the
 * destandardized mean trajectory is added.
 */
struct SimulationSpec {
    GridGeometry geometry;
    CovarianceParams params;
    std::size_t n_time = 1;
    std::size_t n_real = 1;
    std::uint64_t seed = 0;
    std::optional<MeanModelParams> mean;
    std::optional<ForcingSeries> forcing;
    std::string scenario_id = "simulated";

    void validate() const;
};

// Stream id of the innovation at (realization r, year t): r * T + t.
inline std::uint64_t innovation_stream(std::size_t r, std::size_t t, std::size_t n_time) {
    return static_cast<std::uint64_t>(r) * n_time + t;
}

/**
 * One draw from N(0, Sigma_s) written to `field` (N x M). Wavenumbers 0 and
 * N/2 get real coefficients sqrt(N) L z; the others sqrt(N/2) L (a + i b).
 * When imag_residue is non-null the full conjugate-symmetric spectrum is
 * also inverted with a complex FFT and the largest |Im| is stored there.
 */
void sample_spatial(const SpectralBlocks& blocks, NormalStream& rng, std::span<double> field,
                    double* imag_residue = nullptr);

/// Draws the ensemble; (spec, seed) fix the output bytes for any worker count.
EnsembleTensor sample(const SimulationSpec& spec, int workers = 1);

} // namespace axsym

#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "axsym/grid.hpp"
#include "axsym/params.hpp"

namespace axsym {

using Complex = std::complex<double>;

/// f_L(c) = phi / (alpha^2 + 4 sin^2(c pi / N))^(nu + 1/2).
double band_spectrum(const BandSpectrum& p, std::size_t c, std::size_t n_lon);

/// (xi / (1 + 4 sin^2(c pi / N))^tau)^dlat, dlat = |L - L'| in degrees.
double coherence(const CoherenceParams& p, double dlat, std::size_t c, std::size_t n_lon);

// Number of half-spectrum wavenumbers 0..floor(N/2).
inline std::size_t half_size(std::size_t n_lon) { return n_lon / 2 + 1; }

// How many of the N wavenumbers a half-spectrum index stands for (1 or 2).
inline int multiplicity(std::size_t c, std::size_t n_lon) {
    return (c == 0 || 2 * c == n_lon) ? 1 : 2;
}

/**
 * Cross-latitude spectral blocks B_c, one M x M real symmetric matrix per
 * wavenumber, together with their Cholesky factors.
 *
 * Only c = 0..N/2 are stored: every block depends on c through
 * sin^2(c pi / N), so B_c = B_{N-c}. The spatial covariance of one time
 * slice is F^{-1} diag(B_c) F in the unnormalized DFT basis
 * X_c = sum_n x_n exp(-2 pi i c n / N).
 */
class SpectralBlocks {
public:
    // Throws NumericalError naming the wavenumber whose block is not PD.
    static SpectralBlocks build(const CovarianceParams& params, const GridGeometry& geom,
                                int workers = 1);

    std::size_t n_lat() const { return n_lat_; }
    std::size_t n_lon() const { return n_lon_; }

    // Any wavenumber 0..N-1.
    const Eigen::MatrixXd& block(std::size_t c) const { return blocks_[fold(c)]; }
    const Eigen::MatrixXd& chol(std::size_t c) const { return chol_[fold(c)]; }
    double logdet(std::size_t c) const { return logdet_[fold(c)]; }
    // log det of the NM x NM spatial covariance: sum of logdet over all N blocks.
    double logdet_total() const;

    std::size_t fold(std::size_t c) const { return c <= n_lon_ / 2 ? c : n_lon_ - c; }

private:
    std::size_t n_lat_ = 0;
    std::size_t n_lon_ = 0;
    std::vector<Eigen::MatrixXd> blocks_;
    std::vector<Eigen::MatrixXd> chol_;
    std::vector<double> logdet_;
};

inline SpectralBlocks build_blocks(const CovarianceParams& params, const GridGeometry& geom,
                                   int workers = 1) {
    return SpectralBlocks::build(params, geom, workers);
}

/**
 * Real DFT helpers along longitude for one N x M time slice (latitude
 * fastest). Spectra are M x (N/2 + 1): row m is the half spectrum of band m.
 */
void forward_field(std::span<const double> field, std::size_t n_lon, std::size_t n_lat,
                   Eigen::MatrixXcd& spectrum);
void inverse_field(const Eigen::MatrixXcd& spectrum, std::size_t n_lon,
                   std::span<double> field);

// x' Sigma_s^{-1} x for one time slice.
double quadratic_form(const SpectralBlocks& blocks, std::span<const double> field);
// Sigma_s^{-1} x.
std::vector<double> solve_spatial(const SpectralBlocks& blocks, std::span<const double> field);
// Sigma_s x.
std::vector<double> multiply_spatial(const SpectralBlocks& blocks, std::span<const double> field);

/// Cross-covariances K(L_m, L_m', lag) for lag = 0..N-1, each M x M.
struct LagCovariances {
    std::vector<Eigen::MatrixXd> lags;
    double max_imag_residue = 0.0; // largest |Im| / max |Re| before truncation
};
LagCovariances synthesize_lags(const SpectralBlocks& blocks);

/// Dense NM x NM spatial covariance in canonical pixel order.
Eigen::MatrixXd synthesize_covariance(const SpectralBlocks& blocks);

} // namespace axsym

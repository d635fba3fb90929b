#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "axsym/grid.hpp"
#include "axsym/params.hpp"
#include "axsym/spectral.hpp"

namespace axsym {

// Returned by objective wrappers instead of NaN/-inf so optimizers can back off.
inline constexpr double kLoglikSentinel = -1e300;

// Size guard for the dense space-time oracle (MNT) and the dense spatial route (MN).
inline constexpr std::size_t kDenseLimit = 4096;

/**
 * Realization contrasts D_r = T_r - mean_r(T_r), same layout as the tensor.
 * The restricted mean estimate is the realization average.
 */
struct ContrastSet {
    GridGeometry geometry;
    std::size_t n_time = 0;
    std::size_t n_real = 0;
    std::vector<double> values; // R x T x N x M
    std::vector<double> mean;   // T x N x M
    bool degenerate = false;    // every contrast is exactly zero

    std::size_t field_size() const { return geometry.n_pixels(); }
    std::size_t realization_size() const { return n_time * field_size(); }
    std::span<const double> realization(std::size_t r) const {
        return {values.data() + r * realization_size(), realization_size()};
    }
    // N M T (R - 1): the number of free contrasts.
    double contrast_count() const {
        return static_cast<double>(field_size() * n_time * (n_real - 1));
    }
    // Sum over realizations, max |.| over pixels; zero up to round-off.
    double max_abs_sum() const;
};

ContrastSet compute_contrasts(const EnsembleTensor& e);

// Contrasts of a single latitude band, as a one-band ocean-only problem.
ContrastSet band_contrasts(const ContrastSet& d, std::size_t m);

// Constant terms of the restricted loglikelihood that do not involve Sigma.
double reml_constant(const ContrastSet& d);

/// Restricted loglikelihood via whitening, longitude FFTs and per-wavenumber
/// Cholesky solves. Throws NumericalError when a block is not PD.
double reml_loglik_fft(const ContrastSet& d, const CovarianceParams& p, int workers = 1);

/// Literal evaluation with the dense TNM x TNM space-time covariance.
/// Throws DataError when MNT exceeds kDenseLimit.
double reml_loglik_dense(const ContrastSet& d, const CovarianceParams& p);

/// Whitens in time, then uses a dense NM x NM Cholesky of Sigma_s.
/// Throws DataError when MN exceeds kDenseLimit.
double reml_loglik_whitened_dense(const ContrastSet& d, const CovarianceParams& p);

/// Space-time covariance of one realization: AR(1) per pixel with
/// eps_1 ~ N(0, Sigma_s), innovations ~ N(0, Sigma_s).
Eigen::MatrixXd space_time_covariance(const Eigen::MatrixXd& spatial,
                                      std::span<const double> phi, std::size_t n_time);

/// Baseline with Sigma_s = variance * I.
double reml_loglik_ind(const ContrastSet& d, double variance, const ARCoefficients& ar);
/// Closed-form maximizer of reml_loglik_ind over the variance.
double ind_variance_mle(const ContrastSet& d, const ARCoefficients& ar);

struct IndFit {
    double variance = 0.0;
    ARCoefficients ar;
    double loglik = kLoglikSentinel;
    std::size_t evaluations = 0;
    bool converged = false;
    bool degenerate = false;
};
/// Maximizes the baseline over (variance, phi_0, phi_1).
IndFit fit_ind(const ContrastSet& d);

/**
 * Fast restricted-loglikelihood evaluator for repeated use at many
 * parameter points on the same contrasts.
 *
 * The longitude spectra of D_t, D_{t-1} and Q o D_{t-1} (Q = land mask) are
 * reduced once to per-wavenumber second-moment matrices. Since
 * H_t = D_t - phi_0 D_{t-1} - (phi_1 - phi_0) Q o D_{t-1}, the quadratic
 * form at any AR pair is a quadratic combination of those moments and each
 * evaluation costs O(M^3 N) regardless of T and R.
 */
class SpectralRemlObjective {
public:
    explicit SpectralRemlObjective(const ContrastSet& d, int workers = 1);

    // Throws NumericalError when the blocks are not PD.
    double evaluate(const CovarianceParams& p) const;
    double evaluate(const SpectralBlocks& blocks, const ARCoefficients& ar) const;

    const GridGeometry& geometry() const { return geometry_; }
    double contrast_count() const { return contrast_count_; }
    bool degenerate() const { return degenerate_; }

private:
    struct Moments {
        Eigen::MatrixXd aa, ab, bb, ae, be, ee; // symmetrized real parts
    };
    GridGeometry geometry_;
    std::size_t n_time_ = 0;
    std::size_t n_real_ = 0;
    double constant_ = 0.0;
    double contrast_count_ = 0.0;
    bool degenerate_ = false;
    bool has_land_ = false;
    std::vector<Moments> moments_;
};

} // namespace axsym

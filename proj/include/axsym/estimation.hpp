#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "axsym/grid.hpp"
#include "axsym/optimize.hpp"
#include "axsym/params.hpp"
#include "axsym/reml.hpp"

namespace axsym {

struct ParameterEstimate {
    std::string name;
    double estimate = 0.0;
    double sd = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
};

// estimate +/- 1.96 sd.
ParameterEstimate make_estimate(std::string name, double estimate, double sd);

/// Stage-1 result for one latitude band. Standard deviations are conditional
/// on the provisional band AR coefficient.
struct BandFit {
    std::size_t band = 0;
    double latitude = 0.0;
    BandSpectrum spectrum;
    double ar_provisional = 0.0;
    BandSpectrum start;
    double start_ar = 0.0;
    double loglik = kLoglikSentinel;
    std::size_t evaluations = 0;
    bool converged = false;
    bool boundary = false; // estimate sits near a transform limit (flat or capped spectrum)
    bool failed = false;
    std::string error;
    std::array<double, 3> sd{}; // phi, alpha, nu

    std::vector<ParameterEstimate> table() const;
};

struct BandFitOptions {
    NelderMeadOptions optimizer;
    bool compute_sd = true;
    double hessian_step = 1e-3;
};

/// Method-of-moments starting point from the band periodogram:
/// (spectrum, provisional AR).
std::pair<BandSpectrum, double> band_start_values(const ContrastSet& band);

/// Maximizes the single-band restricted loglikelihood over
/// (log phi, log(alpha - alpha_min), log nu, atanh phi_band).
BandFit fit_band(const ContrastSet& d, std::size_t m, const BandFitOptions& options = {});

/// fit_band for every latitude; bands are independent so any worker count
/// gives identical results. Failures are recorded per band, not thrown.
std::vector<BandFit> fit_all_bands(const ContrastSet& d, const BandFitOptions& options = {},
                                   int workers = 1);

struct GlobalFitOptions {
    NelderMeadOptions optimizer;
    CoherenceParams start_coherence{0.9, 0.2};
    ARCoefficients start_ar{0.1, 0.1};
    bool compute_sd = true;
    double hessian_step = 1e-3;
    int workers = 1;
};

struct FitReport {
    CovarianceParams params;
    double loglik = kLoglikSentinel;
    double loglik_per_contrast = 0.0;
    double start_loglik = kLoglikSentinel;
    std::vector<ParameterEstimate> table; // xi, tau, phi0, phi1
    std::size_t evaluations = 0;
    bool converged = false;
    bool sd_warning = false; // Hessian not negative definite; sds are NaN
    std::vector<std::pair<std::string, double>> timings;
};

/// Stage 2: maximizes the restricted loglikelihood over (xi, tau, phi_0,
/// phi_1) with band spectra frozen. Transforms: logit xi, log tau, atanh phi.
FitReport fit_global(const ContrastSet& d, const std::vector<BandSpectrum>& bands,
                     const GlobalFitOptions& options = {});

/// Asymptotic sds of (xi, tau, phi_0, phi_1) at p from the central-difference
/// Hessian in the transformed space, back-transformed by the delta method.
std::array<double, 4> coherence_asymptotic_sd(const SpectralRemlObjective& objective,
                                              const CovarianceParams& p, double step = 1e-3);

std::vector<BandSpectrum> spectra_of(const std::vector<BandFit>& fits);

} // namespace axsym

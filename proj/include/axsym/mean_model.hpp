#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "axsym/grid.hpp"
#include "axsym/params.hpp"
#include "axsym/spectral.hpp"

namespace axsym {

/// Per-pixel control-run mean and standard deviation (denominator n - 1
/// over all control years and realizations).
struct Standardization {
    std::vector<double> mean;
    std::vector<double> sd;

    bool empty() const { return mean.empty(); }
    bool operator==(const Standardization&) const = default;
};

Standardization control_statistics(const EnsembleTensor& control);
EnsembleTensor standardize(const EnsembleTensor& e, const Standardization& s);
EnsembleTensor standardize(const EnsembleTensor& e, const EnsembleTensor& control);
EnsembleTensor destandardize(const EnsembleTensor& e, const Standardization& s);

// Smallest K with lambda^K < 1e-10.
std::size_t lag_truncation(double lambda);
/// w(i) = lambda^i (1 - lambda), i = 0..K-1.
std::vector<double> lag_weights(double lambda, std::size_t K);
std::vector<double> lag_weights(double lambda);

/**
 * CO2 concentrations (ppm) with optional pre-run history: the last n_years
 * entries are model years 1..n_years. Years before the record take the
 * earliest value.
 */
class ForcingSeries {
public:
    ForcingSeries() = default;
    ForcingSeries(std::vector<double> co2, std::size_t n_years);
    // The whole series is model years.
    explicit ForcingSeries(std::vector<double> co2);

    const std::vector<double>& co2() const { return co2_; }
    std::size_t n_years() const { return n_years_; }
    std::size_t history() const { return co2_.size() - n_years_; }
    // Natural log of CO2 at model year t (1-based; t <= 0 reaches into history).
    double log_co2(long t) const;

private:
    std::vector<double> co2_;
    std::vector<double> log_;
    std::size_t n_years_ = 0;
};

struct DesignRow {
    double s = 0.0; // (log c_t + log c_{t-1}) / 2
    double g = 0.0; // sum_{i>=2} w(i-2) log c_{t-i}
};
DesignRow design_row(const ForcingSeries& f, std::size_t t, double lambda);
// Rows for t = 1..n_years.
std::vector<DesignRow> design_rows(const ForcingSeries& f, double lambda);

/// Fitted mean model in standardized units plus the standardization fields.
struct MeanModelParams {
    GridGeometry geometry;
    RegionMap regions;
    double lambda = 0.95;
    double lambda_sd = 0.0;
    std::vector<double> beta0, beta1; // per pixel
    std::vector<double> beta2;        // per region
    std::vector<double> beta0_sd, beta1_sd, beta2_sd;
    bool sd_approximate = false; // pixel sds from the Kronecker approximation
    double loglik = 0.0;         // profile loglikelihood at lambda
    Standardization standardization;

    // Throws DataError on inconsistent sizes or lambda outside (0, 1).
    void validate() const;
};

struct GlsSolution {
    std::vector<double> beta0, beta1, beta2;
    std::vector<double> beta0_sd, beta1_sd, beta2_sd;
    bool sd_approximate = false;
    double rss = 0.0;
    double loglik = 0.0;
    std::size_t cg_iterations = 0;
};

struct MeanFitOptions {
    double lambda_lo = 0.01;
    double lambda_hi = 0.999;
    double lambda_tol = 1e-4;
    double cg_tol = 1e-13;          // relative residual of every PCG solve
    std::size_t cg_max_iter = 1000;
    std::size_t sd_pixel_limit = 1024; // exact pixel sds up to this many pixels
    int workers = 1;
};

/**
 * Generalized least squares for the mean of standardized data
 *   Y_t = beta0 + beta1 s_t + beta2[region] g_t + D^{-1} eps_t,
 * eps the land/ocean AR(1) process with spatial covariance Sigma_s and
 * D = diag(noise_scale). The realization average is the response, so the
 * whitened weight is W = R D Sigma_s^{-1} D.
 */
class MeanProblem {
public:
    MeanProblem(const EnsembleTensor& standardized, const ForcingSeries& forcing,
                const RegionMap& regions, const CovarianceParams& cov,
                std::span<const double> noise_scale = {}, const MeanFitOptions& options = {});

    // Profiled linear coefficients at lambda. Throws DataError naming the
    // collinear design columns.
    GlsSolution solve(double lambda, bool with_sd = false) const;
    double profile_loglik(double lambda) const { return solve(lambda).loglik; }

    std::size_t n_pixels() const { return P_; }
    std::size_t n_time() const { return T_; }

private:
    std::vector<double> apply_w(std::span<const double> v) const;
    std::vector<double> apply_w_inverse(std::span<const double> v) const;

    GridGeometry geometry_;
    RegionMap regions_;
    ForcingSeries forcing_;
    MeanFitOptions options_;
    SpectralBlocks blocks_;
    std::size_t P_ = 0;
    std::size_t T_ = 0;
    double R_ = 1.0;
    std::vector<double> phi_;
    std::vector<double> scale_;
    std::vector<double> h_; // whitened realization average, T x P
    double logdet_ = 0.0;   // log det of the standardized-noise spatial covariance
    std::vector<double> cov_diag_; // diagonal of D^{-1} Sigma_s D^{-1}
};

/// Golden-section over lambda, then profiled GLS with sds at the optimum.
/// The standardization fields of the result are left empty.
MeanModelParams fit_mean(const EnsembleTensor& standardized, const ForcingSeries& forcing,
                         const RegionMap& regions, const CovarianceParams& cov,
                         std::span<const double> noise_scale = {},
                         const MeanFitOptions& options = {});

/// Standardized-unit mean trajectory (T x P) for a forcing series.
std::vector<double> mean_trajectory(const MeanModelParams& p, const ForcingSeries& f);

/// Destandardized mean as a one-realization tensor; regions must match p.
EnsembleTensor emulate_mean(const MeanModelParams& p, const ForcingSeries& f,
                            const RegionMap& regions);

/// Per-pixel lack-of-fit index of an emulated mean (T x P, same units as truth).
std::vector<double> lack_of_fit_index(const EnsembleTensor& truth,
                                      std::span<const double> emulated);

} // namespace axsym

#include "axsym/estimation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "axsym/error.hpp"
#include "axsym/parallel.hpp"
#include "axsym/spectral.hpp"

namespace axsym {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kArLimit = 0.9;

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

double logit(double p) { return std::log(p / (1.0 - p)); }
double expit(double u) { return 1.0 / (1.0 + std::exp(-u)); }

struct BandTransform {
    static BandSpectrum spectrum(std::span<const double> u) {
        BandSpectrum s;
        s.phi = std::exp(u[0]);
        s.alpha = kAlphaMin + std::exp(u[1]);
        s.nu = std::min(std::exp(u[2]), kNuMax);
        return s;
    }
    static std::vector<double> forward(const BandSpectrum& s, double ar) {
        return {std::log(s.phi), std::log(std::max(s.alpha - kAlphaMin, 1e-12)),
                std::log(std::min(s.nu, kNuMax)), std::atanh(std::clamp(ar, -0.99, 0.99))};
    }
};

double band_ar(const ContrastSet& band) {
    const std::size_t N = band.geometry.n_lon();
    double num = 0.0;
    double den = 0.0;
    for (std::size_t r = 0; r < band.n_real; ++r) {
        const auto x = band.realization(r);
        double prev = 0.0;
        for (std::size_t t = 0; t < band.n_time; ++t) {
            double cur = 0.0;
            for (std::size_t n = 0; n < N; ++n) cur += x[t * N + n];
            cur /= static_cast<double>(N);
            den += cur * cur;
            if (t > 0) num += cur * prev;
            prev = cur;
        }
    }
    if (den <= 0.0) return 0.0;
    return std::clamp(num / den, -kArLimit, kArLimit);
}

} // namespace

ParameterEstimate make_estimate(std::string name, double estimate, double sd) {
    return {std::move(name), estimate, sd, estimate - 1.96 * sd, estimate + 1.96 * sd};
}

std::vector<ParameterEstimate> BandFit::table() const {
    return {make_estimate("phi", spectrum.phi, sd[0]),
            make_estimate("alpha", spectrum.alpha, sd[1]),
            make_estimate("nu", spectrum.nu, sd[2])};
}

std::pair<BandSpectrum, double> band_start_values(const ContrastSet& band) {
    const std::size_t N = band.geometry.n_lon();
    const std::size_t H = half_size(N);
    const double R = static_cast<double>(band.n_real);
    std::vector<double> pgram(H, 0.0);
    Eigen::MatrixXcd spec;
    for (std::size_t r = 0; r < band.n_real; ++r) {
        const auto x = band.realization(r);
        for (std::size_t t = 0; t < band.n_time; ++t) {
            forward_field(x.subspan(t * N, N), N, 1, spec);
            for (std::size_t c = 0; c < H; ++c) pgram[c] += std::norm(spec(0, c));
        }
    }
    const double scale = R / (R - 1.0) / (R * static_cast<double>(band.n_time * N));
    for (auto& p : pgram) p *= scale;

    const double half = 0.5 * pgram[0];
    double ch = static_cast<double>(N) / 2.0;
    for (std::size_t c = 1; c < H; ++c) {
        if (pgram[c] <= half) {
            const double drop = pgram[c - 1] - pgram[c];
            const double frac = drop > 0.0 ? (pgram[c - 1] - half) / drop : 1.0;
            ch = static_cast<double>(c - 1) + std::clamp(frac, 0.0, 1.0);
            break;
        }
    }
    // For nu = 1 the spectrum halves where 4 sin^2 = alpha^2 (2^(2/3) - 1).
    const double s = 2.0 * std::sin(ch * M_PI / static_cast<double>(N));
    BandSpectrum start;
    start.alpha = std::clamp(s / std::sqrt(std::cbrt(4.0) - 1.0), 1e-3, 50.0);
    start.nu = 1.0;
    start.phi = std::max(pgram[0], 1e-12) * std::pow(start.alpha, 3.0);
    return {start, band_ar(band)};
}

BandFit fit_band(const ContrastSet& d, std::size_t m, const BandFitOptions& options) {
    BandFit fit;
    fit.band = m;
    fit.latitude = d.geometry.latitudes().at(m);
    try {
        const ContrastSet band = band_contrasts(d, m);
        if (band.degenerate) {
            fit.failed = true;
            fit.error = "band contrasts are identically zero";
            return fit;
        }
        std::tie(fit.start, fit.start_ar) = band_start_values(band);
        const SpectralRemlObjective objective(band);
        const GridGeometry& g = objective.geometry();

        auto loglik = [&](const BandSpectrum& s, double ar) {
            CovarianceParams p;
            p.bands = {s};
            p.ar = {ar, ar};
            try {
                const double v =
                    objective.evaluate(SpectralBlocks::build(p, g), p.ar);
                return std::isfinite(v) ? v : kLoglikSentinel;
            } catch (const NumericalError&) {
                return kLoglikSentinel;
            }
        };
        const Objective negative = [&](std::span<const double> u) {
            const double v = loglik(BandTransform::spectrum(u), std::tanh(u[3]));
            return v <= kLoglikSentinel ? kInf : -v;
        };

        NelderMeadOptions nm = options.optimizer;
        if (nm.steps.empty()) nm.steps = {0.5, 0.5, 0.5, 0.2};
        const auto result = nelder_mead(negative, BandTransform::forward(fit.start, fit.start_ar), nm);
        if (!std::isfinite(result.value)) {
            fit.failed = true;
            fit.error = "no finite loglikelihood found";
            return fit;
        }
        fit.spectrum = BandTransform::spectrum(result.x);
        fit.ar_provisional = std::tanh(result.x[3]);
        fit.loglik = -result.value;
        fit.evaluations = result.evaluations;
        fit.converged = result.converged;
        // Flat spectra sit on the nu -> 0 / alpha -> inf ridge.
        const std::size_t n_lon = band.geometry.n_lon();
        const double log_range = std::log(band_spectrum(fit.spectrum, 0, n_lon) /
                                          band_spectrum(fit.spectrum, n_lon / 2, n_lon));
        fit.boundary = fit.spectrum.nu < 0.02 || fit.spectrum.nu > 0.99 * kNuMax ||
                       fit.spectrum.alpha < 2.0 * kAlphaMin || fit.spectrum.alpha > 100.0 ||
                       !(log_range >= 0.1);

        fit.sd.fill(std::numeric_limits<double>::quiet_NaN());
        if (options.compute_sd) {
            const double ar = fit.ar_provisional;
            const Objective ll = [&](std::span<const double> u) {
                return loglik(BandTransform::spectrum(u), ar);
            };
            const std::vector<double> u(result.x.begin(), result.x.begin() + 3);
            const Eigen::MatrixXd h = finite_difference_hessian(ll, u, options.hessian_step);
            const std::vector<double> jac = {fit.spectrum.phi, fit.spectrum.alpha - kAlphaMin,
                                             fit.spectrum.nu};
            const auto sd = delta_method_sd(h, jac);
            std::copy(sd.begin(), sd.end(), fit.sd.begin());
        }
    } catch (const Error& e) {
        fit.failed = true;
        fit.error = e.what();
    }
    return fit;
}

std::vector<BandFit> fit_all_bands(const ContrastSet& d, const BandFitOptions& options,
                                   int workers) {
    std::vector<BandFit> fits(d.geometry.n_lat());
    parallel_for(fits.size(), workers, [&](std::size_t m) { fits[m] = fit_band(d, m, options); });
    return fits;
}

std::vector<BandSpectrum> spectra_of(const std::vector<BandFit>& fits) {
    std::vector<BandSpectrum> out;
    out.reserve(fits.size());
    for (const auto& f : fits) {
        if (f.failed) {
            throw_numerical("band " + std::to_string(f.band) + " fit failed: " + f.error);
        }
        out.push_back(f.spectrum);
    }
    return out;
}

namespace {

struct GlobalTransform {
    static void apply(std::span<const double> u, CovarianceParams& p) {
        p.coherence.xi = std::clamp(expit(u[0]), 1e-12, 1.0 - 1e-12);
        p.coherence.tau = std::exp(u[1]);
        p.ar.phi_ocean = std::tanh(u[2]);
        p.ar.phi_land = std::tanh(u[3]);
    }
    static std::vector<double> forward(const CoherenceParams& c, const ARCoefficients& ar) {
        return {logit(c.xi), std::log(c.tau), std::atanh(ar.phi_ocean), std::atanh(ar.phi_land)};
    }
    static std::vector<double> jacobian(const CovarianceParams& p) {
        const double xi = p.coherence.xi;
        return {xi * (1.0 - xi), p.coherence.tau, 1.0 - p.ar.phi_ocean * p.ar.phi_ocean,
                1.0 - p.ar.phi_land * p.ar.phi_land};
    }
};

double safe_evaluate(const SpectralRemlObjective& objective, const CovarianceParams& p,
                     int workers) {
    try {
        const double v =
            objective.evaluate(SpectralBlocks::build(p, objective.geometry(), workers), p.ar);
        return std::isfinite(v) ? v : kLoglikSentinel;
    } catch (const NumericalError&) {
        return kLoglikSentinel;
    } catch (const DataError&) {
        return kLoglikSentinel;
    }
}

} // namespace

std::array<double, 4> coherence_asymptotic_sd(const SpectralRemlObjective& objective,
                                              const CovarianceParams& p, double step) {
    const auto& mask = objective.geometry().land_mask();
    const bool has_land = std::any_of(mask.begin(), mask.end(), [](auto q) { return q != 0; });
    const bool has_ocean = std::any_of(mask.begin(), mask.end(), [](auto q) { return q == 0; });
    const auto full = GlobalTransform::forward(p.coherence, p.ar);
    const auto jac_full = GlobalTransform::jacobian(p);
    // Free coordinates: an AR coefficient with no pixels is not identified.
    std::vector<std::size_t> free = {0, 1};
    if (has_ocean) free.push_back(2);
    if (has_land) free.push_back(3);
    std::vector<double> u;
    std::vector<double> jac;
    for (auto i : free) {
        u.push_back(full[i]);
        jac.push_back(jac_full[i]);
    }
    const Objective ll = [&](std::span<const double> v) {
        std::vector<double> x = full;
        for (std::size_t k = 0; k < free.size(); ++k) x[free[k]] = v[k];
        CovarianceParams q = p;
        GlobalTransform::apply(x, q);
        return safe_evaluate(objective, q, 1);
    };
    const Eigen::MatrixXd h = finite_difference_hessian(ll, u, step);
    const auto sd = delta_method_sd(h, jac);
    std::array<double, 4> out;
    out.fill(std::numeric_limits<double>::quiet_NaN());
    for (std::size_t k = 0; k < free.size(); ++k) out[free[k]] = sd[k];
    return out;
}

FitReport fit_global(const ContrastSet& d, const std::vector<BandSpectrum>& bands,
                     const GlobalFitOptions& options) {
    if (bands.size() != d.geometry.n_lat()) {
        throw_data("expected " + std::to_string(d.geometry.n_lat()) + " band spectra, got " +
                   std::to_string(bands.size()));
    }
    if (d.degenerate) throw_numerical("contrasts are identically zero");
    FitReport report;
    auto start = std::chrono::steady_clock::now();
    const SpectralRemlObjective objective(d, options.workers);
    report.timings.emplace_back("moments", seconds_since(start));

    CovarianceParams base;
    base.bands = bands;
    base.coherence = options.start_coherence;
    base.ar = options.start_ar;
    base.validate_for(d.geometry);
    report.start_loglik = safe_evaluate(objective, base, options.workers);

    const auto& mask = d.geometry.land_mask();
    const bool has_land = std::any_of(mask.begin(), mask.end(), [](auto q) { return q != 0; });
    const bool has_ocean = std::any_of(mask.begin(), mask.end(), [](auto q) { return q == 0; });
    // A coefficient with no pixels is tied to the other one and not optimized.
    const auto full_start = GlobalTransform::forward(base.coherence, base.ar);
    std::vector<double> u0 = {full_start[0], full_start[1]};
    if (has_ocean) u0.push_back(full_start[2]);
    if (has_land) u0.push_back(full_start[3]);
    auto tie = [&](std::span<const double> u) {
        std::vector<double> x = {u[0], u[1], u[2], u[2]};
        if (has_ocean && has_land) x[3] = u[3];
        return x;
    };
    const Objective negative = [&](std::span<const double> u) {
        CovarianceParams p = base;
        GlobalTransform::apply(tie(u), p);
        const double v = safe_evaluate(objective, p, 1);
        return v <= kLoglikSentinel ? kInf : -v;
    };
    NelderMeadOptions nm = options.optimizer;
    if (nm.steps.empty()) nm.steps = {0.5, 0.5, 0.2, 0.2};
    nm.steps.resize(u0.size());
    nm.workers = options.workers;
    start = std::chrono::steady_clock::now();
    const auto result = nelder_mead(negative, u0, nm);
    report.timings.emplace_back("optimize", seconds_since(start));
    if (!std::isfinite(result.value)) {
        throw_numerical("global fit found no finite loglikelihood");
    }
    report.params = base;
    GlobalTransform::apply(tie(result.x), report.params);
    report.loglik = -result.value;
    report.loglik_per_contrast = report.loglik / d.contrast_count();
    report.evaluations = result.evaluations;
    report.converged = result.converged;

    std::array<double, 4> sd;
    sd.fill(std::numeric_limits<double>::quiet_NaN());
    if (options.compute_sd) {
        start = std::chrono::steady_clock::now();
        sd = coherence_asymptotic_sd(objective, report.params, options.hessian_step);
        report.timings.emplace_back("hessian", seconds_since(start));
        report.sd_warning = std::isnan(sd[0]) || std::isnan(sd[1]) ||
                            (has_ocean && std::isnan(sd[2])) || (has_land && std::isnan(sd[3]));
    }
    const auto& p = report.params;
    report.table = {make_estimate("xi", p.coherence.xi, sd[0]),
                    make_estimate("tau", p.coherence.tau, sd[1]),
                    make_estimate("phi0", p.ar.phi_ocean, sd[2]),
                    make_estimate("phi1", p.ar.phi_land, sd[3])};
    return report;
}

} // namespace axsym

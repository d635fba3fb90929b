#include "axsym/reml.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "axsym/error.hpp"
#include "axsym/optimize.hpp"
#include "axsym/parallel.hpp"
#include "axsym/temporal.hpp"

namespace axsym {

namespace {

using LongMatrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;

void check_geometry(const ContrastSet& d, const CovarianceParams& p) {
    p.validate_for(d.geometry);
    if (d.n_real < 2) throw_data("reml: need at least two realizations");
}

double assemble(const ContrastSet& d, double logdet_spatial, long double quad) {
    const double R = static_cast<double>(d.n_real);
    const double T = static_cast<double>(d.n_time);
    return reml_constant(d) - 0.5 * (R - 1.0) * T * logdet_spatial -
           0.5 * static_cast<double>(quad);
}

} // namespace

double ContrastSet::max_abs_sum() const {
    const std::size_t S = realization_size();
    double worst = 0.0;
    for (std::size_t i = 0; i < S; ++i) {
        long double sum = 0.0L;
        for (std::size_t r = 0; r < n_real; ++r) sum += values[r * S + i];
        worst = std::max(worst, std::abs(static_cast<double>(sum)));
    }
    return worst;
}

ContrastSet compute_contrasts(const EnsembleTensor& e) {
    if (e.n_real < 2)
        throw_data("contrasts: need at least two realizations, got " + std::to_string(e.n_real));
    ContrastSet d;
    d.geometry = e.geometry;
    d.n_time = e.n_time;
    d.n_real = e.n_real;
    const std::size_t S = e.realization_size();
    d.mean.assign(S, 0.0);
    for (std::size_t i = 0; i < S; ++i) {
        long double sum = 0.0L;
        for (std::size_t r = 0; r < e.n_real; ++r) sum += e.values[r * S + i];
        d.mean[i] = static_cast<double>(sum / static_cast<long double>(e.n_real));
    }
    d.values.resize(e.values.size());
    bool all_zero = true;
    for (std::size_t r = 0; r < e.n_real; ++r) {
        for (std::size_t i = 0; i < S; ++i) {
            const double v = e.values[r * S + i] - d.mean[i];
            d.values[r * S + i] = v;
            all_zero = all_zero && v == 0.0;
        }
    }
    d.degenerate = all_zero;
    return d;
}

ContrastSet band_contrasts(const ContrastSet& d, std::size_t m) {
    if (m >= d.geometry.n_lat()) throw_data("band index " + std::to_string(m) + " out of range");
    ContrastSet out;
    out.geometry = d.geometry.band(m);
    out.n_time = d.n_time;
    out.n_real = d.n_real;
    const std::size_t N = d.geometry.n_lon();
    const std::size_t M = d.geometry.n_lat();
    out.values.resize(d.n_real * d.n_time * N);
    out.mean.resize(d.n_time * N);
    bool all_zero = true;
    for (std::size_t rt = 0; rt < d.n_real * d.n_time; ++rt) {
        for (std::size_t n = 0; n < N; ++n) {
            const double v = d.values[rt * N * M + n * M + m];
            out.values[rt * N + n] = v;
            all_zero = all_zero && v == 0.0;
        }
    }
    for (std::size_t t = 0; t < d.n_time; ++t)
        for (std::size_t n = 0; n < N; ++n) out.mean[t * N + n] = d.mean[t * N * M + n * M + m];
    out.degenerate = all_zero;
    return out;
}

double reml_constant(const ContrastSet& d) {
    const double R = static_cast<double>(d.n_real);
    const double TNM = static_cast<double>(d.n_time * d.field_size());
    return -0.5 * TNM * (R - 1.0) * std::log(2.0 * std::numbers::pi) - 0.5 * TNM * std::log(R);
}

double reml_loglik_fft(const ContrastSet& d, const CovarianceParams& p, int workers) {
    check_geometry(d, p);
    const auto blocks = SpectralBlocks::build(p, d.geometry, workers);
    const auto phi = p.ar.expand(d.geometry);
    const std::size_t M = d.geometry.n_lat();
    const std::size_t N = d.geometry.n_lon();
    const std::size_t H = half_size(N);
    const std::size_t T = d.n_time;
    const std::size_t P = d.field_size();

    std::vector<long double> per_real(d.n_real, 0.0L);
    parallel_for(d.n_real, workers, [&](std::size_t r) {
        const auto h = whiten(d.realization(r), phi);
        std::vector<Eigen::MatrixXcd> spectra(T);
        for (std::size_t t = 0; t < T; ++t)
            forward_field(std::span<const double>(h.data() + t * P, P), N, M, spectra[t]);
        Eigen::MatrixXd rhs(M, 2 * T);
        long double acc = 0.0L;
        for (std::size_t c = 0; c < H; ++c) {
            for (std::size_t t = 0; t < T; ++t) {
                rhs.col(2 * t) = spectra[t].col(c).real();
                rhs.col(2 * t + 1) = spectra[t].col(c).imag();
            }
            blocks.chol(c).triangularView<Eigen::Lower>().solveInPlace(rhs);
            long double col_sum = 0.0L;
            for (Eigen::Index k = 0; k < rhs.cols(); ++k) col_sum += rhs.col(k).squaredNorm();
            acc += multiplicity(c, N) * col_sum;
        }
        per_real[r] = acc / static_cast<long double>(N);
    });
    long double quad = 0.0L;
    for (auto q : per_real) quad += q;
    return assemble(d, blocks.logdet_total(), quad);
}

Eigen::MatrixXd space_time_covariance(const Eigen::MatrixXd& spatial, std::span<const double> phi,
                                      std::size_t n_time) {
    const Eigen::Index P = spatial.rows();
    const Eigen::Map<const Eigen::VectorXd> phiv(phi.data(), static_cast<Eigen::Index>(phi.size()));
    Eigen::MatrixXd sigma(P * static_cast<Eigen::Index>(n_time), P * static_cast<Eigen::Index>(n_time));
    // V_1 = Sigma_s, V_t = Phi V_{t-1} Phi + Sigma_s; cov(eps_t, eps_s) = Phi^{t-s} V_s for t >= s.
    Eigen::MatrixXd v = spatial;
    for (std::size_t s = 0; s < n_time; ++s) {
        if (s > 0) v = phiv.asDiagonal() * v * phiv.asDiagonal() + spatial;
        Eigen::MatrixXd lagged = v;
        for (std::size_t t = s; t < n_time; ++t) {
            if (t > s) lagged = phiv.asDiagonal() * lagged;
            const Eigen::Index ti = static_cast<Eigen::Index>(t) * P;
            const Eigen::Index si = static_cast<Eigen::Index>(s) * P;
            sigma.block(ti, si, P, P) = lagged;
            sigma.block(si, ti, P, P) = lagged.transpose();
        }
    }
    return sigma;
}

double reml_loglik_dense(const ContrastSet& d, const CovarianceParams& p) {
    check_geometry(d, p);
    const std::size_t size = d.realization_size();
    if (size > kDenseLimit)
        throw_data("dense likelihood: MNT = " + std::to_string(size) + " exceeds the limit " +
                   std::to_string(kDenseLimit));
    const auto blocks = SpectralBlocks::build(p, d.geometry);
    const Eigen::MatrixXd sigma =
        space_time_covariance(synthesize_covariance(blocks), p.ar.expand(d.geometry), d.n_time);
    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success) throw_numerical("dense likelihood: covariance is not PD");
    const Eigen::MatrixXd l = llt.matrixL();
    const double logdet = 2.0 * l.diagonal().array().log().sum();
    long double quad = 0.0L;
    for (std::size_t r = 0; r < d.n_real; ++r) {
        const auto dr = d.realization(r);
        Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(dr.data(), static_cast<Eigen::Index>(size));
        l.triangularView<Eigen::Lower>().solveInPlace(x);
        quad += x.squaredNorm();
    }
    const double R = static_cast<double>(d.n_real);
    return reml_constant(d) - 0.5 * (R - 1.0) * logdet - 0.5 * static_cast<double>(quad);
}

double reml_loglik_whitened_dense(const ContrastSet& d, const CovarianceParams& p) {
    check_geometry(d, p);
    const std::size_t P = d.field_size();
    if (P > kDenseLimit)
        throw_data("dense spatial likelihood: MN = " + std::to_string(P) + " exceeds the limit " +
                   std::to_string(kDenseLimit));
    const auto blocks = SpectralBlocks::build(p, d.geometry);
    Eigen::LLT<Eigen::MatrixXd> llt(synthesize_covariance(blocks));
    if (llt.info() != Eigen::Success) throw_numerical("dense spatial likelihood: Sigma_s is not PD");
    const Eigen::MatrixXd l = llt.matrixL();
    const double logdet = 2.0 * l.diagonal().array().log().sum();
    const auto phi = p.ar.expand(d.geometry);
    long double quad = 0.0L;
    for (std::size_t r = 0; r < d.n_real; ++r) {
        const auto h = whiten(d.realization(r), phi);
        Eigen::MatrixXd x = Eigen::Map<const Eigen::MatrixXd>(h.data(), static_cast<Eigen::Index>(P),
                                                              static_cast<Eigen::Index>(d.n_time));
        l.triangularView<Eigen::Lower>().solveInPlace(x);
        for (Eigen::Index k = 0; k < x.cols(); ++k) quad += x.col(k).squaredNorm();
    }
    return assemble(d, logdet, quad);
}

namespace {

long double whitened_sum_squares(const ContrastSet& d, const ARCoefficients& ar) {
    const auto phi = ar.expand(d.geometry);
    long double ss = 0.0L;
    for (std::size_t r = 0; r < d.n_real; ++r) {
        for (double h : whiten(d.realization(r), phi)) ss += static_cast<long double>(h) * h;
    }
    return ss;
}

} // namespace

double reml_loglik_ind(const ContrastSet& d, double variance, const ARCoefficients& ar) {
    if (!(variance > 0.0) || !std::isfinite(variance))
        throw_data("ind likelihood: variance must be > 0");
    ar.validate();
    if (d.n_real < 2) throw_data("reml: need at least two realizations");
    const double logdet_spatial = static_cast<double>(d.field_size()) * std::log(variance);
    return assemble(d, logdet_spatial, whitened_sum_squares(d, ar) / variance);
}

double ind_variance_mle(const ContrastSet& d, const ARCoefficients& ar) {
    ar.validate();
    return static_cast<double>(whitened_sum_squares(d, ar)) / d.contrast_count();
}

IndFit fit_ind(const ContrastSet& d) {
    IndFit fit;
    if (d.degenerate) {
        fit.degenerate = true;
        return fit;
    }
    auto objective = [&](std::span<const double> u) {
        ARCoefficients ar{std::tanh(u[0]), std::tanh(u[1])};
        if (!(std::abs(ar.phi_ocean) < 1.0 && std::abs(ar.phi_land) < 1.0)) return std::numeric_limits<double>::infinity();
        const double v = ind_variance_mle(d, ar);
        if (!(v > 0.0)) return std::numeric_limits<double>::infinity();
        return -reml_loglik_ind(d, v, ar);
    };
    NelderMeadOptions opt;
    opt.steps = {0.2, 0.2};
    const auto res = nelder_mead(objective, {0.1, 0.1}, opt);
    fit.ar = {std::tanh(res.x[0]), std::tanh(res.x[1])};
    fit.variance = ind_variance_mle(d, fit.ar);
    fit.loglik = fit.variance > 0.0 ? reml_loglik_ind(d, fit.variance, fit.ar) : kLoglikSentinel;
    fit.evaluations = res.evaluations;
    fit.converged = res.converged;
    return fit;
}

SpectralRemlObjective::SpectralRemlObjective(const ContrastSet& d, int workers)
    : geometry_(d.geometry),
      n_time_(d.n_time),
      n_real_(d.n_real),
      constant_(reml_constant(d)),
      contrast_count_(d.contrast_count()),
      degenerate_(d.degenerate) {
    if (d.n_real < 2) throw_data("reml: need at least two realizations");
    const std::size_t M = geometry_.n_lat();
    const std::size_t N = geometry_.n_lon();
    const std::size_t H = half_size(N);
    const std::size_t T = d.n_time;
    const std::size_t P = d.field_size();
    const auto& mask = geometry_.land_mask();
    for (auto q : mask) has_land_ = has_land_ || q != 0;

    // Per-realization moments, reduced afterwards in realization order so
    // that the result does not depend on scheduling.
    std::vector<std::vector<std::array<Eigen::MatrixXd, 6>>> per_real(d.n_real);
    parallel_for(d.n_real, workers, [&](std::size_t r) {
        const auto dr = d.realization(r);
        std::vector<Eigen::MatrixXcd> spec(T), spec_land(T);
        std::vector<double> masked(P);
        for (std::size_t t = 0; t < T; ++t) {
            const std::span<const double> slice(dr.data() + t * P, P);
            forward_field(slice, N, M, spec[t]);
            if (has_land_) {
                for (std::size_t i = 0; i < P; ++i) masked[i] = mask[i] ? slice[i] : 0.0;
                forward_field(masked, N, M, spec_land[t]);
            }
        }
        auto& out = per_real[r];
        out.resize(H);
        const Eigen::Index cols = 2 * static_cast<Eigen::Index>(T);
        Eigen::MatrixXd a(M, cols), b = Eigen::MatrixXd::Zero(M, cols), e = Eigen::MatrixXd::Zero(M, cols);
        for (std::size_t c = 0; c < H; ++c) {
            for (std::size_t t = 0; t < T; ++t) {
                a.col(2 * t) = spec[t].col(c).real();
                a.col(2 * t + 1) = spec[t].col(c).imag();
                if (t > 0) {
                    b.col(2 * t) = spec[t - 1].col(c).real();
                    b.col(2 * t + 1) = spec[t - 1].col(c).imag();
                    if (has_land_) {
                        e.col(2 * t) = spec_land[t - 1].col(c).real();
                        e.col(2 * t + 1) = spec_land[t - 1].col(c).imag();
                    }
                }
            }
            auto sym = [](const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
                Eigen::MatrixXd s = x * y.transpose();
                return Eigen::MatrixXd(s + s.transpose());
            };
            auto& mom = out[c];
            mom[0] = a * a.transpose();
            mom[1] = sym(a, b);
            mom[2] = b * b.transpose();
            if (has_land_) {
                mom[3] = sym(a, e);
                mom[4] = sym(b, e);
                mom[5] = e * e.transpose();
            }
        }
    });

    moments_.resize(H);
    for (std::size_t c = 0; c < H; ++c) {
        std::array<LongMatrix, 6> acc;
        const int count = has_land_ ? 6 : 3;
        for (int k = 0; k < count; ++k) acc[k] = LongMatrix::Zero(M, M);
        for (std::size_t r = 0; r < d.n_real; ++r)
            for (int k = 0; k < count; ++k) acc[k] += per_real[r][c][k].cast<long double>();
        auto& m = moments_[c];
        m.aa = acc[0].cast<double>();
        m.ab = acc[1].cast<double>();
        m.bb = acc[2].cast<double>();
        if (has_land_) {
            m.ae = acc[3].cast<double>();
            m.be = acc[4].cast<double>();
            m.ee = acc[5].cast<double>();
        }
    }
}

double SpectralRemlObjective::evaluate(const CovarianceParams& p) const {
    p.validate_for(geometry_);
    return evaluate(SpectralBlocks::build(p, geometry_), p.ar);
}

double SpectralRemlObjective::evaluate(const SpectralBlocks& blocks, const ARCoefficients& ar) const {
    const std::size_t M = geometry_.n_lat();
    const std::size_t N = geometry_.n_lon();
    const double phi0 = ar.phi_ocean;
    const double delta = ar.phi_land - ar.phi_ocean;
    long double quad = 0.0L;
    Eigen::MatrixXd s(M, M);
    for (std::size_t c = 0; c < moments_.size(); ++c) {
        const auto& m = moments_[c];
        s = m.aa - phi0 * m.ab + (phi0 * phi0) * m.bb;
        if (has_land_) s += -delta * m.ae + (phi0 * delta) * m.be + (delta * delta) * m.ee;
        // tr(B^{-1} S) with B = L L'
        const auto l = blocks.chol(c).triangularView<Eigen::Lower>();
        const Eigen::MatrixXd y = l.solve(s);
        const Eigen::MatrixXd z = l.solve(y.transpose());
        quad += multiplicity(c, N) * static_cast<long double>(z.trace());
    }
    quad /= static_cast<long double>(N);
    const double R = static_cast<double>(n_real_);
    const double T = static_cast<double>(n_time_);
    return constant_ - 0.5 * (R - 1.0) * T * blocks.logdet_total() - 0.5 * static_cast<double>(quad);
}

} // namespace axsym

#include "axsym/spectral.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include <unsupported/Eigen/FFT>

#include "axsym/error.hpp"
#include "axsym/parallel.hpp"

namespace axsym {

namespace {

double sin2(std::size_t c, std::size_t n_lon) {
    const double s = std::sin(std::numbers::pi * static_cast<double>(c) / static_cast<double>(n_lon));
    return s * s;
}

Eigen::FFT<double>& half_spectrum_fft() {
    thread_local Eigen::FFT<double> fft = [] {
        Eigen::FFT<double> f;
        f.SetFlag(Eigen::FFT<double>::HalfSpectrum);
        return f;
    }();
    return fft;
}

Eigen::FFT<double>& complex_fft() {
    thread_local Eigen::FFT<double> fft;
    return fft;
}

} // namespace

double band_spectrum(const BandSpectrum& p, std::size_t c, std::size_t n_lon) {
    const double base = p.alpha * p.alpha + 4.0 * sin2(c, n_lon);
    return p.phi / std::pow(base, p.nu + 0.5);
}

double coherence(const CoherenceParams& p, double dlat, std::size_t c, std::size_t n_lon) {
    if (dlat == 0.0) return 1.0;
    const double per_degree = p.xi / std::pow(1.0 + 4.0 * sin2(c, n_lon), p.tau);
    return std::pow(per_degree, dlat);
}

SpectralBlocks SpectralBlocks::build(const CovarianceParams& params, const GridGeometry& geom,
                                     int workers) {
    params.validate_for(geom);
    SpectralBlocks out;
    const std::size_t M = geom.n_lat();
    const std::size_t N = geom.n_lon();
    const std::size_t H = half_size(N);
    out.n_lat_ = M;
    out.n_lon_ = N;
    out.blocks_.resize(H);
    out.chol_.resize(H);
    out.logdet_.resize(H);
    const auto& lat = geom.latitudes();

    // Small problems are cheaper serially than the thread start-up.
    const int effective = (M * M * M * H > 200000) ? workers : 1;
    parallel_for(H, effective, [&](std::size_t c) {
        Eigen::VectorXd root(M);
        for (std::size_t m = 0; m < M; ++m) root[m] = std::sqrt(band_spectrum(params.bands[m], c, N));
        Eigen::MatrixXd b(M, M);
        for (std::size_t m = 0; m < M; ++m) {
            b(m, m) = root[m] * root[m];
            for (std::size_t k = 0; k < m; ++k) {
                const double v = coherence(params.coherence, std::abs(lat[m] - lat[k]), c, N) *
                                 root[m] * root[k];
                b(m, k) = v;
                b(k, m) = v;
            }
        }
        Eigen::LLT<Eigen::MatrixXd> llt(b);
        if (llt.info() != Eigen::Success || !(b.diagonal().minCoeff() > 0.0))
            throw_numerical("spectral block at wavenumber " + std::to_string(c) +
                            " is not positive definite");
        Eigen::MatrixXd l = llt.matrixL();
        double ld = 0.0;
        for (std::size_t m = 0; m < M; ++m) {
            if (!(l(m, m) > 0.0))
                throw_numerical("spectral block at wavenumber " + std::to_string(c) +
                                " is not positive definite");
            ld += 2.0 * std::log(l(m, m));
        }
        out.blocks_[c] = std::move(b);
        out.chol_[c] = std::move(l);
        out.logdet_[c] = ld;
    });
    return out;
}

double SpectralBlocks::logdet_total() const {
    double total = 0.0;
    for (std::size_t c = 0; c < logdet_.size(); ++c) total += multiplicity(c, n_lon_) * logdet_[c];
    return total;
}

void forward_field(std::span<const double> field, std::size_t n_lon, std::size_t n_lat,
                   Eigen::MatrixXcd& spectrum) {
    const std::size_t H = half_size(n_lon);
    spectrum.resize(static_cast<Eigen::Index>(n_lat), static_cast<Eigen::Index>(H));
    thread_local std::vector<double> row;
    thread_local std::vector<Complex> out;
    row.resize(n_lon);
    out.resize(H);
    auto& fft = half_spectrum_fft();
    for (std::size_t m = 0; m < n_lat; ++m) {
        for (std::size_t n = 0; n < n_lon; ++n) row[n] = field[n * n_lat + m];
        fft.fwd(out.data(), row.data(), static_cast<Eigen::Index>(n_lon));
        for (std::size_t c = 0; c < H; ++c) spectrum(m, c) = out[c];
    }
}

void inverse_field(const Eigen::MatrixXcd& spectrum, std::size_t n_lon, std::span<double> field) {
    const std::size_t M = static_cast<std::size_t>(spectrum.rows());
    const std::size_t H = half_size(n_lon);
    thread_local std::vector<double> row;
    thread_local std::vector<Complex> in;
    row.resize(n_lon);
    in.resize(H);
    auto& fft = half_spectrum_fft();
    for (std::size_t m = 0; m < M; ++m) {
        for (std::size_t c = 0; c < H; ++c) in[c] = spectrum(m, c);
        fft.inv(row.data(), in.data(), static_cast<Eigen::Index>(n_lon));
        for (std::size_t n = 0; n < n_lon; ++n) field[n * M + m] = row[n];
    }
}

double quadratic_form(const SpectralBlocks& blocks, std::span<const double> field) {
    const std::size_t N = blocks.n_lon();
    Eigen::MatrixXcd spec;
    forward_field(field, N, blocks.n_lat(), spec);
    long double acc = 0.0L;
    for (std::size_t c = 0; c < half_size(N); ++c) {
        const auto l = blocks.chol(c).triangularView<Eigen::Lower>();
        const Eigen::VectorXd re = l.solve(spec.col(c).real().eval());
        const Eigen::VectorXd im = l.solve(spec.col(c).imag().eval());
        acc += static_cast<long double>(multiplicity(c, N)) * (re.squaredNorm() + im.squaredNorm());
    }
    return static_cast<double>(acc / static_cast<long double>(N));
}

namespace {

template <typename BlockOp>
std::vector<double> apply_blockwise(const SpectralBlocks& blocks, std::span<const double> field,
                                    BlockOp op) {
    const std::size_t N = blocks.n_lon();
    Eigen::MatrixXcd spec;
    forward_field(field, N, blocks.n_lat(), spec);
    for (std::size_t c = 0; c < half_size(N); ++c) {
        const Eigen::VectorXd re = op(c, spec.col(c).real().eval());
        const Eigen::VectorXd im = op(c, spec.col(c).imag().eval());
        for (Eigen::Index m = 0; m < spec.rows(); ++m) spec(m, c) = Complex(re[m], im[m]);
    }
    std::vector<double> out(field.size());
    inverse_field(spec, N, out);
    return out;
}

} // namespace

std::vector<double> solve_spatial(const SpectralBlocks& blocks, std::span<const double> field) {
    return apply_blockwise(blocks, field, [&](std::size_t c, const Eigen::VectorXd& v) {
        const auto l = blocks.chol(c).triangularView<Eigen::Lower>();
        Eigen::VectorXd y = l.solve(v);
        return Eigen::VectorXd(l.transpose().solve(y));
    });
}

std::vector<double> multiply_spatial(const SpectralBlocks& blocks, std::span<const double> field) {
    return apply_blockwise(blocks, field, [&](std::size_t c, const Eigen::VectorXd& v) {
        return Eigen::VectorXd(blocks.block(c) * v);
    });
}

LagCovariances synthesize_lags(const SpectralBlocks& blocks) {
    const std::size_t M = blocks.n_lat();
    const std::size_t N = blocks.n_lon();
    LagCovariances out;
    out.lags.assign(N, Eigen::MatrixXd::Zero(M, M));
    std::vector<Complex> seq(N), lag(N);
    auto& fft = complex_fft();
    double max_re = 0.0, max_im = 0.0;
    for (std::size_t m = 0; m < M; ++m) {
        for (std::size_t k = 0; k <= m; ++k) {
            for (std::size_t c = 0; c < N; ++c) seq[c] = blocks.block(c)(m, k);
            // inverse DFT: (1/N) sum_c exp(+2 pi i c n / N) B_c
            fft.inv(lag.data(), seq.data(), static_cast<Eigen::Index>(N));
            for (std::size_t n = 0; n < N; ++n) {
                out.lags[n](m, k) = lag[n].real();
                out.lags[n](k, m) = lag[n].real();
                max_re = std::max(max_re, std::abs(lag[n].real()));
                max_im = std::max(max_im, std::abs(lag[n].imag()));
            }
        }
    }
    out.max_imag_residue = max_re > 0.0 ? max_im / max_re : max_im;
    return out;
}

Eigen::MatrixXd synthesize_covariance(const SpectralBlocks& blocks) {
    const std::size_t M = blocks.n_lat();
    const std::size_t N = blocks.n_lon();
    const auto lags = synthesize_lags(blocks);
    Eigen::MatrixXd sigma(M * N, M * N);
    for (std::size_t n = 0; n < N; ++n) {
        for (std::size_t n2 = 0; n2 < N; ++n2) {
            const std::size_t lag = (n + N - n2) % N;
            sigma.block(n * M, n2 * M, M, M) = lags.lags[lag];
        }
    }
    return sigma;
}

} // namespace axsym

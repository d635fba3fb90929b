#include "axsym/diagnose.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "axsym/error.hpp"
#include "axsym/reml.hpp"
#include "axsym/spectral.hpp"
#include "axsym/temporal.hpp"

namespace axsym {

namespace {

// Normalized whitened contrasts sqrt(R/(R-1)) H, tensor layout.
std::vector<double> normalized_innovations(const EnsembleTensor& e, const ARCoefficients& ar) {
    const ContrastSet d = compute_contrasts(e);
    const std::vector<double> phi = ar.expand(e.geometry);
    const double R = static_cast<double>(e.n_real);
    const double scale = std::sqrt(R / (R - 1.0));
    std::vector<double> out;
    out.reserve(d.values.size());
    for (std::size_t r = 0; r < e.n_real; ++r) {
        const auto h = whiten(d.realization(r), phi);
        for (double v : h) out.push_back(scale * v);
    }
    return out;
}

struct Stencil {
    std::vector<std::ptrdiff_t> dlat;
    std::vector<std::ptrdiff_t> dlon;
    std::vector<double> weight;
};

const Stencil& stencil(int kind) {
    static const Stencil ew{{0, 0}, {0, -1}, {1.0, -1.0}};
    static const Stencil ns{{0, -1}, {0, 0}, {1.0, -1.0}};
    static const Stencil var{{0}, {0}, {1.0}};
    static const Stencil lap{{0, 0, 0, -1, 1}, {0, -1, 1, 0, 0}, {4.0, -1.0, -1.0, -1.0, -1.0}};
    switch (kind) {
    case 0: return ew;
    case 1: return ns;
    case 2: return var;
    default: return lap;
    }
}

constexpr const char* kNames[4] = {"east_west", "north_south", "band_variance", "laplacian"};

bool applies(int kind, std::size_t m, std::size_t M) {
    if (kind == 1) return m >= 1;
    if (kind == 3) return m >= 1 && m + 1 < M;
    return true;
}

double model_value(const LagCovariances& k, const Stencil& s, std::size_t m, std::size_t N) {
    double v = 0.0;
    for (std::size_t i = 0; i < s.weight.size(); ++i)
        for (std::size_t j = 0; j < s.weight.size(); ++j) {
            const auto mi = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(m) + s.dlat[i]);
            const auto mj = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(m) + s.dlat[j]);
            const std::ptrdiff_t lag = s.dlon[j] - s.dlon[i];
            const auto l = static_cast<std::size_t>(((lag % static_cast<std::ptrdiff_t>(N)) +
                                                     static_cast<std::ptrdiff_t>(N)) %
                                                    static_cast<std::ptrdiff_t>(N));
            v += s.weight[i] * s.weight[j] * k.lags[l](mi, mj);
        }
    return v;
}

void check_rows(std::size_t M) {
    if (M < 3) {
        throw_data("contrast diagnostics need at least 3 latitudes for north-south and "
                   "Laplacian contrasts, got " + std::to_string(M));
    }
}

} // namespace

ContrastReport model_contrast_variances(const GridGeometry& g, const CovarianceParams& p) {
    const std::size_t M = g.n_lat();
    check_rows(M);
    const LagCovariances k = synthesize_lags(SpectralBlocks::build(p, g));
    ContrastReport report;
    for (std::size_t m = 0; m < M; ++m)
        for (int kind = 0; kind < 4; ++kind) {
            if (!applies(kind, m, M)) continue;
            report.rows.push_back({g.latitudes()[m], kNames[kind], 0.0,
                                   model_value(k, stencil(kind), m, g.n_lon())});
        }
    return report;
}

ContrastReport contrast_variances(const EnsembleTensor& e, const CovarianceParams& p) {
    const GridGeometry& g = e.geometry;
    const std::size_t M = g.n_lat();
    const std::size_t N = g.n_lon();
    check_rows(M);
    ContrastReport report = model_contrast_variances(g, p);
    const std::vector<double> h = normalized_innovations(e, p.ar);
    const std::size_t fields = e.n_real * e.n_time;
    const std::size_t P = g.n_pixels();
    for (auto& row : report.rows) {
        std::size_t m = 0;
        while (g.latitudes()[m] != row.latitude) ++m;
        int kind = 0;
        while (row.name != kNames[kind]) ++kind;
        const Stencil& s = stencil(kind);
        long double acc = 0.0L;
        for (std::size_t f = 0; f < fields; ++f) {
            const double* x = h.data() + f * P;
            for (std::size_t n = 0; n < N; ++n) {
                double v = 0.0;
                for (std::size_t i = 0; i < s.weight.size(); ++i) {
                    const auto mi = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(m) + s.dlat[i]);
                    const auto ni = static_cast<std::size_t>(
                        (static_cast<std::ptrdiff_t>(n) + s.dlon[i] + static_cast<std::ptrdiff_t>(N)) %
                        static_cast<std::ptrdiff_t>(N));
                    v += s.weight[i] * x[g.pixel(ni, mi)];
                }
                acc += static_cast<long double>(v) * v;
            }
        }
        row.empirical = static_cast<double>(acc / static_cast<long double>(fields * N));
    }
    return report;
}

std::vector<double> band_periodogram(const EnsembleTensor& e, std::size_t m,
                                     const ARCoefficients& ar, PeriodogramKind kind) {
    const GridGeometry& g = e.geometry;
    if (m >= g.n_lat()) {
        throw_data("band index " + std::to_string(m) + " out of range for " +
                   std::to_string(g.n_lat()) + " latitudes");
    }
    const std::size_t N = g.n_lon();
    const std::size_t H = half_size(N);
    const std::size_t T = e.n_time;
    const std::size_t P = g.n_pixels();
    const std::vector<double> h = normalized_innovations(e, ar);
    std::vector<double> band(N);
    std::vector<double> out(H, 0.0);
    Eigen::MatrixXcd spec;
    auto accumulate = [&] {
        forward_field(band, N, 1, spec);
        for (std::size_t c = 0; c < H; ++c) out[c] += std::norm(spec(0, c));
    };
    for (std::size_t r = 0; r < e.n_real; ++r) {
        if (kind == PeriodogramKind::per_time) {
            for (std::size_t t = 0; t < T; ++t) {
                for (std::size_t n = 0; n < N; ++n) band[n] = h[(r * T + t) * P + g.pixel(n, m)];
                accumulate();
            }
        } else {
            std::fill(band.begin(), band.end(), 0.0);
            for (std::size_t t = 0; t < T; ++t)
                for (std::size_t n = 0; n < N; ++n) band[n] += h[(r * T + t) * P + g.pixel(n, m)];
            for (auto& v : band) v /= static_cast<double>(T);
            accumulate();
        }
    }
    const double count = static_cast<double>(e.n_real) *
                         (kind == PeriodogramKind::per_time ? static_cast<double>(T) : 1.0);
    for (auto& v : out) v /= count * static_cast<double>(N);
    return out;
}

} // namespace axsym

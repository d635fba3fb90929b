#include "axsym/benchmark.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "axsym/error.hpp"
#include "axsym/reml.hpp"
#include "axsym/simulate.hpp"

namespace axsym {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

template <typename F>
double time_call(F&& f, int repeats, double min_seconds) {
    using clock = std::chrono::steady_clock;
    double best = std::numeric_limits<double>::infinity();
    volatile double sink = 0.0;
    for (int rep = 0; rep < std::max(repeats, 1); ++rep) {
        std::size_t calls = 0;
        const auto start = clock::now();
        double elapsed = 0.0;
        do {
            sink = sink + f();
            ++calls;
            elapsed = std::chrono::duration<double>(clock::now() - start).count();
        } while (elapsed < min_seconds);
        best = std::min(best, elapsed / static_cast<double>(calls));
    }
    return best;
}

std::vector<double> benchmark_latitudes(std::size_t M) {
    std::vector<double> lat(M);
    for (std::size_t m = 0; m < M; ++m) {
        lat[m] = -80.0 + 160.0 * (static_cast<double>(m) + 0.5) / static_cast<double>(M);
    }
    return lat;
}

} // namespace

double loglog_slope(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw_data("slope needs at least two points");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= static_cast<double>(x.size());
    my /= static_cast<double>(x.size());
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = std::log(x[i]) - mx;
        sxy += dx * (std::log(y[i]) - my);
        sxx += dx * dx;
    }
    if (sxx == 0.0) throw_data("slope needs at least two distinct sizes");
    return sxy / sxx;
}

BenchmarkResult run_benchmark(const std::vector<BenchmarkSize>& sizes, std::uint64_t seed,
                              int repeats, double min_seconds) {
    BenchmarkResult result;
    for (const auto& size : sizes) {
        if (size.n_lat == 0 || size.n_lon < 2 || size.n_time == 0 || size.n_real < 2) {
            throw_data("benchmark sizes need M >= 1, N >= 2, T >= 1, R >= 2");
        }
        SimulationSpec spec;
        std::vector<std::uint8_t> mask(size.n_lat * size.n_lon, 0);
        for (std::size_t i = 0; i < mask.size(); i += 3) mask[i] = 1;
        spec.geometry = GridGeometry(benchmark_latitudes(size.n_lat), size.n_lon, mask);
        spec.params.bands.assign(size.n_lat, BandSpectrum{1.0, 0.5, 1.0});
        spec.params.coherence = {0.97, 0.21};
        spec.params.ar = {0.11, 0.10};
        spec.n_time = size.n_time;
        spec.n_real = size.n_real;
        spec.seed = seed;
        const ContrastSet d = compute_contrasts(sample(spec));

        BenchmarkRow row;
        row.size = size;
        row.fft_seconds =
            time_call([&] { return reml_loglik_fft(d, spec.params); }, repeats, min_seconds);
        const std::size_t mn = size.n_lat * size.n_lon;
        row.whitened_dense_seconds =
            mn <= kDenseLimit ? time_call([&] { return reml_loglik_whitened_dense(d, spec.params); },
                                          repeats, min_seconds)
                              : kNaN;
        row.dense_seconds =
            mn * size.n_time <= kDenseLimit
                ? time_call([&] { return reml_loglik_dense(d, spec.params); }, repeats, min_seconds)
                : kNaN;
        result.rows.push_back(row);
    }

    std::vector<double> n, tf, mn, td;
    for (const auto& row : result.rows) {
        n.push_back(static_cast<double>(row.size.n_lon));
        tf.push_back(row.fft_seconds);
        if (!std::isnan(row.whitened_dense_seconds)) {
            mn.push_back(static_cast<double>(row.size.n_lat * row.size.n_lon));
            td.push_back(row.whitened_dense_seconds);
        }
    }
    auto distinct = [](const std::vector<double>& v) {
        return v.size() >= 2 && *std::min_element(v.begin(), v.end()) !=
                                    *std::max_element(v.begin(), v.end());
    };
    result.fft_exponent_n = distinct(n) ? loglog_slope(n, tf) : kNaN;
    result.dense_exponent_mn = distinct(mn) ? loglog_slope(mn, td) : kNaN;
    return result;
}

} // namespace axsym

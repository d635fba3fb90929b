#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace axsym {

struct BenchmarkSize {
    std::size_t n_lat = 8;
    std::size_t n_lon = 24;
    std::size_t n_time = 10;
    std::size_t n_real = 2;
};

// Seconds per evaluation; NaN when the route was skipped by its size guard.
struct BenchmarkRow {
    BenchmarkSize size;
    double fft_seconds = 0.0;
    double whitened_dense_seconds = 0.0; // dense NM x NM spatial Cholesky after whitening
    double dense_seconds = 0.0;          // dense TNM x TNM space-time Cholesky
};

struct BenchmarkResult {
    std::vector<BenchmarkRow> rows;
    double fft_exponent_n = 0.0;     // slope of log time on log N
    double dense_exponent_mn = 0.0;  // slope of log whitened-dense time on log MN
};

/// Least-squares slope of log y on log x. Needs two distinct x values.
double loglog_slope(std::span<const double> x, std::span<const double> y);

/// Times each likelihood route on synthetic data for every size. Each
/// timing is the minimum over repeats of the mean time of a batch lasting
/// at least min_seconds. Runs serially.
BenchmarkResult run_benchmark(const std::vector<BenchmarkSize>& sizes, std::uint64_t seed = 1,
                              int repeats = 3, double min_seconds = 0.05);

} // namespace axsym

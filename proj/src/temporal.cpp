#include "axsym/temporal.hpp"

#include "axsym/error.hpp"

namespace axsym {

namespace {

void check_shape(std::size_t total, std::size_t pixels) {
    if (pixels == 0 || total % pixels != 0)
        throw_data("temporal: series length " + std::to_string(total) +
                   " is not a multiple of the field size " + std::to_string(pixels));
}

} // namespace

std::vector<double> whiten(std::span<const double> series, std::span<const double> phi) {
    const std::size_t P = phi.size();
    check_shape(series.size(), P);
    std::vector<double> out(series.begin(), series.end());
    // Backwards so each step still sees the uncolored previous slice.
    for (std::size_t t = series.size() / P; t-- > 1;) {
        double* cur = out.data() + t * P;
        const double* prev = series.data() + (t - 1) * P;
        for (std::size_t p = 0; p < P; ++p) cur[p] -= phi[p] * prev[p];
    }
    return out;
}

std::vector<double> color(std::span<const double> innovations, std::span<const double> phi) {
    const std::size_t P = phi.size();
    check_shape(innovations.size(), P);
    std::vector<double> out(innovations.begin(), innovations.end());
    const std::size_t T = innovations.size() / P;
    for (std::size_t t = 1; t < T; ++t) {
        double* cur = out.data() + t * P;
        const double* prev = out.data() + (t - 1) * P;
        for (std::size_t p = 0; p < P; ++p) cur[p] += phi[p] * prev[p];
    }
    return out;
}

std::vector<double> whiten_tensor(const EnsembleTensor& e, const ARCoefficients& ar) {
    const auto phi = ar.expand(e.geometry);
    std::vector<double> out;
    out.reserve(e.values.size());
    for (std::size_t r = 0; r < e.n_real; ++r) {
        const auto h = whiten(e.realization(r), phi);
        out.insert(out.end(), h.begin(), h.end());
    }
    return out;
}

} // namespace axsym

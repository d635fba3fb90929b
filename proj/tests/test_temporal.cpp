#include <doctest.h>

#include <random>

#include "axsym/temporal.hpp"
#include "oracles.hpp"

using namespace axsym;

namespace {

std::vector<double> random_series(std::mt19937_64& rng, std::size_t n) {
    std::normal_distribution<double> z;
    std::vector<double> x(n);
    for (auto& v : x) v = z(rng);
    return x;
}

} // namespace

TEST_CASE("zero AR coefficients leave the series unchanged") {
    std::mt19937_64 rng(1);
    const auto d = random_series(rng, 5 * 6);
    const std::vector<double> phi(6, 0.0);
    CHECK(whiten(d, phi) == d);
    CHECK(color(d, phi) == d);
}

TEST_CASE("a single time step is its own innovation") {
    std::mt19937_64 rng(2);
    const auto d = random_series(rng, 6);
    const std::vector<double> phi(6, 0.5);
    CHECK(whiten(d, phi) == d);
    CHECK(color(d, phi) == d);
}

TEST_CASE("whiten follows the recursion and color inverts it") {
    std::mt19937_64 rng(3);
    const GridGeometry g = oracle::random_geometry(rng, 3, 8);
    const ARCoefficients ar{0.3, 0.7};
    const std::vector<double> phi = ar.expand(g);
    const std::size_t P = g.n_pixels(), T = 40;
    const auto d = random_series(rng, P * T);
    const auto h = whiten(d, phi);
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t p = 0; p < P; ++p) {
            const double expected = t == 0 ? d[p] : d[t * P + p] - phi[p] * d[(t - 1) * P + p];
            CHECK(h[t * P + p] == expected);
        }
    const auto back = color(h, phi);
    double worst = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) worst = std::max(worst, std::abs(back[i] - d[i]));
    CHECK(worst < 1e-14 * 8);
    const auto h2 = whiten(color(d, phi), phi);
    for (std::size_t i = 0; i < d.size(); ++i) CHECK(std::abs(h2[i] - d[i]) < 1e-13);
}

TEST_CASE("AR expansion follows the land mask") {
    const GridGeometry g({-10.0, 10.0}, 3, {0, 1, 1, 0, 0, 1});
    const auto phi = ARCoefficients{0.2, 0.6}.expand(g);
    CHECK(phi == std::vector<double>{0.2, 0.6, 0.6, 0.2, 0.2, 0.6});
}

TEST_CASE("tensor whitening treats every realization separately") {
    std::mt19937_64 rng(4);
    const GridGeometry g = oracle::random_geometry(rng, 2, 4);
    const EnsembleTensor e = oracle::random_tensor(rng, g, 6, 3);
    const ARCoefficients ar{0.4, -0.3};
    const auto all = whiten_tensor(e, ar);
    const auto phi = ar.expand(g);
    for (std::size_t r = 0; r < 3; ++r) {
        const auto one = whiten(e.realization(r), phi);
        for (std::size_t i = 0; i < one.size(); ++i) CHECK(all[r * one.size() + i] == one[i]);
    }
}

#include <doctest.h>

#include <cmath>
#include <cstring>

#include "axsym/error.hpp"
#include "axsym/simulate.hpp"
#include "axsym/synthetic.hpp"
#include "oracles.hpp"

using namespace axsym;

TEST_CASE("Philox4x32-10 known-answer vectors") {
    using W = std::array<std::uint32_t, 4>;
    CHECK(philox4x32({0, 0, 0, 0}, {0, 0}) == W{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    CHECK(philox4x32({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
          W{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
    CHECK(philox4x32({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
          W{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("normal stream moments and independence of streams") {
    NormalStream a(7, 0), b(7, 1), a2(7, 0);
    double s = 0.0, ss = 0.0, cross = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double x = a.next(), y = b.next();
        CHECK(x == a2.next());
        s += x;
        ss += x * x;
        cross += x * y;
    }
    CHECK(std::abs(s / n) < 4.0 / std::sqrt(n));
    CHECK(std::abs(ss / n - 1.0) < 4.0 * std::sqrt(2.0 / n));
    CHECK(std::abs(cross / n) < 4.0 / std::sqrt(n));
    NormalStream u(1, 2);
    for (int i = 0; i < 1000; ++i) {
        const double v = u.uniform();
        CHECK(v > 0.0);
        CHECK(v < 1.0);
    }
}

TEST_CASE("sampling is deterministic and independent of worker count") {
    SimulationSpec spec;
    spec.geometry = synthetic_geometry(4, 12);
    spec.params = reference_params(spec.geometry);
    spec.n_time = 7;
    spec.n_real = 3;
    spec.seed = 99;
    const EnsembleTensor a = sample(spec, 1);
    const EnsembleTensor b = sample(spec, 3);
    REQUIRE(a.values.size() == b.values.size());
    CHECK(std::memcmp(a.values.data(), b.values.data(), 8 * a.values.size()) == 0);
    spec.seed = 100;
    CHECK(sample(spec).values != a.values);
}

TEST_CASE("synthesized fields are real") {
    std::mt19937_64 rng(3);
    for (std::size_t N : {7u, 8u, 32u}) {
        const GridGeometry g = oracle::random_geometry(rng, 3, N);
        const SpectralBlocks blocks = build_blocks(oracle::random_params(rng, 3), g);
        NormalStream stream(5, 0);
        std::vector<double> field(g.n_pixels());
        for (int i = 0; i < 20; ++i) {
            double residue = 1.0;
            sample_spatial(blocks, stream, field, &residue);
            double scale = 0.0;
            for (double v : field) scale = std::max(scale, std::abs(v));
            CHECK(residue < 1e-12 * std::max(1.0, scale));
        }
    }
}

TEST_CASE("vanishing noise returns the mean exactly") {
    const GridGeometry g = synthetic_geometry(3, 8);
    const RegionMap regions = RegionMap::blocks(g, 1, 2);
    CovarianceParams p = reference_params(g);
    for (auto& b : p.bands) b.phi = 1e-300;
    MeanModelParams mean = reference_mean(g, regions);
    mean.standardization = reference_standardization(g, reference_params(g));
    SimulationSpec spec;
    spec.geometry = g;
    spec.params = p;
    spec.n_time = 12;
    spec.n_real = 2;
    spec.seed = 3;
    spec.mean = mean;
    spec.forcing = drop_forcing(12);
    const EnsembleTensor e = sample(spec);
    const EnsembleTensor m = emulate_mean(mean, *spec.forcing, regions);
    for (std::size_t r = 0; r < 2; ++r)
        for (std::size_t i = 0; i < m.values.size(); ++i) CHECK(e.values[r * m.values.size() + i] == m.values[i]);
}

TEST_CASE("empirical spatial covariance matches the model") {
    std::mt19937_64 rng(13);
    const GridGeometry g = oracle::random_geometry(rng, 2, 6);
    const CovarianceParams p = oracle::random_params(rng, 2);
    SimulationSpec spec;
    spec.geometry = g;
    spec.params = p;
    spec.n_time = 1;
    spec.n_real = 40000;
    spec.seed = 17;
    const EnsembleTensor e = sample(spec);
    const Eigen::MatrixXd s = oracle::spatial_covariance(p, g);
    const std::size_t P = g.n_pixels();
    const Eigen::Map<const Eigen::MatrixXd> x(e.values.data(), static_cast<Eigen::Index>(P), 40000);
    const Eigen::MatrixXd emp = x * x.transpose() / 40000.0;
    int outside = 0;
    for (std::size_t i = 0; i < P; ++i)
        for (std::size_t j = 0; j <= i; ++j) {
            const double se = std::sqrt((s(i, i) * s(j, j) + s(i, j) * s(i, j)) / 40000.0);
            if (std::abs(emp(i, j) - s(i, j)) > 3.0 * se) ++outside;
        }
    // 78 entries; a handful beyond 3 sds would signal a scaling error.
    CHECK(outside <= 2);
}

TEST_CASE("simulation spec validation") {
    SimulationSpec spec;
    spec.geometry = synthetic_geometry(2, 4);
    spec.params = reference_params(spec.geometry);
    spec.n_time = 0;
    CHECK_THROWS_AS(sample(spec), DataError);
    spec.n_time = 3;
    spec.mean = reference_mean(spec.geometry, RegionMap::blocks(spec.geometry, 1, 1));
    CHECK_THROWS_AS(sample(spec), DataError);
}

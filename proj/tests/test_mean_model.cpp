#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "axsym/error.hpp"
#include "axsym/mean_model.hpp"
#include "axsym/simulate.hpp"
#include "axsym/synthetic.hpp"
#include "oracles.hpp"

using namespace axsym;

namespace {

std::vector<double> one_percent_series(std::size_t history, std::size_t years) {
    std::vector<double> co2(history, 280.0);
    for (std::size_t t = 1; t <= years; ++t) co2.push_back(280.0 * std::pow(1.01, static_cast<double>(t)));
    return co2;
}

// log CO2 at model year t straight from the raw vector.
double raw_log(const std::vector<double>& co2, std::size_t history, long t) {
    const long idx = std::max(0L, static_cast<long>(history) + t - 1);
    return std::log(co2[static_cast<std::size_t>(idx)]);
}

struct Problem {
    GridGeometry geometry;
    RegionMap regions;
    CovarianceParams cov;
    ForcingSeries forcing;
    MeanModelParams truth;
    EnsembleTensor standardized;
    std::vector<double> scale;
};

// Standardized data: truth trajectory plus D^{-1} eps, eps ~ model noise.
Problem make_problem(std::size_t M, std::size_t N, std::size_t T, std::size_t R, std::uint64_t seed,
                     double noise = 1.0) {
    Problem pr;
    pr.geometry = synthetic_geometry(M, N);
    pr.regions = RegionMap::blocks(pr.geometry, 2, 2);
    pr.cov = reference_params(pr.geometry);
    for (auto& b : pr.cov.bands) b.phi *= noise * noise;
    pr.forcing = drop_forcing(T);
    pr.truth = reference_mean(pr.geometry, pr.regions);
    SimulationSpec spec;
    spec.geometry = pr.geometry;
    spec.params = pr.cov;
    spec.n_time = T;
    spec.n_real = R;
    spec.seed = seed;
    const EnsembleTensor eps = sample(spec);
    const std::size_t P = pr.geometry.n_pixels();
    pr.scale.resize(P);
    for (std::size_t p = 0; p < P; ++p) pr.scale[p] = 0.5 + 0.1 * static_cast<double>(p % 7);
    const auto mu = mean_trajectory(pr.truth, pr.forcing);
    pr.standardized = EnsembleTensor(pr.geometry, T, R);
    for (std::size_t r = 0; r < R; ++r)
        for (std::size_t t = 0; t < T; ++t)
            for (std::size_t p = 0; p < P; ++p) {
                const std::size_t i = (r * T + t) * P + p;
                pr.standardized.values[i] = mu[t * P + p] + eps.values[i] / pr.scale[p];
            }
    return pr;
}

} // namespace

TEST_CASE("lag truncation and weights") {
    CHECK(lag_truncation(0.95) == 449);
    CHECK(lag_truncation(0.95) ==
          static_cast<std::size_t>(std::ceil(std::log(1e-10) / std::log(0.95))));
    for (double lambda : {0.3, 0.9, 0.95, 0.99}) {
        const std::size_t K = lag_truncation(lambda);
        CHECK(std::pow(lambda, static_cast<double>(K)) < 1e-10);
        CHECK(std::pow(lambda, static_cast<double>(K - 1)) >= 1e-10);
        const auto w = lag_weights(lambda);
        REQUIRE(w.size() == K);
        double sum = 0.0;
        for (std::size_t i = 0; i < K; ++i) {
            CHECK(w[i] == doctest::Approx(std::pow(lambda, static_cast<double>(i)) * (1.0 - lambda)));
            sum += w[i];
        }
        CHECK(sum == doctest::Approx(1.0 - std::pow(lambda, static_cast<double>(K))).epsilon(1e-12));
    }
    const auto w0 = lag_weights(1e-300, 4);
    CHECK(w0[0] == doctest::Approx(1.0));
    CHECK(w0[1] == doctest::Approx(0.0));
}

TEST_CASE("constant forcing gives constant regressors") {
    const ForcingSeries f(std::vector<double>(30, 350.0));
    const double lambda = 0.95;
    const std::size_t K = lag_truncation(lambda);
    for (std::size_t t = 1; t <= 30; t += 7) {
        const DesignRow row = design_row(f, t, lambda);
        CHECK(row.s == doctest::Approx(std::log(350.0)).epsilon(1e-15));
        CHECK(row.g == doctest::Approx((1.0 - std::pow(lambda, static_cast<double>(K))) * std::log(350.0))
                           .epsilon(1e-12));
    }
}

TEST_CASE("step forcing approaches the new level at rate lambda") {
    std::vector<double> co2(50, 280.0);
    for (std::size_t i = 10; i < 50; ++i) co2[i] = 560.0;
    const ForcingSeries f(co2, 40); // step at model year 1
    const double lambda = 0.8;
    const auto rows = design_rows(f, lambda);
    const double lo = std::log(280.0), hi = std::log(560.0);
    for (std::size_t t = 3; t <= 40; ++t) {
        // g_t = hi - (hi - lo) lambda^(t-2) up to truncation.
        const double expected = hi - (hi - lo) * std::pow(lambda, static_cast<double>(t - 2));
        CHECK(rows[t - 1].g == doctest::Approx(expected).epsilon(1e-9));
    }
}

TEST_CASE("long-term regressor matches a long brute-force convolution") {
    const std::size_t history = 100, years = 60;
    const auto co2 = one_percent_series(history, years);
    const ForcingSeries f(co2, years);
    const double lambda = 0.9;
    long double g = 0.0L;
    for (long i = 2; i < 2 + 10000; ++i)
        g += std::pow(static_cast<long double>(lambda), i - 2) * (1.0L - lambda) * raw_log(co2, history, 10 - i);
    const DesignRow row = design_row(f, 10, lambda);
    CHECK(std::abs(row.g - static_cast<double>(g)) < 1e-8);
    CHECK(row.s == doctest::Approx(0.5 * (raw_log(co2, history, 10) + raw_log(co2, history, 9))).epsilon(1e-15));
    const auto rows = design_rows(f, lambda);
    for (std::size_t t = 1; t <= years; ++t) {
        const DesignRow single = design_row(f, t, lambda);
        CHECK(rows[t - 1].s == doctest::Approx(single.s).epsilon(1e-14));
        CHECK(rows[t - 1].g == doctest::Approx(single.g).epsilon(1e-12));
    }
}

TEST_CASE("standardization") {
    std::mt19937_64 rng(1);
    const GridGeometry g = oracle::random_geometry(rng, 2, 4);
    const EnsembleTensor control = oracle::random_tensor(rng, g, 30, 2);
    const EnsembleTensor z = standardize(control, control);
    const std::size_t P = g.n_pixels();
    const double n = 60.0;
    for (std::size_t p = 0; p < P; ++p) {
        double s = 0.0, ss = 0.0;
        for (std::size_t k = 0; k < 60; ++k) s += z.values[k * P + p];
        for (std::size_t k = 0; k < 60; ++k) ss += std::pow(z.values[k * P + p] - s / n, 2);
        CHECK(std::abs(s / n) < 1e-13);
        CHECK(ss / (n - 1.0) == doctest::Approx(1.0).epsilon(1e-12));
    }
    const Standardization stats = control_statistics(control);
    const EnsembleTensor back = destandardize(z, stats);
    for (std::size_t i = 0; i < back.values.size(); ++i)
        CHECK(back.values[i] == doctest::Approx(control.values[i]).epsilon(1e-12));

    EnsembleTensor flat = control;
    for (std::size_t k = 0; k < 60; ++k) flat.values[k * P + 3] = 1.5;
    CHECK_THROWS_WITH_AS(control_statistics(flat), doctest::Contains("pixel"), DataError);
}

TEST_CASE("constant forcing makes the design rank-deficient") {
    const GridGeometry g = synthetic_geometry(2, 4);
    const RegionMap regions = RegionMap::blocks(g, 1, 2);
    EnsembleTensor e(g, 20, 2);
    std::mt19937_64 rng(2);
    std::normal_distribution<double> z;
    for (auto& v : e.values) v = z(rng);
    CHECK_THROWS_WITH_AS(fit_mean(e, control_forcing(20), regions, reference_params(g)),
                         doctest::Contains("collinear"), DataError);
}

TEST_CASE("GLS solution equals dense GLS") {
    const std::size_t M = 2, N = 4, T = 30, R = 3;
    const Problem pr = make_problem(M, N, T, R, 5);
    const std::size_t P = M * N, C = pr.regions.n_regions();
    const double lambda = 0.9;
    MeanFitOptions opts;
    opts.cg_tol = 1e-14;
    const MeanProblem problem(pr.standardized, pr.forcing, pr.regions, pr.cov, pr.scale, opts);
    const GlsSolution sol = problem.solve(lambda, true);

    const auto rows = design_rows(pr.forcing, lambda);
    const std::size_t k = 2 * P + C;
    Eigen::MatrixXd X = Eigen::MatrixXd::Zero(T * P, k);
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t p = 0; p < P; ++p) {
            X(t * P + p, p) = 1.0;
            X(t * P + p, P + p) = rows[t].s;
            X(t * P + p, 2 * P + pr.regions.region_of(p)) = rows[t].g;
        }
    const Eigen::MatrixXd s = oracle::spatial_covariance(pr.cov, pr.geometry);
    Eigen::MatrixXd v = oracle::space_time_covariance(s, pr.cov.ar.expand(pr.geometry), T);
    Eigen::VectorXd dinv(T * P);
    for (std::size_t i = 0; i < T * P; ++i) dinv[i] = 1.0 / pr.scale[i % P];
    v = dinv.asDiagonal() * v * dinv.asDiagonal() / static_cast<double>(R);
    Eigen::VectorXd y = Eigen::VectorXd::Zero(T * P);
    for (std::size_t r = 0; r < R; ++r)
        y += Eigen::Map<const Eigen::VectorXd>(pr.standardized.values.data() + r * T * P, T * P);
    y /= static_cast<double>(R);
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(v);
    const Eigen::MatrixXd vx = ldlt.solve(X);
    const Eigen::MatrixXd info = X.transpose() * vx;
    const Eigen::VectorXd beta = info.ldlt().solve(vx.transpose() * y);
    const Eigen::MatrixXd cov = info.inverse();
    const Eigen::VectorXd resid = y - X * beta;
    const double loglik = -0.5 * static_cast<double>(T * P) * std::log(2.0 * std::numbers::pi) -
                          0.5 * ldlt.vectorD().array().log().sum() - 0.5 * resid.dot(ldlt.solve(resid));

    auto close = [](double a, double b) { return std::abs(a - b) <= 1e-8 * std::max(1.0, std::abs(b)); };
    for (std::size_t p = 0; p < P; ++p) {
        CHECK(close(sol.beta0[p], beta[p]));
        CHECK(close(sol.beta1[p], beta[P + p]));
        CHECK(close(sol.beta0_sd[p], std::sqrt(cov(p, p))));
        CHECK(close(sol.beta1_sd[p], std::sqrt(cov(P + p, P + p))));
    }
    for (std::size_t c = 0; c < C; ++c) {
        CHECK(close(sol.beta2[c], beta[2 * P + c]));
        CHECK(close(sol.beta2_sd[c], std::sqrt(cov(2 * P + c, 2 * P + c))));
    }
    CHECK(close(sol.loglik, loglik));
    CHECK_FALSE(sol.sd_approximate);
}

TEST_CASE("noiseless data recover the linear coefficients exactly") {
    const Problem pr = make_problem(3, 8, 60, 2, 6, 1e-12);
    const MeanProblem problem(pr.standardized, pr.forcing, pr.regions, pr.cov, pr.scale);
    const GlsSolution sol = problem.solve(0.95);
    for (std::size_t p = 0; p < pr.geometry.n_pixels(); ++p) {
        CHECK(sol.beta0[p] == doctest::Approx(pr.truth.beta0[p]).epsilon(1e-8));
        CHECK(sol.beta1[p] == doctest::Approx(pr.truth.beta1[p]).epsilon(1e-8));
    }
    for (std::size_t c = 0; c < pr.regions.n_regions(); ++c)
        CHECK(sol.beta2[c] == doctest::Approx(pr.truth.beta2[c]).epsilon(1e-8));
}

TEST_CASE("intercept is equivariant under per-pixel shifts") {
    Problem pr = make_problem(2, 8, 40, 2, 7);
    const MeanProblem base(pr.standardized, pr.forcing, pr.regions, pr.cov, pr.scale);
    const GlsSolution a = base.solve(0.93);
    const std::size_t P = pr.geometry.n_pixels();
    for (std::size_t i = 0; i < pr.standardized.values.size(); ++i)
        pr.standardized.values[i] += 0.25 * static_cast<double>(i % P);
    const MeanProblem shifted(pr.standardized, pr.forcing, pr.regions, pr.cov, pr.scale);
    const GlsSolution b = shifted.solve(0.93);
    for (std::size_t p = 0; p < P; ++p) {
        CHECK(b.beta0[p] == doctest::Approx(a.beta0[p] + 0.25 * static_cast<double>(p)).epsilon(1e-8));
        CHECK(b.beta1[p] == doctest::Approx(a.beta1[p]).epsilon(1e-8));
    }
    CHECK(b.loglik == doctest::Approx(a.loglik).epsilon(1e-10));
}

TEST_CASE("profile likelihood in lambda is unimodal and its maximum is found") {
    const Problem pr = make_problem(3, 8, 120, 3, 8);
    const MeanProblem problem(pr.standardized, pr.forcing, pr.regions, pr.cov, pr.scale);
    std::vector<double> ll;
    for (int i = 0; i < 50; ++i) ll.push_back(problem.profile_loglik(0.5 + 0.49 * i / 49.0));
    const auto peak = static_cast<std::size_t>(std::max_element(ll.begin(), ll.end()) - ll.begin());
    for (std::size_t i = 1; i <= peak; ++i) CHECK(ll[i] >= ll[i - 1]);
    for (std::size_t i = peak + 1; i < ll.size(); ++i) CHECK(ll[i] <= ll[i - 1]);

    const MeanModelParams fit = fit_mean(pr.standardized, pr.forcing, pr.regions, pr.cov, pr.scale);
    CHECK(fit.loglik >= ll[peak] - 1e-6);
    CHECK(std::abs(fit.lambda - 0.95) < 0.03);
    CHECK(std::isfinite(fit.lambda_sd));
    CHECK(fit.lambda_sd > 0.0);
    CHECK_NOTHROW(fit.validate());
}

TEST_CASE("emulation reproduces fitted values and stays flat under constant forcing") {
    const Problem pr = make_problem(2, 8, 60, 2, 9);
    MeanModelParams fit = fit_mean(pr.standardized, pr.forcing, pr.regions, pr.cov, pr.scale);
    const std::size_t P = pr.geometry.n_pixels();
    fit.standardization = {std::vector<double>(P, 280.0), std::vector<double>(P, 2.0)};
    const auto traj = mean_trajectory(fit, pr.forcing);
    const EnsembleTensor em = emulate_mean(fit, pr.forcing, pr.regions);
    REQUIRE(em.n_real == 1);
    for (std::size_t i = 0; i < traj.size(); ++i)
        CHECK(em.values[i] == doctest::Approx(280.0 + 2.0 * traj[i]).epsilon(1e-14));

    const EnsembleTensor flat = emulate_mean(fit, control_forcing(30), pr.regions);
    for (std::size_t t = 1; t < 30; ++t)
        for (std::size_t p = 0; p < P; ++p)
            CHECK(flat.values[t * P + p] == doctest::Approx(flat.values[p]).epsilon(1e-12));

    CHECK_THROWS_AS(emulate_mean(fit, pr.forcing, RegionMap::blocks(pr.geometry, 1, 1)), DataError);
}

TEST_CASE("lack-of-fit index of the ensemble average is (R-1)/R") {
    std::mt19937_64 rng(10);
    const GridGeometry g = oracle::random_geometry(rng, 2, 4);
    for (std::size_t R : {2u, 3u, 5u}) {
        const EnsembleTensor e = oracle::random_tensor(rng, g, 15, R);
        const std::size_t n = e.realization_size();
        std::vector<double> avg(n, 0.0);
        for (std::size_t r = 0; r < R; ++r)
            for (std::size_t i = 0; i < n; ++i) avg[i] += e.values[r * n + i] / static_cast<double>(R);
        for (double v : lack_of_fit_index(e, avg))
            CHECK(v == doctest::Approx((static_cast<double>(R) - 1.0) / static_cast<double>(R)).epsilon(1e-13));
    }
    const EnsembleTensor single = oracle::random_tensor(rng, g, 15, 1);
    CHECK_THROWS_AS(lack_of_fit_index(single, single.values), DataError);
}

TEST_CASE("lack-of-fit index approaches one for the true mean") {
    const Problem pr = make_problem(2, 8, 400, 4, 11);
    const auto mu = mean_trajectory(pr.truth, pr.forcing);
    const auto index = lack_of_fit_index(pr.standardized, mu);
    std::vector<double> sorted = index;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted[sorted.size() / 2] == doctest::Approx(1.0).epsilon(0.1));
}

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "axsym/benchmark.hpp"
#include "axsym/cli.hpp"
#include "axsym/error.hpp"
#include "axsym/estimation.hpp"
#include "axsym/io.hpp"
#include "axsym/mean_model.hpp"
#include "axsym/parallel.hpp"
#include "axsym/reml.hpp"
#include "axsym/simulate.hpp"
#include "axsym/spectral.hpp"
#include "axsym/synthetic.hpp"
#include "axsym/temporal.hpp"
#include "oracles.hpp"

using namespace axsym;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(a), std::abs(b)); }

std::string num(double v, int precision = 4) {
    std::ostringstream s;
    s.precision(precision);
    s << v;
    return s.str();
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const std::function<Outcome()>& check) {
    const auto start = Clock::now();
    Outcome o;
    try {
        o = check();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << " " << name << ": " << o.detail
              << " [" << num(seconds_since(start), 3) << " s]" << std::endl;
}

int workers() { return default_workers(); }

// fft versus dense restricted loglikelihood on random draws.
Outcome oracle_equivalence() {
    const auto start = Clock::now();
    std::mt19937_64 rng(20240101);
    std::uniform_int_distribution<std::size_t> M(1, 8), N(2, 16), T(1, 8), R(2, 3);
    double worst = 0.0;
    int draws = 0;
    while (draws < 60) {
        const std::size_t m = M(rng), n = N(rng), t = T(rng), r = R(rng);
        if (m * n * t > kDenseLimit) continue;
        const GridGeometry g = oracle::random_geometry(rng, m, n);
        const CovarianceParams p = oracle::random_params(rng, m);
        const ContrastSet d = compute_contrasts(oracle::random_tensor(rng, g, t, r));
        worst = std::max(worst, rel(reml_loglik_fft(d, p), reml_loglik_dense(d, p)));
        ++draws;
    }
    const double elapsed = seconds_since(start);
    return {worst < 1e-8 && elapsed < 60.0,
            std::to_string(draws) + " draws, max relative difference " + num(worst) + ", " +
                num(elapsed, 3) + " s"};
}

// Dense spatial covariance against direct summation; PD blocks.
Outcome covariance_synthesis() {
    std::mt19937_64 rng(20240102);
    std::uniform_int_distribution<std::size_t> M(1, 4), N(2, 16);
    double worst = 0.0, min_eig = INFINITY;
    for (int i = 0; i < 100; ++i) {
        const std::size_t m = M(rng), n = N(rng);
        const GridGeometry g = oracle::random_geometry(rng, m, n);
        const CovarianceParams p = oracle::random_params(rng, m);
        const SpectralBlocks blocks = build_blocks(p, g);
        const Eigen::MatrixXd s = synthesize_covariance(blocks);
        const Eigen::MatrixXd ref = oracle::spatial_covariance(p, g);
        worst = std::max(worst, (s - ref).cwiseAbs().maxCoeff() / ref.cwiseAbs().maxCoeff());
        for (std::size_t c = 0; c < n; ++c) {
            const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(blocks.block(c));
            min_eig = std::min(min_eig, eig.eigenvalues().minCoeff() / eig.eigenvalues().maxCoeff());
        }
    }
    return {worst <= 1e-12 && min_eig > 0.0,
            "100 parameter sets, max scaled difference " + num(worst) +
                ", smallest block eigenvalue ratio " + num(min_eig)};
}

// Empirical covariance of 1e5 draws, realness, byte reproducibility.
Outcome sampler_consistency() {
    std::mt19937_64 rng(20240103);
    const GridGeometry g = oracle::random_geometry(rng, 2, 8);
    const CovarianceParams p = oracle::random_params(rng, 2);
    SimulationSpec spec;
    spec.geometry = g;
    spec.params = p;
    spec.n_time = 1;
    spec.n_real = 100000;
    spec.seed = 20240103;
    const EnsembleTensor e = sample(spec, workers());
    const std::size_t P = g.n_pixels();
    const double n = static_cast<double>(spec.n_real);
    const Eigen::Map<const Eigen::MatrixXd> x(e.values.data(), static_cast<Eigen::Index>(P),
                                              static_cast<Eigen::Index>(spec.n_real));
    const Eigen::MatrixXd emp = x * x.transpose() / n;
    const Eigen::MatrixXd s = synthesize_covariance(build_blocks(p, g));
    double worst_z = 0.0;
    int outside = 0;
    for (std::size_t i = 0; i < P; ++i)
        for (std::size_t j = 0; j <= i; ++j) {
            const double se = std::sqrt((s(i, i) * s(j, j) + s(i, j) * s(i, j)) / n);
            const double z = std::abs(emp(i, j) - s(i, j)) / se;
            worst_z = std::max(worst_z, z);
            if (z > 3.0) ++outside;
        }

    double residue = 0.0;
    const SpectralBlocks blocks = build_blocks(p, g);
    NormalStream stream(7, 0);
    std::vector<double> field(P);
    for (int i = 0; i < 1000; ++i) {
        double r = 0.0;
        sample_spatial(blocks, stream, field, &r);
        residue = std::max(residue, r);
    }

    spec.n_real = 50;
    const EnsembleTensor a = sample(spec, 1), b = sample(spec, workers());
    const fs::path dir = fs::temp_directory_path() / "axsym_acceptance";
    fs::create_directories(dir);
    write_tensor(a, dir / "a.bin");
    write_tensor(b, dir / "b.bin");
    auto bytes = [](const fs::path& f) {
        std::ifstream in(f, std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    };
    const bool same = bytes(dir / "a.bin") == bytes(dir / "b.bin");
    return {outside == 0 && residue < 1e-12 && same,
            std::to_string(outside) + " of " + std::to_string(P * (P + 1) / 2) +
                " covariance entries beyond 3 MC standard errors (max |z| " + num(worst_z, 3) +
                "), imaginary residue " + num(residue) + ", bytes " + (same ? "identical" : "differ")};
}

struct Recovery {
    std::vector<std::string> names;
    std::vector<int> covered;
    std::vector<double> deltas; // sp minus ind loglik per contrast
    std::vector<double> xi;
    int replications = 0;
};

// Two-stage fits on 20 replications at the large preset shape.
Recovery run_recovery() {
    const SyntheticPreset shape = synthetic_preset("large");
    const GridGeometry g = synthetic_geometry(shape.n_lat, shape.n_lon);
    const CovarianceParams truth = reference_params(g);
    const std::size_t M = g.n_lat();
    Recovery rec;
    for (std::size_t m = 0; m < M; ++m)
        for (const char* k : {"phi", "alpha", "nu"}) rec.names.push_back("band" + std::to_string(m) + "." + k);
    for (const char* k : {"xi", "tau", "phi0", "phi1"}) rec.names.push_back(k);
    rec.covered.assign(rec.names.size(), 0);

    for (int rep = 0; rep < 20; ++rep) {
        SimulationSpec spec;
        spec.geometry = g;
        spec.params = truth;
        spec.n_time = shape.n_time;
        spec.n_real = shape.n_real;
        spec.seed = 1000 + static_cast<std::uint64_t>(rep);
        const ContrastSet d = compute_contrasts(sample(spec, workers()));
        const auto bands = fit_all_bands(d, {}, workers());
        GlobalFitOptions opts;
        opts.workers = workers();
        const FitReport fit = fit_global(d, spectra_of(bands), opts);
        std::size_t k = 0;
        for (std::size_t m = 0; m < M; ++m) {
            const double est[3] = {bands[m].spectrum.phi, bands[m].spectrum.alpha, bands[m].spectrum.nu};
            const double tru[3] = {truth.bands[m].phi, truth.bands[m].alpha, truth.bands[m].nu};
            for (int i = 0; i < 3; ++i, ++k)
                if (std::abs(est[i] - tru[i]) <= 3.0 * bands[m].sd[static_cast<std::size_t>(i)]) ++rec.covered[k];
        }
        const double tru[4] = {truth.coherence.xi, truth.coherence.tau, truth.ar.phi_ocean, truth.ar.phi_land};
        for (int i = 0; i < 4; ++i, ++k)
            if (std::abs(fit.table[static_cast<std::size_t>(i)].estimate - tru[i]) <=
                3.0 * fit.table[static_cast<std::size_t>(i)].sd)
                ++rec.covered[k];
        rec.deltas.push_back((fit.loglik - fit_ind(d).loglik) / d.contrast_count());
        rec.xi.push_back(fit.params.coherence.xi);
        ++rec.replications;
    }
    return rec;
}

Outcome parameter_recovery(const Recovery& rec, double elapsed) {
    const int need = static_cast<int>(std::ceil(0.9 * rec.replications));
    int worst = rec.replications;
    std::string worst_name;
    int below = 0;
    for (std::size_t k = 0; k < rec.names.size(); ++k) {
        if (rec.covered[k] < worst) {
            worst = rec.covered[k];
            worst_name = rec.names[k];
        }
        if (rec.covered[k] < need) ++below;
    }
    std::string detail = std::to_string(rec.names.size()) + " parameters, " + std::to_string(below) +
                         " covered in fewer than " + std::to_string(need) + "/" +
                         std::to_string(rec.replications) + " replications; lowest coverage " +
                         std::to_string(worst) + "/" + std::to_string(rec.replications) + " (" + worst_name +
                         "); " + num(elapsed, 4) + " s";
    for (std::size_t k = rec.names.size() - 4; k < rec.names.size(); ++k)
        detail += ", " + rec.names[k] + " " + std::to_string(rec.covered[k]) + "/20";
    return {below == 0 && elapsed < 1800.0, detail};
}

// Mean model at T = 500, R = 5 on standardized synthetic data.
Outcome mean_recovery() {
    SyntheticPreset preset = synthetic_preset("small");
    preset.n_time = 500;
    preset.n_real = 5;
    preset.heldout_time = 200;
    preset.control_time = 2;
    const SyntheticBundle b = generate_synthetic(preset, 4242, workers());
    const Standardization& truth_std = b.mean.standardization;

    const ContrastSet d = compute_contrasts(b.training);
    const auto bands = fit_all_bands(d, {}, workers());
    GlobalFitOptions gopts;
    gopts.workers = workers();
    const CovarianceParams cov = fit_global(d, spectra_of(bands), gopts).params;

    const EnsembleTensor y = standardize(b.training, truth_std);
    MeanFitOptions mopts;
    mopts.workers = workers();
    MeanModelParams fit = fit_mean(y, b.training_forcing, b.regions, cov, truth_std.sd, mopts);
    fit.standardization = truth_std;

    const MeanModelParams& tm = b.mean;
    std::size_t total = 0, inside = 0;
    auto tally = [&](const std::vector<double>& est, const std::vector<double>& sd,
                     const std::vector<double>& tru) {
        for (std::size_t i = 0; i < est.size(); ++i, ++total)
            if (std::abs(est[i] - tru[i]) <= 3.0 * sd[i]) ++inside;
    };
    tally(fit.beta0, fit.beta0_sd, tm.beta0);
    tally(fit.beta1, fit.beta1_sd, tm.beta1);
    tally(fit.beta2, fit.beta2_sd, tm.beta2);
    const double coverage = static_cast<double>(inside) / static_cast<double>(total);

    const EnsembleTensor emulated = emulate_mean(fit, b.heldout_forcing, b.regions);
    auto index = lack_of_fit_index(b.heldout, emulated.values);
    std::sort(index.begin(), index.end());
    const double median = 0.5 * (index[(index.size() - 1) / 2] + index[index.size() / 2]);

    const std::size_t n = b.heldout.realization_size();
    std::vector<double> avg(n, 0.0);
    for (std::size_t r = 0; r < b.heldout.n_real; ++r)
        for (std::size_t i = 0; i < n; ++i)
            avg[i] += b.heldout.values[r * n + i] / static_cast<double>(b.heldout.n_real);
    const double target = (static_cast<double>(b.heldout.n_real) - 1.0) / static_cast<double>(b.heldout.n_real);
    double analytic = 0.0;
    for (double v : lack_of_fit_index(b.heldout, avg)) analytic = std::max(analytic, std::abs(v - target));

    const bool pass = std::abs(fit.lambda - 0.95) <= 0.02 && coverage >= 0.99 && median < 1.2 && analytic < 1e-12;
    return {pass, "lambda " + num(fit.lambda, 5) + " (sd " + num(fit.lambda_sd, 3) + "), " +
                      std::to_string(inside) + "/" + std::to_string(total) +
                      " linear coefficients within 3 sds (" + num(100.0 * coverage, 4) +
                      "%), held-out median I " + num(median, 4) + ", max |I - (R-1)/R| at the average " +
                      num(analytic, 3)};
}

// color(whiten(D)) = D and dense space-time = whitened spatial likelihood.
Outcome whitening_exactness() {
    std::mt19937_64 rng(20240106);
    double worst_identity = 0.0, worst_like = 0.0;
    for (int i = 0; i < 20; ++i) {
        const std::size_t M = 1 + static_cast<std::size_t>(i % 4), N = 3 + static_cast<std::size_t>(i % 6);
        const std::size_t T = 2 + static_cast<std::size_t>(i % 5);
        const GridGeometry g = oracle::random_geometry(rng, M, N);
        const CovarianceParams p = oracle::random_params(rng, M);
        const EnsembleTensor e = oracle::random_tensor(rng, g, T, 2);
        const auto phi = p.ar.expand(g);
        const auto series = e.realization(0);
        const auto back = color(whiten(series, phi), phi);
        double scale = 0.0;
        for (double v : series) scale = std::max(scale, std::abs(v));
        for (std::size_t k = 0; k < series.size(); ++k)
            worst_identity = std::max(worst_identity, std::abs(back[k] - series[k]) / scale);
        const ContrastSet d = compute_contrasts(e);
        worst_like = std::max(worst_like, rel(reml_loglik_dense(d, p), reml_loglik_whitened_dense(d, p)));
    }
    return {worst_identity <= 1e-14 && worst_like < 1e-8,
            "max scaled round-trip error " + num(worst_identity) + ", max relative likelihood difference " +
                num(worst_like)};
}

Outcome complexity() {
    std::vector<BenchmarkSize> sizes;
    for (std::size_t n : {24, 48, 96, 192}) sizes.push_back({8, n, 10, 2});
    const BenchmarkResult scaling = run_benchmark(sizes, 1, 5, 0.2);
    const BenchmarkResult speed = run_benchmark({{16, 96, 20, 2}}, 1, 3, 0.2);
    const BenchmarkRow& row = speed.rows.front();
    const double speedup = row.whitened_dense_seconds / row.fft_seconds;
    std::string times;
    for (const auto& r : scaling.rows) times += " " + num(r.fft_seconds * 1e3, 3) + "ms";
    return {scaling.fft_exponent_n <= 1.3 && speedup >= 10.0,
            "fft exponent in N " + num(scaling.fft_exponent_n, 3) + " (times" + times +
                "), speedup over dense at M=16 N=96 T=20 R=2 " + num(speedup, 4) + "x"};
}

Outcome model_ordering(const Recovery& rec) {
    std::vector<double> deltas = rec.deltas;
    const GridGeometry g = synthetic_geometry(8, 32);
    for (double xi : {0.5, 0.7, 0.9, 0.99}) {
        CovarianceParams p = reference_params(g);
        p.coherence.xi = xi;
        SimulationSpec spec;
        spec.geometry = g;
        spec.params = p;
        spec.n_time = 60;
        spec.n_real = 3;
        spec.seed = static_cast<std::uint64_t>(xi * 1000);
        const ContrastSet d = compute_contrasts(sample(spec, workers()));
        const auto bands = fit_all_bands(d, {}, workers());
        const FitReport fit = fit_global(d, spectra_of(bands));
        deltas.push_back((fit.loglik - fit_ind(d).loglik) / d.contrast_count());
    }
    const double lo = *std::min_element(deltas.begin(), deltas.end());
    const double hi = *std::max_element(deltas.begin(), deltas.end());
    return {lo > 0.0, std::to_string(deltas.size()) + " datasets, delta loglik / NMT(R-1) in [" + num(lo, 4) +
                          ", " + num(hi, 4) + "]"};
}

int cli(std::vector<std::string> args) {
    args.insert(args.begin(), "axsym");
    args.insert(args.begin() + 1, "--quiet");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    std::streambuf* old = std::cout.rdbuf();
    std::ostringstream sink;
    std::cout.rdbuf(sink.rdbuf());
    const int code = run_cli(static_cast<int>(argv.size()), argv.data());
    std::cout.rdbuf(old);
    return code;
}

Outcome format_round_trips() {
    const fs::path dir = fs::temp_directory_path() / "axsym_acceptance";
    fs::create_directories(dir);
    std::mt19937_64 rng(20240109);
    bool ok = true;
    for (int i = 0; i < 10; ++i) {
        const GridGeometry g = oracle::random_geometry(rng, 1 + static_cast<std::size_t>(i), 4 + static_cast<std::size_t>(i));
        EnsembleTensor e = oracle::random_tensor(rng, g, 3, 2);
        e.co2.assign(5, 280.0 + i);
        e.scenario_id = "s" + std::to_string(i);
        write_tensor(e, dir / "t.bin");
        const EnsembleTensor back = read_tensor(dir / "t.bin");
        ok = ok && back.values.size() == e.values.size() &&
             std::memcmp(back.values.data(), e.values.data(), 8 * e.values.size()) == 0 &&
             back.geometry == e.geometry && back.co2 == e.co2 && back.scenario_id == e.scenario_id;
        const CovarianceParams p = oracle::random_params(rng, g.n_lat());
        write_params(p, dir / "p.json");
        ok = ok && read_params(dir / "p.json") == p;
    }

    const GridGeometry g = oracle::random_geometry(rng, 2, 4);
    write_tensor(oracle::random_tensor(rng, g, 3, 2), dir / "good.bin");
    write_params(oracle::random_params(rng, 2), dir / "good.json");
    std::ifstream in(dir / "good.bin", std::ios::binary);
    const std::string good((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    auto corrupt = [&](const std::string& bytes) {
        std::ofstream out(dir / "bad.bin", std::ios::binary | std::ios::trunc);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.close();
        return cli({"loglik", "--data", (dir / "bad.bin").string(), "--params", (dir / "good.json").string()});
    };
    std::string magic = good, zero = good;
    magic[1] = '?';
    std::memset(zero.data() + 4, 0, 4);
    const int good_code = cli({"loglik", "--data", (dir / "good.bin").string(), "--params", (dir / "good.json").string()});
    const int codes[] = {corrupt(magic), corrupt(zero), corrupt(good.substr(0, good.size() - 8)), corrupt(good.substr(0, 9)),
                         cli({"loglik", "--data", (dir / "missing.bin").string(), "--params", (dir / "good.json").string()}),
                         cli({"loglik", "--bogus"})};
    const bool codes_ok = good_code == 0 && codes[0] == 2 && codes[1] == 2 && codes[2] == 2 && codes[3] == 2 &&
                          codes[4] == 2 && codes[5] == 1;
    std::string list;
    for (int c : codes) list += " " + std::to_string(c);
    return {ok && codes_ok, std::string("tensor and parameter round trips ") + (ok ? "bit-exact" : "differ") +
                                "; exit codes (bad magic, zero dimension, truncated payload, truncated header, "
                                "missing file, bad flag):" + list};
}

} // namespace

int main() {
    std::cout << "axsym acceptance suite, " << workers() << " worker(s)" << std::endl;
    report(1, "oracle equivalence", oracle_equivalence);
    report(2, "covariance synthesis", covariance_synthesis);
    report(3, "sampler consistency", sampler_consistency);
    const auto start = Clock::now();
    Recovery rec;
    report(4, "parameter recovery", [&] {
        rec = run_recovery();
        return parameter_recovery(rec, seconds_since(start));
    });
    report(5, "mean-model recovery", mean_recovery);
    report(6, "whitening exactness", whitening_exactness);
    report(7, "complexity", complexity);
    report(8, "model ordering", [&] { return model_ordering(rec); });
    report(9, "format round trips", format_round_trips);
    std::cout << (failures == 0 ? "ALL PASS" : std::to_string(failures) + " FAILED") << std::endl;
    return failures == 0 ? 0 : 1;
}

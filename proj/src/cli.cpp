#include "axsym/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "axsym/benchmark.hpp"
#include "axsym/diagnose.hpp"
#include "axsym/error.hpp"
#include "axsym/estimation.hpp"
#include "axsym/io.hpp"
#include "axsym/mean_model.hpp"
#include "axsym/parallel.hpp"
#include "axsym/reml.hpp"
#include "axsym/simulate.hpp"
#include "axsym/synthetic.hpp"

namespace axsym {

namespace {

int verbosity = 1;

std::string fmt(double v) {
    std::ostringstream s;
    s.precision(12);
    s << v;
    return s.str();
}

std::string quoted(const std::string& v) {
    if (v.find_first_of(" =\"") == std::string::npos && !v.empty()) return v;
    std::string out = "\"";
    for (char c : v) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    return out + "\"";
}

void info(const std::string& event, const std::vector<std::pair<std::string, std::string>>& f = {}) {
    if (verbosity >= 1) log_event("info", event, f);
}

struct Common {
    int workers = 0;
    std::size_t max_evals = 2000;
    double f_tol = 1e-6;
    double x_tol = 1e-5;
    bool no_sd = false;

    int resolved_workers() const { return workers > 0 ? workers : default_workers(); }
    NelderMeadOptions optimizer() const {
        NelderMeadOptions o;
        o.max_evals = max_evals;
        o.f_tol = f_tol;
        o.x_tol = x_tol;
        return o;
    }
};

void add_optimizer_flags(CLI::App* app, Common& c) {
    app->add_option("--max-evals", c.max_evals, "Nelder-Mead evaluation cap")->check(CLI::PositiveNumber);
    app->add_option("--f-tol", c.f_tol, "Stop when the simplex value spread falls below this")
        ->check(CLI::PositiveNumber);
    app->add_option("--x-tol", c.x_tol, "Stop when the simplex diameter falls below this")
        ->check(CLI::PositiveNumber);
    app->add_flag("--no-sd", c.no_sd, "Skip the Hessian and standard deviations");
}

// Compares the fast likelihood with the largest dense route the size guards allow.
void dense_check(const ContrastSet& d, const CovarianceParams& p, int workers) {
    const double fast = reml_loglik_fft(d, p, workers);
    const std::size_t mn = d.geometry.n_pixels();
    double slow = 0.0;
    std::string route;
    if (mn * d.n_time <= kDenseLimit) {
        slow = reml_loglik_dense(d, p);
        route = "space-time";
    } else if (mn <= kDenseLimit) {
        slow = reml_loglik_whitened_dense(d, p);
        route = "whitened-spatial";
    } else {
        log_event("warn", "dense-check", {{"status", "skipped"}, {"reason", "size guard"}});
        return;
    }
    const double rel = std::abs(fast - slow) / std::max(std::abs(slow), 1e-300);
    log_event(rel <= 1e-6 ? "info" : "error", "dense-check",
              {{"route", route}, {"fft", fmt(fast)}, {"dense", fmt(slow)}, {"relative", fmt(rel)}});
    if (rel > 1e-6) throw_numerical("dense check failed: relative difference " + fmt(rel));
}

int cmd_fit_bands(const std::string& data, const std::string& out, const Common& c) {
    const EnsembleTensor e = read_tensor(data);
    const ContrastSet d = compute_contrasts(e);
    BandFitOptions opt;
    opt.optimizer = c.optimizer();
    opt.compute_sd = !c.no_sd;
    info("fit-bands.start", {{"bands", std::to_string(e.geometry.n_lat())},
                             {"workers", std::to_string(c.resolved_workers())}});
    const auto fits = fit_all_bands(d, opt, c.resolved_workers());
    write_band_fits(fits, out);
    std::cout << "band latitude phi alpha nu ar_provisional loglik status\n";
    bool failed = false;
    for (const auto& f : fits) {
        const std::string status =
            f.failed ? "failed" : (f.boundary ? "boundary" : (f.converged ? "ok" : "max-evals"));
        std::cout << f.band << ' ' << fmt(f.latitude) << ' ' << fmt(f.spectrum.phi) << ' '
                  << fmt(f.spectrum.alpha) << ' ' << fmt(f.spectrum.nu) << ' '
                  << fmt(f.ar_provisional) << ' ' << fmt(f.loglik) << ' ' << status << '\n';
        if (f.failed) {
            failed = true;
            log_event("error", "fit-bands.band", {{"band", std::to_string(f.band)}, {"error", f.error}});
        } else if (f.boundary) {
            log_event("warn", "fit-bands.band", {{"band", std::to_string(f.band)}, {"status", "boundary"}});
        }
    }
    info("fit-bands.done", {{"out", out}});
    return failed ? 3 : 0;
}

int cmd_fit_global(const std::string& data, const std::string& bands, const std::string& out,
                   bool check, const Common& c) {
    const EnsembleTensor e = read_tensor(data);
    const ContrastSet d = compute_contrasts(e);
    GlobalFitOptions opt;
    opt.optimizer = c.optimizer();
    opt.compute_sd = !c.no_sd;
    opt.workers = c.resolved_workers();
    const auto spectra = read_band_spectra(bands);
    const FitReport report = fit_global(d, spectra, opt);
    write_params(report.params, out, &report);
    const IndFit ind = fit_ind(d);
    std::cout << "parameter estimate sd ci_low ci_high\n";
    for (const auto& t : report.table) {
        std::cout << t.name << ' ' << fmt(t.estimate) << ' ' << fmt(t.sd) << ' ' << fmt(t.ci_low)
                  << ' ' << fmt(t.ci_high) << '\n';
    }
    std::cout << "loglik_sp " << fmt(report.loglik) << '\n'
              << "loglik_ind " << fmt(ind.loglik) << '\n'
              << "delta_loglik_per_contrast " << fmt((report.loglik - ind.loglik) / d.contrast_count())
              << '\n';
    if (report.sd_warning) log_event("warn", "fit-global.sd", {{"reason", "hessian not negative definite"}});
    info("fit-global.done", {{"evaluations", std::to_string(report.evaluations)},
                             {"converged", report.converged ? "true" : "false"},
                             {"out", out}});
    if (check) dense_check(d, report.params, opt.workers);
    return 0;
}

int cmd_fit_mean(const std::string& data, const std::string& control, const std::string& params,
                 const std::string& co2, const std::string& regions_path, const std::string& out,
                 double lambda_tol, const Common& c) {
    const EnsembleTensor e = read_tensor(data);
    const EnsembleTensor ctl = read_tensor(control);
    if (!(ctl.geometry == e.geometry)) throw_data("control grid does not match the data grid");
    const CovarianceParams cov = read_params(params);
    ForcingSeries forcing;
    if (!co2.empty()) {
        forcing = read_forcing(co2, e.n_time);
    } else {
        if (e.co2.empty()) throw_data(data + ": no CO2 series in the sidecar; pass --co2");
        forcing = ForcingSeries(e.co2, e.n_time);
    }
    const RegionMap regions =
        regions_path.empty() ? RegionMap::blocks(e.geometry) : read_regions(regions_path, e.geometry);
    const Standardization stats = control_statistics(ctl);
    const EnsembleTensor standardized = standardize(e, stats);
    MeanFitOptions opt;
    opt.lambda_tol = lambda_tol;
    opt.workers = c.resolved_workers();
    MeanModelParams mean = fit_mean(standardized, forcing, regions, cov, stats.sd, opt);
    mean.standardization = stats;
    write_mean(mean, out);
    std::cout << "lambda " << fmt(mean.lambda) << '\n'
              << "lambda_sd " << fmt(mean.lambda_sd) << '\n'
              << "profile_loglik " << fmt(mean.loglik) << '\n';
    info("fit-mean.done", {{"regions", std::to_string(regions.n_regions())}, {"out", out}});
    return 0;
}

int cmd_emulate(const std::string& mean_path, const std::string& co2, const std::string& regions_path,
                const std::string& out, const std::string& truth_path, const std::string& index_out) {
    const MeanModelParams mean = read_mean(mean_path);
    const ForcingSeries forcing = read_forcing(co2);
    const RegionMap regions =
        regions_path.empty() ? mean.regions : read_regions(regions_path, mean.geometry);
    EnsembleTensor traj = emulate_mean(mean, forcing, regions);
    traj.scenario_id = "emulated";
    write_tensor(traj, out);
    info("emulate.done", {{"years", std::to_string(traj.n_time)}, {"out", out}});
    if (!truth_path.empty()) {
        const EnsembleTensor truth = read_tensor(truth_path);
        if (!(truth.geometry == traj.geometry) || truth.n_time != traj.n_time) {
            throw_data("truth tensor does not match the emulated grid and years");
        }
        const auto index = lack_of_fit_index(truth, traj.values);
        std::vector<double> sorted = index;
        std::sort(sorted.begin(), sorted.end());
        const std::size_t P = sorted.size();
        const double median =
            P % 2 ? sorted[P / 2] : 0.5 * (sorted[P / 2 - 1] + sorted[P / 2]);
        const auto above = std::count_if(sorted.begin(), sorted.end(), [](double v) { return v > 3.0; });
        std::cout << "index_median " << fmt(median) << '\n'
                  << "index_max " << fmt(sorted.back()) << '\n'
                  << "index_above_3 " << above << '\n';
        if (!index_out.empty()) {
            std::ostringstream csv;
            csv << "lat_index,lon_index,latitude,longitude,index\n";
            const GridGeometry& g = truth.geometry;
            for (std::size_t n = 0; n < g.n_lon(); ++n)
                for (std::size_t m = 0; m < g.n_lat(); ++m)
                    csv << m + 1 << ',' << n + 1 << ',' << fmt(g.latitudes()[m]) << ','
                        << fmt(g.longitudes()[n]) << ',' << fmt(index[g.pixel(n, m)]) << '\n';
            std::ofstream f(index_out);
            if (!f) throw_data("cannot write " + index_out);
            f << csv.str();
        }
    }
    return 0;
}

int cmd_simulate(const std::string& spec_path, std::optional<std::uint64_t> seed,
                 const std::string& out, const Common& c) {
    SimulationSpec spec = read_simulation_spec(spec_path);
    if (seed) spec.seed = *seed;
    const EnsembleTensor e = sample(spec, c.resolved_workers());
    write_tensor(e, out);
    info("simulate.done", {{"seed", std::to_string(spec.seed)}, {"out", out}});
    return 0;
}

int cmd_gen_synthetic(const std::string& preset_name, std::uint64_t seed, const std::string& dir,
                      const Common& c) {
    const SyntheticPreset preset = synthetic_preset(preset_name);
    const SyntheticBundle b = generate_synthetic(preset, seed, c.resolved_workers());
    const fs::path root(dir);
    std::error_code ec;
    fs::create_directories(root, ec);
    if (ec) throw_data("cannot create " + root.string() + ": " + ec.message());
    write_tensor(b.training, root / "training.bin");
    write_tensor(b.control, root / "control.bin");
    write_tensor(b.heldout, root / "heldout.bin");
    write_forcing(b.training_forcing, root / "training_co2.json");
    write_forcing(b.heldout_forcing, root / "heldout_co2.json");
    write_regions(b.regions, root / "regions.csv");
    write_params(b.params, root / "truth_params.json");
    write_mean(b.mean, root / "truth_mean.json");
    info("gen-synthetic.done", {{"preset", preset.name}, {"seed", std::to_string(seed)}, {"dir", dir}});
    std::cout << root.string() << '\n';
    return 0;
}

int cmd_diagnose(const std::string& data, const std::string& params, const std::string& out,
                 const std::string& periodogram_out) {
    const EnsembleTensor e = read_tensor(data);
    const CovarianceParams p = read_params(params);
    p.validate_for(e.geometry);
    const ContrastReport report = contrast_variances(e, p);
    std::ostringstream csv;
    csv << "latitude,contrast_name,empirical,model\n";
    for (const auto& r : report.rows) {
        csv << fmt(r.latitude) << ',' << r.name << ',' << fmt(r.empirical) << ',' << fmt(r.model) << '\n';
    }
    std::ofstream f(out);
    if (!f) throw_data("cannot write " + out);
    f << csv.str();
    if (!periodogram_out.empty()) {
        std::ostringstream pg;
        pg << "latitude,wavenumber,per_time,time_averaged,model\n";
        const GridGeometry& g = e.geometry;
        for (std::size_t m = 0; m < g.n_lat(); ++m) {
            const auto a = band_periodogram(e, m, p.ar, PeriodogramKind::per_time);
            const auto b = band_periodogram(e, m, p.ar, PeriodogramKind::time_averaged);
            for (std::size_t k = 0; k < a.size(); ++k) {
                pg << fmt(g.latitudes()[m]) << ',' << k << ',' << fmt(a[k]) << ',' << fmt(b[k]) << ','
                   << fmt(band_spectrum(p.bands[m], k, g.n_lon())) << '\n';
            }
        }
        std::ofstream pf(periodogram_out);
        if (!pf) throw_data("cannot write " + periodogram_out);
        pf << pg.str();
    }
    info("diagnose.done", {{"rows", std::to_string(report.rows.size())}, {"out", out}});
    return 0;
}

int cmd_loglik(const std::string& data, const std::string& params, bool check, const Common& c) {
    const EnsembleTensor e = read_tensor(data);
    const ContrastSet d = compute_contrasts(e);
    const CovarianceParams p = read_params(params);
    p.validate_for(e.geometry);
    const double sp = reml_loglik_fft(d, p, c.resolved_workers());
    const IndFit ind = fit_ind(d);
    std::cout << "loglik_sp " << fmt(sp) << '\n'
              << "loglik_ind " << fmt(ind.loglik) << '\n'
              << "delta_loglik_per_contrast " << fmt((sp - ind.loglik) / d.contrast_count()) << '\n';
    if (check) dense_check(d, p, c.resolved_workers());
    return 0;
}

int cmd_benchmark(const std::string& sizes_path, const std::string& out, int repeats) {
    std::vector<BenchmarkSize> sizes;
    if (sizes_path.empty()) {
        for (std::size_t n : {24, 48, 96, 192}) sizes.push_back({8, n, 10, 2});
    } else {
        const Json j = read_json(sizes_path);
        if (!j.is_array()) throw_data(sizes_path + ": expected an array of {M, N, T, R}");
        for (const auto& s : j) {
            sizes.push_back({s.at("M").get<std::size_t>(), s.at("N").get<std::size_t>(),
                             s.at("T").get<std::size_t>(), s.at("R").get<std::size_t>()});
        }
    }
    const BenchmarkResult r = run_benchmark(sizes, 1, repeats);
    std::ostringstream csv;
    csv << "M,N,T,R,fft_seconds,whitened_dense_seconds,dense_seconds\n";
    for (const auto& row : r.rows) {
        csv << row.size.n_lat << ',' << row.size.n_lon << ',' << row.size.n_time << ','
            << row.size.n_real << ',' << fmt(row.fft_seconds) << ',' << fmt(row.whitened_dense_seconds)
            << ',' << fmt(row.dense_seconds) << '\n';
    }
    if (out.empty()) {
        std::cout << csv.str();
    } else {
        std::ofstream f(out);
        if (!f) throw_data("cannot write " + out);
        f << csv.str();
    }
    std::cout << "fft_exponent_n " << fmt(r.fft_exponent_n) << '\n'
              << "dense_exponent_mn " << fmt(r.dense_exponent_mn) << '\n';
    return 0;
}

} // namespace

void log_event(const std::string& level, const std::string& event,
               const std::vector<std::pair<std::string, std::string>>& fields) {
    std::string line = "level=" + level + " event=" + event;
    for (const auto& [k, v] : fields) line += " " + k + "=" + quoted(v);
    std::cerr << line << '\n';
}

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"axsym: axially symmetric spectral space-time model for gridded ensembles"};
    app.require_subcommand(1);
    Common c;
    int verbose = 0;
    bool quiet = false;
    app.add_option("--workers", c.workers, "Worker threads (default: AXSYM_WORKERS or all cores)")
        ->check(CLI::PositiveNumber);
    app.add_flag("-v,--verbose", verbose, "More logging");
    app.add_flag("-q,--quiet", quiet, "Only warnings and errors");
    app.fallthrough();

    std::string data, out, bands, params, control, co2, regions, mean, truth, index_out, spec,
        preset = "small", dir = "synthetic", periodogram, sizes;
    bool check = false;
    std::optional<std::uint64_t> seed;
    std::uint64_t gen_seed = 1;
    double lambda_tol = 1e-4;
    int repeats = 3;

    auto* fb = app.add_subcommand("fit-bands", "Stage 1: per-band spectrum fits");
    fb->add_option("--data", data, "Ensemble tensor")->required();
    fb->add_option("--out", out, "Band fits JSON")->required();
    add_optimizer_flags(fb, c);

    auto* fg = app.add_subcommand("fit-global", "Stage 2: coherence and AR fit with bands fixed");
    fg->add_option("--data", data, "Ensemble tensor")->required();
    fg->add_option("--bands", bands, "Band fits JSON from fit-bands")->required();
    fg->add_option("--out", out, "Parameter JSON with fit report")->required();
    fg->add_flag("--dense-check", check, "Compare with the dense likelihood where feasible");
    add_optimizer_flags(fg, c);

    auto* fm = app.add_subcommand("fit-mean", "Mean model: profiled GLS and lambda search");
    fm->add_option("--data", data, "Training tensor (raw units)")->required();
    fm->add_option("--control", control, "Control-run tensor for standardization")->required();
    fm->add_option("--params", params, "Covariance parameter JSON")->required();
    fm->add_option("--co2", co2, "Forcing JSON (default: the data sidecar)");
    fm->add_option("--regions", regions, "Region CSV (default: 6 x 8 blocks)");
    fm->add_option("--lambda-tol", lambda_tol, "Golden-section tolerance")->check(CLI::PositiveNumber);
    fm->add_option("--out", out, "Mean model JSON")->required();

    auto* em = app.add_subcommand("emulate", "Mean trajectory for a new forcing scenario");
    em->add_option("--mean", mean, "Mean model JSON")->required();
    em->add_option("--co2-new", co2, "Forcing JSON for the new scenario")->required();
    em->add_option("--regions", regions, "Region CSV (must match the fitted map)");
    em->add_option("--out", out, "Output tensor (R = 1)")->required();
    em->add_option("--truth", truth, "Ensemble of the same scenario for the lack-of-fit index");
    em->add_option("--index-out", index_out, "Per-pixel lack-of-fit index CSV")->needs("--truth");

    auto* sm = app.add_subcommand("simulate", "Draw an ensemble from a simulation spec");
    sm->add_option("--spec", spec, "Simulation spec JSON")->required();
    sm->add_option("--seed", seed, "Override the spec seed");
    sm->add_option("--out", out, "Output tensor")->required();

    auto* gs = app.add_subcommand("gen-synthetic", "Write a synthetic training/control/held-out set");
    gs->add_option("--preset", preset, "tiny | small | large");
    gs->add_option("--seed", gen_seed, "Base seed");
    gs->add_option("--out-dir", dir, "Output directory");

    auto* dg = app.add_subcommand("diagnose", "Contrast-variance diagnostics");
    dg->add_option("--data", data, "Ensemble tensor")->required();
    dg->add_option("--params", params, "Covariance parameter JSON")->required();
    dg->add_option("--out", out, "CSV: latitude, contrast_name, empirical, model")->required();
    dg->add_option("--periodogram-out", periodogram, "Per-band periodogram CSV");

    auto* ll = app.add_subcommand("loglik", "Restricted loglikelihood and the ind baseline");
    ll->add_option("--data", data, "Ensemble tensor")->required();
    ll->add_option("--params", params, "Covariance parameter JSON")->required();
    ll->add_flag("--dense-check", check, "Compare with the dense likelihood where feasible");

    auto* bm = app.add_subcommand("benchmark", "Time the fft and dense likelihood routes");
    bm->add_option("--sizes", sizes, "JSON array of {M, N, T, R}");
    bm->add_option("--out", out, "Timing CSV (default: stdout)");
    bm->add_option("--repeats", repeats, "Repeats per timing")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }
    verbosity = quiet ? 0 : 1 + verbose;

    try {
        if (*fb) return cmd_fit_bands(data, out, c);
        if (*fg) return cmd_fit_global(data, bands, out, check, c);
        if (*fm) return cmd_fit_mean(data, control, params, co2, regions, out, lambda_tol, c);
        if (*em) return cmd_emulate(mean, co2, regions, out, truth, index_out);
        if (*sm) return cmd_simulate(spec, seed, out, c);
        if (*gs) return cmd_gen_synthetic(preset, gen_seed, dir, c);
        if (*dg) return cmd_diagnose(data, params, out, periodogram);
        if (*ll) return cmd_loglik(data, params, check, c);
        if (*bm) return cmd_benchmark(sizes, out, repeats);
    } catch (const UsageError& e) {
        log_event("error", "usage", {{"message", e.what()}});
        return 1;
    } catch (const DataError& e) {
        log_event("error", "data", {{"message", e.what()}});
        return 2;
    } catch (const NumericalError& e) {
        log_event("error", "numerical", {{"message", e.what()}});
        return 3;
    } catch (const std::bad_alloc&) {
        log_event("error", "memory", {{"message", "out of memory"}});
        return 3;
    }
    return 1;
}

} // namespace axsym

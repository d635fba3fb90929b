#include "axsym/simulate.hpp"

#include <cmath>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "axsym/error.hpp"
#include "axsym/parallel.hpp"
#include "axsym/temporal.hpp"

namespace axsym {

void SimulationSpec::validate() const {
    params.validate_for(geometry);
    if (n_time == 0 || n_real == 0) throw_data("simulation needs T >= 1 and R >= 1");
    if (mean.has_value() != forcing.has_value()) {
        throw_data("a simulated mean needs both mean parameters and a forcing series");
    }
    if (mean) {
        mean->validate();
        if (!(mean->geometry == geometry)) throw_data("mean model grid does not match");
        if (forcing->n_years() != n_time) {
            throw_data("forcing has " + std::to_string(forcing->n_years()) +
                       " model years, simulation has " + std::to_string(n_time));
        }
    }
}

void sample_spatial(const SpectralBlocks& blocks, NormalStream& rng, std::span<double> field,
                    double* imag_residue) {
    const std::size_t M = blocks.n_lat();
    const std::size_t N = blocks.n_lon();
    const std::size_t H = half_size(N);
    Eigen::MatrixXcd spec(M, H);
    Eigen::VectorXd a(M), b(M);
    for (std::size_t c = 0; c < H; ++c) {
        const auto l = blocks.chol(c).triangularView<Eigen::Lower>();
        if (multiplicity(c, N) == 1) {
            for (std::size_t m = 0; m < M; ++m) a(m) = rng.next();
            Eigen::VectorXd re = l * a;
            re *= std::sqrt(static_cast<double>(N));
            spec.col(c) = re.cast<Complex>();
        } else {
            for (std::size_t m = 0; m < M; ++m) {
                a(m) = rng.next();
                b(m) = rng.next();
            }
            const double s = std::sqrt(0.5 * static_cast<double>(N));
            Eigen::VectorXd re = l * a;
            Eigen::VectorXd im = l * b;
            re *= s;
            im *= s;
            for (std::size_t m = 0; m < M; ++m) spec(m, c) = Complex(re(m), im(m));
        }
    }
    inverse_field(spec, N, field);

    if (imag_residue) {
        Eigen::FFT<double> fft;
        std::vector<Complex> full(N), out;
        double worst = 0.0;
        for (std::size_t m = 0; m < M; ++m) {
            for (std::size_t c = 0; c < N; ++c) {
                full[c] = c < H ? spec(m, c) : std::conj(spec(m, N - c));
            }
            fft.inv(out, full);
            for (std::size_t n = 0; n < N; ++n) worst = std::max(worst, std::abs(out[n].imag()));
        }
        *imag_residue = worst;
    }
}

EnsembleTensor sample(const SimulationSpec& spec, int workers) {
    spec.validate();
    const SpectralBlocks blocks = SpectralBlocks::build(spec.params, spec.geometry, workers);
    EnsembleTensor out(spec.geometry, spec.n_time, spec.n_real);
    out.scenario_id = spec.scenario_id;
    const std::size_t T = spec.n_time;
    parallel_for(spec.n_real * T, workers, [&](std::size_t k) {
        const std::size_t r = k / T;
        const std::size_t t = k % T;
        NormalStream rng(spec.seed, innovation_stream(r, t, T));
        sample_spatial(blocks, rng, out.field(r, t));
    });

    const std::vector<double> phi = spec.params.ar.expand(spec.geometry);
    const std::size_t span_size = out.realization_size();
    parallel_for(spec.n_real, workers, [&](std::size_t r) {
        std::span<double> x(out.values.data() + r * span_size, span_size);
        const auto colored = color(x, phi);
        std::copy(colored.begin(), colored.end(), x.begin());
    });

    if (spec.mean) {
        const EnsembleTensor mu = emulate_mean(*spec.mean, *spec.forcing, spec.mean->regions);
        for (std::size_t r = 0; r < spec.n_real; ++r)
            for (std::size_t i = 0; i < span_size; ++i) out.values[r * span_size + i] += mu.values[i];
        out.co2 = spec.forcing->co2();
        out.units = mu.units;
    } else {
        out.units = "K";
    }
    return out;
}

} // namespace axsym

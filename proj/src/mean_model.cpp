#include "axsym/mean_model.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Dense>

#include "axsym/error.hpp"
#include "axsym/optimize.hpp"
#include "axsym/parallel.hpp"

namespace axsym {

namespace {

constexpr double kTailMass = 1e-10;
constexpr const char* kColumnNames[3] = {"intercept", "s", "g"};

std::string pixel_name(const GridGeometry& g, std::size_t p) {
    return "(lat_index " + std::to_string(p % g.n_lat()) + ", lon_index " +
           std::to_string(p / g.n_lat()) + ")";
}

void check_same_grid(const GridGeometry& a, const GridGeometry& b, const char* what) {
    if (!(a == b)) throw_data(std::string(what) + " grid does not match the data grid");
}

// Sequential Gram-Schmidt on the T x 3 design [1, s, g].
void check_design_rank(const std::vector<DesignRow>& rows) {
    const std::size_t T = rows.size();
    Eigen::MatrixXd x(T, 3);
    for (std::size_t t = 0; t < T; ++t) x.row(t) << 1.0, rows[t].s, rows[t].g;
    if (T < 3) throw_data("mean design needs at least 3 years, got " + std::to_string(T));
    Eigen::MatrixXd q(T, 3);
    for (int j = 0; j < 3; ++j) {
        Eigen::VectorXd v = x.col(j);
        const double norm = v.norm();
        for (int k = 0; k < j; ++k) v -= q.col(k).dot(v) * q.col(k);
        if (v.norm() <= 1e-9 * std::max(norm, 1e-300)) {
            std::string others;
            for (int k = 0; k < j; ++k) others += (k ? ", " : "") + std::string(kColumnNames[k]);
            throw_data(std::string("rank-deficient mean design: column ") + kColumnNames[j] +
                       " is collinear with " + others);
        }
        q.col(j) = v / v.norm();
    }
}

using Vec = std::vector<double>;

void axpy(double a, std::span<const double> x, std::span<double> y) {
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

double dot(std::span<const double> a, std::span<const double> b) {
    long double s = 0.0L;
    for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<long double>(a[i]) * b[i];
    return static_cast<double>(s);
}

} // namespace

Standardization control_statistics(const EnsembleTensor& control) {
    control.validate();
    if (control.n_time < 2) throw_data("control run needs at least 2 years");
    const std::size_t P = control.field_size();
    const double n = static_cast<double>(control.n_time * control.n_real);
    Standardization s;
    s.mean.assign(P, 0.0);
    s.sd.assign(P, 0.0);
    for (std::size_t r = 0; r < control.n_real; ++r)
        for (std::size_t t = 0; t < control.n_time; ++t) {
            const auto f = control.field(r, t);
            for (std::size_t p = 0; p < P; ++p) s.mean[p] += f[p];
        }
    for (auto& m : s.mean) m /= n;
    for (std::size_t r = 0; r < control.n_real; ++r)
        for (std::size_t t = 0; t < control.n_time; ++t) {
            const auto f = control.field(r, t);
            for (std::size_t p = 0; p < P; ++p) s.sd[p] += (f[p] - s.mean[p]) * (f[p] - s.mean[p]);
        }
    for (std::size_t p = 0; p < P; ++p) {
        s.sd[p] = std::sqrt(s.sd[p] / (n - 1.0));
        if (!(s.sd[p] > 0.0)) {
            throw_data("control run has zero standard deviation at pixel " +
                       pixel_name(control.geometry, p));
        }
    }
    return s;
}

EnsembleTensor standardize(const EnsembleTensor& e, const Standardization& s) {
    const std::size_t P = e.field_size();
    if (s.mean.size() != P || s.sd.size() != P) throw_data("standardization size mismatch");
    EnsembleTensor out = e;
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        const std::size_t p = i % P;
        out.values[i] = (e.values[i] - s.mean[p]) / s.sd[p];
    }
    out.units = "standardized";
    return out;
}

EnsembleTensor standardize(const EnsembleTensor& e, const EnsembleTensor& control) {
    check_same_grid(control.geometry, e.geometry, "control");
    return standardize(e, control_statistics(control));
}

EnsembleTensor destandardize(const EnsembleTensor& e, const Standardization& s) {
    const std::size_t P = e.field_size();
    if (s.mean.size() != P || s.sd.size() != P) throw_data("standardization size mismatch");
    EnsembleTensor out = e;
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        const std::size_t p = i % P;
        out.values[i] = e.values[i] * s.sd[p] + s.mean[p];
    }
    out.units = "K";
    return out;
}

std::size_t lag_truncation(double lambda) {
    if (!(lambda > 0.0 && lambda < 1.0)) throw_data("lambda must lie in (0, 1)");
    return static_cast<std::size_t>(std::ceil(std::log(kTailMass) / std::log(lambda)));
}

std::vector<double> lag_weights(double lambda, std::size_t K) {
    std::vector<double> w(K);
    double power = 1.0;
    for (std::size_t i = 0; i < K; ++i) {
        w[i] = power * (1.0 - lambda);
        power *= lambda;
    }
    return w;
}

std::vector<double> lag_weights(double lambda) {
    return lag_weights(lambda, lag_truncation(lambda));
}

ForcingSeries::ForcingSeries(std::vector<double> co2, std::size_t n_years)
    : co2_(std::move(co2)), n_years_(n_years) {
    if (n_years_ == 0) throw_data("forcing series has no model years");
    if (co2_.size() < n_years_) {
        throw_data("forcing series has " + std::to_string(co2_.size()) +
                   " values, fewer than the " + std::to_string(n_years_) + " model years");
    }
    log_.reserve(co2_.size());
    for (std::size_t i = 0; i < co2_.size(); ++i) {
        if (!(co2_[i] > 0.0) || !std::isfinite(co2_[i])) {
            throw_data("CO2 value at index " + std::to_string(i) + " is not positive");
        }
        log_.push_back(std::log(co2_[i]));
    }
}

ForcingSeries::ForcingSeries(std::vector<double> co2) : ForcingSeries(co2, co2.size()) {}

double ForcingSeries::log_co2(long t) const {
    const long idx = static_cast<long>(history()) + t - 1;
    if (idx >= static_cast<long>(log_.size())) {
        throw_data("model year " + std::to_string(t) + " is past the forcing series");
    }
    return log_[static_cast<std::size_t>(std::max(idx, 0L))];
}

DesignRow design_row(const ForcingSeries& f, std::size_t t, double lambda) {
    const auto w = lag_weights(lambda);
    const long lt = static_cast<long>(t);
    DesignRow row;
    row.s = 0.5 * (f.log_co2(lt) + f.log_co2(lt - 1));
    long double g = 0.0L;
    for (std::size_t i = 0; i < w.size(); ++i) {
        g += w[i] * f.log_co2(lt - 2 - static_cast<long>(i));
    }
    row.g = static_cast<double>(g);
    return row;
}

std::vector<DesignRow> design_rows(const ForcingSeries& f, double lambda) {
    const auto w = lag_weights(lambda);
    const std::size_t K = w.size();
    const std::size_t T = f.n_years();
    // logs[j] = log c at model year j - K - 1, for years -K-1..T.
    std::vector<double> logs(T + K + 2);
    for (std::size_t j = 0; j < logs.size(); ++j) {
        logs[j] = f.log_co2(static_cast<long>(j) - static_cast<long>(K) - 1);
    }
    auto at = [&](long t) { return logs[static_cast<std::size_t>(t + static_cast<long>(K) + 1)]; };
    std::vector<DesignRow> rows(T);
    for (std::size_t t = 1; t <= T; ++t) {
        const long lt = static_cast<long>(t);
        rows[t - 1].s = 0.5 * (at(lt) + at(lt - 1));
        long double g = 0.0L;
        for (std::size_t i = 0; i < K; ++i) g += w[i] * at(lt - 2 - static_cast<long>(i));
        rows[t - 1].g = static_cast<double>(g);
    }
    return rows;
}

void MeanModelParams::validate() const {
    const std::size_t P = geometry.n_pixels();
    if (!(lambda > 0.0 && lambda < 1.0)) throw_data("lambda must lie in (0, 1)");
    regions.check_matches(geometry);
    auto check = [&](const std::vector<double>& v, std::size_t n, const char* name, bool optional) {
        if (optional && v.empty()) return;
        if (v.size() != n) {
            throw_data(std::string(name) + " has " + std::to_string(v.size()) +
                       " entries, expected " + std::to_string(n));
        }
        for (double x : v)
            if (std::isinf(x)) throw_data(std::string(name) + " has an infinite entry");
    };
    check(beta0, P, "beta0", false);
    check(beta1, P, "beta1", false);
    check(beta2, regions.n_regions(), "beta2", false);
    check(beta0_sd, P, "beta0_sd", true);
    check(beta1_sd, P, "beta1_sd", true);
    check(beta2_sd, regions.n_regions(), "beta2_sd", true);
    if (!standardization.empty()) {
        if (standardization.mean.size() != P || standardization.sd.size() != P) {
            throw_data("standardization fields do not match the grid");
        }
        for (double s : standardization.sd)
            if (!(s > 0.0)) throw_data("standardization sd must be positive");
    }
}

MeanProblem::MeanProblem(const EnsembleTensor& standardized, const ForcingSeries& forcing,
                         const RegionMap& regions, const CovarianceParams& cov,
                         std::span<const double> noise_scale, const MeanFitOptions& options)
    : geometry_(standardized.geometry),
      regions_(regions),
      forcing_(forcing),
      options_(options),
      P_(standardized.field_size()),
      T_(standardized.n_time),
      R_(static_cast<double>(standardized.n_real)) {
    standardized.validate();
    regions_.check_matches(geometry_);
    cov.validate_for(geometry_);
    if (forcing_.n_years() != T_) {
        throw_data("forcing has " + std::to_string(forcing_.n_years()) + " model years, data has " +
                   std::to_string(T_));
    }
    if (noise_scale.empty()) {
        scale_.assign(P_, 1.0);
    } else {
        if (noise_scale.size() != P_) throw_data("noise scale size does not match the grid");
        scale_.assign(noise_scale.begin(), noise_scale.end());
    }
    blocks_ = SpectralBlocks::build(cov, geometry_, options_.workers);
    phi_ = cov.ar.expand(geometry_);

    logdet_ = blocks_.logdet_total();
    for (double d : scale_) logdet_ -= 2.0 * std::log(d);

    const std::size_t M = geometry_.n_lat();
    const std::size_t N = geometry_.n_lon();
    cov_diag_.assign(P_, 0.0);
    for (std::size_t m = 0; m < M; ++m) {
        double k0 = 0.0;
        for (std::size_t c = 0; c < N; ++c) k0 += blocks_.block(c)(m, m);
        k0 /= static_cast<double>(N);
        for (std::size_t n = 0; n < N; ++n) {
            const std::size_t p = geometry_.pixel(n, m);
            cov_diag_[p] = k0 / (scale_[p] * scale_[p]);
        }
    }

    // Whitened realization average.
    std::vector<double> ybar(T_ * P_, 0.0);
    for (std::size_t r = 0; r < standardized.n_real; ++r) {
        const auto x = standardized.realization(r);
        for (std::size_t i = 0; i < ybar.size(); ++i) ybar[i] += x[i];
    }
    for (auto& v : ybar) v /= R_;
    h_ = ybar;
    for (std::size_t t = 1; t < T_; ++t)
        for (std::size_t p = 0; p < P_; ++p) h_[t * P_ + p] -= phi_[p] * ybar[(t - 1) * P_ + p];
}

std::vector<double> MeanProblem::apply_w(std::span<const double> v) const {
    Vec dv(P_);
    for (std::size_t p = 0; p < P_; ++p) dv[p] = scale_[p] * v[p];
    Vec out = solve_spatial(blocks_, dv);
    for (std::size_t p = 0; p < P_; ++p) out[p] *= R_ * scale_[p];
    return out;
}

std::vector<double> MeanProblem::apply_w_inverse(std::span<const double> v) const {
    Vec dv(P_);
    for (std::size_t p = 0; p < P_; ++p) dv[p] = v[p] / scale_[p];
    Vec out = multiply_spatial(blocks_, dv);
    for (std::size_t p = 0; p < P_; ++p) out[p] /= R_ * scale_[p];
    return out;
}

GlsSolution MeanProblem::solve(double lambda, bool with_sd) const {
    const auto rows = design_rows(forcing_, lambda);
    check_design_rank(rows);
    const std::size_t P = P_;
    const std::size_t T = T_;
    const std::size_t C = regions_.n_regions();

    // x_j(t) for j = intercept, s, g.
    auto x = [&](int j, std::size_t t) {
        return j == 0 ? 1.0 : (j == 1 ? rows[t].s : rows[t].g);
    };
    // Whitened regressor j at year t is x_j(t) I - x_j(t-1) Phi (no lag term at t = 1).
    Eigen::Matrix3d A = Eigen::Matrix3d::Zero();
    Eigen::Matrix3d B = Eigen::Matrix3d::Zero(); // B(j,k) = sum x_j(t-1) x_k(t)
    Eigen::Matrix3d D = Eigen::Matrix3d::Zero(); // D(j,k) = sum x_j(t-1) x_k(t-1)
    for (std::size_t t = 0; t < T; ++t)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k) {
                A(j, k) += x(j, t) * x(k, t);
                if (t > 0) {
                    B(j, k) += x(j, t - 1) * x(k, t);
                    D(j, k) += x(j, t - 1) * x(k, t - 1);
                }
            }

    auto phi_times = [&](std::span<const double> v) {
        Vec out(P);
        for (std::size_t p = 0; p < P; ++p) out[p] = phi_[p] * v[p];
        return out;
    };

    // Normal operator on the pixel coefficients (beta0, beta1), stacked.
    auto apply_j11 = [&](std::span<const double> in) {
        Vec out(2 * P, 0.0);
        for (int k = 0; k < 2; ++k) {
            const auto xk = in.subspan(static_cast<std::size_t>(k) * P, P);
            const Vec w = apply_w(xk);
            const Vec z = apply_w(phi_times(xk));
            const Vec pw = phi_times(w);
            const Vec pz = phi_times(z);
            for (int j = 0; j < 2; ++j) {
                std::span<double> o(out.data() + static_cast<std::size_t>(j) * P, P);
                axpy(A(j, k), w, o);
                axpy(-B(j, k), pw, o);
                axpy(-B(k, j), z, o);
                axpy(D(j, k), pz, o);
            }
        }
        return out;
    };
    // Column j in {0,1} of the coupling to the long-term term, applied to a pixel vector v.
    auto apply_j_g = [&](int j, std::span<const double> v) {
        const Vec w = apply_w(v);
        const Vec z = apply_w(phi_times(v));
        Vec out(P, 0.0);
        axpy(A(j, 2), w, out);
        axpy(-B(j, 2), phi_times(w), out);
        axpy(-B(2, j), z, out);
        axpy(D(j, 2), phi_times(z), out);
        return out;
    };

    // Kronecker preconditioner at the mean AR coefficient.
    double phibar = 0.0;
    for (double f : phi_) phibar += f;
    phibar /= static_cast<double>(P);
    Eigen::Matrix2d kbar;
    for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k)
            kbar(j, k) = A(j, k) - phibar * (B(j, k) + B(k, j)) + phibar * phibar * D(j, k);
    const Eigen::Matrix2d kinv = kbar.inverse();
    auto precondition = [&](std::span<const double> in) {
        const Vec a = apply_w_inverse(in.subspan(0, P));
        const Vec b = apply_w_inverse(in.subspan(P, P));
        Vec out(2 * P);
        for (std::size_t p = 0; p < P; ++p) {
            out[p] = kinv(0, 0) * a[p] + kinv(0, 1) * b[p];
            out[P + p] = kinv(1, 0) * a[p] + kinv(1, 1) * b[p];
        }
        return out;
    };

    std::atomic<std::size_t> iterations{0};
    auto pcg = [&](std::span<const double> rhs) {
        Vec sol(2 * P, 0.0);
        const double bnorm = std::sqrt(dot(rhs, rhs));
        if (bnorm == 0.0) return sol;
        Vec r(rhs.begin(), rhs.end());
        Vec z = precondition(r);
        Vec d = z;
        double rz = dot(r, z);
        double rel = 1.0;
        for (std::size_t it = 0; it < options_.cg_max_iter; ++it) {
            const Vec q = apply_j11(d);
            const double dq = dot(d, q);
            if (!(dq > 0.0)) throw_data("mean design is rank-deficient at some pixel");
            const double a = rz / dq;
            axpy(a, d, sol);
            axpy(-a, q, r);
            ++iterations;
            rel = std::sqrt(dot(r, r)) / bnorm;
            if (rel <= options_.cg_tol) return sol;
            z = precondition(r);
            const double rz_new = dot(r, z);
            const double beta = rz_new / rz;
            rz = rz_new;
            for (std::size_t i = 0; i < d.size(); ++i) d[i] = z[i] + beta * d[i];
        }
        if (rel > 1e-6) {
            throw_numerical("conjugate gradients stalled at relative residual " +
                            std::to_string(rel));
        }
        return sol;
    };

    // Right-hand sides: b_j = W u_j - Phi W v_j.
    Vec b(3 * P, 0.0);
    for (int j = 0; j < 3; ++j) {
        Vec u(P, 0.0), v(P, 0.0);
        for (std::size_t t = 0; t < T; ++t) {
            const std::span<const double> ht(h_.data() + t * P, P);
            axpy(x(j, t), ht, u);
            if (t > 0) axpy(x(j, t - 1), ht, v);
        }
        const Vec wu = apply_w(u);
        const Vec wv = apply_w(v);
        for (std::size_t p = 0; p < P; ++p) b[j * P + p] = wu[p] - phi_[p] * wv[p];
    }
    const std::span<const double> b11(b.data(), 2 * P);
    Eigen::VectorXd b2 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(C));
    for (std::size_t p = 0; p < P; ++p) b2(regions_.region_of(p)) += b[2 * P + p];

    // Coupling columns J12 e_c and the long-term block J22.
    Eigen::MatrixXd j12(2 * P, C);
    Eigen::MatrixXd j22(C, C);
    Eigen::MatrixXd y(2 * P, C);
    Vec y0;
    parallel_for(C + 1, options_.workers, [&](std::size_t c) {
        if (c == C) {
            y0 = pcg(b11);
            return;
        }
        Vec e(P, 0.0);
        for (std::size_t p = 0; p < P; ++p)
            if (regions_.region_of(p) == c) e[p] = 1.0;
        const Vec c0 = apply_j_g(0, e);
        const Vec c1 = apply_j_g(1, e);
        Vec col(2 * P);
        std::copy(c0.begin(), c0.end(), col.begin());
        std::copy(c1.begin(), c1.end(), col.begin() + static_cast<long>(P));
        const Vec w = apply_w(e);
        const Vec z = apply_w(phi_times(e));
        Vec gg(P, 0.0);
        axpy(A(2, 2), w, gg);
        axpy(-B(2, 2), phi_times(w), gg);
        axpy(-B(2, 2), z, gg);
        axpy(D(2, 2), phi_times(z), gg);
        Eigen::VectorXd g22 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(C));
        for (std::size_t p = 0; p < P; ++p) g22(regions_.region_of(p)) += gg[p];
        const Vec yc = pcg(col);
        for (std::size_t i = 0; i < 2 * P; ++i) {
            j12(i, c) = col[i];
            y(i, c) = yc[i];
        }
        j22.col(c) = g22;
    });

    Eigen::MatrixXd schur = j22 - j12.transpose() * y;
    schur = 0.5 * (schur + schur.transpose()).eval();
    Eigen::LLT<Eigen::MatrixXd> llt(schur);
    if (llt.info() != Eigen::Success || llt.matrixLLT().diagonal().minCoeff() <= 0.0) {
        throw_data("rank-deficient mean design: long-term column g is collinear with "
                   "intercept, s within a region");
    }
    const Eigen::Map<const Eigen::VectorXd> y0v(y0.data(), static_cast<Eigen::Index>(2 * P));
    const Eigen::VectorXd beta2 = llt.solve(b2 - j12.transpose() * y0v);
    const Eigen::VectorXd beta11 = y0v - y * beta2;

    GlsSolution sol;
    sol.beta0.assign(beta11.data(), beta11.data() + P);
    sol.beta1.assign(beta11.data() + P, beta11.data() + 2 * P);
    sol.beta2.assign(beta2.data(), beta2.data() + C);

    // Whitened residuals of the realization average.
    long double rss = 0.0L;
    Vec mu_prev(P, 0.0);
    Vec mu(P), resid(P);
    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t p = 0; p < P; ++p) {
            mu[p] = sol.beta0[p] + sol.beta1[p] * rows[t].s +
                    sol.beta2[regions_.region_of(p)] * rows[t].g;
            const double lagged = t > 0 ? phi_[p] * mu_prev[p] : 0.0;
            resid[p] = scale_[p] * (h_[t * P + p] - (mu[p] - lagged));
        }
        rss += R_ * quadratic_form(blocks_, resid);
        std::swap(mu, mu_prev);
    }
    sol.rss = static_cast<double>(rss);
    const double TP = static_cast<double>(T * P);
    sol.loglik = -0.5 * TP * std::log(2.0 * std::numbers::pi) -
                 0.5 * static_cast<double>(T) * (logdet_ - static_cast<double>(P) * std::log(R_)) -
                 0.5 * sol.rss;
    sol.cg_iterations = iterations;

    if (with_sd) {
        const Eigen::MatrixXd sinv = llt.solve(Eigen::MatrixXd::Identity(C, C));
        sol.beta2_sd.resize(C);
        for (std::size_t c = 0; c < C; ++c) sol.beta2_sd[c] = std::sqrt(sinv(c, c));
        const Eigen::MatrixXd ys = y * sinv;
        Vec diag(2 * P);
        if (P <= options_.sd_pixel_limit) {
            parallel_for(2 * P, options_.workers, [&](std::size_t i) {
                Vec e(2 * P, 0.0);
                e[i] = 1.0;
                diag[i] = pcg(e)[i];
            });
        } else {
            sol.sd_approximate = true;
            for (std::size_t p = 0; p < P; ++p) {
                diag[p] = kinv(0, 0) * cov_diag_[p] / R_;
                diag[P + p] = kinv(1, 1) * cov_diag_[p] / R_;
            }
        }
        sol.beta0_sd.resize(P);
        sol.beta1_sd.resize(P);
        for (std::size_t i = 0; i < 2 * P; ++i) {
            const double v = diag[i] + ys.row(static_cast<Eigen::Index>(i))
                                           .dot(y.row(static_cast<Eigen::Index>(i)));
            (i < P ? sol.beta0_sd[i] : sol.beta1_sd[i - P]) = std::sqrt(std::max(v, 0.0));
        }
    }
    return sol;
}

MeanModelParams fit_mean(const EnsembleTensor& standardized, const ForcingSeries& forcing,
                         const RegionMap& regions, const CovarianceParams& cov,
                         std::span<const double> noise_scale, const MeanFitOptions& options) {
    const MeanProblem problem(standardized, forcing, regions, cov, noise_scale, options);
    const auto best = golden_section([&](double l) { return -problem.profile_loglik(l); },
                                     options.lambda_lo, options.lambda_hi, options.lambda_tol);
    MeanModelParams p;
    p.geometry = standardized.geometry;
    p.regions = regions;
    p.lambda = best.x;

    const double h = std::min({1e-3, 0.5 * best.x, 0.5 * (1.0 - best.x)});
    const double lp = problem.profile_loglik(best.x + h);
    const double lm = problem.profile_loglik(best.x - h);
    const double second = (lp - 2.0 * -best.value + lm) / (h * h);
    p.lambda_sd = second < 0.0 ? 1.0 / std::sqrt(-second)
                               : std::numeric_limits<double>::quiet_NaN();

    auto sol = problem.solve(best.x, true);
    p.beta0 = std::move(sol.beta0);
    p.beta1 = std::move(sol.beta1);
    p.beta2 = std::move(sol.beta2);
    p.beta0_sd = std::move(sol.beta0_sd);
    p.beta1_sd = std::move(sol.beta1_sd);
    p.beta2_sd = std::move(sol.beta2_sd);
    p.sd_approximate = sol.sd_approximate;
    p.loglik = sol.loglik;
    return p;
}

std::vector<double> mean_trajectory(const MeanModelParams& p, const ForcingSeries& f) {
    p.validate();
    const auto rows = design_rows(f, p.lambda);
    const std::size_t P = p.geometry.n_pixels();
    std::vector<double> mu(rows.size() * P);
    for (std::size_t t = 0; t < rows.size(); ++t)
        for (std::size_t q = 0; q < P; ++q)
            mu[t * P + q] = p.beta0[q] + p.beta1[q] * rows[t].s +
                            p.beta2[p.regions.region_of(q)] * rows[t].g;
    return mu;
}

EnsembleTensor emulate_mean(const MeanModelParams& p, const ForcingSeries& f,
                            const RegionMap& regions) {
    if (!(regions == p.regions)) throw_data("region map does not match the fitted mean model");
    EnsembleTensor out(p.geometry, f.n_years(), 1);
    out.values = mean_trajectory(p, f);
    out.co2 = f.co2();
    out.units = "standardized";
    if (!p.standardization.empty()) out = destandardize(out, p.standardization);
    return out;
}

std::vector<double> lack_of_fit_index(const EnsembleTensor& truth,
                                      std::span<const double> emulated) {
    const std::size_t P = truth.field_size();
    const std::size_t T = truth.n_time;
    const std::size_t R = truth.n_real;
    if (R < 2) throw_data("lack-of-fit index needs at least 2 realizations");
    if (emulated.size() != T * P) {
        throw_data("emulated mean has " + std::to_string(emulated.size()) + " values, expected " +
                   std::to_string(T * P));
    }
    std::vector<long double> num(P, 0.0L), den(P, 0.0L);
    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t p = 0; p < P; ++p) {
            long double mean = 0.0L;
            for (std::size_t r = 0; r < R; ++r) mean += truth.field(r, t)[p];
            mean /= static_cast<long double>(R);
            for (std::size_t r = 0; r < R; ++r) {
                const long double v = truth.field(r, t)[p];
                num[p] += (v - emulated[t * P + p]) * (v - emulated[t * P + p]);
                den[p] += (v - mean) * (v - mean);
            }
        }
    }
    const long double factor = static_cast<long double>(R) / static_cast<long double>(R - 1);
    std::vector<double> index(P);
    for (std::size_t p = 0; p < P; ++p) {
        if (den[p] == 0.0L) {
            throw_data("lack-of-fit index undefined: truth is constant across realizations at pixel " +
                       pixel_name(truth.geometry, p));
        }
        index[p] = static_cast<double>(num[p] / (factor * den[p]));
    }
    return index;
}

} // namespace axsym

#include "axsym/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "axsym/parallel.hpp"

namespace axsym {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double safe_eval(const Objective& f, std::span<const double> x) {
    const double v = f(x);
    return std::isfinite(v) ? v : kInf;
}

struct Simplex {
    std::vector<std::vector<double>> x;
    std::vector<double> f;
};

OptimizeResult run_once(const Objective& f, const std::vector<double>& x0,
                        const NelderMeadOptions& opt, std::size_t budget) {
    const std::size_t n = x0.size();
    OptimizeResult res;
    Simplex s;
    s.x.assign(n + 1, x0);
    s.f.assign(n + 1, kInf);
    for (std::size_t i = 0; i < n; ++i) {
        const double step = i < opt.steps.size() ? opt.steps[i] : 0.25;
        s.x[i + 1][i] += step;
    }
    parallel_for(n + 1, opt.workers, [&](std::size_t i) { s.f[i] = safe_eval(f, s.x[i]); });
    std::size_t evals = n + 1;

    std::vector<std::size_t> order(n + 1);
    std::vector<double> centroid(n), xr(n), xe(n), xc(n);
    auto point = [&](double coef, const std::vector<double>& worst, std::vector<double>& out) {
        for (std::size_t j = 0; j < n; ++j) out[j] = centroid[j] + coef * (worst[j] - centroid[j]);
    };

    while (true) {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return s.f[a] < s.f[b]; });
        Simplex sorted;
        for (auto i : order) {
            sorted.x.push_back(std::move(s.x[i]));
            sorted.f.push_back(s.f[i]);
        }
        s = std::move(sorted);
        res.trace.push_back(s.f[0]);

        double diameter = 0.0;
        for (std::size_t i = 1; i <= n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                diameter = std::max(diameter, std::abs(s.x[i][j] - s.x[0][j]));
        const double spread = s.f[n] - s.f[0];
        if (spread < opt.f_tol && diameter < opt.x_tol) {
            res.converged = true;
            break;
        }
        if (evals >= budget) break;

        std::fill(centroid.begin(), centroid.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) centroid[j] += s.x[i][j] / static_cast<double>(n);

        point(-1.0, s.x[n], xr);
        const double fr = safe_eval(f, xr);
        ++evals;
        if (fr < s.f[0]) {
            point(-2.0, s.x[n], xe);
            const double fe = safe_eval(f, xe);
            ++evals;
            if (fe < fr) {
                s.x[n] = xe;
                s.f[n] = fe;
            } else {
                s.x[n] = xr;
                s.f[n] = fr;
            }
            continue;
        }
        if (fr < s.f[n - 1]) {
            s.x[n] = xr;
            s.f[n] = fr;
            continue;
        }
        bool shrink = false;
        if (fr < s.f[n]) {
            point(-0.5, s.x[n], xc); // outside contraction
            const double fc = safe_eval(f, xc);
            ++evals;
            if (fc <= fr) {
                s.x[n] = xc;
                s.f[n] = fc;
            } else {
                shrink = true;
            }
        } else {
            point(0.5, s.x[n], xc); // inside contraction
            const double fc = safe_eval(f, xc);
            ++evals;
            if (fc < s.f[n]) {
                s.x[n] = xc;
                s.f[n] = fc;
            } else {
                shrink = true;
            }
        }
        if (shrink) {
            for (std::size_t i = 1; i <= n; ++i)
                for (std::size_t j = 0; j < n; ++j)
                    s.x[i][j] = s.x[0][j] + 0.5 * (s.x[i][j] - s.x[0][j]);
            parallel_for(n, opt.workers, [&](std::size_t i) { s.f[i + 1] = safe_eval(f, s.x[i + 1]); });
            evals += n;
        }
    }
    res.x = s.x[0];
    res.value = s.f[0];
    res.evaluations = evals;
    return res;
}

} // namespace

OptimizeResult nelder_mead(const Objective& f, std::vector<double> x0,
                           const NelderMeadOptions& options) {
    OptimizeResult best = run_once(f, x0, options, options.max_evals);
    for (int k = 0; k < options.restarts && best.evaluations < options.max_evals; ++k) {
        OptimizeResult again = run_once(f, best.x, options, options.max_evals - best.evaluations);
        const bool improved = again.value < best.value - options.f_tol;
        again.evaluations += best.evaluations;
        again.trace.insert(again.trace.begin(), best.trace.begin(), best.trace.end());
        if (again.value <= best.value) {
            best = std::move(again);
        } else {
            best.evaluations = again.evaluations;
        }
        if (!improved) break;
    }
    return best;
}

ScalarOptimum golden_section(const std::function<double(double)>& f, double lo, double hi,
                             double tol) {
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c), fd = f(d);
    std::size_t evals = 2;
    while (b - a > tol) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
        ++evals;
    }
    ScalarOptimum out;
    if (fc < fd) {
        out.x = c;
        out.value = fc;
    } else {
        out.x = d;
        out.value = fd;
    }
    out.evaluations = evals;
    return out;
}

Eigen::MatrixXd finite_difference_hessian(const Objective& f, std::span<const double> x,
                                          double h) {
    const std::size_t n = x.size();
    std::vector<double> p(x.begin(), x.end());
    auto at = [&](std::size_t i, double di, std::size_t j, double dj) {
        p.assign(x.begin(), x.end());
        p[i] += di;
        p[j] += dj;
        return f(p);
    };
    const double f0 = f(x);
    Eigen::MatrixXd hess(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        hess(i, i) = (at(i, h, i, 0.0) - 2.0 * f0 + at(i, -h, i, 0.0)) / (h * h);
        for (std::size_t j = 0; j < i; ++j) {
            const double v = (at(i, h, j, h) - at(i, h, j, -h) - at(i, -h, j, h) + at(i, -h, j, -h)) /
                             (4.0 * h * h);
            hess(i, j) = v;
            hess(j, i) = v;
        }
    }
    return hess;
}

std::vector<double> delta_method_sd(const Eigen::MatrixXd& loglik_hessian,
                                    std::span<const double> jacobian_diagonal) {
    const std::size_t n = jacobian_diagonal.size();
    std::vector<double> sd(n, std::numeric_limits<double>::quiet_NaN());
    const Eigen::MatrixXd info = -loglik_hessian;
    Eigen::LLT<Eigen::MatrixXd> llt(info);
    if (llt.info() != Eigen::Success) return sd;
    const Eigen::MatrixXd cov = llt.solve(Eigen::MatrixXd::Identity(info.rows(), info.cols()));
    for (std::size_t i = 0; i < n; ++i) {
        const double var = cov(i, i);
        if (var > 0.0 && std::isfinite(var)) sd[i] = std::abs(jacobian_diagonal[i]) * std::sqrt(var);
    }
    return sd;
}

} // namespace axsym

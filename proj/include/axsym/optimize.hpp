#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace axsym {

using Objective = std::function<double(std::span<const double>)>;

struct NelderMeadOptions {
    double f_tol = 1e-6;       // spread of objective values over the simplex
    double x_tol = 1e-5;       // simplex diameter (max-norm distance to the best vertex)
    std::size_t max_evals = 2000;
    std::vector<double> steps; // initial simplex offsets per coordinate; default 0.25
    int restarts = 1;          // re-run from the optimum; stops early when nothing improves
    int workers = 1;           // initial simplex and shrink steps evaluate in parallel
};

struct OptimizeResult {
    std::vector<double> x;
    double value = 0.0;
    std::size_t evaluations = 0;
    bool converged = false;
    std::vector<double> trace; // best value after each iteration
};

/// Minimizes f with the Nelder-Mead simplex (reflection 1, expansion 2,
/// contraction 0.5, shrink 0.5). Non-finite values count as +inf.
OptimizeResult nelder_mead(const Objective& f, std::vector<double> x0,
                           const NelderMeadOptions& options = {});

struct ScalarOptimum {
    double x = 0.0;
    double value = 0.0;
    std::size_t evaluations = 0;
};

/// Golden-section minimization on [lo, hi] until the bracket is narrower than tol.
ScalarOptimum golden_section(const std::function<double(double)>& f, double lo, double hi,
                             double tol);

/// Central-difference Hessian with step h in every coordinate.
Eigen::MatrixXd finite_difference_hessian(const Objective& f, std::span<const double> x,
                                          double h);

/**
 * Asymptotic standard deviations from the Hessian of a loglikelihood in a
 * transformed space: sd_i = |d theta_i / d u_i| * sqrt([(-H)^{-1}]_ii).
 * Entries come back NaN when -H is not positive definite.
 */
std::vector<double> delta_method_sd(const Eigen::MatrixXd& loglik_hessian,
                                    std::span<const double> jacobian_diagonal);

} // namespace axsym

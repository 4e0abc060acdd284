#pragma once

#include "trendlab/metrics.hpp"
#include "trendlab/panel.hpp"
#include "trendlab/parallel.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace trendlab {

struct SharpePoint {
    double eta = 0.0;
    double sharpe = 0.0;  // annualized
    double std_error = std::numeric_limits<double>::quiet_NaN();
};

struct SharpeCurve {
    std::vector<SharpePoint> points;
    std::string strategy_tag;

    /// Copy with points sorted by eta; throws ParameterError on duplicate or
    /// out-of-range etas.
    SharpeCurve sorted() const;
    bool has_std_errors() const;
};

struct FitResult {
    std::vector<std::string> names;
    std::vector<double> params;
    double r_squared = std::numeric_limits<double>::quiet_NaN();
    double objective = std::numeric_limits<double>::quiet_NaN();
    std::vector<Interval> ci95;     // empty until a bootstrap is attached
    std::vector<double> residuals;  // empirical - fitted, in input order
    std::vector<double> fitted;
    bool weighted = false;

    double param(const std::string& name) const;
};

struct SharpeFitOptions {
    int grid = 40;
    double lambda_min = 1.0 / 1000.0;
    double lambda_max = 1.0 / 10.0;
    double beta0_min = 0.01;
    double beta0_max = 0.5;
    int n_starts = 5;
    int max_iter = 4000;
    double tol = 1e-12;  // simplex size in log space
};

struct GridPoint {
    double lambda = 0.0;
    double beta0 = 0.0;
    double objective = 0.0;
};

/// (weighted) sum of squared residuals of sqrt(255) S(eta; lambda, beta0,
/// theta) against the curve.
double sharpe_curve_objective(const SharpeCurve& curve, double theta, double lambda,
                              double beta0);

/// The grid scan the multi-start is seeded from, row-major in
/// (lambda, beta0).
std::vector<GridPoint> sharpe_grid_scan(const SharpeCurve& curve, double theta,
                                        const SharpeFitOptions& opts);

/// Least-squares fit of (lambda, beta0). Nelder-Mead in (log lambda,
/// log beta0) from the opts.n_starts best grid points; weighted by 1/se^2
/// when every point carries a standard error. Throws ParameterError with
/// fewer than 4 points or an eta span below 5x, ConvergenceError (grid scan
/// attached) when no start converges.
FitResult fit_sharpe_curve(const SharpeCurve& curve, double theta = 0.0,
                           const SharpeFitOptions& opts = {});

/// Bootstrap CIs for a Sharpe-curve fit. `returns` holds one column of
/// post-warm-up daily returns per curve point, on common dates. Every
/// resample draws one set of stationary-bootstrap rows shared by all
/// columns, recomputes the curve and refits. Percentile intervals, widened
/// to contain the point fit.
std::vector<Interval> bootstrap_sharpe_fit(const SharpeCurve& curve,
                                           const Eigen::MatrixXd& returns, double theta,
                                           const FitResult& point,
                                           const SharpeFitOptions& fit_opts,
                                           const BootstrapOptions& boot_opts,
                                           std::uint64_t seed, Exec exec = Exec::Parallel);

struct ScalingPoint {
    double n_assets = 1.0;
    double mean_sharpe = 0.0;
    double std_sharpe = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> trials;  // optional, enables the bootstrap CI
};

struct ScalingFit {
    FitResult full;     // params S1, rho_sq
    FitResult sqrt_n;   // params S1 of S1 sqrt(N)
    double s_ref_eta = std::numeric_limits<double>::quiet_NaN();
};

/// S1 sqrt(N / (1 + (N-1) rho^2)) by profile least squares over rho^2 in
/// [0, 1] (S1 is linear given rho^2), and the S1 sqrt(N) comparison fit.
/// Weighted by 1/std^2 when every point has a positive std. With trials
/// present, CIs come from resampling trials within each N.
ScalingFit fit_scaling_curve(const std::vector<ScalingPoint>& points, double s_ref_eta,
                             const BootstrapOptions& boot = {}, std::uint64_t seed = 0,
                             Exec exec = Exec::Parallel);

struct SubUniverse {
    std::size_t size = 0;
    std::size_t trial = 0;
    std::vector<std::ptrdiff_t> columns;  // sorted
    ReturnsPanel panel;
};

/// `trials` uniform draws without replacement of each size. Trial k of size
/// n uses derive_seed(derive_seed(derive_seed(seed, kSubUniverse), n), k).
std::vector<SubUniverse> subuniverse_sampler(const ReturnsPanel& panel,
                                             const std::vector<std::size_t>& sizes,
                                             std::size_t trials, std::uint64_t seed);

/// Plot tables: (eta, empirical, fitted) and (N, mean, fitted, fitted_sqrt_n).
void write_sharpe_fit_csv(const SharpeCurve& curve, const FitResult& fit, double theta,
                          const std::string& path);
void write_scaling_fit_csv(const std::vector<ScalingPoint>& points, const ScalingFit& fit,
                           const std::string& path);
/// Key-value text: one "key = value" line per parameter, CI and statistic.
std::string format_fit(const FitResult& fit);

}  // namespace trendlab

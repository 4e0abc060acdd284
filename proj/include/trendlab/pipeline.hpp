#pragma once

#include "trendlab/calibration.hpp"
#include "trendlab/metrics.hpp"
#include "trendlab/panel.hpp"
#include "trendlab/portfolio_engine.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace trendlab {

/// Synthetic universe with uniform noise and trend correlations.
struct UniverseSpec {
    Eigen::Index n_assets = 30;
    double lambda = 1.0 / 180.0;
    double beta0 = 0.032;
    double rho_eps = 0.2;
    double rho_xi = 0.2;
    std::ptrdiff_t days = 34 * 255;
};

/// Simulated with seed derive_seed(seed, kSimulation), dated from
/// kDefaultStartDate.
ReturnsPanel simulate_universe(const UniverseSpec& spec, std::uint64_t seed);

/// 1/20, 1/50, 1/80, 1/100, 1/120, 1/150, 1/180, 1/400, 1/1000.
std::vector<double> default_eta_grid();

struct EtaSweep {
    std::vector<double> etas;
    std::vector<PortfolioSeries> runs;
    std::vector<BacktestReport> reports;
    SharpeCurve curve;        // annualized gross Sharpe per eta
    Eigen::MatrixXd returns;  // post-warm-up gross returns, one column per eta
    std::ptrdiff_t warmup = 0;
};

/// EMA strategies over `etas` on one risk track, with a common warm-up.
/// Report intervals use seed derive_seed(seed, k) for eta k.
EtaSweep run_eta_sweep(const ReturnsPanel& panel, const std::vector<double>& etas,
                       const PortfolioConfig& cfg, const BacktestOptions& opts,
                       const BootstrapOptions& report_boot, std::uint64_t seed,
                       Exec exec = Exec::Parallel);

/// Point fit of the sweep's curve plus bootstrap CIs from its returns.
FitResult fit_sweep(const EtaSweep& sweep, double theta, const SharpeFitOptions& fit_opts,
                    const BootstrapOptions& boot_opts, std::uint64_t seed,
                    Exec exec = Exec::Parallel);

struct ScalingExperiment {
    std::vector<ScalingPoint> points;
    ScalingFit fit;
};

/// Annualized Sharpe of an EMA(eta) strategy on every sampled sub-universe,
/// averaged per size, then fit_scaling_curve. Trials run in parallel.
ScalingExperiment run_scaling_experiment(const ReturnsPanel& panel,
                                         const std::vector<std::size_t>& sizes,
                                         std::size_t trials, double eta,
                                         const PortfolioConfig& cfg, const BacktestOptions& opts,
                                         const BootstrapOptions& fit_boot, std::uint64_t seed,
                                         Exec exec = Exec::Parallel);

/// Annualized theoretical Sharpe on an (eta, theta) grid, one row per eta:
/// column 0 is eta, column 1 + j is theta j.
Eigen::MatrixXd sharpe_theory_table(double lambda, double beta0, const std::vector<double>& etas,
                                    const std::vector<double>& thetas);

}  // namespace trendlab

#pragma once

#include "trendlab/parallel.hpp"
#include "trendlab/portfolio_engine.hpp"
#include "trendlab/rng.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace trendlab {

/// Annualized Sharpe, mean / std * sqrt(255), zero risk-free rate.
/// Throws InsufficientDataError below 2 points and NumericalError on zero
/// variance.
double sharpe(const Eigen::Ref<const Eigen::VectorXd>& daily);

/// Per-step (not annualized) Sharpe; NaN on zero variance.
double sharpe_per_step(const Eigen::Ref<const Eigen::VectorXd>& daily) noexcept;

inline constexpr double kInfiniteHolding = std::numeric_limits<double>::infinity();

/// 2 mean_t(sum_i |w_i|) / mean_t(sum_i |w_i,t - w_i,t-1|) over the given
/// rows; kInfiniteHolding when nothing trades.
double holding_period(const Eigen::Ref<const Eigen::MatrixXd>& weights);
/// Same over the post-warm-up rows of a run.
double holding_period(const PortfolioSeries& s);

/// Pearson correlation of gross daily returns over the rows every run has
/// left warm-up. Runs must share the same dates.
Eigen::MatrixXd strategy_correlation(const std::vector<PortfolioSeries>& runs);

/// One stationary-bootstrap resample of [0, n): blocks start uniformly and
/// end with probability 1/mean_block after each step, wrapping around.
std::vector<Eigen::Index> stationary_bootstrap_indices(Eigen::Index n, double mean_block,
                                                       Engine& engine);

struct BootstrapOptions {
    long block_len = 60;
    long n_resamples = 2000;
    double level = 0.95;
};

struct Interval {
    double low = std::numeric_limits<double>::quiet_NaN();
    double high = std::numeric_limits<double>::quiet_NaN();
};

/// Percentile interval at opts.level for the annualized Sharpe. Resample b
/// uses derive_seed(derive_seed(seed, kBootstrap), b). The interval is
/// widened if needed so it contains the full-sample estimate.
Interval bootstrap_sharpe_ci(const Eigen::Ref<const Eigen::VectorXd>& daily,
                             const BootstrapOptions& opts, std::uint64_t seed,
                             Exec exec = Exec::Parallel);

/// Type-7 sample quantile of `v` (sorted in place).
double quantile(std::vector<double>& v, double prob);

struct BacktestReport {
    std::string label;
    double sharpe_gross = 0.0;
    double sharpe_net = 0.0;
    double holding_period_days = 0.0;
    double vol_realized = 0.0;  // annualized std of gross returns
    long n_days = 0;            // post-warm-up days
    Interval bootstrap_ci;      // on sharpe_gross
};

/// Metrics over the post-warm-up rows. With opts.n_resamples = 0 the
/// interval is left NaN.
BacktestReport make_report(const PortfolioSeries& s, const BootstrapOptions& opts,
                           std::uint64_t seed, Exec exec = Exec::Parallel);

void write_reports_csv(const std::vector<BacktestReport>& reports, const std::string& path);

}  // namespace trendlab

#pragma once

#include "trendlab/matrix_lab.hpp"
#include "trendlab/panel.hpp"
#include "trendlab/parallel.hpp"
#include "trendlab/signal_engine.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace trendlab {

/// Trading days per year.
inline constexpr double kAnnualization = 255.0;

enum class Scheme { ARP, NAIVE, MARKOWITZ };
enum class Rule { Linear, Binary };

const char* to_string(Scheme s);
const char* to_string(Rule r);
Scheme scheme_from_string(const std::string& name);
Rule rule_from_string(const std::string& name);

struct PortfolioConfig {
    Scheme scheme = Scheme::ARP;
    Rule rule = Rule::Linear;
    double smoothing_rho = 1.0 / 20.0;
    double target_vol = 0.10;  // annualized
    double cost_bps = 0.0;     // one-way, on traded notional

    void validate() const;
};

/// K in raw = Sigma^-1 K s: C^{-1/2}, I or C^{-1}.
Eigen::MatrixXd scheme_rotation(const Eigen::MatrixXd& corr, Scheme scheme);

struct PortfolioState {
    Eigen::VectorXd smoothed;  // the smoothed, unnormalized portfolio
    Eigen::VectorXd unit;      // smoothed / sqrt(model risk)
    Eigen::VectorXd weights;   // unit * target_vol / sqrt(255)
    double model_risk = 0.0;   // unit' Sigma C Sigma unit, 1 unless flat
};

/// One rebalancing step with a precomputed rotation.
///   raw      = Sigma^-1 K s          s = phi, or sign(phi) for the binary rule
///   smoothed = (1 - rho) smoothed + rho raw
///   unit     = smoothed / sqrt(smoothed' Sigma C Sigma smoothed)
/// A zero smoothed vector gives zero weights. `names` labels errors.
PortfolioState portfolio_step(const PortfolioState& prev,
                              const Eigen::Ref<const Eigen::VectorXd>& signal,
                              const Eigen::MatrixXd& corr, const Eigen::MatrixXd& rotation,
                              const Eigen::Ref<const Eigen::VectorXd>& sigma,
                              const PortfolioConfig& cfg,
                              const std::vector<std::string>* names = nullptr);

/// Same, computing the rotation from `corr`.
PortfolioState portfolio_step(const PortfolioState& prev,
                              const Eigen::Ref<const Eigen::VectorXd>& signal,
                              const CorrEstimate& corr, const VolEstimate& vol,
                              const PortfolioConfig& cfg);

struct Realized {
    double gross = 0.0;
    double net = 0.0;
    double turnover = 0.0;
};

/// gross = w_new' r, cost = cost_bps 1e-4 sum |w_new - w_prev|. NaN returns
/// are only allowed where the new weight is zero.
Realized realize(const Eigen::Ref<const Eigen::VectorXd>& w_new,
                 const Eigen::Ref<const Eigen::VectorXd>& w_prev,
                 const Eigen::Ref<const Eigen::VectorXd>& r, const PortfolioConfig& cfg);

struct PortfolioSeries {
    std::string label;
    std::vector<Date> dates;
    std::vector<std::string> instruments;
    Eigen::MatrixXd weights;         // row t: held over day t
    Eigen::VectorXd returns_gross;   // earned on day t
    Eigen::VectorXd returns_net;
    Eigen::VectorXd turnover;        // sum |w_t - w_{t-1}|
    Eigen::VectorXd realized_vol;    // trailing 60-day, annualized
    Eigen::VectorXd model_risk;      // unit-risk check of the weights held on day t
    std::ptrdiff_t warmup = 0;       // rows excluded from metrics

    std::ptrdiff_t n_days() const noexcept { return returns_gross.size(); }
    /// Rows [warmup, T) of a column vector.
    Eigen::VectorXd after_warmup(const Eigen::VectorXd& v) const;
};

void write_portfolio_csv(const PortfolioSeries& s, const std::string& path);

struct BacktestOptions {
    double vol_span = 40.0;
    double corr_span = 750.0;
    Cleaning cleaning = Cleaning::Clip;
    /// Days of history before an instrument may hold a position.
    long instrument_warmup = 5 * kMinCorrWeeks;
};

/// Volatilities and weekly correlation snapshots for one panel, shared by
/// every strategy run on it. Built causally: row t uses returns through t.
struct RiskTrack {
    struct Snapshot {
        std::ptrdiff_t first_day = 0;            // applies from this day on
        std::vector<Eigen::Index> members;       // eligible instruments
        Eigen::MatrixXd corr;                    // cleaned, over members
        Eigen::MatrixXd rot_arp;                 // C^{-1/2}
        Eigen::MatrixXd rot_markowitz;           // C^{-1}
    };

    Eigen::MatrixXd sigma;  // T x N, NaN until seeded
    std::vector<Snapshot> snapshots;
    std::vector<std::size_t> snapshot_of_day;  // index into snapshots, per day
    BacktestOptions options;

    static RiskTrack build(const ReturnsPanel& panel, const BacktestOptions& opts);
    const Snapshot& at(std::ptrdiff_t t) const { return snapshots[snapshot_of_day[t]]; }
};

/// Rows needed before an indicator is trusted, ceil(3 * timescale).
std::ptrdiff_t signal_warmup(const IndicatorSpec& spec);

/// Daily backtest of one indicator. Weights set from data through day t are
/// held on day t+1. `warmup` rows are flagged for exclusion from metrics.
PortfolioSeries run_strategy(const ReturnsPanel& panel, const RiskTrack& risk,
                             const IndicatorSpec& spec, const PortfolioConfig& cfg,
                             std::ptrdiff_t warmup);

/// Same with precomputed signals (T x N, NaN where undefined).
PortfolioSeries run_strategy(const ReturnsPanel& panel, const RiskTrack& risk,
                             const Eigen::MatrixXd& signals, std::ptrdiff_t signal_warm,
                             const PortfolioConfig& cfg, std::ptrdiff_t warmup,
                             std::string label);

/// One run per spec over the same panel and risk track. Runs are
/// independent and go in parallel unless exec is Serial.
std::vector<PortfolioSeries> run_sweep(const ReturnsPanel& panel, const RiskTrack& risk,
                                       const std::vector<IndicatorSpec>& specs,
                                       const PortfolioConfig& cfg, std::ptrdiff_t warmup,
                                       Exec exec = Exec::Parallel);

/// Common warm-up for a sweep: max of the correlation span and every
/// spec's signal warm-up.
std::ptrdiff_t sweep_warmup(const std::vector<IndicatorSpec>& specs, const BacktestOptions& opts);

}  // namespace trendlab

#include "trendlab/metrics.hpp"

#include "trendlab/error.hpp"
#include "trendlab/panel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace trendlab {

double sharpe(const Eigen::Ref<const Eigen::VectorXd>& daily) {
    if (daily.size() < 2) throw InsufficientDataError("sharpe needs at least 2 returns");
    if (!daily.allFinite()) throw DataError("sharpe: non-finite return");
    const double m = daily.mean();
    const double v = (daily.array() - m).square().sum() / static_cast<double>(daily.size() - 1);
    if (!(v > 0.0)) throw NumericalError("sharpe: zero variance");
    return m / std::sqrt(v) * std::sqrt(kAnnualization);
}

double sharpe_per_step(const Eigen::Ref<const Eigen::VectorXd>& daily) noexcept {
    const auto n = daily.size();
    if (n < 2) return std::numeric_limits<double>::quiet_NaN();
    const double m = daily.mean();
    const double v = (daily.array() - m).square().sum() / static_cast<double>(n - 1);
    return v > 0.0 ? m / std::sqrt(v) : std::numeric_limits<double>::quiet_NaN();
}

double holding_period(const Eigen::Ref<const Eigen::MatrixXd>& weights) {
    const auto T = weights.rows();
    if (T < 2) throw InsufficientDataError("holding_period needs at least 2 days of weights");
    const double gross = weights.cwiseAbs().sum() / static_cast<double>(T);
    const double traded = (weights.bottomRows(T - 1) - weights.topRows(T - 1)).cwiseAbs().sum() /
                          static_cast<double>(T - 1);
    if (!(traded > 0.0)) return kInfiniteHolding;
    return 2.0 * gross / traded;
}

double holding_period(const PortfolioSeries& s) {
    return holding_period(s.weights.bottomRows(s.weights.rows() - s.warmup));
}

Eigen::MatrixXd strategy_correlation(const std::vector<PortfolioSeries>& runs) {
    if (runs.empty()) throw ParameterError("strategy_correlation: no runs");
    std::ptrdiff_t start = 0;
    for (const auto& r : runs) {
        if (r.dates != runs.front().dates)
            throw DataError("strategy_correlation: runs '" + runs.front().label + "' and '" +
                            r.label + "' are not on the same dates");
        start = std::max(start, r.warmup);
    }
    const auto T = runs.front().n_days() - start;
    if (T < 2) throw InsufficientDataError("strategy_correlation: fewer than 2 common days");
    const auto k = static_cast<Eigen::Index>(runs.size());
    Eigen::MatrixXd x(T, k);
    for (Eigen::Index j = 0; j < k; ++j) x.col(j) = runs[j].returns_gross.tail(T);
    x.rowwise() -= x.colwise().mean();
    Eigen::MatrixXd cov = x.transpose() * x;
    Eigen::VectorXd sd = cov.diagonal().cwiseSqrt();
    for (Eigen::Index j = 0; j < k; ++j)
        if (!(sd(j) > 0.0))
            throw NumericalError("strategy_correlation: run '" + runs[j].label +
                                 "' has zero variance");
    Eigen::MatrixXd c = sd.cwiseInverse().asDiagonal() * cov * sd.cwiseInverse().asDiagonal();
    c.diagonal().setOnes();
    return c;
}

std::vector<Eigen::Index> stationary_bootstrap_indices(Eigen::Index n, double mean_block,
                                                       Engine& engine) {
    if (n < 1) throw ParameterError("bootstrap: empty series");
    if (!(mean_block >= 1.0)) throw ParameterError("bootstrap: mean block length must be >= 1");
    std::uniform_int_distribution<Eigen::Index> start(0, n - 1);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double p_new = 1.0 / mean_block;
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
    Eigen::Index cur = start(engine);
    for (auto& i : idx) {
        i = cur;
        cur = unif(engine) < p_new ? start(engine) : (cur + 1) % n;
    }
    return idx;
}

double quantile(std::vector<double>& v, double prob) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const double h = prob * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

Interval bootstrap_sharpe_ci(const Eigen::Ref<const Eigen::VectorXd>& daily,
                             const BootstrapOptions& opts, std::uint64_t seed, Exec exec) {
    if (opts.n_resamples <= 0) throw ParameterError("bootstrap: n_resamples must be positive");
    if (opts.block_len <= 0) throw ParameterError("bootstrap: block_len must be positive");
    if (!(opts.level > 0.0 && opts.level < 1.0)) throw ParameterError("bootstrap: level in (0,1)");
    if (daily.size() < 10 * opts.block_len)
        throw InsufficientDataError("bootstrap: series of " + std::to_string(daily.size()) +
                                    " points is shorter than 10 block lengths (" +
                                    std::to_string(10 * opts.block_len) + ")");
    const double point = sharpe(daily);
    const Eigen::VectorXd data = daily;
    const std::uint64_t root = derive_seed(seed, stream::kBootstrap);
    auto stats = map_indexed<double>(
        static_cast<std::size_t>(opts.n_resamples),
        [&](std::size_t b) {
            Engine eng = make_engine(derive_seed(root, b));
            const auto idx =
                stationary_bootstrap_indices(data.size(), static_cast<double>(opts.block_len), eng);
            Eigen::VectorXd x(data.size());
            for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = data(idx[static_cast<std::size_t>(i)]);
            return sharpe_per_step(x) * std::sqrt(kAnnualization);
        },
        exec);
    std::erase_if(stats, [](double s) { return !std::isfinite(s); });
    if (stats.empty()) throw NumericalError("bootstrap: every resample had zero variance");
    const double alpha = 0.5 * (1.0 - opts.level);
    Interval ci{quantile(stats, alpha), quantile(stats, 1.0 - alpha)};
    ci.low = std::min(ci.low, point);
    ci.high = std::max(ci.high, point);
    return ci;
}

BacktestReport make_report(const PortfolioSeries& s, const BootstrapOptions& opts,
                           std::uint64_t seed, Exec exec) {
    BacktestReport rep;
    rep.label = s.label;
    const Eigen::VectorXd gross = s.after_warmup(s.returns_gross);
    const Eigen::VectorXd net = s.after_warmup(s.returns_net);
    rep.n_days = static_cast<long>(gross.size());
    if (gross.size() < 2)
        throw InsufficientDataError("run '" + s.label + "' has fewer than 2 days after warm-up");
    const double m = gross.mean();
    rep.vol_realized = std::sqrt((gross.array() - m).square().sum() /
                                 static_cast<double>(gross.size() - 1) * kAnnualization);
    rep.sharpe_gross = sharpe_per_step(gross) * std::sqrt(kAnnualization);
    rep.sharpe_net = sharpe_per_step(net) * std::sqrt(kAnnualization);
    rep.holding_period_days = holding_period(s);
    if (opts.n_resamples > 0 && rep.vol_realized > 0.0)
        rep.bootstrap_ci = bootstrap_sharpe_ci(gross, opts, seed, exec);
    return rep;
}

void write_reports_csv(const std::vector<BacktestReport>& reports, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << "label,sharpe_gross,sharpe_net,holding_period_days,vol_realized,n_days,ci_low,ci_high\n";
    for (const auto& r : reports)
        out << r.label << ',' << format_double(r.sharpe_gross) << ','
            << format_double(r.sharpe_net) << ',' << format_double(r.holding_period_days) << ','
            << format_double(r.vol_realized) << ',' << r.n_days << ','
            << format_double(r.bootstrap_ci.low) << ',' << format_double(r.bootstrap_ci.high)
            << '\n';
    if (!out) throw DataError("write failed: " + path);
}

}  // namespace trendlab

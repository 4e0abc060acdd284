#include "trendlab/pipeline.hpp"

#include "trendlab/closed_forms.hpp"
#include "trendlab/error.hpp"
#include "trendlab/process_model.hpp"
#include "trendlab/rng.hpp"

#include <cmath>
#include <numeric>

namespace trendlab {

ReturnsPanel simulate_universe(const UniverseSpec& spec, std::uint64_t seed) {
    if (spec.n_assets < 1) throw ParameterError("universe needs at least one asset");
    if (spec.days < 1) throw ParameterError("universe needs at least one day");
    const auto params = ProcessParams::from_beta0(spec.lambda, spec.beta0,
                                                  uniform_correlation(spec.n_assets, spec.rho_eps),
                                                  uniform_correlation(spec.n_assets, spec.rho_xi));
    const auto path =
        simulate(params, spec.days, std::nullopt, derive_seed(seed, stream::kSimulation));
    return make_panel(path.returns, Date{kDefaultStartDate});
}

std::vector<double> default_eta_grid() {
    std::vector<double> out;
    for (double n : {20.0, 50.0, 80.0, 100.0, 120.0, 150.0, 180.0, 400.0, 1000.0})
        out.push_back(1.0 / n);
    return out;
}

EtaSweep run_eta_sweep(const ReturnsPanel& panel, const std::vector<double>& etas,
                       const PortfolioConfig& cfg, const BacktestOptions& opts,
                       const BootstrapOptions& report_boot, std::uint64_t seed, Exec exec) {
    if (etas.empty()) throw ParameterError("eta grid is empty");
    std::vector<IndicatorSpec> specs;
    for (double eta : etas) specs.push_back(IndicatorSpec::ema(eta));
    EtaSweep out;
    out.etas = etas;
    out.warmup = sweep_warmup(specs, opts);
    if (out.warmup + 2 > panel.n_days())
        throw InsufficientDataError("panel of " + std::to_string(panel.n_days()) +
                                    " days is shorter than the sweep warm-up (" +
                                    std::to_string(out.warmup) + " days)");
    const RiskTrack risk = RiskTrack::build(panel, opts);
    out.runs = run_sweep(panel, risk, specs, cfg, out.warmup, exec);
    const auto T = panel.n_days() - out.warmup;
    out.returns.resize(T, static_cast<Eigen::Index>(etas.size()));
    out.curve.strategy_tag = std::string(to_string(cfg.scheme)) + "/" + to_string(cfg.rule);
    for (std::size_t k = 0; k < etas.size(); ++k) {
        const auto& run = out.runs[k];
        out.returns.col(static_cast<Eigen::Index>(k)) = run.returns_gross.tail(T);
        out.reports.push_back(make_report(run, report_boot, derive_seed(seed, k), exec));
        out.curve.points.push_back({etas[k], out.reports.back().sharpe_gross});
    }
    return out;
}

FitResult fit_sweep(const EtaSweep& sweep, double theta, const SharpeFitOptions& fit_opts,
                    const BootstrapOptions& boot_opts, std::uint64_t seed, Exec exec) {
    FitResult fit = fit_sharpe_curve(sweep.curve, theta, fit_opts);
    if (boot_opts.n_resamples > 0)
        fit.ci95 = bootstrap_sharpe_fit(sweep.curve, sweep.returns, theta, fit, fit_opts,
                                        boot_opts, seed, exec);
    return fit;
}

ScalingExperiment run_scaling_experiment(const ReturnsPanel& panel,
                                         const std::vector<std::size_t>& sizes,
                                         std::size_t trials, double eta,
                                         const PortfolioConfig& cfg, const BacktestOptions& opts,
                                         const BootstrapOptions& fit_boot, std::uint64_t seed,
                                         Exec exec) {
    const auto subs = subuniverse_sampler(panel, sizes, trials, seed);
    const IndicatorSpec spec = IndicatorSpec::ema(eta);
    const std::ptrdiff_t warmup = sweep_warmup({spec}, opts);
    const auto sharpes = map_indexed<double>(
        subs.size(),
        [&](std::size_t i) {
            const RiskTrack risk = RiskTrack::build(subs[i].panel, opts);
            const auto run = run_strategy(subs[i].panel, risk, spec, cfg, warmup);
            return sharpe(run.after_warmup(run.returns_gross));
        },
        exec);
    ScalingExperiment out;
    for (std::size_t s = 0; s < sizes.size(); ++s) {
        ScalingPoint p;
        p.n_assets = static_cast<double>(sizes[s]);
        p.trials.assign(sharpes.begin() + static_cast<std::ptrdiff_t>(s * trials),
                        sharpes.begin() + static_cast<std::ptrdiff_t>((s + 1) * trials));
        const double n = static_cast<double>(trials);
        p.mean_sharpe = std::accumulate(p.trials.begin(), p.trials.end(), 0.0) / n;
        if (trials > 1) {
            double ss = 0.0;
            for (double v : p.trials) ss += (v - p.mean_sharpe) * (v - p.mean_sharpe);
            p.std_sharpe = std::sqrt(ss / (n - 1.0));
        }
        out.points.push_back(std::move(p));
    }
    // unweighted like the curve fit; the spread stays in the table
    std::vector<ScalingPoint> unweighted = out.points;
    for (auto& p : unweighted) p.std_sharpe = std::numeric_limits<double>::quiet_NaN();
    out.fit = fit_scaling_curve(unweighted, eta, fit_boot, seed, exec);
    return out;
}

Eigen::MatrixXd sharpe_theory_table(double lambda, double beta0, const std::vector<double>& etas,
                                    const std::vector<double>& thetas) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(etas.size()),
                        static_cast<Eigen::Index>(thetas.size()) + 1);
    for (std::size_t i = 0; i < etas.size(); ++i) {
        out(static_cast<Eigen::Index>(i), 0) = etas[i];
        for (std::size_t j = 0; j < thetas.size(); ++j) {
            TheoryParams tp;
            tp.lambda = lambda;
            tp.beta0 = beta0;
            tp.eta = etas[i];
            tp.theta = thetas[j];
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j) + 1) =
                sharpe_grebenkov_annualized(tp);
        }
    }
    return out;
}

}  // namespace trendlab

#include "trendlab/cli.hpp"

#include "trendlab/calibration.hpp"
#include "trendlab/closed_forms.hpp"
#include "trendlab/concordance.hpp"
#include "trendlab/error.hpp"
#include "trendlab/metrics.hpp"
#include "trendlab/pipeline.hpp"
#include "trendlab/process_model.hpp"
#include "trendlab/signal_engine.hpp"

#include <CLI11.hpp>
#include <omp.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>

namespace trendlab::cli {
namespace {

namespace fs = std::filesystem;

struct Common {
    std::string out_dir = "out";
    std::uint64_t seed = 20240601;
    int threads = 0;
};

struct UniverseOpts {
    std::string data;
    long assets = 30;
    double lambda = 1.0 / 180.0;
    double beta0 = 0.032;
    double rho_eps = 0.2;
    double rho_xi = 0.2;
    double years = 34.0;
};

struct StrategyOpts {
    std::string scheme = "ARP";
    std::string rule = "linear";
    double smoothing = 1.0 / 20.0;
    double target_vol = 0.10;
    double cost_bps = 0.0;
    double vol_span = 40.0;
    double corr_span = 750.0;
    std::string cleaning = "clip";
    long instrument_warmup = 5 * kMinCorrWeeks;
};

struct BootOpts {
    long block = 60;
    long resamples = 2000;
};

void add_universe(CLI::App* app, UniverseOpts& u) {
    app->add_option("--data", u.data, "returns CSV (date,<instrument>,...); simulated if empty");
    app->add_option("--assets", u.assets, "simulated universe size")->check(CLI::PositiveNumber);
    app->add_option("--lambda", u.lambda, "simulated trend decay per day");
    app->add_option("--beta0", u.beta0, "simulated normalized trend strength");
    app->add_option("--rho-eps", u.rho_eps, "uniform noise correlation");
    app->add_option("--rho-xi", u.rho_xi, "uniform trend-innovation correlation");
    app->add_option("--years", u.years, "simulated length in years of 255 days")
        ->check(CLI::PositiveNumber);
}

void add_strategy(CLI::App* app, StrategyOpts& s) {
    app->add_option("--scheme", s.scheme, "ARP, NAIVE or MARKOWITZ");
    app->add_option("--rule", s.rule, "linear or binary");
    app->add_option("--smoothing", s.smoothing, "portfolio smoothing rho");
    app->add_option("--target-vol", s.target_vol, "annualized volatility target");
    app->add_option("--cost-bps", s.cost_bps, "one-way cost on traded notional, bps");
    app->add_option("--vol-span", s.vol_span, "volatility EMA span, days");
    app->add_option("--corr-span", s.corr_span, "correlation EMA span, days");
    app->add_option("--cleaning", s.cleaning, "none, clip or shrink");
    app->add_option("--instrument-warmup", s.instrument_warmup,
                    "days of history before an instrument trades");
}

void add_boot(CLI::App* app, BootOpts& b) {
    app->add_option("--block", b.block, "mean block length of the stationary bootstrap");
    app->add_option("--resamples", b.resamples, "bootstrap resamples (0 disables)");
}

PortfolioConfig portfolio_config(const StrategyOpts& s) {
    PortfolioConfig c;
    c.scheme = scheme_from_string(s.scheme);
    c.rule = rule_from_string(s.rule);
    c.smoothing_rho = s.smoothing;
    c.target_vol = s.target_vol;
    c.cost_bps = s.cost_bps;
    c.validate();
    return c;
}

BacktestOptions backtest_options(const StrategyOpts& s) {
    BacktestOptions o;
    o.vol_span = s.vol_span;
    o.corr_span = s.corr_span;
    o.cleaning = cleaning_from_string(s.cleaning);
    o.instrument_warmup = s.instrument_warmup;
    if (!(o.vol_span >= 1.0) || !(o.corr_span >= 5.0))
        throw ParameterError("vol-span must be >= 1 and corr-span >= 5");
    return o;
}

BootstrapOptions bootstrap_options(const BootOpts& b) {
    BootstrapOptions o;
    o.block_len = b.block;
    o.n_resamples = b.resamples;
    if (b.resamples < 0) throw ParameterError("resamples must be >= 0");
    return o;
}

UniverseSpec universe_spec(const UniverseOpts& u) {
    UniverseSpec s;
    s.n_assets = u.assets;
    s.lambda = u.lambda;
    s.beta0 = u.beta0;
    s.rho_eps = u.rho_eps;
    s.rho_xi = u.rho_xi;
    s.days = static_cast<std::ptrdiff_t>(std::llround(u.years * kAnnualization));
    return s;
}

ReturnsPanel load_panel(const UniverseOpts& u, std::uint64_t seed) {
    if (!u.data.empty()) {
        if (!fs::exists(u.data)) throw DataError("data file not found: " + u.data);
        return ingest_csv(u.data);
    }
    return simulate_universe(universe_spec(u), seed);
}

std::vector<double> etas_from_timescales(const std::vector<double>& ts) {
    if (ts.empty()) throw ParameterError("timescale grid is empty");
    std::vector<double> out;
    for (double t : ts) {
        if (!(t >= 1.0)) throw ParameterError("timescales must be >= 1 day");
        out.push_back(1.0 / t);
    }
    return out;
}

std::string stem(const std::string& label) {
    std::string s;
    for (char c : label) s += std::isalnum(static_cast<unsigned char>(c)) ? c : '_';
    while (!s.empty() && s.back() == '_') s.pop_back();
    return s;
}

class Table {
public:
    explicit Table(const fs::path& path) : path_(path), out_(path) {
        if (!out_) throw DataError("cannot write " + path.string());
    }
    Table& header(const std::vector<std::string>& cols) {
        for (std::size_t i = 0; i < cols.size(); ++i) out_ << (i ? "," : "") << cols[i];
        out_ << '\n';
        return *this;
    }
    Table& row(const std::vector<double>& vals) {
        for (std::size_t i = 0; i < vals.size(); ++i)
            out_ << (i ? "," : "") << format_double(vals[i]);
        out_ << '\n';
        return *this;
    }
    Table& row(const std::string& first, const std::vector<double>& vals) {
        out_ << first;
        for (double v : vals) out_ << ',' << format_double(v);
        out_ << '\n';
        return *this;
    }
    ~Table() = default;

private:
    fs::path path_;
    std::ofstream out_;
};

SharpeCurve read_sharpe_curve(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("curve file not found: " + path);
    SharpeCurve c;
    std::string line;
    std::getline(in, line);
    long lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> v;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t used = 0;
                v.push_back(std::stod(cell, &used));
                if (used != cell.size()) throw std::invalid_argument(cell);
            } catch (const std::exception&) {
                throw DataError(path + ":" + std::to_string(lineno) + ": unparseable cell '" +
                                cell + "'");
            }
        }
        if (v.size() < 2)
            throw DataError(path + ":" + std::to_string(lineno) + ": expected eta,sharpe[,std_error]");
        c.points.push_back({v[0], v[1], v.size() > 2 ? v[2] : std::nan("")});
    }
    return c;
}

std::vector<ScalingPoint> read_scaling_points(const std::string& path) {
    const auto curve = read_sharpe_curve(path);  // same three-column layout
    std::vector<ScalingPoint> out;
    for (const auto& p : curve.points) out.push_back({p.eta, p.sharpe, p.std_error, {}});
    return out;
}

// ---- commands -------------------------------------------------------------------

struct SimulateOpts {
    UniverseOpts universe;
    long burn_in = -1;
};

std::vector<std::string> cmd_simulate(const Common& c, const SimulateOpts& o, std::ostream& out) {
    const auto spec = universe_spec(o.universe);
    const auto params = ProcessParams::from_beta0(spec.lambda, spec.beta0,
                                                  uniform_correlation(spec.n_assets, spec.rho_eps),
                                                  uniform_correlation(spec.n_assets, spec.rho_xi));
    const auto burn = o.burn_in < 0 ? std::nullopt : std::optional<std::ptrdiff_t>(o.burn_in);
    const auto path = simulate(params, spec.days, burn, derive_seed(c.seed, stream::kSimulation));
    const fs::path dir(c.out_dir);
    write_csv(make_panel(path.returns, Date{kDefaultStartDate}), dir / "returns.csv");
    write_csv(make_panel(path.trend, Date{kDefaultStartDate}), dir / "trend.csv");
    out << "simulated " << spec.days << " days x " << spec.n_assets << " assets\n";
    return {"returns.csv", "trend.csv"};
}

struct BacktestOpts {
    UniverseOpts universe;
    StrategyOpts strategy;
    BootOpts boot;
    std::vector<double> timescales{20, 50, 80, 100, 120, 150, 180, 400, 1000};
    bool series = false;
};

std::vector<std::string> cmd_backtest(const Common& c, const BacktestOpts& o, std::ostream& out) {
    const auto panel = load_panel(o.universe, c.seed);
    const auto sweep = run_eta_sweep(panel, etas_from_timescales(o.timescales),
                                     portfolio_config(o.strategy), backtest_options(o.strategy),
                                     bootstrap_options(o.boot),
                                     derive_seed(c.seed, stream::kBootstrap));
    const fs::path dir(c.out_dir);
    std::vector<std::string> files{"reports.csv", "sharpe_curve.csv", "strategy_correlation.csv"};
    write_reports_csv(sweep.reports, (dir / files[0]).string());
    {
        Table t(dir / files[1]);
        t.header({"eta", "timescale", "sharpe"});
        for (const auto& p : sweep.curve.points) t.row({p.eta, 1.0 / p.eta, p.sharpe});
    }
    std::vector<std::string> labels;
    for (const auto& r : sweep.runs) labels.push_back(r.label);
    write_matrix_csv(strategy_correlation(sweep.runs), labels, dir / files[2]);
    if (o.series)
        for (const auto& r : sweep.runs) {
            files.push_back("series_" + stem(r.label) + ".csv");
            write_portfolio_csv(r, (dir / files.back()).string());
        }
    out << "label,sharpe_gross,holding_period_days,ci_low,ci_high\n";
    for (const auto& r : sweep.reports)
        out << r.label << ',' << format_double(r.sharpe_gross) << ','
            << format_double(r.holding_period_days) << ',' << format_double(r.bootstrap_ci.low)
            << ',' << format_double(r.bootstrap_ci.high) << '\n';
    return files;
}

struct FitSharpeOpts {
    BacktestOpts backtest;
    std::string curve;
    double theta = 0.0;
    long fit_resamples = 1000;
};

std::vector<std::string> cmd_fit_sharpe(const Common& c, const FitSharpeOpts& o,
                                        std::ostream& out) {
    const fs::path dir(c.out_dir);
    SharpeCurve curve;
    FitResult fit;
    std::vector<std::string> files{"sharpe_fit.txt", "sharpe_fit.csv"};
    try {
        if (!o.curve.empty()) {
            curve = read_sharpe_curve(o.curve);
            fit = fit_sharpe_curve(curve, o.theta);
        } else {
            const auto panel = load_panel(o.backtest.universe, c.seed);
            BootstrapOptions report_boot = bootstrap_options(o.backtest.boot);
            report_boot.n_resamples = 0;
            const auto sweep =
                run_eta_sweep(panel, etas_from_timescales(o.backtest.timescales),
                              portfolio_config(o.backtest.strategy),
                              backtest_options(o.backtest.strategy), report_boot, c.seed);
            curve = sweep.curve;
            BootstrapOptions fit_boot = bootstrap_options(o.backtest.boot);
            fit_boot.n_resamples = o.fit_resamples;
            fit = fit_sweep(sweep, o.theta, {}, fit_boot, c.seed);
        }
    } catch (const ConvergenceError& e) {
        std::ofstream g(dir / "grid_scan.csv");
        g << e.diagnostics();
        throw;
    }
    {
        std::ofstream t(dir / files[0]);
        t << "theta = " << format_double(o.theta) << '\n' << format_fit(fit);
        t << "eta_opt = " << format_double([&] {
            TheoryParams tp;
            tp.lambda = fit.params[0];
            tp.beta0 = fit.params[1];
            return eta_opt(tp);
        }()) << '\n';
    }
    write_sharpe_fit_csv(curve, fit, o.theta, (dir / files[1]).string());
    out << format_fit(fit);
    return files;
}

struct FitScalingOpts {
    UniverseOpts universe;
    StrategyOpts strategy;
    BootOpts boot;
    std::string points;
    std::vector<std::size_t> sizes{1, 3, 6, 9, 15, 20, 27};
    std::size_t trials = 20;
    double timescale = 120.0;
};

std::vector<std::string> cmd_fit_scaling(const Common& c, const FitScalingOpts& o,
                                         std::ostream& out) {
    const fs::path dir(c.out_dir);
    std::vector<ScalingPoint> points;
    ScalingFit fit;
    std::vector<std::string> files{"scaling_fit.txt", "scaling_fit.csv"};
    if (!o.points.empty()) {
        points = read_scaling_points(o.points);
        fit = fit_scaling_curve(points, 1.0 / o.timescale);
    } else {
        const auto panel = load_panel(o.universe, c.seed);
        auto exp = run_scaling_experiment(panel, o.sizes, o.trials, 1.0 / o.timescale,
                                          portfolio_config(o.strategy),
                                          backtest_options(o.strategy), bootstrap_options(o.boot),
                                          c.seed);
        points = exp.points;
        fit = exp.fit;
        files.push_back("scaling_trials.csv");
        Table t(dir / files.back());
        t.header({"n_assets", "trial", "sharpe"});
        for (const auto& p : points)
            for (std::size_t k = 0; k < p.trials.size(); ++k)
                t.row({p.n_assets, static_cast<double>(k), p.trials[k]});
    }
    {
        std::ofstream t(dir / files[0]);
        t << "# model S1 sqrt(N / (1 + (N-1) rho_sq))\n" << format_fit(fit.full);
        t << "# model S1 sqrt(N)\n";
        std::istringstream s(format_fit(fit.sqrt_n));
        for (std::string line; std::getline(s, line);) t << "sqrt_n_" << line << '\n';
    }
    write_scaling_fit_csv(points, fit, (dir / files[1]).string());
    out << format_fit(fit.full) << "sqrt_n_objective = " << format_double(fit.sqrt_n.objective)
        << '\n';
    return files;
}

struct SpectrumOpts {
    std::string indicator;
    std::vector<double> timescales;
    std::vector<double> weights;
    std::vector<long> windows;
    bool zero_slope = false;
    long max_lag = 600;
};

std::vector<std::string> cmd_spectrum(const Common& c, const SpectrumOpts& o, std::ostream& out) {
    std::vector<IndicatorSpec> specs;
    if (o.indicator.empty()) {
        specs = {IndicatorSpec::mom(100),
                 IndicatorSpec::sma(100),
                 IndicatorSpec::ema(1.0 / 100.0),
                 IndicatorSpec::sma_cross(20, 120),
                 IndicatorSpec::ema_cross(1.0 / 20.0, 1.0 / 120.0),
                 IndicatorSpec::macd3({1.0 / 30.0, 1.0 / 100.0, 1.0 / 400.0}, {0.0, 1.0, 0.4},
                                      true)};
    } else {
        IndicatorSpec s;
        s.kind = indicator_kind_from_string(o.indicator);
        for (double t : o.timescales) s.etas.push_back(1.0 / t);
        s.weights = o.weights;
        s.windows = o.windows;
        s.zero_slope = o.zero_slope;
        s.validate();
        specs.push_back(s);
    }
    if (o.max_lag < 1) throw ParameterError("max-lag must be >= 1");
    std::vector<Eigen::VectorXd> psi;
    std::vector<std::string> cols{"lag"};
    for (const auto& s : specs) {
        psi.push_back(sensitivity_spectrum(s, o.max_lag));
        cols.push_back(s.label());
    }
    Table t(fs::path(c.out_dir) / "spectrum.csv");
    t.header(cols);
    for (long k = 0; k <= o.max_lag; ++k) {
        std::vector<double> row{static_cast<double>(k)};
        for (const auto& p : psi) row.push_back(p(k));
        t.row(row);
    }
    out << "wrote " << specs.size() << " spectra over " << o.max_lag + 1 << " lags\n";
    return {"spectrum.csv"};
}

struct DecomposeOpts {
    double timescale = 112.0;
    long max_n = 0;
    double delta_max = 4.0;
    long bands = 4000;
};

std::vector<std::string> cmd_decompose(const Common& c, const DecomposeOpts& o,
                                       std::ostream& out) {
    const double eta = 1.0 / o.timescale;
    const long max_n = o.max_n > 0 ? o.max_n : static_cast<long>(std::ceil(40.0 / eta));
    const auto w = ema_to_sma_weights(eta, max_n);
    const auto dens = w.log_density();
    const fs::path dir(c.out_dir);
    {
        Table t(dir / "sma_weights.csv");
        t.header({"n", "weight", "log_density"});
        for (Eigen::Index i = 0; i < w.weights.size(); ++i)
            t.row({static_cast<double>(i + 1), w.weights(i), dens(i)});
    }
    {
        Table t(dir / "bb_quadrature.csv");
        t.header({"sma_value", "quadrature", "abs_error"});
        for (int i = -40; i <= 40; ++i) {
            const double v = 0.1 * i * o.delta_max / 4.0;
            const double q = bb_quadrature(v, o.delta_max, o.bands);
            t.row({v, q, std::abs(q - v)});
        }
    }
    out << "log_density_peak = " << w.log_density_peak() << '\n'
        << "truncated_mass = " << format_double(w.truncated_mass) << '\n';
    return {"sma_weights.csv", "bb_quadrature.csv"};
}

struct VerifyOpts {
    ConcordanceConfig mc;
    long finite_t = 50;
};

std::vector<std::string> cmd_verify_theory(const Common& c, const VerifyOpts& o,
                                           std::ostream& out) {
    ConcordanceConfig cfg = o.mc;
    cfg.seed = c.seed;
    const auto rep = run_concordance(cfg);
    const fs::path dir(c.out_dir);
    {
        Table t(dir / "concordance.csv");
        t.header({"check", "monte_carlo", "std_error", "closed_form", "z", "within_3se"});
        for (const auto& k : rep.checks)
            t.row(k.name, {k.monte_carlo, k.std_error, k.closed_form, k.z(),
                           std::abs(k.z()) <= 3.0 ? 1.0 : 0.0});
    }
    {
        Table t(dir / "concordance_seeds.csv");
        t.header({"seed", "sr_linear", "sr_binary", "sr_voltarget", "sr_sma", "cov_sr", "var_s",
                  "var_r"});
        for (const auto& s : rep.seeds)
            t.row(std::to_string(s.seed), {s.sr_linear, s.sr_binary, s.sr_voltarget, s.sr_sma,
                                           s.cov_sr, s.var_s, s.var_r});
    }
    TheoryParams tp;
    tp.lambda = cfg.lambda;
    tp.beta0 = cfg.beta0;
    tp.eta = cfg.eta;
    {
        Table t(dir / "closed_forms.csv");
        t.header({"formula", "value"});
        t.row("sharpe_grebenkov", {sharpe_grebenkov(tp)});
        t.row("eta_opt", {eta_opt(tp)});
        t.row("beta", {beta_from_beta0(tp.lambda, tp.beta0)});
        t.row("signal_return_cov", {stationary_signal_return_cov(tp)});
        t.row("signal_var", {stationary_signal_var(tp)});
        t.row("signal_var_uncorrected", {stationary_signal_var_uncorrected(tp)});
        t.row("signal_return_corr", {signal_return_correlation(tp)});
        t.row("acar_binary_expected", {acar_binary_stationary(tp).expected});
        t.row("acar_binary_sharpe", {acar_binary_stationary(tp).sharpe});
        t.row("linear_rule_sharpe", {linear_rule_stationary(tp)});
        t.row("ferreira_sma_sharpe",
              {sharpe_ferreira(trend_autocorrelation(tp), cfg.sma_window)});
        t.row("signal_return_cov_t" + std::to_string(o.finite_t),
              {signal_return_cov_at(tp, o.finite_t)});
        t.row("signal_var_t" + std::to_string(o.finite_t), {signal_var_at(tp, o.finite_t)});
    }
    out << "check,monte_carlo,std_error,closed_form,z\n";
    for (const auto& k : rep.checks)
        out << k.name << ',' << format_double(k.monte_carlo) << ',' << format_double(k.std_error)
            << ',' << format_double(k.closed_form) << ',' << format_double(k.z()) << '\n';
    return {"concordance.csv", "concordance_seeds.csv", "closed_forms.csv"};
}

struct CurveOpts {
    double lambda = 0.01;
    double beta0 = 0.1;
    std::vector<double> thetas{0.0, 0.005, 0.01, 0.02};
    double timescale_min = 5.0;
    double timescale_max = 2000.0;
    long points = 200;
};

std::vector<std::string> cmd_sharpe_curve(const Common& c, const CurveOpts& o, std::ostream& out) {
    if (o.points < 2) throw ParameterError("points must be >= 2");
    if (!(o.timescale_min >= 1.0 && o.timescale_max > o.timescale_min))
        throw ParameterError("need 1 <= timescale-min < timescale-max");
    std::vector<double> etas;
    const double a = std::log(1.0 / o.timescale_max), b = std::log(1.0 / o.timescale_min);
    for (long i = 0; i < o.points; ++i)
        etas.push_back(std::exp(a + (b - a) * static_cast<double>(i) / (o.points - 1)));
    const auto tab = sharpe_theory_table(o.lambda, o.beta0, etas, o.thetas);
    std::vector<std::string> cols{"eta"};
    for (double th : o.thetas) cols.push_back("theta_" + format_double(th));
    Table t(fs::path(c.out_dir) / "sharpe_theory.csv");
    t.header(cols);
    for (Eigen::Index i = 0; i < tab.rows(); ++i)
        t.row(std::vector<double>(tab.row(i).data(), tab.row(i).data() + tab.cols()));
    TheoryParams tp;
    tp.lambda = o.lambda;
    tp.beta0 = o.beta0;
    out << "eta_opt = " << format_double(eta_opt(tp)) << " (1/" << format_double(1.0 / eta_opt(tp))
        << ")\n";
    return {"sharpe_theory.csv"};
}

struct VariogramOpts {
    double lambda = 0.011;
    double beta0 = 0.08;
    long days = 1'000'000;
    std::vector<long> lags{1, 2, 5, 10, 20, 50, 100, 200, 500};
    std::string data;
    std::string instrument;
    double standardize_span = 0.0;
};

std::vector<std::string> cmd_variogram(const Common& c, const VariogramOpts& o,
                                       std::ostream& out) {
    Eigen::VectorXd series;
    const bool simulated = o.data.empty();
    if (simulated) {
        const auto path = simulate(ProcessParams::scalar(o.lambda, o.beta0), o.days, std::nullopt,
                                   derive_seed(c.seed, stream::kSimulation));
        series = path.returns.col(0);
    } else {
        const auto panel = ingest_csv(o.data);
        Eigen::Index col = 0;
        if (!o.instrument.empty()) {
            const auto it = std::find(panel.instruments.begin(), panel.instruments.end(),
                                      o.instrument);
            if (it == panel.instruments.end())
                throw DataError("instrument not in data: " + o.instrument);
            col = it - panel.instruments.begin();
        }
        const auto& a = panel.active[static_cast<std::size_t>(col)];
        series = panel.returns.col(col).segment(a.first, a.length());
    }
    if (o.standardize_span > 0.0) series = standardize_by_trailing_vol(series, o.standardize_span);
    std::vector<std::ptrdiff_t> lags(o.lags.begin(), o.lags.end());
    const auto vg = variogram_empirical(series, lags);
    const auto params = ProcessParams::scalar(o.lambda, o.beta0);
    Table t(fs::path(c.out_dir) / "variogram.csv");
    t.header({"lag", "empirical", "std_error", "theoretical"});
    for (const auto& p : vg)
        t.row({static_cast<double>(p.lag), p.value, p.std_error,
               variogram_theoretical(params, p.lag)});
    out << "variogram over " << series.size() << " returns, " << vg.size() << " lags\n";
    return {"variogram.csv"};
}

std::string quote(const std::string& s) {
    std::string q;
    for (char ch : s) q += ch == '"' ? '\'' : (ch == '\n' ? ' ' : ch);
    return '"' + q + '"';
}

// TOML value of one option: what was given, else its default
std::string toml_value(const CLI::Option* opt) {
    std::vector<std::string> vals = opt->count() > 0 ? opt->results() : std::vector<std::string>{};
    if (vals.empty()) {
        const std::string d = opt->get_default_str();
        if (opt->get_type_size() == 0) return d.empty() || d == "false" ? "false" : "true";
        if (!d.empty()) vals = CLI::detail::split_up(d, ',');
    }
    if (opt->get_type_size() == 0) return opt->count() > 0 ? "true" : "false";
    const auto one = [](const std::string& v) {
        char* end = nullptr;
        std::strtod(v.c_str(), &end);
        const bool numeric = !v.empty() && end && *end == '\0';
        return numeric ? v : quote(v);
    };
    if (vals.empty()) return "\"\"";
    const bool list = opt->get_items_expected_max() > 1;
    if (!list) return one(vals.front());
    std::string out = "[";
    for (std::size_t i = 0; i < vals.size(); ++i) out += (i ? "," : "") + one(vals[i]);
    return out + "]";
}

std::string resolved_config(const CLI::App& app, const CLI::App& sub) {
    std::ostringstream os;
    const auto emit = [&](const CLI::App& a) {
        for (const CLI::Option* opt : a.get_options()) {
            const std::string name = opt->get_single_name();
            if (opt->get_lnames().empty() || name == "help" || name == "config" ||
                name == "version")
                continue;
            os << name << '=' << toml_value(opt) << '\n';
        }
    };
    emit(app);
    os << '[' << sub.get_name() << "]\n";
    emit(sub);
    return os.str();
}

void report_error(std::ostream& err, const char* kind, int code, const std::string& msg) {
    err << "error kind=" << kind << " exit=" << code << " message=" << quote(msg) << '\n';
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Trend-following research toolkit: simulation, backtests, closed forms, fits",
                 "trendlab"};
    app.set_config("--config", "", "TOML config file; every manifest.toml is one");
    app.set_version_flag("--version", std::string(version()) + " (" + git_stamp() + ")");
    app.require_subcommand(1);
    app.option_defaults()->always_capture_default();

    Common common;
    app.add_option("--out", common.out_dir, "output directory");
    app.add_option("--seed", common.seed, "root seed of every random stream");
    app.add_option("--threads", common.threads, "OpenMP threads, 0 = runtime default");

    SimulateOpts sim;
    auto* s_sim = app.add_subcommand("simulate", "simulate a correlated trend universe");
    add_universe(s_sim, sim.universe);
    s_sim->add_option("--burn-in", sim.burn_in, "discarded days, -1 = ceil(20/lambda)");

    BacktestOpts bt;
    auto* s_bt = app.add_subcommand("backtest", "EMA strategy sweep over a timescale grid");
    add_universe(s_bt, bt.universe);
    add_strategy(s_bt, bt.strategy);
    add_boot(s_bt, bt.boot);
    s_bt->add_option("--timescales", bt.timescales, "EMA timescales 1/eta, days")->delimiter(',');
    s_bt->add_flag("--series", bt.series, "also write per-run weights and returns");

    FitSharpeOpts fs_;
    auto* s_fs = app.add_subcommand("fit-sharpe", "fit (lambda, beta0) to a Sharpe-vs-eta curve");
    add_universe(s_fs, fs_.backtest.universe);
    add_strategy(s_fs, fs_.backtest.strategy);
    add_boot(s_fs, fs_.backtest.boot);
    s_fs->add_option("--timescales", fs_.backtest.timescales, "EMA timescales 1/eta, days")
        ->delimiter(',');
    s_fs->add_option("--curve", fs_.curve, "CSV eta,sharpe[,std_error]; else run a sweep");
    s_fs->add_option("--theta", fs_.theta, "cost coefficient held fixed in the fit");
    s_fs->add_option("--fit-resamples", fs_.fit_resamples, "bootstrap refits (0 disables)");

    FitScalingOpts sc;
    auto* s_sc = app.add_subcommand("fit-scaling", "fit rho^2 to the Sharpe-vs-N curve");
    add_universe(s_sc, sc.universe);
    add_strategy(s_sc, sc.strategy);
    add_boot(s_sc, sc.boot);
    s_sc->add_option("--points", sc.points, "CSV n_assets,mean[,std]; else run sub-universes");
    s_sc->add_option("--sizes", sc.sizes, "sub-universe sizes")->delimiter(',');
    s_sc->add_option("--trials", sc.trials, "random sub-universes per size");
    s_sc->add_option("--timescale", sc.timescale, "EMA timescale 1/eta, days");

    SpectrumOpts sp;
    auto* s_sp = app.add_subcommand("spectrum", "sensitivity of indicators to past returns");
    s_sp->add_option("--indicator", sp.indicator, "EMA, MACD3, MOM, SMA, EMA_CROSS, SMA_CROSS; "
                                                  "empty writes the standard set");
    s_sp->add_option("--timescales", sp.timescales, "EMA timescales 1/eta")->delimiter(',');
    s_sp->add_option("--weights", sp.weights, "MACD3 weights")->delimiter(',');
    s_sp->add_option("--windows", sp.windows, "window lengths")->delimiter(',');
    s_sp->add_flag("--zero-slope", sp.zero_slope, "MACD3 w1 from the zero-slope constraint");
    s_sp->add_option("--max-lag", sp.max_lag, "last lag written");

    DecomposeOpts dc;
    auto* s_dc = app.add_subcommand("decompose", "EMA as a mixture of SMAs and BB quadrature");
    s_dc->add_option("--timescale", dc.timescale, "EMA timescale 1/eta, days");
    s_dc->add_option("--max-n", dc.max_n, "longest SMA window, 0 = ceil(40/eta)");
    s_dc->add_option("--delta-max", dc.delta_max, "largest band half-width");
    s_dc->add_option("--bands", dc.bands, "quadrature bands");

    VerifyOpts vt;
    auto* s_vt = app.add_subcommand("verify-theory", "Monte Carlo vs closed-form concordance");
    s_vt->add_option("--lambda", vt.mc.lambda, "trend decay per day");
    s_vt->add_option("--beta0", vt.mc.beta0, "normalized trend strength");
    s_vt->add_option("--eta", vt.mc.eta, "EMA smoothing");
    s_vt->add_option("--steps", vt.mc.t_steps, "days per seed");
    s_vt->add_option("--seeds", vt.mc.n_seeds, "independent paths");
    s_vt->add_option("--sma-window", vt.mc.sma_window, "momentum window of the SMA rule");
    s_vt->add_option("--finite-t", vt.finite_t, "t of the finite-time covariances reported");

    CurveOpts cv;
    auto* s_cv = app.add_subcommand("sharpe-curve", "theoretical Sharpe vs eta for several costs");
    s_cv->add_option("--lambda", cv.lambda, "trend decay per day");
    s_cv->add_option("--beta0", cv.beta0, "normalized trend strength");
    s_cv->add_option("--thetas", cv.thetas, "cost coefficients")->delimiter(',');
    s_cv->add_option("--timescale-min", cv.timescale_min, "shortest 1/eta");
    s_cv->add_option("--timescale-max", cv.timescale_max, "longest 1/eta");
    s_cv->add_option("--points", cv.points, "grid points, log-spaced");

    VariogramOpts vg;
    auto* s_vg = app.add_subcommand("variogram", "empirical vs theoretical variogram");
    s_vg->add_option("--lambda", vg.lambda, "trend decay per day");
    s_vg->add_option("--beta0", vg.beta0, "normalized trend strength");
    s_vg->add_option("--days", vg.days, "simulated length");
    s_vg->add_option("--lags", vg.lags, "lags")->delimiter(',');
    s_vg->add_option("--data", vg.data, "returns CSV instead of a simulation");
    s_vg->add_option("--instrument", vg.instrument, "column of --data, default the first");
    s_vg->add_option("--standardize-span", vg.standardize_span,
                     "divide by a trailing EMA volatility of this span first, 0 = off");

    for (auto* sub : app.get_subcommands({})) sub->configurable();

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        report_error(err, "config", 2, e.what());
        return 2;
    }

    std::map<std::string, std::function<std::vector<std::string>()>> commands{
        {"simulate", [&] { return cmd_simulate(common, sim, out); }},
        {"backtest", [&] { return cmd_backtest(common, bt, out); }},
        {"fit-sharpe", [&] { return cmd_fit_sharpe(common, fs_, out); }},
        {"fit-scaling", [&] { return cmd_fit_scaling(common, sc, out); }},
        {"spectrum", [&] { return cmd_spectrum(common, sp, out); }},
        {"decompose", [&] { return cmd_decompose(common, dc, out); }},
        {"verify-theory", [&] { return cmd_verify_theory(common, vt, out); }},
        {"sharpe-curve", [&] { return cmd_sharpe_curve(common, cv, out); }},
        {"variogram", [&] { return cmd_variogram(common, vg, out); }},
    };
    const std::string name = app.get_subcommands().front()->get_name();
    try {
        if (common.threads < 0) throw ParameterError("threads must be >= 0");
        if (common.threads > 0) omp_set_num_threads(common.threads);
        std::error_code ec;
        fs::create_directories(common.out_dir, ec);
        if (ec) throw DataError("cannot create output directory " + common.out_dir);
        Manifest m;
        m.command = name;
        m.outputs = commands.at(name)();
        m.config = resolved_config(app, *app.get_subcommands().front());
        write_manifest(common.out_dir, m);
        return 0;
    } catch (const Error& e) {
        report_error(err, e.kind(), e.exit_code(), std::string(name) + ": " + e.what());
        return e.exit_code();
    } catch (const std::exception& e) {
        report_error(err, "internal", 1, std::string(name) + ": " + e.what());
        return 1;
    }
}

}  // namespace trendlab::cli

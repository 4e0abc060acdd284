#include "trendlab/calibration.hpp"

#include "trendlab/closed_forms.hpp"
#include "trendlab/error.hpp"
#include "trendlab/portfolio_engine.hpp"
#include "trendlab/rng.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iterator>
#include <memory>
#include <numeric>
#include <set>
#include <sstream>

namespace trendlab {
namespace {

constexpr double kHuge = 1e300;

double model_sharpe(double eta, double theta, double lambda, double beta0) {
    TheoryParams tp;
    tp.lambda = lambda;
    tp.beta0 = beta0;
    tp.eta = eta;
    tp.theta = theta;
    return std::sqrt(kAnnualization) * sharpe_grebenkov(tp);
}

double r_squared(const std::vector<double>& y, const std::vector<double>& fit,
                 const std::vector<double>& w) {
    double sw = 0.0, mean = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        sw += w[i];
        mean += w[i] * y[i];
    }
    mean /= sw;
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        ss_res += w[i] * (y[i] - fit[i]) * (y[i] - fit[i]);
        ss_tot += w[i] * (y[i] - mean) * (y[i] - mean);
    }
    return ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : std::numeric_limits<double>::quiet_NaN();
}

struct NmProblem {
    const SharpeCurve* curve;
    double theta;
};

double nm_objective(const gsl_vector* x, void* params) {
    const auto* p = static_cast<const NmProblem*>(params);
    const double lambda = std::exp(gsl_vector_get(x, 0));
    const double beta0 = std::exp(gsl_vector_get(x, 1));
    if (!(lambda <= 1.0) || !std::isfinite(beta0)) return kHuge;
    const double f = sharpe_curve_objective(*p->curve, p->theta, lambda, beta0);
    return std::isfinite(f) ? f : kHuge;
}

struct NmOutcome {
    double lambda = 0.0;
    double beta0 = 0.0;
    double objective = kHuge;
    bool converged = false;
};

NmOutcome nelder_mead(const SharpeCurve& curve, double theta, double lambda0, double beta00,
                      const SharpeFitOptions& opts) {
    NmProblem prob{&curve, theta};
    gsl_multimin_function fn{&nm_objective, 2, &prob};
    std::unique_ptr<gsl_vector, decltype(&gsl_vector_free)> x(gsl_vector_alloc(2),
                                                              &gsl_vector_free);
    std::unique_ptr<gsl_vector, decltype(&gsl_vector_free)> step(gsl_vector_alloc(2),
                                                                 &gsl_vector_free);
    gsl_vector_set(x.get(), 0, std::log(lambda0));
    gsl_vector_set(x.get(), 1, std::log(beta00));
    gsl_vector_set_all(step.get(), 0.1);
    std::unique_ptr<gsl_multimin_fminimizer, decltype(&gsl_multimin_fminimizer_free)> s(
        gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, 2),
        &gsl_multimin_fminimizer_free);
    gsl_multimin_fminimizer_set(s.get(), &fn, x.get(), step.get());
    NmOutcome out;
    for (int it = 0; it < opts.max_iter; ++it) {
        if (gsl_multimin_fminimizer_iterate(s.get()) != GSL_SUCCESS) break;
        if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(s.get()), opts.tol) ==
            GSL_SUCCESS) {
            out.converged = true;
            break;
        }
    }
    out.lambda = std::exp(gsl_vector_get(s->x, 0));
    out.beta0 = std::exp(gsl_vector_get(s->x, 1));
    out.objective = s->fval;
    return out;
}

std::string grid_text(const std::vector<GridPoint>& grid) {
    std::ostringstream os;
    os << "lambda,beta0,objective\n";
    for (const auto& g : grid)
        os << format_double(g.lambda) << ',' << format_double(g.beta0) << ','
           << format_double(g.objective) << '\n';
    return os.str();
}

void widen(Interval& ci, double point) {
    ci.low = std::min(ci.low, point);
    ci.high = std::max(ci.high, point);
}

struct GslHandlerOff {
    GslHandlerOff() { gsl_set_error_handler_off(); }
};
const GslHandlerOff gsl_handler_off;

}  // namespace

SharpeCurve SharpeCurve::sorted() const {
    SharpeCurve c = *this;
    std::sort(c.points.begin(), c.points.end(),
              [](const SharpePoint& a, const SharpePoint& b) { return a.eta < b.eta; });
    for (std::size_t i = 0; i < c.points.size(); ++i) {
        const auto& p = c.points[i];
        if (!(p.eta > 0.0 && p.eta < 1.0))
            throw ParameterError("sharpe curve: eta " + format_double(p.eta) + " outside (0, 1)");
        if (!std::isfinite(p.sharpe))
            throw DataError("sharpe curve: non-finite Sharpe at eta " + format_double(p.eta));
        if (i > 0 && !(p.eta > c.points[i - 1].eta))
            throw ParameterError("sharpe curve: duplicate eta " + format_double(p.eta));
    }
    return c;
}

bool SharpeCurve::has_std_errors() const {
    return !points.empty() && std::all_of(points.begin(), points.end(), [](const SharpePoint& p) {
        return std::isfinite(p.std_error) && p.std_error > 0.0;
    });
}

double FitResult::param(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return params[i];
    throw Error("fit has no parameter " + name);
}

double sharpe_curve_objective(const SharpeCurve& curve, double theta, double lambda,
                              double beta0) {
    const bool weighted = curve.has_std_errors();
    double sse = 0.0;
    for (const auto& p : curve.points) {
        const double r = p.sharpe - model_sharpe(p.eta, theta, lambda, beta0);
        sse += weighted ? r * r / (p.std_error * p.std_error) : r * r;
    }
    return sse;
}

std::vector<GridPoint> sharpe_grid_scan(const SharpeCurve& curve, double theta,
                                        const SharpeFitOptions& opts) {
    if (opts.grid < 2) throw ParameterError("fit: grid must have at least 2 points per axis");
    std::vector<GridPoint> out;
    out.reserve(static_cast<std::size_t>(opts.grid * opts.grid));
    const double ll0 = std::log(opts.lambda_min), ll1 = std::log(opts.lambda_max);
    const double lb0 = std::log(opts.beta0_min), lb1 = std::log(opts.beta0_max);
    for (int i = 0; i < opts.grid; ++i) {
        const double lambda = std::exp(ll0 + (ll1 - ll0) * i / (opts.grid - 1));
        for (int j = 0; j < opts.grid; ++j) {
            const double beta0 = std::exp(lb0 + (lb1 - lb0) * j / (opts.grid - 1));
            out.push_back({lambda, beta0, sharpe_curve_objective(curve, theta, lambda, beta0)});
        }
    }
    return out;
}

FitResult fit_sharpe_curve(const SharpeCurve& input, double theta, const SharpeFitOptions& opts) {
    const SharpeCurve curve = input.sorted();
    if (curve.points.size() < 4)
        throw ParameterError("fit_sharpe_curve: need at least 4 points, got " +
                             std::to_string(curve.points.size()));
    if (curve.points.back().eta < 5.0 * curve.points.front().eta)
        throw ParameterError("fit_sharpe_curve: etas must span at least a factor 5");
    if (!(theta >= 0.0)) throw ParameterError("fit_sharpe_curve: theta must be >= 0");

    auto grid = sharpe_grid_scan(curve, theta, opts);
    std::vector<std::size_t> order(grid.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return grid[a].objective < grid[b].objective;
    });

    NmOutcome best;
    best.lambda = grid[order[0]].lambda;
    best.beta0 = grid[order[0]].beta0;
    best.objective = grid[order[0]].objective;
    bool any_converged = false;
    const auto starts = std::min<std::size_t>(static_cast<std::size_t>(opts.n_starts), grid.size());
    for (std::size_t k = 0; k < starts; ++k) {
        const auto& g = grid[order[k]];
        const NmOutcome r = nelder_mead(curve, theta, g.lambda, g.beta0, opts);
        any_converged = any_converged || r.converged;
        if (r.converged && r.objective < best.objective) best = r;
    }
    if (!any_converged || !std::isfinite(best.objective))
        throw ConvergenceError("fit_sharpe_curve: no simplex start converged", grid_text(grid));

    FitResult fit;
    fit.names = {"lambda", "beta0"};
    fit.params = {best.lambda, best.beta0};
    fit.objective = best.objective;
    fit.weighted = curve.has_std_errors();
    // residuals in the caller's point order
    std::vector<double> y, w;
    for (const auto& p : input.points) {
        const double f = model_sharpe(p.eta, theta, best.lambda, best.beta0);
        fit.fitted.push_back(f);
        fit.residuals.push_back(p.sharpe - f);
        y.push_back(p.sharpe);
        w.push_back(fit.weighted ? 1.0 / (p.std_error * p.std_error) : 1.0);
    }
    fit.r_squared = r_squared(y, fit.fitted, w);
    return fit;
}

std::vector<Interval> bootstrap_sharpe_fit(const SharpeCurve& curve,
                                           const Eigen::MatrixXd& returns, double theta,
                                           const FitResult& point,
                                           const SharpeFitOptions& fit_opts,
                                           const BootstrapOptions& boot_opts,
                                           std::uint64_t seed, Exec exec) {
    if (returns.cols() != static_cast<Eigen::Index>(curve.points.size()))
        throw ParameterError("bootstrap_sharpe_fit: one return column per curve point expected");
    if (boot_opts.n_resamples <= 0) throw ParameterError("bootstrap: n_resamples must be positive");
    if (returns.rows() < 10 * boot_opts.block_len)
        throw InsufficientDataError("bootstrap_sharpe_fit: series shorter than 10 block lengths");
    const std::uint64_t root = derive_seed(seed, stream::kFitBootstrap);
    struct Draw {
        bool ok = false;
        double lambda = 0.0;
        double beta0 = 0.0;
    };
    const auto draws = map_indexed<Draw>(
        static_cast<std::size_t>(boot_opts.n_resamples),
        [&](std::size_t b) {
            Engine eng = make_engine(derive_seed(root, b));
            const auto idx = stationary_bootstrap_indices(
                returns.rows(), static_cast<double>(boot_opts.block_len), eng);
            SharpeCurve c = curve;
            Eigen::VectorXd x(returns.rows());
            for (Eigen::Index j = 0; j < returns.cols(); ++j) {
                for (Eigen::Index i = 0; i < x.size(); ++i)
                    x(i) = returns(idx[static_cast<std::size_t>(i)], j);
                c.points[static_cast<std::size_t>(j)].sharpe =
                    sharpe_per_step(x) * std::sqrt(kAnnualization);
            }
            try {
                const FitResult f = fit_sharpe_curve(c, theta, fit_opts);
                return Draw{true, f.params[0], f.params[1]};
            } catch (const Error&) {
                return Draw{};
            }
        },
        exec);
    std::vector<double> lam, b0;
    for (const auto& d : draws)
        if (d.ok) {
            lam.push_back(d.lambda);
            b0.push_back(d.beta0);
        }
    if (lam.size() < 10) throw NumericalError("bootstrap_sharpe_fit: too few successful refits");
    const double alpha = 0.5 * (1.0 - boot_opts.level);
    std::vector<Interval> ci{{quantile(lam, alpha), quantile(lam, 1.0 - alpha)},
                             {quantile(b0, alpha), quantile(b0, 1.0 - alpha)}};
    widen(ci[0], point.params[0]);
    widen(ci[1], point.params[1]);
    return ci;
}

namespace {

struct ScalingData {
    std::vector<double> n, y, w;
};

double scale_shape(double n, double rho_sq) { return std::sqrt(n / (1.0 + (n - 1.0) * rho_sq)); }

// S1 at fixed rho^2 and the weighted SSE
std::pair<double, double> profile(const ScalingData& d, double rho_sq) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < d.n.size(); ++i) {
        const double f = scale_shape(d.n[i], rho_sq);
        num += d.w[i] * d.y[i] * f;
        den += d.w[i] * f * f;
    }
    const double s1 = num / den;
    double sse = 0.0;
    for (std::size_t i = 0; i < d.n.size(); ++i) {
        const double r = d.y[i] - s1 * scale_shape(d.n[i], rho_sq);
        sse += d.w[i] * r * r;
    }
    return {s1, sse};
}

// returns (S1, rho_sq, sse)
std::array<double, 3> fit_full(const ScalingData& d) {
    constexpr int kGrid = 200;
    int best = 0;
    double best_sse = kHuge;
    for (int k = 0; k <= kGrid; ++k) {
        const double sse = profile(d, static_cast<double>(k) / kGrid).second;
        if (sse < best_sse) {
            best_sse = sse;
            best = k;
        }
    }
    const double lo = std::max(0, best - 1) / static_cast<double>(kGrid);
    const double hi = std::min(kGrid, best + 1) / static_cast<double>(kGrid);
    auto [x, fx] = boost::math::tools::brent_find_minima(
        [&](double r) { return profile(d, r).second; }, lo, hi, 52);
    double rho = static_cast<double>(best) / kGrid;
    if (fx < best_sse) rho = x;
    const auto [s1, sse] = profile(d, rho);
    return {s1, rho, sse};
}

std::pair<double, double> fit_sqrt_n(const ScalingData& d) {
    return profile(d, 0.0);
}

ScalingData scaling_data(const std::vector<ScalingPoint>& pts, bool weighted) {
    ScalingData d;
    for (const auto& p : pts) {
        d.n.push_back(p.n_assets);
        d.y.push_back(p.mean_sharpe);
        d.w.push_back(weighted ? 1.0 / (p.std_sharpe * p.std_sharpe) : 1.0);
    }
    return d;
}

FitResult make_scaling_result(const ScalingData& d, std::vector<std::string> names,
                              std::vector<double> params, double sse, bool weighted,
                              double rho_sq) {
    FitResult f;
    f.names = std::move(names);
    f.params = std::move(params);
    f.objective = sse;
    f.weighted = weighted;
    for (std::size_t i = 0; i < d.n.size(); ++i) {
        const double fit = f.params[0] * scale_shape(d.n[i], rho_sq);
        f.fitted.push_back(fit);
        f.residuals.push_back(d.y[i] - fit);
    }
    f.r_squared = r_squared(d.y, f.fitted, d.w);
    return f;
}

}  // namespace

ScalingFit fit_scaling_curve(const std::vector<ScalingPoint>& points, double s_ref_eta,
                             const BootstrapOptions& boot, std::uint64_t seed, Exec exec) {
    std::set<double> distinct;
    bool has_one = false;
    for (const auto& p : points) {
        if (!(p.n_assets >= 1.0)) throw ParameterError("fit_scaling_curve: N must be >= 1");
        if (!std::isfinite(p.mean_sharpe))
            throw DataError("fit_scaling_curve: non-finite mean Sharpe");
        distinct.insert(p.n_assets);
        has_one = has_one || p.n_assets == 1.0;
    }
    if (distinct.size() < 3 || !has_one)
        throw ParameterError(
            "fit_scaling_curve: degenerate N set, need 3 distinct sizes including N=1");
    const bool weighted = std::all_of(points.begin(), points.end(), [](const ScalingPoint& p) {
        return std::isfinite(p.std_sharpe) && p.std_sharpe > 0.0;
    });
    const ScalingData d = scaling_data(points, weighted);
    const auto full = fit_full(d);
    const auto sq = fit_sqrt_n(d);

    ScalingFit out;
    out.s_ref_eta = s_ref_eta;
    out.full = make_scaling_result(d, {"S1", "rho_sq"}, {full[0], full[1]}, full[2], weighted,
                                   full[1]);
    out.sqrt_n = make_scaling_result(d, {"S1"}, {sq.first}, sq.second, weighted, 0.0);

    const bool have_trials = std::all_of(points.begin(), points.end(),
                                         [](const ScalingPoint& p) { return p.trials.size() > 1; });
    if (!have_trials || boot.n_resamples <= 0) return out;

    const std::uint64_t root = derive_seed(seed, stream::kFitBootstrap);
    const auto draws = map_indexed<std::array<double, 3>>(
        static_cast<std::size_t>(boot.n_resamples),
        [&](std::size_t b) {
            Engine eng = make_engine(derive_seed(root, b));
            std::vector<ScalingPoint> res = points;
            for (auto& p : res) {
                std::uniform_int_distribution<std::size_t> pick(0, p.trials.size() - 1);
                std::vector<double> t(p.trials.size());
                for (auto& v : t) v = p.trials[pick(eng)];
                const double m = std::accumulate(t.begin(), t.end(), 0.0) / t.size();
                double ss = 0.0;
                for (double v : t) ss += (v - m) * (v - m);
                p.mean_sharpe = m;
                if (weighted) p.std_sharpe = std::sqrt(ss / (t.size() - 1));
            }
            const bool w = weighted && std::all_of(res.begin(), res.end(), [](const ScalingPoint& p) {
                               return p.std_sharpe > 0.0;
                           });
            const ScalingData rd = scaling_data(res, w);
            const auto f = fit_full(rd);
            return std::array<double, 3>{f[0], f[1], fit_sqrt_n(rd).first};
        },
        exec);
    std::vector<double> s1, rho, s1_sqrt;
    for (const auto& a : draws) {
        s1.push_back(a[0]);
        rho.push_back(a[1]);
        s1_sqrt.push_back(a[2]);
    }
    const double alpha = 0.5 * (1.0 - boot.level);
    out.full.ci95 = {{quantile(s1, alpha), quantile(s1, 1.0 - alpha)},
                     {quantile(rho, alpha), quantile(rho, 1.0 - alpha)}};
    out.sqrt_n.ci95 = {{quantile(s1_sqrt, alpha), quantile(s1_sqrt, 1.0 - alpha)}};
    widen(out.full.ci95[0], out.full.params[0]);
    widen(out.full.ci95[1], out.full.params[1]);
    widen(out.sqrt_n.ci95[0], out.sqrt_n.params[0]);
    return out;
}

std::vector<SubUniverse> subuniverse_sampler(const ReturnsPanel& panel,
                                             const std::vector<std::size_t>& sizes,
                                             std::size_t trials, std::uint64_t seed) {
    const auto n = static_cast<std::size_t>(panel.n_assets());
    if (trials == 0) throw ParameterError("subuniverse_sampler: trials must be >= 1");
    std::vector<std::ptrdiff_t> all(n);
    std::iota(all.begin(), all.end(), std::ptrdiff_t{0});
    const std::uint64_t root = derive_seed(seed, stream::kSubUniverse);
    std::vector<SubUniverse> out;
    for (const std::size_t size : sizes) {
        if (size == 0 || size > n)
            throw ParameterError("subuniverse_sampler: size " + std::to_string(size) +
                                 " outside [1, " + std::to_string(n) + "]");
        const std::uint64_t size_seed = derive_seed(root, size);
        for (std::size_t k = 0; k < trials; ++k) {
            Engine eng = make_engine(derive_seed(size_seed, k));
            SubUniverse s;
            s.size = size;
            s.trial = k;
            // selection sampling keeps the input order, so columns come out sorted
            std::sample(all.begin(), all.end(), std::back_inserter(s.columns), size, eng);
            s.panel = panel.select(s.columns);
            out.push_back(std::move(s));
        }
    }
    return out;
}

void write_sharpe_fit_csv(const SharpeCurve& curve, const FitResult& fit, double theta,
                          const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << "eta,empirical,std_error,fitted\n";
    for (const auto& p : curve.sorted().points)
        out << format_double(p.eta) << ',' << format_double(p.sharpe) << ','
            << format_double(p.std_error) << ','
            << format_double(model_sharpe(p.eta, theta, fit.params[0], fit.params[1])) << '\n';
}

void write_scaling_fit_csv(const std::vector<ScalingPoint>& points, const ScalingFit& fit,
                           const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << "n_assets,mean,std,fitted,fitted_sqrt_n\n";
    for (const auto& p : points)
        out << format_double(p.n_assets) << ',' << format_double(p.mean_sharpe) << ','
            << format_double(p.std_sharpe) << ','
            << format_double(fit.full.params[0] * scale_shape(p.n_assets, fit.full.params[1]))
            << ',' << format_double(fit.sqrt_n.params[0] * std::sqrt(p.n_assets)) << '\n';
}

std::string format_fit(const FitResult& fit) {
    std::ostringstream os;
    for (std::size_t i = 0; i < fit.params.size(); ++i) {
        os << fit.names[i] << " = " << format_double(fit.params[i]) << '\n';
        if (i < fit.ci95.size())
            os << fit.names[i] << "_ci95 = " << format_double(fit.ci95[i].low) << ' '
               << format_double(fit.ci95[i].high) << '\n';
    }
    os << "r_squared = " << format_double(fit.r_squared) << '\n';
    os << "objective = " << format_double(fit.objective) << '\n';
    os << "weighted = " << (fit.weighted ? "true" : "false") << '\n';
    return os.str();
}

}  // namespace trendlab

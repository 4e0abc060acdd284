#include "trendlab/concordance.hpp"

#include "trendlab/closed_forms.hpp"
#include "trendlab/error.hpp"
#include "trendlab/process_model.hpp"
#include "trendlab/rng.hpp"
#include "trendlab/signal_engine.hpp"

#include <cmath>
#include <vector>

namespace trendlab {
namespace {

// running first and second moments of one P&L stream
struct Moments {
    double sum = 0.0;
    double sum2 = 0.0;

    void add(double x) {
        sum += x;
        sum2 += x * x;
    }
    double sharpe(double n) const {
        const double m = sum / n;
        const double v = (sum2 - n * m * m) / (n - 1.0);
        return v > 0.0 ? m / std::sqrt(v) : 0.0;
    }
};

ConcordanceCheck summarize(std::string name, const std::vector<ConcordanceSeed>& seeds,
                           double ConcordanceSeed::*field, double closed_form) {
    const double n = static_cast<double>(seeds.size());
    double m = 0.0;
    for (const auto& s : seeds) m += s.*field;
    m /= n;
    double v = 0.0;
    for (const auto& s : seeds) v += (s.*field - m) * (s.*field - m);
    const double se = seeds.size() > 1 ? std::sqrt(v / (n - 1.0) / n) : 0.0;
    return {std::move(name), m, se, closed_form};
}

}  // namespace

double ConcordanceCheck::z() const {
    return std_error > 0.0 ? (monte_carlo - closed_form) / std_error : 0.0;
}

const ConcordanceCheck& ConcordanceReport::check(const std::string& name) const {
    for (const auto& c : checks)
        if (c.name == name) return c;
    throw Error("no concordance check named " + name);
}

ConcordanceSeed concordance_seed(const ConcordanceConfig& cfg, std::uint64_t seed) {
    ProcessSimulator sim(ProcessParams::scalar(cfg.lambda, cfg.beta0), seed);
    const double p = 1.0 - cfg.eta;
    const long n_sma = cfg.sma_window;

    double s = 0.0;
    EmaState ema;
    ema.eta = cfg.eta;
    ema.sigma2 = 1.0 + cfg.beta0 * cfg.beta0;
    std::vector<double> ring(static_cast<std::size_t>(n_sma), 0.0);
    double m = 0.0;  // sum of the last n_sma returns
    std::size_t head = 0;
    double prev = 0.0;

    auto advance = [&](double r) {
        s = p * s + prev;
        ema = ema_update(ema, r);
        m += r - ring[head];
        ring[head] = r;
        head = (head + 1) % ring.size();
        prev = r;
    };

    // trend burn-in, then let every filter forget its start
    const long long burn = default_burn_in(cfg.lambda) +
                           static_cast<long long>(std::ceil(40.0 / cfg.eta)) + n_sma;
    for (long long t = 0; t < burn; ++t) advance(sim.next_scalar());

    Moments lin, bin, vt, sma;
    double cov = 0.0, var_s = 0.0, var_r = 0.0;
    for (long long t = 0; t < cfg.t_steps; ++t) {
        // positions known before r_t; s still lags one return behind
        const double s_t = p * s + prev;
        const double pos_vt = ema.phi / ema.sigma();
        const double pos_sma = m;
        const double r = sim.next_scalar();
        lin.add(s_t * r);
        bin.add((s_t > 0.0 ? 1.0 : (s_t < 0.0 ? -1.0 : 0.0)) * r);
        vt.add(pos_vt * r);
        sma.add(pos_sma * r);
        cov += s_t * r;
        var_s += s_t * s_t;
        var_r += r * r;
        advance(r);
    }
    const double n = static_cast<double>(cfg.t_steps);
    ConcordanceSeed out;
    out.seed = seed;
    out.sr_linear = lin.sharpe(n);
    out.sr_binary = bin.sharpe(n);
    out.sr_voltarget = vt.sharpe(n);
    out.sr_sma = sma.sharpe(n);
    out.cov_sr = cov / n;
    out.var_s = var_s / n;
    out.var_r = var_r / n;
    return out;
}

ConcordanceReport run_concordance(const ConcordanceConfig& cfg, Exec exec) {
    if (cfg.n_seeds < 2) throw ParameterError("concordance needs at least 2 seeds");
    if (cfg.t_steps < 1000) throw ParameterError("concordance t_steps must be >= 1000");
    if (cfg.sma_window < 1) throw ParameterError("sma_window must be >= 1");
    TheoryParams tp;
    tp.lambda = cfg.lambda;
    tp.beta0 = cfg.beta0;
    tp.eta = cfg.eta;
    tp.validate();

    const std::uint64_t root = derive_seed(cfg.seed, stream::kMonteCarlo);
    ConcordanceReport rep;
    rep.config = cfg;
    rep.seeds = map_indexed<ConcordanceSeed>(
        static_cast<std::size_t>(cfg.n_seeds),
        [&](std::size_t i) { return concordance_seed(cfg, derive_seed(root, i)); }, exec);

    rep.checks.push_back(summarize("binary_acar", rep.seeds, &ConcordanceSeed::sr_binary,
                                   acar_binary_stationary(tp).sharpe));
    rep.checks.push_back(summarize("linear_rule", rep.seeds, &ConcordanceSeed::sr_linear,
                                   linear_rule_stationary(tp)));
    rep.checks.push_back(summarize("voltarget_grebenkov", rep.seeds,
                                   &ConcordanceSeed::sr_voltarget, sharpe_grebenkov(tp)));
    rep.checks.push_back(summarize("sma_ferreira", rep.seeds, &ConcordanceSeed::sr_sma,
                                   sharpe_ferreira(trend_autocorrelation(tp), cfg.sma_window)));
    rep.checks.push_back(summarize("cov_signal_return", rep.seeds, &ConcordanceSeed::cov_sr,
                                   stationary_signal_return_cov(tp)));
    rep.checks.push_back(summarize("var_signal", rep.seeds, &ConcordanceSeed::var_s,
                                   stationary_signal_var(tp)));
    rep.checks.push_back(summarize("var_return", rep.seeds, &ConcordanceSeed::var_r,
                                   stationary_return_var(tp)));
    return rep;
}

}  // namespace trendlab

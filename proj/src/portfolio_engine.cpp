#include "trendlab/portfolio_engine.hpp"

#include "trendlab/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

namespace trendlab {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kRealizedVolDecay = 1.0 / 60.0;

Eigen::MatrixXd sub_matrix(const Eigen::MatrixXd& m, const std::vector<Eigen::Index>& idx) {
    const auto n = static_cast<Eigen::Index>(idx.size());
    Eigen::MatrixXd out(n, n);
    for (Eigen::Index a = 0; a < n; ++a)
        for (Eigen::Index b = 0; b < n; ++b)
            out(a, b) = m(idx[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(b)]);
    return out;
}

}  // namespace

const char* to_string(Scheme s) {
    switch (s) {
        case Scheme::ARP: return "ARP";
        case Scheme::NAIVE: return "NAIVE";
        case Scheme::MARKOWITZ: return "MARKOWITZ";
    }
    return "?";
}

const char* to_string(Rule r) { return r == Rule::Linear ? "linear" : "binary"; }

Scheme scheme_from_string(const std::string& name) {
    std::string up;
    for (char c : name) up.push_back(static_cast<char>(std::toupper(c)));
    if (up == "ARP") return Scheme::ARP;
    if (up == "NAIVE") return Scheme::NAIVE;
    if (up == "MARKOWITZ") return Scheme::MARKOWITZ;
    throw ParameterError("unknown scheme '" + name + "' (ARP|NAIVE|MARKOWITZ)");
}

Rule rule_from_string(const std::string& name) {
    if (name == "linear") return Rule::Linear;
    if (name == "binary") return Rule::Binary;
    throw ParameterError("unknown rule '" + name + "' (linear|binary)");
}

void PortfolioConfig::validate() const {
    if (!(smoothing_rho > 0.0 && smoothing_rho <= 1.0))
        throw ParameterError("smoothing_rho must lie in (0, 1]");
    if (!(target_vol > 0.0)) throw ParameterError("target_vol must be > 0");
    if (!(cost_bps >= 0.0)) throw ParameterError("cost_bps must be >= 0");
}

Eigen::MatrixXd scheme_rotation(const Eigen::MatrixXd& corr, Scheme scheme) {
    switch (scheme) {
        case Scheme::ARP: return inv_sqrt(corr);
        case Scheme::NAIVE: return Eigen::MatrixXd::Identity(corr.rows(), corr.cols());
        case Scheme::MARKOWITZ: return inverse_spd(corr);
    }
    throw ParameterError("unknown scheme");
}

PortfolioState portfolio_step(const PortfolioState& prev,
                              const Eigen::Ref<const Eigen::VectorXd>& signal,
                              const Eigen::MatrixXd& corr, const Eigen::MatrixXd& rotation,
                              const Eigen::Ref<const Eigen::VectorXd>& sigma,
                              const PortfolioConfig& cfg, const std::vector<std::string>* names) {
    const auto n = signal.size();
    if (corr.rows() != n || corr.cols() != n || rotation.rows() != n || rotation.cols() != n ||
        sigma.size() != n)
        throw ParameterError("portfolio step: dimension mismatch (signal " + std::to_string(n) +
                             ", corr " + std::to_string(corr.rows()) + ", vol " +
                             std::to_string(sigma.size()) + ")");
    if (prev.smoothed.size() != 0 && prev.smoothed.size() != n)
        throw ParameterError("portfolio step: previous state has the wrong size");
    for (Eigen::Index i = 0; i < n; ++i) {
        const std::string who = names ? (*names)[static_cast<std::size_t>(i)] : "#" + std::to_string(i);
        if (!std::isfinite(signal[i])) throw DataError("non-finite signal for instrument " + who);
        if (!(sigma[i] > 0.0) || !std::isfinite(sigma[i]))
            throw DataError("non-positive volatility for instrument " + who);
    }

    Eigen::VectorXd s = signal;
    if (cfg.rule == Rule::Binary)
        s = signal.unaryExpr([](double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
    const Eigen::VectorXd inv_sigma = sigma.cwiseInverse();
    const Eigen::VectorXd raw = inv_sigma.cwiseProduct(rotation * s);

    PortfolioState next;
    next.smoothed = prev.smoothed.size() == 0
                        ? Eigen::VectorXd(cfg.smoothing_rho * raw)
                        : Eigen::VectorXd((1.0 - cfg.smoothing_rho) * prev.smoothed +
                                          cfg.smoothing_rho * raw);
    const Eigen::VectorXd scaled = sigma.cwiseProduct(next.smoothed);
    const double risk = scaled.dot(corr * scaled);
    if (!(risk > 0.0)) {
        next.unit = Eigen::VectorXd::Zero(n);
        next.weights = Eigen::VectorXd::Zero(n);
        next.model_risk = 0.0;
        return next;
    }
    next.unit = next.smoothed / std::sqrt(risk);
    const Eigen::VectorXd su = sigma.cwiseProduct(next.unit);
    next.model_risk = su.dot(corr * su);
    next.weights = next.unit * (cfg.target_vol / std::sqrt(kAnnualization));
    return next;
}

PortfolioState portfolio_step(const PortfolioState& prev,
                              const Eigen::Ref<const Eigen::VectorXd>& signal,
                              const CorrEstimate& corr, const VolEstimate& vol,
                              const PortfolioConfig& cfg) {
    cfg.validate();
    check_correlation_shape(corr.matrix);
    return portfolio_step(prev, signal, corr.matrix, scheme_rotation(corr.matrix, cfg.scheme),
                          vol.sigma, cfg);
}

Realized realize(const Eigen::Ref<const Eigen::VectorXd>& w_new,
                 const Eigen::Ref<const Eigen::VectorXd>& w_prev,
                 const Eigen::Ref<const Eigen::VectorXd>& r, const PortfolioConfig& cfg) {
    if (w_new.size() != r.size() || w_prev.size() != r.size())
        throw ParameterError("realize: dimension mismatch");
    Realized out;
    for (Eigen::Index i = 0; i < r.size(); ++i) {
        if (w_new[i] != 0.0) {
            if (std::isnan(r[i])) throw DataError("position held on a day without a return");
            out.gross += w_new[i] * r[i];
        }
        out.turnover += std::abs(w_new[i] - w_prev[i]);
    }
    out.net = out.gross - cfg.cost_bps * 1e-4 * out.turnover;
    return out;
}

Eigen::VectorXd PortfolioSeries::after_warmup(const Eigen::VectorXd& v) const {
    const auto w = std::min<std::ptrdiff_t>(warmup, v.size());
    return v.tail(v.size() - w);
}

void write_portfolio_csv(const PortfolioSeries& s, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << "date";
    for (const auto& n : s.instruments) out << ",w_" << n;
    out << ",gross,net,turnover,realized_vol,warmup\n";
    for (std::ptrdiff_t t = 0; t < s.n_days(); ++t) {
        out << format_iso_date(s.dates[static_cast<std::size_t>(t)]);
        for (Eigen::Index j = 0; j < s.weights.cols(); ++j) out << ',' << format_double(s.weights(t, j));
        out << ',' << format_double(s.returns_gross[t]) << ',' << format_double(s.returns_net[t])
            << ',' << format_double(s.turnover[t]) << ',' << format_double(s.realized_vol[t])
            << ',' << (t < s.warmup ? 1 : 0) << '\n';
    }
}

// ---- risk track --------------------------------------------------------------------

RiskTrack RiskTrack::build(const ReturnsPanel& panel, const BacktestOptions& opts) {
    const auto T = panel.n_days();
    const auto N = panel.n_assets();
    if (T < 2) throw InsufficientDataError("backtest needs at least 2 days");
    if (panel.active.size() != static_cast<std::size_t>(N))
        throw DataError("panel is not indexed; call validate_and_index()");
    RiskTrack rt;
    rt.options = opts;
    rt.sigma = Eigen::MatrixXd::Constant(T, N, kNaN);
    rt.snapshot_of_day.assign(static_cast<std::size_t>(T), 0);

    const auto seed_len = static_cast<std::ptrdiff_t>(std::max(20.0, std::ceil(opts.vol_span)));
    EwmaVolatility vol(N, opts.vol_span);
    EwmaCorrelation corr(N, opts.corr_span);

    const auto eligible = [&](Eigen::Index j, std::ptrdiff_t t) {
        const ActiveRange& a = panel.active[static_cast<std::size_t>(j)];
        // holds over t+1, so needs a return on t+1 and enough history through t
        return a.contains(t) && a.contains(t + 1) && t - a.first + 1 >= opts.instrument_warmup &&
               vol.seeded(j);
    };
    const auto make_snapshot = [&](std::ptrdiff_t t) {
        Snapshot s;
        s.first_day = t;
        for (Eigen::Index j = 0; j < N; ++j)
            if (eligible(j, t)) s.members.push_back(j);
        const auto m = static_cast<Eigen::Index>(s.members.size());
        if (m > 0) {
            CorrEstimate est;
            est.matrix = corr.correlation(s.members, false);
            est.effective_samples = corr.effective_samples();
            if (opts.cleaning != Cleaning::None && m > 1 && est.effective_samples > 0.0)
                est = clean_correlation(est, opts.cleaning,
                                        static_cast<double>(m) / est.effective_samples);
            s.corr = est.matrix;
            s.rot_arp = inv_sqrt(s.corr);
            s.rot_markowitz = inverse_spd(s.corr);
        }
        return s;
    };

    Eigen::VectorXd week = Eigen::VectorXd::Zero(N);
    for (std::ptrdiff_t t = 0; t < T; ++t) {
        const auto r = panel.returns.row(t).transpose();
        for (Eigen::Index j = 0; j < N; ++j) {
            const ActiveRange& a = panel.active[static_cast<std::size_t>(j)];
            if (!a.contains(t)) continue;
            if (!vol.seeded(j)) {
                if (t - a.first + 1 == std::min<std::ptrdiff_t>(seed_len, a.length()) &&
                    t - a.first + 1 >= 2)
                    vol.seed(j, panel.returns.col(j).segment(a.first, t - a.first + 1));
            } else {
                vol.update(j, r[j]);
            }
            if (vol.seeded(j)) rt.sigma(t, j) = vol.sigma(j);
        }
        week += r;  // NaN marks inactive instruments for the week
        const bool week_end = (t + 1) % 5 == 0;
        if (week_end) {
            corr.add_week(week);
            week.setZero();
        }
        bool rebuild = rt.snapshots.empty() || week_end;
        if (!rebuild) {
            // membership changes mid-week (listings, delistings)
            const auto& cur = rt.snapshots.back().members;
            std::size_t k = 0;
            for (Eigen::Index j = 0; j < N && !rebuild; ++j) {
                const bool in = k < cur.size() && cur[k] == j;
                if (in) ++k;
                if (in != eligible(j, t)) rebuild = true;
            }
        }
        if (rebuild) rt.snapshots.push_back(make_snapshot(t));
        rt.snapshot_of_day[static_cast<std::size_t>(t)] = rt.snapshots.size() - 1;
    }
    return rt;
}

// ---- strategies -------------------------------------------------------------------------

std::ptrdiff_t signal_warmup(const IndicatorSpec& spec) {
    return static_cast<std::ptrdiff_t>(std::ceil(3.0 * spec.timescale()));
}

std::ptrdiff_t sweep_warmup(const std::vector<IndicatorSpec>& specs, const BacktestOptions& opts) {
    auto w = static_cast<std::ptrdiff_t>(std::ceil(opts.corr_span));
    for (const auto& s : specs) w = std::max(w, signal_warmup(s));
    return w;
}

PortfolioSeries run_strategy(const ReturnsPanel& panel, const RiskTrack& risk,
                             const IndicatorSpec& spec, const PortfolioConfig& cfg,
                             std::ptrdiff_t warmup) {
    const Eigen::MatrixXd signals = evaluate_indicator(spec, panel, Exec::Serial);
    return run_strategy(panel, risk, signals, signal_warmup(spec), cfg, warmup, spec.label());
}

PortfolioSeries run_strategy(const ReturnsPanel& panel, const RiskTrack& risk,
                             const Eigen::MatrixXd& signals, std::ptrdiff_t signal_warm,
                             const PortfolioConfig& cfg, std::ptrdiff_t warmup,
                             std::string label) {
    cfg.validate();
    const auto T = panel.n_days();
    const auto N = panel.n_assets();
    if (signals.rows() != T || signals.cols() != N)
        throw ParameterError("signal matrix does not match the panel");
    if (risk.sigma.rows() != T || risk.sigma.cols() != N)
        throw ParameterError("risk track does not match the panel");
    if (warmup < 0 || warmup >= T)
        throw InsufficientDataError("warm-up of " + std::to_string(warmup) +
                                    " days leaves no data in a " + std::to_string(T) +
                                    "-day panel");

    PortfolioSeries out;
    out.label = std::move(label);
    out.dates = panel.dates;
    out.instruments = panel.instruments;
    out.weights = Eigen::MatrixXd::Zero(T, N);
    out.returns_gross = Eigen::VectorXd::Zero(T);
    out.returns_net = Eigen::VectorXd::Zero(T);
    out.turnover = Eigen::VectorXd::Zero(T);
    out.realized_vol = Eigen::VectorXd::Zero(T);
    out.model_risk = Eigen::VectorXd::Zero(T);
    out.warmup = warmup;

    // smoothed portfolio in universe coordinates; non-members are reset to 0
    Eigen::VectorXd smoothed_full = Eigen::VectorXd::Zero(N);
    std::size_t cached_snapshot = static_cast<std::size_t>(-1);
    std::vector<Eigen::Index> members;
    Eigen::MatrixXd corr;
    Eigen::MatrixXd rot;
    double ewvar = 0.0;
    std::vector<std::string> names;

    for (std::ptrdiff_t t = 0; t + 1 < T; ++t) {
        const std::size_t si = risk.snapshot_of_day[static_cast<std::size_t>(t)];
        const RiskTrack::Snapshot& snap = risk.snapshots[si];
        std::vector<Eigen::Index> now;
        for (std::size_t k = 0; k < snap.members.size(); ++k) {
            const Eigen::Index j = snap.members[k];
            const ActiveRange& a = panel.active[static_cast<std::size_t>(j)];
            if (t - a.first + 1 >= signal_warm && std::isfinite(signals(t, j))) now.push_back(j);
        }
        if (si != cached_snapshot || now != members) {
            members = now;
            cached_snapshot = si;
            names.clear();
            for (auto j : members) names.push_back(panel.instruments[static_cast<std::size_t>(j)]);
            if (members.size() == snap.members.size()) {
                corr = snap.corr;
                rot = cfg.scheme == Scheme::ARP         ? snap.rot_arp
                      : cfg.scheme == Scheme::MARKOWITZ ? snap.rot_markowitz
                                                        : Eigen::MatrixXd::Identity(corr.rows(), corr.cols());
            } else {
                // signal warm-up removes some members: restrict the cleaned matrix
                std::vector<Eigen::Index> pos;
                for (auto j : members)
                    pos.push_back(static_cast<Eigen::Index>(
                        std::find(snap.members.begin(), snap.members.end(), j) -
                        snap.members.begin()));
                corr = sub_matrix(snap.corr, pos);
                rot = members.empty() ? Eigen::MatrixXd() : scheme_rotation(corr, cfg.scheme);
            }
        }

        Eigen::VectorXd w_next = Eigen::VectorXd::Zero(N);
        if (!members.empty()) {
            const auto m = static_cast<Eigen::Index>(members.size());
            Eigen::VectorXd s(m), sig(m);
            PortfolioState prev;
            prev.smoothed.resize(m);
            for (Eigen::Index a = 0; a < m; ++a) {
                const Eigen::Index j = members[static_cast<std::size_t>(a)];
                s[a] = signals(t, j);
                sig[a] = risk.sigma(t, j);
                prev.smoothed[a] = smoothed_full[j];
            }
            const PortfolioState next = portfolio_step(prev, s, corr, rot, sig, cfg, &names);
            smoothed_full.setZero();
            for (Eigen::Index a = 0; a < m; ++a) {
                const Eigen::Index j = members[static_cast<std::size_t>(a)];
                smoothed_full[j] = next.smoothed[a];
                w_next[j] = next.weights[a];
            }
            out.model_risk[t + 1] = next.model_risk;
        } else {
            smoothed_full.setZero();
        }
        out.weights.row(t + 1) = w_next.transpose();
        const Realized rz = realize(w_next, out.weights.row(t).transpose(),
                                    panel.returns.row(t + 1).transpose(), cfg);
        out.returns_gross[t + 1] = rz.gross;
        out.returns_net[t + 1] = rz.net;
        out.turnover[t + 1] = rz.turnover;
        ewvar = (1.0 - kRealizedVolDecay) * ewvar + kRealizedVolDecay * rz.gross * rz.gross;
        out.realized_vol[t + 1] = std::sqrt(ewvar * kAnnualization);
    }
    return out;
}

std::vector<PortfolioSeries> run_sweep(const ReturnsPanel& panel, const RiskTrack& risk,
                                       const std::vector<IndicatorSpec>& specs,
                                       const PortfolioConfig& cfg, std::ptrdiff_t warmup,
                                       Exec exec) {
    return map_indexed<PortfolioSeries>(
        specs.size(), [&](std::size_t i) { return run_strategy(panel, risk, specs[i], cfg, warmup); },
        exec);
}

}  // namespace trendlab

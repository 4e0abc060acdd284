#include "trendlab/signal_engine.hpp"

#include "trendlab/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace trendlab {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_eta(double eta, const char* what) {
    if (!(eta > 0.0 && eta <= 1.0))
        throw ParameterError(std::string(what) + " must lie in (0, 1], got " +
                             std::to_string(eta));
}

void check_window(long n, const char* what) {
    if (n < 1) throw ParameterError(std::string(what) + " must be >= 1");
}

std::size_t seed_length(double eta) {
    return static_cast<std::size_t>(std::max(20.0, std::ceil(1.0 / eta)));
}

// r_t / sigma_{t-1} with sigma from an EMA of squared returns.
Eigen::VectorXd normalize_returns(const Eigen::Ref<const Eigen::VectorXd>& r, double vol_eta,
                                  bool frozen) {
    if (frozen) return r;
    EmaState vol = EmaState::seeded(vol_eta, r);
    Eigen::VectorXd out(r.size());
    for (Eigen::Index t = 0; t < r.size(); ++t) {
        const double s = vol.sigma();
        vol = ema_update(vol, r[t]);
        out[t] = r[t] / s;
    }
    return out;
}

Eigen::VectorXd ema_series(double eta, const Eigen::Ref<const Eigen::VectorXd>& r, bool frozen) {
    EmaState st = frozen ? EmaState::unit_sigma(eta) : EmaState::seeded(eta, r);
    Eigen::VectorXd out(r.size());
    for (Eigen::Index t = 0; t < r.size(); ++t) {
        st = ema_update(st, r[t]);
        out[t] = st.phi;
    }
    return out;
}

Eigen::VectorXd prefix_sums(const Eigen::Ref<const Eigen::VectorXd>& x) {
    Eigen::VectorXd p(x.size() + 1);
    p[0] = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) p[i + 1] = p[i] + x[i];
    return p;
}

// sum_{k<n} x_{t-k}, truncated at the start of the series
double window_sum(const Eigen::VectorXd& prefix, Eigen::Index t, long n) {
    const Eigen::Index lo = std::max<Eigen::Index>(0, t + 1 - n);
    return prefix[t + 1] - prefix[lo];
}

// P_t minus mean of the n previous prices, i.e. sum_{k<n} (n-k)/n x_{t-k}
Eigen::VectorXd sma_gap_series(const Eigen::VectorXd& x, long n) {
    Eigen::VectorXd out(x.size());
    double acc = 0.0;  // sum_{k<n} (n-k) x_{t-k}
    double win = 0.0;  // sum_{k<n} x_{t-k}
    for (Eigen::Index t = 0; t < x.size(); ++t) {
        // shift: every weight drops by one, the new return enters with weight n
        acc = acc - win + static_cast<double>(n) * x[t];
        win += x[t];
        if (t - n >= 0) win -= x[t - n];
        out[t] = acc / static_cast<double>(n);
    }
    return out;
}

}  // namespace

// ---- EmaState --------------------------------------------------------------

EmaState EmaState::seeded(double eta, const Eigen::Ref<const Eigen::VectorXd>& history) {
    check_eta(eta, "eta");
    EmaState st;
    st.eta = eta;
    const auto len = std::min<Eigen::Index>(history.size(),
                                            static_cast<Eigen::Index>(seed_length(eta)));
    double mean = 0.0;
    double var = 0.0;
    if (len >= 2) {
        const auto h = history.head(len);
        mean = h.mean();
        var = (h.array() - mean).square().sum() / static_cast<double>(len - 1);
    }
    st.sigma2 = var;
    st.sigma_ref = std::sqrt(var);
    return st;
}

EmaState EmaState::unit_sigma(double eta) {
    check_eta(eta, "eta");
    EmaState st;
    st.eta = eta;
    st.frozen_sigma = true;
    return st;
}

long long EmaState::warmup() const { return static_cast<long long>(std::ceil(3.0 / eta)); }

double EmaState::sigma() const {
    if (frozen_sigma) return 1.0;
    const double floor = std::max(kSigmaFloor * sigma_ref, std::numeric_limits<double>::min());
    return std::max(std::sqrt(std::max(sigma2, 0.0)), floor);
}

EmaState ema_update(EmaState state, double r) {
    if (!std::isfinite(r)) throw DataError("non-finite return in EMA update");
    const double eta = state.eta;
    const double sigma_prev = state.sigma();
    if (!state.frozen_sigma) {
        state.sigma2 = (1.0 - eta) * state.sigma2 + eta * r * r;
        state.sigma_ref = (1.0 - kSigmaRefDecay) * state.sigma_ref +
                          kSigmaRefDecay * std::sqrt(state.sigma2);
    }
    state.phi = (1.0 - eta) * state.phi + std::sqrt(eta) * r / sigma_prev;
    ++state.n_updates;
    return state;
}

// ---- IndicatorSpec ---------------------------------------------------------

const char* to_string(IndicatorKind kind) {
    switch (kind) {
        case IndicatorKind::EMA: return "EMA";
        case IndicatorKind::MACD3: return "MACD3";
        case IndicatorKind::MOM: return "MOM";
        case IndicatorKind::SMA: return "SMA";
        case IndicatorKind::EMA_CROSS: return "EMA_CROSS";
        case IndicatorKind::SMA_CROSS: return "SMA_CROSS";
        case IndicatorKind::BB_MIXTURE: return "BB_MIXTURE";
        case IndicatorKind::NONLINEAR_CUBIC: return "NONLINEAR_CUBIC";
    }
    return "?";
}

IndicatorKind indicator_kind_from_string(const std::string& name) {
    std::string up;
    for (char c : name) up.push_back(c == '-' ? '_' : static_cast<char>(std::toupper(c)));
    for (auto k : {IndicatorKind::EMA, IndicatorKind::MACD3, IndicatorKind::MOM,
                   IndicatorKind::SMA, IndicatorKind::EMA_CROSS, IndicatorKind::SMA_CROSS,
                   IndicatorKind::BB_MIXTURE, IndicatorKind::NONLINEAR_CUBIC})
        if (up == to_string(k)) return k;
    throw ParameterError("unknown indicator kind '" + name + "'");
}

IndicatorSpec IndicatorSpec::ema(double eta) {
    IndicatorSpec s;
    s.kind = IndicatorKind::EMA;
    s.etas = {eta};
    s.validate();
    return s;
}

IndicatorSpec IndicatorSpec::macd3(std::array<double, 3> etas, std::array<double, 3> weights,
                                   bool zero_slope) {
    IndicatorSpec s;
    s.kind = IndicatorKind::MACD3;
    s.etas.assign(etas.begin(), etas.end());
    s.weights.assign(weights.begin(), weights.end());
    s.zero_slope = zero_slope;
    s.validate();
    return s;
}

IndicatorSpec IndicatorSpec::mom(long n) {
    IndicatorSpec s;
    s.kind = IndicatorKind::MOM;
    s.windows = {n};
    s.validate();
    return s;
}

IndicatorSpec IndicatorSpec::sma(long n) {
    IndicatorSpec s;
    s.kind = IndicatorKind::SMA;
    s.windows = {n};
    s.validate();
    return s;
}

IndicatorSpec IndicatorSpec::ema_cross(double eta_fast, double eta_slow) {
    IndicatorSpec s;
    s.kind = IndicatorKind::EMA_CROSS;
    s.etas = {eta_fast, eta_slow};
    s.validate();
    return s;
}

IndicatorSpec IndicatorSpec::sma_cross(long n_fast, long n_slow) {
    IndicatorSpec s;
    s.kind = IndicatorKind::SMA_CROSS;
    s.windows = {n_fast, n_slow};
    s.validate();
    return s;
}

IndicatorSpec IndicatorSpec::bb_mixture(double eta, long max_n, double delta_max, long n_bands) {
    IndicatorSpec s;
    s.kind = IndicatorKind::BB_MIXTURE;
    s.etas = {eta};
    s.windows = {max_n};
    s.delta_max = delta_max;
    s.n_bands = n_bands;
    s.validate();
    return s;
}

IndicatorSpec IndicatorSpec::nonlinear_cubic(double eta, double c) {
    IndicatorSpec s;
    s.kind = IndicatorKind::NONLINEAR_CUBIC;
    s.etas = {eta};
    s.cubic = c;
    s.validate();
    return s;
}

void IndicatorSpec::validate() const {
    const auto need = [&](std::size_t n_eta, std::size_t n_win) {
        if (etas.size() != n_eta || windows.size() != n_win)
            throw ParameterError(std::string(to_string(kind)) + " expects " +
                                 std::to_string(n_eta) + " eta(s) and " + std::to_string(n_win) +
                                 " window(s)");
    };
    for (double e : etas) check_eta(e, "eta");
    for (long w : windows) check_window(w, "window");
    check_eta(vol_eta, "vol_eta");
    switch (kind) {
        case IndicatorKind::EMA:
        case IndicatorKind::NONLINEAR_CUBIC: need(1, 0); break;
        case IndicatorKind::MACD3:
            need(3, 0);
            if (weights.size() != 3) throw ParameterError("MACD3 expects 3 weights");
            if (etas[0] == etas[1] || etas[0] == etas[2] || etas[1] == etas[2])
                throw ParameterError("MACD3 etas must be distinct");
            break;
        case IndicatorKind::MOM:
        case IndicatorKind::SMA: need(0, 1); break;
        case IndicatorKind::EMA_CROSS:
            need(2, 0);
            if (etas[0] == etas[1]) throw ParameterError("EMA_CROSS etas must differ");
            break;
        case IndicatorKind::SMA_CROSS:
            need(0, 2);
            if (windows[0] == windows[1]) throw ParameterError("SMA_CROSS windows must differ");
            break;
        case IndicatorKind::BB_MIXTURE:
            need(1, 1);
            if (!(delta_max > 0.0)) throw ParameterError("delta_max must be > 0");
            if (n_bands < 1) throw ParameterError("n_bands must be >= 1");
            break;
    }
}

std::array<double, 3> IndicatorSpec::effective_weights() const {
    if (kind != IndicatorKind::MACD3) throw ParameterError("weights only apply to MACD3");
    std::array<double, 3> w{weights[0], weights[1], weights[2]};
    if (zero_slope)
        w[0] = -(w[1] * std::sqrt(etas[1]) + w[2] * std::sqrt(etas[2])) / std::sqrt(etas[0]);
    return w;
}

bool IndicatorSpec::is_linear() const {
    return kind != IndicatorKind::BB_MIXTURE && kind != IndicatorKind::NONLINEAR_CUBIC;
}

double IndicatorSpec::timescale() const {
    double t = 0.0;
    for (double e : etas) t = std::max(t, 1.0 / e);
    for (long w : windows) t = std::max(t, static_cast<double>(w));
    return t;
}

std::string IndicatorSpec::label() const {
    std::ostringstream os;
    os << to_string(kind) << '(';
    bool first = true;
    const auto sep = [&] {
        if (!first) os << ';';
        first = false;
    };
    for (double e : etas) {
        sep();
        os << format_double(1.0 / e);
    }
    for (long w : windows) {
        sep();
        os << w;
    }
    if (kind == IndicatorKind::MACD3) {
        const auto w = effective_weights();
        for (double x : w) {
            sep();
            os << 'w' << format_double(x);
        }
    }
    os << ')';
    return os.str();
}

double macd3(const std::array<double, 3>& phis, const IndicatorSpec& spec) {
    spec.validate();
    const auto w = spec.effective_weights();
    return w[0] * phis[0] + w[1] * phis[1] + w[2] * phis[2];
}

// ---- spectra ---------------------------------------------------------------

Eigen::VectorXd sensitivity_spectrum(const IndicatorSpec& spec, long max_lag) {
    spec.validate();
    if (max_lag < 0) throw ParameterError("max_lag must be >= 0");
    if (!spec.is_linear())
        throw ParameterError(std::string("unsupported-spectrum: ") + to_string(spec.kind) +
                             " is nonlinear");
    Eigen::VectorXd psi = Eigen::VectorXd::Zero(max_lag + 1);
    const auto ema_psi = [&](double eta, double scale) {
        double g = std::sqrt(eta) * scale;
        for (long k = 0; k <= max_lag; ++k) {
            psi[k] += g;
            g *= 1.0 - eta;
        }
    };
    const auto gap_psi = [&](long n, double scale) {
        for (long k = 0; k < std::min(n, max_lag + 1); ++k)
            psi[k] += scale * static_cast<double>(n - k) / static_cast<double>(n);
    };
    switch (spec.kind) {
        case IndicatorKind::EMA: ema_psi(spec.etas[0], 1.0); break;
        case IndicatorKind::MACD3: {
            const auto w = spec.effective_weights();
            for (int j = 0; j < 3; ++j) ema_psi(spec.etas[j], w[j]);
            break;
        }
        case IndicatorKind::MOM:
            for (long k = 0; k < std::min(spec.windows[0], max_lag + 1); ++k) psi[k] = 1.0;
            break;
        case IndicatorKind::SMA: gap_psi(spec.windows[0], 1.0); break;
        case IndicatorKind::EMA_CROSS:
            ema_psi(spec.etas[1], 1.0 / std::sqrt(spec.etas[1]));
            ema_psi(spec.etas[0], -1.0 / std::sqrt(spec.etas[0]));
            break;
        case IndicatorKind::SMA_CROSS:
            gap_psi(spec.windows[1], 1.0);
            gap_psi(spec.windows[0], -1.0);
            break;
        default: break;
    }
    return psi;
}

// ---- indicator evaluation ----------------------------------------------------

Eigen::VectorXd evaluate_indicator(const IndicatorSpec& spec,
                                   const Eigen::Ref<const Eigen::VectorXd>& returns,
                                   bool frozen_sigma) {
    spec.validate();
    if (!returns.allFinite()) throw DataError("indicator input has non-finite returns");
    const Eigen::Index T = returns.size();
    switch (spec.kind) {
        case IndicatorKind::EMA: return ema_series(spec.etas[0], returns, frozen_sigma);
        case IndicatorKind::NONLINEAR_CUBIC: {
            Eigen::VectorXd phi = ema_series(spec.etas[0], returns, frozen_sigma);
            return phi.unaryExpr([&](double p) { return nonlinear_cubic(p, spec.cubic); });
        }
        case IndicatorKind::MACD3: {
            const auto w = spec.effective_weights();
            Eigen::VectorXd out = Eigen::VectorXd::Zero(T);
            for (int j = 0; j < 3; ++j)
                if (w[j] != 0.0) out += w[j] * ema_series(spec.etas[j], returns, frozen_sigma);
            return out;
        }
        case IndicatorKind::EMA_CROSS: {
            const double ef = spec.etas[0];
            const double es = spec.etas[1];
            return ema_series(es, returns, frozen_sigma) / std::sqrt(es) -
                   ema_series(ef, returns, frozen_sigma) / std::sqrt(ef);
        }
        default: break;
    }

    const Eigen::VectorXd x = normalize_returns(returns, spec.vol_eta, frozen_sigma);
    switch (spec.kind) {
        case IndicatorKind::MOM: {
            const Eigen::VectorXd p = prefix_sums(x);
            Eigen::VectorXd out(T);
            for (Eigen::Index t = 0; t < T; ++t) out[t] = window_sum(p, t, spec.windows[0]);
            return out;
        }
        case IndicatorKind::SMA: return sma_gap_series(x, spec.windows[0]);
        case IndicatorKind::SMA_CROSS:
            return sma_gap_series(x, spec.windows[1]) - sma_gap_series(x, spec.windows[0]);
        case IndicatorKind::BB_MIXTURE: {
            const SmaWeights w = ema_to_sma_weights(spec.etas[0], spec.windows[0]);
            const Eigen::VectorXd p = prefix_sums(x);
            Eigen::VectorXd out(T);
            for (Eigen::Index t = 0; t < T; ++t) {
                double acc = 0.0;
                for (Eigen::Index n = 1; n <= w.weights.size(); ++n) {
                    const double len = static_cast<double>(std::min<Eigen::Index>(n, t + 1));
                    const double sma = window_sum(p, t, static_cast<long>(n)) / len;
                    acc += w.weights[n - 1] * bb_quadrature(sma, spec.delta_max, spec.n_bands);
                }
                out[t] = acc;
            }
            return out;
        }
        default: break;
    }
    throw ParameterError("unhandled indicator kind");
}

Eigen::MatrixXd evaluate_indicator(const IndicatorSpec& spec, const ReturnsPanel& panel,
                                   Exec exec) {
    spec.validate();
    const auto T = panel.n_days();
    const auto N = panel.n_assets();
    auto cols = map_indexed<Eigen::VectorXd>(
        static_cast<std::size_t>(N),
        [&](std::size_t j) {
            Eigen::VectorXd col = Eigen::VectorXd::Constant(T, kNaN);
            const ActiveRange a = panel.active[j];
            if (a.length() > 0)
                col.segment(a.first, a.length()) = evaluate_indicator(
                    spec, panel.returns.col(static_cast<Eigen::Index>(j)).segment(a.first, a.length()));
            return col;
        },
        exec);
    Eigen::MatrixXd out(T, N);
    for (Eigen::Index j = 0; j < N; ++j) out.col(j) = cols[static_cast<std::size_t>(j)];
    return out;
}

// ---- EMA -> SMA -> BB decomposition -------------------------------------------

Eigen::VectorXd SmaWeights::log_density() const {
    Eigen::VectorXd d(weights.size());
    for (Eigen::Index i = 0; i < weights.size(); ++i)
        d[i] = static_cast<double>(i + 1) * weights[i];
    return d;
}

long SmaWeights::log_density_peak() const {
    Eigen::Index idx = 0;
    log_density().maxCoeff(&idx);
    return static_cast<long>(idx + 1);
}

SmaWeights ema_to_sma_weights(double eta, long max_n) {
    check_eta(eta, "eta");
    check_window(max_n, "max_n");
    SmaWeights out;
    out.eta = eta;
    out.weights.resize(max_n);
    double decay = 1.0;  // (1-eta)^{n-1}
    for (long n = 1; n <= max_n; ++n) {
        out.weights[n - 1] = static_cast<double>(n) * eta * eta * decay;
        decay *= 1.0 - eta;
    }
    // exact tail: sum_{n>N} n eta^2 q^{n-1} = q^N (1 + N eta)
    out.truncated_mass =
        eta == 1.0 ? 0.0 : std::pow(1.0 - eta, static_cast<double>(max_n)) * (1.0 + max_n * eta);
    if (out.truncated_mass > kSmaTruncation)
        throw ParameterError("max_n=" + std::to_string(max_n) + " truncates SMA weight mass " +
                             std::to_string(out.truncated_mass) + " (limit 1e-8)");
    out.weights /= out.weights.sum();
    return out;
}

Eigen::VectorXd reconstruct_from_sma(const SmaWeights& w,
                                     const Eigen::Ref<const Eigen::VectorXd>& returns) {
    const Eigen::VectorXd p = prefix_sums(returns);
    const Eigen::Index T = returns.size();
    const Eigen::Index max_n = w.weights.size();
    Eigen::VectorXd out(T);
    for (Eigen::Index t = 0; t < T; ++t) {
        double acc = 0.0;
        for (Eigen::Index n = 1; n <= max_n; ++n)
            acc += w.weights[n - 1] * window_sum(p, t, static_cast<long>(n)) /
                   static_cast<double>(n);
        out[t] = acc;
    }
    return out;
}

Eigen::VectorXd unit_mass_ema(double eta, const Eigen::Ref<const Eigen::VectorXd>& returns) {
    check_eta(eta, "eta");
    Eigen::VectorXd out(returns.size());
    double e = 0.0;
    for (Eigen::Index t = 0; t < returns.size(); ++t) {
        e = (1.0 - eta) * e + eta * returns[t];
        out[t] = e;
    }
    return out;
}

int bb_elementary(double sma_value, double delta) {
    if (std::abs(sma_value) > delta) return sma_value > 0.0 ? 1 : -1;
    return 0;
}

double bb_quadrature(double sma_value, double delta_max, long n_bands) {
    if (!(delta_max > 0.0) || n_bands < 1) throw ParameterError("invalid band grid");
    const double h = delta_max / static_cast<double>(n_bands);
    // bands with midpoint (m - 1/2) h < |v| contribute sign(v) h
    const double a = std::abs(sma_value);
    long count = static_cast<long>(std::ceil(a / h - 0.5));
    count = std::clamp(count, 0L, n_bands);
    // the midpoint exactly at |v| does not count (strict inequality)
    if (count > 0 && (static_cast<double>(count) - 0.5) * h >= a) --count;
    const double s = sma_value > 0.0 ? 1.0 : (sma_value < 0.0 ? -1.0 : 0.0);
    return s * h * static_cast<double>(count);
}

double bb_quadrature_reference(double sma_value, double delta_max, long n_bands) {
    if (!(delta_max > 0.0) || n_bands < 1) throw ParameterError("invalid band grid");
    const double h = delta_max / static_cast<double>(n_bands);
    double acc = 0.0;
    for (long m = 1; m <= n_bands; ++m)
        acc += h * bb_elementary(sma_value, (static_cast<double>(m) - 0.5) * h);
    return acc;
}

Eigen::VectorXd bb_quadrature_batch(const Eigen::Ref<const Eigen::VectorXd>& values,
                                    double delta_max, long n_bands, Exec exec) {
    const auto res = map_indexed<double>(
        static_cast<std::size_t>(values.size()),
        [&](std::size_t i) {
            return bb_quadrature_reference(values[static_cast<Eigen::Index>(i)], delta_max,
                                           n_bands);
        },
        exec);
    return Eigen::Map<const Eigen::VectorXd>(res.data(), static_cast<Eigen::Index>(res.size()));
}

double nonlinear_cubic(double phi, double c) { return phi - c * phi * phi * phi; }

}  // namespace trendlab

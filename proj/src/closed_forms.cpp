#include "trendlab/closed_forms.hpp"

#include "trendlab/error.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace trendlab {
namespace {

constexpr double kPi = std::numbers::pi;

void check_unit_interval(double x, const char* name) {
    if (!(x > 0.0 && x <= 1.0))
        throw ParameterError(std::string(name) + " must lie in (0, 1], got " + std::to_string(x));
}

// (q^n - p^n) / (q - p), stable when p and q are close
double geometric_gap(double p, double q, double q_minus_p, long n) {
    if (n <= 0) return 0.0;
    if (p == 0.0) return std::pow(q, static_cast<double>(n - 1));
    const double x = std::log1p(q_minus_p / p);
    const double base = std::pow(p, static_cast<double>(n - 1));
    if (x == 0.0) return static_cast<double>(n) * base;
    return base * std::expm1(static_cast<double>(n) * x) / std::expm1(x);
}

}  // namespace

void TheoryParams::validate() const {
    check_unit_interval(lambda, "lambda");
    check_unit_interval(eta, "eta");
    if (!(beta0 >= 0.0)) throw ParameterError("beta0 must be >= 0");
    if (!(sigma_x > 0.0) || !(sigma_f > 0.0)) throw ParameterError("sigma_x, sigma_f must be > 0");
    if (!(std::abs(rho_xf) <= 1.0)) throw ParameterError("|rho_xf| must be <= 1");
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * kPi); }

double beta_from_beta0(double lambda, double beta0) {
    check_unit_interval(lambda, "lambda");
    return beta0 * std::sqrt(lambda * (2.0 - lambda));
}

double beta0_from_beta(double lambda, double beta) {
    check_unit_interval(lambda, "lambda");
    return beta / std::sqrt(lambda * (2.0 - lambda));
}

double sharpe_grebenkov(const TheoryParams& p) {
    const double b2 = p.beta0 * p.beta0;
    const double s = p.lambda + p.eta;
    if (!(s > 0.0)) throw ParameterError("lambda + eta must be > 0");
    const double num = b2 * std::sqrt(2.0 * p.eta) - (2.0 / kPi) * p.theta * std::sqrt(p.eta) * s;
    return num / std::sqrt(s * s + 2.0 * b2 * s);
}

double sharpe_grebenkov_annualized(const TheoryParams& p) {
    return std::sqrt(255.0) * sharpe_grebenkov(p);
}

double eta_opt(const TheoryParams& p) {
    check_unit_interval(p.lambda, "lambda");
    return p.lambda * std::sqrt(1.0 + 2.0 * p.beta0 * p.beta0 / p.lambda);
}

double sharpe_multidim(const TheoryParams& p, MultidimVariant variant) {
    check_unit_interval(p.lambda, "lambda");
    check_unit_interval(p.eta, "eta");
    if (!(p.beta0 > 0.0)) return 0.0;
    if (!(p.n_assets >= 1.0)) throw ParameterError("n_assets must be >= 1");
    const double pp = 1.0 - p.eta;
    const double q = 1.0 - p.lambda;
    const double s4 = std::pow(p.sigma, 4);
    const double Q = (1.0 - pp * q) * s4 / std::pow(p.beta0, 4);
    const double R = 1.0 - q * q - 2.0 * pp * pp * q * q;
    double den = 0.0;
    switch (variant) {
        case MultidimVariant::Uncorrelated:
        case MultidimVariant::SharedCorrelation: den = Q * Q + 2.0 * Q + R; break;
        case MultidimVariant::UncorrelatedTrends:
            if (!(std::abs(p.rho_eps) <= 1.0)) throw ParameterError("|rho_eps| must be <= 1");
            den = Q * Q * (1.0 - p.rho_eps * p.rho_eps) + 2.0 * Q * (1.0 - p.rho_eps) + R;
            break;
    }
    if (!(den > 0.0))
        throw ParameterError("multi-dimensional Sharpe: denominator is not positive for these "
                             "parameters");
    return std::sqrt(p.n_assets * q * q * (1.0 - pp * pp) / den);
}

double scaling_factor(double n_assets, double rho_sq) {
    if (!(n_assets >= 1.0)) throw ParameterError("n_assets must be >= 1");
    if (!(rho_sq >= 0.0 && rho_sq <= 1.0)) throw ParameterError("rho_sq must lie in [0, 1]");
    return std::sqrt(n_assets / (1.0 + (n_assets - 1.0) * rho_sq));
}

double stationary_signal_return_cov(const TheoryParams& p) {
    const double pp = 1.0 - p.eta;
    const double q = 1.0 - p.lambda;
    if (!(pp * q < 1.0)) throw ParameterError("(1-eta)(1-lambda) must be < 1");
    return p.gamma * p.beta0 * p.beta0 * q / (1.0 - pp * q);
}

double stationary_signal_var(const TheoryParams& p) {
    check_unit_interval(p.eta, "eta");
    const double pp = 1.0 - p.eta;
    const double q = 1.0 - p.lambda;
    const double b2 = p.beta0 * p.beta0;
    return p.gamma * p.gamma * (1.0 + b2 * (1.0 + pp * q) / (1.0 - pp * q)) / (1.0 - pp * pp);
}

double stationary_signal_var_uncorrected(const TheoryParams& p) {
    check_unit_interval(p.eta, "eta");
    const double pp = 1.0 - p.eta;
    const double q = 1.0 - p.lambda;
    const double b2 = p.beta0 * p.beta0;
    return p.gamma * p.gamma * (1.0 + b2 / (1.0 - pp * q)) / (1.0 - pp * pp);
}

double stationary_return_var(const TheoryParams& p) { return 1.0 + p.beta0 * p.beta0; }

double signal_return_cov_at(const TheoryParams& p, long t) {
    if (t < 1) throw ParameterError("t must be >= 1");
    check_unit_interval(p.lambda, "lambda");
    check_unit_interval(p.eta, "eta");
    const long n = t - 1;
    const double pp = 1.0 - p.eta;
    const double q = 1.0 - p.lambda;
    const double g = geometric_gap(pp, q, p.eta - p.lambda, n);
    const double pq_n = std::pow(pp * q, static_cast<double>(n));
    return p.gamma * p.beta0 * p.beta0 *
           (q * (1.0 - pq_n) / (1.0 - pp * q) - std::pow(q, static_cast<double>(n)) * g);
}

double signal_var_at(const TheoryParams& p, long t) {
    if (t < 1) throw ParameterError("t must be >= 1");
    check_unit_interval(p.lambda, "lambda");
    check_unit_interval(p.eta, "eta");
    const long n = t - 1;
    if (n == 0) return 0.0;
    const double pp = 1.0 - p.eta;
    const double q = 1.0 - p.lambda;
    const double b2 = p.beta0 * p.beta0;
    // white part sum_{i<n} p^{2i}
    const double w = -std::expm1(2.0 * static_cast<double>(n) * std::log1p(-p.eta)) /
                     (p.eta * (2.0 - p.eta));
    const double g = geometric_gap(pp, q, p.eta - p.lambda, n);
    const double cross = w - std::pow(pp, static_cast<double>(n - 1)) * g;
    const double v = w + b2 * (w + 2.0 * pp * q / (1.0 - pp * q) * cross) - b2 * g * g;
    return p.gamma * p.gamma * v;
}

double signal_return_correlation(const TheoryParams& p) {
    return stationary_signal_return_cov(p) /
           std::sqrt(stationary_signal_var(p) * stationary_return_var(p));
}

AcarResult acar_general(const TheoryParams& p) {
    p.validate();
    const double m = p.mu_f / p.sigma_f;
    const double cdf_p = normal_cdf(m);
    const double cdf_m = normal_cdf(-m);
    const double e = std::exp(-0.5 * m * m) / std::sqrt(2.0 * kPi);
    const double rho = p.rho_xf;
    AcarResult r;
    r.expected = p.mu_x * (p.a * cdf_p + p.b * cdf_m) + p.sigma_x * (p.a - p.b) * rho * e;
    r.second_moment = p.mu_x * p.mu_x * (p.a * p.a * cdf_p + p.b * p.b * cdf_m) +
                      2.0 * p.mu_x * p.sigma_x * (p.a * p.a - p.b * p.b) * rho * e +
                      p.sigma_x * p.sigma_x *
                          (p.a * p.a * (rho * rho * (-m) * e + cdf_p) +
                           p.b * p.b * (rho * rho * m * e + cdf_m));
    const double var = r.second_moment - r.expected * r.expected;
    r.sharpe = var > 0.0 ? r.expected / std::sqrt(var) : 0.0;
    return r;
}

AcarResult sharpe_acar_binary(const TheoryParams& p) {
    p.validate();
    const double mu = p.mu_x;
    const double sx = p.sigma_x;
    const double rho = p.rho_xf;
    AcarResult r;
    if (rho == 0.0) {
        // the forecast carries no information; the position is a coin flip
        r.expected = 0.0;
    } else {
        const double z = mu / (sx * rho);
        r.expected = mu * (1.0 - 2.0 * normal_cdf(-z)) +
                     sx * std::sqrt(2.0 / kPi) * rho * std::exp(-0.5 * z * z);
    }
    r.second_moment = mu * mu + sx * sx;
    r.sharpe = r.expected / std::sqrt(r.second_moment - r.expected * r.expected);
    return r;
}

AcarResult acar_binary_stationary(const TheoryParams& p) {
    TheoryParams q = p;
    q.mu_x = 0.0;
    q.sigma_x = std::sqrt(stationary_return_var(p));
    q.rho_xf = signal_return_correlation(p);
    return sharpe_acar_binary(q);
}

double sharpe_linear_rule(double rho_xf) {
    if (!(std::abs(rho_xf) <= 1.0)) throw ParameterError("|rho_xf| must be <= 1");
    return rho_xf / std::sqrt(1.0 + rho_xf * rho_xf);
}

double linear_rule_stationary(const TheoryParams& p) {
    const double sr = stationary_signal_return_cov(p);
    if (sr == 0.0) return 0.0;
    const double ratio = stationary_signal_var(p) * stationary_return_var(p) / (sr * sr);
    return std::copysign(1.0 / std::sqrt(1.0 + ratio), sr);
}

double sharpe_ferreira(const Autocorrelation& rho, long n_window) {
    if (n_window < 1) throw ParameterError("n_window must be >= 1");
    double num = 0.0;
    for (long i = 1; i <= n_window; ++i) num += rho(i);
    double off = 0.0;
    for (long i = 1; i <= n_window; ++i)
        for (long j = 1; j <= n_window; ++j)
            if (i != j) off += rho(std::abs(i - j));
    return num / std::sqrt(static_cast<double>(n_window) + num * num + off);
}

Autocorrelation trend_autocorrelation(const TheoryParams& p) {
    const double b2 = p.beta0 * p.beta0;
    const double q = 1.0 - p.lambda;
    return [b2, q](long k) {
        if (k == 0) return 1.0;
        return b2 * std::pow(q, static_cast<double>(std::abs(k))) / (1.0 + b2);
    };
}

ZakamulinResult sharpe_zakamulin(const TheoryParams& p, double rho_n, double r_f, long n) {
    if (n < 1) throw ParameterError("momentum window must be >= 1");
    if (!(p.sigma_x > 0.0)) throw ParameterError("sigma must be > 0");
    if (!(std::abs(rho_n) <= 1.0)) throw ParameterError("|rho_n| must be <= 1");
    const double mu = p.mu_x;
    const double sigma = p.sigma_x;
    const double d = -std::sqrt(static_cast<double>(n)) * mu / sigma;
    const double g = sigma * rho_n * normal_pdf(d);
    ZakamulinResult z;
    z.expected = (2.0 * normal_cdf(-d) - 1.0) * mu + 2.0 * (g + normal_cdf(d) * r_f);
    z.variance = (mu * mu + sigma * sigma) + 4.0 * r_f * (g - (mu - r_f) * normal_cdf(d)) -
                 z.expected * z.expected;
    z.sharpe = z.variance > 0.0 ? (z.expected - r_f) / std::sqrt(z.variance)
                                : std::numeric_limits<double>::quiet_NaN();
    return z;
}

}  // namespace trendlab

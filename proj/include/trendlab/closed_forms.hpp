#pragma once

#include <functional>

namespace trendlab {

/// Parameters for the closed-form Sharpe and covariance expressions.
/// Only the fields a given function reads need to be set.
struct TheoryParams {
    double lambda = 0.01;
    double beta0 = 0.1;
    double eta = 0.01;
    double theta = 0.0;      // linear trading-cost coefficient
    double n_assets = 1.0;
    double rho_sq = 0.0;     // average squared correlation
    double rho_eps = 0.0;    // common eps correlation
    double sigma = 1.0;      // noise scale
    double gamma = 1.0;      // signal scale
    // bivariate-normal (X, F) moments for the binary-rule formulas
    double rho_xf = 0.0;
    double mu_x = 0.0;
    double sigma_x = 1.0;
    double mu_f = 0.0;
    double sigma_f = 1.0;
    double a = 1.0;
    double b = -1.0;

    void validate() const;
};

double beta_from_beta0(double lambda, double beta0);
double beta0_from_beta(double lambda, double beta);

/// Per-step Sharpe of the EMA linear strategy,
///   S = (b0^2 sqrt(2 eta) - (2/pi) theta sqrt(eta) (lambda+eta))
///       / sqrt((lambda+eta)^2 + 2 b0^2 (lambda+eta)).
double sharpe_grebenkov(const TheoryParams& p);
double sharpe_grebenkov_annualized(const TheoryParams& p);

/// lambda sqrt(1 + 2 b0^2 / lambda), the argmax of sharpe_grebenkov at theta = 0.
double eta_opt(const TheoryParams& p);

/// Uncorrelated: no correlation in eps or xi. SharedCorrelation: xi and eps
/// share one correlation matrix. UncorrelatedTrends: common eps correlation
/// rho_eps, independent xi.
enum class MultidimVariant { Uncorrelated, SharedCorrelation, UncorrelatedTrends };

/// sqrt(N q^2 (1-p^2) / D) with p = 1-eta, q = 1-lambda,
/// Q = (1-pq) sigma^4 / b0^4, R = 1 - q^2 - 2 p^2 q^2 and
/// D = Q^2 + 2Q + R, or Q^2 (1-rho_eps^2) + 2Q (1-rho_eps) + R for
/// UncorrelatedTrends.
double sharpe_multidim(const TheoryParams& p, MultidimVariant variant);

/// sqrt(N / (1 + (N-1) rho^2)).
double scaling_factor(double n_assets, double rho_sq);

// Signal s_t = gamma sum_{k<t} (1-eta)^{t-1-k} r_k traded against r_t, with
// the process started at t = 1 without trend history.

/// gamma b0^2 q / (1 - pq).
double stationary_signal_return_cov(const TheoryParams& p);
/// gamma^2 (1 + b0^2 (1+pq)/(1-pq)) / (1 - p^2).
double stationary_signal_var(const TheoryParams& p);
/// gamma^2 (1 + b0^2/(1-pq)) / (1 - p^2): the same expression without the
/// (1+pq) factor. Does not match the double sum; kept to measure the gap.
double stationary_signal_var_uncorrected(const TheoryParams& p);
/// Stationary return variance 1 + b0^2.
double stationary_return_var(const TheoryParams& p);

/// <s_t, r_t> at finite t >= 1.
double signal_return_cov_at(const TheoryParams& p, long t);
/// <s_t, s_t> at finite t >= 1.
double signal_var_at(const TheoryParams& p, long t);

/// Stationary correlation of s and r.
double signal_return_correlation(const TheoryParams& p);

struct AcarResult {
    double expected = 0.0;
    double second_moment = 0.0;
    double sharpe = 0.0;
};

/// Rule buying a units if F > 0 and b units otherwise, (X, F) bivariate normal.
AcarResult acar_general(const TheoryParams& p);
/// a = 1, b = -1 with mu_f / sigma_f = mu_x / (sigma_x rho_xf):
///   E  = mu_x (1 - 2 Phi(-mu_x/(sigma_x rho))) + sigma_x sqrt(2/pi) rho exp(-mu_x^2/(2 sigma_x^2 rho^2))
///   SR = E / sqrt(mu_x^2 + sigma_x^2 - E^2)
AcarResult sharpe_acar_binary(const TheoryParams& p);
/// sharpe_acar_binary fed with the stationary moments of the trend model.
AcarResult acar_binary_stationary(const TheoryParams& p);

/// rho / sqrt(1 + rho^2).
double sharpe_linear_rule(double rho_xf);
/// 1 / sqrt(1 + <s,s><r,r>/<s,r>^2), signed like <s,r>.
double linear_rule_stationary(const TheoryParams& p);

using Autocorrelation = std::function<double(long)>;

/// sum_i rho(i) / sqrt(n + (sum_i rho(i))^2 + sum_{i != j} rho(|i-j|)), i, j = 1..n.
double sharpe_ferreira(const Autocorrelation& rho, long n_window);
/// Normalized stationary autocorrelation b0^2 q^k / (1 + b0^2), k >= 1.
Autocorrelation trend_autocorrelation(const TheoryParams& p);

struct ZakamulinResult {
    double expected = 0.0;
    double variance = 0.0;
    double sharpe = 0.0;  // (E - r_f) / sqrt(Var)
};

/// Long/short on the sign of the n-day momentum with risk-free rate r_f.
/// mu, sigma are the per-step return moments (p.mu_x, p.sigma_x);
/// d = -sqrt(n) mu / sigma, g = sigma rho_n pdf(d).
ZakamulinResult sharpe_zakamulin(const TheoryParams& p, double rho_n, double r_f, long n);

double normal_cdf(double x);
double normal_pdf(double x);

}  // namespace trendlab

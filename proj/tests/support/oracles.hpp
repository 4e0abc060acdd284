#pragma once

// Brute-force reference computations. Everything here is written from the
// model definitions directly and shares no code with the library.

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

namespace oracle {

/// Covariance of r_j and r_k (1-based days) for a process whose trend state
/// starts at zero on day 1: delta_jk + b0^2 q^|j-k| (1 - q^(2 (min(j,k) - 1))).
inline double return_cov(long j, long k, double lambda, double beta0, bool stationary) {
    const double q = 1.0 - lambda;
    const double b2 = beta0 * beta0;
    const long lo = std::min(j, k);
    const double base = b2 * std::pow(q, static_cast<double>(std::abs(j - k)));
    const double ramp = stationary ? 1.0 : 1.0 - std::pow(q, 2.0 * static_cast<double>(lo - 1));
    return (j == k ? 1.0 : 0.0) + base * ramp;
}

/// <s_t, r_t> with s_t = gamma sum_{k<t} (1-eta)^{t-1-k} r_k, as an explicit sum.
inline double signal_return_cov(long t, double lambda, double beta0, double eta, double gamma,
                                bool stationary) {
    const double p = 1.0 - eta;
    double acc = 0.0;
    for (long k = 1; k < t; ++k)
        acc += std::pow(p, static_cast<double>(t - 1 - k)) *
               return_cov(k, t, lambda, beta0, stationary);
    return gamma * acc;
}

/// <s_t, s_t> as an explicit double sum.
inline double signal_var(long t, double lambda, double beta0, double eta, double gamma,
                         bool stationary) {
    const double p = 1.0 - eta;
    std::vector<double> w(static_cast<std::size_t>(t));
    for (long k = 1; k < t; ++k) w[static_cast<std::size_t>(k)] = std::pow(p, static_cast<double>(t - 1 - k));
    double acc = 0.0;
    for (long k = 1; k < t; ++k)
        for (long l = 1; l < t; ++l)
            acc += w[static_cast<std::size_t>(k)] * w[static_cast<std::size_t>(l)] *
                   return_cov(k, l, lambda, beta0, stationary);
    return gamma * gamma * acc;
}

/// Per-step Sharpe of the EMA strategy, written out from its definition.
inline double sharpe_formula(double lambda, double beta0, double eta, double theta = 0.0) {
    const double s = lambda + eta;
    const double b2 = beta0 * beta0;
    return (b2 * std::sqrt(2.0 * eta) - 2.0 / std::numbers::pi * theta * std::sqrt(eta) * s) /
           std::sqrt(s * s + 2.0 * b2 * s);
}

/// Golden-section maximizer on [lo, hi] in log space.
inline double argmax_log(const std::function<double(double)>& f, double lo, double hi,
                         double tol = 1e-14) {
    double a = std::log(lo), b = std::log(hi);
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - g * (b - a), d = a + g * (b - a);
    double fc = f(std::exp(c)), fd = f(std::exp(d));
    while (b - a > tol) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(std::exp(c));
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(std::exp(d));
        }
    }
    return std::exp(0.5 * (a + b));
}

/// E[H], E[H^2] for H = a X 1{F>0} + b X 1{F<=0}, (X, F) bivariate normal,
/// by 2-D Gauss-Hermite-free trapezoid integration on a wide grid.
inline std::pair<double, double> acar_moments(double mu_x, double sx, double mu_f, double sf,
                                              double rho, double a, double b, int n = 1601,
                                              double width = 9.0) {
    const double h = 2.0 * width / (n - 1);
    double m1 = 0.0, m2 = 0.0;
    const double c = std::sqrt(1.0 - rho * rho);
    for (int i = 0; i < n; ++i) {
        const double z1 = -width + i * h;
        const double w1 = std::exp(-0.5 * z1 * z1);
        for (int j = 0; j < n; ++j) {
            const double z2 = -width + j * h;
            const double w = w1 * std::exp(-0.5 * z2 * z2);
            const double x = mu_x + sx * z1;
            const double f = mu_f + sf * (rho * z1 + c * z2);
            const double hv = (f > 0.0 ? a : b) * x;
            m1 += w * hv;
            m2 += w * hv * hv;
        }
    }
    const double norm = h * h / (2.0 * std::numbers::pi);
    return {m1 * norm, m2 * norm};
}

/// eta sum_k (1-eta)^k r_{t-k} by direct summation.
inline Eigen::VectorXd ema_direct(double eta, const Eigen::VectorXd& r) {
    Eigen::VectorXd out(r.size());
    for (Eigen::Index t = 0; t < r.size(); ++t) {
        double acc = 0.0;
        for (Eigen::Index k = 0; k <= t; ++k)
            acc += eta * std::pow(1.0 - eta, static_cast<double>(k)) * r[t - k];
        out[t] = acc;
    }
    return out;
}

/// Weighted Pearson correlation with weights w over rows where both are finite.
inline double weighted_corr(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                            const Eigen::VectorXd& w) {
    double sw = 0, sx = 0, sy = 0;
    for (Eigen::Index i = 0; i < x.size(); ++i)
        if (std::isfinite(x[i]) && std::isfinite(y[i])) {
            sw += w[i];
            sx += w[i] * x[i];
            sy += w[i] * y[i];
        }
    const double mx = sx / sw, my = sy / sw;
    double cxy = 0, cxx = 0, cyy = 0;
    for (Eigen::Index i = 0; i < x.size(); ++i)
        if (std::isfinite(x[i]) && std::isfinite(y[i])) {
            cxy += w[i] * (x[i] - mx) * (y[i] - my);
            cxx += w[i] * (x[i] - mx) * (x[i] - mx);
            cyy += w[i] * (y[i] - my) * (y[i] - my);
        }
    return cxy / std::sqrt(cxx * cyy);
}

/// Random SPD correlation matrix of size n.
inline Eigen::MatrixXd random_correlation(int n, unsigned seed) {
    std::mt19937_64 eng(seed);
    std::normal_distribution<double> z;
    Eigen::MatrixXd a(n, 2 * n);
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j) a(i, j) = z(eng);
    Eigen::MatrixXd c = a * a.transpose();
    const Eigen::VectorXd d = c.diagonal().cwiseSqrt().cwiseInverse();
    c = d.asDiagonal() * c * d.asDiagonal();
    c.diagonal().setOnes();
    return c;
}

}  // namespace oracle

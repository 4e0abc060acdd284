#include "trendlab/process_model.hpp"

#include "trendlab/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace trendlab {
namespace {

void check_lambda(double lambda) {
    if (!(lambda > 0.0 && lambda <= 1.0))
        throw ParameterError("lambda must lie in (0, 1], got " + std::to_string(lambda));
}

}  // namespace

ProcessParams ProcessParams::from_beta0(double lambda, double beta0, Eigen::MatrixXd corr_eps,
                                        Eigen::MatrixXd corr_xi) {
    check_lambda(lambda);
    if (!(beta0 >= 0.0)) throw ParameterError("beta0 must be >= 0");
    ProcessParams p;
    p.lambda = lambda;
    p.beta0 = beta0;
    p.beta = beta0 * std::sqrt(lambda * (2.0 - lambda));
    p.corr_eps = std::move(corr_eps);
    p.corr_xi = std::move(corr_xi);
    p.validate();
    return p;
}

ProcessParams ProcessParams::from_beta(double lambda, double beta, Eigen::MatrixXd corr_eps,
                                       Eigen::MatrixXd corr_xi) {
    check_lambda(lambda);
    if (!(beta >= 0.0)) throw ParameterError("beta must be >= 0");
    ProcessParams p;
    p.lambda = lambda;
    p.beta = beta;
    p.beta0 = beta / std::sqrt(lambda * (2.0 - lambda));
    p.corr_eps = std::move(corr_eps);
    p.corr_xi = std::move(corr_xi);
    p.validate();
    return p;
}

ProcessParams ProcessParams::scalar(double lambda, double beta0) {
    return from_beta0(lambda, beta0, Eigen::MatrixXd::Identity(1, 1),
                      Eigen::MatrixXd::Identity(1, 1));
}

void ProcessParams::validate() const {
    check_lambda(lambda);
    if (!(beta >= 0.0) || !(beta0 >= 0.0)) throw ParameterError("trend strength must be >= 0");
    const double implied = beta0 * std::sqrt(lambda * (2.0 - lambda));
    if (std::abs(implied - beta) > 1e-12 * std::max(1.0, beta))
        throw ParameterError("beta and beta0 are inconsistent");
    if (corr_eps.rows() < 1) throw ParameterError("need at least one asset");
    if (corr_xi.rows() != corr_eps.rows() || corr_xi.cols() != corr_eps.cols())
        throw ParameterError("corr_eps and corr_xi must have the same shape");
    correlation_factor(corr_eps, "corr_eps");
    correlation_factor(corr_xi, "corr_xi");
}

Eigen::MatrixXd uniform_correlation(Eigen::Index n, double rho) {
    if (n < 1) throw ParameterError("correlation size must be >= 1");
    Eigen::MatrixXd c = Eigen::MatrixXd::Constant(n, n, rho);
    c.diagonal().setOnes();
    return c;
}

Eigen::MatrixXd correlation_factor(const Eigen::MatrixXd& corr, const char* name, double tol) {
    const std::string label(name);
    if (corr.rows() != corr.cols()) throw MatrixValidityError(label + " is not square");
    if (!corr.allFinite()) throw MatrixValidityError(label + " has non-finite entries");
    if ((corr - corr.transpose()).cwiseAbs().maxCoeff() > tol)
        throw MatrixValidityError(label + " is not symmetric");
    if ((corr.diagonal().array() - 1.0).abs().maxCoeff() > tol)
        throw MatrixValidityError(label + " does not have a unit diagonal");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(corr);
    if (es.info() != Eigen::Success)
        throw MatrixValidityError(label + ": eigendecomposition failed");
    const Eigen::VectorXd ev = es.eigenvalues();
    if (ev.minCoeff() < -tol)
        throw MatrixValidityError(label + " is not positive semi-definite (min eigenvalue " +
                                  std::to_string(ev.minCoeff()) + ")");
    const Eigen::VectorXd root = ev.cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * root.asDiagonal();
}

std::ptrdiff_t default_burn_in(double lambda) {
    check_lambda(lambda);
    return static_cast<std::ptrdiff_t>(std::ceil(20.0 / lambda));
}

ProcessSimulator::ProcessSimulator(const ProcessParams& params, std::uint64_t seed)
    : n_(params.n_assets()),
      decay_(1.0 - params.lambda),
      beta_(params.beta),
      factor_eps_(correlation_factor(params.corr_eps, "corr_eps")),
      factor_xi_(correlation_factor(params.corr_xi, "corr_xi")),
      state_(Eigen::VectorXd::Zero(params.n_assets())),
      z_eps_(params.n_assets()),
      z_xi_(params.n_assets()),
      engine_(make_engine(seed)) {
    check_lambda(params.lambda);
}

void ProcessSimulator::next(Eigen::Ref<Eigen::VectorXd> returns,
                            Eigen::Ref<Eigen::VectorXd> trend) {
    for (Eigen::Index i = 0; i < n_; ++i) z_eps_[i] = normal_(engine_);
    for (Eigen::Index i = 0; i < n_; ++i) z_xi_[i] = normal_(engine_);
    trend = beta_ * state_;
    returns.noalias() = factor_eps_ * z_eps_;
    returns += trend;
    // xi_t only enters from t+1 on
    state_ = decay_ * state_;
    state_.noalias() += factor_xi_ * z_xi_;
}

double ProcessSimulator::next_scalar() {
    const double e = normal_(engine_);
    const double x = normal_(engine_);
    const double r = e + beta_ * state_[0];
    state_[0] = decay_ * state_[0] + x;
    return r;
}

SimulatedPath simulate(const ProcessParams& params, std::ptrdiff_t t_steps,
                       std::optional<std::ptrdiff_t> burn_in, std::uint64_t seed) {
    params.validate();
    if (t_steps < 1) throw ParameterError("t_steps must be >= 1");
    const std::ptrdiff_t burn = burn_in.value_or(default_burn_in(params.lambda));
    if (burn < 0) throw ParameterError("burn_in must be >= 0");

    const auto n = params.n_assets();
    ProcessSimulator sim(params, seed);
    SimulatedPath path;
    path.seed = seed;
    path.burn_in = burn;
    path.returns.resize(t_steps, n);
    path.trend.resize(t_steps, n);

    Eigen::VectorXd r(n);
    Eigen::VectorXd m(n);
    for (std::ptrdiff_t t = 0; t < burn; ++t) sim.next(r, m);
    for (std::ptrdiff_t t = 0; t < t_steps; ++t) {
        sim.next(r, m);
        path.returns.row(t) = r.transpose();
        path.trend.row(t) = m.transpose();
    }
    return path;
}

std::vector<SimulatedPath> simulate_batch(const ProcessParams& params, std::ptrdiff_t t_steps,
                                          std::optional<std::ptrdiff_t> burn_in,
                                          std::uint64_t root_seed, std::size_t n_paths,
                                          Exec exec) {
    params.validate();
    return map_indexed<SimulatedPath>(
        n_paths,
        [&](std::size_t i) { return simulate(params, t_steps, burn_in, derive_seed(root_seed, i)); },
        exec);
}

double stationary_autocovariance(const ProcessParams& params, std::ptrdiff_t lag) {
    if (lag < 0) throw ParameterError("lag must be >= 0");
    const double b2 = params.beta0 * params.beta0;
    const double trend = b2 * std::pow(1.0 - params.lambda, static_cast<double>(lag));
    return (lag == 0 ? 1.0 : 0.0) + trend;
}

double variogram_theoretical(const ProcessParams& params, std::ptrdiff_t lag) {
    if (lag < 1) throw ParameterError("variogram lag must be >= 1");
    const double tau = static_cast<double>(lag);
    const double lambda = params.lambda;
    const double b2 = params.beta0 * params.beta0;
    // sum_{d=1}^{tau-1} (tau-d) q^d = q (tau (1-q) - (1-q^tau)) / (1-q)^2
    double pairs = 0.0;
    if (lambda == 1.0) {
        pairs = 0.0;
    } else {
        const double q = 1.0 - lambda;
        const double one_minus_q_tau = -std::expm1(tau * std::log1p(-lambda));
        pairs = q * (tau * lambda - one_minus_q_tau) / (lambda * lambda);
    }
    return tau * (1.0 + b2) + 2.0 * b2 * pairs;
}

namespace {

// Mean-removed variance of overlapping tau-sums over series[begin, end).
double window_sum_variance(const std::vector<double>& prefix, std::ptrdiff_t begin,
                           std::ptrdiff_t end, std::ptrdiff_t tau) {
    const std::ptrdiff_t m = end - begin - tau + 1;
    if (m < 2) return std::numeric_limits<double>::quiet_NaN();
    double mean = 0.0;
    for (std::ptrdiff_t i = begin; i < begin + m; ++i) mean += prefix[i + tau] - prefix[i];
    mean /= static_cast<double>(m);
    double ss = 0.0;
    for (std::ptrdiff_t i = begin; i < begin + m; ++i) {
        const double d = prefix[i + tau] - prefix[i] - mean;
        ss += d * d;
    }
    return ss / static_cast<double>(m - 1);
}

}  // namespace

std::vector<VariogramPoint> variogram_empirical(const Eigen::Ref<const Eigen::VectorXd>& series,
                                                const std::vector<std::ptrdiff_t>& lags) {
    if (lags.empty()) throw ParameterError("no variogram lags given");
    const std::ptrdiff_t n = series.size();
    const std::ptrdiff_t max_lag = *std::max_element(lags.begin(), lags.end());
    if (*std::min_element(lags.begin(), lags.end()) < 1)
        throw ParameterError("variogram lags must be >= 1");
    if (n < 2 * max_lag)
        throw InsufficientDataError("variogram needs at least " + std::to_string(2 * max_lag) +
                                    " observations, got " + std::to_string(n));
    if (!series.allFinite()) throw DataError("variogram input has non-finite values");

    std::vector<double> prefix(static_cast<std::size_t>(n) + 1, 0.0);
    for (std::ptrdiff_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + series[i];

    const std::ptrdiff_t block = n / kVariogramBatches;
    std::vector<VariogramPoint> out;
    out.reserve(lags.size());
    for (const auto tau : lags) {
        VariogramPoint p;
        p.lag = tau;
        p.value = window_sum_variance(prefix, 0, n, tau);
        if (block >= 2 * tau) {
            double sum = 0.0;
            double sum2 = 0.0;
            for (int b = 0; b < kVariogramBatches; ++b) {
                const double v = window_sum_variance(prefix, b * block, (b + 1) * block, tau);
                sum += v;
                sum2 += v * v;
            }
            const double k = kVariogramBatches;
            const double var = std::max(0.0, (sum2 - sum * sum / k) / (k - 1.0));
            p.std_error = std::sqrt(var / k);
        } else {
            p.std_error = std::numeric_limits<double>::quiet_NaN();
        }
        out.push_back(p);
    }
    return out;
}

Eigen::VectorXd standardize_by_trailing_vol(const Eigen::Ref<const Eigen::VectorXd>& series,
                                            double span) {
    if (!(span >= 1.0)) throw ParameterError("volatility span must be >= 1");
    const auto n = series.size();
    const auto skip = static_cast<Eigen::Index>(std::ceil(span));
    if (n <= skip) throw InsufficientDataError("series shorter than the volatility span");
    const double eta = 1.0 / span;
    double var = series.head(skip).squaredNorm() / static_cast<double>(skip);
    if (!(var > 0.0)) throw DataError("zero volatility in standardization window");
    Eigen::VectorXd out(n - skip);
    for (Eigen::Index t = skip; t < n; ++t) {
        out[t - skip] = series[t] / std::sqrt(var);
        var = (1.0 - eta) * var + eta * series[t] * series[t];
    }
    return out;
}

}  // namespace trendlab

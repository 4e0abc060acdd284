#pragma once

#include "trendlab/parallel.hpp"
#include "trendlab/rng.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <vector>

namespace trendlab {

/// Parameters of the diffusive trend model
///
///     r_{i,t} = eps_{i,t} + beta * sum_{k<t} (1-lambda)^{t-1-k} xi_{i,k}
///
/// with eps and xi standard Gaussian, independent in time, and correlated
/// across instruments by `corr_eps` and `corr_xi`. `beta` and `beta0` are
/// tied by beta = beta0 * sqrt(lambda (2 - lambda)); use the factories so the
/// two never disagree.
struct ProcessParams {
    double lambda = 0.01;
    double beta = 0.0;
    double beta0 = 0.0;
    Eigen::MatrixXd corr_eps = Eigen::MatrixXd::Identity(1, 1);
    Eigen::MatrixXd corr_xi = Eigen::MatrixXd::Identity(1, 1);

    static ProcessParams from_beta0(double lambda, double beta0, Eigen::MatrixXd corr_eps,
                                    Eigen::MatrixXd corr_xi);
    static ProcessParams from_beta(double lambda, double beta, Eigen::MatrixXd corr_eps,
                                   Eigen::MatrixXd corr_xi);
    /// Single instrument.
    static ProcessParams scalar(double lambda, double beta0);

    Eigen::Index n_assets() const noexcept { return corr_eps.rows(); }

    /// Throws ParameterError / MatrixValidityError if an invariant is broken.
    void validate() const;
};

/// N x N matrix with unit diagonal and constant off-diagonal `rho`.
Eigen::MatrixXd uniform_correlation(Eigen::Index n, double rho);

/// Checks symmetry, unit diagonal and PSD (eigenvalues >= -tol) and returns a
/// factor L with L L^T equal to the matrix after clipping negative
/// eigenvalues at zero.
Eigen::MatrixXd correlation_factor(const Eigen::MatrixXd& corr, const char* name,
                                   double tol = 1e-10);

struct SimulatedPath {
    Eigen::MatrixXd returns;  // T x N
    Eigen::MatrixXd trend;    // T x N, the beta * sum(...) component
    std::uint64_t seed = 0;
    std::ptrdiff_t burn_in = 0;
};

/// Default burn-in, ceil(20 / lambda): the trend variance is then within
/// exp(-40) of its stationary value.
std::ptrdiff_t default_burn_in(double lambda);

/// Incremental generator. Each call to `next` draws one day of
/// (eps, xi) for all instruments and advances the latent trend.
class ProcessSimulator {
public:
    ProcessSimulator(const ProcessParams& params, std::uint64_t seed);

    /// Writes r_t and the trend component of r_t.
    void next(Eigen::Ref<Eigen::VectorXd> returns, Eigen::Ref<Eigen::VectorXd> trend);
    /// Scalar fast path for N = 1.
    double next_scalar();

    Eigen::Index n_assets() const noexcept { return n_; }

private:
    Eigen::Index n_;
    double decay_;
    double beta_;
    Eigen::MatrixXd factor_eps_;
    Eigen::MatrixXd factor_xi_;
    Eigen::VectorXd state_;  // sum_{k<t} (1-lambda)^{t-1-k} xi_k
    Eigen::VectorXd z_eps_;
    Eigen::VectorXd z_xi_;
    Engine engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Simulate `t_steps` retained days after discarding `burn_in` days
/// (default_burn_in(lambda) when not given). Bit-reproducible in
/// (params, t_steps, burn_in, seed).
SimulatedPath simulate(const ProcessParams& params, std::ptrdiff_t t_steps,
                       std::optional<std::ptrdiff_t> burn_in, std::uint64_t seed);

/// Independent paths with seeds derive_seed(root_seed, i).
std::vector<SimulatedPath> simulate_batch(const ProcessParams& params, std::ptrdiff_t t_steps,
                                          std::optional<std::ptrdiff_t> burn_in,
                                          std::uint64_t root_seed, std::size_t n_paths,
                                          Exec exec = Exec::Parallel);

/// Stationary lag-`lag` autocovariance of a single instrument's returns:
/// delta_{lag,0} + beta0^2 (1-lambda)^lag.
double stationary_autocovariance(const ProcessParams& params, std::ptrdiff_t lag);

/// Variance of the sum of `lag` consecutive stationary returns (closed form).
double variogram_theoretical(const ProcessParams& params, std::ptrdiff_t lag);

struct VariogramPoint {
    std::ptrdiff_t lag = 0;
    double value = 0.0;
    double std_error = 0.0;  // batch-means over kVariogramBatches contiguous blocks
};

inline constexpr int kVariogramBatches = 20;

/// Empirical variogram: for each lag tau, the mean-removed sample variance of
/// all overlapping tau-step sums. The standard error comes from splitting the
/// series into kVariogramBatches contiguous blocks and taking the spread of
/// the per-block estimates.
std::vector<VariogramPoint> variogram_empirical(const Eigen::Ref<const Eigen::VectorXd>& series,
                                                const std::vector<std::ptrdiff_t>& lags);

/// r_t / sigma_{t-1}, sigma from an EMA of squared returns with decay 1/span.
/// The first `span` outputs are dropped.
Eigen::VectorXd standardize_by_trailing_vol(const Eigen::Ref<const Eigen::VectorXd>& series,
                                            double span);

}  // namespace trendlab

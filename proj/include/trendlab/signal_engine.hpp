#pragma once

#include "trendlab/parallel.hpp"
#include "trendlab/panel.hpp"

#include <Eigen/Dense>

#include <array>
#include <string>
#include <vector>

namespace trendlab {

/// Volatility-normalized EMA of one instrument:
///
///     sigma2_{t+1} = (1-eta) sigma2_t + eta r_{t+1}^2
///     phi_{t+1}    = (1-eta) phi_t + sqrt(eta) r_{t+1} / sigma_t
///
/// The division uses the sigma from *before* the update. With
/// `frozen_sigma` set, sigma stays at 1 and phi is a plain linear filter.
struct EmaState {
    double phi = 0.0;
    double sigma2 = 1.0;
    double eta = 0.01;
    // slow average of sigma, reference for the floor
    double sigma_ref = 1.0;
    long long n_updates = 0;
    bool frozen_sigma = false;

    /// phi_0 = 0, sigma2_0 = sample variance of the first max(20, 1/eta)
    /// returns in `history` (all of them if fewer).
    static EmaState seeded(double eta, const Eigen::Ref<const Eigen::VectorXd>& history);
    static EmaState unit_sigma(double eta);

    /// Number of leading outputs flagged as warm-up, ceil(3/eta).
    long long warmup() const;
    bool warming_up() const { return n_updates < warmup(); }
    double sigma() const;
};

/// Decay of the slow reference average that sets the sigma floor.
inline constexpr double kSigmaRefDecay = 1.0 / 1000.0;
/// sigma is never allowed below this fraction of sigma_ref.
inline constexpr double kSigmaFloor = 1e-8;

EmaState ema_update(EmaState state, double r);

enum class IndicatorKind { EMA, MACD3, MOM, SMA, EMA_CROSS, SMA_CROSS, BB_MIXTURE, NONLINEAR_CUBIC };

const char* to_string(IndicatorKind kind);
IndicatorKind indicator_kind_from_string(const std::string& name);

/// Declarative indicator description. Parameter meaning by kind:
///   EMA              etas = {eta}
///   MACD3            etas = {eta1, eta2, eta3}, weights = {w1, w2, w3}
///   MOM, SMA         windows = {n}
///   EMA_CROSS        etas = {eta_fast, eta_slow}
///   SMA_CROSS        windows = {n_fast, n_slow}
///   BB_MIXTURE       etas = {eta}, windows = {max_n}, delta_max, n_bands
///   NONLINEAR_CUBIC  etas = {eta}, cubic = c
struct IndicatorSpec {
    IndicatorKind kind = IndicatorKind::EMA;
    std::vector<double> etas;
    std::vector<double> weights;
    std::vector<long> windows;
    bool zero_slope = false;
    double delta_max = 4.0;
    long n_bands = 4000;
    double cubic = 0.33;
    /// Decay of the volatility estimate used by the window-based kinds.
    double vol_eta = 1.0 / 40.0;

    static IndicatorSpec ema(double eta);
    /// With `zero_slope`, w1 is replaced by -(w2 sqrt(eta2) + w3 sqrt(eta3)) / sqrt(eta1).
    static IndicatorSpec macd3(std::array<double, 3> etas, std::array<double, 3> weights,
                               bool zero_slope);
    static IndicatorSpec mom(long n);
    static IndicatorSpec sma(long n);
    static IndicatorSpec ema_cross(double eta_fast, double eta_slow);
    static IndicatorSpec sma_cross(long n_fast, long n_slow);
    static IndicatorSpec bb_mixture(double eta, long max_n, double delta_max, long n_bands);
    static IndicatorSpec nonlinear_cubic(double eta, double c = 0.33);

    /// Throws ParameterError on malformed parameters.
    void validate() const;
    /// MACD3 weights after the zero-slope constraint is applied.
    std::array<double, 3> effective_weights() const;
    bool is_linear() const;
    /// Longest memory in days, used for warm-up.
    double timescale() const;
    std::string label() const;
};

/// Weighted sum of three EMA values. Uses effective_weights().
double macd3(const std::array<double, 3>& phis, const IndicatorSpec& spec);

/// psi_0..psi_max_lag with indicator_t = sum_k psi_k r_{t-k} for unit-volatility
/// inputs. Price-gap conventions: SMA(n) is P_t minus the mean of the n previous
/// prices (psi_k = (n-k)/n); EMA_CROSS is the difference of the two price-gap
/// EMAs, psi_k = (1-eta_slow)^k - (1-eta_fast)^k.
Eigen::VectorXd sensitivity_spectrum(const IndicatorSpec& spec, long max_lag);

/// Indicator series over one instrument. Output t uses returns through t.
/// With `frozen_sigma` all volatility normalizations are replaced by 1.
Eigen::VectorXd evaluate_indicator(const IndicatorSpec& spec,
                                   const Eigen::Ref<const Eigen::VectorXd>& returns,
                                   bool frozen_sigma = false);

/// Same for every instrument of a panel. Cells before an instrument's first
/// active day, and after its last, are NaN. Instruments run independently.
Eigen::MatrixXd evaluate_indicator(const IndicatorSpec& spec, const ReturnsPanel& panel,
                                   Exec exec = Exec::Parallel);

struct SmaWeights {
    double eta = 0.0;
    Eigen::VectorXd weights;   // weights[n-1] applies to SMA(n)
    double truncated_mass = 0.0;  // mass beyond max_n before renormalization

    /// Density against log(n), n * w_n, and its argmax.
    Eigen::VectorXd log_density() const;
    long log_density_peak() const;
};

/// Decomposition of the unit-mass EMA eta sum_k (1-eta)^k r_{t-k} into
/// simple moving averages of returns: w_n = n eta^2 (1-eta)^{n-1}, renormalized
/// over n <= max_n. Throws if the dropped mass exceeds kSmaTruncation.
SmaWeights ema_to_sma_weights(double eta, long max_n);

inline constexpr double kSmaTruncation = 1e-8;

/// sum_n w_n SMA_t(n) for every t (SMA over available history when t < n).
Eigen::VectorXd reconstruct_from_sma(const SmaWeights& w,
                                     const Eigen::Ref<const Eigen::VectorXd>& returns);
/// eta sum_k (1-eta)^k r_{t-k}, the reference for the reconstruction.
Eigen::VectorXd unit_mass_ema(double eta, const Eigen::Ref<const Eigen::VectorXd>& returns);

/// sign(v) if |v| > delta, else 0.
int bb_elementary(double sma_value, double delta);

/// Midpoint rule for int_0^delta_max bb_elementary(v, d) dd with n_bands
/// bands. Equals v up to h/2, h = delta_max / n_bands, when |v| <= delta_max.
double bb_quadrature(double sma_value, double delta_max, long n_bands);
/// Serial reference for bb_quadrature (plain loop, no closed-form shortcut).
double bb_quadrature_reference(double sma_value, double delta_max, long n_bands);

/// Quadrature for many values at once, parallel over values.
Eigen::VectorXd bb_quadrature_batch(const Eigen::Ref<const Eigen::VectorXd>& values,
                                    double delta_max, long n_bands, Exec exec = Exec::Parallel);

/// phi - c phi^3.
double nonlinear_cubic(double phi, double c = 0.33);

}  // namespace trendlab

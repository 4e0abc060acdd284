#pragma once

#include "trendlab/panel.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace trendlab {

enum class Cleaning { None, Clip, Shrink };

const char* to_string(Cleaning c);
Cleaning cleaning_from_string(const std::string& name);

struct CorrEstimate {
    Eigen::MatrixXd matrix;
    double effective_samples = 0.0;
    Cleaning cleaning = Cleaning::None;
};

struct VolEstimate {
    Eigen::VectorXd sigma;
};

/// Minimum number of weekly observations before a correlation is trusted.
inline constexpr int kMinCorrWeeks = 26;
/// Eigenvalue floor used by inv_sqrt and inverse.
inline constexpr double kEigenFloor = 1e-10;

/// Exponentially weighted correlation of weekly returns, updated one week at a
/// time. Each pair keeps its own weighted moments over the weeks where both
/// instruments were active, so late starters do not bias early pairs. Pairs
/// with fewer than kMinCorrWeeks common weeks fall back to 0.
class EwmaCorrelation {
public:
    EwmaCorrelation(Eigen::Index n_assets, double span_days);

    /// Weekly decay 1 - (1 - 1/span_days)^5.
    static double weekly_decay(double span_days);

    /// One week of returns; NaN entries mark inactive instruments.
    void add_week(const Eigen::Ref<const Eigen::VectorXd>& weekly);

    long weeks() const noexcept { return weeks_; }
    /// (sum w)^2 / sum w^2 over all weeks seen.
    double effective_samples() const;

    /// Correlation over `subset` (indices into the full universe). In strict
    /// mode a zero-variance instrument is an error; otherwise its
    /// correlations are set to 0.
    Eigen::MatrixXd correlation(const std::vector<Eigen::Index>& subset, bool strict,
                                const std::vector<std::string>* names = nullptr) const;

private:
    Eigen::Index n_;
    double alpha_;
    long weeks_ = 0;
    double w1_ = 0.0;
    double w2_ = 0.0;
    Eigen::MatrixXd weight_;  // per pair
    Eigen::MatrixXd sum_i_;   // sum w x_i over weeks where (i, j) both active
    Eigen::MatrixXd sum_ii_;  // sum w x_i^2, same convention
    Eigen::MatrixXd sum_ij_;  // sum w x_i x_j
    Eigen::MatrixXi count_;
};

/// Non-overlapping 5-row sums anchored at the first row; a week is NaN for an
/// instrument unless all five days are active. A trailing partial week is
/// dropped.
Eigen::MatrixXd weekly_returns(const ReturnsPanel& panel);

/// Weekly EWMA correlation over the whole panel.
CorrEstimate estimate_correlation(const ReturnsPanel& panel, double span_days = 750.0);

/// Default shrinkage intensity q / (1 + q).
double default_shrink_intensity(double q);

/// clip: eigenvalues below (1 + sqrt q)^2 replaced by their mean, then unit
/// diagonal restored. shrink: (1 - a) C + a I with a = intensity (or
/// default_shrink_intensity(q) when intensity < 0). none: unchanged.
CorrEstimate clean_correlation(const CorrEstimate& est, Cleaning method, double q,
                               double intensity = -1.0);

/// Symmetric M with M C M = I, via eigendecomposition. Throws
/// SingularMatrixError if an eigenvalue is <= kEigenFloor.
Eigen::MatrixXd inv_sqrt(const Eigen::MatrixXd& c);
/// Inverse via the same eigendecomposition and floor.
Eigen::MatrixXd inverse_spd(const Eigen::MatrixXd& c);

/// Throws MatrixValidityError unless c is square, symmetric and unit diagonal.
void check_correlation_shape(const Eigen::MatrixXd& c, double tol = 1e-10);

/// Per-instrument EMA of squared returns with decay 1/span.
class EwmaVolatility {
public:
    EwmaVolatility(Eigen::Index n_assets, double span_days);
    /// NaN entries leave that instrument untouched.
    void update(const Eigen::Ref<const Eigen::VectorXd>& r);
    void update(Eigen::Index i, double r);
    /// Seed instrument i with the sample variance of `history`.
    void seed(Eigen::Index i, const Eigen::Ref<const Eigen::VectorXd>& history);
    bool seeded(Eigen::Index i) const { return seeded_[static_cast<std::size_t>(i)]; }
    double sigma(Eigen::Index i) const;
    Eigen::Index n_assets() const noexcept { return var_.size(); }

private:
    double eta_;
    Eigen::VectorXd var_;
    std::vector<bool> seeded_;
};

/// sqrt of the EMA (decay 1/span) of squared daily returns, seeded like
/// EmaState, evaluated at the last day of each instrument's active range.
VolEstimate estimate_volatility(const ReturnsPanel& panel, double span_days = 40.0);

double condition_number(const Eigen::MatrixXd& c);

}  // namespace trendlab

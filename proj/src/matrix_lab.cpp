#include "trendlab/matrix_lab.hpp"

#include "trendlab/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

namespace trendlab {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& m) { return 0.5 * (m + m.transpose()); }

Eigen::MatrixXd unit_diagonal(const Eigen::MatrixXd& m) {
    const Eigen::VectorXd d = m.diagonal().cwiseMax(kEigenFloor).cwiseSqrt().cwiseInverse();
    Eigen::MatrixXd out = d.asDiagonal() * m * d.asDiagonal();
    out = symmetrize(out);
    out.diagonal().setOnes();
    return out;
}

Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> decompose(const Eigen::MatrixXd& c) {
    if (c.rows() != c.cols()) throw MatrixValidityError("matrix is not square");
    if (!c.allFinite()) throw MatrixValidityError("matrix has non-finite entries");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrize(c));
    if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
    if (es.eigenvalues().minCoeff() <= kEigenFloor)
        throw SingularMatrixError("correlation matrix is singular (min eigenvalue " +
                                  std::to_string(es.eigenvalues().minCoeff()) +
                                  "); clean it (clip or shrink) before inverting");
    return es;
}

}  // namespace

const char* to_string(Cleaning c) {
    switch (c) {
        case Cleaning::None: return "none";
        case Cleaning::Clip: return "clip";
        case Cleaning::Shrink: return "shrink";
    }
    return "?";
}

Cleaning cleaning_from_string(const std::string& name) {
    if (name == "none") return Cleaning::None;
    if (name == "clip") return Cleaning::Clip;
    if (name == "shrink") return Cleaning::Shrink;
    throw ParameterError("unknown cleaning method '" + name + "' (none|clip|shrink)");
}

// ---- EwmaCorrelation ---------------------------------------------------------

EwmaCorrelation::EwmaCorrelation(Eigen::Index n_assets, double span_days)
    : n_(n_assets),
      alpha_(weekly_decay(span_days)),
      weight_(Eigen::MatrixXd::Zero(n_assets, n_assets)),
      sum_i_(Eigen::MatrixXd::Zero(n_assets, n_assets)),
      sum_ii_(Eigen::MatrixXd::Zero(n_assets, n_assets)),
      sum_ij_(Eigen::MatrixXd::Zero(n_assets, n_assets)),
      count_(Eigen::MatrixXi::Zero(n_assets, n_assets)) {
    if (n_assets < 1) throw ParameterError("correlation needs at least one instrument");
}

double EwmaCorrelation::weekly_decay(double span_days) {
    if (!(span_days >= 1.0)) throw ParameterError("correlation span must be >= 1 day");
    return 1.0 - std::pow(1.0 - 1.0 / span_days, 5.0);
}

void EwmaCorrelation::add_week(const Eigen::Ref<const Eigen::VectorXd>& weekly) {
    if (weekly.size() != n_) throw ParameterError("weekly return vector has the wrong size");
    const double keep = 1.0 - alpha_;
    // weights are relative; only ratios matter, so the new week gets weight 1
    weight_ *= keep;
    sum_i_ *= keep;
    sum_ii_ *= keep;
    sum_ij_ *= keep;
    w1_ = keep * w1_ + 1.0;
    w2_ = keep * keep * w2_ + 1.0;
    ++weeks_;
    for (Eigen::Index i = 0; i < n_; ++i) {
        const double xi = weekly[i];
        if (std::isnan(xi)) continue;
        for (Eigen::Index j = 0; j < n_; ++j) {
            const double xj = weekly[j];
            if (std::isnan(xj)) continue;
            weight_(i, j) += 1.0;
            sum_i_(i, j) += xi;
            sum_ii_(i, j) += xi * xi;
            sum_ij_(i, j) += xi * xj;
            count_(i, j) += 1;
        }
    }
}

double EwmaCorrelation::effective_samples() const { return w2_ > 0.0 ? w1_ * w1_ / w2_ : 0.0; }

Eigen::MatrixXd EwmaCorrelation::correlation(const std::vector<Eigen::Index>& subset, bool strict,
                                             const std::vector<std::string>* names) const {
    const auto m = static_cast<Eigen::Index>(subset.size());
    Eigen::MatrixXd c = Eigen::MatrixXd::Identity(m, m);
    for (Eigen::Index a = 0; a < m; ++a) {
        const Eigen::Index i = subset[static_cast<std::size_t>(a)];
        if (strict) {
            const double w = weight_(i, i);
            const double mean = w > 0.0 ? sum_i_(i, i) / w : 0.0;
            const double var = w > 0.0 ? sum_ii_(i, i) / w - mean * mean : 0.0;
            if (!(var > 1e-14 * std::max(1.0, sum_ii_(i, i) / std::max(w, 1e-300))) ||
                count_(i, i) < 2) {
                const std::string name =
                    names ? (*names)[static_cast<std::size_t>(i)] : "#" + std::to_string(i);
                throw DataError("instrument " + name +
                                " has constant returns; correlation undefined");
            }
        }
        for (Eigen::Index b = a + 1; b < m; ++b) {
            const Eigen::Index j = subset[static_cast<std::size_t>(b)];
            double rho = 0.0;
            if (count_(i, j) >= kMinCorrWeeks) {
                const double w = weight_(i, j);
                const double mi = sum_i_(i, j) / w;
                const double mj = sum_i_(j, i) / w;
                const double vi = sum_ii_(i, j) / w - mi * mi;
                const double vj = sum_ii_(j, i) / w - mj * mj;
                const double cij = sum_ij_(i, j) / w - mi * mj;
                if (vi > 0.0 && vj > 0.0) rho = std::clamp(cij / std::sqrt(vi * vj), -1.0, 1.0);
            }
            c(a, b) = rho;
            c(b, a) = rho;
        }
    }
    return c;
}

Eigen::MatrixXd weekly_returns(const ReturnsPanel& panel) {
    const Eigen::Index weeks = panel.n_days() / 5;
    Eigen::MatrixXd out(weeks, panel.n_assets());
    for (Eigen::Index w = 0; w < weeks; ++w)
        for (Eigen::Index j = 0; j < panel.n_assets(); ++j) {
            // NaN propagates, so any inactive day makes the week inactive
            out(w, j) = panel.returns.block(5 * w, j, 5, 1).sum();
        }
    return out;
}

CorrEstimate estimate_correlation(const ReturnsPanel& panel, double span_days) {
    if (panel.n_assets() < 2) throw DataError("correlation needs at least 2 instruments");
    const Eigen::MatrixXd weekly = weekly_returns(panel);
    if (weekly.rows() < kMinCorrWeeks)
        throw InsufficientDataError("correlation needs at least " + std::to_string(kMinCorrWeeks) +
                                    " weeks of history, got " + std::to_string(weekly.rows()));
    EwmaCorrelation ewma(panel.n_assets(), span_days);
    for (Eigen::Index w = 0; w < weekly.rows(); ++w) ewma.add_week(weekly.row(w).transpose());
    std::vector<Eigen::Index> all(static_cast<std::size_t>(panel.n_assets()));
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<Eigen::Index>(i);
    CorrEstimate est;
    est.matrix = ewma.correlation(all, true, &panel.instruments);
    est.effective_samples = ewma.effective_samples();
    est.cleaning = Cleaning::None;
    return est;
}

void check_correlation_shape(const Eigen::MatrixXd& c, double tol) {
    if (c.rows() != c.cols() || c.rows() < 1) throw MatrixValidityError("matrix is not square");
    if (!c.allFinite()) throw MatrixValidityError("matrix has non-finite entries");
    if ((c - c.transpose()).cwiseAbs().maxCoeff() > tol)
        throw MatrixValidityError("correlation matrix is not symmetric");
    if ((c.diagonal().array() - 1.0).abs().maxCoeff() > tol)
        throw MatrixValidityError("correlation matrix does not have a unit diagonal");
}

double default_shrink_intensity(double q) { return q / (1.0 + q); }

CorrEstimate clean_correlation(const CorrEstimate& est, Cleaning method, double q,
                               double intensity) {
    check_correlation_shape(est.matrix);
    CorrEstimate out = est;
    if (method == Cleaning::None) return out;
    if (!(q > 0.0)) throw ParameterError("aspect ratio q must be > 0");
    out.cleaning = method;
    if (method == Cleaning::Shrink) {
        const double a = intensity < 0.0 ? default_shrink_intensity(q) : intensity;
        if (a > 1.0) throw ParameterError("shrink intensity must lie in [0, 1]");
        const auto n = est.matrix.rows();
        out.matrix = (1.0 - a) * est.matrix + a * Eigen::MatrixXd::Identity(n, n);
        out.matrix = symmetrize(out.matrix);
        out.matrix.diagonal().setOnes();
        return out;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrize(est.matrix));
    if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
    const double edge = (1.0 + std::sqrt(q)) * (1.0 + std::sqrt(q));
    Eigen::VectorXd ev = es.eigenvalues();
    double sum = 0.0;
    int k = 0;
    for (Eigen::Index i = 0; i < ev.size(); ++i)
        if (ev[i] < edge) {
            sum += ev[i];
            ++k;
        }
    if (k > 0) {
        const double mean = std::max(sum / k, kEigenFloor * 10.0);
        for (Eigen::Index i = 0; i < ev.size(); ++i)
            if (ev[i] < edge) ev[i] = mean;
    }
    const Eigen::MatrixXd& v = es.eigenvectors();
    out.matrix = unit_diagonal(v * ev.asDiagonal() * v.transpose());
    return out;
}

Eigen::MatrixXd inv_sqrt(const Eigen::MatrixXd& c) {
    const auto es = decompose(c);
    const Eigen::VectorXd d = es.eigenvalues().cwiseSqrt().cwiseInverse();
    const Eigen::MatrixXd& v = es.eigenvectors();
    return symmetrize(v * d.asDiagonal() * v.transpose());
}

Eigen::MatrixXd inverse_spd(const Eigen::MatrixXd& c) {
    const auto es = decompose(c);
    const Eigen::VectorXd d = es.eigenvalues().cwiseInverse();
    const Eigen::MatrixXd& v = es.eigenvectors();
    return symmetrize(v * d.asDiagonal() * v.transpose());
}

double condition_number(const Eigen::MatrixXd& c) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrize(c), Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    if (ev.minCoeff() <= 0.0) return std::numeric_limits<double>::infinity();
    return ev.maxCoeff() / ev.minCoeff();
}

// ---- volatility ----------------------------------------------------------------

EwmaVolatility::EwmaVolatility(Eigen::Index n_assets, double span_days)
    : eta_(1.0 / span_days),
      var_(Eigen::VectorXd::Zero(n_assets)),
      seeded_(static_cast<std::size_t>(n_assets), false) {
    if (!(span_days >= 1.0)) throw ParameterError("volatility span must be >= 1 day");
}

void EwmaVolatility::seed(Eigen::Index i, const Eigen::Ref<const Eigen::VectorXd>& history) {
    const auto n = history.size();
    if (n < 2) throw InsufficientDataError("volatility seed needs at least 2 returns");
    const double mean = history.mean();
    var_[i] = (history.array() - mean).square().sum() / static_cast<double>(n - 1);
    seeded_[static_cast<std::size_t>(i)] = true;
}

void EwmaVolatility::update(const Eigen::Ref<const Eigen::VectorXd>& r) {
    for (Eigen::Index i = 0; i < var_.size(); ++i) {
        if (std::isnan(r[i]) || !seeded_[static_cast<std::size_t>(i)]) continue;
        var_[i] = (1.0 - eta_) * var_[i] + eta_ * r[i] * r[i];
    }
}

void EwmaVolatility::update(Eigen::Index i, double r) {
    if (std::isnan(r) || !seeded_[static_cast<std::size_t>(i)]) return;
    var_[i] = (1.0 - eta_) * var_[i] + eta_ * r * r;
}

double EwmaVolatility::sigma(Eigen::Index i) const { return std::sqrt(std::max(var_[i], 0.0)); }

VolEstimate estimate_volatility(const ReturnsPanel& panel, double span_days) {
    if (!(span_days >= 1.0)) throw ParameterError("volatility span must be >= 1 day");
    const auto N = panel.n_assets();
    const auto seed_len = static_cast<Eigen::Index>(std::max(20.0, std::ceil(span_days)));
    VolEstimate out;
    out.sigma.resize(N);
    for (Eigen::Index j = 0; j < N; ++j) {
        const ActiveRange a = panel.active[static_cast<std::size_t>(j)];
        const std::string& name = panel.instruments[static_cast<std::size_t>(j)];
        if (a.length() < static_cast<std::ptrdiff_t>(span_days))
            throw InsufficientDataError("instrument " + name + " has " +
                                        std::to_string(a.length()) +
                                        " days of history, volatility needs " +
                                        std::to_string(static_cast<long>(span_days)));
        const auto col = panel.returns.col(j).segment(a.first, a.length());
        if (col.cwiseAbs().maxCoeff() == 0.0)
            throw DataError("instrument " + name + " has all-zero returns");
        EwmaVolatility vol(1, span_days);
        vol.seed(0, col.head(std::min<Eigen::Index>(seed_len, col.size())));
        for (Eigen::Index t = 0; t < col.size(); ++t) vol.update(0, col[t]);
        out.sigma[j] = vol.sigma(0);
        if (!(out.sigma[j] > 0.0))
            throw DataError("instrument " + name + " has zero volatility");
    }
    return out;
}

}  // namespace trendlab

#include <doctest.h>

#include "support/oracles.hpp"
#include "trendlab/error.hpp"
#include "trendlab/matrix_lab.hpp"
#include "trendlab/process_model.hpp"

#include <cmath>

using namespace trendlab;

TEST_CASE("inv_sqrt squared is the inverse") {
    for (int n : {2, 5, 17, 40, 70}) {
        CAPTURE(n);
        const Eigen::MatrixXd c = oracle::random_correlation(n, 100u + static_cast<unsigned>(n));
        const Eigen::MatrixXd m = inv_sqrt(c);
        const Eigen::MatrixXd inv = inverse_spd(c);
        CHECK((m * m - inv).cwiseAbs().maxCoeff() < 1e-10 * std::max(1.0, inv.cwiseAbs().maxCoeff()));
        CHECK((m * c * m - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-9);
        CHECK((inv - c.inverse()).cwiseAbs().maxCoeff() < 1e-8 * inv.cwiseAbs().maxCoeff());
        CHECK((m - m.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("singular matrices are refused") {
    Eigen::MatrixXd c = Eigen::MatrixXd::Ones(3, 3);
    CHECK_THROWS_AS(inv_sqrt(c), SingularMatrixError);
    CHECK_THROWS_AS(inverse_spd(c), SingularMatrixError);
}

TEST_CASE("shape check") {
    Eigen::MatrixXd c = uniform_correlation(3, 0.2);
    CHECK_NOTHROW(check_correlation_shape(c));
    c(1, 1) = 1.1;
    CHECK_THROWS_AS(check_correlation_shape(c), MatrixValidityError);
    CHECK_THROWS_AS(check_correlation_shape(Eigen::MatrixXd::Identity(2, 3)), MatrixValidityError);
}

TEST_CASE("EWMA correlation agrees with weighted Pearson") {
    const auto p = ProcessParams::from_beta0(0.5, 1e-6, uniform_correlation(3, 0.4),
                                             uniform_correlation(3, 0.0));
    const auto path = simulate(p, 400, 0, 21);
    const double span = 100.0;
    EwmaCorrelation ew(3, span);
    for (Eigen::Index t = 0; t < path.returns.rows(); ++t) ew.add_week(path.returns.row(t).transpose());
    const Eigen::MatrixXd got = ew.correlation({0, 1, 2}, true);
    const double alpha = EwmaCorrelation::weekly_decay(span);
    const Eigen::Index n = path.returns.rows();
    Eigen::VectorXd w(n);
    for (Eigen::Index t = 0; t < n; ++t) w[t] = std::pow(1.0 - alpha, static_cast<double>(n - 1 - t));
    const double want = oracle::weighted_corr(path.returns.col(0), path.returns.col(2), w);
    CHECK(got(0, 2) == doctest::Approx(want).epsilon(1e-10));
    CHECK(got(2, 0) == got(0, 2));
    CHECK(got(1, 1) == 1.0);
    double sw = 0, sw2 = 0;
    for (Eigen::Index t = 0; t < n; ++t) {
        sw += w[t];
        sw2 += w[t] * w[t];
    }
    CHECK(ew.effective_samples() == doctest::Approx(sw * sw / sw2).epsilon(1e-10));
}

TEST_CASE("pairs with too few common weeks fall back to zero") {
    EwmaCorrelation ew(2, 200.0);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    Engine eng = make_engine(4);
    std::normal_distribution<double> z;
    for (int t = 0; t < 100; ++t) {
        Eigen::Vector2d v(z(eng), t < 90 ? nan : z(eng));
        ew.add_week(v);
    }
    CHECK(ew.correlation({0, 1}, false)(0, 1) == 0.0);
}

TEST_CASE("weekly aggregation") {
    Eigen::MatrixXd r = Eigen::MatrixXd::Ones(12, 2);
    r(7, 1) = std::numeric_limits<double>::quiet_NaN();
    r.col(1).head(7).setConstant(std::numeric_limits<double>::quiet_NaN());
    auto panel = make_panel(r, Date{kDefaultStartDate});
    panel.returns(7, 1) = 1.0;
    panel.validate_and_index();
    const Eigen::MatrixXd w = weekly_returns(panel);
    CHECK(w.rows() == 2);
    CHECK(w(0, 0) == 5.0);
    CHECK(w(1, 0) == 5.0);
    CHECK(std::isnan(w(0, 1)));
    CHECK(std::isnan(w(1, 1)));
}

TEST_CASE("cleaning") {
    const Eigen::MatrixXd c = oracle::random_correlation(20, 9);
    CorrEstimate est{c, 100.0, Cleaning::None};
    const auto clipped = clean_correlation(est, Cleaning::Clip, 0.2);
    CHECK_NOTHROW(check_correlation_shape(clipped.matrix));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(clipped.matrix);
    CHECK(es.eigenvalues().minCoeff() > 0.0);
    CHECK(condition_number(clipped.matrix) <= condition_number(c));
    const auto shrunk = clean_correlation(est, Cleaning::Shrink, 0.25);
    const double a = default_shrink_intensity(0.25);
    CHECK(a == doctest::Approx(0.2));
    CHECK(shrunk.matrix(0, 1) == doctest::Approx((1 - a) * c(0, 1)));
    CHECK(clean_correlation(est, Cleaning::None, 0.2).matrix == c);
    CHECK(cleaning_from_string("shrink") == Cleaning::Shrink);
}

TEST_CASE("volatility estimate") {
    Eigen::MatrixXd r(400, 1);
    for (Eigen::Index t = 0; t < r.rows(); ++t) r(t, 0) = (t % 2 ? 0.02 : -0.02);
    auto panel = make_panel(r, Date{kDefaultStartDate});
    const auto v = estimate_volatility(panel, 40.0);
    CHECK(v.sigma[0] == doctest::Approx(0.02).epsilon(1e-4));
}

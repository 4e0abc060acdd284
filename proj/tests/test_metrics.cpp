#include <doctest.h>

#include "trendlab/error.hpp"
#include "trendlab/metrics.hpp"
#include "trendlab/panel.hpp"

#include <cmath>
#include <numeric>

using namespace trendlab;

namespace {
Eigen::VectorXd gaussian(Eigen::Index n, double mu, std::uint64_t seed) {
    Engine eng = make_engine(seed);
    std::normal_distribution<double> z(mu, 1.0);
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = z(eng);
    return v;
}

PortfolioSeries series_of(const Eigen::VectorXd& r, std::ptrdiff_t warmup, std::string label) {
    PortfolioSeries s;
    s.label = std::move(label);
    s.dates = business_dates(Date{kDefaultStartDate}, static_cast<std::size_t>(r.size()));
    s.returns_gross = r;
    s.returns_net = r;
    s.weights = Eigen::MatrixXd::Ones(r.size(), 1);
    s.turnover = Eigen::VectorXd::Zero(r.size());
    s.warmup = warmup;
    return s;
}
}  // namespace

TEST_CASE("Sharpe against a hand computation") {
    Eigen::VectorXd r(4);
    r << 0.01, -0.02, 0.03, 0.02;
    const double m = 0.01;
    const double sd = std::sqrt((0.0 + 9e-4 + 4e-4 + 1e-4) / 3.0);
    CHECK(sharpe(r) == doctest::Approx(m / sd * std::sqrt(255.0)).epsilon(1e-12));
    CHECK(sharpe_per_step(r) == doctest::Approx(m / sd).epsilon(1e-12));
    CHECK_THROWS_AS(sharpe(Eigen::VectorXd::Ones(1)), InsufficientDataError);
    CHECK_THROWS_AS(sharpe(Eigen::VectorXd::Ones(10)), NumericalError);
    CHECK(std::isnan(sharpe_per_step(Eigen::VectorXd::Ones(10))));
}

TEST_CASE("holding period") {
    // alternating +-1 every day: gross 1, turnover 2, holding 1 day
    Eigen::MatrixXd w(10, 1);
    for (int t = 0; t < 10; ++t) w(t, 0) = t % 2 ? 1.0 : -1.0;
    CHECK(holding_period(w) == doctest::Approx(1.0));
    // flips every 5 days: turnover 2 on 1 of 5 days
    Eigen::MatrixXd v(100, 1);
    for (int t = 0; t < 100; ++t) v(t, 0) = (t / 5) % 2 ? 1.0 : -1.0;
    CHECK(holding_period(v) == doctest::Approx(2.0 / (2.0 * 19.0 / 99.0)));
    CHECK(holding_period(Eigen::MatrixXd::Ones(5, 2)) == kInfiniteHolding);
}

TEST_CASE("strategy correlation") {
    const Eigen::VectorXd a = gaussian(2000, 0.0, 1);
    const Eigen::VectorXd b = gaussian(2000, 0.0, 2);
    const Eigen::VectorXd c = 0.6 * a + 0.8 * b;
    const auto m = strategy_correlation({series_of(a, 10, "a"), series_of(c, 200, "c")});
    CHECK(m(0, 0) == 1.0);
    CHECK(m(0, 1) == doctest::Approx(0.6).epsilon(0.05));
    const Eigen::VectorXd at = a.tail(1800), ct = c.tail(1800);
    const double want = ((at.array() - at.mean()) * (ct.array() - ct.mean())).sum() /
                        std::sqrt((at.array() - at.mean()).square().sum() *
                                  (ct.array() - ct.mean()).square().sum());
    CHECK(m(0, 1) == doctest::Approx(want).epsilon(1e-12));
    auto shifted = series_of(c, 0, "x");
    shifted.dates.front() = shifted.dates.front() - std::chrono::days{3};
    CHECK_THROWS_AS(strategy_correlation({series_of(a, 0, "a"), shifted}), DataError);
    CHECK_THROWS_AS(strategy_correlation({series_of(a, 0, "a"), series_of(Eigen::VectorXd::Ones(2000), 0, "f")}),
                    NumericalError);
}

TEST_CASE("stationary bootstrap indices") {
    Engine eng = make_engine(7);
    const auto idx = stationary_bootstrap_indices(1000, 20.0, eng);
    CHECK(idx.size() == 1000);
    long breaks = 0;
    for (std::size_t i = 1; i < idx.size(); ++i) {
        CHECK(idx[i] >= 0);
        CHECK(idx[i] < 1000);
        if (idx[i] != (idx[i - 1] + 1) % 1000) ++breaks;
    }
    // about n / mean_block block starts
    CHECK(breaks > 25);
    CHECK(breaks < 80);
}

TEST_CASE("bootstrap interval") {
    const Eigen::VectorXd r = gaussian(3000, 0.05, 3);
    BootstrapOptions opts;
    opts.n_resamples = 400;
    const auto s = bootstrap_sharpe_ci(r, opts, 11, Exec::Serial);
    const auto p = bootstrap_sharpe_ci(r, opts, 11, Exec::Parallel);
    CHECK(s.low == p.low);
    CHECK(s.high == p.high);
    const double point = sharpe(r);
    CHECK(s.low <= point);
    CHECK(s.high >= point);
    // iid Sharpe standard error is about sqrt(255 / n)
    const double width = s.high - s.low;
    const double se = std::sqrt(255.0 / 3000.0);
    CHECK(width > 2.0 * se);
    CHECK(width < 6.0 * se);
    opts.block_len = 1000;
    CHECK_THROWS_AS(bootstrap_sharpe_ci(r, opts, 11), InsufficientDataError);
}

TEST_CASE("quantile type 7") {
    std::vector<double> v = {4.0, 1.0, 3.0, 2.0};
    CHECK(quantile(v, 0.0) == 1.0);
    CHECK(quantile(v, 1.0) == 4.0);
    CHECK(quantile(v, 0.5) == doctest::Approx(2.5));
    CHECK(quantile(v, 0.25) == doctest::Approx(1.75));
}

TEST_CASE("report skips the interval on request") {
    auto s = series_of(gaussian(1000, 0.1, 5), 100, "x");
    BootstrapOptions opts;
    opts.n_resamples = 0;
    const auto rep = make_report(s, opts, 1);
    CHECK(std::isnan(rep.bootstrap_ci.low));
    CHECK(rep.n_days == 900);
    CHECK(rep.sharpe_gross == doctest::Approx(sharpe(s.returns_gross.tail(900))));
    CHECK(rep.holding_period_days == kInfiniteHolding);
}

#include <doctest.h>

#include "support/oracles.hpp"
#include "trendlab/calibration.hpp"
#include "trendlab/closed_forms.hpp"
#include "trendlab/error.hpp"
#include "trendlab/process_model.hpp"

#include <algorithm>
#include <cmath>
#include <set>

using namespace trendlab;

namespace {
const std::vector<double> kEtas = {1.0 / 20, 1.0 / 50, 1.0 / 80, 1.0 / 100, 1.0 / 120,
                                   1.0 / 150, 1.0 / 180, 1.0 / 400, 1.0 / 1000};

SharpeCurve exact_curve(double lambda, double beta0, double theta = 0.0) {
    SharpeCurve c;
    for (double eta : kEtas)
        c.points.push_back({eta, std::sqrt(255.0) * oracle::sharpe_formula(lambda, beta0, eta, theta)});
    return c;
}

double scaling(double s1, double rho_sq, double n) { return s1 * std::sqrt(n / (1.0 + (n - 1.0) * rho_sq)); }
}  // namespace

TEST_CASE("noise-free curves are recovered") {
    for (auto [lambda, beta0] : {std::pair{1.0 / 180, 0.12}, std::pair{0.01, 0.1}, std::pair{0.03, 0.3}}) {
        CAPTURE(lambda);
        const auto fit = fit_sharpe_curve(exact_curve(lambda, beta0));
        CHECK(fit.param("lambda") == doctest::Approx(lambda).epsilon(1e-6));
        CHECK(fit.param("beta0") == doctest::Approx(beta0).epsilon(1e-6));
        CHECK(fit.r_squared > 1.0 - 1e-10);
        CHECK(fit.residuals.size() == kEtas.size());
    }
    const auto fit = fit_sharpe_curve(exact_curve(0.01, 0.1, 0.2), 0.2);
    CHECK(fit.param("lambda") == doctest::Approx(0.01).epsilon(1e-6));
}

TEST_CASE("point order does not matter") {
    auto c = exact_curve(1.0 / 120, 0.15);
    Engine eng = make_engine(1);
    std::normal_distribution<double> z(0.0, 0.05);
    for (auto& p : c.points) p.sharpe += z(eng);
    const auto a = fit_sharpe_curve(c);
    auto d = c;
    std::reverse(d.points.begin(), d.points.end());
    std::swap(d.points[2], d.points[5]);
    const auto b = fit_sharpe_curve(d);
    CHECK(a.param("lambda") == doctest::Approx(b.param("lambda")).epsilon(1e-8));
    CHECK(a.param("beta0") == doctest::Approx(b.param("beta0")).epsilon(1e-8));
    CHECK(a.residuals[0] == doctest::Approx(b.residuals[8]).epsilon(1e-6));
}

TEST_CASE("fit is no worse than the grid") {
    auto c = exact_curve(1.0 / 60, 0.2);
    Engine eng = make_engine(2);
    std::normal_distribution<double> z(0.0, 0.1);
    for (auto& p : c.points) p.sharpe += z(eng);
    SharpeFitOptions opts;
    const auto grid = sharpe_grid_scan(c, 0.0, opts);
    CHECK(grid.size() == static_cast<std::size_t>(opts.grid * opts.grid));
    double best = grid.front().objective;
    for (const auto& g : grid) {
        best = std::min(best, g.objective);
        CHECK(g.objective == doctest::Approx(sharpe_curve_objective(c, 0.0, g.lambda, g.beta0)));
    }
    const auto fit = fit_sharpe_curve(c, 0.0, opts);
    CHECK(fit.objective <= best + 1e-12);
    CHECK(fit.objective == doctest::Approx(sharpe_curve_objective(c, 0.0, fit.param("lambda"), fit.param("beta0"))));
}

TEST_CASE("weighted fit uses standard errors") {
    auto c = exact_curve(0.01, 0.1);
    for (auto& p : c.points) p.std_error = 0.1;
    c.points[0].sharpe += 0.5;
    c.points[0].std_error = 1e6;
    const auto fit = fit_sharpe_curve(c);
    CHECK(fit.weighted);
    CHECK(fit.param("lambda") == doctest::Approx(0.01).epsilon(1e-3));
}

TEST_CASE("malformed curves are rejected") {
    SharpeCurve c;
    c.points = {{0.1, 0.5}, {0.05, 0.6}, {0.04, 0.6}};
    CHECK_THROWS_AS(fit_sharpe_curve(c), ParameterError);
    c.points.push_back({0.03, 0.5});
    CHECK_THROWS_AS(fit_sharpe_curve(c), ParameterError);  // span below 5x
    auto d = exact_curve(0.01, 0.1);
    d.points[1].eta = d.points[0].eta;
    CHECK_THROWS_AS(fit_sharpe_curve(d), ParameterError);
}

TEST_CASE("flat curve fails to converge with diagnostics") {
    SharpeCurve c;
    for (double eta : kEtas) c.points.push_back({eta, -3.0});
    SharpeFitOptions opts;
    opts.max_iter = 5;
    try {
        fit_sharpe_curve(c, 0.0, opts);
        FAIL("expected ConvergenceError");
    } catch (const ConvergenceError& e) {
        CHECK(e.exit_code() == 4);
        CHECK(e.diagnostics().find("lambda") != std::string::npos);
    }
}

TEST_CASE("recovery under noise") {
    // annualized noise 0.05 on a curve peaking near 0.9
    int hits = 0;
    const int trials = 20;
    for (int k = 0; k < trials; ++k) {
        auto c = exact_curve(1.0 / 100, 0.12);
        Engine eng = make_engine(derive_seed(99, static_cast<std::uint64_t>(k)));
        std::normal_distribution<double> z(0.0, 0.05);
        for (auto& p : c.points) p.sharpe += z(eng);
        const auto fit = fit_sharpe_curve(c);
        const double l = fit.param("lambda");
        if (l > 0.5 / 100 && l < 2.0 / 100 && std::abs(fit.param("beta0") / 0.12 - 1.0) < 0.25) ++hits;
    }
    CHECK(hits >= 16);
}

TEST_CASE("bootstrap of the fit") {
    // independent columns with per-step Sharpe matching an exact curve
    auto curve = exact_curve(0.01, 0.15);
    const Eigen::Index T = 6000;
    Eigen::MatrixXd r(T, static_cast<Eigen::Index>(curve.points.size()));
    Engine eng = make_engine(4);
    std::normal_distribution<double> z;
    for (Eigen::Index t = 0; t < T; ++t) {
        const double common = z(eng);
        for (Eigen::Index j = 0; j < r.cols(); ++j)
            r(t, j) = curve.points[j].sharpe / std::sqrt(255.0) + 0.9 * common + std::sqrt(0.19) * z(eng);
    }
    for (Eigen::Index j = 0; j < r.cols(); ++j) curve.points[j].sharpe = sharpe(r.col(j));
    const auto fit = fit_sharpe_curve(curve);
    BootstrapOptions boot;
    boot.n_resamples = 60;
    const auto s = bootstrap_sharpe_fit(curve, r, 0.0, fit, {}, boot, 5, Exec::Serial);
    const auto p = bootstrap_sharpe_fit(curve, r, 0.0, fit, {}, boot, 5, Exec::Parallel);
    REQUIRE(s.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(s[i].low == p[i].low);
        CHECK(s[i].high == p[i].high);
        CHECK(s[i].low <= fit.params[i]);
        CHECK(s[i].high >= fit.params[i]);
    }
}

TEST_CASE("scaling fit recovers exact data") {
    std::vector<ScalingPoint> pts;
    for (double n : {1.0, 3.0, 6.0, 9.0, 15.0, 20.0, 27.0}) pts.push_back({n, scaling(0.4, 0.09, n)});
    const auto fit = fit_scaling_curve(pts, 0.01);
    CHECK(fit.full.param("S1") == doctest::Approx(0.4).epsilon(1e-8));
    CHECK(fit.full.param("rho_sq") == doctest::Approx(0.09).epsilon(1e-8));
    CHECK(fit.full.objective < 1e-20);
    CHECK(fit.sqrt_n.objective > fit.full.objective);
    // the limit S1 / rho for large N
    CHECK(scaling(fit.full.param("S1"), fit.full.param("rho_sq"), 140.0) ==
          doctest::Approx(0.4 * std::sqrt(140.0 / (1 + 139 * 0.09))).epsilon(1e-8));
}

TEST_CASE("scaling fit with independent assets prefers rho = 0") {
    std::vector<ScalingPoint> pts;
    for (double n : {1.0, 4.0, 9.0, 16.0}) pts.push_back({n, 0.3 * std::sqrt(n)});
    const auto fit = fit_scaling_curve(pts, 0.01);
    CHECK(fit.full.param("rho_sq") == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(fit.sqrt_n.param("S1") == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("scaling fit rejects degenerate N sets") {
    std::vector<ScalingPoint> pts = {{3.0, 0.5}, {6.0, 0.7}, {9.0, 0.8}};
    CHECK_THROWS_AS(fit_scaling_curve(pts, 0.01), ParameterError);
    pts = {{1.0, 0.5}, {6.0, 0.7}};
    CHECK_THROWS_AS(fit_scaling_curve(pts, 0.01), ParameterError);
}

TEST_CASE("scaling fit bootstrap from trials") {
    std::vector<ScalingPoint> pts;
    Engine eng = make_engine(8);
    std::normal_distribution<double> z(0.0, 0.05);
    for (double n : {1.0, 3.0, 6.0, 9.0, 15.0}) {
        ScalingPoint p{n, 0.0};
        for (int k = 0; k < 20; ++k) p.trials.push_back(scaling(0.4, 0.09, n) + z(eng));
        for (double t : p.trials) p.mean_sharpe += t / 20.0;
        pts.push_back(p);
    }
    BootstrapOptions boot;
    boot.n_resamples = 200;
    const auto fit = fit_scaling_curve(pts, 0.01, boot, 3);
    REQUIRE(fit.full.ci95.size() == 2);
    CHECK(fit.full.ci95[1].low <= fit.full.param("rho_sq"));
    CHECK(fit.full.ci95[1].high >= fit.full.param("rho_sq"));
}

TEST_CASE("sub-universe sampler") {
    auto panel = make_panel(Eigen::MatrixXd::Random(50, 30), Date{kDefaultStartDate});
    const auto subs = subuniverse_sampler(panel, {1, 6, 30}, 5, 42);
    CHECK(subs.size() == 15);
    std::set<std::vector<std::ptrdiff_t>> distinct;
    for (const auto& s : subs) {
        CHECK(s.columns.size() == s.size);
        CHECK(std::is_sorted(s.columns.begin(), s.columns.end()));
        CHECK(std::set<std::ptrdiff_t>(s.columns.begin(), s.columns.end()).size() == s.size);
        CHECK(s.panel.n_assets() == static_cast<std::ptrdiff_t>(s.size));
        if (s.size == 6) distinct.insert(s.columns);
    }
    CHECK(distinct.size() > 1);
    const auto again = subuniverse_sampler(panel, {1, 6, 30}, 5, 42);
    for (std::size_t i = 0; i < subs.size(); ++i) CHECK(subs[i].columns == again[i].columns);
    CHECK_THROWS_AS(subuniverse_sampler(panel, {31}, 2, 1), ParameterError);
}

TEST_CASE("format_fit lists parameters") {
    const auto fit = fit_sharpe_curve(exact_curve(0.01, 0.1));
    const auto text = format_fit(fit);
    CHECK(text.find("lambda = ") != std::string::npos);
    CHECK(text.find("r_squared = ") != std::string::npos);
}

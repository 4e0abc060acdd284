#include <doctest.h>

#include "support/oracles.hpp"
#include "trendlab/error.hpp"
#include "trendlab/panel.hpp"
#include "trendlab/process_model.hpp"
#include "trendlab/signal_engine.hpp"

#include <cmath>

using namespace trendlab;

namespace {
Eigen::VectorXd noise(Eigen::Index n, std::uint64_t seed) {
    return simulate(ProcessParams::scalar(0.02, 0.3), n, std::nullopt, seed).returns.col(0);
}
}  // namespace

TEST_CASE("frozen EMA is a linear filter") {
    const Eigen::VectorXd r = noise(400, 1);
    const double eta = 0.05;
    const Eigen::VectorXd phi = evaluate_indicator(IndicatorSpec::ema(eta), r, true);
    // phi = sqrt(eta) sum (1-eta)^k r_{t-k} = ema_direct / sqrt(eta)
    const Eigen::VectorXd want = oracle::ema_direct(eta, r) / std::sqrt(eta);
    CHECK((phi - want).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("EMA update divides by the previous sigma") {
    EmaState s;
    s.eta = 0.1;
    s.sigma2 = 4.0;
    s.sigma_ref = 2.0;
    const EmaState n = ema_update(s, 1.0);
    CHECK(n.phi == doctest::Approx(std::sqrt(0.1) * 1.0 / 2.0));
    CHECK(n.sigma2 == doctest::Approx(0.9 * 4.0 + 0.1));
}

TEST_CASE("sigma floor keeps flat inputs finite") {
    Eigen::VectorXd r = noise(300, 2);
    r.tail(200).setZero();
    const Eigen::VectorXd phi = evaluate_indicator(IndicatorSpec::ema(0.05), r);
    CHECK(phi.allFinite());
}

TEST_CASE("spectra match evaluated linear indicators") {
    const Eigen::VectorXd r = noise(800, 3);
    const std::vector<IndicatorSpec> specs = {
        IndicatorSpec::ema(0.02),
        IndicatorSpec::sma(30),
        IndicatorSpec::mom(25),
        IndicatorSpec::ema_cross(0.1, 0.02),
        IndicatorSpec::sma_cross(10, 40),
        IndicatorSpec::macd3({0.1, 0.03, 0.01}, {0.0, 1.0, 0.4}, true),
    };
    for (const auto& spec : specs) {
        CAPTURE(spec.label());
        const long lags = 799;
        const Eigen::VectorXd psi = sensitivity_spectrum(spec, lags);
        const Eigen::VectorXd ind = evaluate_indicator(spec, r, true);
        const Eigen::Index t = 799;
        double acc = 0.0;
        for (long k = 0; k <= lags && k <= t; ++k) acc += psi[k] * r[t - k];
        CHECK(ind[t] == doctest::Approx(acc).epsilon(1e-8));
    }
}

TEST_CASE("MACD zero-slope spectrum vanishes at lag 0") {
    const auto spec = IndicatorSpec::macd3({1.0 / 30, 1.0 / 100, 1.0 / 400}, {0.0, 1.0, 0.4}, true);
    const Eigen::VectorXd psi = sensitivity_spectrum(spec, 10);
    CHECK(std::abs(psi[0]) < 1e-14);
    const auto w = spec.effective_weights();
    CHECK(w[0] == doctest::Approx(-(std::sqrt(0.01) + 0.4 * std::sqrt(1.0 / 400)) / std::sqrt(1.0 / 30)));
}

TEST_CASE("EMA reconstructed from SMA mixture") {
    const double eta = 1.0 / 112.0;
    const auto w = ema_to_sma_weights(eta, 5000);
    CHECK(w.weights.sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(w.truncated_mass < kSmaTruncation);
    const Eigen::VectorXd r = noise(3000, 4);
    const Eigen::VectorXd a = reconstruct_from_sma(w, r);
    const Eigen::VectorXd b = unit_mass_ema(eta, r);
    // compare once the first max_n days are inside the window
    CHECK((a - b).tail(1000).cwiseAbs().maxCoeff() < 1e-6);
    CHECK((b - oracle::ema_direct(eta, r)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("log-window density peaks near 2/eta") {
    const auto w = ema_to_sma_weights(1.0 / 112.0, 5000);
    const long peak = w.log_density_peak();
    CHECK(peak >= 180);
    CHECK(peak <= 260);
    CHECK_THROWS_AS(ema_to_sma_weights(0.001, 100), ParameterError);
}

TEST_CASE("BB quadrature recovers the SMA value") {
    const double dmax = 4.0;
    const long bands = 4000;
    for (double v : {-3.7, -1.0, -0.01, 0.0, 0.2, 1.5, 3.99}) {
        CHECK(std::abs(bb_quadrature(v, dmax, bands) - v) <= 1e-5 + dmax / bands / 2);
        CHECK(bb_quadrature(v, dmax, bands) ==
              doctest::Approx(bb_quadrature_reference(v, dmax, bands)).epsilon(1e-12));
    }
    // a band-aligned grid with a fine step gets within 1e-5
    CHECK(std::abs(bb_quadrature(0.5, dmax, 400000) - 0.5) <= 1e-5);
    CHECK(bb_elementary(0.5, 0.4) == 1);
    CHECK(bb_elementary(-0.5, 0.4) == -1);
    CHECK(bb_elementary(0.3, 0.4) == 0);
}

TEST_CASE("BB batch is the same serial and parallel") {
    Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(501, -5.0, 5.0);
    const Eigen::VectorXd a = bb_quadrature_batch(v, 4.0, 4000, Exec::Serial);
    const Eigen::VectorXd b = bb_quadrature_batch(v, 4.0, 4000, Exec::Parallel);
    CHECK(a == b);
    CHECK(a[0] == doctest::Approx(-4.0));
}

TEST_CASE("panel evaluation respects active ranges") {
    Eigen::MatrixXd r(300, 3);
    r.col(0) = noise(300, 5);
    r.col(1) = noise(300, 6);
    r.col(2) = noise(300, 7);
    r.col(2).head(100).setConstant(std::numeric_limits<double>::quiet_NaN());
    auto panel = make_panel(r, Date{kDefaultStartDate});
    panel.validate_and_index();
    const auto spec = IndicatorSpec::ema(0.05);
    const Eigen::MatrixXd s = evaluate_indicator(spec, panel, Exec::Serial);
    const Eigen::MatrixXd p = evaluate_indicator(spec, panel, Exec::Parallel);
    CHECK(s.col(0) == p.col(0));
    CHECK(std::isnan(s(50, 2)));
    CHECK(std::isfinite(s(150, 2)));
    CHECK(s.col(1).isApprox(evaluate_indicator(spec, Eigen::VectorXd(r.col(1)))));
}

TEST_CASE("nonlinear cubic and labels") {
    CHECK(nonlinear_cubic(1.0, 0.33) == doctest::Approx(0.67));
    CHECK(IndicatorSpec::ema(1.0 / 20).label() == "EMA(20)");
    CHECK(indicator_kind_from_string("SMA_CROSS") == IndicatorKind::SMA_CROSS);
    CHECK_THROWS_AS(indicator_kind_from_string("nope"), ParameterError);
    CHECK_THROWS_AS(IndicatorSpec::sma_cross(10, 10).validate(), ParameterError);
}

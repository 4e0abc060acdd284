#include <doctest.h>

#include "support/oracles.hpp"
#include "trendlab/error.hpp"
#include "trendlab/portfolio_engine.hpp"
#include "trendlab/process_model.hpp"

#include <cmath>

using namespace trendlab;

namespace {
ReturnsPanel sim_panel(Eigen::Index n, double rho, std::ptrdiff_t days, std::uint64_t seed) {
    const auto p = ProcessParams::from_beta0(1.0 / 100, 0.1, uniform_correlation(n, rho),
                                             uniform_correlation(n, rho));
    return make_panel(0.01 * simulate(p, days, std::nullopt, seed).returns, Date{kDefaultStartDate});
}
}  // namespace

TEST_CASE("each step has unit model risk") {
    const int n = 12;
    const Eigen::MatrixXd c = oracle::random_correlation(n, 3);
    const Eigen::VectorXd sigma = Eigen::VectorXd::LinSpaced(n, 0.005, 0.03);
    Engine eng = make_engine(2);
    std::normal_distribution<double> z;
    for (Scheme scheme : {Scheme::ARP, Scheme::NAIVE, Scheme::MARKOWITZ}) {
        for (Rule rule : {Rule::Linear, Rule::Binary}) {
            PortfolioConfig cfg;
            cfg.scheme = scheme;
            cfg.rule = rule;
            const Eigen::MatrixXd rot = scheme_rotation(c, scheme);
            PortfolioState st;
            st.smoothed = Eigen::VectorXd::Zero(n);
            for (int t = 0; t < 50; ++t) {
                Eigen::VectorXd s(n);
                for (int i = 0; i < n; ++i) s[i] = z(eng);
                st = portfolio_step(st, s, c, rot, sigma, cfg);
                const Eigen::VectorXd x = sigma.asDiagonal() * st.unit;
                CHECK(std::abs(x.dot(c * x) - 1.0) < 1e-10);
                CHECK(st.weights.isApprox(st.unit * cfg.target_vol / std::sqrt(kAnnualization)));
            }
        }
    }
}

TEST_CASE("identity correlation makes ARP and NAIVE agree") {
    const int n = 8;
    const Eigen::MatrixXd c = Eigen::MatrixXd::Identity(n, n);
    const Eigen::VectorXd sigma = Eigen::VectorXd::LinSpaced(n, 0.01, 0.02);
    PortfolioConfig a, b;
    a.scheme = Scheme::ARP;
    b.scheme = Scheme::NAIVE;
    PortfolioState sa, sb;
    sa.smoothed = sb.smoothed = Eigen::VectorXd::Zero(n);
    Engine eng = make_engine(5);
    std::normal_distribution<double> z;
    for (int t = 0; t < 100; ++t) {
        Eigen::VectorXd s(n);
        for (int i = 0; i < n; ++i) s[i] = z(eng);
        sa = portfolio_step(sa, s, c, scheme_rotation(c, Scheme::ARP), sigma, a);
        sb = portfolio_step(sb, s, c, scheme_rotation(c, Scheme::NAIVE), sigma, b);
        CHECK((sa.weights - sb.weights).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("smoothing recursion") {
    const Eigen::MatrixXd c = Eigen::MatrixXd::Identity(2, 2);
    const Eigen::VectorXd sigma = Eigen::VectorXd::Ones(2);
    PortfolioConfig cfg;
    cfg.scheme = Scheme::NAIVE;
    cfg.smoothing_rho = 0.25;
    PortfolioState st;
    st.smoothed = Eigen::Vector2d(1.0, 0.0);
    const auto next = portfolio_step(st, Eigen::Vector2d(0.0, 4.0), c, c, sigma, cfg);
    CHECK(next.smoothed.isApprox(Eigen::Vector2d(0.75, 1.0)));
    const auto flat = portfolio_step(PortfolioState{Eigen::Vector2d::Zero(), {}, {}, 0.0},
                                     Eigen::Vector2d::Zero(), c, c, sigma, cfg);
    CHECK(flat.weights.isZero());
}

TEST_CASE("realize applies costs on traded notional") {
    PortfolioConfig cfg;
    cfg.cost_bps = 10.0;
    const auto r = realize(Eigen::Vector2d(1.0, -0.5), Eigen::Vector2d(0.5, 0.0),
                           Eigen::Vector2d(0.01, 0.02), cfg);
    CHECK(r.gross == doctest::Approx(0.0));
    CHECK(r.turnover == doctest::Approx(1.0));
    CHECK(r.net == doctest::Approx(-1e-3));
    const double nan = std::numeric_limits<double>::quiet_NaN();
    CHECK_NOTHROW(realize(Eigen::Vector2d(1.0, 0.0), Eigen::Vector2d(1.0, 0.0),
                          Eigen::Vector2d(0.01, nan), cfg));
    CHECK_THROWS_AS(realize(Eigen::Vector2d(1.0, 1.0), Eigen::Vector2d(1.0, 0.0),
                            Eigen::Vector2d(0.01, nan), cfg),
                    DataError);
}

TEST_CASE("strategy is causal") {
    auto panel = sim_panel(4, 0.2, 1500, 31);
    const auto risk = RiskTrack::build(panel, {});
    const auto spec = IndicatorSpec::ema(1.0 / 20);
    PortfolioConfig cfg;
    const auto base = run_strategy(panel, risk, spec, cfg, 300);
    auto changed = panel;
    changed.returns.row(1200) *= 5.0;
    const auto risk2 = RiskTrack::build(changed, {});
    const auto alt = run_strategy(changed, risk2, spec, cfg, 300);
    // weights held on day t come from data through t-1
    CHECK(base.weights.topRows(1201) == alt.weights.topRows(1201));
    CHECK(base.weights.row(1201) != alt.weights.row(1201));
}

TEST_CASE("sweep is the same serial and parallel") {
    auto panel = sim_panel(5, 0.3, 1200, 32);
    const auto risk = RiskTrack::build(panel, {});
    std::vector<IndicatorSpec> specs = {IndicatorSpec::ema(0.05), IndicatorSpec::ema(0.01),
                                        IndicatorSpec::sma(50)};
    const auto warm = sweep_warmup(specs, {});
    const auto s = run_sweep(panel, risk, specs, {}, warm, Exec::Serial);
    const auto p = run_sweep(panel, risk, specs, {}, warm, Exec::Parallel);
    REQUIRE(s.size() == 3);
    for (std::size_t i = 0; i < s.size(); ++i) {
        CHECK(s[i].returns_gross == p[i].returns_gross);
        CHECK(s[i].label == specs[i].label());
    }
    CHECK(warm >= 750);
}

TEST_CASE("late starters do not hold positions before warm-up") {
    auto panel = sim_panel(3, 0.1, 1500, 33);
    panel.returns.col(2).head(600).setConstant(std::numeric_limits<double>::quiet_NaN());
    panel.validate_and_index();
    BacktestOptions opts;
    const auto risk = RiskTrack::build(panel, opts);
    const auto run = run_strategy(panel, risk, IndicatorSpec::ema(0.05), {}, 200);
    CHECK(run.weights.col(2).head(600 + opts.instrument_warmup).isZero());
    CHECK(run.weights.col(2).tail(100).cwiseAbs().sum() > 0.0);
    const Eigen::VectorXd mr = run.after_warmup(run.model_risk);
    for (Eigen::Index t = 0; t < mr.size(); ++t)
        if (mr[t] != 0.0) CHECK(std::abs(mr[t] - 1.0) < 1e-8);
}

TEST_CASE("string round trips") {
    CHECK(scheme_from_string("arp") == Scheme::ARP);
    CHECK(scheme_from_string(to_string(Scheme::MARKOWITZ)) == Scheme::MARKOWITZ);
    CHECK(rule_from_string("binary") == Rule::Binary);
    CHECK_THROWS_AS(scheme_from_string("magic"), ParameterError);
    PortfolioConfig bad;
    bad.smoothing_rho = 1.5;
    CHECK_THROWS_AS(bad.validate(), ParameterError);
}

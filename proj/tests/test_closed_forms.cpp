#include <doctest.h>

#include "support/oracles.hpp"
#include "trendlab/closed_forms.hpp"
#include "trendlab/error.hpp"

#include <cmath>
#include <numbers>

using namespace trendlab;

namespace {
TheoryParams base() {
    TheoryParams p;
    p.lambda = 0.01;
    p.beta0 = 0.1;
    p.eta = 0.01;
    return p;
}
}  // namespace

TEST_CASE("Sharpe formula and its optimum") {
    auto p = base();
    CHECK(sharpe_grebenkov(p) == doctest::Approx(oracle::sharpe_formula(0.01, 0.1, 0.01)).epsilon(1e-14));
    CHECK(sharpe_grebenkov(p) == doctest::Approx(0.05).epsilon(1e-12));
    CHECK(sharpe_grebenkov_annualized(p) == doctest::Approx(0.05 * std::sqrt(255.0)));
    p.theta = 0.3;
    CHECK(sharpe_grebenkov(p) ==
          doctest::Approx(oracle::sharpe_formula(0.01, 0.1, 0.01, 0.3)).epsilon(1e-14));
    for (double lambda : {0.001, 0.01, 0.05}) {
        for (double beta0 : {0.02, 0.1, 0.4}) {
            TheoryParams q;
            q.lambda = lambda;
            q.beta0 = beta0;
            const double got = eta_opt(q);
            const double want = oracle::argmax_log(
                [&](double eta) { return oracle::sharpe_formula(lambda, beta0, eta); }, 1e-6, 10.0);
            CHECK(got == doctest::Approx(want).epsilon(1e-7));
            CHECK(got >= lambda);
        }
    }
    CHECK(eta_opt(base()) == doctest::Approx(0.0173205).epsilon(1e-6));
    TheoryParams fig;
    fig.lambda = 1.0 / 180;
    fig.beta0 = 0.12;
    CHECK(1.0 / eta_opt(fig) == doctest::Approx(72.4).epsilon(1e-3));
}

TEST_CASE("beta conversions") {
    CHECK(beta0_from_beta(0.01, beta_from_beta0(0.01, 0.1)) == doctest::Approx(0.1).epsilon(1e-14));
    CHECK(beta_from_beta0(0.01, 0.1) == doctest::Approx(0.1 * std::sqrt(0.0199)));
}

TEST_CASE("stationary covariances match brute-force sums") {
    const auto p = base();
    const long t = 6000;  // (1-eta)^t is below 1e-26
    CHECK(stationary_signal_return_cov(p) ==
          doctest::Approx(oracle::signal_return_cov(t, 0.01, 0.1, 0.01, 1.0, true)).epsilon(1e-10));
    CHECK(stationary_signal_var(p) ==
          doctest::Approx(oracle::signal_var(t, 0.01, 0.1, 0.01, 1.0, true)).epsilon(1e-10));
    CHECK(stationary_signal_return_cov(p) == doctest::Approx(0.4974874).epsilon(1e-7));
    CHECK(stationary_signal_var(p) == doctest::Approx(100.2525189).epsilon(1e-9));
    CHECK(stationary_signal_var_uncorrected(p) == doctest::Approx(75.50314386).epsilon(1e-9));
    CHECK(stationary_return_var(p) == doctest::Approx(1.01));
}

TEST_CASE("finite-t covariances match brute-force sums") {
    for (double eta : {0.01, 0.05, 0.2}) {
        for (double lambda : {0.01, 0.03}) {
            TheoryParams p;
            p.lambda = lambda;
            p.eta = eta;
            p.beta0 = 0.3;
            p.gamma = 1.7;
            for (long t : {1L, 2L, 7L, 50L, 300L}) {
                CAPTURE(eta);
                CAPTURE(lambda);
                CAPTURE(t);
                CHECK(signal_return_cov_at(p, t) ==
                      doctest::Approx(oracle::signal_return_cov(t, lambda, 0.3, eta, 1.7, false)).epsilon(1e-10));
                CHECK(signal_var_at(p, t) ==
                      doctest::Approx(oracle::signal_var(t, lambda, 0.3, eta, 1.7, false)).epsilon(1e-10));
            }
        }
    }
    auto p = base();
    CHECK(signal_return_cov_at(p, 50) == doctest::Approx(0.12684769242973065).epsilon(1e-12));
    CHECK(signal_var_at(p, 50) == doctest::Approx(35.27113446074466).epsilon(1e-12));
    // equal lambda and eta takes the degenerate branch
    p.eta = p.lambda;
    CHECK(std::isfinite(signal_var_at(p, 100)));
}

TEST_CASE("Acar formulas against numerical integration") {
    TheoryParams p;
    p.mu_x = 0.02;
    p.sigma_x = 1.1;
    p.rho_xf = 0.3;
    p.mu_f = 0.5;
    p.sigma_f = 2.0;
    p.a = 1.5;
    p.b = -0.5;
    const auto got = acar_general(p);
    const auto [m1, m2] = oracle::acar_moments(p.mu_x, p.sigma_x, p.mu_f, p.sigma_f, p.rho_xf, p.a, p.b);
    CHECK(got.expected == doctest::Approx(m1).epsilon(1e-5));
    CHECK(got.second_moment == doctest::Approx(m2).epsilon(1e-5));
    CHECK(got.sharpe == doctest::Approx(m1 / std::sqrt(m2 - m1 * m1)).epsilon(1e-5));

    TheoryParams b;
    b.mu_x = 0.05;
    b.sigma_x = 1.0;
    b.rho_xf = 0.2;
    b.sigma_f = 1.0;
    b.mu_f = b.mu_x / (b.sigma_x * b.rho_xf);
    const auto bin = sharpe_acar_binary(b);
    b.a = 1.0;
    b.b = -1.0;
    const auto gen = acar_general(b);
    CHECK(bin.expected == doctest::Approx(gen.expected).epsilon(1e-12));
    CHECK(bin.sharpe == doctest::Approx(gen.sharpe).epsilon(1e-12));

    TheoryParams c;
    c.rho_xf = 0.0;
    CHECK(sharpe_acar_binary(c).expected == 0.0);
}

TEST_CASE("stationary binary and linear rules") {
    const auto p = base();
    const double rho = signal_return_correlation(p);
    const double want_rho = stationary_signal_return_cov(p) /
                            std::sqrt(stationary_signal_var(p) * stationary_return_var(p));
    CHECK(rho == doctest::Approx(want_rho).epsilon(1e-14));
    CHECK(rho == doctest::Approx(0.0494395).epsilon(1e-5));
    const auto a = acar_binary_stationary(p);
    CHECK(a.expected == doctest::Approx(0.0396437).epsilon(1e-5));
    CHECK(a.sharpe == doctest::Approx(0.0394777).epsilon(1e-5));
    // centered binary rule: E = sqrt(2/pi) sigma rho
    CHECK(a.expected == doctest::Approx(std::sqrt(2.0 / std::numbers::pi) * std::sqrt(1.01) * rho).epsilon(1e-12));
    CHECK(sharpe_linear_rule(rho) == doctest::Approx(rho / std::sqrt(1 + rho * rho)));
    CHECK(linear_rule_stationary(p) == doctest::Approx(sharpe_linear_rule(rho)).epsilon(1e-12));
    CHECK(linear_rule_stationary(p) == doctest::Approx(0.0493792).epsilon(1e-5));
}

TEST_CASE("Ferreira against explicit sums") {
    const auto p = base();
    const auto rho = trend_autocorrelation(p);
    CHECK(rho(1) == doctest::Approx(0.01 * 0.99 / 1.01));
    const long n = 100;
    double num = 0.0, cross = 0.0;
    for (long i = 1; i <= n; ++i) {
        num += rho(i);
        for (long j = 1; j <= n; ++j)
            if (i != j) cross += rho(std::abs(i - j));
    }
    const double want = num / std::sqrt(n + num * num + cross);
    CHECK(sharpe_ferreira(rho, n) == doctest::Approx(want).epsilon(1e-12));
    CHECK(sharpe_ferreira(rho, n) == doctest::Approx(0.0473627).epsilon(1e-5));
    const Autocorrelation zero = [](long) { return 0.0; };
    CHECK(sharpe_ferreira(zero, 10) == 0.0);
}

TEST_CASE("Zakamulin with no drift recovers the centered binary rule") {
    TheoryParams p;
    p.mu_x = 0.0;
    p.sigma_x = 1.3;
    const double rho_n = 0.15;
    const auto z = sharpe_zakamulin(p, rho_n, 0.0, 50);
    CHECK(z.expected == doctest::Approx(std::sqrt(2.0 / std::numbers::pi) * 1.3 * rho_n).epsilon(1e-12));
    p.mu_x = 0.01;
    const auto d = sharpe_zakamulin(p, rho_n, 0.0, 50);
    CHECK(d.expected > z.expected);
    CHECK(d.sharpe == doctest::Approx(d.expected / std::sqrt(d.variance)));
}

TEST_CASE("multi-asset variants and the scaling factor") {
    auto p = base();
    p.n_assets = 4.0;
    const double s24 = sharpe_multidim(p, MultidimVariant::Uncorrelated);
    p.n_assets = 1.0;
    CHECK(s24 == doctest::Approx(2.0 * sharpe_multidim(p, MultidimVariant::Uncorrelated)).epsilon(1e-12));
    p.rho_eps = 0.0;
    CHECK(sharpe_multidim(p, MultidimVariant::UncorrelatedTrends) ==
          doctest::Approx(sharpe_multidim(p, MultidimVariant::Uncorrelated)).epsilon(1e-14));
    CHECK(scaling_factor(1.0, 0.3) == 1.0);
    CHECK(scaling_factor(9.0, 0.0) == doctest::Approx(3.0));
    CHECK(scaling_factor(1e8, 0.09) == doctest::Approx(1.0 / 0.3).epsilon(1e-4));
    CHECK(normal_cdf(0.0) == 0.5);
    CHECK(normal_pdf(0.0) == doctest::Approx(1.0 / std::sqrt(2.0 * std::numbers::pi)));
}

TEST_CASE("parameter validation") {
    TheoryParams p;
    p.lambda = -0.1;
    CHECK_THROWS_AS(sharpe_grebenkov(p), ParameterError);
    p = base();
    p.eta = 1.5;
    CHECK_THROWS_AS(stationary_signal_var(p), ParameterError);
}

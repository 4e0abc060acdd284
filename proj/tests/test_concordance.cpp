#include <doctest.h>

#include "trendlab/closed_forms.hpp"
#include "trendlab/concordance.hpp"
#include "trendlab/error.hpp"

#include <cmath>

using namespace trendlab;

TEST_CASE("serial and parallel runs agree") {
    ConcordanceConfig cfg;
    cfg.t_steps = 20000;
    cfg.n_seeds = 3;
    const auto s = run_concordance(cfg, Exec::Serial);
    const auto p = run_concordance(cfg, Exec::Parallel);
    REQUIRE(s.seeds.size() == 3);
    for (std::size_t i = 0; i < s.seeds.size(); ++i) {
        CHECK(s.seeds[i].seed == p.seeds[i].seed);
        CHECK(s.seeds[i].sr_linear == p.seeds[i].sr_linear);
        CHECK(s.seeds[i].sr_voltarget == p.seeds[i].sr_voltarget);
    }
    CHECK(s.seeds[0].seed != s.seeds[1].seed);
}

TEST_CASE("checks carry the closed forms") {
    ConcordanceConfig cfg;
    cfg.t_steps = 200000;
    cfg.n_seeds = 4;
    const auto rep = run_concordance(cfg);
    TheoryParams p;
    CHECK(rep.check("linear_rule").closed_form == linear_rule_stationary(p));
    CHECK(rep.check("binary_acar").closed_form == acar_binary_stationary(p).sharpe);
    CHECK(rep.check("voltarget_grebenkov").closed_form == sharpe_grebenkov(p));
    CHECK(rep.check("var_signal").closed_form == stationary_signal_var(p));
    CHECK_THROWS(rep.check("missing"));
    for (const auto& c : rep.checks) {
        CAPTURE(c.name);
        CHECK(c.std_error > 0.0);
        // loose here; the pinned tolerance lives in the acceptance run
        CHECK(std::abs(c.z()) < 5.0);
    }
}

TEST_CASE("degenerate configurations are rejected") {
    ConcordanceConfig cfg;
    cfg.n_seeds = 1;
    CHECK_THROWS_AS(run_concordance(cfg), ParameterError);
    cfg.n_seeds = 2;
    cfg.t_steps = 10;
    CHECK_THROWS_AS(run_concordance(cfg), ParameterError);
}

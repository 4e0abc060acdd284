#pragma once

#include "trendlab/parallel.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace trendlab {

/// Monte Carlo check of the one-instrument closed forms. Each seed simulates
/// a stationary path and trades it with four position rules against the
/// next return:
///   linear      s_t,           s_t = (1-eta) s_{t-1} + r_{t-1}
///   binary      sign(s_t)
///   voltarget   phi_t / sigma_t, the normalized EMA of the signal engine
///   sma         r_{t-1} + ... + r_{t-n}
struct ConcordanceConfig {
    double lambda = 0.01;
    double beta0 = 0.1;
    double eta = 0.01;
    long long t_steps = 2'000'000;
    int n_seeds = 8;
    std::uint64_t seed = 20240601;
    long sma_window = 100;
};

struct ConcordanceSeed {
    std::uint64_t seed = 0;
    double sr_linear = 0.0;
    double sr_binary = 0.0;
    double sr_voltarget = 0.0;
    double sr_sma = 0.0;
    double cov_sr = 0.0;  // mean s_t r_t
    double var_s = 0.0;   // mean s_t^2
    double var_r = 0.0;
};

struct ConcordanceCheck {
    std::string name;
    double monte_carlo = 0.0;
    double std_error = 0.0;  // sd over seeds / sqrt(seeds)
    double closed_form = 0.0;
    double z() const;
};

struct ConcordanceReport {
    ConcordanceConfig config;
    std::vector<ConcordanceSeed> seeds;
    std::vector<ConcordanceCheck> checks;

    const ConcordanceCheck& check(const std::string& name) const;
};

ConcordanceSeed concordance_seed(const ConcordanceConfig& cfg, std::uint64_t seed);

/// Seeds derive_seed(derive_seed(cfg.seed, kMonteCarlo), i), one per work item.
ConcordanceReport run_concordance(const ConcordanceConfig& cfg, Exec exec = Exec::Parallel);

}  // namespace trendlab

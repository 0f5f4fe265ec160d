#pragma once

// Monte Carlo coverage and width study of the four E-value interval methods
// on synthetic data with zero true sensitivity parameter.

#include "sensivalue/niw.hpp"
#include "sensivalue/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace sensivalue {

struct StudyConfig {
    std::size_t n_units = 2500;
    std::vector<std::size_t> k_multipliers{1, 3, 6, 9, 12, 15, 18};
    std::size_t n_trials = 1000;
    std::size_t m_groups = 15;
    Vec2 delta_mean{0.0, 0.0};
    SymMat2 delta_cov{0.0025, 0.0004, 0.0025};
    double level = 0.95;
    std::uint64_t master_seed = 42;
    std::size_t n_draws = 20000;  // posterior draws per trial and Bayesian method

    // Outcome surrogate: observed Y is log-normal with this mean and sd;
    // propensities are Beta(a, b) clamped below at propensity_floor.
    double outcome_mean = 3.0;
    double outcome_sd = 1.0;
    double propensity_a = 0.6;
    double propensity_b = 1.2;
    double propensity_floor = 0.05;

    FitConfig fit;

    /// Throws on invalid settings.
    void validate() const;
};

/// Pairs for one trial; delta_j ~ N2(delta_mean, delta_cov) i.i.d.
SensitivityPairs generate_pairs(const StudyConfig& config, std::size_t trial_index);

/// The first n units of the trial's unit stream. Prefixes are shared, so the
/// k-multiplied datasets of a trial are nested.
std::vector<MissingDataSample> generate_units(const StudyConfig& config, std::size_t trial_index,
                                              std::size_t n);

struct Trial {
    std::vector<MissingDataSample> samples;
    SensitivityPairs pairs;
};

/// Units for multiplier k (n = k * n_units) together with the trial's pairs.
Trial generate_trial(const StudyConfig& config, std::size_t trial_index, std::size_t k = 1);

struct StudyCell {
    IntervalMethod method;
    std::size_t k;
    double coverage;
    double mean_width;
    std::size_t n_ok;
    std::size_t n_failed;
};

struct StudyResult {
    std::vector<StudyCell> cells;  // method-major, then k in config order

    const StudyCell& at(IntervalMethod method, std::size_t k) const;

    /// Header method,k,coverage,mean_width,n_ok,n_failed.
    std::string to_csv(int precision = 6) const;
};

/// Per-trial outcome, exposed for tests.
struct TrialOutcome {
    bool failed = false;
    std::string error;
    // [method][k index]
    std::vector<std::vector<EvalueInterval>> intervals;
};

TrialOutcome run_trial(const StudyConfig& config, std::size_t trial_index);

using ProgressFn = void (*)(std::size_t done, std::size_t total);

/// Runs all trials (concurrently when threads are available) and aggregates
/// by method and k. Failed trials are excluded and counted; a failure rate of
/// 1% or more raises.
StudyResult run_study(const StudyConfig& config, ProgressFn progress = nullptr);

}  // namespace sensivalue

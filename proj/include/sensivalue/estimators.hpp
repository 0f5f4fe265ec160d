#pragma once

// Inverse-probability-weighted estimation of the population mean, benchmark
// differencing into sensitivity pairs, and the two asymptotic (delta-method)
// E-value intervals used as baselines.

#include "sensivalue/types.hpp"

#include <span>
#include <string>
#include <vector>

namespace sensivalue {

/// n^-1 sum R_i Y_i / pi_i. Throws "no observed outcomes".
double ipw_mean(std::span<const MissingDataSample> samples);

/// p_obs = #observed / n; sd_y from the IPW-weighted variance
/// sum w_i (y_i - mu)^2 / sum w_i with w_i = R_i / pi_i and mu = ipw_mean.
OutcomeSummary outcome_summary(std::span<const MissingDataSample> samples);

/// Linearisation variance of the IPW mean: (n (n-1))^-1 sum (t_i - tbar)^2,
/// t_i = R_i Y_i / pi_i.
double taylor_variance(std::span<const MissingDataSample> samples);

/// Horvitz-Thompson variance under Poisson sampling:
/// n^-2 sum R_i (1 - pi_i) (y_i / pi_i)^2.
double poisson_variance(std::span<const MissingDataSample> samples);

struct BenchmarkPair {
    std::string group_id;
    double mu_source1 = 0.0;
    double mu_source2 = 0.0;
};

struct GroupMean {
    std::string group_id;
    double mean = 0.0;
};

/// Row j = (mu_j - mu_source1_j, mu_j - mu_source2_j), in benchmark order.
/// Throws when the two group sets differ, naming the unmatched groups.
SensitivityPairs sensitivity_pairs(std::span<const GroupMean> ipw_means,
                                   std::span<const BenchmarkPair> benchmarks);

/// Symmetric delta-method interval on the E-value scale around
/// V(RR(delta_hat)) with Var(delta_hat) = variance, clamped below at 1. At
/// RR == 1 the derivative is infinite; the interval is then
/// [1, V(exp(0.91 (1-p) z sd / sigma_Y))] and singular_fallback is set.
EvalueInterval delta_method_interval(double delta_hat, double variance,
                                     const OutcomeSummary& summary, double level,
                                     IntervalMethod method);

/// dV/dRR on the RR > 1 branch, 1 + (2RR - 1) / (2 sqrt(RR^2 - RR)).
double evalue_derivative(double rr);

EvalueInterval taylor_series_interval(std::span<const MissingDataSample> samples,
                                      const OutcomeSummary& summary, double delta_hat,
                                      double level);

EvalueInterval poisson_sampling_interval(std::span<const MissingDataSample> samples,
                                         const OutcomeSummary& summary, double delta_hat,
                                         double level);

}  // namespace sensivalue

#pragma once

// Sensitivity parameter -> standardized effect -> risk ratio -> E-value, and
// posterior E-value simulation with equal-tailed credible intervals.

#include "sensivalue/posterior.hpp"
#include "sensivalue/types.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace sensivalue {

/// Coefficient of the standardized-mean-difference to log risk ratio map.
inline constexpr double kRiskRatioSlope = 0.91;

/// mu_missing = (1 - P(R=1)) * delta / sigma_Y
double standardized_effect(double delta, const OutcomeSummary& summary);

/// RR ~= exp(0.91 * mu_missing)
double rr_from_effect(double mu_missing);

/// V = RR + sqrt(RR (RR - 1)) for RR >= 1, and the same map applied to 1/RR
/// for RR < 1. Throws for rr <= 0.
double evalue_from_rr(double rr);

/// E-value as a function of ln RR. Accurate near ln RR = 0, where the direct
/// form loses digits to cancellation in RR - 1.
double evalue_from_log_rr(double log_rr);

/// Inverse of evalue_from_log_rr on the RR > 1 branch: ln(v^2 / (2v - 1)).
double log_rr_from_evalue(double v);

/// Simulated posterior distribution of the E-value. Draws are kept on the
/// signed ln RR scale; the E-values are derived from them.
class EvaluePosterior {
public:
    EvaluePosterior(std::vector<double> log_rr, const OutcomeSummary& summary, std::uint64_t seed);

    /// Build from E-value draws that all lie on the RR >= 1 branch.
    static EvaluePosterior from_evalues(std::span<const double> evalues,
                                        const OutcomeSummary& summary);

    std::span<const double> samples() const& { return evalues_; }
    std::span<const double> samples() && = delete;
    std::span<const double> log_rr() const& { return log_rr_; }
    std::span<const double> log_rr() && = delete;
    const OutcomeSummary& summary() const { return summary_; }
    std::size_t n_draws() const { return evalues_.size(); }
    std::uint64_t seed() const { return seed_; }

    /// True when fewer than 1000 draws back the posterior.
    bool low_draw_warning() const { return evalues_.size() < 1000; }

private:
    std::vector<double> log_rr_;
    std::vector<double> evalues_;
    OutcomeSummary summary_;
    std::uint64_t seed_;
};

/// Composes sample_delta -> standardized_effect -> rr_from_effect ->
/// evalue_from_rr per draw. Fewer than 100 draws is an error.
EvaluePosterior posterior_evalue(const GeneralizedT& post, const OutcomeSummary& summary,
                                 std::size_t n_draws, std::uint64_t seed);

/// Same composition over caller-supplied sensitivity-parameter draws.
EvaluePosterior evalue_posterior_from_draws(std::span<const double> delta_draws,
                                            const OutcomeSummary& summary,
                                            std::uint64_t seed = 0);

/// Linear interpolation between order statistics (R type 7) of sorted data.
double sorted_quantile(std::span<const double> sorted, double p);

/// Equal-tailed credible interval. Quantiles are taken on the signed ln RR
/// scale and mapped to E-values; an interval that straddles RR = 1 has
/// lower bound exactly 1. Since ln RR is linear in delta, whether the
/// interval contains 1 does not depend on the outcome summary.
EvalueInterval credible_interval(const EvaluePosterior& ep, double level,
                                 IntervalMethod method = IntervalMethod::SubjectiveBayes);

}  // namespace sensivalue

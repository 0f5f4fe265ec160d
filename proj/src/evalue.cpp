#include "sensivalue/evalue.hpp"

#include <algorithm>
#include <cmath>

namespace sensivalue {

double standardized_effect(double delta, const OutcomeSummary& summary) {
    return (1.0 - summary.p_obs()) * delta / summary.sd_y();
}

double rr_from_effect(double mu_missing) { return std::exp(kRiskRatioSlope * mu_missing); }

double evalue_from_rr(double rr) {
    if (!(rr > 0.0) || !std::isfinite(rr)) throw Error("risk ratio must be positive and finite");
    const double r = rr < 1.0 ? 1.0 / rr : rr;
    return r + std::sqrt(r * (r - 1.0));
}

double evalue_from_log_rr(double log_rr) {
    if (!std::isfinite(log_rr)) throw Error("log risk ratio must be finite");
    const double a = std::abs(log_rr);
    const double r = std::exp(a);
    return r + std::sqrt(r * std::expm1(a));
}

double log_rr_from_evalue(double v) {
    if (!(v >= 1.0) || !std::isfinite(v)) throw Error("E-value must be finite and >= 1");
    const double t = v - 1.0;
    return std::log1p(t * t / (2.0 * v - 1.0));
}

EvaluePosterior::EvaluePosterior(std::vector<double> log_rr, const OutcomeSummary& summary,
                                 std::uint64_t seed)
    : log_rr_(std::move(log_rr)), summary_(summary), seed_(seed) {
    if (log_rr_.empty()) throw Error("E-value posterior needs at least one draw");
    evalues_.reserve(log_rr_.size());
    for (double x : log_rr_) evalues_.push_back(evalue_from_log_rr(x));
}

EvaluePosterior EvaluePosterior::from_evalues(std::span<const double> evalues,
                                              const OutcomeSummary& summary) {
    std::vector<double> lr;
    lr.reserve(evalues.size());
    for (double v : evalues) lr.push_back(log_rr_from_evalue(v));
    EvaluePosterior ep(std::move(lr), summary, 0);
    // Keep the caller's values rather than the round-tripped ones.
    ep.evalues_.assign(evalues.begin(), evalues.end());
    return ep;
}

EvaluePosterior evalue_posterior_from_draws(std::span<const double> delta_draws,
                                            const OutcomeSummary& summary, std::uint64_t seed) {
    std::vector<double> lr;
    lr.reserve(delta_draws.size());
    for (double d : delta_draws) lr.push_back(kRiskRatioSlope * standardized_effect(d, summary));
    return EvaluePosterior(std::move(lr), summary, seed);
}

EvaluePosterior posterior_evalue(const GeneralizedT& post, const OutcomeSummary& summary,
                                 std::size_t n_draws, std::uint64_t seed) {
    if (n_draws < 100) throw Error("posterior_evalue needs at least 100 draws");
    const std::vector<double> draws = sample_delta(post, n_draws, seed);
    return evalue_posterior_from_draws(draws, summary, seed);
}

double sorted_quantile(std::span<const double> sorted, double p) {
    if (sorted.empty()) throw Error("quantile of an empty sample");
    if (!(p >= 0.0 && p <= 1.0)) throw Error("quantile probability must lie in [0, 1]");
    const double h = p * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

namespace {

// Type 7 quantile by selection; reorders data.
double select_quantile(std::vector<double>& data, double p) {
    const double h = p * static_cast<double>(data.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    std::nth_element(data.begin(), data.begin() + static_cast<std::ptrdiff_t>(lo), data.end());
    const double a = data[lo];
    if (lo + 1 >= data.size()) return a;
    const double b = *std::min_element(data.begin() + static_cast<std::ptrdiff_t>(lo) + 1, data.end());
    return a + (h - static_cast<double>(lo)) * (b - a);
}

}  // namespace

EvalueInterval credible_interval(const EvaluePosterior& ep, double level, IntervalMethod method) {
    if (!(level > 0.0 && level < 1.0)) throw Error("interval level must lie in (0, 1)");
    std::vector<double> x(ep.log_rr().begin(), ep.log_rr().end());
    const double alpha = 0.5 * (1.0 - level);
    const double lo = select_quantile(x, alpha);
    const double hi = select_quantile(x, 1.0 - alpha);
    const double v_lo = evalue_from_log_rr(lo);
    const double v_hi = evalue_from_log_rr(hi);
    if (lo <= 0.0 && hi >= 0.0) {
        return EvalueInterval(1.0, std::max(v_lo, v_hi), method, level);
    }
    return EvalueInterval(std::min(v_lo, v_hi), std::max(v_lo, v_hi), method, level);
}

}  // namespace sensivalue

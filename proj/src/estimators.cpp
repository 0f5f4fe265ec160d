#include "sensivalue/estimators.hpp"

#include "sensivalue/evalue.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <map>

namespace sensivalue {

namespace {

void require_observed(std::span<const MissingDataSample> samples) {
    if (std::none_of(samples.begin(), samples.end(),
                     [](const MissingDataSample& s) { return s.observed(); })) {
        throw Error("no observed outcomes");
    }
}

double normal_quantile_two_sided(double level) {
    if (!(level > 0.0 && level < 1.0)) throw Error("interval level must lie in (0, 1)");
    const boost::math::normal_distribution<double> n01;
    return boost::math::quantile(n01, 0.5 + 0.5 * level);
}

std::string join(const std::vector<std::string>& names) {
    std::string out;
    for (const auto& n : names) out += (out.empty() ? "" : ", ") + n;
    return out;
}

}  // namespace

double ipw_mean(std::span<const MissingDataSample> samples) {
    require_observed(samples);
    double total = 0.0;
    for (const auto& s : samples) {
        if (s.observed()) total += s.y() / s.propensity();
    }
    return total / static_cast<double>(samples.size());
}

OutcomeSummary outcome_summary(std::span<const MissingDataSample> samples) {
    const auto n_obs = std::count_if(samples.begin(), samples.end(),
                                     [](const MissingDataSample& s) { return s.observed(); });
    if (n_obs < 2) throw Error("outcome summary needs at least 2 observed units");
    const double mu = ipw_mean(samples);
    double sw = 0.0;
    double swd = 0.0;
    for (const auto& s : samples) {
        if (!s.observed()) continue;
        const double w = 1.0 / s.propensity();
        sw += w;
        swd += w * (s.y() - mu) * (s.y() - mu);
    }
    const double p = static_cast<double>(n_obs) / static_cast<double>(samples.size());
    return OutcomeSummary(p, std::sqrt(swd / sw), samples.size());
}

double taylor_variance(std::span<const MissingDataSample> samples) {
    require_observed(samples);
    const std::size_t n = samples.size();
    if (n < 2) throw Error("variance needs at least 2 units");
    auto t = [](const MissingDataSample& s) { return s.observed() ? s.y() / s.propensity() : 0.0; };
    double mean = 0.0;
    for (const auto& s : samples) mean += t(s);
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (const auto& s : samples) ss += (t(s) - mean) * (t(s) - mean);
    return ss / (static_cast<double>(n) * static_cast<double>(n - 1));
}

double poisson_variance(std::span<const MissingDataSample> samples) {
    require_observed(samples);
    double total = 0.0;
    for (const auto& s : samples) {
        if (!s.observed()) continue;
        const double r = s.y() / s.propensity();
        total += (1.0 - s.propensity()) * r * r;
    }
    const auto n = static_cast<double>(samples.size());
    return total / (n * n);
}

SensitivityPairs sensitivity_pairs(std::span<const GroupMean> ipw_means,
                                   std::span<const BenchmarkPair> benchmarks) {
    std::map<std::string, double> means;
    for (const auto& g : ipw_means) {
        if (!means.emplace(g.group_id, g.mean).second) {
            throw Error("duplicate IPW group '" + g.group_id + "'");
        }
    }
    std::vector<std::string> no_mean;
    std::map<std::string, bool> seen;
    std::vector<Vec2> rows;
    for (const auto& b : benchmarks) {
        if (!std::isfinite(b.mu_source1) || !std::isfinite(b.mu_source2)) {
            throw Error("benchmark '" + b.group_id + "' is not finite");
        }
        if (!seen.emplace(b.group_id, true).second) {
            throw Error("duplicate benchmark group '" + b.group_id + "'");
        }
        const auto it = means.find(b.group_id);
        if (it == means.end()) {
            no_mean.push_back(b.group_id);
            continue;
        }
        rows.push_back({it->second - b.mu_source1, it->second - b.mu_source2});
    }
    std::vector<std::string> no_benchmark;
    for (const auto& g : ipw_means) {
        if (!seen.contains(g.group_id)) no_benchmark.push_back(g.group_id);
    }
    if (!no_mean.empty() || !no_benchmark.empty()) {
        std::string msg = "group sets differ";
        if (!no_mean.empty()) msg += "; missing IPW means for: " + join(no_mean);
        if (!no_benchmark.empty()) msg += "; missing benchmarks for: " + join(no_benchmark);
        throw Error(msg);
    }
    return SensitivityPairs(std::move(rows));
}

double evalue_derivative(double rr) {
    if (!(rr > 1.0)) throw Error("E-value derivative is defined for RR > 1");
    return 1.0 + (2.0 * rr - 1.0) / (2.0 * std::sqrt(rr * (rr - 1.0)));
}

EvalueInterval delta_method_interval(double delta_hat, double variance,
                                     const OutcomeSummary& summary, double level,
                                     IntervalMethod method) {
    if (!std::isfinite(delta_hat)) throw Error("delta_hat must be finite");
    if (!(variance >= 0.0) || !std::isfinite(variance)) throw Error("variance must be >= 0");
    const double z = normal_quantile_two_sided(level);
    const double slope = kRiskRatioSlope * (1.0 - summary.p_obs()) / summary.sd_y();
    const double sd = std::sqrt(variance);
    const double log_rr = slope * delta_hat;
    if (log_rr == 0.0) {
        return EvalueInterval(1.0, evalue_from_log_rr(slope * z * sd), method, level, true);
    }
    // r = max(RR, 1/RR); |dV/d delta| = V'(r) r slope on either branch.
    const double a = std::abs(log_rr);
    const double r = std::exp(a);
    const double dv_drr = 1.0 + (2.0 * r - 1.0) / (2.0 * std::sqrt(r * std::expm1(a)));
    const double sd_v = dv_drr * r * slope * sd;
    const double v = evalue_from_log_rr(log_rr);
    const double upper = v + z * sd_v;
    return EvalueInterval(std::max(1.0, v - z * sd_v), std::max(1.0, upper), method, level);
}

EvalueInterval taylor_series_interval(std::span<const MissingDataSample> samples,
                                      const OutcomeSummary& summary, double delta_hat,
                                      double level) {
    return delta_method_interval(delta_hat, taylor_variance(samples), summary, level,
                                 IntervalMethod::TaylorSeries);
}

EvalueInterval poisson_sampling_interval(std::span<const MissingDataSample> samples,
                                         const OutcomeSummary& summary, double delta_hat,
                                         double level) {
    return delta_method_interval(delta_hat, poisson_variance(samples), summary, level,
                                 IntervalMethod::PoissonSampling);
}

}  // namespace sensivalue

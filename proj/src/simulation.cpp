#include "sensivalue/simulation.hpp"

#include "sensivalue/estimators.hpp"
#include "sensivalue/evalue.hpp"
#include "sensivalue/parallel.hpp"
#include "sensivalue/posterior.hpp"

#include <boost/random/bernoulli_distribution.hpp>
#include <boost/random/gamma_distribution.hpp>
#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <sstream>

namespace sensivalue {

namespace {

enum Stream : std::uint64_t { kPairStream = 1, kUnitStream = 2, kSubjectiveDraws = 3, kObjectiveDraws = 4 };

constexpr std::array<IntervalMethod, 4> kStudyMethods = kAllMethods;

double beta_draw(boost::random::mt19937_64& eng, double a, double b) {
    const double x = boost::random::gamma_distribution<double>(a, 1.0)(eng);
    const double y = boost::random::gamma_distribution<double>(b, 1.0)(eng);
    return x / (x + y);
}

}  // namespace

void StudyConfig::validate() const {
    if (n_trials < 1) throw Error("n_trials must be >= 1");
    if (n_units < 2) throw Error("n_units must be >= 2");
    if (m_groups < SensitivityPairs::kMinGroups) throw Error("m_groups must be >= 3");
    if (k_multipliers.empty()) throw Error("k_multipliers must not be empty");
    for (auto k : k_multipliers) {
        if (k < 1) throw Error("k multipliers must be >= 1");
    }
    if (!delta_mean.finite()) throw Error("delta_mean must be finite");
    if (!delta_cov.finite() || !delta_cov.positive_definite()) {
        throw Error("delta_cov must be symmetric positive definite");
    }
    if (!(level > 0.0 && level < 1.0)) throw Error("level must lie in (0, 1)");
    if (n_draws < 100) throw Error("n_draws must be >= 100");
    if (!(outcome_mean > 0.0 && outcome_sd > 0.0)) throw Error("outcome mean and sd must be positive");
    if (!(propensity_a > 0.0 && propensity_b > 0.0)) throw Error("propensity Beta shapes must be positive");
    if (!(propensity_floor > 0.0 && propensity_floor < 1.0)) {
        throw Error("propensity_floor must lie in (0, 1)");
    }
}

SensitivityPairs generate_pairs(const StudyConfig& config, std::size_t trial_index) {
    boost::random::mt19937_64 eng(derive_seed(config.master_seed, trial_index, kPairStream));
    boost::random::normal_distribution<double> n01;
    const SymMat2& c = config.delta_cov;
    const double l11 = std::sqrt(c.xx);
    const double l21 = c.xy / l11;
    const double l22 = std::sqrt(c.yy - l21 * l21);
    std::vector<Vec2> rows(config.m_groups);
    for (auto& r : rows) {
        const double z1 = n01(eng);
        const double z2 = n01(eng);
        r = {config.delta_mean.x + l11 * z1, config.delta_mean.y + l21 * z1 + l22 * z2};
    }
    return SensitivityPairs(std::move(rows));
}

std::vector<MissingDataSample> generate_units(const StudyConfig& config, std::size_t trial_index,
                                              std::size_t n) {
    boost::random::mt19937_64 eng(derive_seed(config.master_seed, trial_index, kUnitStream));
    const double s2 = std::log1p((config.outcome_sd * config.outcome_sd) /
                                 (config.outcome_mean * config.outcome_mean));
    const double mu = std::log(config.outcome_mean) - 0.5 * s2;
    boost::random::normal_distribution<double> log_y(mu, std::sqrt(s2));
    boost::random::uniform_01<double> unif;
    std::vector<MissingDataSample> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double pi = std::max(config.propensity_floor,
                                   beta_draw(eng, config.propensity_a, config.propensity_b));
        const bool observed = unif(eng) < pi;
        const double y = std::exp(log_y(eng));
        out.emplace_back(y, observed, std::min(pi, 1.0));
    }
    return out;
}

Trial generate_trial(const StudyConfig& config, std::size_t trial_index, std::size_t k) {
    return {generate_units(config, trial_index, k * config.n_units),
            generate_pairs(config, trial_index)};
}

TrialOutcome run_trial(const StudyConfig& config, std::size_t trial_index) {
    TrialOutcome out;
    try {
        const SensitivityPairs pairs = generate_pairs(config, trial_index);
        const FitResult fit = fit_hyperparams(pairs, config.fit);
        const GeneralizedT subj = subjective_posterior(pairs, fit.hyper);
        const GeneralizedT obj = objective_posterior(pairs);
        const auto subj_draws = sample_delta(
            subj, config.n_draws, derive_seed(config.master_seed, trial_index, kSubjectiveDraws));
        const auto obj_draws = sample_delta(
            obj, config.n_draws, derive_seed(config.master_seed, trial_index, kObjectiveDraws));
        const ScatterStats st = scatter_stats(pairs);
        const double delta_hat = 0.5 * st.delta_bar.sum();

        const std::size_t k_max =
            *std::max_element(config.k_multipliers.begin(), config.k_multipliers.end());
        const auto units = generate_units(config, trial_index, k_max * config.n_units);

        out.intervals.assign(kStudyMethods.size(), {});
        for (std::size_t k : config.k_multipliers) {
            const std::span<const MissingDataSample> data(units.data(), k * config.n_units);
            const OutcomeSummary summary = outcome_summary(data);
            for (std::size_t mi = 0; mi < kStudyMethods.size(); ++mi) {
                const IntervalMethod m = kStudyMethods[mi];
                switch (m) {
                    case IntervalMethod::TaylorSeries:
                        out.intervals[mi].push_back(
                            taylor_series_interval(data, summary, delta_hat, config.level));
                        break;
                    case IntervalMethod::PoissonSampling:
                        out.intervals[mi].push_back(
                            poisson_sampling_interval(data, summary, delta_hat, config.level));
                        break;
                    case IntervalMethod::SubjectiveBayes:
                        out.intervals[mi].push_back(credible_interval(
                            evalue_posterior_from_draws(subj_draws, summary), config.level, m));
                        break;
                    case IntervalMethod::ObjectiveBayes:
                        out.intervals[mi].push_back(credible_interval(
                            evalue_posterior_from_draws(obj_draws, summary), config.level, m));
                        break;
                }
            }
        }
    } catch (const Error& e) {
        out.failed = true;
        out.error = e.what();
        out.intervals.clear();
    }
    return out;
}

const StudyCell& StudyResult::at(IntervalMethod method, std::size_t k) const {
    for (const auto& c : cells) {
        if (c.method == method && c.k == k) return c;
    }
    throw Error("no study cell for method '" + method_tag(method) + "' and k = " + std::to_string(k));
}

std::string StudyResult::to_csv(int precision) const {
    std::ostringstream os;
    os << std::setprecision(precision);
    os << "method,k,coverage,mean_width,n_ok,n_failed\n";
    for (const auto& c : cells) {
        os << method_tag(c.method) << ',' << c.k << ',' << c.coverage << ',' << c.mean_width << ','
           << c.n_ok << ',' << c.n_failed << '\n';
    }
    return os.str();
}

StudyResult run_study(const StudyConfig& config, ProgressFn progress) {
    config.validate();
    std::vector<TrialOutcome> outcomes(config.n_trials);
    std::atomic<std::size_t> done{0};
    parallel_for(config.n_trials, [&](std::size_t t) {
        outcomes[t] = run_trial(config, t);
        const std::size_t d = ++done;
        if (progress) progress(d, config.n_trials);
    });

    std::size_t n_failed = 0;
    std::string first_error;
    for (const auto& o : outcomes) {
        if (o.failed) {
            if (first_error.empty()) first_error = o.error;
            ++n_failed;
        }
    }
    if (static_cast<double>(n_failed) >= 0.01 * static_cast<double>(config.n_trials)) {
        throw Error("study aborted: " + std::to_string(n_failed) + " of " +
                    std::to_string(config.n_trials) + " trials failed (first: " + first_error + ")");
    }

    StudyResult result;
    for (std::size_t mi = 0; mi < kStudyMethods.size(); ++mi) {
        for (std::size_t ki = 0; ki < config.k_multipliers.size(); ++ki) {
            std::size_t ok = 0;
            std::size_t covered = 0;
            double width = 0.0;
            for (const auto& o : outcomes) {
                if (o.failed) continue;
                const EvalueInterval& iv = o.intervals[mi][ki];
                ++ok;
                covered += iv.contains_null() ? 1 : 0;
                width += iv.width();
            }
            result.cells.push_back({kStudyMethods[mi], config.k_multipliers[ki],
                                    ok ? static_cast<double>(covered) / static_cast<double>(ok) : 0.0,
                                    ok ? width / static_cast<double>(ok) : 0.0, ok, n_failed});
        }
    }
    return result;
}

}  // namespace sensivalue

#include "sensivalue/estimators.hpp"
#include "sensivalue/evalue.hpp"
#include "sensivalue/simulation.hpp"

#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <numeric>

using namespace sensivalue;

namespace {

std::vector<MissingDataSample> random_units(svtest::Gen& g, std::size_t n) {
    std::vector<MissingDataSample> out;
    for (std::size_t i = 0; i < n; ++i) {
        const double pi = g.uniform(0.05, 1.0);
        out.emplace_back(g.normal(3.0, 1.0), g.coin(pi), pi);
    }
    if (std::none_of(out.begin(), out.end(), [](auto& s) { return s.observed(); })) {
        out[0] = MissingDataSample(1.0, true, 0.5);
    }
    return out;
}

double brute_ipw(const std::vector<MissingDataSample>& s) {
    double t = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) t += (s[i].observed() ? 1.0 : 0.0) * s[i].y() / s[i].propensity();
    return t / static_cast<double>(s.size());
}

}  // namespace

TEST_CASE("ipw_mean examples") {
    const std::vector<MissingDataSample> a{{1, true, 1}, {2, true, 1}, {3, true, 1}};
    CHECK(ipw_mean(a) == 2.0);
    const std::vector<MissingDataSample> b{{4, true, 0.5}, {9, false, 0.5}};
    CHECK(ipw_mean(b) == 4.0);
    CHECK_THROWS_WITH_AS(ipw_mean(std::vector<MissingDataSample>{}), "no observed outcomes", Error);
    CHECK_THROWS_WITH_AS(ipw_mean(std::vector<MissingDataSample>{{1, false, 0.5}}),
                         "no observed outcomes", Error);

    svtest::Gen g(5);
    const auto s = random_units(g, 50);
    CHECK(std::abs(ipw_mean(s) - brute_ipw(s)) < 1e-12);
}

TEST_CASE("ipw_mean is permutation invariant and exact for a census") {
    svtest::Gen g(6);
    for (int rep = 0; rep < 20; ++rep) {
        auto s = random_units(g, 40);
        const double before = ipw_mean(s);
        std::shuffle(s.begin(), s.end(), g.engine());
        CHECK(ipw_mean(s) == doctest::Approx(before).epsilon(1e-13));
    }
    std::vector<MissingDataSample> census;
    std::vector<double> ys;
    for (int i = 0; i < 37; ++i) {
        ys.push_back(g.normal());
        census.emplace_back(ys.back(), true, 1.0);
    }
    CHECK(ipw_mean(census) == std::accumulate(ys.begin(), ys.end(), 0.0) / 37.0);
}

TEST_CASE("outcome_summary") {
    const std::vector<MissingDataSample> zero{{0, true, 1}, {0, true, 1}};
    CHECK_THROWS_WITH_AS(outcome_summary(zero), "degenerate outcome variance", Error);
    const std::vector<MissingDataSample> half{{1, true, 0.5}, {2, false, 0.5}, {5, true, 0.5}, {0, false, 0.5}};
    CHECK(outcome_summary(half).p_obs() == 0.5);
    CHECK(outcome_summary(half).n() == 4);
    CHECK_THROWS_AS(outcome_summary(std::vector<MissingDataSample>{{1, true, 0.5}, {2, false, 0.5}}), Error);

    // Two-pass weighted variance oracle.
    svtest::Gen g(7);
    const auto s = random_units(g, 20);
    const double mu = brute_ipw(s);
    double sw = 0.0, swd = 0.0;
    for (const auto& u : s) {
        if (!u.observed()) continue;
        sw += 1.0 / u.propensity();
    }
    for (const auto& u : s) {
        if (!u.observed()) continue;
        swd += (1.0 / u.propensity()) * (u.y() - mu) * (u.y() - mu);
    }
    CHECK(std::abs(outcome_summary(s).sd_y() - std::sqrt(swd / sw)) < 1e-12);
}

TEST_CASE("variance estimators match summation oracles") {
    svtest::Gen g(8);
    const auto s = random_units(g, 100);
    double pv = 0.0;
    for (const auto& u : s) {
        if (u.observed()) pv += (1.0 - u.propensity()) * std::pow(u.y() / u.propensity(), 2);
    }
    pv /= 100.0 * 100.0;
    CHECK(std::abs(poisson_variance(s) - pv) < 1e-12);

    std::vector<double> t;
    for (const auto& u : s) t.push_back(u.observed() ? u.y() / u.propensity() : 0.0);
    const double tb = svtest::mean(t);
    double ss = 0.0;
    for (double v : t) ss += (v - tb) * (v - tb);
    CHECK(std::abs(taylor_variance(s) - ss / (100.0 * 99.0)) < 1e-12);
}

TEST_CASE("sensitivity_pairs") {
    const std::vector<GroupMean> mu{{"a", 5.0}, {"b", 5.0}, {"c", 1.0}};
    const std::vector<BenchmarkPair> bench{{"a", 5.0, 5.0}, {"b", 4.9, 5.2}, {"c", 0.0, 2.0}};
    const auto p = sensitivity_pairs(mu, bench);
    CHECK(p[0] == Vec2{0.0, 0.0});
    CHECK(p[1].x == doctest::Approx(0.1));
    CHECK(p[1].y == doctest::Approx(-0.2));

    const std::vector<BenchmarkPair> short_bench{{"a", 5, 5}, {"b", 5, 5}, {"d", 1, 1}};
    try {
        sensitivity_pairs(mu, short_bench);
        FAIL("mismatch not detected");
    } catch (const Error& e) {
        const std::string what = e.what();
        CHECK(what.find("d") != std::string::npos);
        CHECK(what.find("missing benchmarks for: c") != std::string::npos);
        CHECK(what.find("missing IPW means for: d") != std::string::npos);
    }

    svtest::Gen g(9);
    std::vector<GroupMean> means;
    std::vector<BenchmarkPair> b15;
    for (int j = 0; j < 15; ++j) {
        const std::string id = "g" + std::to_string(j);
        means.push_back({id, g.normal(10.0, 1.0)});
        b15.push_back({id, g.normal(10.0, 1.0), g.normal(10.0, 1.0)});
    }
    std::reverse(means.begin(), means.end());
    const auto rows = sensitivity_pairs(means, b15);
    for (int j = 0; j < 15; ++j) {
        const double mj = means[14 - j].mean;
        CHECK(rows[j].x == mj - b15[j].mu_source1);
        CHECK(rows[j].y == mj - b15[j].mu_source2);
    }
}

TEST_CASE("delta-method intervals at the null and for a census") {
    svtest::Gen g(10);
    const auto s = random_units(g, 500);
    const auto sum = outcome_summary(s);
    const auto ti = taylor_series_interval(s, sum, 0.0, 0.95);
    CHECK(ti.lower() == 1.0);
    CHECK(ti.singular_fallback());
    CHECK(ti.upper() > 1.0);

    std::vector<MissingDataSample> census;
    for (int i = 0; i < 50; ++i) census.emplace_back(g.normal(), true, 1.0);
    const OutcomeSummary cs(0.5, 1.0, 50);  // p_obs supplied, a census has no missing units
    CHECK(poisson_variance(census) == 0.0);
    const auto pi = poisson_sampling_interval(census, cs, 0.3, 0.95);
    CHECK(pi.lower() == pi.upper());
    CHECK(pi.lower() == doctest::Approx(evalue_from_rr(rr_from_effect(0.5 * 0.3))));
    const auto p0 = poisson_sampling_interval(census, cs, 0.0, 0.95);
    CHECK(p0.lower() == 1.0);
    CHECK(p0.upper() == 1.0);
}

TEST_CASE("delta-method derivative matches finite differences on both branches") {
    for (double rr : {1.01, 1.3, 2.0, 7.5}) {
        const double h = 1e-6 * rr;
        const double fd = (evalue_from_rr(rr + h) - evalue_from_rr(rr - h)) / (2 * h);
        CHECK(evalue_derivative(rr) == doctest::Approx(fd).epsilon(1e-6));
    }
    // Mirror: the interval for -delta equals the interval for +delta.
    const OutcomeSummary s(0.4, 1.2, 100);
    const auto a = delta_method_interval(0.2, 0.01, s, 0.9, IntervalMethod::TaylorSeries);
    const auto b = delta_method_interval(-0.2, 0.01, s, 0.9, IntervalMethod::TaylorSeries);
    CHECK(a.lower() == doctest::Approx(b.lower()).epsilon(1e-14));
    CHECK(a.upper() == doctest::Approx(b.upper()).epsilon(1e-14));
}

TEST_CASE("Taylor interval agrees with a nonparametric bootstrap") {
    StudyConfig cfg;
    cfg.master_seed = 2024;
    const auto units = generate_units(cfg, 0, 5000);
    const auto sum = outcome_summary(units);
    const double mu = ipw_mean(units);
    const double benchmark = mu - 1.0;  // delta_hat = 1
    const auto iv = taylor_series_interval(units, sum, mu - benchmark, 0.95);

    svtest::Gen g(77);
    std::vector<double> boot;
    std::vector<MissingDataSample> re;
    for (int b = 0; b < 1000; ++b) {
        re.clear();
        for (std::size_t i = 0; i < units.size(); ++i) re.push_back(units[g.index(units.size())]);
        boot.push_back(evalue_from_rr(rr_from_effect(standardized_effect(brute_ipw(re) - benchmark, sum))));
    }
    const double lo = svtest::quantile7(boot, 0.025);
    const double hi = svtest::quantile7(boot, 0.975);
    const double width = hi - lo;
    CHECK(std::abs(iv.width() - width) < 0.15 * width);
    CHECK(std::abs(iv.lower() - lo) < 0.15 * width);
    CHECK(std::abs(iv.upper() - hi) < 0.15 * width);
}

TEST_CASE("asymptotic widths shrink with sample size") {
    StudyConfig cfg;
    cfg.master_seed = 99;
    double w1t = 0, w9t = 0, w1p = 0, w9p = 0;
    for (std::size_t r = 0; r < 200; ++r) {
        const auto units = generate_units(cfg, r, 9 * cfg.n_units);
        const double delta_hat = 0.5 * [&] {
            const auto p = generate_pairs(cfg, r);
            double s = 0;
            for (const auto& row : p.rows()) s += row.sum();
            return s / static_cast<double>(p.m());
        }();
        const std::span<const MissingDataSample> one(units.data(), cfg.n_units);
        const std::span<const MissingDataSample> nine(units);
        const auto s1 = outcome_summary(one);
        const auto s9 = outcome_summary(nine);
        w1t += taylor_series_interval(one, s1, delta_hat, 0.95).width();
        w9t += taylor_series_interval(nine, s9, delta_hat, 0.95).width();
        w1p += poisson_sampling_interval(one, s1, delta_hat, 0.95).width();
        w9p += poisson_sampling_interval(nine, s9, delta_hat, 0.95).width();
    }
    CHECK(w9t < w1t);
    CHECK(w9p < w1p);
}

TEST_CASE("property: emitted intervals satisfy 1 <= lower <= upper") {
    svtest::Gen g(12);
    for (int i = 0; i < 2000; ++i) {
        const OutcomeSummary s(g.uniform(0.01, 0.99), g.log_uniform(1e-2, 1e2), 10);
        const double d = g.coin(0.1) ? 0.0 : g.normal(0.0, g.log_uniform(1e-4, 10.0));
        const double var = g.coin(0.1) ? 0.0 : g.log_uniform(1e-8, 1.0);
        const auto iv = delta_method_interval(d, var, s, g.uniform(0.5, 0.999),
                                              IntervalMethod::PoissonSampling);
        CHECK(iv.lower() >= 1.0);
        CHECK(iv.upper() >= iv.lower());
    }
}

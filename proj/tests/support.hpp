#pragma once

// Hand-rolled generators and independent numerical oracles for the tests.
// Nothing here calls the library's numerics.

#include "sensivalue/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

namespace svtest {

using sensivalue::SymMat2;
using sensivalue::Vec2;

class Gen {
public:
    explicit Gen(std::uint64_t seed) : eng_(seed) {}

    double uniform(double a = 0.0, double b = 1.0) {
        return a + (b - a) * std::uniform_real_distribution<double>(0.0, 1.0)(eng_);
    }
    double normal(double mu = 0.0, double sd = 1.0) {
        return std::normal_distribution<double>(mu, sd)(eng_);
    }
    double log_uniform(double a, double b) { return std::exp(uniform(std::log(a), std::log(b))); }
    std::size_t index(std::size_t n) {
        return std::uniform_int_distribution<std::size_t>(0, n - 1)(eng_);
    }
    bool coin(double p) { return uniform() < p; }

    std::vector<Vec2> rows(std::size_t m, double sd = 1.0, Vec2 centre = {}) {
        std::vector<Vec2> out(m);
        for (auto& r : out) r = {centre.x + normal(0.0, sd), centre.y + normal(0.0, sd)};
        return out;
    }

    SymMat2 spd(double scale = 1.0) {
        const double a = normal();
        const double b = normal();
        const double c = normal();
        // L L' + 0.1 I with L lower triangular.
        return {scale * (a * a + 0.1), scale * a * b, scale * (b * b + c * c + 0.1)};
    }

    std::mt19937_64& engine() { return eng_; }

private:
    std::mt19937_64 eng_;
};

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// Composite Simpson rule with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, std::size_t n) {
    if (n % 2) ++n;
    const double h = (b - a) / static_cast<double>(n);
    double s = f(a) + f(b);
    for (std::size_t i = 1; i < n; ++i) s += f(a + h * static_cast<double>(i)) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

/// Kolmogorov-Smirnov distance between a sample and a reference CDF.
inline double ks_distance(std::vector<double> x, const std::function<double(double)>& cdf) {
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double f = cdf(x[i]);
        d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
    }
    return d;
}

/// Sup distance between a reference CDF and the empirical CDF, evaluated at
/// the given points.
inline double sup_distance_at(std::vector<double> sample, const std::vector<double>& points,
                              const std::function<double(double)>& cdf) {
    std::sort(sample.begin(), sample.end());
    double d = 0.0;
    for (double v : points) {
        const auto k = std::upper_bound(sample.begin(), sample.end(), v) - sample.begin();
        d = std::max(d, std::abs(cdf(v) - static_cast<double>(k) / static_cast<double>(sample.size())));
    }
    return d;
}

/// R type 7 quantile of an unsorted sample.
inline double quantile7(std::vector<double> x, double p) {
    std::sort(x.begin(), x.end());
    const double h = p * static_cast<double>(x.size() - 1);
    const auto lo = static_cast<std::size_t>(h);
    const auto hi = std::min(lo + 1, x.size() - 1);
    return x[lo] + (h - static_cast<double>(lo)) * (x[hi] - x[lo]);
}

inline double mean(const std::vector<double>& x) {
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

inline double coeff_of_variation(const std::vector<double>& x) {
    const double mu = mean(x);
    double ss = 0.0;
    for (double v : x) ss += (v - mu) * (v - mu);
    return std::sqrt(ss / static_cast<double>(x.size() - 1)) / std::abs(mu);
}

// --- Normal-Inverse-Wishart oracles, written from the model definition ---

inline double det(const SymMat2& a) { return a.xx * a.yy - a.xy * a.xy; }

inline SymMat2 inv(const SymMat2& a) {
    const double d = det(a);
    return {a.yy / d, -a.xy / d, a.xx / d};
}

/// log of pi^{1/2} Gamma(a) Gamma(a - 1/2).
inline double lgamma2(double a) {
    return 0.5 * std::log(std::numbers::pi) + std::lgamma(a) + std::lgamma(a - 0.5);
}

/// tr(A B) for symmetric 2x2 A, B.
inline double tr(const SymMat2& a, const SymMat2& b) {
    return a.xx * b.xx + 2.0 * a.xy * b.xy + a.yy * b.yy;
}

/// log f(rows, delta, Sigma) for the NIW model: N2 likelihood, delta | Sigma ~
/// N(delta0, (1'Sigma^-1 1)^-1), Sigma ~ IW(psi, nu).
inline double log_joint(const std::vector<Vec2>& rows, double delta, const SymMat2& sigma,
                        double delta0, const SymMat2& psi, double nu) {
    const double m = static_cast<double>(rows.size());
    const SymMat2 p = inv(sigma);
    double quad = 0.0;
    for (const auto& r : rows) {
        const double a = r.x - delta;
        const double b = r.y - delta;
        quad += p.xx * a * a + 2.0 * p.xy * a * b + p.yy * b * b;
    }
    const double phi0 = 1.0 / (p.xx + 2.0 * p.xy + p.yy);
    const double log2pi = std::log(2.0 * std::numbers::pi);
    const double lik = -m * log2pi - 0.5 * m * std::log(det(sigma)) - 0.5 * quad;
    const double prior_delta = -0.5 * (log2pi + std::log(phi0)) -
                               (delta - delta0) * (delta - delta0) / (2.0 * phi0);
    const double prior_sigma = 0.5 * nu * std::log(det(psi)) - nu * std::log(2.0) - lgamma2(0.5 * nu) -
                               0.5 * (nu + 3.0) * std::log(det(sigma)) - 0.5 * tr(psi, p);
    return lik + prior_delta + prior_sigma;
}

/// log of the integral of exp(log_joint) over delta and the three free
/// entries of Sigma. Sigma = [[e^{2a}, r e^{a+b}], [., e^{2b}]], r = tanh(t).
/// Trapezoid rule on (a, b, t, delta); the integrand decays fast enough in
/// these coordinates for the rule to converge geometrically.
inline double log_marginal_by_quadrature(const std::vector<Vec2>& rows, double delta0,
                                         const SymMat2& psi, double nu, std::size_t n_sigma = 56,
                                         std::size_t n_delta = 48) {
    const double m = static_cast<double>(rows.size());
    double dbar = 0.0;
    for (const auto& r : rows) dbar += 0.5 * (r.x + r.y);
    dbar /= m;
    double sxx = 0.0, syy = 0.0;
    for (const auto& r : rows) {
        sxx += (r.x - dbar) * (r.x - dbar);
        syy += (r.y - dbar) * (r.y - dbar);
    }
    // Centre the log-scale grid near the posterior scale of each component.
    const double ca = 0.5 * std::log((psi.xx + sxx) / (nu + m));
    const double cb = 0.5 * std::log((psi.yy + syy) / (nu + m));
    const double half = 4.0;
    const double dt = 2.0 * half / static_cast<double>(n_sigma - 1);
    const double tmax = 4.5;
    const double dtt = 2.0 * tmax / static_cast<double>(n_sigma - 1);

    std::vector<double> logs;
    logs.reserve(n_sigma * n_sigma * n_sigma * n_delta);
    for (std::size_t i = 0; i < n_sigma; ++i) {
        const double a = ca - half + dt * static_cast<double>(i);
        for (std::size_t j = 0; j < n_sigma; ++j) {
            const double b = cb - half + dt * static_cast<double>(j);
            for (std::size_t k = 0; k < n_sigma; ++k) {
                const double t = -tmax + dtt * static_cast<double>(k);
                const double r = std::tanh(t);
                const SymMat2 sigma{std::exp(2 * a), r * std::exp(a + b), std::exp(2 * b)};
                // d(s11, s22, s12) = 4 e^{3(a+b)} (1 - r^2) da db dt
                const double log_jac = std::log(4.0) + 3.0 * (a + b) + std::log1p(-r * r);
                const SymMat2 p = inv(sigma);
                const double phi0 = 1.0 / (p.xx + 2.0 * p.xy + p.yy);
                const double sd = std::sqrt(phi0 / (m + 1.0));
                // Conditional mean of delta given Sigma, used only to place the grid.
                const double w1 = p.xx + p.xy;
                const double w2 = p.xy + p.yy;
                double lin = delta0 / phi0;
                for (const auto& row : rows) lin += w1 * row.x + w2 * row.y;
                const double centre = lin * phi0 / (m + 1.0);
                const double dd = 24.0 * sd / static_cast<double>(n_delta - 1);
                for (std::size_t l = 0; l < n_delta; ++l) {
                    const double delta = centre - 12.0 * sd + dd * static_cast<double>(l);
                    logs.push_back(log_joint(rows, delta, sigma, delta0, psi, nu) + log_jac +
                                   std::log(dd));
                }
            }
        }
    }
    const double top = *std::max_element(logs.begin(), logs.end());
    double s = 0.0;
    for (double v : logs) s += std::exp(v - top);
    return top + std::log(s) + 2.0 * std::log(dt) + std::log(dtt);
}

}  // namespace svtest

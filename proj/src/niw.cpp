#include "sensivalue/niw.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

namespace sensivalue {

namespace {

constexpr double kLogPi = 1.1447298858494002;   // log(pi)
constexpr double kLog2Pi = 1.8378770664093453;  // log(2 pi)
constexpr double kInvPhi = 0.6180339887498949;  // 1/golden ratio

// Squared Mahalanobis distance of dbar from the line t*1 expressed through
// u = 1'S^-1 dbar, z = 1'S^-1 1, w = dbar'S^-1 dbar.
struct LineForm {
    double u, z, w;
};

LineForm line_form(const ScatterStats& stats) {
    const SymMat2 s_inv = stats.scatter.inverse();
    return {s_inv.bilinear(kOnes, stats.delta_bar), s_inv.quad(kOnes), s_inv.quad(stats.delta_bar)};
}

SymMat2 centring_term(double delta0, const ScatterStats& stats) {
    const double m = static_cast<double>(stats.m);
    const Vec2 d = stats.delta_bar - delta0 * kOnes;
    return (m / (m + 1.0)) * SymMat2::outer(d);
}

// Objective given a full parameter set; Psi must be SPD.
double objective_from(const SymMat2& psi, double nu, const SymMat2& psi_tilde, std::size_t m_count) {
    const double m = static_cast<double>(m_count);
    const double nu_tilde = nu + m;
    return m * kLogPi + 0.5 * std::log(m + 1.0) - 0.5 * nu * log_det_spd(psi) +
           0.5 * nu_tilde * log_det_spd(psi_tilde) + log_gamma2(0.5 * nu) -
           log_gamma2(0.5 * nu_tilde);
}

template <class F>
double golden_section_min(F&& f, double a, double b, double tol, std::size_t max_iter,
                          double& fmin, const char* what, double other) {
    if (!(b > a)) {
        fmin = f(a);
        return a;
    }
    double c = b - kInvPhi * (b - a);
    double d = a + kInvPhi * (b - a);
    double fc = f(c);
    double fd = f(d);
    std::size_t iter = 0;
    while (b - a > tol) {
        if (++iter > max_iter) throw FitError(std::string(what) + ": golden-section search did not converge", c, other);
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - kInvPhi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + kInvPhi * (b - a);
            fd = f(d);
        }
    }
    // Endpoints are legitimate minimisers when the objective is monotone on [a, b].
    const double mid = 0.5 * (a + b);
    double best = mid;
    fmin = f(mid);
    for (double x : {a, b}) {
        const double fx = f(x);
        if (fx < fmin) {
            fmin = fx;
            best = x;
        }
    }
    return best;
}

}  // namespace

ScatterStats scatter_stats_unchecked(std::span<const Vec2> rows) {
    ScatterStats st;
    st.m = rows.size();
    if (rows.empty()) return st;
    Vec2 sum{};
    for (const auto& r : rows) sum = sum + r;
    st.delta_bar = (1.0 / static_cast<double>(rows.size())) * sum;
    for (const auto& r : rows) st.scatter = st.scatter + SymMat2::outer(r - st.delta_bar);
    return st;
}

ScatterStats scatter_stats(const SensitivityPairs& pairs) {
    ScatterStats st = scatter_stats_unchecked(pairs.rows());
    if (!(st.scatter.det() >= kDeterminantFloor) || !st.scatter.positive_definite()) {
        throw Error("degenerate scatter");
    }
    return st;
}

ConjugateUpdate conjugate_update(const NiwHyperparams& hyper, const ScatterStats& stats) {
    if (stats.m == 0) throw Error("conjugate update needs at least one row");
    const double m = static_cast<double>(stats.m);
    ConjugateUpdate up;
    up.m = stats.m;
    up.delta_bar = stats.delta_bar;
    up.s_matrix = stats.scatter;
    up.delta_tilde = (hyper.delta0() + 0.5 * m * stats.delta_bar.sum()) / (m + 1.0);
    up.psi_tilde = hyper.psi() + stats.scatter + centring_term(hyper.delta0(), stats);
    up.nu_tilde = hyper.nu() + m;
    if (!up.psi_tilde.positive_definite()) throw Error("posterior scale matrix is not positive definite");
    return up;
}

ConjugateUpdate conjugate_update(const NiwHyperparams& hyper, const SensitivityPairs& pairs) {
    return conjugate_update(hyper, scatter_stats_unchecked(pairs.rows()));
}

double log_gamma2(double a) {
    if (!(a > 0.5)) throw Error("log_gamma2: argument must exceed 1/2");
    return 0.5 * kLogPi + std::lgamma(a) + std::lgamma(a - 0.5);
}

double neg_log_marginal(const NiwHyperparams& hyper, const ScatterStats& stats) {
    const SymMat2 psi_tilde = hyper.psi() + stats.scatter + centring_term(hyper.delta0(), stats);
    if (!psi_tilde.positive_definite()) throw Error("posterior scale matrix is not positive definite");
    return objective_from(hyper.psi(), hyper.nu(), psi_tilde, stats.m);
}

double neg_log_marginal(const NiwHyperparams& hyper, const SensitivityPairs& pairs) {
    return neg_log_marginal(hyper, scatter_stats_unchecked(pairs.rows()));
}

double log_inverse_wishart_density(const SymMat2& sigma, const SymMat2& psi, double nu) {
    const SymMat2 prec = sigma.inverse();
    return 0.5 * nu * log_det_spd(psi) - nu * std::numbers::ln2 - log_gamma2(0.5 * nu) -
           0.5 * (nu + 3.0) * log_det_spd(sigma) - 0.5 * psi.trace_product(prec);
}

double log_joint_density(const NiwHyperparams& hyper, std::span<const Vec2> rows, double delta,
                         const SymMat2& sigma) {
    const double m = static_cast<double>(rows.size());
    const SymMat2 prec = sigma.inverse();
    SymMat2 s0;
    for (const auto& r : rows) s0 = s0 + SymMat2::outer(r - delta * kOnes);
    const double phi0 = 1.0 / prec.quad(kOnes);
    const double dd = delta - hyper.delta0();
    return -m * kLog2Pi - 0.5 * m * log_det_spd(sigma) - 0.5 * s0.trace_product(prec) -
           0.5 * (kLog2Pi + std::log(phi0)) - dd * dd / (2.0 * phi0) +
           log_inverse_wishart_density(sigma, hyper.psi(), hyper.nu());
}

double log_posterior_niw_density(const ConjugateUpdate& update, double delta, const SymMat2& sigma) {
    const SymMat2 prec = sigma.inverse();
    const double phi = 1.0 / (prec.quad(kOnes) * (static_cast<double>(update.m) + 1.0));
    const double dd = delta - update.delta_tilde;
    return -0.5 * (kLog2Pi + std::log(phi)) - dd * dd / (2.0 * phi) +
           log_inverse_wishart_density(sigma, update.psi_tilde, update.nu_tilde);
}

SymMat2 psi_star(double delta0, double nu, const ScatterStats& stats) {
    const double m = static_cast<double>(stats.m);
    return (nu / m) * (stats.scatter + centring_term(delta0, stats));
}

SymMat2 psi_star(double delta0, double nu, const SensitivityPairs& pairs) {
    return psi_star(delta0, nu, scatter_stats(pairs));
}

double profiled_objective(double delta0, double nu, const ScatterStats& stats) {
    const SymMat2 b = stats.scatter + centring_term(delta0, stats);
    const double m = static_cast<double>(stats.m);
    const SymMat2 psi = (nu / m) * b;
    return objective_from(psi, nu, psi + b, stats.m);
}

double mahalanobis_to_line(double delta0, const ScatterStats& stats) {
    return stats.scatter.inverse().quad(stats.delta_bar - delta0 * kOnes);
}

Interval1D convexity_interval(const ScatterStats& stats) {
    const double m = static_cast<double>(stats.m);
    const double bound = (m + 1.0) / m;
    const LineForm lf = line_form(stats);
    const double disc = lf.u * lf.u - lf.z * (lf.w - bound);
    if (disc < 0.0) {
        const double centre = lf.u / lf.z;
        return {centre, centre, true};
    }
    const double half = std::sqrt(disc) / lf.z;
    const double centre = lf.u / lf.z;
    return {centre - half, centre + half, false};
}

double nu_profile(double nu, std::size_t m) {
    const double md = static_cast<double>(m);
    return nu * std::log((md + nu) / nu) + md * std::log((md + nu) / md) + log_gamma2(0.5 * nu) -
           log_gamma2(0.5 * (nu + md));
}

namespace {

double knee_curvature(double nu, std::size_t m) {
    const double h = 1e-3 * nu;
    const double f0 = nu_profile(nu, m);
    const double fp = nu_profile(nu + h, m);
    const double fm = nu_profile(nu - h, m);
    const double d1 = (fp - fm) / (2.0 * h);
    const double d2 = (fp - 2.0 * f0 + fm) / (h * h);
    return d2 / std::pow(1.0 + d1 * d1, 1.5);
}

}  // namespace

double select_nu(std::size_t m, const FitConfig& config) {
    const double lo = config.nu_grid_min;
    const double hi = config.nu_grid_max_per_group * static_cast<double>(m);
    const std::size_t n = std::max<std::size_t>(config.nu_grid_points, 5);
    if (!(lo > 1.0) || !(hi > lo)) throw Error("invalid nu grid bounds");

    std::vector<double> nus(n), f(n);
    const double step = std::log(hi / lo) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        nus[i] = lo * std::exp(step * static_cast<double>(i));
        f[i] = nu_profile(nus[i], m);
    }

    std::size_t best = 1;
    double best_kappa = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double h1 = nus[i] - nus[i - 1];
        const double h2 = nus[i + 1] - nus[i];
        const double d1 = (f[i + 1] - f[i - 1]) / (h1 + h2);
        const double d2 = 2.0 * ((f[i + 1] - f[i]) / h2 - (f[i] - f[i - 1]) / h1) / (h1 + h2);
        const double kappa = d2 / std::pow(1.0 + d1 * d1, 1.5);
        if (kappa > best_kappa) {
            best_kappa = kappa;
            best = i;
        }
    }

    // Refinement stays strictly inside the grid so the curvature stencil is valid.
    const double a = nus[best - 1];
    const double b = nus[best + 1];
    double neg_kappa = 0.0;
    return golden_section_min([&](double nu) { return -knee_curvature(nu, m); }, a, b,
                              config.nu_tolerance * b, config.max_iterations, neg_kappa,
                              "nu knee", std::numeric_limits<double>::quiet_NaN());
}

bool psi_convexity_check(double delta0, const SymMat2& psi, double nu, const ScatterStats& stats) {
    const SymMat2 b = stats.scatter + centring_term(delta0, stats);
    const double scale = 0.5 * psi.trace();
    const SymMat2 directions[] = {scale * SymMat2::identity(), scale * SymMat2{1.0, 0.0, 0.0},
                                  scale * SymMat2{0.0, 0.0, 1.0}, psi,
                                  scale * SymMat2{1.0, 0.5, 1.0}, scale * SymMat2{1.0, -0.5, 1.0}};
    const double h = 1e-3;
    auto g = [&](const SymMat2& p) { return objective_from(p, nu, p + b, stats.m); };
    const double g0 = g(psi);
    for (const auto& v : directions) {
        const SymMat2 plus = psi + h * v;
        const SymMat2 minus = psi - h * v;
        if (!minus.positive_definite() || !plus.positive_definite()) continue;
        const double d2 = (g(plus) - 2.0 * g0 + g(minus)) / (h * h);
        if (d2 < -1e-8 * (1.0 + std::abs(g0)) / (h * h)) return false;
    }
    return true;
}

FitResult fit_hyperparams(const SensitivityPairs& pairs, const FitConfig& config) {
    const ScatterStats stats = scatter_stats(pairs);
    const Interval1D feasible = convexity_interval(stats);

    double delta0 = 0.5 * stats.delta_bar.sum();
    double nu = config.nu_grid_min;
    double objective = std::numeric_limits<double>::infinity();
    std::size_t outer = 0;

    const double width = feasible.hi - feasible.lo;
    const double tol = config.delta0_tolerance * std::max(width, 1e-300);

    for (outer = 1; outer <= config.max_outer_iterations; ++outer) {
        nu = select_nu(stats.m, config);
        double value = 0.0;
        if (feasible.empty) {
            delta0 = feasible.lo;
            value = profiled_objective(delta0, nu, stats);
        } else {
            delta0 = golden_section_min([&](double d0) { return profiled_objective(d0, nu, stats); },
                                        feasible.lo, feasible.hi, tol, config.max_iterations, value,
                                        "delta0", nu);
        }
        const bool converged = std::abs(objective - value) < config.objective_tolerance;
        objective = value;
        if (converged) break;
    }
    if (outer > config.max_outer_iterations) {
        throw FitError("hyperparameter alternation did not converge", delta0, nu);
    }

    const SymMat2 psi = psi_star(delta0, nu, stats);
    FitResult result{NiwHyperparams(delta0, psi, nu), 0.0};
    result.objective = neg_log_marginal(result.hyper, stats);
    result.psi_convex_at_nu = psi_convexity_check(delta0, psi, nu, stats);
    result.convexity_region_empty = feasible.empty;
    result.delta0_on_boundary =
        !feasible.empty && (delta0 - feasible.lo <= 2.0 * tol || feasible.hi - delta0 <= 2.0 * tol);
    result.outer_iterations = std::min(outer, config.max_outer_iterations);
    return result;
}

}  // namespace sensivalue

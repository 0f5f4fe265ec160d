#include "sensivalue/density.hpp"

#include "sensivalue/evalue.hpp"

#include <boost/math/distributions/gamma.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <sstream>
#include <vector>

namespace sensivalue {

namespace {

constexpr double kTailMass = 1e-12;
constexpr double kQuadTolerance = 1e-11;      // relative, per panel
constexpr double kQuadAbsTolerance = 1e-16;   // absolute, per panel
constexpr unsigned kQuadMaxDepth = 24;

void require(bool condition, const char* message) {
    if (!condition) throw Error(message);
}

double cv(double sd, double mean) { return std::abs(sd / mean); }

boost::math::gamma_distribution<double> log_rr_gamma(const EvalueDensityParams& p) {
    return boost::math::gamma_distribution<double>(p.alpha(), 1.0 / p.rate());
}

// Density of ln RR at x.
double log_rr_pdf(const EvalueDensityParams& p, double x) {
    if (p.is_gamma()) {
        if (!(x > 0.0)) return 0.0;
        const double a = p.alpha();
        const double b = p.rate();
        return std::exp(a * std::log(b) - std::lgamma(a) + (a - 1.0) * std::log(x) - b * x);
    }
    const double z = (x - p.mu_rr()) / p.sigma_rr();
    return std::exp(-0.5 * z * z) / (std::sqrt(2.0 * std::numbers::pi) * p.sigma_rr());
}

// |ln RR| values after which each branch is negligible.
double log_rr_upper(const EvalueDensityParams& p) {
    if (p.is_gamma()) {
        return boost::math::quantile(boost::math::complement(log_rr_gamma(p), kTailMass));
    }
    const boost::math::normal_distribution<double> n01;
    const double z = boost::math::quantile(boost::math::complement(n01, kTailMass));
    return std::abs(p.mu_rr()) + z * p.sigma_rr();
}

// Panel boundaries in |ln RR| for one branch, strictly inside (0, upper).
std::vector<double> log_rr_breaks(const EvalueDensityParams& p, Branch branch, double upper) {
    std::vector<double> pts;
    if (p.is_gamma()) {
        const auto g = log_rr_gamma(p);
        for (double q : {1e-9, 1e-4, 0.01, 0.1, 0.3, 0.5, 0.7, 0.9, 0.99, 1 - 1e-4, 1 - 1e-9}) {
            pts.push_back(boost::math::quantile(g, q));
        }
    } else {
        const double centre = branch == Branch::RRgt1 ? p.mu_rr() : -p.mu_rr();
        for (int k = -12; k <= 12; ++k) pts.push_back(centre + k * 0.5 * p.sigma_rr());
    }
    std::erase_if(pts, [upper](double x) { return !(x > 0.0 && x < upper); });
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts;
}

using Gk31 = boost::math::quadrature::gauss_kronrod<double, 31>;

template <class F>
double gk31(F& f, double a, double b) {
    return Gk31::integrate(f, a, b, 0, 0.0);
}

// Bisection on the difference between a panel's 31-point rule and the sum of
// its halves. Boost's own recursion compares against the embedded Gauss rule,
// whose estimate saturates at the integrand's rounding noise and then refines
// to full depth.
template <class F>
double adaptive_gk(F& f, double a, double b, double whole, unsigned depth) {
    const double mid = 0.5 * (a + b);
    const double left = gk31(f, a, mid);
    const double right = gk31(f, mid, b);
    const double refined = left + right;
    if (depth == 0 || !(mid > a && mid < b) ||
        std::abs(refined - whole) <= std::max(kQuadTolerance * std::abs(refined), kQuadAbsTolerance)) {
        return refined;
    }
    return adaptive_gk(f, a, mid, left, depth - 1) + adaptive_gk(f, mid, b, right, depth - 1);
}

}  // namespace

EvalueDensityParams params_thm1(double eta, double tau, double p_obs, double sd_y) {
    require(std::isfinite(eta), "eta must be finite");
    require(tau > 0.0 && std::isfinite(tau), "tau must be positive");
    require(p_obs > 0.0 && p_obs < 1.0, "observed fraction must lie in (0, 1)");
    require(sd_y > 0.0 && std::isfinite(sd_y), "sd_y must be positive");
    const double c = kRiskRatioSlope * (1.0 - p_obs) / sd_y;
    return EvalueDensityParams::log_normal(DensityVariant::Thm1, c * eta, c * tau);
}

EvalueDensityParams params_thm2(double eta, double tau, double mu_q, double sigma_q, double sd_y) {
    require(eta != 0.0 && mu_q != 0.0, "Thm2 requires nonzero eta and mu_q");
    require(std::isfinite(eta) && std::isfinite(mu_q), "eta and mu_q must be finite");
    require(tau >= 0.0 && sigma_q >= 0.0, "tau and sigma_q must be non-negative");
    require(sd_y > 0.0 && std::isfinite(sd_y), "sd_y must be positive");
    const double var = mu_q * mu_q * tau * tau + eta * eta * sigma_q * sigma_q +
                       sigma_q * sigma_q * tau * tau;
    const bool warn = cv(sigma_q, mu_q) > kValidityThreshold || cv(tau, eta) > kValidityThreshold;
    return EvalueDensityParams::log_normal(DensityVariant::Thm2,
                                           kRiskRatioSlope * mu_q * eta / sd_y,
                                           kRiskRatioSlope * std::sqrt(var) / sd_y, warn);
}

EvalueDensityParams params_thm3(double eta, double tau, double mu_q, double sigma_q, double alpha,
                                double beta, Thm3Rate rate) {
    require(eta > 0.0 && std::isfinite(eta), "Thm3 requires positive effect direction");
    require(mu_q > 0.0 && std::isfinite(mu_q), "mu_q must be positive");
    require(tau >= 0.0 && sigma_q >= 0.0, "tau and sigma_q must be non-negative");
    require(alpha > 0.0 && beta > 0.0, "alpha and beta must be positive");
    const double spread = std::sqrt(mu_q * mu_q * tau * tau + eta * eta * sigma_q * sigma_q +
                                    sigma_q * sigma_q * tau * tau);
    const bool warn = cv(sigma_q, mu_q) > kValidityThreshold ||
                      cv(tau, eta) > kValidityThreshold ||
                      spread / (mu_q * eta) > kValidityThreshold;
    const double r = rate == Thm3Rate::Derived ? beta / (kRiskRatioSlope * mu_q * eta)
                                               : mu_q * eta / (kRiskRatioSlope * beta);
    return EvalueDensityParams::gamma(alpha, r, warn);
}

double log_rr_of_evalue(double v) {
    require(v > 1.0, "E-value density is defined for v > 1");
    return log_rr_from_evalue(v);
}

double log_rr_jacobian(double v) {
    require(v > 1.0, "E-value density is defined for v > 1");
    return 2.0 * (v - 1.0) / (v * (2.0 * v - 1.0));
}

double density(const EvalueDensityParams& params, double v, Branch branch) {
    require(v > 1.0, "E-value density is defined for v > 1");
    if (!std::isfinite(v)) return 0.0;
    const double g = log_rr_of_evalue(v);
    const double x = branch == Branch::RRgt1 ? g : -g;
    return log_rr_pdf(params, x) * log_rr_jacobian(v);
}

double density(const EvalueDensityParams& params, double v) {
    return density(params, v, Branch::RRgt1) + density(params, v, Branch::RRlt1);
}

double branch_mass(const EvalueDensityParams& params, Branch branch) {
    if (params.is_gamma()) return branch == Branch::RRgt1 ? 1.0 : 0.0;
    const boost::math::normal_distribution<double> n01;
    const double r = params.mu_rr() / params.sigma_rr();
    return branch == Branch::RRgt1 ? boost::math::cdf(n01, r)
                                   : boost::math::cdf(boost::math::complement(n01, r));
}

double upper_support(const EvalueDensityParams& params) {
    const double v = evalue_from_log_rr(log_rr_upper(params));
    if (!std::isfinite(v)) throw Error("E-value support overflows double precision");
    return v;
}

double integrate_density(const EvalueDensityParams& params, Branch branch, double a, double b) {
    require(a >= 1.0 && b >= a, "integration bounds must satisfy 1 <= a <= b");
    if (params.is_gamma() && branch == Branch::RRlt1) return 0.0;
    const double upper = log_rr_upper(params);
    std::vector<double> knots{a};
    for (double x : log_rr_breaks(params, branch, upper)) {
        const double v = evalue_from_log_rr(x);
        if (v > a && v < b) knots.push_back(v);
    }
    knots.push_back(b);
    auto f = [&](double v) { return v > 1.0 ? density(params, v, branch) : 0.0; };
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
        const double lo = knots[i];
        const double hi = knots[i + 1];
        if (!(hi > lo)) continue;
        if (lo == 1.0 && params.is_gamma() && params.alpha() < 1.0) {
            // Integrable endpoint singularity at v = 1.
            boost::math::quadrature::tanh_sinh<double> ts;
            total += ts.integrate(f, lo, hi, kQuadTolerance);
        } else {
            total += adaptive_gk(f, lo, hi, gk31(f, lo, hi), kQuadMaxDepth);
        }
    }
    return total;
}

double total_mass(const EvalueDensityParams& params) {
    const double vmax = upper_support(params);
    return integrate_density(params, Branch::RRgt1, 1.0, vmax) +
           integrate_density(params, Branch::RRlt1, 1.0, vmax);
}

double cdf(const EvalueDensityParams& params, double v) {
    if (std::isnan(v)) throw Error("cdf argument is NaN");
    if (v <= 1.0) return 0.0;
    // Beyond the support the remaining mass is below the tail cutoff.
    const double b = std::min(v, evalue_from_log_rr(log_rr_upper(params)));
    const double c = integrate_density(params, Branch::RRgt1, 1.0, b) +
                     integrate_density(params, Branch::RRlt1, 1.0, b);
    return std::clamp(c, 0.0, 1.0);
}

double quantile(const EvalueDensityParams& params, double prob) {
    require(prob > 0.0 && prob < 1.0, "quantile probability must lie in (0, 1)");
    const double hi = upper_support(params);
    auto f = [&](double v) { return cdf(params, v) - prob; };
    std::uintmax_t iters = 200;
    const auto tol = boost::math::tools::eps_tolerance<double>(48);
    const double flo = -prob;
    const double fhi = f(hi);
    if (!(fhi >= 0.0)) {
        std::ostringstream msg;
        msg << "quantile bracket [1, " << hi << "] does not contain p = " << prob;
        throw Error(msg.str());
    }
    const auto root = boost::math::tools::toms748_solve(f, 1.0, hi, flo, fhi, tol, iters);
    if (iters >= 200) {
        std::ostringstream msg;
        msg << "quantile root finding did not converge; bracket [" << root.first << ", "
            << root.second << "]";
        throw Error(msg.str());
    }
    return 0.5 * (root.first + root.second);
}

}  // namespace sensivalue

#include "sensivalue/types.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <limits>
#include <numbers>

namespace sensivalue {

namespace {

void require(bool condition, const std::string& message) {
    if (!condition) throw Error(message);
}

}  // namespace

SymMat2 SymMat2::inverse() const {
    const double d = det();
    if (!(std::abs(d) >= kDeterminantFloor)) {
        throw Error("singular matrix: |det| below floor");
    }
    return {yy / d, -xy / d, xx / d};
}

double log_det_spd(const SymMat2& m) {
    if (!m.positive_definite()) throw Error("matrix is not positive definite");
    return std::log(m.det());
}

MissingDataSample::MissingDataSample(double y, bool observed, double propensity)
    : y_(y), observed_(observed), propensity_(propensity) {
    require(propensity > 0.0 && propensity <= 1.0, "propensity must lie in (0, 1]");
    require(!observed || std::isfinite(y), "observed outcome must be finite");
}

SensitivityPairs::SensitivityPairs(std::vector<Vec2> rows) : rows_(std::move(rows)) {
    require(rows_.size() >= kMinGroups, "sensitivity pairs need m >= 3 groups");
    for (const auto& r : rows_) require(r.finite(), "sensitivity pair rows must be finite");
}

NiwHyperparams::NiwHyperparams(double delta0, SymMat2 psi, double nu)
    : delta0_(delta0), psi_(psi), nu_(nu) {
    require(std::isfinite(delta0), "delta0 must be finite");
    require(psi.finite() && psi.positive_definite(), "psi must be symmetric positive definite");
    require(nu > 1.0 && std::isfinite(nu), "nu must exceed p - 1 = 1");
}

GeneralizedT::GeneralizedT(double location, double scale, double df)
    : location_(location), scale_(scale), df_(df) {
    require(std::isfinite(location), "location must be finite");
    require(scale > 0.0 && std::isfinite(scale), "scale must be positive");
    require(df > 0.0 && std::isfinite(df), "degrees of freedom must be positive");
}

double GeneralizedT::log_pdf(double x) const {
    const double t = (x - location_) / scale_;
    const double nu = df_;
    return std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) -
           0.5 * std::log(nu * std::numbers::pi) - std::log(scale_) -
           0.5 * (nu + 1.0) * std::log1p(t * t / nu);
}

double GeneralizedT::cdf(double x) const {
    const boost::math::students_t_distribution<double> t(df_);
    return boost::math::cdf(t, (x - location_) / scale_);
}

double GeneralizedT::quantile(double p) const {
    require(p > 0.0 && p < 1.0, "quantile probability must lie in (0, 1)");
    const boost::math::students_t_distribution<double> t(df_);
    return location_ + scale_ * boost::math::quantile(t, p);
}

OutcomeSummary::OutcomeSummary(double p_obs, double sd_y, std::size_t n)
    : p_obs_(p_obs), sd_y_(sd_y), n_(n) {
    require(sd_y > 0.0 && std::isfinite(sd_y), "degenerate outcome variance");
    require(p_obs > 0.0 && p_obs < 1.0, "observed fraction must lie in (0, 1)");
}

std::string method_tag(IntervalMethod method) {
    switch (method) {
        case IntervalMethod::TaylorSeries: return "taylor";
        case IntervalMethod::PoissonSampling: return "poisson";
        case IntervalMethod::SubjectiveBayes: return "subjective";
        case IntervalMethod::ObjectiveBayes: return "objective";
    }
    return "unknown";
}

IntervalMethod method_from_tag(const std::string& tag) {
    for (auto m : kAllMethods) {
        if (method_tag(m) == tag) return m;
    }
    throw Error("unknown interval method '" + tag + "'");
}

EvalueInterval::EvalueInterval(double lower, double upper, IntervalMethod method, double level,
                               bool singular_fallback)
    : lower_(lower), upper_(upper), method_(method), level_(level),
      singular_fallback_(singular_fallback) {
    require(lower >= 1.0, "interval lower bound must be >= 1");
    require(upper >= lower, "interval upper bound must be >= lower bound");
    require(level > 0.0 && level < 1.0, "interval level must lie in (0, 1)");
}

std::string variant_tag(DensityVariant variant) {
    switch (variant) {
        case DensityVariant::Thm1: return "thm1";
        case DensityVariant::Thm2: return "thm2";
        case DensityVariant::Thm3: return "thm3";
    }
    return "unknown";
}

DensityVariant variant_from_tag(const std::string& tag) {
    for (auto v : {DensityVariant::Thm1, DensityVariant::Thm2, DensityVariant::Thm3}) {
        if (variant_tag(v) == tag) return v;
    }
    throw Error("unknown density variant '" + tag + "'");
}

EvalueDensityParams EvalueDensityParams::log_normal(DensityVariant variant, double mu_rr,
                                                    double sigma_rr, bool validity_warning) {
    require(variant != DensityVariant::Thm3, "Thm3 parameters are gamma, not log-normal");
    require(std::isfinite(mu_rr), "mu_rr must be finite");
    require(sigma_rr > 0.0 && std::isfinite(sigma_rr), "sigma_rr must be positive");
    return {variant, mu_rr, sigma_rr, validity_warning};
}

EvalueDensityParams EvalueDensityParams::gamma(double alpha, double rate, bool validity_warning) {
    require(alpha > 0.0 && std::isfinite(alpha), "alpha must be positive");
    require(rate > 0.0 && std::isfinite(rate), "beta_v must be positive");
    return {DensityVariant::Thm3, alpha, rate, validity_warning};
}

double EvalueDensityParams::mu_rr() const {
    require(!is_gamma(), "mu_rr is undefined for Thm3");
    return a_;
}

double EvalueDensityParams::sigma_rr() const {
    require(!is_gamma(), "sigma_rr is undefined for Thm3");
    return b_;
}

double EvalueDensityParams::alpha() const {
    require(is_gamma(), "alpha is only defined for Thm3");
    return a_;
}

double EvalueDensityParams::rate() const {
    require(is_gamma(), "beta_v is only defined for Thm3");
    return b_;
}

}  // namespace sensivalue

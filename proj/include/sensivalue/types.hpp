#pragma once

// Shared domain types for E-value sensitivity analysis of missing outcomes.
//
// The benchmark dimension is fixed at two sources, so vectors and matrices
// are stored as explicit 2-vectors and symmetric 2x2 matrices. Every type
// validates its invariants on construction and is immutable afterwards.

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sensivalue {

/// Base error for invariant and data violations. Carries a human readable
/// message naming the violated condition.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Determinants below this value are treated as singular.
inline constexpr double kDeterminantFloor = 1e-300;

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    double sum() const { return x + y; }
    double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    bool finite() const { return std::isfinite(x) && std::isfinite(y); }

    friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
    friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
    friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
    friend bool operator==(const Vec2&, const Vec2&) = default;
};

/// The vector of ones.
inline constexpr Vec2 kOnes{1.0, 1.0};

/// Symmetric 2x2 matrix [[xx, xy], [xy, yy]].
struct SymMat2 {
    double xx = 0.0;
    double xy = 0.0;
    double yy = 0.0;

    static SymMat2 identity() { return {1.0, 0.0, 1.0}; }
    static SymMat2 outer(Vec2 v) { return {v.x * v.x, v.x * v.y, v.y * v.y}; }

    double det() const { return xx * yy - xy * xy; }
    double trace() const { return xx + yy; }
    bool finite() const { return std::isfinite(xx) && std::isfinite(xy) && std::isfinite(yy); }

    /// Both eigenvalues strictly positive.
    bool positive_definite() const { return xx > 0.0 && det() > 0.0; }

    /// Closed-form inverse; throws when |det| is below kDeterminantFloor.
    SymMat2 inverse() const;

    Vec2 operator*(Vec2 v) const { return {xx * v.x + xy * v.y, xy * v.x + yy * v.y}; }

    /// v' M v
    double quad(Vec2 v) const { return xx * v.x * v.x + 2.0 * xy * v.x * v.y + yy * v.y * v.y; }

    /// a' M b
    double bilinear(Vec2 a, Vec2 b) const { return a.dot((*this) * b); }

    /// tr(M N) for symmetric M, N.
    double trace_product(const SymMat2& n) const { return xx * n.xx + 2.0 * xy * n.xy + yy * n.yy; }

    friend SymMat2 operator+(SymMat2 a, SymMat2 b) { return {a.xx + b.xx, a.xy + b.xy, a.yy + b.yy}; }
    friend SymMat2 operator-(SymMat2 a, SymMat2 b) { return {a.xx - b.xx, a.xy - b.xy, a.yy - b.yy}; }
    friend SymMat2 operator*(double s, SymMat2 a) { return {s * a.xx, s * a.xy, s * a.yy}; }
    friend bool operator==(const SymMat2&, const SymMat2&) = default;
};

/// log|M| for an SPD matrix; throws if M is not positive definite.
double log_det_spd(const SymMat2& m);

// ---------------------------------------------------------------------------

/// One unit of the IPW input: outcome, observation flag and propensity of
/// being observed. The outcome of an unobserved unit is carried but never read.
class MissingDataSample {
public:
    MissingDataSample(double y, bool observed, double propensity);

    double y() const { return y_; }
    bool observed() const { return observed_; }
    double propensity() const { return propensity_; }

    friend bool operator==(const MissingDataSample&, const MissingDataSample&) = default;

private:
    double y_;
    bool observed_;
    double propensity_;
};

/// The m two-source sensitivity-parameter estimates, one row per group.
class SensitivityPairs {
public:
    static constexpr std::size_t kMinGroups = 3;

    explicit SensitivityPairs(std::vector<Vec2> rows);

    std::span<const Vec2> rows() const& { return rows_; }
    std::span<const Vec2> rows() && = delete;
    std::size_t m() const { return rows_.size(); }
    const Vec2& operator[](std::size_t j) const { return rows_[j]; }

    friend bool operator==(const SensitivityPairs&, const SensitivityPairs&) = default;

private:
    std::vector<Vec2> rows_;
};

/// Normal-Inverse-Wishart prior hyperparameters (delta0, Psi, nu).
class NiwHyperparams {
public:
    NiwHyperparams(double delta0, SymMat2 psi, double nu);

    double delta0() const { return delta0_; }
    const SymMat2& psi() const { return psi_; }
    double nu() const { return nu_; }

    friend bool operator==(const NiwHyperparams&, const NiwHyperparams&) = default;

private:
    double delta0_;
    SymMat2 psi_;
    double nu_;
};

/// Location-scale Student-t distribution.
class GeneralizedT {
public:
    GeneralizedT(double location, double scale, double df);

    double location() const { return location_; }
    double scale() const { return scale_; }
    double df() const { return df_; }

    double log_pdf(double x) const;
    double pdf(double x) const { return std::exp(log_pdf(x)); }
    double cdf(double x) const;
    double quantile(double p) const;

    friend bool operator==(const GeneralizedT&, const GeneralizedT&) = default;

private:
    double location_;
    double scale_;
    double df_;
};

/// Observed fraction p = P(R=1), outcome standard deviation and sample count.
class OutcomeSummary {
public:
    OutcomeSummary(double p_obs, double sd_y, std::size_t n);

    double p_obs() const { return p_obs_; }
    double sd_y() const { return sd_y_; }
    std::size_t n() const { return n_; }

    friend bool operator==(const OutcomeSummary&, const OutcomeSummary&) = default;

private:
    double p_obs_;
    double sd_y_;
    std::size_t n_;
};

enum class IntervalMethod { TaylorSeries, PoissonSampling, SubjectiveBayes, ObjectiveBayes };

inline constexpr std::array<IntervalMethod, 4> kAllMethods{
    IntervalMethod::TaylorSeries, IntervalMethod::PoissonSampling,
    IntervalMethod::SubjectiveBayes, IntervalMethod::ObjectiveBayes};

/// Stable lowercase tag ("taylor", "poisson", "subjective", "objective").
std::string method_tag(IntervalMethod method);
IntervalMethod method_from_tag(const std::string& tag);

/// An E-value uncertainty interval with 1 <= lower <= upper.
class EvalueInterval {
public:
    EvalueInterval(double lower, double upper, IntervalMethod method, double level,
                   bool singular_fallback = false);

    double lower() const { return lower_; }
    double upper() const { return upper_; }
    double width() const { return upper_ - lower_; }
    IntervalMethod method() const { return method_; }
    double level() const { return level_; }

    /// Set when the delta-method derivative was singular (RR == 1) and the
    /// one-sided fallback was used.
    bool singular_fallback() const { return singular_fallback_; }

    /// Whether the reference E-value 1 lies inside the interval.
    bool contains_null() const { return lower_ <= 1.0; }

    friend bool operator==(const EvalueInterval&, const EvalueInterval&) = default;

private:
    double lower_;
    double upper_;
    IntervalMethod method_;
    double level_;
    bool singular_fallback_;
};

enum class DensityVariant { Thm1, Thm2, Thm3 };

std::string variant_tag(DensityVariant variant);
DensityVariant variant_from_tag(const std::string& tag);

/// Parameters of a closed-form E-value density. Thm1/Thm2 describe ln RR as
/// normal(mu_rr, sigma_rr^2); Thm3 describes ln RR as gamma(alpha, rate).
class EvalueDensityParams {
public:
    static EvalueDensityParams log_normal(DensityVariant variant, double mu_rr, double sigma_rr,
                                          bool validity_warning = false);
    static EvalueDensityParams gamma(double alpha, double rate, bool validity_warning = false);

    DensityVariant variant() const { return variant_; }
    bool is_gamma() const { return variant_ == DensityVariant::Thm3; }

    double mu_rr() const;
    double sigma_rr() const;
    double alpha() const;
    double rate() const;

    /// Set when the small-coefficient-of-variation assumptions behind the
    /// product-normal approximation are not met.
    bool validity_warning() const { return validity_warning_; }

    friend bool operator==(const EvalueDensityParams&, const EvalueDensityParams&) = default;

private:
    EvalueDensityParams(DensityVariant variant, double a, double b, bool warning)
        : variant_(variant), a_(a), b_(b), validity_warning_(warning) {}

    DensityVariant variant_;
    double a_;  // mu_rr or alpha
    double b_;  // sigma_rr or rate
    bool validity_warning_;
};

}  // namespace sensivalue

#pragma once

// Closed-form E-value densities. ln RR is modelled as normal (two variants
// with different moment formulas) or as gamma (inverse-gamma sigma_Y), and
// pushed through V = RR + sqrt(RR (RR - 1)) on each branch of RR.

#include "sensivalue/types.hpp"

namespace sensivalue {

enum class Branch { RRgt1, RRlt1 };

/// Above this coefficient of variation the normal product approximation is
/// flagged as unreliable.
inline constexpr double kValidityThreshold = 0.2;

/// mu_RR = 0.91 (1-p) eta / sigma_Y, sigma_RR = 0.91 (1-p) tau / sigma_Y.
EvalueDensityParams params_thm1(double eta, double tau, double p_obs, double sd_y);

/// q = 1 - P(R=1) ~ N(mu_q, sigma_q^2): mu_RR = 0.91 mu_q eta / sigma_Y,
/// sigma_RR = 0.91 sqrt(mu_q^2 tau^2 + eta^2 sigma_q^2 + sigma_q^2 tau^2) / sigma_Y.
EvalueDensityParams params_thm2(double eta, double tau, double mu_q, double sigma_q, double sd_y);

/// Orientation of the gamma rate for ln RR when sigma_Y ~ IG(alpha, beta).
/// Derived: beta / (0.91 mu_q eta), which follows from 1 / sigma_Y ~
/// Gamma(alpha, rate beta). AsPrinted: mu_q eta / (0.91 beta).
enum class Thm3Rate { Derived, AsPrinted };

/// The convention checked against simulation and used by default.
inline constexpr Thm3Rate kThm3DefaultRate = Thm3Rate::Derived;

EvalueDensityParams params_thm3(double eta, double tau, double mu_q, double sigma_q, double alpha,
                                double beta, Thm3Rate rate = kThm3DefaultRate);

/// g(v) = ln(v^2 / (2v - 1)), the |ln RR| that maps to E-value v.
double log_rr_of_evalue(double v);

/// g'(v) = 2 (v - 1) / (v (2v - 1)) = 1/v - 1/(v (2v - 1)).
double log_rr_jacobian(double v);

/// Branch density of V at v > 1. The gamma variant puts no mass on RR < 1
/// and returns 0 there.
double density(const EvalueDensityParams& params, double v, Branch branch);

/// Sum of both branch densities.
double density(const EvalueDensityParams& params, double v);

/// P(RR > 1) or P(RR < 1), analytic.
double branch_mass(const EvalueDensityParams& params, Branch branch);

/// E-value beyond which each branch has tail mass below 1e-12.
double upper_support(const EvalueDensityParams& params);

/// Adaptive quadrature of one branch density over [a, b], 1 <= a <= b.
double integrate_density(const EvalueDensityParams& params, Branch branch, double a, double b);

/// Both branches integrated over (1, upper_support).
double total_mass(const EvalueDensityParams& params);

/// P(V <= v) by quadrature of the branch mixture; 0 at v <= 1.
double cdf(const EvalueDensityParams& params, double v);

/// Inverse of cdf by bracketed root finding on [1, upper_support].
double quantile(const EvalueDensityParams& params, double prob);

}  // namespace sensivalue

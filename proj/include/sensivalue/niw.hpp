#pragma once

// Empirical-Bayes fitting of the Normal-Inverse-Wishart prior over the
// sensitivity parameter delta and the two-source covariance Sigma.
//
// Model: delta_j | delta, Sigma ~ N2(delta * 1, Sigma), j = 1..m, with prior
// delta | Sigma ~ N(delta0, phi0), phi0 = (1' Sigma^-1 1)^-1, and
// Sigma ~ IW(Psi, nu). The hyperparameters minimise the negative log marginal
// likelihood L(delta0, Psi, nu). Psi has a closed-form minimiser, nu is taken
// at the knee of the profiled objective (L is monotone in nu), and delta0 is
// searched inside the region where the profiled objective is convex.

#include "sensivalue/types.hpp"

#include <cstddef>
#include <span>
#include <string>

namespace sensivalue {

struct ScatterStats {
    Vec2 delta_bar;   // row mean
    SymMat2 scatter;  // sum_j (delta_j - delta_bar)(delta_j - delta_bar)'
    std::size_t m = 0;
};

/// Row mean and centred scatter; throws "degenerate scatter" if S is singular.
ScatterStats scatter_stats(const SensitivityPairs& pairs);

/// Same, without the m >= 3 or non-singularity requirements.
ScatterStats scatter_stats_unchecked(std::span<const Vec2> rows);

struct ConjugateUpdate {
    double delta_tilde = 0.0;
    SymMat2 psi_tilde;
    double nu_tilde = 0.0;
    SymMat2 s_matrix;
    Vec2 delta_bar;
    std::size_t m = 0;
};

ConjugateUpdate conjugate_update(const NiwHyperparams& hyper, const SensitivityPairs& pairs);

/// Update from precomputed statistics; allows any m >= 1.
ConjugateUpdate conjugate_update(const NiwHyperparams& hyper, const ScatterStats& stats);

/// log Gamma_2(a) = log(pi^{1/2} Gamma(a) Gamma(a - 1/2)), a > 1/2.
double log_gamma2(double a);

/// L = m log pi + (1/2) log(m+1) - (nu/2) log|Psi| + (nu~/2) log|Psi~|
///     + log Gamma_2(nu/2) - log Gamma_2(nu~/2).
/// exp(-L) is the marginal density of the pairs; the (1/2) log(m+1) term is
/// the delta-integration constant.
double neg_log_marginal(const NiwHyperparams& hyper, const SensitivityPairs& pairs);
double neg_log_marginal(const NiwHyperparams& hyper, const ScatterStats& stats);

/// Joint log density of (pairs, delta, Sigma) under the NIW model.
double log_joint_density(const NiwHyperparams& hyper, std::span<const Vec2> rows, double delta,
                         const SymMat2& sigma);

/// Log density of the NIW posterior: delta | Sigma ~ N(delta~, phi0/(m+1)),
/// Sigma ~ IW(Psi~, nu~).
double log_posterior_niw_density(const ConjugateUpdate& update, double delta,
                                 const SymMat2& sigma);

/// Inverse-Wishart log density for p = 2.
double log_inverse_wishart_density(const SymMat2& sigma, const SymMat2& psi, double nu);

/// Psi* = (nu/m) (S + (m/(m+1)) (dbar - delta0 1)(dbar - delta0 1)').
SymMat2 psi_star(double delta0, double nu, const SensitivityPairs& pairs);
SymMat2 psi_star(double delta0, double nu, const ScatterStats& stats);

/// L(delta0, Psi*(delta0, nu), nu).
double profiled_objective(double delta0, double nu, const ScatterStats& stats);

/// (dbar - delta0 1)' S^-1 (dbar - delta0 1)
double mahalanobis_to_line(double delta0, const ScatterStats& stats);

struct Interval1D {
    double lo = 0.0;
    double hi = 0.0;
    bool empty = false;
};

/// The delta0 values satisfying (dbar - delta0 1)' S^-1 (dbar - delta0 1) <= (m+1)/m.
Interval1D convexity_interval(const ScatterStats& stats);

struct FitConfig {
    double nu_grid_min = 1.05;
    double nu_grid_max_per_group = 50.0;  // upper grid bound is this times m
    std::size_t nu_grid_points = 400;
    double nu_tolerance = 1e-8;           // relative, golden-section refinement
    double delta0_tolerance = 1e-12;      // relative to the feasible interval width
    double objective_tolerance = 1e-9;    // outer alternation convergence
    std::size_t max_iterations = 500;     // per golden-section search
    std::size_t max_outer_iterations = 10;
};

/// The profiled objective separates as
/// L(delta0, Psi*, nu) = h(nu; m) + (m/2) log|S + (m/(m+1)) d d'| + const, with
/// h(nu; m) = nu log((m+nu)/nu) + m log((m+nu)/m) + log Gamma_2(nu/2)
///            - log Gamma_2((nu+m)/2).
double nu_profile(double nu, std::size_t m);

/// Knee of the profiled objective in nu: the maximiser of the curvature
/// h'' / (1 + h'^2)^{3/2}, picked on a log-spaced grid and refined by
/// golden-section search. The data enter only through m.
double select_nu(std::size_t m, const FitConfig& config);

struct FitResult {
    NiwHyperparams hyper{0.0, SymMat2::identity(), 2.0};
    double objective = 0.0;
    /// Second-difference convexity of L in Psi directions at (delta0*, nu*).
    bool psi_convex_at_nu = false;
    /// delta0* sits on the boundary of the convexity interval.
    bool delta0_on_boundary = false;
    /// The convexity interval was empty; delta0* is the unconstrained minimiser.
    bool convexity_region_empty = false;
    std::size_t outer_iterations = 0;
};

/// Raised when a search exhausts its iteration budget.
class FitError : public Error {
public:
    FitError(const std::string& what, double last_delta0, double last_nu)
        : Error(what), last_delta0(last_delta0), last_nu(last_nu) {}
    double last_delta0;
    double last_nu;
};

FitResult fit_hyperparams(const SensitivityPairs& pairs, const FitConfig& config = {});

/// Second finite differences of L along Psi + t V for a fixed set of SPD
/// directions V; true when all are non-negative.
bool psi_convexity_check(double delta0, const SymMat2& psi, double nu, const ScatterStats& stats);

}  // namespace sensivalue

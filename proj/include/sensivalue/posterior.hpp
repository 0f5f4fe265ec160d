#pragma once

// Marginal posterior of the sensitivity parameter delta under the fitted
// subjective NIW prior and under the independent Jeffreys prior. Both are
// location-scale Student-t distributions.

#include "sensivalue/types.hpp"

#include <cstdint>
#include <vector>

namespace sensivalue {

/// Sufficient statistics of a posterior kernel
/// [1 + c (ybar - delta 1)' M^-1 (ybar - delta 1)]^{-e}.
struct PosteriorKernel {
    SymMat2 matrix;    // U (subjective) or S (objective)
    Vec2 centre;       // ybar (subjective) or dbar (objective)
    double weight;     // c = m + 1 (subjective) or m (objective)
    double exponent;   // e = (m + nu*)/2 or m/2
    double u, z, w;    // 1'M^-1 ybar, 1'M^-1 1, ybar'M^-1 ybar
};

PosteriorKernel subjective_kernel(const SensitivityPairs& pairs, const NiwHyperparams& hyper);
PosteriorKernel objective_kernel(const SensitivityPairs& pairs);

/// Unnormalised log kernel in its location-scale reduced form.
double log_kernel(const PosteriorKernel& kernel, double delta);

/// Location u/z, df = 2e - 1, scale^2 = (1 + c w - c u^2/z) / (c z df).
GeneralizedT kernel_to_t(const PosteriorKernel& kernel);

/// Posterior under the fitted NIW prior; df = m + nu* - 1.
GeneralizedT subjective_posterior(const SensitivityPairs& pairs, const NiwHyperparams& hyper);

/// Posterior under the independent Jeffreys prior |Sigma|^{-3/2}; df = m - 1.
GeneralizedT objective_posterior(const SensitivityPairs& pairs);

/// location + scale * t(df) draws. Draws are generated in fixed-size chunks
/// with per-chunk derived seeds, so output depends only on (post, n, seed).
std::vector<double> sample_delta(const GeneralizedT& post, std::size_t n_draws, std::uint64_t seed);

}  // namespace sensivalue

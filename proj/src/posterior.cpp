#include "sensivalue/posterior.hpp"

#include "sensivalue/niw.hpp"
#include "sensivalue/parallel.hpp"

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/student_t_distribution.hpp>

#include <algorithm>
#include <cmath>

namespace sensivalue {

namespace {

constexpr std::size_t kDrawChunk = 1 << 16;

PosteriorKernel make_kernel(const SymMat2& matrix, Vec2 centre, double weight, double exponent) {
    const SymMat2 inv = matrix.inverse();
    return {matrix, centre, weight, exponent, inv.bilinear(kOnes, centre), inv.quad(kOnes),
            inv.quad(centre)};
}

}  // namespace

PosteriorKernel subjective_kernel(const SensitivityPairs& pairs, const NiwHyperparams& hyper) {
    const ScatterStats st = scatter_stats(pairs);
    const double m = static_cast<double>(st.m);
    const Vec2 d = st.delta_bar - hyper.delta0() * kOnes;
    const SymMat2 u_mat = hyper.psi() + st.scatter + (m / (m + 1.0)) * SymMat2::outer(d);
    const Vec2 ybar = (1.0 / (m + 1.0)) * (m * st.delta_bar + hyper.delta0() * kOnes);
    return make_kernel(u_mat, ybar, m + 1.0, 0.5 * (m + hyper.nu()));
}

PosteriorKernel objective_kernel(const SensitivityPairs& pairs) {
    const ScatterStats st = scatter_stats(pairs);
    const double m = static_cast<double>(st.m);
    return make_kernel(st.scatter, st.delta_bar, m, 0.5 * m);
}

double log_kernel(const PosteriorKernel& k, double delta) {
    const double denom = 1.0 + k.weight * k.w - k.weight * k.u * k.u / k.z;
    const double t = delta - k.u / k.z;
    return -k.exponent * std::log1p(k.weight * k.z * t * t / denom);
}

GeneralizedT kernel_to_t(const PosteriorKernel& k) {
    const double df = 2.0 * k.exponent - 1.0;
    if (!(df > 1.0)) throw Error("posterior degrees of freedom must exceed 1");
    const double numer = 1.0 + k.weight * k.w - k.weight * k.u * k.u / k.z;
    const double scale2 = numer / (k.weight * k.z * df);
    if (!(scale2 > 0.0) || !std::isfinite(scale2)) throw Error("posterior kernel not normalizable");
    return GeneralizedT(k.u / k.z, std::sqrt(scale2), df);
}

GeneralizedT subjective_posterior(const SensitivityPairs& pairs, const NiwHyperparams& hyper) {
    return kernel_to_t(subjective_kernel(pairs, hyper));
}

GeneralizedT objective_posterior(const SensitivityPairs& pairs) {
    return kernel_to_t(objective_kernel(pairs));
}

std::vector<double> sample_delta(const GeneralizedT& post, std::size_t n_draws, std::uint64_t seed) {
    std::vector<double> out(n_draws);
    const std::size_t chunks = (n_draws + kDrawChunk - 1) / kDrawChunk;
    parallel_for(chunks, [&](std::size_t c) {
        boost::random::mt19937_64 engine(derive_seed(seed, c, 0x7d));
        boost::random::student_t_distribution<double> t(post.df());
        const std::size_t begin = c * kDrawChunk;
        const std::size_t end = std::min(n_draws, begin + kDrawChunk);
        for (std::size_t i = begin; i < end; ++i) {
            out[i] = post.location() + post.scale() * t(engine);
        }
    });
    return out;
}

}  // namespace sensivalue

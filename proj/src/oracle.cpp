#include "rsczo/oracle.hpp"

#include <cmath>
#include <string>

#include "rsczo/errors.hpp"
#include "rsczo/rng.hpp"

namespace rsczo {

std::string_view to_string(NoiseFamily family)
{
    switch (family) {
    case NoiseFamily::none: return "none";
    case NoiseFamily::sparse_pareto: return "sparse_pareto";
    case NoiseFamily::weak_l2: return "weakL2_infinite_variance";
    }
    return "?";
}

NoiseFamily noise_family_from_string(std::string_view name)
{
    if (name == "none")
        return NoiseFamily::none;
    if (name == "sparse_pareto")
        return NoiseFamily::sparse_pareto;
    if (name == "weakL2_infinite_variance" || name == "weakL2" || name == "weak_l2")
        return NoiseFamily::weak_l2;
    throw InvalidArgument("unknown noise family '" + std::string(name) + "'");
}

void NoiseModelSpec::validate() const
{
    if (family == NoiseFamily::sparse_pareto && !(p > 1.0))
        throw InvalidArgument("sparse_pareto noise needs tail exponent p > 1 (finite first moment)");
    if (!(sigma_scale > 0.0) || !std::isfinite(sigma_scale))
        throw InvalidArgument("noise sigma_scale must be positive and finite");
}

double pareto_from_uniform(double p, double u) { return std::pow(u, -1.0 / p); }

double pareto_amplitude(double p, std::uint64_t key)
{
    KeyedRng rng(key);
    return pareto_from_uniform(p, rng.uniform_open_closed());
}

Vec SparseNoise::dense(std::size_t d) const
{
    Vec z(d, 0.0);
    if (index < d)
        z[index] = value;
    return z;
}

SparseNoise sample_sparse_noise(std::size_t d, const NoiseModelSpec& spec, std::uint64_t key)
{
    KeyedRng rng(key);
    const double amplitude = spec.sigma_scale * pareto_from_uniform(spec.p, rng.uniform_open_closed());
    const double sign = rng.coin() ? 1.0 : -1.0;
    const auto index = static_cast<std::size_t>(rng.below(d));
    return {index, sign * amplitude};
}

double sample_weak_l2_noise(std::uint64_t key)
{
    KeyedRng rng(key);
    // P(|Z| > t) = t^{-2}  =>  |Z| = U^{-1/2}
    const double magnitude = 1.0 / std::sqrt(rng.uniform_open_closed());
    return rng.coin() ? magnitude : -magnitude;
}

QuadraticProblem::QuadraticProblem(std::size_t d, NoiseModelSpec noise, Vec x0)
    : d_(d), noise_(noise), x0_(std::move(x0))
{
    if (d_ == 0)
        throw InvalidArgument("problem dimension must be positive");
    if (x0_.size() != d_)
        throw InvalidArgument("x0 dimension does not match problem dimension");
    noise_.validate();
}

SparseNoise QuadraticProblem::noise(std::uint64_t sample_key) const
{
    switch (noise_.family) {
    case NoiseFamily::none: return {0, 0.0};
    case NoiseFamily::sparse_pareto: return sample_sparse_noise(d_, noise_, sample_key);
    case NoiseFamily::weak_l2: return {0, noise_.sigma_scale * sample_weak_l2_noise(sample_key)};
    }
    return {0, 0.0};
}

double QuadraticProblem::evaluate(std::span<const double> x, std::uint64_t sample_key)
{
    if (x.size() != d_)
        throw OracleError(OracleError::Kind::dimension_mismatch, sample_key,
                          "query dimension " + std::to_string(x.size()) + " != problem dimension " +
                              std::to_string(d_));
    const SparseNoise z = noise(sample_key);
    return 0.5 * dot(x, x) + z.value * x[z.index];
}

double QuadraticProblem::mean_value(std::span<const double> x) const { return 0.5 * dot(x, x); }

Vec QuadraticProblem::true_gradient(std::span<const double> x) const { return Vec(x.begin(), x.end()); }

double QuadraticProblem::delta0() const { return mean_value(x0_) - f_star(); }

} // namespace rsczo

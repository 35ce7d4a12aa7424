#include <cmath>
#include <cstdio>

#include "rsczo/harness.hpp"
#include "rsczo/planner.hpp"

namespace rsczo {

namespace {

std::string model_label(const NoiseModelSpec& spec)
{
    char buf[64];
    if (spec.family == NoiseFamily::weak_l2)
        std::snprintf(buf, sizeof buf, "weakL2");
    else
        std::snprintf(buf, sizeof buf, "sparse_pareto(p=%g)", spec.p);
    return buf;
}

} // namespace

std::vector<LemmaCheckReport> run_check_suite(std::size_t n, std::uint64_t seed)
{
    constexpr std::size_t d = 10;
    constexpr double mu = 1e-3;
    const std::vector<NoiseModelSpec> models{
        {NoiseFamily::sparse_pareto, 1.2, 1.0},
        {NoiseFamily::sparse_pareto, 1.5, 1.0},
        {NoiseFamily::sparse_pareto, 1.8, 1.0},
        {NoiseFamily::weak_l2, 2.0, 1.0},
    };
    const std::vector<double> t_grid{0.5, 1.0, 2.0, 4.0, 10.0, 100.0};

    std::vector<LemmaCheckReport> out;
    const auto append = [&](std::vector<LemmaCheckReport> v) { out.insert(out.end(), v.begin(), v.end()); };

    std::uint64_t stream = 0;
    for (const NoiseModelSpec& spec : models) {
        const std::string label = model_label(spec);
        const double p = spec.tail_exponent();
        const Vec x = basis_vector(d, 0, 1.0);
        const QuadraticProblem problem(d, spec, x);

        // Localized scale at x: Δ = f(x) − f_* = ½.
        const double S = smoothing_scale(1.0, bar_delta0(1.0, 0.5, mu), spec.weak_lp_sigma(), d, mu);
        std::vector<double> taus;
        if (spec.family == NoiseFamily::weak_l2)
            taus = {4.0, 16.0, 64.0};
        else
            taus = {4.0 * S, 8.0 * S, 16.0 * S, 64.0 * S};

        const ScalarSampler y = directional_sampler(problem, x, mu);
        append(check_clipping_bias(y, S, p, taus, n, combine(seed, ++stream), label));
        append(check_clipped_second_moment(y, S, p, taus, n, combine(seed, ++stream), label));

        const ScalarSampler noise_norm = [spec](std::uint64_t key) {
            if (spec.family == NoiseFamily::weak_l2)
                return std::abs(spec.sigma_scale * sample_weak_l2_noise(key));
            return std::abs(sample_sparse_noise(d, spec, key).value);
        };
        append(check_weak_tail(noise_norm, p, spec.weak_lp_sigma(), t_grid, n, combine(seed, ++stream), label));
    }

    for (std::size_t dim : {std::size_t{10}, std::size_t{100}}) {
        const QuadraticProblem noiseless(dim, {}, basis_vector(dim, 0, 1.0));
        const std::vector<Vec> xs{basis_vector(dim, 0, 1.0), basis_vector(dim, dim - 1, 3.0)};
        const std::vector<double> mus{1e-3, 0.1};
        append(check_smoothing_bias(noiseless, xs, mus, n, combine(seed, ++stream)));
    }
    return out;
}

} // namespace rsczo

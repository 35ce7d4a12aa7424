#include "rsczo/estimator.hpp"

#include <cmath>
#include <string>

#include "rsczo/errors.hpp"

namespace rsczo {

std::string_view to_string(EstimatorMode mode)
{
    switch (mode) {
    case EstimatorMode::raw: return "raw";
    case EstimatorMode::vector_clip: return "vector_clip";
    case EstimatorMode::scalar_clip: return "scalar_clip";
    }
    return "?";
}

EstimatorMode estimator_mode_from_string(std::string_view name)
{
    if (name == "raw")
        return EstimatorMode::raw;
    if (name == "vector_clip")
        return EstimatorMode::vector_clip;
    if (name == "scalar_clip")
        return EstimatorMode::scalar_clip;
    throw InvalidArgument("unknown estimator mode '" + std::string(name) + "'");
}

double psi_tau(double z, double tau)
{
    if (!std::isfinite(z))
        throw OracleError(OracleError::Kind::non_finite, 0, "non-finite directional estimate passed to psi_tau");
    if (!(tau > 0.0))
        throw InvalidArgument("clipping threshold must be positive");
    if (z > tau)
        return tau;
    if (z < -tau)
        return -tau;
    return z;
}

Vec vector_clip(std::span<const double> v, double r)
{
    if (!(r > 0.0))
        throw InvalidArgument("vector clipping radius must be positive");
    if (!all_finite(v))
        throw InvalidArgument("vector_clip: non-finite component");
    Vec out(v.begin(), v.end());
    const double n = norm2(v);
    if (n > r)
        scale(out, r / n);
    return out;
}

void fill_sphere(std::span<double> out, std::uint64_t key)
{
    for (std::uint64_t attempt = 0;; ++attempt) {
        KeyedRng rng(attempt == 0 ? key : combine(key, attempt));
        double sq = 0.0;
        for (double& v : out) {
            v = rng.normal();
            sq += v * v;
        }
        if (sq > 0.0 && out.size() == 1) {
            out[0] = std::copysign(1.0, out[0]);  // S^0 = {±1} exactly
            return;
        }
        if (sq > 0.0) {
            const double inv = 1.0 / std::sqrt(sq);
            for (double& v : out)
                v *= inv;
            return;
        }
    }
}

Direction sample_sphere(std::size_t d, std::uint64_t key)
{
    if (d == 0)
        throw InvalidArgument("sphere dimension must be positive");
    Direction dir{Vec(d)};
    fill_sphere(dir.u, key);
    return dir;
}

namespace {

double checked_value(Oracle& oracle, std::span<const double> point, std::uint64_t sample_key)
{
    const double v = oracle.evaluate(point, sample_key);
    if (!std::isfinite(v))
        throw OracleError(OracleError::Kind::non_finite, sample_key,
                          "oracle returned non-finite value for sample key " + std::to_string(sample_key));
    return v;
}

// Central difference along u with shared sample key; `plus`/`minus` are scratch.
double central_difference(Oracle& oracle, std::span<const double> x, std::span<const double> u, double mu,
                          std::uint64_t sample_key, std::span<double> plus, std::span<double> minus)
{
    for (std::size_t i = 0; i < x.size(); ++i) {
        plus[i] = x[i] + mu * u[i];
        minus[i] = x[i] - mu * u[i];
    }
    const double fp = checked_value(oracle, plus, sample_key);
    const double fm = checked_value(oracle, minus, sample_key);
    return (fp - fm) / (2.0 * mu);
}

void require_smoothing(double mu)
{
    if (!(mu > 0.0) || !std::isfinite(mu))
        throw InvalidArgument("smoothing radius mu must be positive");
}

} // namespace

DirectionalSample two_point_directional(Oracle& oracle, std::span<const double> x, const Direction& dir,
                                        double mu, std::uint64_t sample_key)
{
    require_smoothing(mu);
    if (dir.u.size() != x.size())
        throw InvalidArgument("direction dimension does not match x");
    Vec plus(x.size());
    Vec minus(x.size());
    const double y = central_difference(oracle, x, dir.u, mu, sample_key, plus, minus);
    return {dir, sample_key, y};
}

DirectionalBatch sample_batch(Oracle& oracle, std::span<const double> x, double mu, std::size_t batch_size,
                              StreamKey key, const DirectionSource& directions)
{
    require_smoothing(mu);
    if (batch_size == 0)
        throw InvalidArgument("batch size M must be positive");
    const std::size_t d = x.size();
    if (d != oracle.dimension())
        throw InvalidArgument("x dimension does not match oracle dimension");

    DirectionalBatch batch;
    batch.dimension = d;
    batch.directions.resize(batch_size * d);
    batch.y.resize(batch_size);
    Vec plus(d);
    Vec minus(d);
    for (std::size_t ell = 0; ell < batch_size; ++ell) {
        key.index = ell;
        const SampleKeys keys = split_sample_key(key.derive());
        std::span<double> u(batch.directions.data() + ell * d, d);
        if (directions)
            directions(ell, keys.direction, u);
        else
            fill_sphere(u, keys.direction);
        batch.y[ell] = central_difference(oracle, x, u, mu, keys.noise, plus, minus);
    }
    return batch;
}

GradientEstimate aggregate(const DirectionalBatch& batch, EstimatorMode mode, std::optional<double> threshold)
{
    const std::size_t m = batch.size();
    const std::size_t d = batch.dimension;
    if (m == 0)
        throw InvalidArgument("cannot aggregate an empty batch");
    if (mode != EstimatorMode::raw && !(threshold && *threshold > 0.0))
        throw InvalidArgument(std::string(to_string(mode)) + " needs a positive threshold");

    GradientEstimate est;
    est.mode = mode;
    est.batch_size = m;
    est.raw_scalars = batch.y;
    est.g.assign(d, 0.0);

    for (std::size_t ell = 0; ell < m; ++ell) {
        double y = batch.y[ell];
        if (!std::isfinite(y))
            throw OracleError(OracleError::Kind::non_finite, 0, "non-finite directional estimate in batch");
        if (mode == EstimatorMode::scalar_clip) {
            if (std::abs(y) > *threshold)
                ++est.clipped_count;
            y = psi_tau(y, *threshold);
        }
        axpy(y, batch.direction(ell), est.g);
    }
    scale(est.g, static_cast<double>(d) / static_cast<double>(m));

    if (mode == EstimatorMode::vector_clip) {
        const double n = norm2(est.g);
        if (n > *threshold) {
            scale(est.g, *threshold / n);
            est.clipped_count = 1;
        }
    }
    return est;
}

GradientEstimate estimate_gradient(Oracle& oracle, std::span<const double> x, double mu, std::size_t batch_size,
                                   EstimatorMode mode, std::optional<double> threshold, StreamKey key,
                                   const DirectionSource& directions)
{
    if (mode != EstimatorMode::raw && !(threshold && *threshold > 0.0))
        throw InvalidArgument(std::string(to_string(mode)) + " needs a positive threshold");
    return aggregate(sample_batch(oracle, x, mu, batch_size, key, directions), mode, threshold);
}

MonteCarloEstimate smoothed_value_mc(const std::function<double(std::span<const double>)>& f,
                                     std::span<const double> x, double mu, std::size_t n_mc, std::uint64_t key)
{
    if (n_mc == 0)
        throw InvalidArgument("n_mc must be at least 1");
    if (!(mu >= 0.0))
        throw InvalidArgument("mu must be non-negative");
    const std::size_t d = x.size();
    Vec v(d);
    Vec plus(d);
    Vec minus(d);
    double mean = 0.0;
    double m2 = 0.0;
    for (std::size_t i = 0; i < n_mc; ++i) {
        const std::uint64_t k = combine(key, i);
        fill_sphere(v, k);
        KeyedRng rng(combine(k, 0x7261646975ULL));
        // radius of a uniform point in the unit ball
        const double radius = std::pow(rng.uniform_open_closed(), 1.0 / static_cast<double>(d));
        for (std::size_t j = 0; j < d; ++j) {
            plus[j] = x[j] + mu * radius * v[j];
            minus[j] = x[j] - mu * radius * v[j];
        }
        const double sample = 0.5 * (f(plus) + f(minus));
        const double delta = sample - mean;
        mean += delta / static_cast<double>(i + 1);
        m2 += delta * (sample - mean);
    }
    MonteCarloEstimate out;
    out.mean = mean;
    out.samples = n_mc;
    out.std_error = n_mc > 1 ? std::sqrt(m2 / static_cast<double>(n_mc - 1) / static_cast<double>(n_mc)) : 0.0;
    return out;
}

} // namespace rsczo

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "rsczo/linalg.hpp"
#include "rsczo/oracle.hpp"
#include "rsczo/rng.hpp"

namespace rsczo {

enum class EstimatorMode { raw, vector_clip, scalar_clip };

std::string_view to_string(EstimatorMode mode);
EstimatorMode estimator_mode_from_string(std::string_view name);

/// ψ_τ(z) = z·min{1, τ/|z|}. Throws OracleError on non-finite z: clipping
/// must never hide a broken oracle.
double psi_tau(double z, double tau);

/// Rescales v onto the ball of radius r if it lies outside; direction is kept.
Vec vector_clip(std::span<const double> v, double r);

/// Unit vector in R^d.
struct Direction {
    Vec u;
};

/// Uniform on S^{d-1}: a standard normal vector, normalized. Deterministic in `key`.
Direction sample_sphere(std::size_t d, std::uint64_t key);
void fill_sphere(std::span<double> out, std::uint64_t key);

struct DirectionalSample {
    Direction direction;
    std::uint64_t sample_key = 0;
    double y = 0.0;
};

/// Y = (F(x+μu; ξ) − F(x−μu; ξ)) / (2μ), both evaluations with the same key.
DirectionalSample two_point_directional(Oracle& oracle, std::span<const double> x, const Direction& dir,
                                        double mu, std::uint64_t sample_key);

/// Test hook: replaces the sphere sampler for sample ℓ of a batch.
using DirectionSource = std::function<void(std::size_t ell, std::uint64_t direction_key, std::span<double> out)>;

/// One batch of directional samples at a fixed point: M directions (row-major,
/// M×d) and their two-point values. All three estimator modes aggregate the
/// same batch, which is what makes paired estimator comparisons possible.
struct DirectionalBatch {
    std::size_t dimension = 0;
    std::vector<double> directions;
    std::vector<double> y;

    std::size_t size() const noexcept { return y.size(); }
    std::span<const double> direction(std::size_t ell) const
    {
        return {directions.data() + ell * dimension, dimension};
    }
};

/// Draws the batch for (key.seed, key.stream, key.t); sample ℓ uses key.index = ℓ.
/// Performs exactly 2·M oracle evaluations.
DirectionalBatch sample_batch(Oracle& oracle, std::span<const double> x, double mu, std::size_t batch_size,
                              StreamKey key, const DirectionSource& directions = {});

struct GradientEstimate {
    Vec g;
    EstimatorMode mode = EstimatorMode::raw;
    std::size_t batch_size = 0;
    /// scalar_clip: number of ℓ with |Y_ℓ| > τ. vector_clip: 1 if the aggregate was rescaled.
    std::size_t clipped_count = 0;
    std::vector<double> raw_scalars;
};

/// raw:         g = (d/M) Σ Y_ℓ u_ℓ
/// scalar_clip: g = (d/M) Σ ψ_τ(Y_ℓ) u_ℓ          (threshold = τ)
/// vector_clip: g = clip_r((d/M) Σ Y_ℓ u_ℓ)         (threshold = r_vec)
GradientEstimate aggregate(const DirectionalBatch& batch, EstimatorMode mode, std::optional<double> threshold);

GradientEstimate estimate_gradient(Oracle& oracle, std::span<const double> x, double mu, std::size_t batch_size,
                                   EstimatorMode mode, std::optional<double> threshold, StreamKey key,
                                   const DirectionSource& directions = {});

struct MonteCarloEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t samples = 0;
};

/// Monte Carlo estimate of f_μ(x) = E_{v∼Unif(B^d)} f(x + μv) using antithetic
/// pairs (v, −v); the pair average is still an unbiased draw because the ball is
/// symmetric. `f` is the noiseless objective.
MonteCarloEstimate smoothed_value_mc(const std::function<double(std::span<const double>)>& f,
                                     std::span<const double> x, double mu, std::size_t n_mc, std::uint64_t key);

} // namespace rsczo

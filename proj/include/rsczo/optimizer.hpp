#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rsczo/estimator.hpp"
#include "rsczo/linalg.hpp"
#include "rsczo/oracle.hpp"
#include "rsczo/rng.hpp"

namespace rsczo {

inline constexpr std::uint64_t kIterStream = stream_tag("iter");
inline constexpr std::uint64_t kWarmStream = stream_tag("warm");

/// Iterates with ‖x‖ above this are treated as diverged and the run halts.
inline constexpr double kDivergenceNorm = 1e9;

struct BaseConfig {
    double alpha = 0.1;
    double mu = 1e-3;
    std::size_t M = 1;
    double tau = 1.0;         // scalar_clip only
    std::uint64_t T = 0;
    EstimatorMode mode = EstimatorMode::scalar_clip;
    double vec_radius = 1.0;  // vector_clip only

    /// The threshold consulted by `mode` (none for raw).
    std::optional<double> threshold() const;
    void validate() const;
};

struct MomentumConfig {
    BaseConfig base;
    double beta = 0.5;
    std::size_t M0 = 1;
    double tau0 = 1.0;

    /// Requires β ∈ [1/2, 1) unless `allow_any_beta` (used by the β = 0
    /// equivalence checks, which step outside the analysed regime on purpose).
    void validate(bool allow_any_beta = false) const;
};

struct OptimizerState {
    std::uint64_t t = 0;
    Vec x;
    Vec m;  // momentum buffer; empty for the base variant
    std::uint64_t queries = 0;
};

struct Step {
    OptimizerState state;
    GradientEstimate estimate;
};

/// g_t = G_μ(x_t; M, τ) in the configured mode; x_{t+1} = x_t − α g_t.
Step base_step(const OptimizerState& state, Oracle& oracle, const BaseConfig& config, StreamKey key);

/// g_0 = G_μ(x_0; M_0, τ_0); m_0 = g_0; x_1 = x_0 − α m_0.
Step warm_start(std::span<const double> x0, Oracle& oracle, const MomentumConfig& config, StreamKey key);

/// g_t = G_μ(x_t; M, τ); m_t = β m_{t−1} + (1−β) g_t; x_{t+1} = x_t − α m_t.
Step momentum_step(const OptimizerState& state, Oracle& oracle, const MomentumConfig& config, StreamKey key);

/// m ← β m + (1−β) g
void momentum_update(std::span<double> m, std::span<const double> g, double beta);

/// One row per optimizer iteration. Row t describes the step that produced
/// x_t: cosine, outlier ratio and clip fraction refer to the batch drawn at
/// x_{t−1}; grad_norm is ‖∇f(x_t)‖; queries is the cumulative count after
/// the step. For the momentum variant row 1 is the warm start.
struct RunRecord {
    std::string method;
    std::uint64_t seed = 0;
    std::uint64_t t = 0;
    double grad_norm = 0.0;
    std::optional<double> cosine;
    std::optional<double> outlier_log_ratio;
    double clipped_fraction = 0.0;
    std::uint64_t queries = 0;

    friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

struct DiagnosticsHooks {
    /// Reference gradient ∇f (never seen by the optimizer). Required for run().
    std::function<Vec(std::span<const double>)> true_gradient;
    /// Optional observer called once per step with the iterate the batch was
    /// drawn at and the full batch.
    std::function<void(std::uint64_t t, std::span<const double> x, const DirectionalBatch& batch)> on_batch;
};

struct RunResult {
    std::vector<RunRecord> records;
    Vec final_x;
    bool diverged = false;
    std::optional<std::string> error;  // oracle failure that aborted the run

    /// ‖∇f(x_T)‖ of the last recorded iterate (initial point if nothing ran).
    double final_grad_norm = 0.0;
};

struct RunLabel {
    std::string method;
    std::uint64_t seed = 0;
};

RunResult run(Oracle& oracle, std::span<const double> x0, const BaseConfig& config, std::uint64_t master_seed,
              const DiagnosticsHooks& hooks, const RunLabel& label = {});

RunResult run(Oracle& oracle, std::span<const double> x0, const MomentumConfig& config, std::uint64_t master_seed,
              const DiagnosticsHooks& hooks, const RunLabel& label = {});

} // namespace rsczo

#include "rsczo/optimizer.hpp"

#include <cmath>
#include <string>

#include "rsczo/diagnostics.hpp"
#include "rsczo/errors.hpp"

namespace rsczo {

std::optional<double> BaseConfig::threshold() const
{
    switch (mode) {
    case EstimatorMode::raw: return std::nullopt;
    case EstimatorMode::vector_clip: return vec_radius;
    case EstimatorMode::scalar_clip: return tau;
    }
    return std::nullopt;
}

void BaseConfig::validate() const
{
    if (!(alpha >= 0.0) || !std::isfinite(alpha))
        throw InvalidArgument("stepsize alpha must be non-negative and finite");
    if (!(mu > 0.0))
        throw InvalidArgument("smoothing radius mu must be positive");
    if (M == 0)
        throw InvalidArgument("batch size M must be positive");
    if (mode == EstimatorMode::scalar_clip && !(tau > 0.0))
        throw InvalidArgument("scalar_clip needs tau > 0");
    if (mode == EstimatorMode::vector_clip && !(vec_radius > 0.0))
        throw InvalidArgument("vector_clip needs vec_radius > 0");
}

void MomentumConfig::validate(bool allow_any_beta) const
{
    base.validate();
    if (!allow_any_beta && !(beta >= 0.5 && beta < 1.0))
        throw InvalidArgument("momentum beta must lie in [1/2, 1)");
    if (allow_any_beta && !(beta >= 0.0 && beta < 1.0))
        throw InvalidArgument("momentum beta must lie in [0, 1)");
    if (M0 == 0)
        throw InvalidArgument("warm-start batch size M0 must be at least 1");
    if (base.mode == EstimatorMode::scalar_clip && !(tau0 > 0.0))
        throw InvalidArgument("warm-start threshold tau0 must be positive");
}

namespace {

std::optional<double> warm_threshold(const MomentumConfig& config)
{
    if (config.base.mode == EstimatorMode::scalar_clip)
        return config.tau0;
    return config.base.threshold();
}

struct BatchStep {
    Step step;
    DirectionalBatch batch;
};

BatchStep base_step_impl(const OptimizerState& state, Oracle& oracle, const BaseConfig& config, StreamKey key)
{
    BatchStep out;
    out.batch = sample_batch(oracle, state.x, config.mu, config.M, key);
    out.step.estimate = aggregate(out.batch, config.mode, config.threshold());
    out.step.state = state;
    axpy(-config.alpha, out.step.estimate.g, out.step.state.x);
    out.step.state.t = state.t + 1;
    out.step.state.queries = state.queries + 2 * static_cast<std::uint64_t>(config.M);
    return out;
}

BatchStep warm_start_impl(std::span<const double> x0, Oracle& oracle, const MomentumConfig& config, StreamKey key)
{
    BatchStep out;
    out.batch = sample_batch(oracle, x0, config.base.mu, config.M0, key);
    out.step.estimate = aggregate(out.batch, config.base.mode, warm_threshold(config));
    OptimizerState& s = out.step.state;
    s.t = 1;
    s.m = out.step.estimate.g;
    s.x.assign(x0.begin(), x0.end());
    axpy(-config.base.alpha, s.m, s.x);
    s.queries = 2 * static_cast<std::uint64_t>(config.M0);
    return out;
}

BatchStep momentum_step_impl(const OptimizerState& state, Oracle& oracle, const MomentumConfig& config,
                             StreamKey key)
{
    if (state.t < 1 || state.m.size() != state.x.size())
        throw InvalidArgument("momentum_step requires a warm-started state");
    BatchStep out;
    out.batch = sample_batch(oracle, state.x, config.base.mu, config.base.M, key);
    out.step.estimate = aggregate(out.batch, config.base.mode, config.base.threshold());
    OptimizerState& s = out.step.state;
    s = state;
    momentum_update(s.m, out.step.estimate.g, config.beta);
    axpy(-config.base.alpha, s.m, s.x);
    s.t = state.t + 1;
    s.queries = state.queries + 2 * static_cast<std::uint64_t>(config.base.M);
    return out;
}

StreamKey iter_key(std::uint64_t seed, std::uint64_t t) { return {seed, kIterStream, t, 0}; }
StreamKey warm_key(std::uint64_t seed) { return {seed, kWarmStream, 0, 0}; }

bool diverged(std::span<const double> x)
{
    if (!all_finite(x))
        return true;
    return norm2(x) > kDivergenceNorm;
}

// Shared loop driver. `advance(state, t)` performs the step producing x_t.
template <class Advance>
RunResult drive(std::span<const double> x0, std::uint64_t T, const DiagnosticsHooks& hooks, const RunLabel& label,
                Advance&& advance)
{
    if (!hooks.true_gradient)
        throw InvalidArgument("run() needs a true_gradient diagnostics hook");

    RunResult result;
    result.final_x.assign(x0.begin(), x0.end());
    result.final_grad_norm = norm2(hooks.true_gradient(x0));
    result.records.reserve(static_cast<std::size_t>(T));

    OptimizerState state;
    state.x.assign(x0.begin(), x0.end());
    Vec grad_prev = hooks.true_gradient(state.x);

    for (std::uint64_t t = 1; t <= T; ++t) {
        BatchStep bs;
        try {
            bs = advance(state, t);
        } catch (const OracleError& e) {
            result.error = e.what();
            return result;
        }
        if (hooks.on_batch)
            hooks.on_batch(t, state.x, bs.batch);

        const BatchDiagnostics diag = batch_diagnostics(bs.step.estimate, grad_prev);
        if (diverged(bs.step.state.x)) {
            result.diverged = true;
            if (all_finite(bs.step.state.x)) {
                // Record the last finite iterate, then halt.
                state = std::move(bs.step.state);
                grad_prev = hooks.true_gradient(state.x);
                result.records.push_back({label.method, label.seed, t, norm2(grad_prev), diag.cosine,
                                          diag.outlier_log_ratio, diag.clipped_fraction, state.queries});
                result.final_x = state.x;
                result.final_grad_norm = result.records.back().grad_norm;
            } else {
                // Non-finite iterate: the row carries the last finite iterate's
                // gradient norm so the run still counts in cross-seed aggregation.
                result.records.push_back({label.method, label.seed, t, norm2(grad_prev), diag.cosine,
                                          diag.outlier_log_ratio, diag.clipped_fraction, bs.step.state.queries});
                result.final_x = state.x;
                result.final_grad_norm = result.records.back().grad_norm;
            }
            return result;
        }

        state = std::move(bs.step.state);
        grad_prev = hooks.true_gradient(state.x);
        result.records.push_back({label.method, label.seed, t, norm2(grad_prev), diag.cosine,
                                  diag.outlier_log_ratio, diag.clipped_fraction, state.queries});
    }
    result.final_x = state.x;
    result.final_grad_norm = result.records.empty() ? result.final_grad_norm : result.records.back().grad_norm;
    return result;
}

} // namespace

Step base_step(const OptimizerState& state, Oracle& oracle, const BaseConfig& config, StreamKey key)
{
    config.validate();
    return base_step_impl(state, oracle, config, key).step;
}

Step warm_start(std::span<const double> x0, Oracle& oracle, const MomentumConfig& config, StreamKey key)
{
    config.validate(true);
    return warm_start_impl(x0, oracle, config, key).step;
}

Step momentum_step(const OptimizerState& state, Oracle& oracle, const MomentumConfig& config, StreamKey key)
{
    config.validate(true);
    return momentum_step_impl(state, oracle, config, key).step;
}

void momentum_update(std::span<double> m, std::span<const double> g, double beta)
{
    for (std::size_t i = 0; i < m.size(); ++i)
        m[i] = beta * m[i] + (1.0 - beta) * g[i];
}

RunResult run(Oracle& oracle, std::span<const double> x0, const BaseConfig& config, std::uint64_t master_seed,
              const DiagnosticsHooks& hooks, const RunLabel& label)
{
    config.validate();
    return drive(x0, config.T, hooks, label, [&](const OptimizerState& s, std::uint64_t t) {
        return base_step_impl(s, oracle, config, iter_key(master_seed, t - 1));
    });
}

RunResult run(Oracle& oracle, std::span<const double> x0, const MomentumConfig& config, std::uint64_t master_seed,
              const DiagnosticsHooks& hooks, const RunLabel& label)
{
    config.validate();
    return drive(x0, config.base.T, hooks, label, [&](const OptimizerState& s, std::uint64_t t) {
        if (t == 1)
            return warm_start_impl(s.x, oracle, config, warm_key(master_seed));
        return momentum_step_impl(s, oracle, config, iter_key(master_seed, t - 1));
    });
}

} // namespace rsczo

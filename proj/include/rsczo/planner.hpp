#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace rsczo {

/// Problem constants consumed by the planner.
struct PlannerInputs {
    double L = 1.0;       // smoothness
    double Delta0 = 1.0;  // f(x0) − f_*
    double sigma = 1.0;   // weak-L_p scale
    double p = 2.0;       // tail exponent in (1, 2]
    double d = 1.0;       // dimension
    double eps = 0.1;
    double delta = 0.05;
    std::optional<double> mu;    // empty = auto, ε/(4Ld)
    std::optional<double> beta;  // momentum variant when set
    std::uint64_t max_batch = std::uint64_t{1} << 40;

    void validate() const;
    double resolved_mu() const;
};

struct PlannedParams {
    bool momentum = false;
    bool constant_approximate = false;  // momentum plans reuse the base constant C_p
    bool trivial_regime = false;        // ε² > 32·L·Δ̄0: x0 is already ε-stationary

    double mu = 0.0;
    double beta = 0.0;
    double bar_Delta0 = 0.0;
    double S_mu = 0.0;
    double C_p = 0.0;
    double lambda = 0.0;
    double lambda0 = 0.0;  // momentum
    double alpha = 0.0;
    std::uint64_t T = 0;
    double tau = 0.0;
    double tau0 = 0.0;  // momentum
    std::uint64_t M = 0;
    std::uint64_t M0 = 0;  // momentum
    double eta0 = 0.0;     // at the selected M
    double eta = 0.0;
    double eta0_warm = 0.0;  // momentum, at the selected M0
    double predicted_queries = 0.0;
};

/// C_p = 120 + 2^{4−p}/(p−1)
double clipping_constant(double p);

/// Δ̄0 = Δ0 + Lμ²/2
double bar_delta0(double L, double Delta0, double mu);

/// S_μ = (√(LΔ̄0) + σ)/√d + Lμ
double smoothing_scale(double L, double bar_Delta0, double sigma, double d, double mu);

/// Deviation level η₀ = C_p·d·S_μ·(c/M)^{(p−1)/p}·√(1 + log(M/c)), where c is
/// the log factor (λ for the base method, (1−β)λ for momentum batches).
double deviation_level(double C_p, double d, double S_mu, double p, double c, double M);

/// M above which η₀ is strictly decreasing: c·exp(max(0, p/(2(p−1)) − 1)).
double deviation_monotone_from(double p, double c);

/// Smallest integer M ≥ max(c, 1) with η₀(M) + Lμ ≤ target. Throws
/// InfeasiblePlan when no such M ≤ max_batch exists.
std::uint64_t smallest_batch(double C_p, double d, double S_mu, double p, double c, double L_mu, double target,
                             std::uint64_t max_batch);

/// Base RSC-ZO (β = 0): α = 1/(4L), T = max{3, ⌈32LΔ̄0/ε²⌉}, λ = log(T/δ),
/// M the smallest batch meeting η ≤ ε/4, τ = 8S_μ(M/λ)^{1/p}.
PlannedParams plan_base(const PlannerInputs& in);

/// Momentum RSC-ZO, β ∈ [1/2, 1): α = (1−β)/(16√3 L),
/// T = ⌈512√3 LΔ̄0/((1−β)ε²)⌉ + 2, λ = log(2T/δ), λ0 = log(2/δ),
/// τ = 8S_μ(M/((1−β)λ))^{1/p}, τ0 = 8S_μ(M0/λ0)^{1/p}.
PlannedParams plan_momentum(const PlannerInputs& in);

/// Momentum plan with the running batch pinned to `batch` (typically 1):
/// solves for the smallest β ∈ [1/2, 1) at which M = batch meets both
/// M ≥ (1−β)λ and the deviation target.
PlannedParams plan_momentum_fixed_batch(PlannerInputs in, std::uint64_t batch);

struct ComplexityReport {
    double predicted_queries = 0.0;
    double eps_exponent = 0.0;  // (3p−2)/(p−1)
    double d_exponent = 0.0;    // p/(2(p−1))
    bool near_singular = false; // p ≤ 1.05
    std::string text;
};

ComplexityReport predicted_complexity(const PlannedParams& params, const PlannerInputs& in);

} // namespace rsczo

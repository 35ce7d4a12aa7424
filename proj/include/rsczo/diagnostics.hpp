#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rsczo/linalg.hpp"
#include "rsczo/optimizer.hpp"
#include "rsczo/oracle.hpp"

namespace rsczo {

/// ⟨g, ∇f⟩ / (‖g‖ ‖∇f‖); empty when either vector is zero.
std::optional<double> cosine_alignment(std::span<const double> g, std::span<const double> grad_true);

/// log10(max_ℓ |Y_ℓ| / median_ℓ |Y_ℓ|) using the lower median for even
/// batches. Empty when the median magnitude is zero.
std::optional<double> outlier_ratio(std::span<const double> raw_scalars);

/// Median of a sample; even length averages the two middle values.
double median(std::vector<double> values);
/// Lower median (element (n−1)/2 of the sorted sample).
double lower_median(std::vector<double> values);
/// Linear-interpolated quantile, q in [0, 1].
double quantile(std::vector<double> values, double q);

struct BatchDiagnostics {
    std::optional<double> cosine;
    std::optional<double> outlier_log_ratio;
    double clipped_fraction = 0.0;
};

BatchDiagnostics batch_diagnostics(const GradientEstimate& estimate, std::span<const double> grad_true);

// ---------------------------------------------------------------------------
// Empirical checks of the analytic inequalities. Each report compares a Monte
// Carlo estimate (empirical_lhs, with standard error `std_error`) against a
// closed-form bound. The empirical side gets 3 standard errors of slack; the
// bound gets none:
//
//     passed  ⟺  empirical_lhs − 3·std_error ≤ bound_rhs
//     margin  =   bound_rhs − (empirical_lhs − 3·std_error)
// ---------------------------------------------------------------------------

inline constexpr double kCheckSlackStdErrors = 3.0;

struct LemmaCheckReport {
    std::string lemma_id;
    double empirical_lhs = 0.0;
    double bound_rhs = 0.0;
    std::size_t n_samples = 0;
    bool passed = false;
    double margin = 0.0;
    double std_error = 0.0;
    std::string detail;  // parameters of the check (model, τ, t, ...)
};

LemmaCheckReport make_report(std::string lemma_id, double lhs, double std_error, double rhs, std::size_t n,
                             std::string detail);

/// Draws one real sample per key.
using ScalarSampler = std::function<double(std::uint64_t key)>;

/// Two-point directional estimator Y at a fixed point x of `problem`.
ScalarSampler directional_sampler(const QuadraticProblem& problem, Vec x, double mu);

/// E|Z − ψ_τ(Z)| ≤ 2^{2p+1}/(p−1) · S^p · τ^{1−p}, for every τ ≥ 4S.
std::vector<LemmaCheckReport> check_clipping_bias(const ScalarSampler& sampler, double S, double p,
                                                  std::span<const double> tau_grid, std::size_t n,
                                                  std::uint64_t key, const std::string& label = {});

/// E[ψ_τ(Z)²] ≤ 64 · S^p · τ^{2−p} · (1 + log(τ/S)), for every τ ≥ 4S and 1 < p ≤ 2.
std::vector<LemmaCheckReport> check_clipped_second_moment(const ScalarSampler& sampler, double S, double p,
                                                          std::span<const double> tau_grid, std::size_t n,
                                                          std::uint64_t key, const std::string& label = {});

/// |f_μ(x) − f(x)| ≤ Lμ²/2 and ‖∇f_μ(x) − ∇f(x)‖ ≤ Lμ on a noiseless quadratic.
/// Because ∇f_μ = ∇f exactly for the quadratic, the gradient check also
/// requires every coordinate of the Monte Carlo estimate d·E[D_μf(x,u)u] to be
/// within 5 standard errors of ∇f(x).
std::vector<LemmaCheckReport> check_smoothing_bias(const QuadraticProblem& problem, std::span<const Vec> x_grid,
                                                   std::span<const double> mu_grid, std::size_t n,
                                                   std::uint64_t key);

/// P(‖∇F(x;ξ) − ∇f(x)‖ > t) ≤ (σ/t)^p, one report per t. The standard error
/// is the binomial one at the bound.
std::vector<LemmaCheckReport> check_weak_tail(const ScalarSampler& noise_norm, double p, double sigma,
                                              std::span<const double> t_grid, std::size_t n, std::uint64_t key,
                                              const std::string& label = {});

/// ‖∇f(x)‖² ≤ 2L(f(x) − f_*). Holds with equality on the quadratic.
bool gradient_bound_from_suboptimality(double grad_norm_sq, double L, double gap, double rel_tol = 1e-12);

// ---------------------------------------------------------------------------
// Cross-seed aggregation.
// ---------------------------------------------------------------------------

struct Histogram {
    std::vector<double> edges;  // size = counts.size() + 1
    std::vector<std::uint64_t> counts;
    std::uint64_t below = 0;
    std::uint64_t above = 0;
};

Histogram make_histogram(std::span<const double> values, double lo, double hi, std::size_t bins);

struct MethodSummary {
    std::string method;
    std::size_t seeds = 0;
    double median_final = 0.0;
    double success_rate = 0.0;
    std::optional<double> median_cosine;
    std::uint64_t total_queries = 0;  // per run (identical across seeds)
    std::vector<double> finals;       // per seed, in seed order
    Histogram outlier_histogram;
};

/// Groups records by (method, seed). The final value of a run is its
/// highest-t record; success means final ‖∇f(x_T)‖ ≤ eps. Output sorted by method.
std::vector<MethodSummary> aggregate_metrics(std::span<const RunRecord> records, double eps);

} // namespace rsczo

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include "rsczo/linalg.hpp"

namespace rsczo {

/// Stochastic zeroth-order oracle: returns F(x; ξ) where ξ is fully determined
/// by `sample_key`. Calling it twice with the same key and different points
/// must use the same ξ (shared randomness).
class Oracle {
public:
    virtual ~Oracle() = default;
    virtual std::size_t dimension() const = 0;
    virtual double evaluate(std::span<const double> x, std::uint64_t sample_key) = 0;
};

enum class NoiseFamily { none, sparse_pareto, weak_l2 };

std::string_view to_string(NoiseFamily family);
NoiseFamily noise_family_from_string(std::string_view name);

struct NoiseModelSpec {
    NoiseFamily family = NoiseFamily::none;
    double p = 1.5;            // tail exponent, sparse_pareto only
    double sigma_scale = 1.0;  // multiplies the noise amplitude

    /// Weak-L_p scale σ: P(‖noise‖ > t) ≤ (σ/t)^p. For both heavy-tailed
    /// families this is exactly sigma_scale.
    double weak_lp_sigma() const noexcept { return family == NoiseFamily::none ? 0.0 : sigma_scale; }
    /// Tail exponent seen by the weak-L_p assumption (2 for weak_l2).
    double tail_exponent() const noexcept { return family == NoiseFamily::weak_l2 ? 2.0 : p; }

    void validate() const;
};

/// Pareto(p) amplitude by inverse CDF: A = U^{-1/p}, U uniform on (0, 1].
double pareto_from_uniform(double p, double u);
double pareto_amplitude(double p, std::uint64_t key);

/// Sparse noise ζ = s·A·e_J stored by its single nonzero coordinate.
struct SparseNoise {
    std::size_t index = 0;
    double value = 0.0;  // s·sigma_scale·A

    Vec dense(std::size_t d) const;
};

SparseNoise sample_sparse_noise(std::size_t d, const NoiseModelSpec& spec, std::uint64_t key);

/// Z with P(|Z| > t) = t^{-2} for t ≥ 1 and a symmetric sign (density |z|^{-3} on |z| ≥ 1).
double sample_weak_l2_noise(std::uint64_t key);

/// f(x) = ½‖x‖² observed through F(x; ζ) = ½‖x‖² + ⟨ζ, x⟩.
///
/// For sparse_pareto, ζ = s·A·e_J; for weak_l2, ζ = Z·e_1 (f₀ = ½‖x‖²).
/// L = 1, f_* = 0, ∇f(x) = x.
class QuadraticProblem final : public Oracle {
public:
    QuadraticProblem(std::size_t d, NoiseModelSpec noise, Vec x0);

    std::size_t dimension() const override { return d_; }
    double evaluate(std::span<const double> x, std::uint64_t sample_key) override;

    /// Noise realization ζ(key) in sparse form (value 0 for family none).
    SparseNoise noise(std::uint64_t sample_key) const;

    double mean_value(std::span<const double> x) const;
    Vec true_gradient(std::span<const double> x) const;

    static constexpr double smoothness() noexcept { return 1.0; }
    static constexpr double f_star() noexcept { return 0.0; }
    double delta0() const;

    const NoiseModelSpec& noise_spec() const noexcept { return noise_; }
    const Vec& x0() const noexcept { return x0_; }

private:
    std::size_t d_;
    NoiseModelSpec noise_;
    Vec x0_;
};

/// Wraps an oracle and counts evaluations.
class CountingOracle final : public Oracle {
public:
    explicit CountingOracle(Oracle& inner) : inner_(inner) {}

    std::size_t dimension() const override { return inner_.dimension(); }
    double evaluate(std::span<const double> x, std::uint64_t sample_key) override
    {
        ++count_;
        return inner_.evaluate(x, sample_key);
    }

    std::uint64_t count() const noexcept { return count_; }

private:
    Oracle& inner_;
    std::uint64_t count_ = 0;
};

} // namespace rsczo

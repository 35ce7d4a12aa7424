#include "rsczo/planner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "rsczo/errors.hpp"

namespace rsczo {

namespace {

constexpr double kSqrt3 = 1.7320508075688772;

// Largest integer-valued double that still converts to uint64 exactly.
constexpr double kMaxCount = 18446744073709549568.0;

std::uint64_t checked_count(double value, const char* what)
{
    if (!(value <= kMaxCount))
        throw InfeasiblePlan(std::string(what) + " exceeds the representable range", value);
    return static_cast<std::uint64_t>(value);
}

} // namespace

void PlannerInputs::validate() const
{
    if (!(L > 0.0))
        throw InvalidArgument("L must be positive");
    if (!(Delta0 >= 0.0))
        throw InvalidArgument("Delta0 must be non-negative");
    if (!(sigma >= 0.0))
        throw InvalidArgument("sigma must be non-negative");
    if (!(p > 1.0 && p <= 2.0))
        throw InvalidArgument("tail exponent p must lie in (1, 2]");
    if (!(d >= 1.0))
        throw InvalidArgument("dimension d must be at least 1");
    if (!(eps > 0.0))
        throw InvalidArgument("eps must be positive");
    if (!(delta > 0.0 && delta <= 1.0))
        throw InvalidArgument("delta must lie in (0, 1]");
    if (mu && !(*mu > 0.0))
        throw InvalidArgument("mu must be positive");
    if (max_batch == 0)
        throw InvalidArgument("max_batch must be positive");
}

double PlannerInputs::resolved_mu() const { return mu ? *mu : eps / (4.0 * L * d); }

double clipping_constant(double p) { return 120.0 + std::pow(2.0, 4.0 - p) / (p - 1.0); }

double bar_delta0(double L, double Delta0, double mu) { return Delta0 + L * mu * mu / 2.0; }

double smoothing_scale(double L, double bar_Delta0, double sigma, double d, double mu)
{
    return (std::sqrt(L * bar_Delta0) + sigma) / std::sqrt(d) + L * mu;
}

double deviation_level(double C_p, double d, double S_mu, double p, double c, double M)
{
    return C_p * d * S_mu * std::pow(c / M, (p - 1.0) / p) * std::sqrt(1.0 + std::log(M / c));
}

double deviation_monotone_from(double p, double c)
{
    return c * std::exp(std::max(0.0, p / (2.0 * (p - 1.0)) - 1.0));
}

std::uint64_t smallest_batch(double C_p, double d, double S_mu, double p, double c, double L_mu, double target,
                             std::uint64_t max_batch)
{
    const auto eta = [&](std::uint64_t M) {
        return deviation_level(C_p, d, S_mu, p, c, static_cast<double>(M)) + L_mu;
    };
    const auto feasible = [&](std::uint64_t M) { return eta(M) <= target; };

    const double lower = std::max(1.0, std::ceil(c));
    if (lower > static_cast<double>(max_batch))
        throw InfeasiblePlan("batch lower bound exceeds max_batch", eta(max_batch));
    const auto first = static_cast<std::uint64_t>(lower);
    if (feasible(first))
        return first;

    // η₀ rises on [c, M*] and falls beyond it, so once the lower bound fails
    // the answer lies past M*, where feasibility is monotone.
    const double knee = std::ceil(deviation_monotone_from(p, c));
    std::uint64_t lo = first;
    if (knee > lower) {
        if (knee >= static_cast<double>(max_batch)) {
            if (!feasible(max_batch))
                throw InfeasiblePlan("no batch size up to max_batch meets the deviation target", eta(max_batch));
            return max_batch;
        }
        lo = static_cast<std::uint64_t>(knee);
        if (feasible(lo))
            return lo;
    }

    // Doubling, then bisection on (lo, hi] with feasible(hi) and !feasible(lo).
    std::uint64_t hi = lo;
    for (;;) {
        if (hi >= max_batch / 2) {
            hi = max_batch;
            if (!feasible(hi))
                throw InfeasiblePlan("no batch size up to max_batch meets the deviation target", eta(hi));
            break;
        }
        hi *= 2;
        if (feasible(hi))
            break;
        lo = hi;
    }
    while (hi - lo > 1) {
        const std::uint64_t mid = lo + (hi - lo) / 2;
        if (feasible(mid))
            hi = mid;
        else
            lo = mid;
    }
    return hi;
}

PlannedParams plan_base(const PlannerInputs& in)
{
    in.validate();
    if (in.beta)
        throw InvalidArgument("plan_base takes no momentum parameter");

    PlannedParams out;
    out.mu = in.resolved_mu();
    out.bar_Delta0 = bar_delta0(in.L, in.Delta0, out.mu);
    out.S_mu = smoothing_scale(in.L, out.bar_Delta0, in.sigma, in.d, out.mu);
    out.C_p = clipping_constant(in.p);
    out.trivial_regime = in.eps * in.eps > 32.0 * in.L * out.bar_Delta0;
    out.alpha = 1.0 / (4.0 * in.L);
    out.T = std::max<std::uint64_t>(
        3, checked_count(std::ceil(32.0 * in.L * out.bar_Delta0 / (in.eps * in.eps)), "iteration count T"));
    out.lambda = std::log(static_cast<double>(out.T) / in.delta);

    out.M = smallest_batch(out.C_p, in.d, out.S_mu, in.p, out.lambda, in.L * out.mu, in.eps / 4.0, in.max_batch);
    const double M = static_cast<double>(out.M);
    out.eta0 = deviation_level(out.C_p, in.d, out.S_mu, in.p, out.lambda, M);
    out.eta = out.eta0 + in.L * out.mu;
    out.tau = 8.0 * out.S_mu * std::pow(M / out.lambda, 1.0 / in.p);
    out.predicted_queries = 2.0 * M * static_cast<double>(out.T);
    return out;
}

namespace {

void check_momentum_inputs(const PlannerInputs& in)
{
    in.validate();
    if (!in.beta)
        throw InvalidArgument("plan_momentum needs beta");
    if (!(*in.beta >= 0.5 && *in.beta < 1.0))
        throw InvalidArgument("momentum plans require beta in [1/2, 1)");
    if (!(in.eps < 1.0))
        throw InvalidArgument("momentum plans require eps < 1");
    if (in.mu && *in.mu > in.eps / (4.0 * in.L * in.d))
        throw InvalidArgument("momentum plans require mu <= eps/(4Ld)");
}

// Fills the β-dependent closed forms (everything except M and M0).
void momentum_closed_forms(const PlannerInputs& in, double one_minus_beta, PlannedParams& out)
{
    out.momentum = true;
    out.constant_approximate = true;
    out.mu = in.resolved_mu();
    out.beta = 1.0 - one_minus_beta;
    out.bar_Delta0 = bar_delta0(in.L, in.Delta0, out.mu);
    out.S_mu = smoothing_scale(in.L, out.bar_Delta0, in.sigma, in.d, out.mu);
    out.C_p = clipping_constant(in.p);
    out.trivial_regime = in.eps * in.eps > 32.0 * in.L * out.bar_Delta0;
    out.alpha = one_minus_beta / (16.0 * kSqrt3 * in.L);
    out.T = checked_count(
                std::ceil(512.0 * kSqrt3 * in.L * out.bar_Delta0 / (one_minus_beta * in.eps * in.eps)),
                "iteration count T") +
            2;
    out.lambda = std::log(2.0 * static_cast<double>(out.T) / in.delta);
    out.lambda0 = std::log(2.0 / in.delta);
}

void momentum_batches(const PlannerInputs& in, double one_minus_beta, PlannedParams& out)
{
    const double c = one_minus_beta * out.lambda;
    const double M = static_cast<double>(out.M);
    const double M0 = static_cast<double>(out.M0);
    out.eta0 = deviation_level(out.C_p, in.d, out.S_mu, in.p, c, M);
    out.eta = out.eta0 + in.L * out.mu;
    out.eta0_warm = deviation_level(out.C_p, in.d, out.S_mu, in.p, out.lambda0, M0);
    out.tau = 8.0 * out.S_mu * std::pow(M / c, 1.0 / in.p);
    out.tau0 = 8.0 * out.S_mu * std::pow(M0 / out.lambda0, 1.0 / in.p);
    out.predicted_queries = 2.0 * M0 + 2.0 * M * (static_cast<double>(out.T) - 1.0);
}

} // namespace

PlannedParams plan_momentum(const PlannerInputs& in)
{
    check_momentum_inputs(in);
    const double q = 1.0 - *in.beta;
    PlannedParams out;
    momentum_closed_forms(in, q, out);
    const double target = in.eps / 4.0;
    const double L_mu = in.L * out.mu;
    out.M = smallest_batch(out.C_p, in.d, out.S_mu, in.p, q * out.lambda, L_mu, target, in.max_batch);
    out.M0 = smallest_batch(out.C_p, in.d, out.S_mu, in.p, out.lambda0, L_mu, target, in.max_batch);
    momentum_batches(in, q, out);
    return out;
}

PlannedParams plan_momentum_fixed_batch(PlannerInputs in, std::uint64_t batch)
{
    in.beta = 0.5;
    check_momentum_inputs(in);
    if (batch == 0)
        throw InvalidArgument("batch must be positive");
    const double M = static_cast<double>(batch);
    const double target = in.eps / 4.0;

    // Feasibility of M = batch is monotone in q = 1−β: smaller q shrinks the
    // ratio (1−β)λ/M faster than λ = log(2T/δ) grows.
    const auto evaluate = [&](double q, PlannedParams& out) {
        momentum_closed_forms(in, q, out);
        const double c = q * out.lambda;
        if (c > M)
            return false;
        return deviation_level(out.C_p, in.d, out.S_mu, in.p, c, M) + in.L * out.mu <= target;
    };

    PlannedParams trial;
    double q_hi = 0.5;
    if (!evaluate(q_hi, trial)) {
        double q_lo = q_hi;
        bool found = false;
        while (q_lo > 1e-300) {
            q_lo *= 0.5;
            try {
                if (evaluate(q_lo, trial)) {
                    found = true;
                    break;
                }
            } catch (const InfeasiblePlan& e) {
                char q_text[32];
                std::snprintf(q_text, sizeof q_text, "%.3g", q_lo);
                throw InfeasiblePlan(std::string("momentum plan with fixed batch: ") + e.what() +
                                         " before the deviation target is met (1-beta = " +
                                         q_text + ")",
                                     deviation_level(trial.C_p, in.d, trial.S_mu, in.p, q_lo * trial.lambda, M) +
                                         in.L * trial.mu);
            }
            q_hi = q_lo;
        }
        if (!found)
            throw InfeasiblePlan("no beta < 1 makes the fixed batch feasible", 0.0);
        // bisection in log q between feasible q_lo and infeasible q_hi
        for (int i = 0; i < 200 && q_hi / q_lo > 1.0 + 1e-12; ++i) {
            const double mid = std::sqrt(q_lo * q_hi);
            if (evaluate(mid, trial))
                q_lo = mid;
            else
                q_hi = mid;
        }
        q_hi = q_lo;
    }

    // Report a β whose 1 − β is exactly the q used below (Sterbenz: exact for
    // β ∈ [1/2, 1]), nudging β up by ulps if rounding lost feasibility.
    double beta = 1.0 - q_hi;
    while (beta < 1.0 && !evaluate(1.0 - beta, trial))
        beta = std::nextafter(beta, 1.0);
    if (!(beta < 1.0))
        throw InfeasiblePlan("no representable beta < 1 makes the fixed batch feasible", 0.0);
    q_hi = 1.0 - beta;

    PlannedParams out;
    momentum_closed_forms(in, q_hi, out);
    out.M = batch;
    out.M0 = smallest_batch(out.C_p, in.d, out.S_mu, in.p, out.lambda0, in.L * out.mu, target, in.max_batch);
    momentum_batches(in, q_hi, out);
    return out;
}

ComplexityReport predicted_complexity(const PlannedParams& params, const PlannerInputs& in)
{
    ComplexityReport r;
    r.predicted_queries = params.predicted_queries;
    r.eps_exponent = (3.0 * in.p - 2.0) / (in.p - 1.0);
    r.d_exponent = in.p / (2.0 * (in.p - 1.0));
    r.near_singular = in.p <= 1.05;

    std::ostringstream os;
    os.precision(6);
    os << (params.momentum ? "Q_MOM = 2*M0 + 2*M*(T-1) = " : "2*M*T = ") << params.predicted_queries << '\n';
    os << "order: MT ~ eps^-" << r.eps_exponent << " * d^" << r.d_exponent << " (p = " << in.p << ")";
    if (r.near_singular)
        os << "\nwarning: p <= 1.05 is near-singular; exponents diverge as p -> 1";
    r.text = os.str();
    return r;
}

} // namespace rsczo

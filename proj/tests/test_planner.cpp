#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "plan_oracle.hpp"
#include "rsczo/errors.hpp"
#include "rsczo/planner.hpp"

using namespace rsczo;

namespace {

PlannerInputs to_inputs(const planoracle::Inputs& o)
{
    PlannerInputs in;
    in.L = o.L;
    in.Delta0 = o.Delta0;
    in.sigma = o.sigma;
    in.p = o.p;
    in.d = o.d;
    in.eps = o.eps;
    in.delta = o.delta;
    in.beta = o.beta;
    in.max_batch = std::uint64_t{1} << 62;
    return in;
}

planoracle::Inputs random_inputs(std::mt19937_64& gen, bool momentum)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    planoracle::Inputs o{};
    o.L = 0.5 + 1.5 * u(gen);
    o.Delta0 = 0.05 + 2.0 * u(gen);
    o.sigma = 0.5 * u(gen);
    o.p = 1.3 + 0.7 * u(gen);
    o.d = std::floor(1.0 + 30.0 * u(gen));
    o.eps = 0.3 + 0.6 * u(gen);
    o.delta = 0.01 + 0.2 * u(gen);
    if (momentum)
        o.beta = 0.5 + 0.45 * u(gen);
    return o;
}

constexpr double kTol = 1e-12;

} // namespace

TEST_SUITE("planner") {

TEST_CASE("constants")
{
    CHECK(clipping_constant(2.0) == 124.0);
    CHECK(clipping_constant(1.5) == doctest::Approx(120.0 + std::pow(2.0, 2.5) / 0.5));
    PlannerInputs in;
    in.beta = 0.5;
    in.eps = 0.9;
    in.d = 4.0;
    in.sigma = 0.01;
    in.Delta0 = 0.001;
    in.max_batch = std::uint64_t{1} << 62;
    const PlannedParams m = plan_momentum(in);
    CHECK(planoracle::rel_err(m.alpha, 1.0 / (32.0 * std::sqrt(3.0))) < kTol);
    CHECK(m.alpha == doctest::Approx(0.0180422).epsilon(1e-6));
}

TEST_CASE("base plans match the straight-line re-derivation")
{
    std::mt19937_64 gen(20240601);
    int compared = 0;
    while (compared < 25) {
        const planoracle::Inputs o = random_inputs(gen, false);
        PlannedParams got;
        try {
            got = plan_base(to_inputs(o));
        } catch (const InfeasiblePlan&) {
            continue;
        }
        ++compared;
        const planoracle::Chain k = planoracle::base_chain(o);
        CHECK(planoracle::rel_err(got.alpha, k.alpha) < kTol);
        CHECK(static_cast<double>(got.T) == k.T);
        CHECK(planoracle::rel_err(got.lambda, k.lambda) < kTol);
        CHECK(planoracle::rel_err(got.C_p, k.C_p) < kTol);
        CHECK(planoracle::is_smallest_batch(k, o, k.c, static_cast<double>(got.M)));
        const double M = static_cast<double>(got.M);
        CHECK(planoracle::rel_err(got.tau, planoracle::tau(k, o, k.c, M)) < kTol);
        CHECK(planoracle::rel_err(got.eta0, planoracle::eta0(k, o, k.c, M)) < kTol);
        CHECK(planoracle::rel_err(got.predicted_queries, 2.0 * M * k.T) < kTol);
    }
}

TEST_CASE("momentum plans match the straight-line re-derivation")
{
    std::mt19937_64 gen(777);
    int compared = 0;
    while (compared < 25) {
        const planoracle::Inputs o = random_inputs(gen, true);
        PlannedParams got;
        try {
            got = plan_momentum(to_inputs(o));
        } catch (const InfeasiblePlan&) {
            continue;
        }
        ++compared;
        const planoracle::Chain k = planoracle::momentum_chain(o);
        CHECK(planoracle::rel_err(got.alpha, k.alpha) < kTol);
        CHECK(static_cast<double>(got.T) == k.T);
        CHECK(planoracle::rel_err(got.lambda, k.lambda) < kTol);
        CHECK(planoracle::rel_err(got.lambda0, k.lambda0) < kTol);
        const double M = static_cast<double>(got.M), M0 = static_cast<double>(got.M0);
        CHECK(planoracle::is_smallest_batch(k, o, k.c, M));
        CHECK(planoracle::is_smallest_batch(k, o, k.lambda0, M0));
        CHECK(planoracle::rel_err(got.tau, planoracle::tau(k, o, k.c, M)) < kTol);
        CHECK(planoracle::rel_err(got.tau0, planoracle::tau(k, o, k.lambda0, M0)) < kTol);
        CHECK(planoracle::rel_err(got.predicted_queries, 2.0 * M0 + 2.0 * M * (k.T - 1.0)) < kTol);
    }
}

TEST_CASE("unit ratio gives tau = 8 S")
{
    // deviation_level and tau share the ratio; at M = c, (M/c)^{1/p} = 1.
    const double S = 0.37, c = 5.0;
    CHECK(8.0 * S * std::pow(c / c, 1.0 / 1.5) == 8.0 * S);
    CHECK(deviation_level(124.0, 10.0, S, 2.0, c, c) == doctest::Approx(124.0 * 10.0 * S));
}

TEST_CASE("deviation level is decreasing past the knee and rising before it")
{
    for (double p : {1.1, 1.2, 4.0 / 3.0, 1.5, 2.0}) {
        const double c = 7.3;
        const double knee = deviation_monotone_from(p, c);
        double prev = deviation_level(124.0, 3.0, 1.0, p, c, knee);
        for (double M = knee * 1.01; M < knee * 1e6; M *= 1.07) {
            const double v = deviation_level(124.0, 3.0, 1.0, p, c, M);
            CHECK(v < prev);
            prev = v;
        }
        if (knee > c * 1.01)
            CHECK(deviation_level(124.0, 3.0, 1.0, p, c, c) < deviation_level(124.0, 3.0, 1.0, p, c, knee));
    }
    // knee = c·exp(p/(2(p−1)) − 1): c itself at p = 2, below e·c once p ≥ 4/3
    CHECK(deviation_monotone_from(2.0, 2.0) == 2.0);
    CHECK(deviation_monotone_from(1.5, 2.0) == doctest::Approx(2.0 * std::exp(0.5)));
    CHECK(deviation_monotone_from(4.0 / 3.0, 1.0) == doctest::Approx(std::exp(1.0)));
    CHECK(deviation_monotone_from(1.2, 1.0) == doctest::Approx(std::exp(2.0)));
}

TEST_CASE("smallest batch against a brute-force scan")
{
    for (double p : {1.15, 1.5, 2.0}) {
        for (double target : {600.0, 900.0, 1500.0}) {
            const double c = 3.0;
            std::uint64_t brute = 0;
            for (std::uint64_t M = 3; M < 2000000; ++M) {
                if (deviation_level(124.0, 2.0, 1.0, p, c, static_cast<double>(M)) <= target) {
                    brute = M;
                    break;
                }
            }
            if (brute == 0) {
                CHECK_THROWS_AS(smallest_batch(124.0, 2.0, 1.0, p, c, 0.0, target, 2000000), InfeasiblePlan);
            } else {
                CHECK(smallest_batch(124.0, 2.0, 1.0, p, c, 0.0, target, 2000000) == brute);
            }
        }
    }
}

TEST_CASE("infeasible ceiling reports the limiting eta")
{
    PlannerInputs in;
    in.Delta0 = 0.5;
    in.p = 1.5;
    in.d = 100;
    in.eps = 0.1;
    in.max_batch = 1024;
    try {
        plan_base(in);
        FAIL("expected InfeasiblePlan");
    } catch (const InfeasiblePlan& e) {
        CHECK(e.limiting_eta() > in.eps / 4.0);
    }
}

TEST_CASE("scaling in eps")
{
    PlannerInputs in;
    in.sigma = 0.1;
    in.p = 2.0;
    in.d = 2.0;
    in.max_batch = std::uint64_t{1} << 62;
    in.eps = 0.4;
    const PlannedParams a = plan_base(in);
    in.eps = 0.2;
    const PlannedParams b = plan_base(in);
    CHECK(b.T > a.T);
    CHECK(b.M > a.M);
    CHECK(b.predicted_queries > a.predicted_queries);
}

TEST_CASE("input validation and flags")
{
    PlannerInputs in;
    in.beta = 0.4;
    CHECK_THROWS_AS(plan_momentum(in), InvalidArgument);
    in.beta = 0.5;
    CHECK_THROWS_AS(plan_base(in), InvalidArgument);
    in.beta.reset();
    in.p = 2.5;
    CHECK_THROWS_AS(plan_base(in), InvalidArgument);
    in.p = 1.5;
    in.beta = 0.5;
    in.mu = 1.0;
    in.eps = 0.5;
    CHECK_THROWS_AS(plan_momentum(in), InvalidArgument);

    PlannerInputs trivial;
    trivial.Delta0 = 1e-4;
    trivial.eps = 0.9;
    trivial.sigma = 0.0;
    trivial.d = 4.0;  // at d = 1 the auto μ puts Lμ exactly on the ε/4 target
    trivial.max_batch = std::uint64_t{1} << 62;
    const PlannedParams t = plan_base(trivial);
    CHECK(t.trivial_regime);
    CHECK(t.T == 3);
}

TEST_CASE("fixed-batch momentum solves for beta")
{
    PlannerInputs in;
    in.sigma = 0.01;
    in.p = 2.0;
    in.d = 4.0;
    in.Delta0 = 0.001;
    in.eps = 0.9;
    in.max_batch = std::uint64_t{1} << 62;
    const PlannedParams got = plan_momentum_fixed_batch(in, 1);
    CHECK(got.M == 1);
    CHECK(got.beta >= 0.5);
    CHECK(got.beta < 1.0);
    planoracle::Inputs o{in.L, in.Delta0, in.sigma, in.p, in.d, in.eps, in.delta, got.beta};
    const planoracle::Chain k = planoracle::momentum_chain(o);
    CHECK(k.c <= 1.0);
    CHECK(planoracle::eta0(k, o, k.c, 1.0) + in.L * k.mu <= in.eps / 4.0);
    CHECK(planoracle::rel_err(got.tau, planoracle::tau(k, o, k.c, 1.0)) < kTol);
    CHECK(planoracle::rel_err(got.tau0, planoracle::tau(k, o, k.lambda0, static_cast<double>(got.M0))) < kTol);
}

TEST_CASE("complexity exponents")
{
    PlannerInputs in;
    in.p = 2.0;
    PlannedParams params;
    params.predicted_queries = 1234;
    const ComplexityReport r2 = predicted_complexity(params, in);
    CHECK(r2.eps_exponent == 4.0);
    CHECK(r2.d_exponent == 1.0);
    CHECK_FALSE(r2.near_singular);
    in.p = 1.5;
    const ComplexityReport r15 = predicted_complexity(params, in);
    CHECK(r15.eps_exponent == doctest::Approx(5.0));
    CHECK(r15.d_exponent == doctest::Approx(1.5));
    in.p = 1.04;
    CHECK(predicted_complexity(params, in).near_singular);
}

TEST_CASE("golden plan for the representative inputs")
{
    PlannerInputs in;
    in.Delta0 = 0.5;
    in.p = 1.5;
    in.d = 100;
    in.eps = 0.1;
    in.max_batch = std::uint64_t{1} << 62;
    const PlannedParams got = plan_base(in);

    std::ifstream f(RSCZO_TEST_DATA_DIR "/golden_plan_base.txt");
    REQUIRE(f.good());
    std::string key;
    double value;
    int seen = 0;
    while (f >> key >> value) {
        ++seen;
        const auto check = [&](const char* name, double actual) {
            if (key == name)
                CHECK_MESSAGE(planoracle::rel_err(actual, value) < 1e-12, key);
        };
        check("mu", got.mu);
        check("S_mu", got.S_mu);
        check("C_p", got.C_p);
        check("alpha", got.alpha);
        check("T", static_cast<double>(got.T));
        check("lambda", got.lambda);
        check("M", static_cast<double>(got.M));
        check("tau", got.tau);
        check("eta0", got.eta0);
    }
    CHECK(seen == 9);
}

}

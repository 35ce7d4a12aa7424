// Acceptance run: one PASS/FAIL line per criterion and a failure count.
// Usage: acceptance [--only N,...] [--jobs J] [--work DIR] [--strict]
// Exit status is 0 once every criterion has been evaluated; --strict makes any
// FAIL line a non-zero exit.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <unistd.h>

#include "plan_oracle.hpp"
#include "rsczo/diagnostics.hpp"
#include "rsczo/errors.hpp"
#include "rsczo/estimator.hpp"
#include "rsczo/harness.hpp"
#include "rsczo/optimizer.hpp"
#include "rsczo/planner.hpp"
#include "stats.hpp"

using namespace rsczo;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::size_t g_jobs = 1;
fs::path g_work;

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

const SummaryRow* find_row(const std::vector<SummaryRow>& rows, const std::string& cell, const std::string& method)
{
    for (const auto& r : rows)
        if (r.cell_id == cell && r.method == method)
            return &r;
    return nullptr;
}

bool within_factor(double v, double ref, double factor) { return v >= ref / factor && v <= ref * factor; }

// 1 ------------------------------------------------------------------------
Outcome unbiasedness()
{
    const auto t0 = Clock::now();
    const std::size_t d = 10, n = 100000;
    QuadraticProblem prob(d, {}, Vec(d, 0.0));
    const Vec x{1.0, -0.5, 2.0, 0.0, 0.3, -1.2, 0.7, 0.0, -2.5, 1.1};
    std::vector<teststats::Running> acc(d);
    for (std::uint64_t k = 0; k < n; ++k) {
        const GradientEstimate g =
            estimate_gradient(prob, x, 1e-3, 1, EstimatorMode::raw, {}, StreamKey{2024, 0, k, 0});
        for (std::size_t j = 0; j < d; ++j)
            acc[j].add(g.g[j]);
    }
    double worst = 0.0;
    for (std::size_t j = 0; j < d; ++j)
        worst = std::max(worst, std::abs(acc[j].mean() - x[j]) / acc[j].std_error());
    const double secs = seconds_since(t0);
    return {worst <= 5.0 && secs < 10.0, fmt("max |mean - grad|/se = %.2f (limit 5), %.2f s (limit 10)", worst, secs)};
}

// 2 ------------------------------------------------------------------------
Outcome lemma_suite()
{
    const auto t0 = Clock::now();
    const auto reports = run_check_suite(1000000, 17);
    std::size_t failed = 0;
    std::set<std::string> kinds;
    for (const auto& r : reports) {
        failed += !r.passed;
        kinds.insert(r.lemma_id);
        if (!r.passed)
            std::printf("    failed: %s %s lhs=%.6g rhs=%.6g\n", r.lemma_id.c_str(), r.detail.c_str(),
                        r.empirical_lhs, r.bound_rhs);
    }
    const double secs = seconds_since(t0);
    const bool all_kinds = kinds.size() == 5;  // value and gradient smoothing, bias, second moment, tail
    return {failed == 0 && all_kinds && secs < 120.0,
            fmt("%zu/%zu reports passed, %zu check kinds, %.1f s (limit 120)", reports.size() - failed,
                reports.size(), kinds.size(), secs)};
}

// 3, 4, 11 share two executions of `rep` through the CLI ---------------------
struct RepRuns {
    bool ok = false;
    std::string error;
    std::vector<SummaryRow> summary;
    double seconds = 0.0;
    bool identical = false;
};

RepRuns& rep_runs()
{
    static RepRuns runs = [] {
        RepRuns r;
        const fs::path a = g_work / "rep_a", b = g_work / "rep_b";
        fs::remove_all(a);
        fs::remove_all(b);
        const std::string cli = RSCZO_CLI;
        const auto launch = [&](const fs::path& out) {
            const std::string cmd = cli + " rep --seed 0 --jobs " + std::to_string(g_jobs) + " --out " +
                                    out.string() + " > " + (out.string() + ".log") + " 2>&1";
            return std::system(cmd.c_str());
        };
        const auto t0 = Clock::now();
        if (launch(a) != 0) {
            r.error = "rep run failed; see " + a.string() + ".log";
            return r;
        }
        r.seconds = seconds_since(t0);
        if (launch(b) != 0) {
            r.error = "second rep run failed; see " + b.string() + ".log";
            return r;
        }
        std::ifstream in(a / "summary.csv");
        r.summary = parse_summary_csv(in);
        r.identical = slurp(a / "records.csv") == slurp(b / "records.csv") &&
                      slurp(a / "summary.csv") == slurp(b / "summary.csv") && !slurp(a / "records.csv").empty();
        r.ok = true;
        return r;
    }();
    return runs;
}

Outcome representative()
{
    RepRuns& r = rep_runs();
    if (!r.ok)
        return {false, r.error};
    const SummaryRow* raw = find_row(r.summary, "rep", "raw");
    const SummaryRow* vec = find_row(r.summary, "rep", "vector_clip");
    const SummaryRow* sc = find_row(r.summary, "rep", "scalar_clip");
    if (!raw || !vec || !sc)
        return {false, "summary.csv lacks a method row"};
    const bool rates = sc->success_rate == 1.0 && raw->success_rate == 0.0 && vec->success_rate <= 0.10;
    const bool medians = within_factor(raw->median_final, 0.662, 2.0) && within_factor(vec->median_final, 0.142, 2.0) &&
                         within_factor(sc->median_final, 0.065, 2.0);
    return {rates && medians,
            fmt("success raw/vector/scalar = %.2f/%.2f/%.2f; medians %.4f/%.4f/%.4f (refs 0.662/0.142/0.065, x2); "
                "rep %.0f s at %zu jobs",
                raw->success_rate, vec->success_rate, sc->success_rate, raw->median_final, vec->median_final,
                sc->median_final, r.seconds, g_jobs)};
}

Outcome cosine_mechanism()
{
    RepRuns& r = rep_runs();
    if (!r.ok)
        return {false, r.error};
    const SummaryRow* raw = find_row(r.summary, "rep", "raw");
    const SummaryRow* vec = find_row(r.summary, "rep", "vector_clip");
    const SummaryRow* sc = find_row(r.summary, "rep", "scalar_clip");
    if (!raw || !vec || !sc || !raw->median_cosine || !vec->median_cosine || !sc->median_cosine)
        return {false, "missing median_cosine"};
    const double gap = *sc->median_cosine - *vec->median_cosine;
    const double same = std::abs(*vec->median_cosine - *raw->median_cosine);
    return {gap >= 0.15 && same <= 0.03,
            fmt("cosine raw/vector/scalar = %.4f/%.4f/%.4f; scalar - vector = %.4f (>= 0.15), |vector - raw| = %.4f "
                "(<= 0.03)",
                *raw->median_cosine, *vec->median_cosine, *sc->median_cosine, gap, same)};
}

Outcome determinism()
{
    RepRuns& r = rep_runs();
    if (!r.ok)
        return {false, r.error};
    return {r.identical, r.identical ? "records.csv and summary.csv byte-identical across two rep executions"
                                     : "rep outputs differ between executions"};
}

// 5 ------------------------------------------------------------------------
Outcome direction_preservation()
{
    const auto t0 = Clock::now();
    std::mt19937_64 gen(55);
    std::normal_distribution<double> n01;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    std::size_t count = 0;
    while (count < 10000) {
        Vec g(1 + gen() % 200);
        for (auto& v : g)
            v = n01(gen) * std::exp(4.0 * n01(gen));
        const double norm = norm2(g);
        const double r = norm * u(gen);
        if (!(r > 0.0 && norm > r))
            continue;
        ++count;
        const Vec c = vector_clip(g, r);
        double dot_gc = 0, nc = 0, ng = 0;  // independent cosine
        for (std::size_t i = 0; i < g.size(); ++i) {
            dot_gc += g[i] * c[i];
            nc += c[i] * c[i];
            ng += g[i] * g[i];
        }
        worst = std::max(worst, std::abs(dot_gc / (std::sqrt(nc) * std::sqrt(ng)) - 1.0));
    }
    const double secs = seconds_since(t0);
    return {worst <= 1e-12 && secs < 1.0, fmt("max |cos - 1| = %.3g over 10^4 pairs (limit 1e-12), %.3f s", worst, secs)};
}

// 6, 7 -----------------------------------------------------------------------
ExperimentConfig sweep_config()
{
    ExperimentConfig c;
    c.jobs = g_jobs;
    return c;
}

bool ordered(const std::vector<SummaryRow>& rows, const std::string& cell, std::string& why)
{
    const SummaryRow* raw = find_row(rows, cell, "raw");
    const SummaryRow* vec = find_row(rows, cell, "vector_clip");
    const SummaryRow* sc = find_row(rows, cell, "scalar_clip");
    if (!raw || !vec || !sc) {
        why += cell + ": missing rows; ";
        return false;
    }
    why += fmt("%s scalar/vector/raw = %.4f/%.4f/%.4f; ", cell.c_str(), sc->median_final, vec->median_final,
               raw->median_final);
    return sc->median_final < vec->median_final && vec->median_final < raw->median_final;
}

Outcome dimension_sweep()
{
    const auto t0 = Clock::now();
    const std::vector<std::size_t> dims{25, 50, 100, 200};
    const std::map<std::size_t, double> ref{{25, 0.036}, {50, 0.047}, {100, 0.065}, {200, 0.090}};
    const SweepResult res = sweep_dimension(sweep_config(), dims);
    bool pass = true;
    std::string why;
    for (std::size_t d : dims) {
        const std::string cell = dimension_cell_id(d);
        pass &= ordered(res.summary, cell, why);
        const SummaryRow* sc = find_row(res.summary, cell, "scalar_clip");
        if (!sc || !within_factor(sc->median_final, ref.at(d), 2.0)) {
            pass = false;
            why += fmt("[scalar at d=%zu outside x2 of %.3f] ", d, ref.at(d));
        }
    }
    return {pass, why + fmt("%.0f s", seconds_since(t0))};
}

Outcome tail_sweep()
{
    const auto t0 = Clock::now();
    const std::vector<double> ps{1.2, 1.5, 1.8, 2.5};
    const SweepResult res = sweep_tail(sweep_config(), ps);
    bool pass = true;
    std::string why;
    double prev_ratio = INFINITY;
    for (double p : ps) {
        const std::string cell = tail_cell_id(p);
        pass &= ordered(res.summary, cell, why);
        const SummaryRow* raw = find_row(res.summary, cell, "raw");
        const SummaryRow* sc = find_row(res.summary, cell, "scalar_clip");
        if (!raw || !sc) {
            pass = false;
            continue;
        }
        const double ratio = raw->median_final / sc->median_final;
        why += fmt("ratio %.2f; ", ratio);
        if (!(ratio < prev_ratio))
            pass = false;
        prev_ratio = ratio;
    }
    return {pass, why + fmt("(reference ratios 54.2/10.2/5.2/2.2) %.0f s", seconds_since(t0))};
}

// 8 ------------------------------------------------------------------------
Outcome planner_arithmetic()
{
    std::mt19937_64 gen(8);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    std::size_t compared = 0, batch_mismatch = 0, skipped = 0;
    for (int momentum = 0; momentum < 2; ++momentum) {
        std::size_t n = 0;
        while (n < 25) {
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
            PlannedParams got;
            try {
                got = momentum ? plan_momentum(in) : plan_base(in);
            } catch (const InfeasiblePlan&) {
                ++skipped;
                continue;
            }
            ++n;
            ++compared;
            const planoracle::Chain k = momentum ? planoracle::momentum_chain(o) : planoracle::base_chain(o);
            const double M = static_cast<double>(got.M);
            std::vector<double> errs{planoracle::rel_err(got.alpha, k.alpha),
                                     planoracle::rel_err(static_cast<double>(got.T), k.T),
                                     planoracle::rel_err(got.lambda, k.lambda),
                                     planoracle::rel_err(got.tau, planoracle::tau(k, o, k.c, M))};
            batch_mismatch += !planoracle::is_smallest_batch(k, o, k.c, M);
            if (momentum) {
                const double M0 = static_cast<double>(got.M0);
                errs.push_back(planoracle::rel_err(got.lambda0, k.lambda0));
                errs.push_back(planoracle::rel_err(got.tau0, planoracle::tau(k, o, k.lambda0, M0)));
                batch_mismatch += !planoracle::is_smallest_batch(k, o, k.lambda0, M0);
            } else {
                errs.push_back(planoracle::rel_err(got.C_p, k.C_p));
                errs.push_back(planoracle::rel_err(got.eta0, planoracle::eta0(k, o, k.c, M)));
            }
            worst = std::max(worst, *std::max_element(errs.begin(), errs.end()));
        }
    }
    const bool cp = clipping_constant(2.0) == 124.0;
    PlannerInputs half;
    half.beta = 0.5;
    half.eps = 0.9;
    half.d = 4.0;
    half.sigma = 0.01;
    half.Delta0 = 0.001;
    half.max_batch = std::uint64_t{1} << 62;
    const double alpha_mom = plan_momentum(half).alpha;
    const double alpha_err = planoracle::rel_err(alpha_mom, 1.0 / (32.0 * std::sqrt(3.0)));
    return {worst <= 1e-12 && batch_mismatch == 0 && cp && alpha_err <= 1e-12,
            fmt("%zu tuples (%zu infeasible redrawn), max rel err %.3g, batch mismatches %zu, C_p(2) = %.17g, "
                "alpha_mom rel err %.3g",
                compared, skipped, worst, batch_mismatch, clipping_constant(2.0), alpha_err)};
}

// 9 ------------------------------------------------------------------------
Outcome momentum_small_batch()
{
    const auto t0 = Clock::now();
    ExperimentConfig c;
    c.jobs = g_jobs;
    const SmallBatchResult r = run_momentum_smallbatch(c);
    if (r.infeasible)
        return {false, *r.infeasible + fmt("; no runs made (%.1f s)", seconds_since(t0))};
    const bool pass = r.momentum_successes >= 18 && r.base_successes <= 5;
    return {pass, fmt("beta = %.6g, T_run = %llu%s; momentum %zu/20, base %zu/20 at equal queries (%llu vs %llu); %.0f s",
                      r.plan->beta, static_cast<unsigned long long>(r.T_run), r.capped ? " (capped)" : "",
                      r.momentum_successes, r.base_successes, static_cast<unsigned long long>(r.momentum_queries),
                      static_cast<unsigned long long>(r.base_queries), seconds_since(t0))};
}

// 10 -----------------------------------------------------------------------
Outcome query_accounting()
{
    std::mt19937_64 gen(10);
    std::size_t ok = 0;
    for (int i = 0; i < 10; ++i) {
        const std::size_t d = 2 + gen() % 30;
        QuadraticProblem prob(d, {NoiseFamily::sparse_pareto, 1.5, 1.0}, basis_vector(d, 0, 3.0));
        DiagnosticsHooks hooks;
        hooks.true_gradient = [&](std::span<const double> x) { return prob.true_gradient(x); };
        BaseConfig bc;
        bc.M = 1 + gen() % 64;
        bc.T = 1 + gen() % 100;
        bc.alpha = 0.01;
        bc.tau = 1.0;
        CountingOracle cb(prob);
        run(cb, prob.x0(), bc, gen(), hooks);

        MomentumConfig mc;
        mc.base = bc;
        mc.M0 = 1 + gen() % 500;
        mc.tau0 = 2.0;
        mc.beta = 0.5 + 0.49 * static_cast<double>(gen() % 100) / 100.0;
        CountingOracle cm(prob);
        run(cm, prob.x0(), mc, gen(), hooks);
        ok += cb.count() == 2 * bc.M * bc.T && cm.count() == 2 * mc.M0 + 2 * bc.M * (bc.T - 1);
    }
    return {ok == 10, fmt("%zu/10 configs exact for both variants", ok)};
}

} // namespace

int main(int argc, char** argv)
{
    std::set<int> only;
    bool strict = false;
    g_jobs = std::max(1u, std::thread::hardware_concurrency());
    g_work = fs::temp_directory_path() / ("rsczo_acceptance_" + std::to_string(::getpid()));
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--only" && i + 1 < argc) {
            std::stringstream ss(argv[++i]);
            for (std::string item; std::getline(ss, item, ',');)
                only.insert(std::stoi(item));
        } else if (a == "--jobs" && i + 1 < argc) {
            g_jobs = std::stoul(argv[++i]);
        } else if (a == "--strict") {
            strict = true;
        } else if (a == "--work" && i + 1 < argc) {
            g_work = argv[++i];
        }
    }
    fs::create_directories(g_work);

    const std::vector<std::pair<int, std::function<Outcome()>>> criteria{
        {1, unbiasedness},       {2, lemma_suite},        {3, representative},   {4, cosine_mechanism},
        {5, direction_preservation}, {6, dimension_sweep}, {7, tail_sweep},        {8, planner_arithmetic},
        {9, momentum_small_batch},   {10, query_accounting}, {11, determinism}};

    // ctest hides a passing test's stdout, so the lines are also kept on disk
    std::ofstream report(g_work / "acceptance_report.txt");
    int failed = 0;
    for (const auto& [id, fn] : criteria) {
        if (!only.empty() && !only.count(id))
            continue;
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        const std::string line = fmt("criterion %d: %s  ", id, o.pass ? "PASS" : "FAIL") + o.detail;
        std::printf("%s\n", line.c_str());
        std::fflush(stdout);
        report << line << '\n' << std::flush;
    }
    std::printf("%d criteria failed\n", failed);
    report << failed << " criteria failed\n";
    return strict && failed > 0 ? 1 : 0;
}

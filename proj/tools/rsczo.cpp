// Command-line front end for the experiment harness and planner.
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "rsczo/errors.hpp"
#include "rsczo/harness.hpp"
#include "rsczo/planner.hpp"

using namespace rsczo;
namespace fs = std::filesystem;

namespace {

struct Common {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::optional<std::size_t> jobs;
    std::string format = "csv";
};

void add_common(CLI::App* app, Common& c)
{
    app->add_option("--config", c.config_path, "flat key = value config file")->check(CLI::ExistingFile);
    app->add_option("--seed", c.seed, "master seed (overrides config)");
    app->add_option("--out", c.out, "output directory (overrides config)");
    app->add_option("--jobs", c.jobs, "worker threads")->check(CLI::PositiveNumber);
    app->add_option("--format", c.format, "csv or jsonl")->check(CLI::IsMember({"csv", "jsonl"}));
}

ExperimentConfig resolve(const Common& c, const std::string& default_out)
{
    ExperimentConfig cfg = c.config_path.empty() ? ExperimentConfig{} : load_config(c.config_path);
    if (c.seed)
        cfg.master_seed = *c.seed;
    if (c.jobs)
        cfg.jobs = *c.jobs;
    if (!c.out.empty())
        cfg.output_dir = c.out;
    if (cfg.output_dir.empty())
        cfg.output_dir = default_out;
    cfg.validate();
    return cfg;
}

OutputFormat format_of(const Common& c) { return c.format == "jsonl" ? OutputFormat::jsonl : OutputFormat::csv; }

void print_summary(std::span<const SummaryRow> rows)
{
    std::printf("%-22s %-22s %5s %5s %5s %12s %8s %9s\n", "cell", "method", "d", "p", "M", "median_final",
                "success", "cosine");
    for (const auto& r : rows)
        std::printf("%-22s %-22s %5zu %5g %5zu %12.4f %8.2f %9s\n", r.cell_id.c_str(), r.method.c_str(), r.d, r.p,
                    r.M, r.median_final, r.success_rate,
                    r.median_cosine ? std::to_string(*r.median_cosine).substr(0, 6).c_str() : "-");
}

void print_tuned(const std::vector<TunedMethod>& tuned)
{
    for (const auto& tm : tuned) {
        if (tm.untunable) {
            std::printf("%-22s untunable (every grid cell diverged)\n", std::string(to_string(tm.method)).c_str());
            continue;
        }
        std::printf("%-22s alpha=%g threshold=%s validation_median=%.4f\n", std::string(to_string(tm.method)).c_str(),
                    tm.hyper.alpha, tm.hyper.threshold ? format_real(*tm.hyper.threshold).c_str() : "-",
                    tm.validation_median);
    }
}

void print_plan(const PlannedParams& p, const PlannerInputs& in, bool json)
{
    const ComplexityReport cr = predicted_complexity(p, in);
    if (json) {
        nlohmann::ordered_json j;
        j["variant"] = p.momentum ? "momentum" : "base";
        j["constant_approximate"] = p.constant_approximate;
        j["trivial_regime"] = p.trivial_regime;
        j["mu"] = p.mu;
        if (p.momentum)
            j["beta"] = p.beta;
        j["bar_Delta0"] = p.bar_Delta0;
        j["S_mu"] = p.S_mu;
        j["C_p"] = p.C_p;
        j["lambda"] = p.lambda;
        if (p.momentum)
            j["lambda0"] = p.lambda0;
        j["alpha"] = p.alpha;
        j["T"] = p.T;
        j["M"] = p.M;
        j["tau"] = p.tau;
        if (p.momentum) {
            j["M0"] = p.M0;
            j["tau0"] = p.tau0;
        }
        j["eta0"] = p.eta0;
        j["eta"] = p.eta;
        j["predicted_queries"] = p.predicted_queries;
        j["eps_exponent"] = cr.eps_exponent;
        j["d_exponent"] = cr.d_exponent;
        j["near_singular"] = cr.near_singular;
        std::cout << j.dump() << '\n';
        return;
    }
    std::cout << "variant = " << (p.momentum ? "momentum" : "base") << '\n';
    const auto kv = [](const char* k, double v) { std::cout << k << " = " << format_real(v) << '\n'; };
    kv("mu", p.mu);
    if (p.momentum)
        kv("beta", p.beta);
    kv("bar_Delta0", p.bar_Delta0);
    kv("S_mu", p.S_mu);
    kv("C_p", p.C_p);
    kv("lambda", p.lambda);
    if (p.momentum)
        kv("lambda0", p.lambda0);
    kv("alpha", p.alpha);
    std::cout << "T = " << p.T << "\nM = " << p.M << '\n';
    kv("tau", p.tau);
    if (p.momentum) {
        std::cout << "M0 = " << p.M0 << '\n';
        kv("tau0", p.tau0);
    }
    kv("eta0", p.eta0);
    kv("eta", p.eta);
    if (p.trivial_regime)
        std::cout << "note: eps^2 > 32 L bar_Delta0, x0 is already eps-stationary\n";
    if (p.constant_approximate)
        std::cout << "note: momentum batch sizes reuse the base constant C_p (order-correct, not sharp)\n";
    std::cout << cr.text << '\n';
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Clipped zeroth-order optimization: experiments, planner and diagnostics"};
    app.require_subcommand(1);

    Common common;

    auto* run_cmd = app.add_subcommand("run", "evaluate one method at fixed hyperparameters");
    add_common(run_cmd, common);
    std::string run_method_name = "scalar_clip";
    double run_alpha = 0.01;
    std::optional<double> run_threshold;
    run_cmd->add_option("--method", run_method_name, "raw, vector_clip, scalar_clip, scalar_clip_momentum");
    run_cmd->add_option("--alpha", run_alpha, "stepsize");
    run_cmd->add_option("--threshold", run_threshold, "tau (scalar) or r_vec (vector)");

    auto* tune_cmd = app.add_subcommand("tune", "grid search on the validation seeds");
    add_common(tune_cmd, common);

    auto* rep_cmd = app.add_subcommand("rep", "representative setting: tune, evaluate, write artifacts");
    add_common(rep_cmd, common);

    auto* dim_cmd = app.add_subcommand("sweep-dim", "dimension sweep");
    add_common(dim_cmd, common);
    std::vector<std::size_t> dims{25, 50, 100, 200};
    dim_cmd->add_option("--dims", dims, "dimensions")->delimiter(',');

    auto* tail_cmd = app.add_subcommand("sweep-tail", "tail-exponent sweep");
    add_common(tail_cmd, common);
    std::vector<double> tails{1.2, 1.5, 1.8, 2.5};
    tail_cmd->add_option("--tails", tails, "tail exponents")->delimiter(',');

    auto* m1_cmd = app.add_subcommand("momentum-m1", "planner-driven momentum with batch size 1");
    add_common(m1_cmd, common);

    auto* plan_cmd = app.add_subcommand("plan", "theory-derived parameters");
    add_common(plan_cmd, common);
    PlannerInputs pin;
    std::optional<std::uint64_t> fixed_batch;
    plan_cmd->add_option("--L", pin.L);
    plan_cmd->add_option("--Delta0", pin.Delta0);
    plan_cmd->add_option("--sigma", pin.sigma);
    plan_cmd->add_option("--p", pin.p);
    plan_cmd->add_option("--d", pin.d);
    plan_cmd->add_option("--eps", pin.eps);
    plan_cmd->add_option("--delta", pin.delta);
    plan_cmd->add_option("--mu", pin.mu, "smoothing radius (default eps/(4Ld))");
    plan_cmd->add_option("--beta", pin.beta, "momentum parameter in [1/2, 1)");
    plan_cmd->add_option("--max-batch", pin.max_batch, "batch-size search ceiling");
    plan_cmd->add_option("--fixed-batch", fixed_batch, "momentum with this running batch; solves for beta");

    auto* check_cmd = app.add_subcommand("check", "lemma and assumption check suite");
    add_common(check_cmd, common);
    std::size_t check_samples = 1000000;
    check_cmd->add_option("--samples", check_samples, "Monte Carlo samples per check");

    CLI11_PARSE(app, argc, argv);

    try {
        const OutputFormat fmt = format_of(common);
        const bool csv = fmt == OutputFormat::csv;

        if (run_cmd->parsed()) {
            const ExperimentConfig cfg = resolve(common, "out/run");
            TunedMethod tm;
            tm.method = method_from_string(run_method_name);
            tm.hyper.alpha = run_alpha;
            if (tm.method != Method::raw) {
                if (!run_threshold)
                    throw ConfigError("--threshold is required for " + run_method_name);
                tm.hyper.threshold = run_threshold;
            }
            const CellResult cell = evaluate_cell(cfg, "run", {tm});
            emit_cell(cell, cfg.output_dir, fmt);
            print_summary(cell.summary);
        } else if (tune_cmd->parsed()) {
            const ExperimentConfig cfg = resolve(common, "out/tune");
            const auto tuned = tune(cfg);
            std::ostringstream os;
            os << "method,alpha,threshold,validation_median,untunable\n";
            for (const auto& t : tuned)
                os << to_string(t.method) << ',' << format_real(t.hyper.alpha) << ','
                   << format_optional(t.hyper.threshold) << ',' << format_real(t.validation_median) << ','
                   << (t.untunable ? "true" : "false") << '\n';
            write_file(fs::path(cfg.output_dir) / "tuned.csv", os.str());
            print_tuned(tuned);
        } else if (rep_cmd->parsed()) {
            ExperimentConfig cfg = resolve(common, "out/rep");
            const std::string dir = cfg.output_dir;
            cfg.output_dir.clear();
            const CellResult cell = run_representative(cfg);
            emit_cell(cell, dir, fmt);
            print_tuned(cell.tuned);
            print_summary(cell.summary);
        } else if (dim_cmd->parsed()) {
            const ExperimentConfig cfg = resolve(common, "out/sweep-dim");
            const SweepResult r = sweep_dimension(cfg, dims);
            print_summary(r.summary);
        } else if (tail_cmd->parsed()) {
            const ExperimentConfig cfg = resolve(common, "out/sweep-tail");
            const SweepResult r = sweep_tail(cfg, tails);
            print_summary(r.summary);
        } else if (m1_cmd->parsed()) {
            const ExperimentConfig cfg = resolve(common, "out/momentum-m1");
            const SmallBatchResult r = run_momentum_smallbatch(cfg);
            if (r.infeasible) {
                std::cout << *r.infeasible << '\n';
                write_file(fs::path(cfg.output_dir) / "notes.txt", *r.infeasible + '\n');
                return 2;
            }
            std::cout << "beta = " << format_real(r.plan->beta) << "  T_plan = " << r.plan->T
                      << "  T_run = " << r.T_run << (r.capped ? " (capped)" : "") << "  M0 = " << r.plan->M0
                      << '\n';
            std::cout << "momentum successes " << r.momentum_successes << '/' << r.seeds << ", base successes "
                      << r.base_successes << '/' << r.seeds << '\n';
            if (r.capped)
                std::cout << "capped run: " << r.momentum_progress << '/' << r.seeds
                          << " momentum seeds made progress toward eps\n";
            emit_summary(fs::path(cfg.output_dir) / (csv ? "summary.csv" : "summary.jsonl"), r.summary, fmt);
            print_summary(r.summary);
        } else if (plan_cmd->parsed()) {
            PlannedParams p;
            if (fixed_batch)
                p = plan_momentum_fixed_batch(pin, *fixed_batch);
            else if (pin.beta)
                p = plan_momentum(pin);
            else
                p = plan_base(pin);
            print_plan(p, pin, !csv);
        } else if (check_cmd->parsed()) {
            const std::uint64_t seed = common.seed.value_or(0);
            const auto reports = run_check_suite(check_samples, seed);
            std::ostringstream os;
            if (csv)
                write_checks_csv(os, reports);
            else
                write_checks_jsonl(os, reports);
            if (!common.out.empty())
                write_file(fs::path(common.out) / (csv ? "checks.csv" : "checks.jsonl"), os.str());
            std::cout << os.str();
            for (const auto& r : reports)
                if (!r.passed)
                    return 1;
        }
    } catch (const InfeasiblePlan& e) {
        std::cerr << "infeasible: " << e.what() << " (limiting eta " << e.limiting_eta() << ")\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

#include "rsczo/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "rsczo/errors.hpp"

namespace rsczo {

std::string_view to_string(Method m)
{
    switch (m) {
    case Method::raw: return "raw";
    case Method::vector_clip: return "vector_clip";
    case Method::scalar_clip: return "scalar_clip";
    case Method::scalar_clip_momentum: return "scalar_clip_momentum";
    }
    return "?";
}

Method method_from_string(std::string_view s)
{
    for (Method m : {Method::raw, Method::vector_clip, Method::scalar_clip, Method::scalar_clip_momentum})
        if (to_string(m) == s)
            return m;
    throw ConfigError("unknown method '" + std::string(s) + "'");
}

namespace {

EstimatorMode estimator_mode(Method m)
{
    switch (m) {
    case Method::raw: return EstimatorMode::raw;
    case Method::vector_clip: return EstimatorMode::vector_clip;
    case Method::scalar_clip:
    case Method::scalar_clip_momentum: return EstimatorMode::scalar_clip;
    }
    return EstimatorMode::raw;
}

const std::vector<double>* threshold_grid(const ExperimentConfig& c, Method m)
{
    switch (m) {
    case Method::raw: return nullptr;
    case Method::vector_clip: return &c.rvec_grid;
    case Method::scalar_clip:
    case Method::scalar_clip_momentum: return &c.tau_grid;
    }
    return nullptr;
}

// Runs fn(i) for i in [0, count) on up to `jobs` threads. Results go to
// caller-owned slots, so output never depends on scheduling. The exception of
// the lowest failing index is rethrown.
template <class Fn>
void parallel_for(std::size_t jobs, std::size_t count, Fn&& fn)
{
    jobs = std::max<std::size_t>(1, std::min(jobs, count));
    std::vector<std::exception_ptr> errors(count);
    if (jobs == 1) {
        for (std::size_t i = 0; i < count; ++i) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(jobs);
        for (std::size_t w = 0; w < jobs; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < count; i = next++) {
                    try {
                        fn(i);
                    } catch (...) {
                        errors[i] = std::current_exception();
                    }
                }
            });
        }
        for (auto& t : pool)
            t.join();
    }
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
}

std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep)
{
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = s.find(sep, start);
        out.push_back(std::string(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
        if (pos == std::string_view::npos)
            return out;
        start = pos + 1;
    }
}

double parse_double(const std::string& key, const std::string& v)
{
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size())
        throw ConfigError("key '" + key + "': expected a number, got '" + v + "'");
    return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v)
{
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size())
        throw ConfigError("key '" + key + "': expected a non-negative integer, got '" + v + "'");
    return out;
}

std::vector<double> parse_double_list(const std::string& key, const std::string& v)
{
    std::vector<double> out;
    for (const auto& item : split(v, ','))
        out.push_back(parse_double(key, trim(item)));
    return out;
}

std::string join(const std::vector<double>& v)
{
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i)
        out += (i ? "," : "") + format_real(v[i]);
    return out;
}

} // namespace

void ExperimentConfig::validate() const
{
    if (d == 0)
        throw ConfigError("d must be positive");
    if (M == 0)
        throw ConfigError("M must be positive");
    if (!(eps > 0.0))
        throw ConfigError("eps must be positive");
    if (!(mu > 0.0))
        throw ConfigError("mu must be positive");
    if (!(x0_norm >= 0.0))
        throw ConfigError("x0_norm must be non-negative");
    if (methods.empty())
        throw ConfigError("methods must list at least one method");
    if (stepsize_grid.empty())
        throw ConfigError("stepsize_grid must be nonempty");
    for (double a : stepsize_grid)
        if (!(a > 0.0))
            throw ConfigError("stepsize_grid entries must be positive");
    for (Method m : methods) {
        if (const auto* grid = threshold_grid(*this, m)) {
            if (grid->empty())
                throw ConfigError(std::string(to_string(m)) + " needs a nonempty threshold grid");
            for (double v : *grid)
                if (!(v > 0.0))
                    throw ConfigError("threshold grid entries must be positive");
        }
    }
    if (evaluation_seeds == 0)
        throw ConfigError("evaluation_seeds must be at least 1");
    if (validation_seeds == 0)
        throw ConfigError("validation_seeds must be at least 1");
    if (!(momentum_beta >= 0.0 && momentum_beta < 1.0))
        throw ConfigError("momentum_beta must lie in [0, 1)");
    if (jobs == 0)
        throw ConfigError("jobs must be at least 1");
    try {
        NoiseModelSpec{noise, p, sigma_scale}.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
    }
}

QuadraticProblem ExperimentConfig::make_problem() const
{
    return QuadraticProblem(d, NoiseModelSpec{noise, p, sigma_scale}, basis_vector(d, 0, x0_norm));
}

ExperimentConfig parse_config(std::string_view text, ExperimentConfig c)
{
    std::set<std::string> seen;
    std::size_t line_no = 0;
    for (const auto& raw_line : split(text, '\n')) {
        ++line_no;
        std::string line = raw_line;
        if (const auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        line = trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(std::string_view(line).substr(0, eq));
        const std::string v = trim(std::string_view(line).substr(eq + 1));
        if (!seen.insert(key).second)
            throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");

        if (key == "d") c.d = parse_u64(key, v);
        else if (key == "p") c.p = parse_double(key, v);
        else if (key == "noise") {
            try {
                c.noise = noise_family_from_string(v);
            } catch (const InvalidArgument& e) {
                throw ConfigError(e.what());
            }
        }
        else if (key == "sigma_scale") c.sigma_scale = parse_double(key, v);
        else if (key == "x0_norm") c.x0_norm = parse_double(key, v);
        else if (key == "mu") c.mu = parse_double(key, v);
        else if (key == "methods") {
            c.methods.clear();
            for (const auto& item : split(v, ','))
                c.methods.push_back(method_from_string(trim(item)));
        }
        else if (key == "M") c.M = parse_u64(key, v);
        else if (key == "eps") c.eps = parse_double(key, v);
        else if (key == "iter_budget") c.iter_budget = parse_u64(key, v);
        else if (key == "stepsize_grid") c.stepsize_grid = parse_double_list(key, v);
        else if (key == "tau_grid") c.tau_grid = parse_double_list(key, v);
        else if (key == "rvec_grid") c.rvec_grid = parse_double_list(key, v);
        else if (key == "validation_seeds") c.validation_seeds = parse_u64(key, v);
        else if (key == "evaluation_seeds") c.evaluation_seeds = parse_u64(key, v);
        else if (key == "master_seed") c.master_seed = parse_u64(key, v);
        else if (key == "output_dir") c.output_dir = v;
        else if (key == "probe_norm") c.probe_norm = parse_double(key, v);
        else if (key == "probe_batches") c.probe_batches = parse_u64(key, v);
        else if (key == "momentum_beta") c.momentum_beta = parse_double(key, v);
        else if (key == "momentum_t_cap") c.momentum_t_cap = parse_u64(key, v);
        else if (key == "planner_max_batch") c.planner_max_batch = parse_u64(key, v);
        else if (key == "planner_delta") c.planner_delta = parse_double(key, v);
        else if (key == "jobs") c.jobs = parse_u64(key, v);
        else
            throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
    c.validate();
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot read config file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
        return parse_config(ss.str(), std::move(base));
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

std::string format_config(const ExperimentConfig& c)
{
    std::ostringstream os;
    os << "d = " << c.d << '\n'
       << "p = " << format_real(c.p) << '\n'
       << "noise = " << to_string(c.noise) << '\n'
       << "sigma_scale = " << format_real(c.sigma_scale) << '\n'
       << "x0_norm = " << format_real(c.x0_norm) << '\n'
       << "mu = " << format_real(c.mu) << '\n'
       << "methods = ";
    for (std::size_t i = 0; i < c.methods.size(); ++i)
        os << (i ? "," : "") << to_string(c.methods[i]);
    os << '\n'
       << "M = " << c.M << '\n'
       << "eps = " << format_real(c.eps) << '\n'
       << "iter_budget = " << c.iter_budget << '\n'
       << "stepsize_grid = " << join(c.stepsize_grid) << '\n'
       << "tau_grid = " << join(c.tau_grid) << '\n'
       << "rvec_grid = " << join(c.rvec_grid) << '\n'
       << "validation_seeds = " << c.validation_seeds << '\n'
       << "evaluation_seeds = " << c.evaluation_seeds << '\n'
       << "master_seed = " << c.master_seed << '\n';
    if (!c.output_dir.empty())
        os << "output_dir = " << c.output_dir << '\n';
    os << "probe_norm = " << format_real(c.probe_norm) << '\n'
       << "probe_batches = " << c.probe_batches << '\n'
       << "momentum_beta = " << format_real(c.momentum_beta) << '\n'
       << "momentum_t_cap = " << c.momentum_t_cap << '\n'
       << "planner_max_batch = " << c.planner_max_batch << '\n'
       << "planner_delta = " << format_real(c.planner_delta) << '\n'
       << "jobs = " << c.jobs << '\n';
    return os.str();
}

std::uint64_t run_seed(std::uint64_t master_seed, std::uint64_t offset)
{
    return combine(mix64(master_seed ^ 0x7365656473ULL), offset);
}

RunResult run_method(const ExperimentConfig& config, const QuadraticProblem& problem, Method method,
                     const Hyper& hyper, std::uint64_t offset)
{
    QuadraticProblem oracle = problem;
    DiagnosticsHooks hooks;
    hooks.true_gradient = [&](std::span<const double> x) { return oracle.true_gradient(x); };
    const RunLabel label{std::string(to_string(method)), offset};
    const std::uint64_t seed = run_seed(config.master_seed, offset);

    BaseConfig base;
    base.alpha = hyper.alpha;
    base.mu = config.mu;
    base.M = config.M;
    base.T = config.iter_budget;
    base.mode = estimator_mode(method);
    if (base.mode == EstimatorMode::scalar_clip)
        base.tau = hyper.threshold.value();
    if (base.mode == EstimatorMode::vector_clip)
        base.vec_radius = hyper.threshold.value();

    if (method == Method::scalar_clip_momentum) {
        MomentumConfig mc;
        mc.base = base;
        mc.beta = config.momentum_beta;
        mc.M0 = config.M;
        mc.tau0 = base.tau;
        return run(oracle, oracle.x0(), mc, seed, hooks, label);
    }
    return run(oracle, oracle.x0(), base, seed, hooks, label);
}

std::vector<TunedMethod> tune(const ExperimentConfig& config, const RunListener& listener)
{
    config.validate();
    const QuadraticProblem problem = config.make_problem();

    std::vector<double> alphas = config.stepsize_grid;
    std::sort(alphas.begin(), alphas.end());

    struct Job {
        std::size_t method_index;
        std::size_t cell;
        std::uint64_t offset;
    };
    std::vector<std::vector<Hyper>> cells(config.methods.size());
    std::vector<Job> jobs;
    for (std::size_t mi = 0; mi < config.methods.size(); ++mi) {
        const Method m = config.methods[mi];
        std::vector<std::optional<double>> thresholds{std::nullopt};
        if (const auto* grid = threshold_grid(config, m)) {
            std::vector<double> g = *grid;
            std::sort(g.begin(), g.end());
            thresholds.assign(g.begin(), g.end());
        }
        for (double a : alphas)
            for (const auto& th : thresholds)
                cells[mi].push_back({a, th});
        for (std::size_t ci = 0; ci < cells[mi].size(); ++ci)
            for (std::uint64_t s = 0; s < config.validation_seeds; ++s)
                jobs.push_back({mi, ci, s});
    }

    struct Outcome {
        double final = 0.0;
        bool diverged = false;
    };
    std::vector<Outcome> outcomes(jobs.size());
    std::mutex listener_mutex;
    parallel_for(config.jobs, jobs.size(), [&](std::size_t i) {
        const Job& j = jobs[i];
        const Method m = config.methods[j.method_index];
        if (listener) {
            std::lock_guard lock(listener_mutex);
            listener({Phase::validation, m, j.offset});
        }
        const RunResult r = run_method(config, problem, m, cells[j.method_index][j.cell], j.offset);
        if (r.error)
            throw OracleError(OracleError::Kind::process_failure, 0, "tuning run failed: " + *r.error);
        outcomes[i] = {r.final_grad_norm, r.diverged || !std::isfinite(r.final_grad_norm)};
    });

    std::vector<TunedMethod> out;
    std::size_t cursor = 0;
    for (std::size_t mi = 0; mi < config.methods.size(); ++mi) {
        TunedMethod tm;
        tm.method = config.methods[mi];
        tm.untunable = true;
        for (const Hyper& h : cells[mi]) {
            std::vector<double> finals;
            bool all_diverged = true;
            for (std::uint64_t s = 0; s < config.validation_seeds; ++s, ++cursor) {
                finals.push_back(outcomes[cursor].final);
                all_diverged = all_diverged && outcomes[cursor].diverged;
            }
            CellScore score{h, median(finals), all_diverged};
            tm.cells.push_back(score);
            // Cells are visited in (alpha, threshold) ascending order, so a
            // strict comparison keeps the smaller values on ties.
            if (!all_diverged && (tm.untunable || score.median_final < tm.validation_median)) {
                tm.untunable = false;
                tm.hyper = h;
                tm.validation_median = score.median_final;
            }
        }
        out.push_back(std::move(tm));
    }
    return out;
}

std::map<std::string, std::vector<double>> cosine_probe(const ExperimentConfig& config,
                                                        const std::vector<TunedMethod>& tuned)
{
    const QuadraticProblem problem = config.make_problem();
    const Vec x = basis_vector(config.d, 0, config.probe_norm);
    const Vec grad = problem.true_gradient(x);
    const std::size_t seeds = config.evaluation_seeds;
    const std::size_t per_seed = config.probe_batches;

    std::vector<const TunedMethod*> active;
    for (const auto& tm : tuned)
        if (!tm.untunable)
            active.push_back(&tm);

    // slots[seed][method][batch]
    std::vector<std::vector<std::vector<std::optional<double>>>> slots(
        seeds, std::vector<std::vector<std::optional<double>>>(active.size()));
    parallel_for(config.jobs, seeds, [&](std::size_t s) {
        QuadraticProblem oracle = problem;
        const std::uint64_t seed = run_seed(config.master_seed, config.validation_seeds + s);
        for (std::size_t b = 0; b < per_seed; ++b) {
            const DirectionalBatch batch =
                sample_batch(oracle, x, config.mu, config.M, StreamKey{seed, kProbeStream, b, 0});
            for (std::size_t k = 0; k < active.size(); ++k) {
                const GradientEstimate est =
                    aggregate(batch, estimator_mode(active[k]->method), active[k]->hyper.threshold);
                slots[s][k].push_back(cosine_alignment(est.g, grad));
            }
        }
    });

    std::map<std::string, std::vector<double>> out;
    for (std::size_t k = 0; k < active.size(); ++k) {
        auto& v = out[std::string(to_string(active[k]->method))];
        for (std::size_t s = 0; s < seeds; ++s)
            for (const auto& c : slots[s][k])
                if (c)
                    v.push_back(*c);
    }
    return out;
}

CellResult evaluate_cell(const ExperimentConfig& config, const std::string& cell_id,
                         const std::vector<TunedMethod>& tuned, const RunListener& listener)
{
    config.validate();
    const QuadraticProblem problem = config.make_problem();
    CellResult cell;
    cell.cell_id = cell_id;
    cell.tuned = tuned;

    std::vector<const TunedMethod*> active;
    for (const auto& tm : tuned) {
        if (tm.untunable)
            cell.notes.push_back(std::string(to_string(tm.method)) + ": untunable (every grid cell diverged)");
        else
            active.push_back(&tm);
    }

    const std::size_t seeds = config.evaluation_seeds;
    std::vector<RunResult> results(active.size() * seeds);
    std::mutex listener_mutex;
    parallel_for(config.jobs, results.size(), [&](std::size_t i) {
        const TunedMethod& tm = *active[i / seeds];
        const std::uint64_t offset = config.validation_seeds + i % seeds;
        if (listener) {
            std::lock_guard lock(listener_mutex);
            listener({Phase::evaluation, tm.method, offset});
        }
        results[i] = run_method(config, problem, tm.method, tm.hyper, offset);
    });

    for (std::size_t i = 0; i < results.size(); ++i) {
        if (results[i].error)
            cell.notes.push_back(std::string(to_string(active[i / seeds]->method)) + " seed " +
                                 std::to_string(config.validation_seeds + i % seeds) +
                                 ": partial data, " + *results[i].error);
        cell.records.insert(cell.records.end(), results[i].records.begin(), results[i].records.end());
    }
    std::stable_sort(cell.records.begin(), cell.records.end(), [](const RunRecord& a, const RunRecord& b) {
        if (a.method != b.method)
            return a.method < b.method;
        if (a.seed != b.seed)
            return a.seed < b.seed;
        return a.t < b.t;
    });

    cell.metrics = aggregate_metrics(cell.records, config.eps);
    cell.probe_cosines = cosine_probe(config, tuned);
    for (const MethodSummary& ms : cell.metrics) {
        SummaryRow row;
        row.cell_id = cell_id;
        row.method = ms.method;
        row.d = config.d;
        row.p = NoiseModelSpec{config.noise, config.p, config.sigma_scale}.tail_exponent();
        row.M = config.M;
        row.median_final = ms.median_final;
        row.success_rate = ms.success_rate;
        if (auto it = cell.probe_cosines.find(ms.method); it != cell.probe_cosines.end() && !it->second.empty())
            row.median_cosine = median(it->second);
        row.total_queries = ms.total_queries;
        cell.summary.push_back(std::move(row));
    }
    return cell;
}

CellResult run_cell(const ExperimentConfig& config, const std::string& cell_id, const RunListener& listener)
{
    return evaluate_cell(config, cell_id, tune(config, listener), listener);
}

CellResult run_representative(const ExperimentConfig& config, const RunListener& listener)
{
    CellResult cell = run_cell(config, "rep", listener);
    if (!config.output_dir.empty())
        emit_cell(cell, config.output_dir);
    return cell;
}

std::string dimension_cell_id(std::size_t d) { return "d=" + std::to_string(d); }

std::string tail_cell_id(double p)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "p=%g%s", p, p > 2.0 ? "-sanity-check" : "");
    return buf;
}

namespace {

template <class Values, class Apply, class Label>
SweepResult sweep(const ExperimentConfig& config, const Values& values, Apply&& apply, Label&& label)
{
    SweepResult out;
    for (const auto& v : values) {
        ExperimentConfig c = config;
        apply(c, v);
        const std::string id = label(v);
        if (!config.output_dir.empty())
            c.output_dir = (std::filesystem::path(config.output_dir) / id).string();
        CellResult cell = run_cell(c, id);
        if (!c.output_dir.empty())
            emit_cell(cell, c.output_dir);
        out.summary.insert(out.summary.end(), cell.summary.begin(), cell.summary.end());
        out.cells.push_back(std::move(cell));
    }
    if (!config.output_dir.empty())
        emit_summary(std::filesystem::path(config.output_dir) / "summary.csv", out.summary);
    return out;
}

} // namespace

SweepResult sweep_dimension(const ExperimentConfig& config, const std::vector<std::size_t>& d_list)
{
    return sweep(
        config, d_list, [](ExperimentConfig& c, std::size_t d) { c.d = d; }, dimension_cell_id);
}

SweepResult sweep_tail(const ExperimentConfig& config, const std::vector<double>& p_list)
{
    return sweep(
        config, p_list, [](ExperimentConfig& c, double p) { c.p = p; }, tail_cell_id);
}

SmallBatchResult run_momentum_smallbatch(const ExperimentConfig& config)
{
    config.validate();
    const QuadraticProblem problem = config.make_problem();
    const NoiseModelSpec& noise = problem.noise_spec();

    SmallBatchResult out;
    out.seeds = config.evaluation_seeds;

    PlannerInputs in;
    in.L = QuadraticProblem::smoothness();
    in.Delta0 = problem.delta0();
    in.sigma = noise.weak_lp_sigma();
    in.p = noise.tail_exponent();
    in.d = static_cast<double>(config.d);
    in.eps = config.eps;
    in.delta = config.planner_delta;
    in.max_batch = config.planner_max_batch;

    PlannedParams plan;
    try {
        plan = plan_momentum_fixed_batch(in, 1);
    } catch (const InfeasiblePlan& e) {
        std::ostringstream os;
        os.precision(6);
        os << "planner infeasible: " << e.what() << " (limiting eta " << e.limiting_eta() << " vs target "
           << config.eps / 4.0 << ")";
        out.infeasible = os.str();
        return out;
    }
    out.plan = plan;

    // Warm-start batch held in memory as M0 x d doubles.
    constexpr double kMaxBatchEntries = 1u << 28;
    if (static_cast<double>(plan.M0) * static_cast<double>(config.d) > kMaxBatchEntries) {
        out.infeasible = "planner warm-start batch M0 = " + std::to_string(plan.M0) + " exceeds the desk-scale limit";
        return out;
    }

    out.T_run = std::min(plan.T, config.momentum_t_cap);
    out.capped = out.T_run < plan.T;

    MomentumConfig mc;
    mc.base.alpha = plan.alpha;
    mc.base.mu = plan.mu;
    mc.base.M = 1;
    mc.base.tau = plan.tau;
    mc.base.T = out.T_run;
    mc.base.mode = EstimatorMode::scalar_clip;
    mc.beta = plan.beta;
    mc.M0 = static_cast<std::size_t>(plan.M0);
    mc.tau0 = plan.tau0;

    BaseConfig bc = mc.base;
    bc.T = plan.M0 + out.T_run - 1;  // 2·T_base = 2M0 + 2(T − 1)

    const std::size_t seeds = config.evaluation_seeds;
    std::vector<RunResult> mom(seeds);
    std::vector<RunResult> base(seeds);
    parallel_for(config.jobs, 2 * seeds, [&](std::size_t i) {
        QuadraticProblem oracle = problem;
        DiagnosticsHooks hooks;
        hooks.true_gradient = [&](std::span<const double> x) { return oracle.true_gradient(x); };
        const std::uint64_t offset = config.validation_seeds + i % seeds;
        const std::uint64_t seed = run_seed(config.master_seed, offset);
        if (i < seeds)
            mom[i] = run(oracle, oracle.x0(), mc, seed, hooks, {"scalar_clip_momentum", offset});
        else
            base[i - seeds] = run(oracle, oracle.x0(), bc, seed, hooks, {"scalar_clip", offset});
    });

    const double initial = norm2(problem.x0());
    for (std::size_t s = 0; s < seeds; ++s) {
        out.momentum_finals.push_back(mom[s].final_grad_norm);
        out.base_finals.push_back(base[s].final_grad_norm);
        out.momentum_successes += mom[s].final_grad_norm <= config.eps;
        out.base_successes += base[s].final_grad_norm <= config.eps;
        out.momentum_progress += mom[s].final_grad_norm < initial;
        if (!mom[s].records.empty())
            out.momentum_queries = std::max(out.momentum_queries, mom[s].records.back().queries);
        if (!base[s].records.empty())
            out.base_queries = std::max(out.base_queries, base[s].records.back().queries);
    }

    const auto row = [&](const char* method, const std::vector<double>& finals, std::size_t successes,
                         std::uint64_t queries) {
        SummaryRow r;
        r.cell_id = "momentum-m1";
        r.method = method;
        r.d = config.d;
        r.p = in.p;
        r.M = 1;
        r.median_final = median(finals);
        r.success_rate = static_cast<double>(successes) / static_cast<double>(seeds);
        r.total_queries = queries;
        return r;
    };
    out.summary.push_back(row("scalar_clip", out.base_finals, out.base_successes, out.base_queries));
    out.summary.push_back(
        row("scalar_clip_momentum", out.momentum_finals, out.momentum_successes, out.momentum_queries));
    return out;
}

} // namespace rsczo

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rsczo/diagnostics.hpp"
#include "rsczo/optimizer.hpp"
#include "rsczo/oracle.hpp"
#include "rsczo/planner.hpp"

namespace rsczo {

enum class Method { raw, vector_clip, scalar_clip, scalar_clip_momentum };

std::string_view to_string(Method m);
Method method_from_string(std::string_view s);

inline constexpr std::uint64_t kProbeStream = stream_tag("probe");

struct ExperimentConfig {
    // problem
    std::size_t d = 100;
    double p = 1.5;
    NoiseFamily noise = NoiseFamily::sparse_pareto;
    double sigma_scale = 1.0;
    double x0_norm = 3.0;  // x0 = x0_norm · e1
    double mu = 1e-3;

    std::vector<Method> methods{Method::raw, Method::vector_clip, Method::scalar_clip};
    std::size_t M = 256;
    double eps = 0.1;
    std::uint64_t iter_budget = 1000;
    std::vector<double> stepsize_grid{0.005, 0.01, 0.02, 0.05, 0.1, 0.2};
    std::vector<double> tau_grid{0.01, 0.03, 0.1, 0.3, 1.0, 3.0};
    std::vector<double> rvec_grid{0.1, 0.3, 1.0, 3.0, 10.0, 30.0};
    std::size_t validation_seeds = 6;
    std::size_t evaluation_seeds = 20;
    std::uint64_t master_seed = 0;
    std::string output_dir;

    // paired cosine probe (see summary median_cosine)
    double probe_norm = 1.0;
    std::size_t probe_batches = 25;

    // scalar_clip_momentum and the small-batch experiment
    double momentum_beta = 0.9;
    std::uint64_t momentum_t_cap = 200000;
    std::uint64_t planner_max_batch = std::uint64_t{1} << 40;
    double planner_delta = 0.05;

    std::size_t jobs = 1;

    void validate() const;
    QuadraticProblem make_problem() const;
};

/// Flat `key = value` text; `#` starts a comment; lists are comma-separated.
/// Unknown keys and malformed values raise ConfigError.
ExperimentConfig parse_config(std::string_view text, ExperimentConfig base = {});
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = {});
std::string format_config(const ExperimentConfig& config);

/// Per-run RNG seed for seed slot `offset` (validation 0..v−1, evaluation v..v+e−1).
std::uint64_t run_seed(std::uint64_t master_seed, std::uint64_t offset);

struct Hyper {
    double alpha = 0.0;
    std::optional<double> threshold;  // τ or r_vec; empty for raw
};

struct CellScore {
    Hyper hyper;
    double median_final = 0.0;
    bool all_diverged = false;
};

struct TunedMethod {
    Method method = Method::raw;
    Hyper hyper;
    double validation_median = 0.0;
    bool untunable = false;
    std::vector<CellScore> cells;
};

enum class Phase { validation, evaluation };

struct RunEvent {
    Phase phase;
    Method method;
    std::uint64_t seed_offset;
};

/// Observer for every optimizer run the harness launches (seed-hygiene checks).
using RunListener = std::function<void(const RunEvent&)>;


/// One optimizer run of `method` with `hyper` on seed slot `offset`.
RunResult run_method(const ExperimentConfig& config, const QuadraticProblem& problem, Method method,
                     const Hyper& hyper, std::uint64_t offset);

/// Grid search on the validation seeds. Selection minimises the median final
/// gradient norm; ties go to the smaller stepsize, then the smaller threshold.
std::vector<TunedMethod> tune(const ExperimentConfig& config, const RunListener& listener = {});

struct SummaryRow {
    std::string cell_id;
    std::string method;
    std::size_t d = 0;
    double p = 0.0;
    std::size_t M = 0;
    double median_final = 0.0;
    double success_rate = 0.0;
    std::optional<double> median_cosine;
    std::uint64_t total_queries = 0;

    friend bool operator==(const SummaryRow&, const SummaryRow&) = default;
};

struct CellResult {
    std::string cell_id;
    std::vector<TunedMethod> tuned;
    std::vector<RunRecord> records;  // evaluation seeds, sorted (method, seed, t)
    std::vector<SummaryRow> summary;
    std::vector<MethodSummary> metrics;
    std::map<std::string, std::vector<double>> probe_cosines;  // by method name
    std::vector<std::string> notes;
};

/// Paired cosine probe: for each evaluation seed, `probe_batches` fresh
/// batches at x = probe_norm·e1 are aggregated by every tuned method, so all
/// methods are scored on identical directional samples.
std::map<std::string, std::vector<double>> cosine_probe(const ExperimentConfig& config,
                                                        const std::vector<TunedMethod>& tuned);

/// Tune, then evaluate every tuned method on the evaluation seeds.
CellResult run_cell(const ExperimentConfig& config, const std::string& cell_id, const RunListener& listener = {});

/// Evaluate given hyperparameters (no tuning).
CellResult evaluate_cell(const ExperimentConfig& config, const std::string& cell_id,
                         const std::vector<TunedMethod>& tuned, const RunListener& listener = {});

/// Representative cell; writes artifacts when config.output_dir is set.
CellResult run_representative(const ExperimentConfig& config, const RunListener& listener = {});

struct SweepResult {
    std::vector<CellResult> cells;
    std::vector<SummaryRow> summary;
};

SweepResult sweep_dimension(const ExperimentConfig& config, const std::vector<std::size_t>& d_list = {25, 50, 100, 200});
SweepResult sweep_tail(const ExperimentConfig& config, const std::vector<double>& p_list = {1.2, 1.5, 1.8, 2.5});

/// p > 2 lies outside the weak-L_p regime (p ≤ 2) and is reported as a sanity check.
std::string tail_cell_id(double p);
std::string dimension_cell_id(std::size_t d);

struct SmallBatchResult {
    std::optional<PlannedParams> plan;
    std::optional<std::string> infeasible;  // planner failure, no runs made
    std::uint64_t T_run = 0;
    bool capped = false;
    std::size_t momentum_successes = 0;
    std::size_t base_successes = 0;
    std::size_t seeds = 0;
    std::vector<double> momentum_finals;
    std::vector<double> base_finals;
    std::uint64_t momentum_queries = 0;
    std::uint64_t base_queries = 0;
    // capped runs: seeds whose gradient norm decreased from x0 to x_T
    std::size_t momentum_progress = 0;
    std::vector<SummaryRow> summary;
};

/// Momentum RSC-ZO with M = 1 and planner-supplied (β, α, T, M0, τ, τ0),
/// against base RSC-ZO with M = 1, the same α and τ, and the same total query
/// budget.
SmallBatchResult run_momentum_smallbatch(const ExperimentConfig& config);

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

/// 17 significant digits; empty string for a missing value.
std::string format_real(double v);
std::string format_optional(const std::optional<double>& v);

void write_records_csv(std::ostream& os, std::span<const RunRecord> records);
void write_summary_csv(std::ostream& os, std::span<const SummaryRow> rows);
void write_checks_csv(std::ostream& os, std::span<const LemmaCheckReport> reports);
void write_records_jsonl(std::ostream& os, std::span<const RunRecord> records);
void write_summary_jsonl(std::ostream& os, std::span<const SummaryRow> rows);
void write_checks_jsonl(std::ostream& os, std::span<const LemmaCheckReport> reports);

std::vector<RunRecord> parse_records_csv(std::istream& is);
std::vector<SummaryRow> parse_summary_csv(std::istream& is);

enum class OutputFormat { csv, jsonl };

/// Writes `text` to `path`, surfacing I/O errors with the path in the message.
void write_file(const std::filesystem::path& path, const std::string& text);

void emit_records(const std::filesystem::path& path, std::span<const RunRecord> records,
                  OutputFormat format = OutputFormat::csv);
void emit_summary(const std::filesystem::path& path, std::span<const SummaryRow> rows,
                  OutputFormat format = OutputFormat::csv);
void emit_checks(const std::filesystem::path& path, std::span<const LemmaCheckReport> reports,
                 OutputFormat format = OutputFormat::csv);

struct SeriesPoint {
    std::uint64_t t = 0;
    double median = 0.0;
    double q25 = 0.0;
    double q75 = 0.0;
};

/// Per-iteration median and quartiles of grad_norm across seeds.
std::vector<SeriesPoint> grad_norm_series(std::span<const RunRecord> records, std::string_view method);

/// Series files curve_<method>.csv, hist_cosine_<method>.csv,
/// hist_outlier_<method>.csv and curves.svg. Returns warnings (e.g. empty series).
std::vector<std::string> emit_plotdata(const CellResult& cell, const std::filesystem::path& dir, bool svg = true);

std::string render_svg(const std::map<std::string, std::vector<SeriesPoint>>& curves, std::string_view title);

/// Writes records, summary, tuned hyperparameters, and plot data for one cell.
void emit_cell(const CellResult& cell, const std::filesystem::path& dir, OutputFormat format = OutputFormat::csv);

/// Full lemma/assumption suite used by the `check` subcommand.
std::vector<LemmaCheckReport> run_check_suite(std::size_t n_samples, std::uint64_t seed);

} // namespace rsczo

#include "rsczo/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <sstream>

#include "rsczo/errors.hpp"
#include "rsczo/estimator.hpp"
#include "rsczo/rng.hpp"

namespace rsczo {

std::optional<double> cosine_alignment(std::span<const double> g, std::span<const double> grad_true)
{
    const double ng = norm2(g);
    const double nt = norm2(grad_true);
    if (ng == 0.0 || nt == 0.0 || !std::isfinite(ng) || !std::isfinite(nt))
        return std::nullopt;
    return std::clamp(dot(g, grad_true) / (ng * nt), -1.0, 1.0);
}

double median(std::vector<double> values)
{
    if (values.empty())
        throw InvalidArgument("median of empty sample");
    const std::size_t n = values.size();
    const auto mid = values.begin() + static_cast<std::ptrdiff_t>(n / 2);
    std::nth_element(values.begin(), mid, values.end());
    if (n % 2 == 1)
        return *mid;
    const double hi = *mid;
    const double lo = *std::max_element(values.begin(), mid);
    return 0.5 * (lo + hi);
}

double lower_median(std::vector<double> values)
{
    if (values.empty())
        throw InvalidArgument("median of empty sample");
    const auto mid = values.begin() + static_cast<std::ptrdiff_t>((values.size() - 1) / 2);
    std::nth_element(values.begin(), mid, values.end());
    return *mid;
}

double quantile(std::vector<double> values, double q)
{
    if (values.empty())
        throw InvalidArgument("quantile of empty sample");
    std::sort(values.begin(), values.end());
    const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

std::optional<double> outlier_ratio(std::span<const double> raw_scalars)
{
    if (raw_scalars.empty())
        return std::nullopt;
    std::vector<double> mags(raw_scalars.size());
    std::transform(raw_scalars.begin(), raw_scalars.end(), mags.begin(), [](double v) { return std::abs(v); });
    const double largest = *std::max_element(mags.begin(), mags.end());
    const double med = lower_median(std::move(mags));
    if (!(med > 0.0))
        return std::nullopt;
    return std::log10(largest / med);
}

BatchDiagnostics batch_diagnostics(const GradientEstimate& estimate, std::span<const double> grad_true)
{
    BatchDiagnostics out;
    out.cosine = cosine_alignment(estimate.g, grad_true);
    out.outlier_log_ratio = outlier_ratio(estimate.raw_scalars);
    if (estimate.mode == EstimatorMode::scalar_clip && estimate.batch_size > 0)
        out.clipped_fraction =
            static_cast<double>(estimate.clipped_count) / static_cast<double>(estimate.batch_size);
    else
        out.clipped_fraction = static_cast<double>(estimate.clipped_count);
    return out;
}

LemmaCheckReport make_report(std::string lemma_id, double lhs, double std_error, double rhs, std::size_t n,
                             std::string detail)
{
    LemmaCheckReport r;
    r.lemma_id = std::move(lemma_id);
    r.empirical_lhs = lhs;
    r.std_error = std_error;
    r.bound_rhs = rhs;
    r.n_samples = n;
    r.margin = rhs - (lhs - kCheckSlackStdErrors * std_error);
    r.passed = r.margin >= 0.0;
    r.detail = std::move(detail);
    return r;
}

ScalarSampler directional_sampler(const QuadraticProblem& problem, Vec x, double mu)
{
    if (x.size() != problem.dimension())
        throw InvalidArgument("sampler point dimension mismatch");
    // The quadratic oracle is stateless, so a private copy keeps the sampler self-contained.
    auto oracle = std::make_shared<QuadraticProblem>(problem);
    auto point = std::make_shared<Vec>(std::move(x));
    auto dir = std::make_shared<Direction>(Direction{Vec(problem.dimension())});
    return [oracle, point, dir, mu](std::uint64_t key) {
        const SampleKeys keys = split_sample_key(key);
        fill_sphere(dir->u, keys.direction);
        return two_point_directional(*oracle, *point, *dir, mu, keys.noise).y;
    };
}

namespace {

struct Moments {
    double mean = 0.0;
    double m2 = 0.0;
    std::size_t n = 0;

    void add(double v)
    {
        ++n;
        const double delta = v - mean;
        mean += delta / static_cast<double>(n);
        m2 += delta * (v - mean);
    }
    double std_error() const
    {
        return n > 1 ? std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n)) : 0.0;
    }
};

std::vector<double> draw(const ScalarSampler& sampler, std::size_t n, std::uint64_t key)
{
    std::vector<double> z(n);
    for (std::size_t i = 0; i < n; ++i)
        z[i] = sampler(combine(key, i));
    return z;
}

void require_tau_grid(std::span<const double> tau_grid, double S, double p)
{
    if (!(S > 0.0))
        throw InvalidArgument("tail scale S must be positive");
    if (!(p > 1.0))
        throw InvalidArgument("tail exponent p must exceed 1");
    for (double tau : tau_grid)
        if (!(tau >= 4.0 * S))
            throw InvalidArgument("threshold below 4S: the weak-L_p clipping bounds are not claimed there");
}

std::string describe(const std::string& label, const char* name, double value)
{
    std::ostringstream os;
    os.precision(6);
    if (!label.empty())
        os << label << ' ';
    os << name << '=' << value;
    return os.str();
}

} // namespace

std::vector<LemmaCheckReport> check_clipping_bias(const ScalarSampler& sampler, double S, double p,
                                                  std::span<const double> tau_grid, std::size_t n,
                                                  std::uint64_t key, const std::string& label)
{
    require_tau_grid(tau_grid, S, p);
    const std::vector<double> z = draw(sampler, n, key);
    std::vector<LemmaCheckReport> out;
    for (double tau : tau_grid) {
        Moments m;
        for (double v : z)
            m.add(std::max(std::abs(v) - tau, 0.0));  // |Z − ψ_τ(Z)|
        const double bound = std::pow(2.0, 2.0 * p + 1.0) / (p - 1.0) * std::pow(S, p) * std::pow(tau, 1.0 - p);
        out.push_back(make_report("clipping_bias", m.mean, m.std_error(), bound, n, describe(label, "tau", tau)));
    }
    return out;
}

std::vector<LemmaCheckReport> check_clipped_second_moment(const ScalarSampler& sampler, double S, double p,
                                                          std::span<const double> tau_grid, std::size_t n,
                                                          std::uint64_t key, const std::string& label)
{
    require_tau_grid(tau_grid, S, p);
    if (p > 2.0)
        throw InvalidArgument("clipped second-moment bound needs p <= 2");
    const std::vector<double> z = draw(sampler, n, key);
    std::vector<LemmaCheckReport> out;
    for (double tau : tau_grid) {
        Moments m;
        for (double v : z) {
            const double c = std::min(std::abs(v), tau);
            m.add(c * c);
        }
        const double bound = 64.0 * std::pow(S, p) * std::pow(tau, 2.0 - p) * (1.0 + std::log(tau / S));
        out.push_back(
            make_report("clipped_second_moment", m.mean, m.std_error(), bound, n, describe(label, "tau", tau)));
    }
    return out;
}

std::vector<LemmaCheckReport> check_smoothing_bias(const QuadraticProblem& problem, std::span<const Vec> x_grid,
                                                   std::span<const double> mu_grid, std::size_t n,
                                                   std::uint64_t key)
{
    if (problem.noise_spec().family != NoiseFamily::none)
        throw InvalidArgument("smoothing-bias check needs a noiseless problem");
    const double L = QuadraticProblem::smoothness();
    const std::size_t d = problem.dimension();
    QuadraticProblem oracle = problem;
    auto f = [&](std::span<const double> x) { return problem.mean_value(x); };

    std::vector<LemmaCheckReport> out;
    std::uint64_t cell = 0;
    for (const Vec& x : x_grid) {
        for (double mu : mu_grid) {
            ++cell;
            std::ostringstream detail;
            detail.precision(6);
            detail << "|x|=" << norm2(x) << " mu=" << mu;

            // value gap
            if (mu == 0.0) {
                out.push_back(make_report("smoothing_bias_value", 0.0, 0.0, 0.0, 0, detail.str()));
                out.push_back(make_report("smoothing_bias_gradient", 0.0, 0.0, 0.0, 0, detail.str()));
                continue;
            }
            const MonteCarloEstimate fmu = smoothed_value_mc(f, x, mu, n, combine(key, 2 * cell));
            const double gap = std::abs(fmu.mean - f(x));
            out.push_back(make_report("smoothing_bias_value", gap, fmu.std_error, L * mu * mu / 2.0, n, detail.str()));

            // gradient gap: d·D_μf(x,u)·u averaged over u
            std::vector<Moments> coords(d);
            Direction dir{Vec(d)};
            const std::uint64_t gkey = combine(key, 2 * cell + 1);
            for (std::size_t i = 0; i < n; ++i) {
                const SampleKeys keys = split_sample_key(combine(gkey, i));
                fill_sphere(dir.u, keys.direction);
                const double y = two_point_directional(oracle, x, dir, mu, keys.noise).y;
                for (std::size_t j = 0; j < d; ++j)
                    coords[j].add(static_cast<double>(d) * y * dir.u[j]);
            }
            const Vec grad = problem.true_gradient(x);
            double err_sq = 0.0;
            double se_sq = 0.0;
            bool within_five = true;
            for (std::size_t j = 0; j < d; ++j) {
                const double e = coords[j].mean - grad[j];
                err_sq += e * e;
                se_sq += coords[j].std_error() * coords[j].std_error();
                if (std::abs(e) > 5.0 * coords[j].std_error())
                    within_five = false;
            }
            LemmaCheckReport r =
                make_report("smoothing_bias_gradient", std::sqrt(err_sq), std::sqrt(se_sq), L * mu, n, detail.str());
            r.passed = r.passed && within_five;
            out.push_back(std::move(r));
        }
    }
    return out;
}

std::vector<LemmaCheckReport> check_weak_tail(const ScalarSampler& noise_norm, double p, double sigma,
                                              std::span<const double> t_grid, std::size_t n, std::uint64_t key,
                                              const std::string& label)
{
    const std::vector<double> z = draw(noise_norm, n, key);
    std::vector<LemmaCheckReport> out;
    for (double t : t_grid) {
        const auto exceed = static_cast<double>(std::count_if(z.begin(), z.end(), [t](double v) { return v > t; }));
        const double freq = exceed / static_cast<double>(n);
        const double bound = std::min(1.0, std::pow(sigma / t, p));
        const double se = std::sqrt(bound * (1.0 - bound) / static_cast<double>(n));
        out.push_back(make_report("weak_tail", freq, se, bound, n, describe(label, "t", t)));
    }
    return out;
}

bool gradient_bound_from_suboptimality(double grad_norm_sq, double L, double gap, double rel_tol)
{
    return grad_norm_sq <= 2.0 * L * gap * (1.0 + rel_tol) + 1e-300;
}

Histogram make_histogram(std::span<const double> values, double lo, double hi, std::size_t bins)
{
    Histogram h;
    h.counts.assign(bins, 0);
    h.edges.resize(bins + 1);
    const double width = (hi - lo) / static_cast<double>(bins);
    for (std::size_t i = 0; i <= bins; ++i)
        h.edges[i] = lo + width * static_cast<double>(i);
    for (double v : values) {
        if (v < lo) {
            ++h.below;
        } else if (v >= hi) {
            ++h.above;
        } else {
            const auto b = std::min(bins - 1, static_cast<std::size_t>((v - lo) / width));
            ++h.counts[b];
        }
    }
    return h;
}

std::vector<MethodSummary> aggregate_metrics(std::span<const RunRecord> records, double eps)
{
    struct RunFinal {
        std::uint64_t t = 0;
        double grad_norm = 0.0;
        std::uint64_t queries = 0;
    };
    struct Acc {
        std::map<std::uint64_t, RunFinal> runs;
        std::vector<double> cosines;
        std::vector<double> outliers;
    };
    std::map<std::string, Acc> by_method;
    for (const RunRecord& r : records) {
        Acc& acc = by_method[r.method];
        auto [it, inserted] = acc.runs.try_emplace(r.seed, RunFinal{r.t, r.grad_norm, r.queries});
        if (!inserted && r.t >= it->second.t)
            it->second = {r.t, r.grad_norm, r.queries};
        if (r.cosine)
            acc.cosines.push_back(*r.cosine);
        if (r.outlier_log_ratio)
            acc.outliers.push_back(*r.outlier_log_ratio);
    }

    std::vector<MethodSummary> out;
    for (auto& [method, acc] : by_method) {
        MethodSummary s;
        s.method = method;
        s.seeds = acc.runs.size();
        std::size_t successes = 0;
        for (const auto& [seed, fin] : acc.runs) {
            s.finals.push_back(fin.grad_norm);
            if (fin.grad_norm <= eps)
                ++successes;
            s.total_queries = std::max(s.total_queries, fin.queries);
        }
        s.median_final = median(s.finals);
        s.success_rate = static_cast<double>(successes) / static_cast<double>(s.seeds);
        if (!acc.cosines.empty())
            s.median_cosine = median(acc.cosines);
        s.outlier_histogram = make_histogram(acc.outliers, 0.0, 6.0, 24);
        out.push_back(std::move(s));
    }
    return out;
}

} // namespace rsczo

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "rsczo/errors.hpp"
#include "rsczo/harness.hpp"

namespace rsczo {

std::string format_real(double v)
{
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string format_optional(const std::optional<double>& v) { return v ? format_real(*v) : std::string(); }

void write_records_csv(std::ostream& os, std::span<const RunRecord> records)
{
    os << "method,seed,t,grad_norm,cosine,outlier_log_ratio,clipped_fraction,queries\n";
    for (const RunRecord& r : records)
        os << r.method << ',' << r.seed << ',' << r.t << ',' << format_real(r.grad_norm) << ','
           << format_optional(r.cosine) << ',' << format_optional(r.outlier_log_ratio) << ','
           << format_real(r.clipped_fraction) << ',' << r.queries << '\n';
}

void write_summary_csv(std::ostream& os, std::span<const SummaryRow> rows)
{
    os << "cell_id,method,d,p,M,median_final,success_rate,median_cosine,total_queries\n";
    for (const SummaryRow& r : rows)
        os << r.cell_id << ',' << r.method << ',' << r.d << ',' << format_real(r.p) << ',' << r.M << ','
           << format_real(r.median_final) << ',' << format_real(r.success_rate) << ','
           << format_optional(r.median_cosine) << ',' << r.total_queries << '\n';
}

void write_checks_csv(std::ostream& os, std::span<const LemmaCheckReport> reports)
{
    os << "lemma_id,empirical_lhs,bound_rhs,n_samples,passed,margin\n";
    for (const LemmaCheckReport& r : reports)
        os << r.lemma_id << ',' << format_real(r.empirical_lhs) << ',' << format_real(r.bound_rhs) << ','
           << r.n_samples << ',' << (r.passed ? "true" : "false") << ',' << format_real(r.margin) << '\n';
}

namespace {

using nlohmann::ordered_json;

ordered_json optional_json(const std::optional<double>& v)
{
    if (!v || !std::isfinite(*v))
        return nullptr;
    return *v;
}

// JSON has no infinities; non-finite reals are written as strings.
ordered_json real_json(double v)
{
    if (std::isfinite(v))
        return v;
    return format_real(v);
}

} // namespace

void write_records_jsonl(std::ostream& os, std::span<const RunRecord> records)
{
    for (const RunRecord& r : records) {
        ordered_json j;
        j["method"] = r.method;
        j["seed"] = r.seed;
        j["t"] = r.t;
        j["grad_norm"] = real_json(r.grad_norm);
        j["cosine"] = optional_json(r.cosine);
        j["outlier_log_ratio"] = optional_json(r.outlier_log_ratio);
        j["clipped_fraction"] = r.clipped_fraction;
        j["queries"] = r.queries;
        os << j.dump() << '\n';
    }
}

void write_summary_jsonl(std::ostream& os, std::span<const SummaryRow> rows)
{
    for (const SummaryRow& r : rows) {
        ordered_json j;
        j["cell_id"] = r.cell_id;
        j["method"] = r.method;
        j["d"] = r.d;
        j["p"] = r.p;
        j["M"] = r.M;
        j["median_final"] = real_json(r.median_final);
        j["success_rate"] = r.success_rate;
        j["median_cosine"] = optional_json(r.median_cosine);
        j["total_queries"] = r.total_queries;
        os << j.dump() << '\n';
    }
}

void write_checks_jsonl(std::ostream& os, std::span<const LemmaCheckReport> reports)
{
    for (const LemmaCheckReport& r : reports) {
        ordered_json j;
        j["lemma_id"] = r.lemma_id;
        j["empirical_lhs"] = real_json(r.empirical_lhs);
        j["bound_rhs"] = real_json(r.bound_rhs);
        j["n_samples"] = r.n_samples;
        j["passed"] = r.passed;
        j["margin"] = real_json(r.margin);
        j["detail"] = r.detail;
        os << j.dump() << '\n';
    }
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(',', start);
        out.push_back(line.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
        if (pos == std::string::npos)
            return out;
        start = pos + 1;
    }
}

double to_real(const std::string& s)
{
    if (s == "inf")
        return std::numeric_limits<double>::infinity();
    if (s == "-inf")
        return -std::numeric_limits<double>::infinity();
    if (s == "nan")
        return std::numeric_limits<double>::quiet_NaN();
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw ConfigError("malformed number '" + s + "' in CSV");
    return v;
}

std::optional<double> to_optional(const std::string& s)
{
    if (s.empty())
        return std::nullopt;
    return to_real(s);
}

std::uint64_t to_u64(const std::string& s)
{
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw ConfigError("malformed integer '" + s + "' in CSV");
    return v;
}

template <class Row>
std::vector<Row> parse_csv(std::istream& is, std::string_view header, std::size_t columns,
                           Row (*convert)(const std::vector<std::string>&))
{
    std::string line;
    if (!std::getline(is, line) || line != header)
        throw ConfigError("unexpected CSV header: '" + line + "'");
    std::vector<Row> out;
    while (std::getline(is, line)) {
        if (line.empty())
            continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != columns)
            throw ConfigError("CSV row has " + std::to_string(fields.size()) + " fields, expected " +
                              std::to_string(columns));
        out.push_back(convert(fields));
    }
    return out;
}

RunRecord record_from_fields(const std::vector<std::string>& f)
{
    return {f[0], to_u64(f[1]), to_u64(f[2]), to_real(f[3]), to_optional(f[4]), to_optional(f[5]),
            to_real(f[6]), to_u64(f[7])};
}

SummaryRow summary_from_fields(const std::vector<std::string>& f)
{
    SummaryRow r;
    r.cell_id = f[0];
    r.method = f[1];
    r.d = to_u64(f[2]);
    r.p = to_real(f[3]);
    r.M = to_u64(f[4]);
    r.median_final = to_real(f[5]);
    r.success_rate = to_real(f[6]);
    r.median_cosine = to_optional(f[7]);
    r.total_queries = to_u64(f[8]);
    return r;
}

} // namespace

std::vector<RunRecord> parse_records_csv(std::istream& is)
{
    return parse_csv<RunRecord>(is, "method,seed,t,grad_norm,cosine,outlier_log_ratio,clipped_fraction,queries", 8,
                                record_from_fields);
}

std::vector<SummaryRow> parse_summary_csv(std::istream& is)
{
    return parse_csv<SummaryRow>(is, "cell_id,method,d,p,M,median_final,success_rate,median_cosine,total_queries",
                                 9, summary_from_fields);
}

void write_file(const std::filesystem::path& path, const std::string& text)
{
    std::error_code ec;
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path(), ec);
    if (ec)
        throw Error("cannot create directory " + path.parent_path().string() + ": " + ec.message());
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error("cannot open " + path.string() + " for writing");
    out << text;
    out.flush();
    if (!out)
        throw Error("write failed for " + path.string());
}

void emit_records(const std::filesystem::path& path, std::span<const RunRecord> records, OutputFormat format)
{
    std::ostringstream os;
    if (format == OutputFormat::csv)
        write_records_csv(os, records);
    else
        write_records_jsonl(os, records);
    write_file(path, os.str());
}

void emit_summary(const std::filesystem::path& path, std::span<const SummaryRow> rows, OutputFormat format)
{
    std::ostringstream os;
    if (format == OutputFormat::csv)
        write_summary_csv(os, rows);
    else
        write_summary_jsonl(os, rows);
    write_file(path, os.str());
}

void emit_checks(const std::filesystem::path& path, std::span<const LemmaCheckReport> reports, OutputFormat format)
{
    std::ostringstream os;
    if (format == OutputFormat::csv)
        write_checks_csv(os, reports);
    else
        write_checks_jsonl(os, reports);
    write_file(path, os.str());
}

std::vector<SeriesPoint> grad_norm_series(std::span<const RunRecord> records, std::string_view method)
{
    std::map<std::uint64_t, std::vector<double>> by_t;
    for (const RunRecord& r : records)
        if (r.method == method)
            by_t[r.t].push_back(r.grad_norm);
    std::vector<SeriesPoint> out;
    out.reserve(by_t.size());
    for (auto& [t, v] : by_t)
        out.push_back({t, median(v), quantile(v, 0.25), quantile(v, 0.75)});
    return out;
}

namespace {

std::string histogram_csv(const Histogram& h)
{
    std::ostringstream os;
    os << "bin_lo,bin_hi,count\n";
    for (std::size_t i = 0; i < h.counts.size(); ++i)
        os << format_real(h.edges[i]) << ',' << format_real(h.edges[i + 1]) << ',' << h.counts[i] << '\n';
    return os.str();
}

} // namespace

std::vector<std::string> emit_plotdata(const CellResult& cell, const std::filesystem::path& dir, bool svg)
{
    std::vector<std::string> warnings;
    std::map<std::string, std::vector<SeriesPoint>> curves;
    for (const MethodSummary& ms : cell.metrics) {
        const auto series = grad_norm_series(cell.records, ms.method);
        if (series.empty()) {
            warnings.push_back("no iterations recorded for " + ms.method + "; curve file skipped");
            continue;
        }
        std::ostringstream os;
        os << "iteration,median,q25,q75\n";
        for (const SeriesPoint& pt : series)
            os << pt.t << ',' << format_real(pt.median) << ',' << format_real(pt.q25) << ',' << format_real(pt.q75)
               << '\n';
        write_file(dir / ("curve_" + ms.method + ".csv"), os.str());
        write_file(dir / ("hist_outlier_" + ms.method + ".csv"), histogram_csv(ms.outlier_histogram));
        curves[ms.method] = series;
    }
    for (const auto& [method, values] : cell.probe_cosines)
        write_file(dir / ("hist_cosine_" + method + ".csv"), histogram_csv(make_histogram(values, -1.0, 1.0, 40)));
    if (svg && !curves.empty())
        write_file(dir / "curves.svg", render_svg(curves, cell.cell_id));
    return warnings;
}

std::string render_svg(const std::map<std::string, std::vector<SeriesPoint>>& curves, std::string_view title)
{
    constexpr double W = 640, H = 400, left = 60, right = 20, top = 30, bottom = 40;
    double ymin = std::numeric_limits<double>::infinity();
    double ymax = 0.0;
    std::uint64_t tmax = 1;
    for (const auto& [name, pts] : curves) {
        for (const SeriesPoint& p : pts) {
            if (std::isfinite(p.median) && p.median > 0.0) {
                ymin = std::min(ymin, p.median);
                ymax = std::max(ymax, p.median);
            }
            tmax = std::max(tmax, p.t);
        }
    }
    if (!(ymax > 0.0)) {
        ymin = 0.1;
        ymax = 1.0;
    }
    const double lo = std::floor(std::log10(ymin));
    const double hi = std::max(lo + 1.0, std::ceil(std::log10(ymax)));
    const auto sx = [&](double t) { return left + (W - left - right) * t / static_cast<double>(tmax); };
    const auto sy = [&](double v) {
        return top + (H - top - bottom) * (hi - std::log10(v)) / (hi - lo);
    };

    static const char* colors[] = {"#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e"};
    std::ostringstream os;
    os.precision(6);
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << title
       << ": grad norm vs iteration (median)</text>\n";
    for (double e = lo; e <= hi; e += 1.0) {
        const double y = sy(std::pow(10.0, e));
        os << "<line x1=\"" << left << "\" x2=\"" << W - right << "\" y1=\"" << y << "\" y2=\"" << y
           << "\" stroke=\"#ddd\"/>\n";
        os << "<text x=\"" << left - 5 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\" font-size=\"11\">1e"
           << static_cast<int>(e) << "</text>\n";
    }
    os << "<text x=\"" << W / 2 << "\" y=\"" << H - 8 << "\" text-anchor=\"middle\" font-size=\"11\">iteration (0.."
       << tmax << ")</text>\n";
    std::size_t k = 0;
    for (const auto& [name, pts] : curves) {
        const char* color = colors[k % 5];
        os << "<polyline class=\"series\" data-method=\"" << name << "\" fill=\"none\" stroke=\"" << color
           << "\" points=\"";
        bool first = true;
        for (const SeriesPoint& p : pts) {
            if (!(std::isfinite(p.median) && p.median > 0.0))
                continue;
            os << (first ? "" : " ") << sx(static_cast<double>(p.t)) << ',' << sy(p.median);
            first = false;
        }
        os << "\"/>\n";
        os << "<text x=\"" << W - right - 150 << "\" y=\"" << top + 15 * (k + 1) << "\" fill=\"" << color
           << "\" font-size=\"12\">" << name << "</text>\n";
        ++k;
    }
    os << "</svg>\n";
    return os.str();
}

void emit_cell(const CellResult& cell, const std::filesystem::path& dir, OutputFormat format)
{
    const bool csv = format == OutputFormat::csv;
    emit_records(dir / (csv ? "records.csv" : "records.jsonl"), cell.records, format);
    emit_summary(dir / (csv ? "summary.csv" : "summary.jsonl"), cell.summary, format);

    std::ostringstream tuned;
    tuned << "method,alpha,threshold,validation_median,untunable\n";
    for (const TunedMethod& tm : cell.tuned)
        tuned << to_string(tm.method) << ',' << format_real(tm.hyper.alpha) << ','
              << format_optional(tm.hyper.threshold) << ',' << format_real(tm.validation_median) << ','
              << (tm.untunable ? "true" : "false") << '\n';
    write_file(dir / "tuned.csv", tuned.str());

    std::vector<std::string> notes = cell.notes;
    for (auto& w : emit_plotdata(cell, dir / "plots"))
        notes.push_back(std::move(w));
    if (!notes.empty()) {
        std::string text;
        for (const auto& n : notes)
            text += n + '\n';
        write_file(dir / "notes.txt", text);
        for (const auto& n : notes)
            std::cerr << "warning: " << n << '\n';
    }
}

} // namespace rsczo

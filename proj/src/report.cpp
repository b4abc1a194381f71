#include "ratebench/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include <fmt/format.h>

#include "csv.hpp"
#include "ratebench/error.hpp"

namespace ratebench::eval {

namespace fs = std::filesystem;

LineFit ols_fit(const std::vector<TradeoffRow>& rows) {
    std::vector<double> x;
    std::vector<double> y;
    for (const auto& r : rows) {
        x.push_back(r.ci);
        y.push_back(r.accuracy);
    }
    return ols_fit(x, y);
}

std::string file_stem(std::string_view name) {
    std::string out;
    for (char c : name) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' ||
                        c == '_' || c == '.' || c == '+';
        out.push_back(ok ? c : '_');
    }
    return out.empty() ? "_" : out;
}

namespace {

class Writer {
public:
    Writer(const fs::path& dir, const fs::path& rel, std::vector<fs::path>& written) : path_(dir / rel) {
        fs::create_directories(path_.parent_path());
        out_.open(path_, std::ios::binary);
        if (!out_) throw IoError(fmt::format("cannot write {}", path_.string()));
        written.push_back(rel);
    }
    ~Writer() noexcept(false) {
        out_.close();
        if (!out_ && std::uncaught_exceptions() == 0) throw IoError(fmt::format("failed writing {}", path_.string()));
    }
    Writer(const Writer&) = delete;
    Writer& operator=(const Writer&) = delete;

    template <typename... Args>
    void line(fmt::format_string<Args...> f, Args&&... args) {
        out_ << fmt::format(f, std::forward<Args>(args)...) << '\n';
    }

private:
    fs::path path_;
    std::ofstream out_;
};

std::string num(double v) { return fmt::format("{:.4f}", v); }

void write_svg(const fs::path& dir, const fs::path& rel, std::vector<fs::path>& written, const std::string& dataset,
               const std::vector<const TradeoffRow*>& rows, const std::optional<LineFit>& fit) {
    constexpr double kW = 640, kH = 480, kLeft = 70, kRight = 20, kTop = 40, kBottom = 60;
    double xmax = 0.0;
    for (const auto* r : rows) xmax = std::max(xmax, r->ci);
    xmax = std::max(0.5, std::ceil(xmax * 4.0 + 1e-9) / 4.0);
    const auto px = [&](double x) { return kLeft + x / xmax * (kW - kLeft - kRight); };
    const auto py = [&](double y) { return kH - kBottom - y * (kH - kTop - kBottom); };

    Writer w(dir, rel, written);
    w.line(R"(<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 640 480" width="640" height="480">)");
    w.line(R"(<rect x="0" y="0" width="640" height="480" fill="white"/>)");
    w.line(R"(<text x="320" y="24" text-anchor="middle" font-family="sans-serif" font-size="16">{}</text>)", dataset);
    w.line(R"(<line x1="{:.2f}" y1="{:.2f}" x2="{:.2f}" y2="{:.2f}" stroke="black"/>)", px(0), py(0), px(xmax), py(0));
    w.line(R"(<line x1="{:.2f}" y1="{:.2f}" x2="{:.2f}" y2="{:.2f}" stroke="black"/>)", px(0), py(0), px(0), py(1));
    for (int t = 0; t <= 4; ++t) {
        const double y = t / 4.0;
        w.line(R"(<text x="{:.2f}" y="{:.2f}" text-anchor="end" font-family="sans-serif" font-size="11">{:.2f}</text>)",
               px(0) - 6, py(y) + 4, y);
    }
    for (double x = 0.0; x <= xmax + 1e-9; x += 0.25)
        w.line(R"(<text x="{:.2f}" y="{:.2f}" text-anchor="middle" font-family="sans-serif" font-size="11">{:.2f}</text>)",
               px(x), py(0) + 16, x);
    w.line(R"(<text x="{:.2f}" y="{:.2f}" text-anchor="middle" font-family="sans-serif" font-size="13">Composite interpretability score</text>)",
           (px(0) + px(xmax)) / 2, kH - 16);
    w.line(R"svg(<text x="18" y="{:.2f}" text-anchor="middle" font-family="sans-serif" font-size="13" transform="rotate(-90 18 {:.2f})">Accuracy</text>)svg",
           (py(0) + py(1)) / 2, (py(0) + py(1)) / 2);
    if (fit) {
        const double y0 = std::clamp(fit->intercept, 0.0, 1.0);
        const double y1 = std::clamp(fit->intercept + fit->slope * xmax, 0.0, 1.0);
        w.line(R"(<line x1="{:.2f}" y1="{:.2f}" x2="{:.2f}" y2="{:.2f}" stroke="firebrick" stroke-dasharray="6 4"/>)",
               px(0), py(y0), px(xmax), py(y1));
    }
    for (const auto* r : rows)
        w.line(R"(<circle cx="{:.2f}" cy="{:.2f}" r="4" fill="steelblue"><title>{} ({:.2f}, {:.4f})</title></circle>)",
               px(r->ci), py(r->accuracy), r->pipeline, r->ci, r->accuracy);
    w.line("</svg>");
}

void write_fits_and_plots(const std::map<std::string, std::vector<const TradeoffRow*>>& by_dataset,
                          const fs::path& dir, std::vector<fs::path>& written) {
    std::map<std::string, std::optional<LineFit>> fits;
    {
        Writer w(dir, "fit.csv", written);
        w.line("dataset,n,slope,intercept");
        for (const auto& [name, rows] : by_dataset) {
            std::vector<TradeoffRow> copy;
            for (const auto* r : rows) copy.push_back(*r);
            std::optional<LineFit> fit;
            try {
                fit = ols_fit(copy);
            } catch (const DataError&) {
            }
            fits[name] = fit;
            if (fit) w.line("{},{},{:.6f},{:.6f}", name, rows.size(), fit->slope, fit->intercept);
            else w.line("{},{},,", name, rows.size());
        }
    }
    for (const auto& [name, rows] : by_dataset)
        write_svg(dir, fmt::format("tradeoff_{}.svg", file_stem(name)), written, name, rows, fits[name]);
}

}  // namespace

std::vector<fs::path> emit_tradeoff(const std::vector<TradeoffRow>& rows, const fs::path& dir) {
    if (rows.empty()) throw ArgumentError("nothing to report");
    std::vector<const TradeoffRow*> sorted;
    for (const auto& r : rows) sorted.push_back(&r);
    std::sort(sorted.begin(), sorted.end(), [](const TradeoffRow* a, const TradeoffRow* b) {
        if (a->dataset != b->dataset) return a->dataset < b->dataset;
        if (a->ci != b->ci) return a->ci < b->ci;
        return a->pipeline < b->pipeline;
    });
    std::map<std::string, std::vector<const TradeoffRow*>> by_dataset;
    for (const auto* r : sorted) by_dataset[r->dataset].push_back(r);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError(fmt::format("cannot create {}: {}", dir.string(), ec.message()));
    std::vector<fs::path> written;
    write_fits_and_plots(by_dataset, dir, written);
    std::sort(written.begin(), written.end());
    return written;
}

std::vector<fs::path> emit_report(const ReportData& data, const fs::path& dir) {
    if (data.outcomes.empty() && data.sentiment.empty()) throw ArgumentError("nothing to report");
    std::vector<const PipelineOutcome*> outcomes;
    for (const auto& o : data.outcomes) outcomes.push_back(&o);
    std::sort(outcomes.begin(), outcomes.end(), [](const PipelineOutcome* a, const PipelineOutcome* b) {
        if (a->row.dataset != b->row.dataset) return a->row.dataset < b->row.dataset;
        if (a->row.ci != b->row.ci) return a->row.ci < b->row.ci;
        return a->row.pipeline < b->row.pipeline;
    });
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError(fmt::format("cannot create {}: {}", dir.string(), ec.message()));

    std::vector<fs::path> written;
    std::map<std::string, std::vector<const TradeoffRow*>> by_dataset;
    {
        Writer w(dir, "tradeoff.csv", written);
        w.line("dataset,pipeline,ci,accuracy");
        for (const auto* o : outcomes) {
            w.line("{},{},{},{}", o->row.dataset, o->row.pipeline, num(o->row.ci), num(o->row.accuracy));
            by_dataset[o->row.dataset].push_back(&o->row);
        }
    }
    for (const auto* o : outcomes) {
        Writer w(dir, fs::path("confusion") / fmt::format("{}__{}.csv", file_stem(o->row.dataset), file_stem(o->row.pipeline)),
                 written);
        w.line("true\\pred,1,2,3,4,5");
        for (std::size_t t = 0; t < 5; ++t) {
            const auto& r = o->confusion.counts[t];
            w.line("{},{},{},{},{},{}", t + 1, r[0], r[1], r[2], r[3], r[4]);
        }
    }
    std::vector<const SentimentSummary*> sent;
    for (const auto& s : data.sentiment) sent.push_back(&s);
    std::sort(sent.begin(), sent.end(), [](const SentimentSummary* a, const SentimentSummary* b) {
        return std::tie(a->dataset, a->source, a->scope) < std::tie(b->dataset, b->source, b->scope);
    });
    {
        Writer w(dir, "correlations.csv", written);
        w.line("dataset,source,scope,n,pearson");
        for (const auto* s : sent)
            w.line("{},{},{},{},{}", s->dataset, s->source, s->scope, s->n, s->pearson ? num(*s->pearson) : "");
    }
    {
        Writer w(dir, "box_stats.csv", written);
        w.line("dataset,source,scope,star,n,whisker_low,q1,median,q3,whisker_high,outliers");
        for (const auto* s : sent)
            for (const auto& b : s->box)
                w.line("{},{},{},{},{},{},{},{},{},{},{}", s->dataset, s->source, s->scope, b.star, b.n,
                       num(b.whisker_low), num(b.q1), num(b.median), num(b.q3), num(b.whisker_high), b.outliers.size());
    }
    write_fits_and_plots(by_dataset, dir, written);

    std::sort(written.begin(), written.end());
    return written;
}

std::vector<TradeoffRow> read_tradeoff_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError(fmt::format("cannot open {}", path.string()));
    std::string line;
    if (!std::getline(in, line) || line != "dataset,pipeline,ci,accuracy")
        throw FormatError(fmt::format("{}: expected header dataset,pipeline,ci,accuracy", path.string()));
    std::vector<TradeoffRow> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto f = detail::split_csv_line(line);
        if (f.size() != 4) throw FormatError(fmt::format("{}:{}: expected 4 columns", path.string(), line_no));
        try {
            rows.push_back({f[0], f[1], std::stod(f[2]), std::stod(f[3])});
        } catch (const std::exception&) {
            throw FormatError(fmt::format("{}:{}: bad number", path.string(), line_no));
        }
    }
    return rows;
}

}  // namespace ratebench::eval

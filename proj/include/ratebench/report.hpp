#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ratebench/stats.hpp"

namespace ratebench::eval {

struct TradeoffRow {
    std::string dataset;
    std::string pipeline;
    double ci = 0.0;
    double accuracy = 0.0;
};

/// Test-set outcome of one pipeline on one dataset.
struct PipelineOutcome {
    TradeoffRow row;
    ConfusionMatrix confusion;
};

/// Sentiment-score agreement with the true ratings for one score source.
struct SentimentSummary {
    std::string dataset;
    std::string source;  // "VADER" or the external score tag
    std::string scope;   // "full" or "test"
    std::size_t n = 0;
    std::optional<double> pearson;  // unset when undefined
    std::vector<BoxStats> box;
};

struct ReportData {
    std::vector<PipelineOutcome> outcomes;
    std::vector<SentimentSummary> sentiment;
};

LineFit ols_fit(const std::vector<TradeoffRow>& rows);

/// Writes tradeoff.csv, fit.csv, correlations.csv, box_stats.csv,
/// confusion/<dataset>__<pipeline>.csv and tradeoff_<dataset>.svg under dir.
/// Rows are ordered by dataset, CI and pipeline name, so output bytes depend
/// only on the data. Returns the written paths relative to dir, sorted.
std::vector<std::filesystem::path> emit_report(const ReportData& data, const std::filesystem::path& dir);

/// Writes only fit.csv and the per-dataset SVGs for existing trade-off rows.
std::vector<std::filesystem::path> emit_tradeoff(const std::vector<TradeoffRow>& rows, const std::filesystem::path& dir);

/// Reads a tradeoff.csv written by emit_report.
std::vector<TradeoffRow> read_tradeoff_csv(const std::filesystem::path& path);

/// Filename-safe form of a dataset or pipeline name.
std::string file_stem(std::string_view name);

}  // namespace ratebench::eval

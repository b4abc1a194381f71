#include "ratebench/ciscore.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <tuple>

#include <fmt/format.h>

#include "csv.hpp"
#include "ratebench/error.hpp"

namespace ratebench::ci {

using nlohmann::json;

void InterpretabilityTable::validate() const {
    if (models.empty()) throw ConfigError("interpretability table has no models");
    double wsum = 0.0;
    for (double w : criterion_weights) {
        if (w < 0.0) throw ConfigError("criterion weights must be non-negative");
        wsum += w;
    }
    if (param_weight < 0.0) throw ConfigError("parameter weight must be non-negative");
    wsum += param_weight;
    if (std::abs(wsum - 1.0) > 1e-9) throw ConfigError(fmt::format("weights sum to {} instead of 1", wsum));
    for (std::size_t i = 0; i < models.size(); ++i) {
        const auto& m = models[i];
        if (m.name.empty()) throw ConfigError("model with empty name");
        for (std::size_t j = 0; j < i; ++j)
            if (models[j].name == m.name) throw ConfigError(fmt::format("model {} listed twice", m.name));
        for (std::size_t c = 0; c < kCriteria.size(); ++c)
            if (!(m.ranks[c] > 0.0))
                throw ConfigError(fmt::format("{}: {} rank must be positive", m.name, kCriteria[c]));
        if (!(m.params >= 0.0)) throw ConfigError(fmt::format("{}: parameter count must be >= 0", m.name));
    }
    if (!(param_max_value() > 0.0)) throw ConfigError("maximum parameter count is 0");
}

const ModelEntry& InterpretabilityTable::model(std::string_view name) const {
    for (const auto& m : models)
        if (m.name == name) return m;
    throw ConfigError(fmt::format("model {} is not in the interpretability table", name));
}

bool InterpretabilityTable::contains(std::string_view name) const {
    return std::any_of(models.begin(), models.end(), [&](const ModelEntry& m) { return m.name == name; });
}

double InterpretabilityTable::rank_max(std::size_t criterion) const {
    double mx = 0.0;
    for (const auto& m : models) mx = std::max(mx, m.ranks.at(criterion));
    return mx;
}

double InterpretabilityTable::param_max_value() const {
    if (param_max) return *param_max;
    double mx = 0.0;
    for (const auto& m : models) mx = std::max(mx, m.params);
    return mx;
}

InterpretabilityTable InterpretabilityTable::defaults() {
    InterpretabilityTable t;
    t.models = {
        {"VADER", {1.45, 1.60, 1.55}, 0.0, 0.20},
        {"LR", {1.55, 1.70, 1.55}, 3.0, 0.22},
        {"NB", {2.30, 2.55, 2.60}, 15.0, 0.35},
        {"SVM", {3.10, 3.15, 3.25}, 20131.0, 0.45},
        {"NN", {4.00, 4.00, 4.20}, 67845.0, 0.57},
        {"BERT", {4.60, 4.40, 4.50}, 183.7e6, 1.00},
    };
    return t;
}

json to_json(const InterpretabilityTable& t) {
    json weights = json::object();
    for (std::size_t c = 0; c < kCriteria.size(); ++c) weights[std::string(kCriteria[c])] = t.criterion_weights[c];
    weights["parameters"] = t.param_weight;
    json models = json::array();
    for (const auto& m : t.models) {
        json ranks = json::object();
        for (std::size_t c = 0; c < kCriteria.size(); ++c) ranks[std::string(kCriteria[c])] = m.ranks[c];
        json e = {{"name", m.name}, {"ranks", ranks}, {"params", m.params}};
        if (m.printed_score) e["score"] = *m.printed_score;
        models.push_back(std::move(e));
    }
    json out = {{"weights", weights}, {"models", models}};
    if (t.param_max) out["param_max"] = *t.param_max;
    return out;
}

InterpretabilityTable table_from_json(const json& j) {
    InterpretabilityTable t;
    try {
        if (j.contains("weights")) {
            const auto& w = j.at("weights");
            for (std::size_t c = 0; c < kCriteria.size(); ++c)
                t.criterion_weights[c] = w.at(std::string(kCriteria[c])).get<double>();
            t.param_weight = w.at("parameters").get<double>();
        }
        if (j.contains("param_max") && !j.at("param_max").is_null()) t.param_max = j.at("param_max").get<double>();
        for (const auto& e : j.at("models")) {
            ModelEntry m;
            m.name = e.at("name").get<std::string>();
            for (std::size_t c = 0; c < kCriteria.size(); ++c)
                m.ranks[c] = e.at("ranks").at(std::string(kCriteria[c])).get<double>();
            m.params = e.at("params").get<double>();
            if (e.contains("score") && !e.at("score").is_null()) m.printed_score = e.at("score").get<double>();
            t.models.push_back(std::move(m));
        }
    } catch (const json::exception& e) {
        throw ConfigError(fmt::format("interpretability table: {}", e.what()));
    }
    t.validate();
    return t;
}

InterpretabilityTable load_table(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError(fmt::format("cannot open table {}", path.string()));
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw FormatError(fmt::format("{}: {}", path.string(), e.what()));
    }
    return table_from_json(j);
}

void save_table(const InterpretabilityTable& t, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError(fmt::format("cannot write {}", path.string()));
    out << to_json(t).dump(2) << '\n';
}

double interpretability_score(std::string_view name, const InterpretabilityTable& t) {
    const auto& m = t.model(name);
    const double pmax = t.param_max_value();
    if (!(pmax > 0.0)) throw ConfigError("maximum parameter count is 0");
    double is = 0.0;
    for (std::size_t c = 0; c < kCriteria.size(); ++c) is += m.ranks[c] / t.rank_max(c) * t.criterion_weights[c];
    is += m.params / pmax * t.param_weight;
    return is;
}

double model_score(std::string_view name, const InterpretabilityTable& t, ScoreMode mode) {
    const auto& m = t.model(name);
    if (mode == ScoreMode::printed && m.printed_score) return *m.printed_score;
    return interpretability_score(name, t);
}

std::string_view embedding_name(Embedding e) {
    switch (e) {
        case Embedding::count: return "Count";
        case Embedding::tfidf: return "TFIDF";
        case Embedding::w2v: return "W2V";
    }
    return "?";
}

Embedding parse_embedding(std::string_view name) {
    for (Embedding e : {Embedding::count, Embedding::tfidf, Embedding::w2v})
        if (embedding_name(e) == name) return e;
    throw ArgumentError(fmt::format("unknown embedding '{}' (expected Count, TFIDF or W2V)", name));
}

double embedding_score(Embedding e) {
    switch (e) {
        case Embedding::count: return 0.25;
        case Embedding::tfidf: return 0.50;
        case Embedding::w2v: return 0.75;
    }
    return 0.0;
}

std::string_view head_name(Head h) {
    switch (h) {
        case Head::vader: return "VADER";
        case Head::bert: return "BERT";
        case Head::lr: return "LR";
        case Head::nb: return "NB";
        case Head::svm: return "SVM";
        case Head::nn: return "NN";
    }
    return "?";
}

Head parse_head(std::string_view name) {
    for (Head h : {Head::vader, Head::bert, Head::lr, Head::nb, Head::svm, Head::nn})
        if (head_name(h) == name) return h;
    throw ArgumentError(fmt::format("unknown model '{}'", name));
}

void PipelineSpec::validate() const {
    const bool standalone = head == Head::vader || head == Head::bert;
    if (standalone && (embedding || sentiment_feature))
        throw ArgumentError(fmt::format("{} takes no embedding or sentiment feature", head_name(head)));
    if (!standalone && !embedding) throw ArgumentError(fmt::format("{} needs an embedding", head_name(head)));
}

std::string PipelineSpec::name() const {
    std::string out;
    if (embedding) out = fmt::format("{}+", embedding_name(*embedding));
    out += head_name(head);
    if (sentiment_feature) out += "-BS";
    return out;
}

PipelineSpec PipelineSpec::parse(std::string_view name) {
    PipelineSpec p;
    std::string_view rest = name;
    if (const auto plus = rest.find('+'); plus != std::string_view::npos) {
        p.embedding = parse_embedding(rest.substr(0, plus));
        rest.remove_prefix(plus + 1);
    }
    if (rest.size() > 3 && rest.substr(rest.size() - 3) == "-BS") {
        p.sentiment_feature = true;
        rest.remove_suffix(3);
    }
    p.head = parse_head(rest);
    p.validate();
    return p;
}

CiResult composite_ci(const PipelineSpec& p, const InterpretabilityTable& t, ScoreMode mode) {
    p.validate();
    CiResult r;
    r.pipeline = p;
    if (p.embedding) r.constituents.push_back({std::string(embedding_name(*p.embedding)), embedding_score(*p.embedding)});
    if (p.sentiment_feature) r.constituents.push_back({"BERT", model_score("BERT", t, mode)});
    r.constituents.push_back({std::string(head_name(p.head)), model_score(head_name(p.head), t, mode)});
    for (const auto& c : r.constituents) r.ci += c.score;
    return r;
}

std::vector<PipelineSpec> all_pipelines() {
    std::vector<PipelineSpec> out{{std::nullopt, false, Head::vader}, {std::nullopt, false, Head::bert}};
    for (Embedding e : {Embedding::count, Embedding::tfidf, Embedding::w2v})
        for (bool bs : {false, true})
            for (Head h : {Head::lr, Head::nb, Head::svm, Head::nn}) out.push_back({e, bs, h});
    return out;
}

std::vector<CiResult> enumerate_pipelines(const InterpretabilityTable& t, ScoreMode mode) {
    std::vector<CiResult> out;
    for (const auto& p : all_pipelines()) out.push_back(composite_ci(p, t, mode));
    std::stable_sort(out.begin(), out.end(), [](const CiResult& a, const CiResult& b) {
        if (a.ci != b.ci) return a.ci < b.ci;
        return a.pipeline.name() < b.pipeline.name();
    });
    return out;
}

void write_enumeration_csv(std::span<const CiResult> results, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError(fmt::format("cannot write {}", path.string()));
    out << "rank,pipeline,ci,constituents\n";
    for (std::size_t i = 0; i < results.size(); ++i) {
        std::string parts;
        for (const auto& c : results[i].constituents) {
            if (!parts.empty()) parts += ';';
            parts += fmt::format("{}={:.4f}", c.name, c.score);
        }
        out << fmt::format("{},{},{:.4f},{}\n", i + 1, results[i].pipeline.name(), results[i].ci, parts);
    }
    if (!out) throw IoError(fmt::format("failed writing {}", path.string()));
}

std::vector<SurveyResponse> load_survey(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError(fmt::format("cannot open survey {}", path.string()));
    std::string line;
    if (!std::getline(in, line)) throw FormatError(fmt::format("{}: empty survey", path.string()));
    const auto header = detail::split_csv_line(line);
    if (header != std::vector<std::string>{"expert_id", "model", "criterion", "rank"})
        throw FormatError(fmt::format("{}: header must be expert_id,model,criterion,rank", path.string()));
    std::vector<SurveyResponse> out;
    std::map<std::tuple<std::string, std::string, std::size_t>, std::size_t> seen;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto f = detail::split_csv_line(line);
        if (f.size() != 4) throw FormatError(fmt::format("{}:{}: expected 4 columns", path.string(), line_no));
        SurveyResponse r;
        r.expert = f[0];
        r.model = f[1];
        const auto crit = std::find(kCriteria.begin(), kCriteria.end(), f[2]);
        if (crit == kCriteria.end())
            throw FormatError(fmt::format("{}:{}: unknown criterion '{}'", path.string(), line_no, f[2]));
        r.criterion = static_cast<std::size_t>(crit - kCriteria.begin());
        if (f[3].size() != 1 || f[3][0] < '1' || f[3][0] > '5')
            throw FormatError(fmt::format("{}:{}: rank '{}' is not an integer in 1-5", path.string(), line_no, f[3]));
        r.rank = f[3][0] - '0';
        if (!seen.emplace(std::tuple(r.expert, r.model, r.criterion), line_no).second)
            throw FormatError(fmt::format("{}:{}: duplicate response for ({}, {}, {})", path.string(), line_no,
                                          r.expert, r.model, f[2]));
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<MeanRanks> aggregate_rankings(std::span<const SurveyResponse> survey) {
    std::vector<std::string> order;
    std::map<std::string, std::array<std::pair<long, long>, 3>> cells;  // (sum, count)
    for (const auto& r : survey) {
        if (r.rank < 1 || r.rank > 5) throw DataError(fmt::format("rank {} outside 1-5", r.rank));
        if (r.criterion >= kCriteria.size()) throw DataError("criterion index out of range");
        auto [it, inserted] = cells.try_emplace(r.model);
        if (inserted) order.push_back(r.model);
        it->second[r.criterion].first += r.rank;
        it->second[r.criterion].second += 1;
    }
    std::vector<MeanRanks> out;
    for (const auto& name : order) {
        MeanRanks m{name, {}};
        for (std::size_t c = 0; c < kCriteria.size(); ++c) {
            const auto [sum, count] = cells.at(name)[c];
            if (count == 0) throw DataError(fmt::format("no responses for ({}, {})", name, kCriteria[c]));
            m.ranks[c] = static_cast<double>(sum) / static_cast<double>(count);
        }
        out.push_back(std::move(m));
    }
    return out;
}

InterpretabilityTable apply_rankings(InterpretabilityTable t, std::span<const MeanRanks> means) {
    for (const auto& m : means) {
        auto it = std::find_if(t.models.begin(), t.models.end(), [&](const ModelEntry& e) { return e.name == m.model; });
        if (it == t.models.end()) throw ConfigError(fmt::format("surveyed model {} is not in the table", m.model));
        it->ranks = m.ranks;
    }
    t.validate();
    return t;
}

}  // namespace ratebench::ci

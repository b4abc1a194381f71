#include "ratebench/corpus.hpp"

#include <cmath>
#include <optional>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <fmt/core.h>
#include <nlohmann/json.hpp>

#include "ratebench/error.hpp"
#include "ratebench/random.hpp"

namespace ratebench::corpus {

using nlohmann::json;

std::array<std::size_t, kNumClasses> Dataset::class_counts() const {
    std::array<std::size_t, kNumClasses> counts{};
    for (const auto& r : reviews) ++counts[static_cast<std::size_t>(r.rating - kMinStars)];
    return counts;
}

namespace {

// Ratings are accepted as integers or integral-valued floats in [1, 5].
std::optional<int> parse_rating(const json& value) {
    if (value.is_number_integer()) {
        const auto v = value.get<std::int64_t>();
        if (v < kMinStars || v > kMaxStars) return std::nullopt;
        return static_cast<int>(v);
    }
    if (value.is_number_float()) {
        const double v = value.get<double>();
        if (!std::isfinite(v) || v != std::floor(v) || v < kMinStars || v > kMaxStars) return std::nullopt;
        return static_cast<int>(v);
    }
    return std::nullopt;
}

std::optional<std::string> id_field(const json& value) {
    if (value.is_string()) return value.get<std::string>();
    if (value.is_number_integer()) return std::to_string(value.get<std::int64_t>());
    return std::nullopt;
}

}  // namespace

LoadResult load_reviews(const std::filesystem::path& path, std::size_t limit_per_class) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open review file " + path.string());

    LoadResult result;
    result.dataset.name = path.stem().string();
    std::array<std::size_t, kNumClasses> taken{};
    std::unordered_set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json rec = json::parse(line, nullptr, /*allow_exceptions=*/false);
        if (rec.is_discarded() || !rec.is_object()) {
            ++result.skipped;
            continue;
        }
        const auto text_it = rec.find("reviewText");
        const auto star_it = rec.find("overall");
        if (text_it == rec.end() || !text_it->is_string() || star_it == rec.end()) {
            ++result.skipped;
            continue;
        }
        const auto rating = parse_rating(*star_it);
        if (!rating) {
            ++result.skipped;
            continue;
        }

        std::string id;
        if (auto it = rec.find("id"); it != rec.end() && id_field(*it)) {
            id = *id_field(*it);
        } else if (auto asin = rec.find("asin"); asin != rec.end() && asin->is_string()) {
            id = fmt::format("{}#{}", asin->get<std::string>(), line_no);
        } else {
            id = fmt::format("#{}", line_no);
        }
        if (!seen.insert(id).second) {
            ++result.skipped;
            continue;
        }

        auto& count = taken[static_cast<std::size_t>(*rating - kMinStars)];
        if (limit_per_class != 0 && count >= limit_per_class) {
            ++result.over_limit;
            continue;
        }
        ++count;
        result.dataset.reviews.push_back({std::move(id), text_it->get<std::string>(), {}, *rating});
    }
    if (in.bad()) throw IoError("error while reading " + path.string());
    if (result.dataset.empty()) throw DataError("no parseable reviews in " + path.string());
    return result;
}

Dataset balanced_sample(const Dataset& ds, std::size_t per_class, std::uint64_t seed) {
    std::array<std::vector<std::size_t>, kNumClasses> members;
    for (std::size_t i = 0; i < ds.reviews.size(); ++i)
        members[static_cast<std::size_t>(ds.reviews[i].rating - kMinStars)].push_back(i);
    for (std::size_t c = 0; c < members.size(); ++c) {
        if (members[c].size() < per_class)
            throw DataError(fmt::format("class {}: {} < {}", c + kMinStars, members[c].size(), per_class));
    }

    Rng rng(seed);
    std::vector<bool> keep(ds.reviews.size(), false);
    for (auto& m : members) {
        rng.shuffle(std::span(m));
        for (std::size_t k = 0; k < per_class; ++k) keep[m[k]] = true;
    }
    Dataset out{ds.name, {}};
    out.reviews.reserve(per_class * kNumClasses);
    for (std::size_t i = 0; i < ds.reviews.size(); ++i)
        if (keep[i]) out.reviews.push_back(ds.reviews[i]);
    return out;
}

SplitIndex stratified_split(const Dataset& ds, double test_fraction, std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw ArgumentError(fmt::format("test fraction must lie in (0, 1), got {}", test_fraction));

    std::array<std::vector<std::size_t>, kNumClasses> members;
    for (std::size_t i = 0; i < ds.reviews.size(); ++i)
        members[static_cast<std::size_t>(ds.reviews[i].rating - kMinStars)].push_back(i);

    Rng rng(seed);
    std::vector<bool> is_test(ds.reviews.size(), false);
    for (auto& m : members) {
        rng.shuffle(std::span(m));
        const auto n_test = static_cast<std::size_t>(std::llround(static_cast<double>(m.size()) * test_fraction));
        for (std::size_t k = 0; k < n_test; ++k) is_test[m[k]] = true;
    }

    SplitIndex split;
    split.seed = seed;
    split.test_fraction = test_fraction;
    for (std::size_t i = 0; i < ds.reviews.size(); ++i)
        (is_test[i] ? split.test_ids : split.train_ids).push_back(ds.reviews[i].id);
    return split;
}

std::pair<Dataset, Dataset> apply_split(const Dataset& ds, const SplitIndex& split) {
    std::unordered_map<std::string_view, bool> side;
    for (const auto& id : split.train_ids) side.emplace(id, false);
    for (const auto& id : split.test_ids) {
        if (!side.emplace(id, true).second) throw DataError("split lists id " + id + " on both sides");
    }
    Dataset train{ds.name, {}};
    Dataset test{ds.name, {}};
    for (const auto& r : ds.reviews) {
        const auto it = side.find(r.id);
        if (it == side.end()) throw DataError("review " + r.id + " is not covered by the split");
        (it->second ? test : train).reviews.push_back(r);
    }
    if (train.size() + test.size() != side.size()) throw DataError("split references ids missing from the dataset");
    return {std::move(train), std::move(test)};
}

std::string serialize_dataset(const Dataset& ds) {
    std::string out;
    for (const auto& r : ds.reviews) {
        json rec = {{"id", r.id}, {"rating", r.rating}, {"text", r.text}, {"clean", r.clean}};
        out += rec.dump();
        out += '\n';
    }
    return out;
}

void write_dataset(const Dataset& ds, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << serialize_dataset(ds);
    if (!out) throw IoError("error while writing " + path.string());
}

Dataset read_dataset(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open dataset " + path.string());
    Dataset ds{path.stem().string(), {}};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            const json rec = json::parse(line);
            if (!rec.contains("id") && rec.contains("reviewText"))
                throw FormatError("raw review dump, not a prepared dataset (run ingest first)");
            Review r{rec.at("id").get<std::string>(), rec.at("text").get<std::string>(),
                     rec.value("clean", std::string{}), rec.at("rating").get<int>()};
            if (r.rating < kMinStars || r.rating > kMaxStars)
                throw FormatError(fmt::format("rating {} out of range", r.rating));
            ds.reviews.push_back(std::move(r));
        } catch (const json::exception& e) {
            throw FormatError(fmt::format("{}:{}: {}", path.string(), line_no, e.what()));
        } catch (const FormatError& e) {
            throw FormatError(fmt::format("{}:{}: {}", path.string(), line_no, e.what()));
        }
    }
    return ds;
}

std::string serialize_split(const SplitIndex& split) {
    const json doc = {{"seed", split.seed},
                      {"test_fraction", split.test_fraction},
                      {"train", split.train_ids},
                      {"test", split.test_ids}};
    return doc.dump(1) + "\n";
}

void write_split(const SplitIndex& split, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << serialize_split(split);
}

SplitIndex read_split(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open split file " + path.string());
    try {
        const json doc = json::parse(in);
        SplitIndex split;
        split.seed = doc.at("seed").get<std::uint64_t>();
        split.test_fraction = doc.at("test_fraction").get<double>();
        split.train_ids = doc.at("train").get<std::vector<std::string>>();
        split.test_ids = doc.at("test").get<std::vector<std::string>>();
        return split;
    } catch (const json::exception& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

}  // namespace ratebench::corpus

// Writes a synthetic star-rated review corpus with planted sentiment vocabulary
// and a matching file of noisy external star predictions.

#include <array>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "ratebench/random.hpp"

namespace {

using ratebench::Rng;

const std::array<std::vector<std::string>, 5> kPools{{
    {"worst", "hate", "pathetic", "horrible", "disgusting", "terrible", "awful", "broken"},
    {"disappointing", "poor", "bad", "weak", "annoying", "waste", "useless", "problem"},
    {"okay", "fine", "acceptable", "fair", "adequate", "solid"},
    {"good", "nice", "pleased", "useful", "satisfied", "recommend", "happy"},
    {"excellent", "amazing", "perfect", "love", "fantastic", "wonderful", "awesome", "outstanding", "superb"},
}};

const std::vector<std::string> kNouns{"phone",  "case",    "battery", "screen", "cable",   "charger", "headphones",
                                      "speaker", "keyboard", "mouse",  "lamp",   "blender", "kettle",  "backpack",
                                      "watch",  "camera",  "tripod",  "router", "printer", "monitor"};
const std::vector<std::string> kFiller{
    "I bought this {} last month.",        "The {} arrived on Tuesday.",      "Ordered the {} for my office.",
    "Using the {} every day now.",         "My brother suggested this {}.",   "The {} came in a plain box.",
    "Replaced an older {} with this one.", "Shipping for the {} took a week.", "The {} fits on my desk.",
};
const std::vector<std::string> kSentiment{
    "It is {}.", "Really {} {}.", "{} overall.", "The {} was {}.", "Honestly {}.", "Quality is {}.",
};

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& v) {
    return v[static_cast<std::size_t>(rng.uniform_index(v.size()))];
}

std::string capitalize(std::string s) {
    if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 'a' + 'A');
    return s;
}

std::string sentiment_sentence(Rng& rng, const std::string& word, const std::string& noun) {
    const std::size_t t = static_cast<std::size_t>(rng.uniform_index(kSentiment.size()));
    switch (t) {
        case 1: return fmt::format("Really {} {}.", word, noun);
        case 2: return fmt::format("{} overall.", capitalize(word));
        case 3: return fmt::format("The {} was {}.", noun, word);
        default: return fmt::format(fmt::runtime(kSentiment[t]), word);
    }
}

std::string review_text(Rng& rng, int stars) {
    const auto& noun = pick(rng, kNouns);
    std::string text = fmt::format(fmt::runtime(pick(rng, kFiller)), noun);
    if (rng.uniform01() < 0.5) text += " " + fmt::format(fmt::runtime(pick(rng, kFiller)), pick(rng, kNouns));
    const std::size_t k = 2 + static_cast<std::size_t>(rng.uniform_index(3));
    for (std::size_t i = 0; i < k; ++i) {
        const double u = rng.uniform01();
        int cls = stars - 1;
        if (u >= 0.65 && u < 0.90) {
            cls += rng.uniform01() < 0.5 ? -1 : 1;
            if (cls < 0) cls = 1;
            if (cls > 4) cls = 3;
        } else if (u >= 0.90) {
            cls = static_cast<int>(rng.uniform_index(5));
        }
        text += " " + sentiment_sentence(rng, pick(rng, kPools[static_cast<std::size_t>(cls)]), noun);
    }
    if ((stars == 1 || stars == 5) && rng.uniform01() < 0.3) text.back() = '!';
    return text;
}

int noisy_stars(Rng& rng, int stars) {
    const double u = rng.uniform01();
    if (u < 0.55) return stars;
    if (u < 0.90) {
        const int s = stars + (rng.uniform01() < 0.5 ? -1 : 1);
        return s < 1 ? 2 : (s > 5 ? 4 : s);
    }
    return 1 + static_cast<int>(rng.uniform_index(5));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Generate a synthetic review corpus and external score file"};
    std::size_t per_class = 200;
    std::uint64_t seed = 2024;
    std::string prefix = "syn";
    std::string out_path;
    std::string scores_path;
    app.add_option("--per-class", per_class, "Reviews per star class")->check(CLI::PositiveNumber);
    app.add_option("--seed", seed, "Random seed");
    app.add_option("--prefix", prefix, "Review id prefix");
    app.add_option("--out", out_path, "Output JSONL")->required();
    app.add_option("--scores-out", scores_path, "Output score CSV (review_id,stars,confidence)");
    CLI11_PARSE(app, argc, argv);

    Rng rng(seed);
    std::vector<int> stars;
    for (int s = 1; s <= 5; ++s) stars.insert(stars.end(), per_class, s);
    rng.shuffle(std::span<int>(stars));

    std::ofstream out(out_path);
    if (!out) {
        std::cerr << "cannot write " << out_path << '\n';
        return 2;
    }
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < stars.size(); ++i) {
        const std::string id = fmt::format("{}-{:04d}", prefix, i + 1);
        const nlohmann::json rec = {{"id", id},
                                    {"asin", fmt::format("B{:09d}", rng.uniform_index(1000000000))},
                                    {"reviewText", review_text(rng, stars[i])},
                                    {"overall", static_cast<double>(stars[i])}};
        out << rec.dump() << '\n';
        ids.push_back(id);
    }
    if (!scores_path.empty()) {
        std::ofstream scores(scores_path);
        if (!scores) {
            std::cerr << "cannot write " << scores_path << '\n';
            return 2;
        }
        Rng noise(seed ^ 0x5bd1e995ULL);
        scores << "review_id,stars,confidence\n";
        for (std::size_t i = 0; i < ids.size(); ++i)
            scores << fmt::format("{},{},{:.4f}\n", ids[i], noisy_stars(noise, stars[i]), noise.uniform(0.35, 0.99));
    }
    return 0;
}

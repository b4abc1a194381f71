#include "ratebench/sentiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/core.h>

#include "csv.hpp"
#include "ratebench/error.hpp"
#include "utf8.hpp"

namespace ratebench::sentiment {

namespace {

constexpr const char* kNegations[] = {
    "aint",    "arent",    "cannot",   "cant",     "couldnt",  "darent",    "didnt",    "doesnt",  "ain't",
    "aren't",  "can't",    "couldn't", "daren't",  "didn't",   "doesn't",   "dont",     "hadnt",   "hasnt",
    "havent",  "isnt",     "mightnt",  "mustnt",   "neither",  "don't",     "hadn't",   "hasn't",  "haven't",
    "isn't",   "mightn't", "mustn't",  "neednt",   "needn't",  "never",     "none",     "nope",    "nor",
    "not",     "nothing",  "nowhere",  "oughtnt",  "shant",    "shouldnt",  "uhuh",     "wasnt",   "werent",
    "oughtn't", "shan't",  "shouldn't", "uh-uh",   "wasn't",   "weren't",   "without",  "wont",    "wouldnt",
    "won't",   "wouldn't", "rarely",   "seldom",   "despite"};

// +1 intensifies, -1 dampens; scaled by RuleConstants::booster_increment
constexpr std::pair<const char*, int> kBoosters[] = {
    {"absolutely", 1},  {"amazingly", 1},   {"awfully", 1},      {"completely", 1},   {"considerable", 1},
    {"considerably", 1}, {"decidedly", 1},  {"deeply", 1},       {"effing", 1},       {"enormous", 1},
    {"enormously", 1},  {"entirely", 1},    {"especially", 1},   {"exceptional", 1},  {"exceptionally", 1},
    {"extreme", 1},     {"extremely", 1},   {"fabulously", 1},   {"flipping", 1},     {"flippin", 1},
    {"frackin", 1},     {"fracking", 1},    {"fricking", 1},     {"frickin", 1},      {"frigging", 1},
    {"friggin", 1},     {"fully", 1},       {"fuckin", 1},       {"fucking", 1},      {"fuggin", 1},
    {"fugging", 1},     {"greatly", 1},     {"hella", 1},        {"highly", 1},       {"hugely", 1},
    {"incredible", 1},  {"incredibly", 1},  {"intensely", 1},    {"major", 1},        {"majorly", 1},
    {"more", 1},        {"most", 1},        {"particularly", 1}, {"purely", 1},       {"quite", 1},
    {"really", 1},      {"remarkably", 1},  {"so", 1},           {"substantially", 1}, {"thoroughly", 1},
    {"total", 1},       {"totally", 1},     {"tremendous", 1},   {"tremendously", 1}, {"uber", 1},
    {"unbelievably", 1}, {"unusually", 1},  {"utter", 1},        {"utterly", 1},      {"very", 1},
    {"almost", -1},     {"barely", -1},     {"hardly", -1},      {"just enough", -1}, {"kind of", -1},
    {"kinda", -1},      {"kindof", -1},     {"kind-of", -1},     {"less", -1},        {"little", -1},
    {"marginal", -1},   {"marginally", -1}, {"occasional", -1},  {"occasionally", -1}, {"partly", -1},
    {"scarce", -1},     {"scarcely", -1},   {"slight", -1},      {"slightly", -1},    {"somewhat", -1},
    {"sort of", -1},    {"sorta", -1},      {"sortof", -1},      {"sort-of", -1}};

constexpr std::pair<const char*, double> kSpecialPhrases[] = {
    {"the shit", 3.0},      {"the bomb", 3.0},      {"bad ass", 1.5},     {"badass", 1.5},
    {"bus stop", 0.0},      {"yeah right", -2.0},   {"kiss of death", -1.5}, {"to die for", 3.0},
    {"beating heart", 3.5}};

constexpr std::string_view kAsciiPunctuation = "!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~";

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f'; }

// Strips surrounding ASCII punctuation unless that leaves two characters or
// fewer, which keeps emoticons such as ":)" intact.
std::string strip_punctuation_if_word(std::string_view token) {
    const auto b = token.find_first_not_of(kAsciiPunctuation);
    if (b == std::string_view::npos) return std::string(token);
    const auto e = token.find_last_not_of(kAsciiPunctuation);
    const auto stripped = token.substr(b, e - b + 1);
    if (utf8::length(stripped) <= 2) return std::string(token);
    return std::string(stripped);
}

struct Words {
    std::vector<std::string> raw;
    std::vector<std::string> lower;
    bool cap_differential = false;
};

Words split_words(std::string_view text) {
    Words w;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && is_space(text[i])) ++i;
        const std::size_t start = i;
        while (i < text.size() && !is_space(text[i])) ++i;
        if (i > start) w.raw.push_back(strip_punctuation_if_word(text.substr(start, i - start)));
    }
    std::size_t all_caps = 0;
    for (const auto& word : w.raw) {
        w.lower.push_back(utf8::lower(word));
        if (utf8::is_upper(word)) ++all_caps;
    }
    const std::size_t differential = w.raw.size() - all_caps;
    w.cap_differential = differential > 0 && differential < w.raw.size();
    return w;
}

bool negated(const SentimentLexicon& lex, std::string_view lower_word) {
    return lex.is_negation(lower_word) || lower_word.find("n't") != std::string_view::npos;
}

class Scorer {
public:
    Scorer(const SentimentLexicon& lex, const Words& words) : lex_(lex), w_(words), rules_(lex.rules) {}

    std::vector<double> word_valences() const {
        std::vector<double> sentiments;
        sentiments.reserve(w_.raw.size());
        for (std::size_t i = 0; i < w_.raw.size(); ++i) {
            if (lex_.booster(w_.lower[i]) ||
                (i + 1 < w_.raw.size() && w_.lower[i] == "kind" && w_.lower[i + 1] == "of")) {
                sentiments.push_back(0.0);
                continue;
            }
            sentiments.push_back(valence_at(i));
        }
        return sentiments;
    }

private:
    const SentimentLexicon& lex_;
    const Words& w_;
    const RuleConstants& rules_;

    bool in_lexicon(std::size_t i) const { return lex_.contains(w_.lower[i]); }

    double booster_scalar(std::size_t j, double valence) const {
        const auto b = lex_.booster(w_.lower[j]);
        if (!b) return 0.0;
        double scalar = *b;
        if (valence < 0) scalar = -scalar;
        if (utf8::is_upper(w_.raw[j]) && w_.cap_differential) scalar += valence > 0 ? rules_.caps_increment : -rules_.caps_increment;
        return scalar;
    }

    double valence_at(std::size_t i) const {
        const auto base = lex_.valence(w_.lower[i]);
        if (!base) return 0.0;
        const std::size_t n = w_.raw.size();
        double valence = *base;

        // "no" directly before a lexicon word negates that word instead of scoring itself
        if (w_.lower[i] == "no" && i != n - 1 && in_lexicon(i + 1)) valence = 0.0;
        if ((i > 0 && w_.lower[i - 1] == "no") || (i > 1 && w_.lower[i - 2] == "no") ||
            (i > 2 && w_.lower[i - 3] == "no" && (w_.lower[i - 1] == "or" || w_.lower[i - 1] == "nor")))
            valence = *base * rules_.negation_scalar;

        if (utf8::is_upper(w_.raw[i]) && w_.cap_differential)
            valence += valence > 0 ? rules_.caps_increment : -rules_.caps_increment;

        for (std::size_t start = 0; start < 3; ++start) {
            if (i <= start || in_lexicon(i - (start + 1))) continue;
            double s = booster_scalar(i - (start + 1), valence);
            if (start == 1 && s != 0) s = s * 0.95;
            if (start == 2 && s != 0) s = s * 0.9;
            valence = valence + s;
            valence = negation_check(valence, start, i);
            if (start == 2) valence = special_phrase_check(valence, i);
        }
        return least_check(valence, i);
    }

    double negation_check(double valence, std::size_t start, std::size_t i) const {
        const auto& lw = w_.lower;
        if (start == 0) {
            if (negated(lex_, lw[i - 1])) valence = valence * rules_.negation_scalar;
        } else if (start == 1) {
            if (lw[i - 2] == "never" && (lw[i - 1] == "so" || lw[i - 1] == "this")) {
                valence = valence * rules_.never_so_weight;
            } else if (lw[i - 2] == "without" && lw[i - 1] == "doubt") {
                // leaves valence unchanged
            } else if (negated(lex_, lw[i - 2])) {
                valence = valence * rules_.negation_scalar;
            }
        } else {
            // mirrors the reference operator grouping: (never && (so||this)) || (so||this one back)
            if ((lw[i - 3] == "never" && (lw[i - 2] == "so" || lw[i - 2] == "this")) ||
                (lw[i - 1] == "so" || lw[i - 1] == "this")) {
                valence = valence * rules_.never_so_weight;
            } else if (lw[i - 3] == "without" && (lw[i - 2] == "doubt" || lw[i - 1] == "doubt")) {
                // leaves valence unchanged
            } else if (negated(lex_, lw[i - 3])) {
                valence = valence * rules_.negation_scalar;
            }
        }
        return valence;
    }

    double special_phrase_check(double valence, std::size_t i) const {
        const auto& lw = w_.lower;
        const std::string one_zero = lw[i - 1] + " " + lw[i];
        const std::string two_one_zero = lw[i - 2] + " " + lw[i - 1] + " " + lw[i];
        const std::string two_one = lw[i - 2] + " " + lw[i - 1];
        const std::string three_two_one = lw[i - 3] + " " + lw[i - 2] + " " + lw[i - 1];
        const std::string three_two = lw[i - 3] + " " + lw[i - 2];
        for (const auto* seq : {&one_zero, &two_one_zero, &two_one, &three_two_one, &three_two}) {
            if (auto v = lex_.special_phrase(*seq)) {
                valence = *v;
                break;
            }
        }
        if (lw.size() - 1 > i) {
            if (auto v = lex_.special_phrase(lw[i] + " " + lw[i + 1])) valence = *v;
        }
        if (lw.size() - 1 > i + 1) {
            if (auto v = lex_.special_phrase(lw[i] + " " + lw[i + 1] + " " + lw[i + 2])) valence = *v;
        }
        for (const auto* gram : {&three_two_one, &three_two, &two_one}) {
            if (auto b = lex_.booster(*gram)) valence = valence + *b;
        }
        return valence;
    }

    double least_check(double valence, std::size_t i) const {
        const auto& lw = w_.lower;
        if (i > 1 && !in_lexicon(i - 1) && lw[i - 1] == "least") {
            if (lw[i - 2] != "at" && lw[i - 2] != "very") valence = valence * rules_.negation_scalar;
        } else if (i > 0 && !in_lexicon(i - 1) && lw[i - 1] == "least") {
            valence = valence * rules_.negation_scalar;
        }
        return valence;
    }
};

// Contrastive "but": earlier words weigh less, later words more. Elements are
// located by first equal value, as the reference engine does, so repeated
// valences can be re-weighted at the first matching position.
void apply_but(const Words& w, std::vector<double>& sentiments, const RuleConstants& rules) {
    const auto it = std::find(w.lower.begin(), w.lower.end(), "but");
    if (it == w.lower.end()) return;
    const auto but_index = static_cast<std::size_t>(it - w.lower.begin());
    for (std::size_t k = 0; k < sentiments.size(); ++k) {
        const double value = sentiments[k];
        const auto first =
            static_cast<std::size_t>(std::find(sentiments.begin(), sentiments.end(), value) - sentiments.begin());
        if (first < but_index)
            sentiments[first] = value * rules.but_before_weight;
        else if (first > but_index)
            sentiments[first] = value * rules.but_after_weight;
    }
}

double punctuation_emphasis(std::string_view text, const RuleConstants& rules) {
    const auto exclamations =
        std::min<std::size_t>(static_cast<std::size_t>(std::count(text.begin(), text.end(), '!')), rules.max_exclamations);
    const auto questions = static_cast<std::size_t>(std::count(text.begin(), text.end(), '?'));
    double amplifier = static_cast<double>(exclamations) * rules.exclamation_increment;
    if (questions > 1) amplifier += questions <= 3 ? static_cast<double>(questions) * rules.question_increment : rules.question_cap;
    return amplifier;
}

}  // namespace

SentimentLexicon SentimentLexicon::from_valences(std::unordered_map<std::string, double> valences) {
    SentimentLexicon lex;
    for (const auto& [term, v] : valences)
        if (!std::isfinite(v)) throw FormatError("lexicon: non-finite valence for " + term);
    lex.valences_ = std::move(valences);
    lex.install_default_tables();
    return lex;
}

SentimentLexicon SentimentLexicon::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open lexicon " + path.string());
    std::unordered_map<std::string, double> valences;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) throw FormatError(fmt::format("{}:{}: expected term<TAB>valence", path.string(), line_no));
        const auto end = line.find('\t', tab + 1);
        const std::string value = line.substr(tab + 1, end == std::string::npos ? std::string::npos : end - tab - 1);
        double v = 0.0;
        try {
            std::size_t used = 0;
            v = std::stod(value, &used);
            if (used != value.size()) throw std::invalid_argument(value);
        } catch (const std::exception&) {
            throw FormatError(fmt::format("{}:{}: bad valence '{}'", path.string(), line_no, value));
        }
        valences[line.substr(0, tab)] = v;
    }
    return from_valences(std::move(valences));
}

void SentimentLexicon::install_default_tables() {
    for (const char* w : kNegations) negations_.emplace(w);
    for (const auto& [w, sign] : kBoosters) boosters_.emplace(w, static_cast<double>(sign));
    for (const auto& [p, v] : kSpecialPhrases) special_phrases_.emplace(p, v);
}

std::optional<double> SentimentLexicon::valence(std::string_view lower_term) const {
    const auto it = valences_.find(std::string(lower_term));
    if (it == valences_.end()) return std::nullopt;
    return it->second;
}

std::optional<double> SentimentLexicon::booster(std::string_view lower_term) const {
    const auto it = boosters_.find(std::string(lower_term));
    if (it == boosters_.end()) return std::nullopt;
    return it->second * rules.booster_increment;
}

bool SentimentLexicon::is_negation(std::string_view lower_term) const {
    return negations_.contains(std::string(lower_term));
}

std::optional<double> SentimentLexicon::special_phrase(std::string_view lower_phrase) const {
    const auto it = special_phrases_.find(std::string(lower_phrase));
    if (it == special_phrases_.end()) return std::nullopt;
    return it->second;
}

double compound_score(std::string_view text, const SentimentLexicon& lexicon) {
    const Words words = split_words(text);
    if (words.raw.empty()) return 0.0;
    std::vector<double> sentiments = Scorer(lexicon, words).word_valences();
    apply_but(words, sentiments, lexicon.rules);

    double sum = 0.0;
    for (double s : sentiments) sum += s;
    const double amplifier = punctuation_emphasis(text, lexicon.rules);
    if (sum > 0)
        sum += amplifier;
    else if (sum < 0)
        sum -= amplifier;
    const double norm = sum / std::sqrt(sum * sum + lexicon.rules.alpha);
    return std::clamp(norm, -1.0, 1.0);
}

double rescale_to_stars(double compound) {
    if (!(compound >= -1.0 && compound <= 1.0))
        throw ArgumentError(fmt::format("compound score {} outside [-1, 1]", compound));
    return 2.0 * (compound + 1.0) + 1.0;
}

int star_class(double stars_real) {
    const double rounded = std::floor(stars_real + 0.5);
    return static_cast<int>(std::clamp(rounded, static_cast<double>(corpus::kMinStars),
                                       static_cast<double>(corpus::kMaxStars)));
}

SentimentScore score_review(const corpus::Review& review, const SentimentLexicon& lexicon) {
    const double c = compound_score(review.text, lexicon);
    return {review.id, c, rescale_to_stars(c), ScoreSource::rule_based};
}


ExternalScoreFile load_external_scores(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open score file " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw FormatError(path.string() + ": empty score file");
    const auto header = detail::split_csv_line(line);
    const auto col = [&](std::string_view name) -> std::optional<std::size_t> {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) return std::nullopt;
        return static_cast<std::size_t>(it - header.begin());
    };
    const auto id_col = col("review_id");
    const auto star_col = col("stars");
    if (!id_col) throw FormatError(path.string() + ": missing review_id column");
    if (!star_col) throw FormatError(path.string() + ": missing stars column");

    ExternalScoreFile out;
    out.model_tag = path.stem().string();
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() <= std::max(*id_col, *star_col))
            throw FormatError(fmt::format("{}:{}: too few columns", path.string(), line_no));
        const std::string& id = fields[*id_col];
        const std::string& star_text = fields[*star_col];
        int stars = 0;
        try {
            std::size_t used = 0;
            stars = std::stoi(star_text, &used);
            if (used != star_text.size()) throw std::invalid_argument(star_text);
        } catch (const std::exception&) {
            throw FormatError(fmt::format("{}:{}: stars '{}' is not an integer", path.string(), line_no, star_text));
        }
        if (stars < corpus::kMinStars || stars > corpus::kMaxStars)
            throw FormatError(fmt::format("{}:{}: stars {} outside 1-5", path.string(), line_no, stars));
        if (!out.stars.emplace(id, stars).second)
            throw FormatError(fmt::format("{}:{}: duplicate review_id {}", path.string(), line_no, id));
        out.order.push_back(id);
    }
    return out;
}

std::vector<SentimentScore> join_scores(const corpus::Dataset& ds, const ExternalScoreFile& scores) {
    std::vector<SentimentScore> out;
    std::vector<std::string> missing;
    std::size_t missing_count = 0;
    out.reserve(ds.size());
    for (const auto& r : ds.reviews) {
        const auto it = scores.stars.find(r.id);
        if (it == scores.stars.end()) {
            if (missing.size() < 10) missing.push_back(r.id);
            ++missing_count;
            continue;
        }
        const double stars = it->second;
        out.push_back({r.id, (stars - 3.0) / 2.0, stars, ScoreSource::external});
    }
    if (missing_count > 0) {
        std::string list;
        for (const auto& id : missing) list += (list.empty() ? "" : ", ") + id;
        throw DataError(fmt::format("{} review ids have no external score: {}{}", missing_count, list,
                                    missing_count > missing.size() ? ", ..." : ""));
    }
    return out;
}

}  // namespace ratebench::sentiment

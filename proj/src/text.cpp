#include <fstream>
#include <string>

#include "ratebench/corpus.hpp"
#include "ratebench/error.hpp"
#include "utf8.hpp"

namespace ratebench::corpus {

namespace {

enum class CharClass { keep, space, drop };

CharClass classify(char32_t& cp) {
    const auto wc = static_cast<wint_t>(cp);
    const locale_t loc = utf8::unicode_locale();
    if (iswspace_l(wc, loc)) return CharClass::space;
    if (!iswalnum_l(wc, loc)) return CharClass::drop;
    cp = static_cast<char32_t>(towlower_l(wc, loc));
    return CharClass::keep;
}

// Lowercases and filters, leaving tokens separated by single spaces.
std::string normalize_chars(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (std::size_t i = 0; i < text.size();) {
        char32_t cp = utf8::decode(text, i);
        switch (classify(cp)) {
            case CharClass::space:
                pending_space = !out.empty();
                break;
            case CharClass::drop:
                break;
            case CharClass::keep:
                if (pending_space) out.push_back(' ');
                pending_space = false;
                utf8::encode(cp, out);
                break;
        }
    }
    return out;
}

}  // namespace

std::vector<std::string_view> tokens(std::string_view clean_text) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < clean_text.size()) {
        while (i < clean_text.size() && (clean_text[i] == ' ' || clean_text[i] == '\t' || clean_text[i] == '\n' ||
                                         clean_text[i] == '\r'))
            ++i;
        const std::size_t start = i;
        while (i < clean_text.size() && clean_text[i] != ' ' && clean_text[i] != '\t' && clean_text[i] != '\n' &&
               clean_text[i] != '\r')
            ++i;
        if (i > start) out.push_back(clean_text.substr(start, i - start));
    }
    return out;
}

std::string preprocess(std::string_view text, const StopwordSet& stopwords) {
    const std::string normalized = normalize_chars(text);
    std::string out;
    out.reserve(normalized.size());
    for (auto tok : tokens(normalized)) {
        if (stopwords.contains(std::string(tok))) continue;
        if (!out.empty()) out.push_back(' ');
        out.append(tok);
    }
    return out;
}

StopwordSet load_stopwords(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open stopword file " + path.string());
    StopwordSet out;
    std::string line;
    while (std::getline(in, line)) {
        for (auto tok : tokens(normalize_chars(line))) out.emplace(tok);
    }
    return out;
}

void clean_dataset(Dataset& ds, const StopwordSet& stopwords) {
    for (auto& r : ds.reviews) r.clean = preprocess(r.text, stopwords);
}

}  // namespace ratebench::corpus

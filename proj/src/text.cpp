#include "kpforge/text.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "kpforge/error.hpp"

namespace kpforge {

// Defined in the generated stopwords_data.cpp.
extern const char* const kEnglishStopwords;

namespace {

bool is_space(unsigned char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

bool is_word_byte(unsigned char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c >= 0x80;
}

char lower_ascii(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

bool is_noun_tag(std::string_view tag) { return tag == "NOUN" || tag == "PROPN"; }

}  // namespace

std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), lower_ascii);
    return out;
}

std::vector<Token> tokenize(std::string_view text) {
    std::vector<Token> tokens;
    std::size_t i = 0;
    while (i < text.size()) {
        const auto c = static_cast<unsigned char>(text[i]);
        if (is_space(c)) {
            ++i;
        } else if (is_word_byte(c)) {
            std::size_t j = i;
            while (j < text.size() && is_word_byte(static_cast<unsigned char>(text[j]))) ++j;
            tokens.push_back({to_lower(text.substr(i, j - i)), i});
            i = j;
        } else {
            tokens.push_back({std::string(1, text[i]), i});
            ++i;
        }
    }
    return tokens;
}

bool is_punctuation(std::string_view token) {
    return std::none_of(token.begin(), token.end(),
                        [](char c) { return is_word_byte(static_cast<unsigned char>(c)); });
}

std::vector<std::string> stem_tokens(const std::vector<Token>& tokens) {
    std::vector<std::string> stems;
    stems.reserve(tokens.size());
    for (const Token& t : tokens) stems.push_back(porter_stem(t.surface));
    return stems;
}

std::string stem_key(std::string_view phrase) {
    std::string key;
    for (const Token& t : tokenize(phrase)) {
        if (!key.empty()) key.push_back(' ');
        key += porter_stem(t.surface);
    }
    return key;
}

std::string join_title_abstract(std::string_view title, std::string_view abstract) {
    if (title.empty()) return std::string(abstract);
    if (abstract.empty()) return std::string(title);
    std::string out(title);
    out += ". ";
    out += abstract;
    return out;
}

std::string Document::text() const { return join_title_abstract(title, abstract); }

Document make_document(std::string id, std::string title, std::string abstract,
                       std::vector<std::string> gold_keyphrases,
                       std::optional<std::vector<std::string>> pos_tags) {
    Document doc;
    doc.id = std::move(id);
    doc.title = std::move(title);
    doc.abstract = std::move(abstract);
    doc.tokens = tokenize(doc.text());
    doc.stems = stem_tokens(doc.tokens);
    doc.gold_keyphrases = std::move(gold_keyphrases);
    if (pos_tags && pos_tags->size() != doc.tokens.size()) {
        throw Error("document " + doc.id + ": pos_tags has " + std::to_string(pos_tags->size()) +
                    " labels but the text has " + std::to_string(doc.tokens.size()) + " tokens");
    }
    doc.pos_tags = std::move(pos_tags);
    return doc;
}

const StopwordSet& StopwordSet::english() {
    static const StopwordSet set = [] {
        std::unordered_set<std::string> words;
        std::istringstream in(kEnglishStopwords);
        std::string line;
        while (std::getline(in, line))
            if (!line.empty()) words.insert(line);
        return StopwordSet(std::move(words));
    }();
    return set;
}

StopwordSet StopwordSet::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open stopword file " + path);
    std::unordered_set<std::string> words;
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && is_space(static_cast<unsigned char>(line.back()))) line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        words.insert(to_lower(line));
    }
    return StopwordSet(std::move(words));
}

std::string PhraseCandidate::surface() const {
    std::string out;
    for (const auto& t : tokens) {
        if (!out.empty()) out.push_back(' ');
        out += t;
    }
    return out;
}

std::string PhraseCandidate::key() const {
    std::string out;
    for (const auto& s : stems) {
        if (!out.empty()) out.push_back(' ');
        out += s;
    }
    return out;
}

std::vector<PhraseCandidate> extract_candidates(const Document& doc, const CandidateConfig& config) {
    const StopwordSet& stoplist = config.stoplist();
    const auto& tokens = doc.tokens;
    const std::size_t n = tokens.size();

    auto usable = [&](std::size_t i) {
        return !is_punctuation(tokens[i].surface) && !stoplist.contains(tokens[i].surface);
    };

    std::vector<std::pair<std::size_t, std::size_t>> spans;
    if (doc.pos_tags) {
        const auto& tags = *doc.pos_tags;
        std::size_t i = 0;
        while (i < n) {
            std::size_t j = i;
            while (j < n && usable(j) && tags[j] == "ADJ") ++j;
            std::size_t k = j;
            while (k < n && usable(k) && is_noun_tag(tags[k])) ++k;
            if (k > j) {
                spans.emplace_back(i, k);
                i = k;
            } else {
                i = std::max(j, i + 1);
            }
        }
    } else {
        std::size_t i = 0;
        while (i < n) {
            if (!usable(i)) {
                ++i;
                continue;
            }
            std::size_t j = i;
            while (j < n && usable(j)) ++j;
            spans.emplace_back(i, j);
            i = j;
        }
    }

    std::vector<PhraseCandidate> candidates;
    std::map<std::string, std::size_t> by_key;
    for (auto [start, end] : spans) {
        if (end - start > config.max_len) continue;
        PhraseCandidate c;
        for (std::size_t t = start; t < end; ++t) {
            c.tokens.push_back(tokens[t].surface);
            c.stems.push_back(doc.stems.empty() ? porter_stem(tokens[t].surface) : doc.stems[t]);
        }
        const std::string key = c.key();
        auto it = by_key.find(key);
        if (it != by_key.end()) {
            candidates[it->second].occurrences.emplace_back(start, end);
        } else {
            c.occurrences.emplace_back(start, end);
            by_key.emplace(key, candidates.size());
            candidates.push_back(std::move(c));
        }
    }
    return candidates;
}

}  // namespace kpforge

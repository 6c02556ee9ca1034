#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

namespace kpforge {

struct Token {
    std::string surface;
    std::size_t offset = 0;  // byte offset into the source text

    bool operator==(const Token&) const = default;
};

/// Splits text on whitespace, then splits every ASCII punctuation character
/// into its own token. Runs of letters, digits and non-ASCII bytes form
/// words. Surfaces are ASCII-lowercased; offsets index the original text.
std::vector<Token> tokenize(std::string_view text);

/// Porter (1980) suffix stripper, original published rule set. Expects a
/// lowercase word; never returns a longer string.
std::string porter_stem(std::string_view word);

bool is_punctuation(std::string_view token);

std::string to_lower(std::string_view s);

/// Tokenizes, stems every token and joins the stems with single spaces.
/// This is the canonical key for phrase identity throughout the toolkit.
std::string stem_key(std::string_view phrase);

std::vector<std::string> stem_tokens(const std::vector<Token>& tokens);

struct Document {
    std::string id;
    std::string title;
    std::string abstract;
    std::vector<Token> tokens;
    std::optional<std::vector<std::string>> pos_tags;
    std::vector<std::string> gold_keyphrases;

    /// Stems of `tokens`, aligned index by index.
    std::vector<std::string> stems;

    /// "title. abstract" (or whichever part is non-empty).
    std::string text() const;
};

/// Builds a tokenized document. Throws kpforge::Error when pos_tags is given
/// with a length different from the token count.
Document make_document(std::string id, std::string title, std::string abstract,
                       std::vector<std::string> gold_keyphrases = {},
                       std::optional<std::vector<std::string>> pos_tags = std::nullopt);

/// Joins the title and abstract the way make_document tokenizes them.
std::string join_title_abstract(std::string_view title, std::string_view abstract);

class StopwordSet {
public:
    StopwordSet() = default;
    explicit StopwordSet(std::unordered_set<std::string> words) : words_(std::move(words)) {}
    StopwordSet(std::initializer_list<std::string> words) : words_(words) {}

    bool contains(std::string_view w) const { return words_.count(std::string(w)) > 0; }
    std::size_t size() const { return words_.size(); }

    /// The shipped SMART English list (570 entries).
    static const StopwordSet& english();
    /// One word per line; blank lines and '#' comments ignored.
    static StopwordSet from_file(const std::string& path);

private:
    std::unordered_set<std::string> words_;
};

struct PhraseCandidate {
    std::vector<std::string> tokens;
    std::vector<std::string> stems;
    /// Half-open [start, end) token spans in the source document.
    std::vector<std::pair<std::size_t, std::size_t>> occurrences;

    std::size_t token_count() const { return tokens.size(); }
    std::size_t first_position() const { return occurrences.front().first; }
    std::string surface() const;
    std::string key() const;
};

struct CandidateConfig {
    std::size_t max_len = 5;
    std::shared_ptr<const StopwordSet> stopwords;  // null means StopwordSet::english()

    const StopwordSet& stoplist() const { return stopwords ? *stopwords : StopwordSet::english(); }
};

/// Noun-phrase candidates in order of first occurrence. With POS tags the
/// chunks are maximal ADJ* NOUN+ spans (PROPN counts as NOUN); without them,
/// maximal runs of non-stopword, non-punctuation tokens. Chunks longer than
/// max_len are dropped and identical stem sequences are merged.
std::vector<PhraseCandidate> extract_candidates(const Document& doc,
                                                const CandidateConfig& config = {});

}  // namespace kpforge

#include <doctest.h>

#include <fstream>
#include <set>
#include <sstream>

#include "generators.hpp"
#include "kpforge/error.hpp"
#include "kpforge/text.hpp"

using namespace kpforge;

namespace {

std::vector<std::string> surfaces(const std::vector<Token>& tokens) {
    std::vector<std::string> out;
    for (const auto& t : tokens) out.push_back(t.surface);
    return out;
}

std::vector<std::string> candidate_keys(const std::vector<PhraseCandidate>& cands) {
    std::vector<std::string> out;
    for (const auto& c : cands) out.push_back(c.surface());
    return out;
}

CandidateConfig with_stopwords(std::initializer_list<std::string> words) {
    CandidateConfig c;
    c.stopwords = std::make_shared<const StopwordSet>(words);
    return c;
}

}  // namespace

TEST_CASE("tokenize: empty text") { CHECK(tokenize("").empty()); }

TEST_CASE("tokenize: punctuation splits and lowercases") {
    const auto t = tokenize("Graph-based KPE.");
    CHECK(surfaces(t) == std::vector<std::string>{"graph", "-", "based", "kpe", "."});
    for (std::size_t i = 1; i < t.size(); ++i) CHECK(t[i].offset > t[i - 1].offset);
    CHECK(t[0].offset == 0);
    CHECK(t[1].offset == 5);
    CHECK(t[4].offset == 15);
}

TEST_CASE("tokenize: repeated whitespace keeps byte offsets") {
    const auto t = tokenize("a  b");
    REQUIRE(t.size() == 2);
    CHECK(t[0] == Token{"a", 0});
    CHECK(t[1] == Token{"b", 3});
}

TEST_CASE("tokenize: surfaces reproduce the lowercased non-space content") {
    SplitMix64 rng(11);
    const std::string alphabet = "abcXYZ09 .,;-()\t\n";
    for (int trial = 0; trial < 200; ++trial) {
        std::string text;
        const int len = gen::between(rng, 0, 40);
        for (int i = 0; i < len; ++i) text.push_back(alphabet[rng.below(alphabet.size())]);
        std::string expected;
        for (char c : text)
            if (!std::isspace(static_cast<unsigned char>(c))) expected.push_back(static_cast<char>(std::tolower(c)));
        std::string joined;
        std::size_t last = 0;
        bool first = true;
        for (const auto& tok : tokenize(text)) {
            if (!first) CHECK(tok.offset > last);
            CHECK(to_lower(text.substr(tok.offset, tok.surface.size())) == tok.surface);
            joined += tok.surface;
            last = tok.offset;
            first = false;
        }
        CHECK(joined == expected);
    }
}

TEST_CASE("stem_key joins token stems") {
    CHECK(stem_key("Neural Networks") == "neural network");
    CHECK(stem_key("keyphrase generation") == "keyphras gener");
    CHECK(stem_key("") == "");
}

TEST_CASE("make_document joins title and abstract") {
    const auto d = make_document("x", "A Title", "Body text");
    CHECK(d.text() == "A Title. Body text");
    CHECK(surfaces(d.tokens) == std::vector<std::string>{"a", "title", ".", "body", "text"});
    CHECK(d.stems.size() == d.tokens.size());
    CHECK(make_document("y", "", "only abstract").text() == "only abstract");
    CHECK(make_document("z", "only title", "").text() == "only title");
}

TEST_CASE("make_document rejects misaligned pos tags") {
    CHECK_THROWS_AS(make_document("x", "a b", "", {}, std::vector<std::string>{"NOUN"}), Error);
    CHECK_NOTHROW(make_document("x", "a b", "", {}, std::vector<std::string>{"NOUN", "NOUN"}));
}

TEST_CASE("english stopword list is the shipped SMART list") {
    const auto& sw = StopwordSet::english();
    CHECK(sw.size() == 570);
    CHECK(sw.contains("the"));
    CHECK(sw.contains("for"));
    CHECK_FALSE(sw.contains("graph"));
}

TEST_CASE("extract_candidates: empty document") {
    CHECK(extract_candidates(make_document("e", "", "")).empty());
}

TEST_CASE("extract_candidates: stopword chunking") {
    const auto d = make_document("d", "", "efficient graph algorithms for sparse matrices");
    const auto c = extract_candidates(d, with_stopwords({"for"}));
    CHECK(candidate_keys(c) == std::vector<std::string>{"efficient graph algorithms", "sparse matrices"});
    CHECK(c[0].occurrences == std::vector<std::pair<std::size_t, std::size_t>>{{0, 3}});
    CHECK(c[1].occurrences == std::vector<std::pair<std::size_t, std::size_t>>{{4, 6}});
}

TEST_CASE("extract_candidates: 'the cat sat on the cat' without tags") {
    // Maximal non-stopword runs are "cat sat" and "cat".
    const auto d = make_document("d", "", "the cat sat on the cat");
    const auto c = extract_candidates(d, with_stopwords({"the", "on"}));
    REQUIRE(c.size() == 2);
    CHECK(c[0].surface() == "cat sat");
    CHECK(c[1].surface() == "cat");
    CHECK(c[1].occurrences.size() == 1);
}

TEST_CASE("extract_candidates: 'the cat sat on the cat' with tags merges both cats") {
    const auto d = make_document("d", "", "the cat sat on the cat", {},
                                 std::vector<std::string>{"DET", "NOUN", "VERB", "ADP", "DET", "NOUN"});
    const auto c = extract_candidates(d, with_stopwords({"the", "on"}));
    REQUIRE(c.size() == 1);
    CHECK(c[0].surface() == "cat");
    CHECK(c[0].occurrences == std::vector<std::pair<std::size_t, std::size_t>>{{1, 2}, {5, 6}});
}

TEST_CASE("extract_candidates: ADJ* NOUN+ pattern") {
    const auto d = make_document("d", "", "deep neural networks learn fast sparse graph models", {},
                                 std::vector<std::string>{"ADJ", "ADJ", "NOUN", "VERB", "ADJ", "ADJ", "NOUN", "NOUN"});
    const auto c = extract_candidates(d, with_stopwords({}));
    CHECK(candidate_keys(c) == std::vector<std::string>{"deep neural networks", "fast sparse graph models"});
}

TEST_CASE("extract_candidates: adjectives without a noun are not candidates") {
    const auto d = make_document("d", "", "very fast", {}, std::vector<std::string>{"ADV", "ADJ"});
    CHECK(extract_candidates(d, with_stopwords({})).empty());
}

TEST_CASE("extract_candidates: merges stem-identical spans") {
    const auto d = make_document("d", "", "neural network, neural networks", {}, std::nullopt);
    const auto c = extract_candidates(d, with_stopwords({}));
    REQUIRE(c.size() == 1);
    CHECK(c[0].surface() == "neural network");
    CHECK(c[0].occurrences.size() == 2);
}

TEST_CASE("extract_candidates: spans above max_len are dropped") {
    const auto d = make_document("d", "", "one two three four five six. seven");
    CandidateConfig cfg = with_stopwords({});
    cfg.max_len = 5;
    CHECK(candidate_keys(extract_candidates(d, cfg)) == std::vector<std::string>{"seven"});
}

TEST_CASE("extract_candidates properties on random documents") {
    SplitMix64 rng(3);
    const std::vector<std::string> words{"the", "of", "graph", "graphs", "model", "a", "neural", "network", ",", "."};
    const auto cfg = with_stopwords({"the", "of", "a"});
    for (int trial = 0; trial < 300; ++trial) {
        std::string text;
        const int n = gen::between(rng, 0, 25);
        for (int i = 0; i < n; ++i) text += words[rng.below(words.size())] + " ";
        const auto d = make_document("r", "", text);
        const auto cands = extract_candidates(d, cfg);

        // Occurrence count before merging: number of maximal usable runs of length <= max_len.
        std::size_t runs = 0;
        for (std::size_t i = 0; i < d.tokens.size();) {
            const auto usable = [&](std::size_t k) {
                return !cfg.stoplist().contains(d.tokens[k].surface) && !is_punctuation(d.tokens[k].surface);
            };
            if (!usable(i)) {
                ++i;
                continue;
            }
            std::size_t j = i;
            while (j < d.tokens.size() && usable(j)) ++j;
            if (j - i <= cfg.max_len) ++runs;
            i = j;
        }

        std::size_t total = 0;
        std::vector<bool> covered(d.tokens.size(), false);
        std::set<std::string> keys;
        for (const auto& c : cands) {
            CHECK(c.token_count() >= 1);
            CHECK(c.tokens.size() == c.stems.size());
            CHECK(keys.insert(c.key()).second);
            for (auto [s, e] : c.occurrences) {
                REQUIRE(e <= d.tokens.size());
                CHECK(e - s == c.token_count());
                for (std::size_t k = s; k < e; ++k) {
                    CHECK_FALSE(cfg.stoplist().contains(d.tokens[k].surface));
                    CHECK_FALSE(covered[k]);
                    covered[k] = true;
                    CHECK(d.stems[k] == c.stems[k - s]);
                }
                ++total;
            }
        }
        CHECK(total == runs);
    }
}
